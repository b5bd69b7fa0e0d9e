//! Dense square bit matrices for relations on a few thousand vertices.

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitMatrix {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl BitMatrix {
    pub fn new(n: usize) -> Self {
        let words = n.div_ceil(64);
        BitMatrix {
            n,
            words,
            bits: vec![0; n * words],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::new(n);
        for i in 0..n {
            m.set(i, i);
        }
        m
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.words + j / 64] >> (j % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize) {
        self.bits[i * self.words + j / 64] |= 1 << (j % 64);
    }

    #[inline]
    pub fn clear(&mut self, i: usize, j: usize) {
        self.bits[i * self.words + j / 64] &= !(1 << (j % 64));
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [u64] {
        &mut self.bits[i * self.words..(i + 1) * self.words]
    }

    /// `row(dst) |= row(src)`.
    pub fn or_row_into(&mut self, src: usize, dst: usize) {
        if src == dst {
            return;
        }
        let w = self.words;
        let (s, d) = (src * w, dst * w);
        for k in 0..w {
            let v = self.bits[s + k];
            self.bits[d + k] |= v;
        }
    }

    pub fn row_count(&self, i: usize) -> usize {
        self.row(i).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Column indices set in row `i`, ascending.
    pub fn ones(&self, i: usize) -> Ones<'_> {
        Ones {
            row: self.row(i),
            word: 0,
            cur: self.row(i).first().copied().unwrap_or(0),
        }
    }

    /// First set column `>= from` in row `i`.
    pub fn next_one(&self, i: usize, from: usize) -> Option<usize> {
        if from >= self.n {
            return None;
        }
        let row = self.row(i);
        let mut w = from / 64;
        let mut cur = row[w] & (!0u64 << (from % 64));
        loop {
            if cur != 0 {
                return Some(w * 64 + cur.trailing_zeros() as usize);
            }
            w += 1;
            if w >= row.len() {
                return None;
            }
            cur = row[w];
        }
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut t = BitMatrix::new(self.n);
        for i in 0..self.n {
            for j in self.ones(i) {
                t.set(j, i);
            }
        }
        t
    }

    /// Whether rows `a` and `b` share a set column.
    pub fn rows_intersect(a: &[u64], b: &[u64]) -> bool {
        a.iter().zip(b).any(|(x, y)| x & y != 0)
    }

    /// Whether `row(i) ⊆ row(j)`.
    pub fn row_subset(&self, i: usize, j: usize) -> bool {
        self.row(i)
            .iter()
            .zip(self.row(j))
            .all(|(a, b)| a & !b == 0)
    }
}

pub struct Ones<'a> {
    row: &'a [u64],
    word: usize,
    cur: u64,
}

impl Iterator for Ones<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        loop {
            if self.cur != 0 {
                let bit = self.cur.trailing_zeros() as usize;
                self.cur &= self.cur - 1;
                return Some(self.word * 64 + bit);
            }
            self.word += 1;
            if self.word >= self.row.len() {
                return None;
            }
            self.cur = self.row[self.word];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_get_iterate() {
        let mut m = BitMatrix::new(130);
        for j in [0, 63, 64, 127, 129] {
            m.set(5, j);
        }
        assert_eq!(m.ones(5).collect::<Vec<_>>(), vec![0, 63, 64, 127, 129]);
        assert_eq!(m.next_one(5, 1), Some(63));
        assert_eq!(m.next_one(5, 65), Some(127));
        assert_eq!(m.next_one(5, 130), None);
        assert_eq!(m.row_count(5), 5);
        m.clear(5, 63);
        assert!(!m.get(5, 63));
        assert!(m.transpose().get(129, 5));
        assert_eq!(BitMatrix::new(0).ones(0).count(), 0);
    }
}
