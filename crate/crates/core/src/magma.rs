//! Finite magmas: multiplication tables over `{0, ..., N-1}`.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rand::Rng;
use thiserror::Error;

use crate::par::Execution;
use crate::rng::{substream, Purpose};
use crate::terms::Term;

/// Largest supported carrier size; element ids fit in a nibble.
pub const MAX_SIZE: usize = 16;

#[derive(Debug, Error)]
pub enum MagmaError {
    #[error("invalid magma size {0} (must be 1..={MAX_SIZE})")]
    BadSize(usize),
    #[error("table has {got} entries, expected {expected}")]
    BadTableLength { got: usize, expected: usize },
    #[error("table entry {value} out of range for size {size}")]
    EntryOutOfRange { value: usize, size: usize },
    #[error("sample size must be positive")]
    EmptySample,
    #[error("symmetric samples need an even count, got {0}")]
    OddSymmetric(usize),
    #[error("variable {0} has no binding")]
    MissingBinding(u8),
    #[error("assignment value {value} out of range for size {size}")]
    AssignmentOutOfRange { value: u8, size: usize },
    #[error("line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A finite magma stored as a row-major table: `table[a * N + b] = a ⋄ b`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Magma {
    size: usize,
    table: Vec<u8>,
}

impl Magma {
    pub fn new(size: usize, table: Vec<u8>) -> Result<Magma, MagmaError> {
        if size == 0 || size > MAX_SIZE {
            return Err(MagmaError::BadSize(size));
        }
        if table.len() != size * size {
            return Err(MagmaError::BadTableLength {
                got: table.len(),
                expected: size * size,
            });
        }
        if let Some(&v) = table.iter().find(|&&v| v as usize >= size) {
            return Err(MagmaError::EntryOutOfRange {
                value: v as usize,
                size,
            });
        }
        Ok(Magma { size, table })
    }

    /// Builds from a function `(a, b) -> a ⋄ b`.
    pub fn from_fn(size: usize, f: impl Fn(u8, u8) -> u8) -> Result<Magma, MagmaError> {
        let mut table = Vec::with_capacity(size * size);
        for a in 0..size as u8 {
            for b in 0..size as u8 {
                table.push(f(a, b));
            }
        }
        Magma::new(size, table)
    }

    pub fn constant(size: usize, value: u8) -> Result<Magma, MagmaError> {
        Magma::from_fn(size, |_, _| value)
    }

    /// `a ⋄ b = a`.
    pub fn left_projection(size: usize) -> Result<Magma, MagmaError> {
        Magma::from_fn(size, |a, _| a)
    }

    /// `a ⋄ b = b`.
    pub fn right_projection(size: usize) -> Result<Magma, MagmaError> {
        Magma::from_fn(size, |_, b| b)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn table(&self) -> &[u8] {
        &self.table
    }

    #[inline]
    pub fn op(&self, a: u8, b: u8) -> u8 {
        self.table[a as usize * self.size + b as usize]
    }

    /// The opposite magma, `a ⋄op b = b ⋄ a` (the transposed table).
    pub fn opposite(&self) -> Magma {
        let n = self.size;
        let mut table = vec![0u8; n * n];
        for a in 0..n {
            for b in 0..n {
                table[b * n + a] = self.table[a * n + b];
            }
        }
        Magma { size: n, table }
    }

    pub fn is_commutative(&self) -> bool {
        *self == self.opposite()
    }

    /// Evaluates `t` under `assignment[var]`.
    pub fn eval_term(&self, t: &Term, assignment: &[u8]) -> Result<u8, MagmaError> {
        match t {
            Term::Var(i) => {
                let v = *assignment
                    .get(*i as usize)
                    .ok_or(MagmaError::MissingBinding(*i))?;
                if v as usize >= self.size {
                    return Err(MagmaError::AssignmentOutOfRange {
                        value: v,
                        size: self.size,
                    });
                }
                Ok(v)
            }
            Term::App(l, r) => Ok(self.op(
                self.eval_term(l, assignment)?,
                self.eval_term(r, assignment)?,
            )),
        }
    }

    /// Draws a uniformly random table from `rng`.
    pub fn random(size: usize, rng: &mut impl Rng) -> Result<Magma, MagmaError> {
        if size == 0 || size > MAX_SIZE {
            return Err(MagmaError::BadSize(size));
        }
        let table = (0..size * size)
            .map(|_| rng.gen_range(0..size as u8))
            .collect();
        Ok(Magma { size, table })
    }

    fn write_block(&self, out: &mut String) {
        let _ = writeln!(out, "{}", self.size);
        for row in self.table.chunks(self.size) {
            let cells: Vec<String> = row.iter().map(ToString::to_string).collect();
            let _ = writeln!(out, "{}", cells.join(" "));
        }
    }
}

/// An ordered list of same-size magmas plus the parameters that drew it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MagmaSample {
    pub magmas: Vec<Magma>,
    pub seed: u64,
    pub symmetric: bool,
}

/// Samples `n` magmas of size `size`.
///
/// Magma `i` (or pair `i` when `symmetric`) is drawn from its own stream,
/// so the sample is identical for any thread count. A symmetric sample holds
/// `n / 2` independent draws, each followed by its opposite.
pub fn sample_magmas(
    n: usize,
    size: usize,
    seed: u64,
    symmetric: bool,
) -> Result<MagmaSample, MagmaError> {
    sample_magmas_with(n, size, seed, symmetric, Execution::Parallel)
}

pub fn sample_magmas_with(
    n: usize,
    size: usize,
    seed: u64,
    symmetric: bool,
    exec: Execution,
) -> Result<MagmaSample, MagmaError> {
    if n == 0 {
        return Err(MagmaError::EmptySample);
    }
    if size == 0 || size > MAX_SIZE {
        return Err(MagmaError::BadSize(size));
    }
    if symmetric && n % 2 == 1 {
        return Err(MagmaError::OddSymmetric(n));
    }
    let draws = if symmetric { n / 2 } else { n };
    let drawn = exec.map(draws, |i| {
        let mut rng = substream(seed, Purpose::Magma, i as u64);
        Magma::random(size, &mut rng).expect("size validated")
    });
    let magmas = if symmetric {
        drawn
            .into_iter()
            .flat_map(|m| {
                let op = m.opposite();
                [m, op]
            })
            .collect()
    } else {
        drawn
    };
    Ok(MagmaSample {
        magmas,
        seed,
        symmetric,
    })
}

impl MagmaSample {
    pub fn len(&self) -> usize {
        self.magmas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.magmas.is_empty()
    }

    pub fn size(&self) -> usize {
        self.magmas.first().map(Magma::size).unwrap_or(0)
    }

    /// Whether every even position is followed by its opposite.
    pub fn is_opposite_closed(&self) -> bool {
        self.magmas.len().is_multiple_of(2)
            && self.magmas.chunks(2).all(|p| p[1] == p[0].opposite())
    }

    /// Column permutation induced by conjugation on an opposite-closed sample.
    pub fn opposite_permutation(&self) -> Option<Vec<usize>> {
        if !self.is_opposite_closed() {
            return None;
        }
        Some((0..self.magmas.len()).map(|i| i ^ 1).collect())
    }

    /// Writes the sample file: a header comment, then each magma as a line
    /// `N` followed by `N` rows, blocks separated by blank lines.
    pub fn write(&self, mut out: impl Write, extra_header: &str) -> std::io::Result<()> {
        writeln!(
            out,
            "# magma sample n={} N={} seed={} symmetric={}",
            self.magmas.len(),
            self.size(),
            self.seed,
            self.symmetric
        )?;
        for line in extra_header.lines() {
            writeln!(out, "# {line}")?;
        }
        let mut buf = String::new();
        for (i, m) in self.magmas.iter().enumerate() {
            if i > 0 {
                buf.push('\n');
            }
            m.write_block(&mut buf);
        }
        out.write_all(buf.as_bytes())
    }

    pub fn read(reader: impl BufRead) -> Result<MagmaSample, MagmaError> {
        let mut seed = 0;
        let mut symmetric = false;
        let mut magmas = Vec::new();
        let mut pending: Option<(usize, Vec<u8>, usize)> = None;
        let fmt_err = |line: usize, reason: String| MagmaError::Format { line, reason };
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line?;
            let t = line.trim();
            if let Some(comment) = t.strip_prefix('#') {
                for field in comment.split_whitespace() {
                    if let Some(v) = field.strip_prefix("seed=") {
                        seed = v
                            .parse()
                            .map_err(|_| fmt_err(line_no, format!("bad seed {v:?}")))?;
                    } else if let Some(v) = field.strip_prefix("symmetric=") {
                        symmetric = v == "true";
                    }
                }
                continue;
            }
            if t.is_empty() {
                continue;
            }
            let nums: Vec<usize> = t
                .split_whitespace()
                .map(|s| {
                    s.parse::<usize>()
                        .map_err(|_| fmt_err(line_no, format!("bad integer {s:?}")))
                })
                .collect::<Result<_, _>>()?;
            match pending.take() {
                None => {
                    if nums.len() != 1 {
                        return Err(fmt_err(line_no, "expected magma size line".into()));
                    }
                    let size = nums[0];
                    if size == 0 || size > MAX_SIZE {
                        return Err(MagmaError::BadSize(size));
                    }
                    pending = Some((size, Vec::with_capacity(size * size), 0));
                }
                Some((size, mut table, rows)) => {
                    if nums.len() != size {
                        return Err(fmt_err(
                            line_no,
                            format!("expected {size} entries, got {}", nums.len()),
                        ));
                    }
                    for v in nums {
                        if v >= size {
                            return Err(MagmaError::EntryOutOfRange { value: v, size });
                        }
                        table.push(v as u8);
                    }
                    if rows + 1 == size {
                        magmas.push(Magma::new(size, table)?);
                    } else {
                        pending = Some((size, table, rows + 1));
                    }
                }
            }
        }
        if pending.is_some() {
            return Err(fmt_err(0, "truncated magma table".into()));
        }
        if magmas.is_empty() {
            return Err(MagmaError::EmptySample);
        }
        let size = magmas[0].size();
        if let Some(m) = magmas.iter().find(|m| m.size() != size) {
            return Err(fmt_err(
                0,
                format!("mixed magma sizes {size} and {}", m.size()),
            ));
        }
        Ok(MagmaSample {
            magmas,
            seed,
            symmetric,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terms::parse_term;

    #[test]
    fn size_one_sample_is_the_trivial_magma() {
        let s = sample_magmas(2, 1, 99, false).unwrap();
        assert_eq!(s.magmas, vec![Magma::constant(1, 0).unwrap(); 2]);
    }

    #[test]
    fn entries_in_range_and_deterministic() {
        let a = sample_magmas(1000, 8, 5, false).unwrap();
        assert_eq!(a.len(), 1000);
        assert!(a.magmas.iter().all(|m| m.table().iter().all(|&v| v < 8)));
        let b = sample_magmas_with(1000, 8, 5, false, Execution::Sequential).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_magmas(1000, 8, 6, false).unwrap());
    }

    #[test]
    fn symmetric_sample_pairs_opposites() {
        let s = sample_magmas(10, 4, 3, true).unwrap();
        for i in 0..5 {
            assert_eq!(s.magmas[2 * i + 1], s.magmas[2 * i].opposite());
        }
        assert!(s.is_opposite_closed());
        assert!(matches!(
            sample_magmas(3, 4, 3, true),
            Err(MagmaError::OddSymmetric(3))
        ));
    }

    #[test]
    fn invalid_parameters() {
        assert!(matches!(
            sample_magmas(0, 4, 0, false),
            Err(MagmaError::EmptySample)
        ));
        assert!(matches!(
            sample_magmas(1, 17, 0, false),
            Err(MagmaError::BadSize(17))
        ));
        assert!(matches!(
            sample_magmas(1, 0, 0, false),
            Err(MagmaError::BadSize(0))
        ));
        assert!(Magma::new(2, vec![0, 1, 2, 0]).is_err());
    }

    #[test]
    fn evaluation_examples() {
        let zero = Magma::constant(4, 0).unwrap();
        assert_eq!(
            zero.eval_term(&parse_term("x*(y*z)").unwrap(), &[3, 2, 1])
                .unwrap(),
            0
        );
        // (x*y)*z with a*b=a: (1*0)*0 = 1*0 = 1.
        let left = Magma::left_projection(2).unwrap();
        assert_eq!(
            left.eval_term(&parse_term("(x*y)*z").unwrap(), &[1, 0, 0])
                .unwrap(),
            1
        );
        let big = Magma::constant(4, 0).unwrap();
        assert_eq!(big.eval_term(&Term::var(0), &[3]).unwrap(), 3);
        assert!(matches!(
            big.eval_term(&parse_term("x*y").unwrap(), &[1]),
            Err(MagmaError::MissingBinding(1))
        ));
    }

    #[test]
    fn opposite_examples() {
        let c = Magma::constant(3, 2).unwrap();
        assert_eq!(c.opposite(), c);
        assert_eq!(
            Magma::left_projection(3).unwrap().opposite(),
            Magma::right_projection(3).unwrap()
        );
        let comm = Magma::from_fn(4, |a, b| (a + b) % 4).unwrap();
        assert_eq!(comm.opposite(), comm);
        let m = &sample_magmas(1, 5, 1, false).unwrap().magmas[0];
        assert_eq!(m.opposite().opposite(), *m);
    }

    #[test]
    fn sample_file_round_trip() {
        let s = sample_magmas(6, 3, 42, true).unwrap();
        let mut buf = Vec::new();
        s.write(&mut buf, "").unwrap();
        assert_eq!(MagmaSample::read(buf.as_slice()).unwrap(), s);
        assert!(MagmaSample::read("2\n0 1\n".as_bytes()).is_err());
    }
}
