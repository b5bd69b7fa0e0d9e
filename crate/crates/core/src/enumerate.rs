//! The corpus of canonical equations with a bounded number of operations.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{BufRead, Write};
use std::path::Path;

use thiserror::Error;

use crate::terms::{canonicalize, Equation, ParseError, Signature, Term};

/// Largest supported operation budget.
pub const MAX_OPS_LIMIT: usize = 6;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("operation budget {0} exceeds the limit of {MAX_OPS_LIMIT}")]
    BudgetExceeded(usize),
    #[error("line {line}: {source}")]
    Parse { line: usize, source: ParseError },
    #[error("line {line}: malformed numbering entry: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: equation `{equation}` is not in the corpus")]
    UnknownEquation { line: usize, equation: String },
    #[error("line {line}: ET number {number} assigned twice")]
    DuplicateNumber { line: usize, number: u32 },
    #[error("line {line}: corpus equation assigned two ET numbers")]
    DuplicateEquation { line: usize },
    #[error("corpus file is not in canonical sorted order at line {line}")]
    NotCanonical { line: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug)]
pub struct Corpus {
    equations: Vec<Equation>,
    index_of: HashMap<Equation, usize>,
    et_numbering: BTreeMap<usize, u32>,
}

/// All binary tree shapes with `ops` internal nodes (leaves are `Var(0)`).
fn shapes(ops: usize, memo: &mut Vec<Vec<Term>>) -> Vec<Term> {
    while memo.len() <= ops {
        let k = memo.len();
        let mut out = Vec::new();
        if k == 0 {
            out.push(Term::var(0));
        } else {
            for left in 0..k {
                let right = k - 1 - left;
                for l in memo[left].clone() {
                    for r in memo[right].clone() {
                        out.push(Term::app(l.clone(), r));
                    }
                }
            }
        }
        memo.push(out);
    }
    memo[ops].clone()
}

/// Restricted growth strings of length `len`: every labeling of `len` leaves
/// up to renaming of variables.
fn growth_strings(len: usize) -> Vec<Vec<u8>> {
    fn rec(cur: &mut Vec<u8>, max: u8, len: usize, out: &mut Vec<Vec<u8>>) {
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        let limit = if cur.is_empty() { 0 } else { max + 1 };
        for v in 0..=limit {
            cur.push(v);
            rec(cur, max.max(v), len, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(len), 0, len, &mut out);
    out
}

fn label(shape: &Term, labels: &mut impl Iterator<Item = u8>) -> Term {
    match shape {
        Term::Var(_) => Term::var(labels.next().expect("enough labels")),
        Term::App(l, r) => {
            let l = label(l, labels);
            Term::app(l, label(r, labels))
        }
    }
}

/// Every equation with at most `max_ops` operations, canonical and deduplicated.
///
/// Laws whose two sides are the same term are all equivalent to `x = x`, so
/// only that one is kept.
pub fn enumerate_corpus(max_ops: usize) -> Result<Corpus, CorpusError> {
    if max_ops > MAX_OPS_LIMIT {
        return Err(CorpusError::BudgetExceeded(max_ops));
    }
    let mut memo = Vec::new();
    let mut seen: HashSet<Equation> = HashSet::new();
    for a in 0..=max_ops {
        for b in a..=max_ops - a {
            let left_shapes = shapes(a, &mut memo);
            let right_shapes = shapes(b, &mut memo);
            let labelings = growth_strings(a + b + 2);
            for l in &left_shapes {
                for r in &right_shapes {
                    for lab in &labelings {
                        let mut it = lab.iter().copied();
                        let lt = label(l, &mut it);
                        let rt = label(r, &mut it);
                        if a > 0 && lt == rt {
                            continue;
                        }
                        seen.insert(canonicalize(&lt, &rt));
                    }
                }
            }
        }
    }
    let mut equations: Vec<Equation> = seen.into_iter().collect();
    equations.sort();
    Ok(Corpus::from_sorted(equations))
}

impl Corpus {
    fn from_sorted(equations: Vec<Equation>) -> Corpus {
        let index_of = equations
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, e)| (e, i))
            .collect();
        Corpus {
            equations,
            index_of,
            et_numbering: BTreeMap::new(),
        }
    }

    /// Builds a corpus from arbitrary equations (deduplicated and sorted).
    pub fn from_equations(eqs: impl IntoIterator<Item = Equation>) -> Corpus {
        let mut equations: Vec<Equation> = eqs
            .into_iter()
            .collect::<HashSet<_>>()
            .into_iter()
            .collect();
        equations.sort();
        Corpus::from_sorted(equations)
    }

    pub fn len(&self) -> usize {
        self.equations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.equations.is_empty()
    }

    pub fn equations(&self) -> &[Equation] {
        &self.equations
    }

    pub fn get(&self, index: usize) -> Option<&Equation> {
        self.equations.get(index)
    }

    pub fn index_of(&self, e: &Equation) -> Option<usize> {
        self.index_of.get(e).copied()
    }

    /// Corpus index of the conjugate of equation `index`.
    pub fn conjugate_index(&self, index: usize) -> Option<usize> {
        self.index_of(&self.equations[index].conjugate())
    }

    pub fn self_conjugate_count(&self) -> usize {
        self.equations
            .iter()
            .filter(|e| e.is_self_conjugate())
            .count()
    }

    pub fn signature_histogram(&self) -> BTreeMap<Signature, usize> {
        let mut h = BTreeMap::new();
        for e in &self.equations {
            *h.entry(e.signature()).or_insert(0) += 1;
        }
        h
    }

    pub fn et_number(&self, index: usize) -> Option<u32> {
        self.et_numbering.get(&index).copied()
    }

    pub fn index_of_et(&self, number: u32) -> Option<usize> {
        self.et_numbering
            .iter()
            .find(|(_, &n)| n == number)
            .map(|(&i, _)| i)
    }

    pub fn et_numbering(&self) -> &BTreeMap<usize, u32> {
        &self.et_numbering
    }

    /// Annotates the corpus with ET project numbers read from `reader`.
    ///
    /// Each non-comment line is `<equation> <sep> <number>` where `<sep>` is
    /// `↔`, `<->` or a tab.
    pub fn load_et_numbering_from(mut self, reader: impl BufRead) -> Result<Corpus, CorpusError> {
        let mut by_number: HashMap<u32, usize> = HashMap::new();
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (eq_text, num_text) = ["↔", "<->", "\t"]
                .iter()
                .find_map(|sep| trimmed.rsplit_once(sep))
                .ok_or_else(|| CorpusError::Malformed {
                    line: line_no,
                    reason: "missing separator".into(),
                })?;
            let number: u32 = num_text
                .trim()
                .trim_start_matches("Eqn")
                .parse()
                .map_err(|_| CorpusError::Malformed {
                    line: line_no,
                    reason: format!("bad number {:?}", num_text.trim()),
                })?;
            let eq: Equation = eq_text
                .trim()
                .parse()
                .map_err(|source| CorpusError::Parse {
                    line: line_no,
                    source,
                })?;
            let index = self
                .index_of(&eq)
                .ok_or_else(|| CorpusError::UnknownEquation {
                    line: line_no,
                    equation: eq.to_string(),
                })?;
            if by_number.insert(number, index).is_some() {
                return Err(CorpusError::DuplicateNumber {
                    line: line_no,
                    number,
                });
            }
            if self.et_numbering.insert(index, number).is_some() {
                return Err(CorpusError::DuplicateEquation { line: line_no });
            }
        }
        Ok(self)
    }

    pub fn load_et_numbering(self, path: &Path) -> Result<Corpus, CorpusError> {
        let file = std::fs::File::open(path)?;
        self.load_et_numbering_from(std::io::BufReader::new(file))
    }

    /// Writes `corpus.txt`: optional `#` header lines, then one canonical
    /// equation per line; the n-th equation line is corpus index n.
    pub fn write(&self, mut out: impl Write, header: &str) -> std::io::Result<()> {
        for line in header.lines() {
            writeln!(out, "# {line}")?;
        }
        for e in &self.equations {
            writeln!(out, "{e}")?;
        }
        Ok(())
    }

    /// Reads a corpus file, requiring canonical sorted content so that
    /// indices survive the round trip.
    pub fn read(reader: impl BufRead) -> Result<Corpus, CorpusError> {
        let mut equations = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let e: Equation = t.parse().map_err(|source| CorpusError::Parse {
                line: i + 1,
                source,
            })?;
            if equations.last().is_some_and(|prev: &Equation| prev >= &e) {
                return Err(CorpusError::NotCanonical { line: i + 1 });
            }
            equations.push(e);
        }
        Ok(Corpus::from_sorted(equations))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budget_zero_and_one() {
        let c0 = enumerate_corpus(0).unwrap();
        let texts: Vec<String> = c0.equations().iter().map(ToString::to_string).collect();
        assert_eq!(texts, vec!["x = x", "x = y"]);
        assert_eq!(c0.self_conjugate_count(), 2);

        let c1 = enumerate_corpus(1).unwrap();
        assert_eq!(c1.len(), 7);
        let ones: Vec<String> = c1
            .equations()
            .iter()
            .filter(|e| e.signature() == Signature(0, 1))
            .map(ToString::to_string)
            .collect();
        assert_eq!(ones.len(), 5);
        for law in [
            "x = x * x",
            "x = x * y",
            "x = y * x",
            "x = y * y",
            "x = y * z",
        ] {
            assert!(ones.contains(&law.to_string()), "{law}");
        }
    }

    #[test]
    fn self_conjugates_of_budget_one_by_brute_force() {
        let c1 = enumerate_corpus(1).unwrap();
        // Mirror each law by hand and compare canonical forms.
        let mut count = 0;
        for e in c1.equations() {
            let mirrored = canonicalize(&e.lhs().mirror(), &e.rhs().mirror());
            if &mirrored == e {
                count += 1;
            }
        }
        // x=x, x=y, x=x*x, x=y*y, x=y*z are fixed; x=x*y and x=y*x swap.
        assert_eq!(count, 5);
        assert_eq!(c1.self_conjugate_count(), 5);
    }

    #[test]
    fn rejects_oversized_budget() {
        assert!(matches!(
            enumerate_corpus(7),
            Err(CorpusError::BudgetExceeded(7))
        ));
    }

    #[test]
    fn et_numbering_loads_and_reports_errors() {
        let c = enumerate_corpus(1).unwrap();
        let c = c
            .load_et_numbering_from("# comment\nx = x ↔ 0\nx = y <-> 1\n".as_bytes())
            .unwrap();
        assert_eq!(c.et_number(0), Some(0));
        assert_eq!(c.index_of_et(1), Some(1));

        let empty = enumerate_corpus(0)
            .unwrap()
            .load_et_numbering_from("".as_bytes())
            .unwrap();
        assert!(empty.et_numbering().is_empty());

        let err = enumerate_corpus(1)
            .unwrap()
            .load_et_numbering_from("x = x ↔ 0\nx = (y ↔ 3\n".as_bytes());
        assert!(matches!(err, Err(CorpusError::Parse { line: 2, .. })));
        let err = enumerate_corpus(0)
            .unwrap()
            .load_et_numbering_from("x = x*x ↔ 3\n".as_bytes());
        assert!(matches!(
            err,
            Err(CorpusError::UnknownEquation { line: 1, .. })
        ));
        let err = enumerate_corpus(0)
            .unwrap()
            .load_et_numbering_from("x = x ↔ 3\nx = y ↔ 3\n".as_bytes());
        assert!(matches!(
            err,
            Err(CorpusError::DuplicateNumber { line: 2, number: 3 })
        ));
    }

    #[test]
    fn corpus_file_round_trip() {
        let c = enumerate_corpus(2).unwrap();
        let mut buf = Vec::new();
        c.write(&mut buf, "test header").unwrap();
        let back = Corpus::read(buf.as_slice()).unwrap();
        assert_eq!(back.equations(), c.equations());
    }
}
