//! Stone pairings and the equations × magmas feature matrix.
//!
//! The Stone pairing of a law with `k` variables and a magma of size `N` is
//! the fraction of the `N^k` assignments that satisfy the law. Exact pairings
//! are counted by a compiled evaluator: both sides are flattened once into a
//! post-order instruction list with shared subterms merged, and each
//! instruction is scheduled at the loop level of the deepest variable it
//! reads, so an application only re-executes when one of its inputs changes.

use std::collections::HashMap;
use std::io::{Read, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::enumerate::Corpus;
use crate::magma::{Magma, MagmaSample};
use crate::par::Execution;
use crate::rng::{substream, Purpose};
use crate::stats::pairwise_sum;
use crate::terms::{Equation, Term};

/// Default tuple budget for exact evaluation (`N^k ≤ 2^22`).
pub const DEFAULT_EXACT_BUDGET: u64 = 1 << 22;
/// Default Monte Carlo sample count per pairing.
pub const DEFAULT_MC_SAMPLES: u32 = 1 << 16;
/// Default number of histogram bins for spectrum export.
pub const DEFAULT_BINS: usize = 256;

const MATRIX_MAGIC: &[u8; 8] = b"STONEFM1";
const FRACTION_MAGIC: &[u8; 8] = b"STONEFR1";

#[derive(Debug, Error)]
pub enum StoneError {
    #[error("{tuples} tuples exceed the exact budget of {budget}; use Monte Carlo")]
    TupleBudgetExceeded { tuples: u128, budget: u64 },
    #[error("equation index {0} out of range")]
    BadIndex(usize),
    #[error("empty corpus or sample")]
    Empty,
    #[error("Monte Carlo needs at least one sample")]
    NoSamples,
    #[error("too many slots ({0}) in compiled equation")]
    TooLarge(usize),
    #[error("malformed matrix file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A pairing as an exact fraction of satisfying tuples (or hits over samples).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pairing {
    pub numerator: u64,
    pub denominator: u64,
}

impl Pairing {
    pub fn value(&self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }

    /// Lowest terms.
    pub fn reduced(&self) -> (u64, u64) {
        fn gcd(a: u64, b: u64) -> u64 {
            if b == 0 {
                a
            } else {
                gcd(b, a % b)
            }
        }
        let g = gcd(self.numerator, self.denominator).max(1);
        (self.numerator / g, self.denominator / g)
    }
}

/// An equation flattened for repeated evaluation.
#[derive(Clone, Debug)]
pub struct CompiledEquation {
    num_vars: usize,
    slots: usize,
    /// `(left slot, right slot, output slot)`, grouped by level.
    instrs: Vec<[u8; 3]>,
    /// `level_end[d]` is one past the last instruction of level `d`.
    level_end: Vec<usize>,
    lhs: u8,
    rhs: u8,
}

impl CompiledEquation {
    pub fn new(lhs: &Term, rhs: &Term) -> Result<CompiledEquation, StoneError> {
        let num_vars = lhs.max_var().max(rhs.max_var()) as usize + 1;
        let mut memo: HashMap<&Term, (u8, usize)> = HashMap::new();
        let mut staged: Vec<([u8; 3], usize)> = Vec::new();

        fn emit<'t>(
            t: &'t Term,
            num_vars: usize,
            memo: &mut HashMap<&'t Term, (u8, usize)>,
            staged: &mut Vec<([u8; 3], usize)>,
        ) -> Result<(u8, usize), StoneError> {
            match t {
                Term::Var(i) => Ok((*i, *i as usize)),
                Term::App(l, r) => {
                    if let Some(&hit) = memo.get(t) {
                        return Ok(hit);
                    }
                    let (ls, ll) = emit(l, num_vars, memo, staged)?;
                    let (rs, rl) = emit(r, num_vars, memo, staged)?;
                    let slot = num_vars + staged.len();
                    if slot > u8::MAX as usize {
                        return Err(StoneError::TooLarge(slot));
                    }
                    let level = ll.max(rl);
                    staged.push(([ls, rs, slot as u8], level));
                    memo.insert(t, (slot as u8, level));
                    Ok((slot as u8, level))
                }
            }
        }

        let (lhs_slot, _) = emit(lhs, num_vars, &mut memo, &mut staged)?;
        let (rhs_slot, _) = emit(rhs, num_vars, &mut memo, &mut staged)?;
        // Stable: children keep preceding parents within a level.
        staged.sort_by_key(|&(_, level)| level);
        let mut level_end = vec![0; num_vars];
        for (d, end) in level_end.iter_mut().enumerate() {
            *end = staged.iter().take_while(|(_, level)| *level <= d).count();
        }
        Ok(CompiledEquation {
            num_vars,
            slots: num_vars + staged.len(),
            instrs: staged.into_iter().map(|(i, _)| i).collect(),
            level_end,
            lhs: lhs_slot,
            rhs: rhs_slot,
        })
    }

    pub fn from_equation(e: &Equation) -> Result<CompiledEquation, StoneError> {
        CompiledEquation::new(e.lhs(), e.rhs())
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    fn level_instrs(&self, level: usize) -> &[[u8; 3]] {
        let start = if level == 0 {
            0
        } else {
            self.level_end[level - 1]
        };
        &self.instrs[start..self.level_end[level]]
    }

    #[inline]
    fn run(instrs: &[[u8; 3]], table: &[u8], stride: usize, slots: &mut [u8]) {
        for ins in instrs {
            slots[ins[2] as usize] =
                table[slots[ins[0] as usize] as usize * stride + slots[ins[1] as usize] as usize];
        }
    }

    fn count_level(&self, m: &Magma, level: usize, slots: &mut [u8]) -> u64 {
        let n = m.size();
        let table = m.table();
        let instrs = self.level_instrs(level);
        let mut count = 0;
        if level + 1 == self.num_vars {
            let (l, r) = (self.lhs as usize, self.rhs as usize);
            for v in 0..n as u8 {
                slots[level] = v;
                Self::run(instrs, table, n, slots);
                count += (slots[l] == slots[r]) as u64;
            }
        } else {
            for v in 0..n as u8 {
                slots[level] = v;
                Self::run(instrs, table, n, slots);
                count += self.count_level(m, level + 1, slots);
            }
        }
        count
    }

    /// Number of satisfying assignments out of `N^num_vars`.
    pub fn count_satisfying(&self, m: &Magma) -> u64 {
        let mut slots = vec![0u8; self.slots];
        self.count_level(m, 0, &mut slots)
    }

    fn holds_level(&self, m: &Magma, level: usize, slots: &mut [u8]) -> bool {
        let n = m.size();
        let instrs = self.level_instrs(level);
        let last = level + 1 == self.num_vars;
        for v in 0..n as u8 {
            slots[level] = v;
            Self::run(instrs, m.table(), n, slots);
            let ok = if last {
                slots[self.lhs as usize] == slots[self.rhs as usize]
            } else {
                self.holds_level(m, level + 1, slots)
            };
            if !ok {
                return false;
            }
        }
        true
    }

    /// Whether `m` satisfies the law for every assignment.
    pub fn holds_in(&self, m: &Magma) -> bool {
        let mut slots = vec![0u8; self.slots];
        self.holds_level(m, 0, &mut slots)
    }

    /// Evaluates both sides under one assignment.
    pub fn eval_sides(&self, m: &Magma, assignment: &[u8], slots: &mut Vec<u8>) -> (u8, u8) {
        slots.clear();
        slots.resize(self.slots, 0);
        slots[..self.num_vars].copy_from_slice(&assignment[..self.num_vars]);
        Self::run(&self.instrs, m.table(), m.size(), slots);
        (slots[self.lhs as usize], slots[self.rhs as usize])
    }

    fn tuples(&self, m: &Magma) -> u128 {
        (m.size() as u128).pow(self.num_vars as u32)
    }

    pub fn pairing_exact(&self, m: &Magma, budget: u64) -> Result<Pairing, StoneError> {
        let tuples = self.tuples(m);
        if tuples > budget as u128 {
            return Err(StoneError::TupleBudgetExceeded { tuples, budget });
        }
        Ok(Pairing {
            numerator: self.count_satisfying(m),
            denominator: tuples as u64,
        })
    }

    /// Monte Carlo estimate from `samples` uniform assignments drawn from `rng`.
    pub fn pairing_mc(
        &self,
        m: &Magma,
        samples: u32,
        rng: &mut impl Rng,
    ) -> Result<Pairing, StoneError> {
        if samples == 0 {
            return Err(StoneError::NoSamples);
        }
        let n = m.size() as u8;
        let mut slots = vec![0u8; self.slots];
        let mut hits = 0u64;
        for _ in 0..samples {
            for s in slots.iter_mut().take(self.num_vars) {
                *s = rng.gen_range(0..n);
            }
            Self::run(&self.instrs, m.table(), m.size(), &mut slots);
            hits += (slots[self.lhs as usize] == slots[self.rhs as usize]) as u64;
        }
        Ok(Pairing {
            numerator: hits,
            denominator: samples as u64,
        })
    }
}

/// Exact Stone pairing `#{satisfying tuples} / N^k`.
pub fn stone_pairing_exact(e: &Equation, m: &Magma, budget: u64) -> Result<Pairing, StoneError> {
    CompiledEquation::from_equation(e)?.pairing_exact(m, budget)
}

/// Monte Carlo Stone pairing with its own seeded stream.
pub fn stone_pairing_mc(
    e: &Equation,
    m: &Magma,
    samples: u32,
    seed: u64,
) -> Result<Pairing, StoneError> {
    let mut rng = substream(seed, Purpose::MonteCarlo, 0);
    CompiledEquation::from_equation(e)?.pairing_mc(m, samples, &mut rng)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PairingMode {
    /// Exact when within budget, Monte Carlo otherwise.
    #[default]
    Auto,
    /// Exact only; over-budget rows are an error.
    Exact,
    MonteCarlo,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct StoneConfig {
    pub mode: PairingMode,
    pub exact_budget: u64,
    pub mc_samples: u32,
    pub mc_seed: u64,
}

impl Default for StoneConfig {
    fn default() -> Self {
        StoneConfig {
            mode: PairingMode::Auto,
            exact_budget: DEFAULT_EXACT_BUDGET,
            mc_samples: DEFAULT_MC_SAMPLES,
            mc_seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowMode {
    Exact,
    MonteCarlo,
}

/// Exact numerators behind a feature matrix; every row has one denominator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fractions {
    pub modes: Vec<RowMode>,
    pub denominators: Vec<u32>,
    pub numerators: Vec<u32>,
}

/// A reduced fraction and its multiplicity.
pub type FractionCount = ((u64, u64), u64);

/// The matrix `R = (p[k][l])` of Stone pairings, equations × magmas.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    fractions: Option<Fractions>,
}

pub fn build_feature_matrix(
    corpus: &Corpus,
    sample: &MagmaSample,
    config: &StoneConfig,
) -> Result<FeatureMatrix, StoneError> {
    build_feature_matrix_with(
        corpus.equations(),
        &sample.magmas,
        config,
        Execution::Parallel,
    )
}

/// Fills the matrix row by row; rows are independent and collected in order.
///
/// Monte Carlo cell `(k, l)` draws from stream `k * 2^24 + l` of
/// `config.mc_seed`, so its value does not depend on scheduling.
pub fn build_feature_matrix_with(
    equations: &[Equation],
    magmas: &[Magma],
    config: &StoneConfig,
    exec: Execution,
) -> Result<FeatureMatrix, StoneError> {
    if equations.is_empty() || magmas.is_empty() {
        return Err(StoneError::Empty);
    }
    let size = magmas[0].size();
    let rows = exec.map(
        equations.len(),
        |k| -> Result<(RowMode, u32, Vec<u32>), StoneError> {
            let compiled = CompiledEquation::from_equation(&equations[k])?;
            let tuples = (size as u128).pow(compiled.num_vars() as u32);
            let exact = match config.mode {
                PairingMode::Exact => {
                    if tuples > config.exact_budget as u128 {
                        return Err(StoneError::TupleBudgetExceeded {
                            tuples,
                            budget: config.exact_budget,
                        });
                    }
                    true
                }
                PairingMode::Auto => tuples <= config.exact_budget as u128,
                PairingMode::MonteCarlo => false,
            };
            if exact {
                let nums = magmas
                    .iter()
                    .map(|m| compiled.count_satisfying(m) as u32)
                    .collect();
                Ok((RowMode::Exact, tuples as u32, nums))
            } else {
                let mut nums = Vec::with_capacity(magmas.len());
                for (l, m) in magmas.iter().enumerate() {
                    let mut rng = substream(
                        config.mc_seed,
                        Purpose::MonteCarlo,
                        ((k as u64) << 24) | l as u64,
                    );
                    nums.push(
                        compiled
                            .pairing_mc(m, config.mc_samples, &mut rng)?
                            .numerator as u32,
                    );
                }
                Ok((RowMode::MonteCarlo, config.mc_samples, nums))
            }
        },
    );
    let cols = magmas.len();
    let mut fr = Fractions {
        modes: Vec::with_capacity(rows.len()),
        denominators: Vec::with_capacity(rows.len()),
        numerators: Vec::with_capacity(rows.len() * cols),
    };
    for row in rows {
        let (mode, den, nums) = row?;
        fr.modes.push(mode);
        fr.denominators.push(den);
        fr.numerators.extend(nums);
    }
    Ok(FeatureMatrix::from_fractions(equations.len(), cols, fr))
}

impl FeatureMatrix {
    pub fn from_fractions(rows: usize, cols: usize, fractions: Fractions) -> FeatureMatrix {
        assert_eq!(fractions.numerators.len(), rows * cols);
        let values = fractions
            .numerators
            .iter()
            .enumerate()
            .map(|(i, &n)| n as f64 / fractions.denominators[i / cols] as f64)
            .collect();
        FeatureMatrix {
            rows,
            cols,
            values,
            fractions: Some(fractions),
        }
    }

    /// A matrix from plain values (no exact fractions).
    pub fn from_values(rows: usize, cols: usize, values: Vec<f64>) -> FeatureMatrix {
        assert_eq!(values.len(), rows * cols);
        FeatureMatrix {
            rows,
            cols,
            values,
            fractions: None,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn fractions(&self) -> Option<&Fractions> {
        self.fractions.as_ref()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    pub fn row(&self, k: usize) -> Result<&[f64], StoneError> {
        if k >= self.rows {
            return Err(StoneError::BadIndex(k));
        }
        Ok(&self.values[k * self.cols..(k + 1) * self.cols])
    }

    /// Exact pairing of cell `(row, col)` when fractions are present.
    pub fn pairing(&self, row: usize, col: usize) -> Option<Pairing> {
        let f = self.fractions.as_ref()?;
        Some(Pairing {
            numerator: f.numerators[row * self.cols + col] as u64,
            denominator: f.denominators[row] as u64,
        })
    }

    /// Keeps the given columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> FeatureMatrix {
        let pick = |src: &[f64]| -> Vec<f64> {
            (0..self.rows)
                .flat_map(|r| cols.iter().map(move |&c| src[r * self.cols + c]))
                .collect()
        };
        let values = pick(&self.values);
        let fractions = self.fractions.as_ref().map(|f| Fractions {
            modes: f.modes.clone(),
            denominators: f.denominators.clone(),
            numerators: (0..self.rows)
                .flat_map(|r| cols.iter().map(move |&c| f.numerators[r * self.cols + c]))
                .collect(),
        });
        FeatureMatrix {
            rows: self.rows,
            cols: cols.len(),
            values,
            fractions,
        }
    }

    /// Keeps the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        let values = rows
            .iter()
            .flat_map(|&r| {
                self.values[r * self.cols..(r + 1) * self.cols]
                    .iter()
                    .copied()
            })
            .collect();
        let fractions = self.fractions.as_ref().map(|f| Fractions {
            modes: rows.iter().map(|&r| f.modes[r]).collect(),
            denominators: rows.iter().map(|&r| f.denominators[r]).collect(),
            numerators: rows
                .iter()
                .flat_map(|&r| {
                    f.numerators[r * self.cols..(r + 1) * self.cols]
                        .iter()
                        .copied()
                })
                .collect(),
        });
        FeatureMatrix {
            rows: rows.len(),
            cols: self.cols,
            values,
            fractions,
        }
    }

    /// Binary layout: magic `STONEFM1`, rows and cols as little-endian u64,
    /// then row-major little-endian f32 values.
    pub fn write_binary(&self, mut out: impl Write) -> std::io::Result<()> {
        let mut buf = Vec::with_capacity(24 + self.values.len() * 4);
        buf.extend_from_slice(MATRIX_MAGIC);
        buf.extend_from_slice(&(self.rows as u64).to_le_bytes());
        buf.extend_from_slice(&(self.cols as u64).to_le_bytes());
        for v in &self.values {
            buf.extend_from_slice(&(*v as f32).to_le_bytes());
        }
        out.write_all(&buf)
    }

    /// Fraction sidecar: magic `STONEFR1`, rows, cols (u64), then per row a
    /// mode byte (0 exact, 1 Monte Carlo) and a u32 denominator, then the
    /// row-major u32 numerators. Everything little-endian.
    pub fn write_fractions(&self, mut out: impl Write) -> std::io::Result<bool> {
        let Some(f) = &self.fractions else {
            return Ok(false);
        };
        let mut buf = Vec::with_capacity(24 + self.rows * 5 + f.numerators.len() * 4);
        buf.extend_from_slice(FRACTION_MAGIC);
        buf.extend_from_slice(&(self.rows as u64).to_le_bytes());
        buf.extend_from_slice(&(self.cols as u64).to_le_bytes());
        for (mode, den) in f.modes.iter().zip(&f.denominators) {
            buf.push(match mode {
                RowMode::Exact => 0,
                RowMode::MonteCarlo => 1,
            });
            buf.extend_from_slice(&den.to_le_bytes());
        }
        for n in &f.numerators {
            buf.extend_from_slice(&n.to_le_bytes());
        }
        out.write_all(&buf)?;
        Ok(true)
    }

    fn read_header(bytes: &[u8], magic: &[u8; 8]) -> Result<(usize, usize), StoneError> {
        if bytes.len() < 24 || &bytes[..8] != magic {
            return Err(StoneError::Format("bad magic".into()));
        }
        let rows = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
        let cols = u64::from_le_bytes(bytes[16..24].try_into().unwrap()) as usize;
        Ok((rows, cols))
    }

    /// Reads the f32 matrix and, when given, the exact sidecar.
    pub fn read(
        mut matrix: impl Read,
        fractions: Option<impl Read>,
    ) -> Result<FeatureMatrix, StoneError> {
        let mut bytes = Vec::new();
        matrix.read_to_end(&mut bytes)?;
        let (rows, cols) = Self::read_header(&bytes, MATRIX_MAGIC)?;
        if bytes.len() != 24 + rows * cols * 4 {
            return Err(StoneError::Format("matrix length mismatch".into()));
        }
        let Some(mut fr) = fractions else {
            let values = bytes[24..]
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
                .collect();
            return Ok(FeatureMatrix::from_values(rows, cols, values));
        };
        let mut fb = Vec::new();
        fr.read_to_end(&mut fb)?;
        let (fr_rows, fr_cols) = Self::read_header(&fb, FRACTION_MAGIC)?;
        if (fr_rows, fr_cols) != (rows, cols) || fb.len() != 24 + rows * 5 + rows * cols * 4 {
            return Err(StoneError::Format(
                "fraction sidecar does not match matrix".into(),
            ));
        }
        let mut modes = Vec::with_capacity(rows);
        let mut denominators = Vec::with_capacity(rows);
        for r in 0..rows {
            let at = 24 + r * 5;
            modes.push(match fb[at] {
                0 => RowMode::Exact,
                1 => RowMode::MonteCarlo,
                b => return Err(StoneError::Format(format!("bad row mode {b}"))),
            });
            denominators.push(u32::from_le_bytes(fb[at + 1..at + 5].try_into().unwrap()));
        }
        let numerators = fb[24 + rows * 5..]
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(FeatureMatrix::from_fractions(
            rows,
            cols,
            Fractions {
                modes,
                denominators,
                numerators,
            },
        ))
    }

    /// One CSV line per equation: `index,p_1,...,p_n`.
    pub fn write_csv(&self, mut out: impl Write, header: &str) -> std::io::Result<()> {
        let mut s = String::new();
        for line in header.lines() {
            s.push_str("# ");
            s.push_str(line);
            s.push('\n');
        }
        for r in 0..self.rows {
            s.push_str(&r.to_string());
            for v in &self.values[r * self.cols..(r + 1) * self.cols] {
                s.push(',');
                s.push_str(&v.to_string());
            }
            s.push('\n');
        }
        out.write_all(s.as_bytes())
    }

    pub fn spectrum(&self, k: usize) -> Result<Spectrum, StoneError> {
        Ok(Spectrum::from_values(self.row(k)?))
    }

    /// Exact multiset of reduced fractions for row `k`, when available.
    pub fn fraction_spectrum(&self, k: usize) -> Result<Option<Vec<FractionCount>>, StoneError> {
        if k >= self.rows {
            return Err(StoneError::BadIndex(k));
        }
        if self.fractions.is_none() {
            return Ok(None);
        }
        let mut vals: Vec<(u64, u64)> = (0..self.cols)
            .map(|c| self.pairing(k, c).unwrap().reduced())
            .collect();
        // Sort by value: a/b < c/d  <=>  a*d < c*b.
        vals.sort_by(|a, b| ((a.0 as u128) * (b.1 as u128)).cmp(&((b.0 as u128) * (a.1 as u128))));
        let mut out: Vec<((u64, u64), u64)> = Vec::new();
        for v in vals {
            match out.last_mut() {
                Some((last, m)) if *last == v => *m += 1,
                _ => out.push((v, 1)),
            }
        }
        Ok(Some(out))
    }

    /// Aligned pairs `(p[j][l], p[k][l])` as a multiset of weight `n`.
    pub fn interference_spectrum(
        &self,
        j: usize,
        k: usize,
    ) -> Result<InterferenceSpectrum, StoneError> {
        let (a, b) = (self.row(j)?, self.row(k)?);
        Ok(InterferenceSpectrum::from_pairs(
            a.iter().copied().zip(b.iter().copied()),
        ))
    }

    /// Product measure `Σ_i Σ_j δ(p_i, q_j)` of weight `n²`; only useful for
    /// replicating plots drawn with the double-sum convention.
    pub fn interference_product(
        &self,
        j: usize,
        k: usize,
    ) -> Result<InterferenceSpectrum, StoneError> {
        let (a, b) = (self.spectrum(j)?, self.spectrum(k)?);
        let mut entries = Vec::with_capacity(a.entries.len() * b.entries.len());
        for &(p, mp) in &a.entries {
            for &(q, mq) in &b.entries {
                entries.push(((p, q), mp * mq));
            }
        }
        Ok(InterferenceSpectrum {
            entries,
            weight: a.weight * b.weight,
        })
    }

    pub fn expectation_variance(&self, k: usize) -> Result<(f64, f64), StoneError> {
        Ok(self.spectrum(k)?.expectation_variance())
    }

    /// Expectations and variances of every row.
    pub fn all_expectation_variance(&self) -> (Vec<f64>, Vec<f64>) {
        (0..self.rows)
            .map(|k| self.spectrum(k).expect("in range").expectation_variance())
            .unzip()
    }
}

/// Multiset of one row's pairings, sorted ascending with multiplicities.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub entries: Vec<(f64, u64)>,
    pub weight: u64,
}

impl Spectrum {
    pub fn from_values(values: &[f64]) -> Spectrum {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut entries: Vec<(f64, u64)> = Vec::new();
        for v in sorted {
            match entries.last_mut() {
                Some((last, m)) if *last == v => *m += 1,
                _ => entries.push((v, 1)),
            }
        }
        Spectrum {
            entries,
            weight: values.len() as u64,
        }
    }

    /// Population mean and variance, computed from the multiset alone.
    pub fn expectation_variance(&self) -> (f64, f64) {
        let n = self.weight as f64;
        let sums: Vec<f64> = self.entries.iter().map(|&(v, m)| v * m as f64).collect();
        let mean = pairwise_sum(&sums) / n;
        let sq: Vec<f64> = self
            .entries
            .iter()
            .map(|&(v, m)| (v - mean) * (v - mean) * m as f64)
            .collect();
        (mean, pairwise_sum(&sq) / n)
    }

    /// Fixed-width histogram over `[0, 1]`; value 1 falls in the last bin.
    pub fn histogram(&self, bins: usize) -> Vec<u64> {
        let mut h = vec![0; bins];
        for &(v, m) in &self.entries {
            let b = ((v * bins as f64) as usize).min(bins - 1);
            h[b] += m;
        }
        h
    }

    pub fn write_csv(&self, mut out: impl Write, header: &str) -> std::io::Result<()> {
        for line in header.lines() {
            writeln!(out, "# {line}")?;
        }
        writeln!(out, "value,multiplicity")?;
        for (v, m) in &self.entries {
            writeln!(out, "{v},{m}")?;
        }
        Ok(())
    }
}

/// Multiset of aligned pairs `(p_l, q_l)`.
#[derive(Clone, Debug, PartialEq)]
pub struct InterferenceSpectrum {
    pub entries: Vec<((f64, f64), u64)>,
    pub weight: u64,
}

impl InterferenceSpectrum {
    pub fn from_pairs(pairs: impl Iterator<Item = (f64, f64)>) -> InterferenceSpectrum {
        let mut v: Vec<(f64, f64)> = pairs.collect();
        let weight = v.len() as u64;
        v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let mut entries: Vec<((f64, f64), u64)> = Vec::new();
        for p in v {
            match entries.last_mut() {
                Some((last, m)) if *last == p => *m += 1,
                _ => entries.push((p, 1)),
            }
        }
        InterferenceSpectrum { entries, weight }
    }

    pub fn write_csv(&self, mut out: impl Write, header: &str) -> std::io::Result<()> {
        for line in header.lines() {
            writeln!(out, "# {line}")?;
        }
        writeln!(out, "p,q,multiplicity")?;
        for ((p, q), m) in &self.entries {
            writeln!(out, "{p},{q},{m}")?;
        }
        Ok(())
    }
}
