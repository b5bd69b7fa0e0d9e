//! Principal components of the feature matrix.
//!
//! Rows (equations) are points in `R^n`, one coordinate per magma. The
//! default centering subtracts the per-magma mean μ from every column, so
//! the covariance is the `n × n` matrix `XᵀX / E` over `E` equations. The
//! solver works on whichever Gram matrix is smaller (`XᵀX` or `XXᵀ`) and
//! extracts the leading eigenpairs by block subspace iteration with a
//! Rayleigh–Ritz step solved by cyclic Jacobi.
//!
//! # Conjugation and the third axis
//!
//! If the sample is closed under taking opposites, conjugating an equation
//! permutes its feature vector by the involution `P` that swaps each magma
//! with its opposite. The corpus is closed under conjugation, so μ is
//! `P`-invariant and `PᵀCP = C`. Each simple eigenvector of `C` is therefore
//! either even (`Pv = v`) or odd (`Pv = −v`), and along an odd component the
//! coordinate of `conjugate(e)` is exactly minus that of `e`; self-conjugate
//! equations (fixed by `P`) then sit at coordinate zero.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::enumerate::Corpus;
use crate::par::Execution;
use crate::rng::{substream, Purpose};
use crate::stats::{mean, pearson};
use crate::stone::FeatureMatrix;

/// Number of eigenpairs reported for scree plots.
pub const SPECTRUM_LEN: usize = 10;
pub const MAX_K: usize = 10;

#[derive(Debug, Error, PartialEq)]
pub enum PcaError {
    #[error("need k in 1..={MAX_K}, at least k+1 rows and 2 columns (got k={k}, {rows}×{cols})")]
    BadShape { k: usize, rows: usize, cols: usize },
    #[error("all rows are identical after centering")]
    Degenerate,
    #[error("eigensolver did not converge within {0} iterations")]
    NoConvergence(usize),
    #[error("need at least two points with varying x")]
    DegenerateRegression,
    #[error("embedding has {emb} rows but the corpus has {corpus}")]
    Mismatch { emb: usize, corpus: usize },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Centering {
    /// Subtract the per-magma mean from each column.
    #[default]
    Columns,
    /// Subtract each equation's own mean from its row.
    Rows,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PcaConfig {
    pub k: usize,
    pub centering: Centering,
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Seed of the random start block.
    pub seed: u64,
}

impl Default for PcaConfig {
    fn default() -> Self {
        PcaConfig {
            k: 3,
            centering: Centering::Columns,
            tolerance: 1e-10,
            max_iterations: 10_000,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatentEmbedding {
    pub k: usize,
    /// Row-major `rows × k` coordinates.
    pub coords: Vec<f64>,
    /// `k` unit vectors of length `n`.
    pub components: Vec<Vec<f64>>,
    /// Leading covariance eigenvalues (up to ten).
    pub eigenvalues: Vec<f64>,
    /// Singular values of the centered matrix, `sqrt(λ·E)`.
    pub singular_values: Vec<f64>,
    /// `λ_i / trace(C)`.
    pub explained_variance_ratio: Vec<f64>,
    pub centering: Centering,
    /// Column means (length `n`) or row means (length `E`), per `centering`.
    pub center: Vec<f64>,
    pub total_variance: f64,
    pub iterations: usize,
}

impl LatentEmbedding {
    pub fn rows(&self) -> usize {
        self.coords.len() / self.k
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.k..(i + 1) * self.k]
    }

    /// Coordinate `axis` of every row.
    pub fn axis(&self, axis: usize) -> Vec<f64> {
        (0..self.rows())
            .map(|i| self.coords[i * self.k + axis])
            .collect()
    }

    fn negate_axis(&mut self, axis: usize) {
        for i in 0..self.rows() {
            self.coords[i * self.k + axis] = -self.coords[i * self.k + axis];
        }
        for v in &mut self.components[axis] {
            *v = -*v;
        }
    }

    /// CSV `index,X,Y,Z` (further axes are named `c4`, `c5`, …).
    pub fn write_csv(&self, mut out: impl Write, header: &str) -> std::io::Result<()> {
        let mut s = String::new();
        for line in header.lines() {
            s.push_str("# ");
            s.push_str(line);
            s.push('\n');
        }
        s.push_str("index");
        for a in 0..self.k {
            s.push(',');
            s.push_str(&axis_name(a));
        }
        s.push('\n');
        for i in 0..self.rows() {
            s.push_str(&i.to_string());
            for v in self.point(i) {
                s.push(',');
                s.push_str(&v.to_string());
            }
            s.push('\n');
        }
        out.write_all(s.as_bytes())
    }
}

pub fn axis_name(a: usize) -> String {
    match a {
        0 => "X".into(),
        1 => "Y".into(),
        2 => "Z".into(),
        _ => format!("c{}", a + 1),
    }
}

/// `k` leading principal coordinates with default settings.
pub fn pca_embed(f: &FeatureMatrix, k: usize) -> Result<LatentEmbedding, PcaError> {
    pca_embed_with(
        f,
        &PcaConfig {
            k,
            ..PcaConfig::default()
        },
        Execution::Parallel,
    )
}

pub fn pca_embed_with(
    f: &FeatureMatrix,
    config: &PcaConfig,
    exec: Execution,
) -> Result<LatentEmbedding, PcaError> {
    let (rows, cols, k) = (f.rows(), f.cols(), config.k);
    if k == 0 || k > MAX_K || rows < k + 1 || cols < 2 {
        return Err(PcaError::BadShape { k, rows, cols });
    }
    let mut x = f.values().to_vec();
    let center = match config.centering {
        Centering::Columns => {
            let mut col = vec![0.0; rows];
            let mu: Vec<f64> = (0..cols)
                .map(|c| {
                    for (r, v) in col.iter_mut().enumerate() {
                        *v = x[r * cols + c];
                    }
                    mean(&col)
                })
                .collect();
            for r in 0..rows {
                for c in 0..cols {
                    x[r * cols + c] -= mu[c];
                }
            }
            mu
        }
        Centering::Rows => {
            let mu: Vec<f64> = (0..rows)
                .map(|r| mean(&x[r * cols..(r + 1) * cols]))
                .collect();
            for r in 0..rows {
                for c in 0..cols {
                    x[r * cols + c] -= mu[r];
                }
            }
            mu
        }
    };
    let scale = 1.0 / rows as f64;
    let total_variance = x.iter().map(|v| v * v).sum::<f64>() * scale;
    if total_variance == 0.0 {
        return Err(PcaError::Degenerate);
    }

    let use_columns = cols <= rows;
    let dim = if use_columns { cols } else { rows };
    let gram = if use_columns {
        gram_columns(&x, rows, cols, scale, exec)
    } else {
        gram_rows(&x, rows, cols, scale, exec)
    };
    let m = SPECTRUM_LEN.min(dim).max(k);
    let (eigenvalues, vectors, iterations) = top_eigenpairs(&gram, dim, m, config, exec)?;

    let mut components: Vec<Vec<f64>> = Vec::with_capacity(k);
    for v in vectors.iter().take(k) {
        let mut c = if use_columns {
            v.clone()
        } else {
            // v is a left singular vector; map it to the magma side.
            let mut w = vec![0.0; cols];
            for r in 0..rows {
                for c in 0..cols {
                    w[c] += x[r * cols + c] * v[r];
                }
            }
            normalize(&mut w);
            w
        };
        // Largest-magnitude entry positive (first on ties).
        let mut best = 0;
        for i in 1..c.len() {
            if c[i].abs() > c[best].abs() {
                best = i;
            }
        }
        if c[best] < 0.0 {
            c.iter_mut().for_each(|v| *v = -*v);
        }
        components.push(c);
    }
    let coords: Vec<f64> = exec
        .map(rows, |r| {
            let row = &x[r * cols..(r + 1) * cols];
            components.iter().map(|c| dot(row, c)).collect::<Vec<f64>>()
        })
        .into_iter()
        .flatten()
        .collect();
    let eigenvalues: Vec<f64> = eigenvalues
        .into_iter()
        .take(SPECTRUM_LEN.min(m))
        .map(|l| l.max(0.0))
        .collect();
    Ok(LatentEmbedding {
        k,
        coords,
        components,
        singular_values: eigenvalues
            .iter()
            .map(|l| (l * rows as f64).sqrt())
            .collect(),
        explained_variance_ratio: eigenvalues.iter().map(|l| l / total_variance).collect(),
        eigenvalues,
        centering: config.centering,
        center,
        total_variance,
        iterations,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// `scale · XᵀX` (cols × cols).
fn gram_columns(x: &[f64], rows: usize, cols: usize, scale: f64, exec: Execution) -> Vec<f64> {
    let upper = exec.map(cols, |a| {
        let mut acc = vec![0.0; cols - a];
        for r in 0..rows {
            let row = &x[r * cols..(r + 1) * cols];
            let xa = row[a];
            for (s, v) in acc.iter_mut().zip(&row[a..]) {
                *s += xa * v;
            }
        }
        acc
    });
    let mut g = vec![0.0; cols * cols];
    for (a, acc) in upper.into_iter().enumerate() {
        for (off, v) in acc.into_iter().enumerate() {
            g[a * cols + a + off] = v * scale;
            g[(a + off) * cols + a] = v * scale;
        }
    }
    g
}

/// `scale · XXᵀ` (rows × rows).
fn gram_rows(x: &[f64], rows: usize, cols: usize, scale: f64, exec: Execution) -> Vec<f64> {
    let upper = exec.map(rows, |i| {
        let xi = &x[i * cols..(i + 1) * cols];
        (i..rows)
            .map(|j| dot(xi, &x[j * cols..(j + 1) * cols]) * scale)
            .collect::<Vec<f64>>()
    });
    let mut g = vec![0.0; rows * rows];
    for (i, acc) in upper.into_iter().enumerate() {
        for (off, v) in acc.into_iter().enumerate() {
            g[i * rows + i + off] = v;
            g[(i + off) * rows + i] = v;
        }
    }
    g
}

fn matmul_block(a: &[f64], dim: usize, block: &[Vec<f64>], exec: Execution) -> Vec<Vec<f64>> {
    exec.map(block.len(), |j| {
        (0..dim)
            .map(|r| dot(&a[r * dim..(r + 1) * dim], &block[j]))
            .collect()
    })
}

/// Modified Gram–Schmidt, applied twice for stability.
fn orthonormalize(block: &mut [Vec<f64>]) {
    for _ in 0..2 {
        for j in 0..block.len() {
            let before = dot(&block[j], &block[j]).sqrt();
            for i in 0..j {
                let (head, tail) = block.split_at_mut(j);
                let d = dot(&head[i], &tail[0]);
                for (t, h) in tail[0].iter_mut().zip(&head[i]) {
                    *t -= d * h;
                }
            }
            // What survives projection at rounding level is noise, not a
            // new direction.
            if normalize(&mut block[j]) <= 1e-10 * before {
                // Rank-deficient block: replace by a unit basis vector
                // orthogonal to the previous ones.
                let dim = block[j].len();
                'basis: for e in 0..dim {
                    let mut v = vec![0.0; dim];
                    v[e] = 1.0;
                    for b in &block[..j] {
                        let d = b[e];
                        for (t, h) in v.iter_mut().zip(b) {
                            *t -= d * h;
                        }
                    }
                    if normalize(&mut v) > 1e-6 {
                        block[j] = v;
                        break 'basis;
                    }
                }
            }
        }
    }
}

/// Eigen-decomposition of a small dense symmetric matrix by cyclic Jacobi.
/// Returns eigenvalues descending with eigenvectors as columns of `v`
/// (row-major `p × p`).
pub fn jacobi_eigen(a: &[f64], p: usize) -> (Vec<f64>, Vec<f64>) {
    let mut a = a.to_vec();
    let mut v = vec![0.0; p * p];
    for i in 0..p {
        v[i * p + i] = 1.0;
    }
    let norm: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    for _sweep in 0..100 {
        let off: f64 = (0..p)
            .flat_map(|i| (0..p).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * p + j].powi(2))
            .sum();
        if off.sqrt() <= 1e-15 * norm.max(f64::MIN_POSITIVE) {
            break;
        }
        for i in 0..p {
            for j in i + 1..p {
                let aij = a[i * p + j];
                if aij == 0.0 {
                    continue;
                }
                let theta = (a[j * p + j] - a[i * p + i]) / (2.0 * aij);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..p {
                    let (aki, akj) = (a[k * p + i], a[k * p + j]);
                    a[k * p + i] = c * aki - s * akj;
                    a[k * p + j] = s * aki + c * akj;
                }
                for k in 0..p {
                    let (aik, ajk) = (a[i * p + k], a[j * p + k]);
                    a[i * p + k] = c * aik - s * ajk;
                    a[j * p + k] = s * aik + c * ajk;
                }
                for k in 0..p {
                    let (vki, vkj) = (v[k * p + i], v[k * p + j]);
                    v[k * p + i] = c * vki - s * vkj;
                    v[k * p + j] = s * vki + c * vkj;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&x, &y| a[y * p + y].total_cmp(&a[x * p + x]));
    let values = order.iter().map(|&i| a[i * p + i]).collect();
    let mut vecs = vec![0.0; p * p];
    for (new, &old) in order.iter().enumerate() {
        for r in 0..p {
            vecs[r * p + new] = v[r * p + old];
        }
    }
    (values, vecs)
}

/// Eigenvalues, eigenvectors and the iteration count.
type Eigenpairs = (Vec<f64>, Vec<Vec<f64>>, usize);

/// Leading `m` eigenpairs of the symmetric PSD matrix `a` (`dim × dim`).
fn top_eigenpairs(
    a: &[f64],
    dim: usize,
    m: usize,
    config: &PcaConfig,
    exec: Execution,
) -> Result<Eigenpairs, PcaError> {
    let p = (m + 6).min(dim);
    let mut rng = substream(config.seed, Purpose::PcaStart, 0);
    let mut q: Vec<Vec<f64>> = (0..p)
        .map(|_| (0..dim).map(|_| rng.gen::<f64>() - 0.5).collect())
        .collect();
    orthonormalize(&mut q);
    let scale = (0..dim)
        .map(|i| a[i * dim + i])
        .sum::<f64>()
        .max(f64::MIN_POSITIVE);
    let mut previous: Option<Vec<f64>> = None;
    for iter in 1..=config.max_iterations {
        let mut z = matmul_block(a, dim, &q, exec);
        orthonormalize(&mut z);
        // Rayleigh–Ritz on span(z).
        let az = matmul_block(a, dim, &z, exec);
        let mut h = vec![0.0; p * p];
        for i in 0..p {
            for j in i..p {
                let d = 0.5 * (dot(&z[i], &az[j]) + dot(&z[j], &az[i]));
                h[i * p + j] = d;
                h[j * p + i] = d;
            }
        }
        let (theta, w) = jacobi_eigen(&h, p);
        let ritz: Vec<Vec<f64>> = (0..p)
            .map(|c| {
                let mut v = vec![0.0; dim];
                for (i, zi) in z.iter().enumerate() {
                    let coef = w[i * p + c];
                    for (t, s) in v.iter_mut().zip(zi) {
                        *t += coef * s;
                    }
                }
                v
            })
            .collect();
        let values_converged = previous.as_ref().is_some_and(|prev: &Vec<f64>| {
            // Eigenvalues at rounding level (a rank-deficient matrix) jitter
            // by a few ulps of the trace and count as settled.
            (0..m).all(|i| {
                let change = (theta[i] - prev[i]).abs();
                change <= config.tolerance * theta[i].abs() || change <= 1e-13 * scale
            })
        });
        let residual_ok = values_converged && {
            let av = matmul_block(a, dim, &ritz[..m], exec);
            (0..m).all(|i| {
                let r: f64 = av[i]
                    .iter()
                    .zip(&ritz[i])
                    .map(|(x, v)| (x - theta[i] * v).powi(2))
                    .sum::<f64>()
                    .sqrt();
                r <= config.tolerance.max(1e-14) * 10.0 * scale
            })
        };
        if residual_ok {
            return Ok((
                theta[..m].to_vec(),
                ritz.into_iter().take(m).collect(),
                iter,
            ));
        }
        previous = Some(theta);
        q = ritz;
    }
    Err(PcaError::NoConvergence(config.max_iterations))
}

/// Orients the axes: X with expectation, Y with variance, and Z positive on
/// the first non-self-conjugate equation of the corpus.
pub fn fix_signs(
    emb: &LatentEmbedding,
    f: &FeatureMatrix,
    corpus: &Corpus,
) -> Result<LatentEmbedding, PcaError> {
    if emb.rows() != corpus.len() || f.rows() != corpus.len() {
        return Err(PcaError::Mismatch {
            emb: emb.rows(),
            corpus: corpus.len(),
        });
    }
    let (expectation, variance) = f.all_expectation_variance();
    let mut out = emb.clone();
    if pearson(&out.axis(0), &expectation) < 0.0 {
        out.negate_axis(0);
    }
    if out.k > 1 && pearson(&out.axis(1), &variance) < 0.0 {
        out.negate_axis(1);
    }
    if out.k > 2 {
        if let Some(i) = corpus
            .equations()
            .iter()
            .position(|e| !e.is_self_conjugate())
        {
            if out.point(i)[2] < 0.0 {
                out.negate_axis(2);
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Regression {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Least-squares line `y = slope·x + intercept`.
pub fn regress(xs: &[f64], ys: &[f64]) -> Result<Regression, PcaError> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(PcaError::DegenerateRegression);
    }
    let (mx, my) = (mean(xs), mean(ys));
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(PcaError::DegenerateRegression);
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 {
        0.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    Ok(Regression {
        slope,
        intercept: my - slope * mx,
        r2,
    })
}
