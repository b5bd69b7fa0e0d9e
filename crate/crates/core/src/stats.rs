//! Small numeric helpers shared by the statistics-producing modules.

use serde::{Deserialize, Serialize};

/// Pairwise (cascade) summation; the result depends only on the slice order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn mean(xs: &[f64]) -> f64 {
    pairwise_sum(xs) / xs.len() as f64
}

/// Population variance, `(1/n) Σ (x - mean)²`.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let sq: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    pairwise_sum(&sq) / xs.len() as f64
}

/// Nearest-rank quantile of an ascending slice: the value at rank `ceil(p n)`.
pub fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let n = sorted.len();
    let rank = (p * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

/// Pearson correlation; 0 when either side has no variance.
pub fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let (mx, my) = (mean(xs), mean(ys));
    let sxy: Vec<f64> = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .collect();
    let sxx: Vec<f64> = xs.iter().map(|x| (x - mx) * (x - mx)).collect();
    let syy: Vec<f64> = ys.iter().map(|y| (y - my) * (y - my)).collect();
    let (sxy, sxx, syy) = (pairwise_sum(&sxy), pairwise_sum(&sxx), pairwise_sum(&syy));
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

/// Distribution summary in the layout of a `describe()` table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
    pub max: f64,
}

impl Summary {
    /// Summarizes `values` (sorted in place). Empty input yields NaN statistics.
    pub fn of(values: &mut [f64]) -> Summary {
        if values.is_empty() {
            return Summary {
                count: 0,
                mean: f64::NAN,
                std: f64::NAN,
                min: f64::NAN,
                q25: f64::NAN,
                q50: f64::NAN,
                q75: f64::NAN,
                max: f64::NAN,
            };
        }
        values.sort_by(f64::total_cmp);
        Summary {
            count: values.len(),
            mean: mean(values),
            std: variance(values).sqrt(),
            min: values[0],
            q25: nearest_rank(values, 0.25),
            q50: nearest_rank(values, 0.5),
            q75: nearest_rank(values, 0.75),
            max: values[values.len() - 1],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_rank_matches_definition() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(nearest_rank(&xs, 0.25), 1.0);
        assert_eq!(nearest_rank(&xs, 0.5), 2.0);
        assert_eq!(nearest_rank(&xs, 0.75), 3.0);
        assert_eq!(nearest_rank(&xs, 1.0), 4.0);
        assert_eq!(nearest_rank(&[7.0], 0.25), 7.0);
    }

    #[test]
    fn summary_of_two_point_distribution() {
        let mut xs = [1.0, 0.0];
        let s = Summary::of(&mut xs);
        assert_eq!((s.mean, s.std, s.min, s.max), (0.5, 0.5, 0.0, 1.0));
        assert!(Summary::of(&mut []).mean.is_nan());
    }

    #[test]
    fn pairwise_sum_is_accurate() {
        let xs = vec![0.1; 10_000];
        assert!((pairwise_sum(&xs) - 1000.0).abs() < 1e-9);
        assert_eq!(pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]), 1.0);
        assert_eq!(pearson(&[1.0, 2.0], &[3.0, 3.0]), 0.0);
    }
}
