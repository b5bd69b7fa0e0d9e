//! Brute-force oracles shared by the integration tests.
#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::BTreeSet;

use magmaspace::graph::{condense_with, Closure, ImplicationGraph, SelfPairs};
use magmaspace::magma::Magma;
use magmaspace::par::Execution;
use magmaspace::terms::{Equation, Term};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Evaluates `t` under `a` by direct recursion.
pub fn eval(m: &Magma, t: &Term, a: &[u8]) -> u8 {
    match t {
        Term::Var(v) => a[*v as usize],
        Term::App(l, r) => m.op(eval(m, l, a), eval(m, r, a)),
    }
}

/// Number of assignments in `N^vars` satisfying `e`, by nested enumeration.
pub fn naive_count(e: &Equation, m: &Magma) -> u64 {
    let n = m.size();
    let k = e.num_vars();
    let mut a = vec![0u8; k];
    let mut count = 0;
    loop {
        if eval(m, e.lhs(), &a) == eval(m, e.rhs(), &a) {
            count += 1;
        }
        let mut i = 0;
        loop {
            if i == k {
                return count;
            }
            a[i] += 1;
            if (a[i] as usize) < n {
                break;
            }
            a[i] = 0;
            i += 1;
        }
    }
}

/// A random relation on at most eight vertices.
pub fn random_relation(seed: u64) -> (usize, Vec<(usize, usize)>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=8);
    let density: f64 = rng.gen_range(0.0..0.5);
    let mut pairs = Vec::new();
    for j in 0..n {
        for k in 0..n {
            if rng.gen_bool(density) {
                pairs.push((j, k));
            }
        }
    }
    (n, pairs)
}

/// Reflexive-transitive closure by repeated squaring until stable.
pub fn closure_oracle(n: usize, pairs: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let mut r = vec![vec![false; n]; n];
    for i in 0..n {
        r[i][i] = true;
    }
    for &(j, k) in pairs {
        r[j][k] = true;
    }
    loop {
        let mut changed = false;
        for i in 0..n {
            for j in 0..n {
                if !r[i][j] && (0..n).any(|k| r[i][k] && r[k][j]) {
                    r[i][j] = true;
                    changed = true;
                }
            }
        }
        if !changed {
            return r;
        }
    }
}

/// Every check of the graph module against definitions, on one relation.
pub fn check_graph_against_oracles(
    n: usize,
    pairs: &[(usize, usize)],
    exec: Execution,
) -> Result<(), String> {
    let r = closure_oracle(n, pairs);
    let g = ImplicationGraph::from_pairs(n, pairs.iter().copied(), Closure::Transitive)
        .map_err(|e| e.to_string())?;
    for i in 0..n {
        for j in 0..n {
            if g.implies(i, j) != r[i][j] {
                return Err(format!("closure differs at ({i},{j})"));
            }
        }
    }
    let closed_pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| r[i][j])
        .collect();
    if ImplicationGraph::from_pairs(n, closed_pairs.iter().copied(), Closure::Check).is_err() {
        return Err("closed relation rejected".into());
    }
    let transitive = pairs
        .iter()
        .all(|&(a, b)| (0..n).all(|c| !r[b][c] || a == b || pairs.contains(&(a, c)) || a == c));
    if !transitive && ImplicationGraph::from_pairs(n, pairs.iter().copied(), Closure::Check).is_ok()
    {
        return Err("non-transitive relation accepted".into());
    }

    // Cliques: mutual reachability classes, ordered by smallest member.
    let mut oracle_cliques: Vec<Vec<usize>> = Vec::new();
    for v in 0..n {
        if oracle_cliques.iter().any(|c| c.contains(&v)) {
            continue;
        }
        oracle_cliques.push((0..n).filter(|&w| r[v][w] && r[w][v]).collect());
    }
    let c = condense_with(&g, exec);
    if c.cliques != oracle_cliques {
        return Err(format!("cliques {:?} != {:?}", c.cliques, oracle_cliques));
    }
    let m = oracle_cliques.len();
    let above = |a: usize, b: usize| a != b && r[oracle_cliques[a][0]][oracle_cliques[b][0]];
    let atomic: Vec<(usize, usize)> = (0..m)
        .flat_map(|a| (0..m).map(move |b| (a, b)))
        .filter(|&(a, b)| above(a, b) && !(0..m).any(|e| above(a, e) && above(e, b)))
        .collect();
    if c.atomic_edges != atomic {
        return Err(format!("atomic {:?} != {:?}", c.atomic_edges, atomic));
    }

    let total: usize = r.iter().flatten().filter(|&&b| b).count();
    let reversible: usize = oracle_cliques.iter().map(|c| c.len() * c.len()).sum();
    let vertex_atomic: usize = atomic
        .iter()
        .map(|&(a, b)| oracle_cliques[a].len() * oracle_cliques[b].len())
        .sum();
    let inc = c.counts(SelfPairs::Include);
    let exc = c.counts(SelfPairs::Exclude);
    let want = (
        total,
        reversible,
        total - reversible,
        m,
        atomic.len(),
        vertex_atomic,
    );
    if (
        inc.total,
        inc.reversible,
        inc.strict,
        inc.cliques,
        inc.atomic_edges,
        inc.vertex_atomic,
    ) != want
    {
        return Err(format!("counts {inc:?} != {want:?}"));
    }
    if exc.reversible + n != reversible || exc.strict != total - reversible + n {
        return Err(format!("self-pair convention {exc:?}"));
    }

    // Longest paths: every atomic path, by length descending then lexicographic.
    let mut all: Vec<Vec<usize>> = Vec::new();
    fn walk(path: &mut Vec<usize>, atomic: &[(usize, usize)], all: &mut Vec<Vec<usize>>) {
        if path.len() > 1 {
            all.push(path.clone());
        }
        let last = *path.last().unwrap();
        for &(a, b) in atomic {
            if a == last {
                path.push(b);
                walk(path, atomic, all);
                path.pop();
            }
        }
    }
    for s in 0..m {
        walk(&mut vec![s], &atomic, &mut all);
    }
    all.sort_by(|a, b| b.len().cmp(&a.len()).then(a.cmp(b)));
    let got = c.longest_paths(usize::MAX);
    if got != all {
        return Err(format!("longest paths {got:?} != {all:?}"));
    }
    let distinct: BTreeSet<&Vec<usize>> = got.iter().collect();
    if distinct.len() != got.len() {
        return Err("duplicate paths".into());
    }
    Ok(())
}

/// A `rows × cols` matrix whose column-centered covariance `(1/rows)·XᵀX`
/// has exactly the eigenvalues `spectrum` (padded with zeros), plus a
/// per-column offset that centering removes.
pub fn synthetic_matrix(rows: usize, cols: usize, spectrum: &[f64], seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = spectrum.len();
    // Left factors orthonormal and orthogonal to the all-ones vector.
    let mut left: Vec<Vec<f64>> = vec![vec![1.0 / (rows as f64).sqrt(); rows]];
    let mut right: Vec<Vec<f64>> = Vec::new();
    let gs = |basis: &[Vec<f64>], mut v: Vec<f64>| -> Vec<f64> {
        for _ in 0..2 {
            for b in basis {
                let d: f64 = b.iter().zip(&v).map(|(x, y)| x * y).sum();
                v.iter_mut().zip(b).for_each(|(t, s)| *t -= d * s);
            }
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.into_iter().map(|x| x / n).collect()
    };
    for _ in 0..k {
        let v = gs(&left, (0..rows).map(|_| rng.gen_range(-1.0..1.0)).collect());
        left.push(v);
        let w = gs(
            &right,
            (0..cols).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        );
        right.push(w);
    }
    let offsets: Vec<f64> = (0..cols).map(|_| rng.gen_range(0.0..1.0)).collect();
    let mut x = vec![0.0; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            let mut v = offsets[c];
            for i in 0..k {
                v += (spectrum[i] * rows as f64).sqrt() * left[i + 1][r] * right[i][c];
            }
            x[r * cols + c] = v;
        }
    }
    x
}
