//! The implication preorder, its reversible cliques and atomic steps.
//!
//! Implications are stored as a dense bit matrix (`row j` = everything `j`
//! implies). Cliques are the strongly connected components; the condensed
//! DAG is transitively closed because the preorder is, so an edge `c → d`
//! is atomic exactly when no clique lies strictly between, i.e. when
//! `succ(c) ∩ pred(d)` is empty.

use std::io::BufRead;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bitset::BitMatrix;
use crate::enumerate::Corpus;
use crate::magma::Magma;
use crate::par::Execution;
use crate::rng::{substream, Purpose};
use crate::stone::{CompiledEquation, StoneError};
use crate::terms::Equation;

/// Above this size transitivity is audited by sampling instead of fully.
pub const FULL_AUDIT_LIMIT: usize = 1024;
/// Number of sampled implications checked on large graphs.
pub const AUDIT_SAMPLES: usize = 200_000;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("line {line}: unknown equation identifier {id}")]
    UnknownIdentifier { line: usize, id: String },
    #[error("line {line}: expected `j k`")]
    Malformed { line: usize },
    #[error("vertex {0} out of range")]
    BadVertex(usize),
    #[error("not transitive: {a} ⇒ {b} ⇒ {c} but not {a} ⇒ {c}")]
    NotTransitive { a: usize, b: usize, c: usize },
    #[error("unknown id kind `{0}` (expected corpus or et)")]
    BadHeader(String),
    #[error("need {need} clique centers, got {got}")]
    MissingCenters { need: usize, got: usize },
    #[error(transparent)]
    Stone(#[from] StoneError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// How identifiers in a preorder file are interpreted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IdKind {
    #[default]
    Corpus,
    Et,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Closure {
    /// Reflexive closure only; the input must already be transitive.
    #[default]
    Check,
    /// Reflexive-transitive closure of the input.
    Transitive,
}

/// Where the `V` pairs `j ⇒ j` are counted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelfPairs {
    /// As reversible implications (each clique contributes `|c|²`).
    #[default]
    Include,
    /// Outside the reversible class; the strict class absorbs them as
    /// zero-length edges so that the two classes still sum to the total.
    Exclude,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImplicationGraph {
    adj: BitMatrix,
}

impl ImplicationGraph {
    /// Graph on `n` vertices from pairs `j ⇒ k`; duplicates are harmless.
    pub fn from_pairs(
        n: usize,
        pairs: impl IntoIterator<Item = (usize, usize)>,
        closure: Closure,
    ) -> Result<ImplicationGraph, GraphError> {
        let mut adj = BitMatrix::identity(n);
        for (j, k) in pairs {
            if j >= n || k >= n {
                return Err(GraphError::BadVertex(j.max(k)));
            }
            adj.set(j, k);
        }
        let mut g = ImplicationGraph { adj };
        match closure {
            Closure::Transitive => g.close(),
            Closure::Check => g.audit()?,
        }
        Ok(g)
    }

    /// Wraps a relation that is already a preorder.
    pub fn from_matrix(adj: BitMatrix, closure: Closure) -> Result<ImplicationGraph, GraphError> {
        let n = adj.len();
        let mut g = ImplicationGraph { adj };
        for i in 0..n {
            g.adj.set(i, i);
        }
        match closure {
            Closure::Transitive => g.close(),
            Closure::Check => g.audit()?,
        }
        Ok(g)
    }

    /// Warshall's algorithm on bit rows.
    fn close(&mut self) {
        let n = self.adj.len();
        for k in 0..n {
            for i in 0..n {
                if i != k && self.adj.get(i, k) {
                    self.adj.or_row_into(k, i);
                }
            }
        }
    }

    /// Full transitivity check on small graphs, sampled on large ones.
    fn audit(&self) -> Result<(), GraphError> {
        let n = self.adj.len();
        let witness = |a: usize, b: usize| -> GraphError {
            let c = (0..n)
                .find(|&c| self.adj.get(b, c) && !self.adj.get(a, c))
                .expect("violation exists");
            GraphError::NotTransitive { a, b, c }
        };
        if n <= FULL_AUDIT_LIMIT {
            for a in 0..n {
                for b in self.adj.ones(a) {
                    if !self.adj.row_subset(b, a) {
                        return Err(witness(a, b));
                    }
                }
            }
        } else if n > 0 {
            let mut rng = substream(0, Purpose::Audit, 0);
            for _ in 0..AUDIT_SAMPLES {
                let a = rng.gen_range(0..n);
                let b = rng.gen_range(0..n);
                if self.adj.get(a, b) && !self.adj.row_subset(b, a) {
                    return Err(witness(a, b));
                }
            }
        }
        Ok(())
    }

    pub fn num_vertices(&self) -> usize {
        self.adj.len()
    }

    pub fn implies(&self, j: usize, k: usize) -> bool {
        self.adj.get(j, k)
    }

    pub fn matrix(&self) -> &BitMatrix {
        &self.adj
    }

    /// Number of implications, self-pairs included.
    pub fn total(&self) -> usize {
        self.adj.count()
    }

    pub fn transitive_closure(&self) -> ImplicationGraph {
        let mut g = self.clone();
        g.close();
        g
    }

    /// Writes the `j k` format with a header naming the id kind.
    pub fn write(&self, mut out: impl std::io::Write, header: &str) -> std::io::Result<()> {
        let mut s = String::new();
        for line in header.lines() {
            s.push_str(&format!("# {line}\n"));
        }
        s.push_str("# ids: corpus\n");
        for j in 0..self.num_vertices() {
            for k in self.adj.ones(j) {
                s.push_str(&format!("{j} {k}\n"));
            }
        }
        out.write_all(s.as_bytes())
    }
}

/// Reads a preorder file: `#` comments, an optional `# ids: corpus|et`
/// header, then one `j k` pair (`j ⇒ k`) per line.
pub fn load_preorder_from(
    reader: impl BufRead,
    corpus: &Corpus,
    closure: Closure,
) -> Result<ImplicationGraph, GraphError> {
    let n = corpus.len();
    let mut kind = IdKind::Corpus;
    let mut adj = BitMatrix::identity(n);
    let et: std::collections::HashMap<u32, usize> = corpus
        .et_numbering()
        .iter()
        .map(|(&i, &e)| (e, i))
        .collect();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(comment) = t.strip_prefix('#') {
            if let Some(v) = comment.trim().strip_prefix("ids:") {
                kind = match v.trim() {
                    "corpus" => IdKind::Corpus,
                    "et" => IdKind::Et,
                    other => return Err(GraphError::BadHeader(other.to_string())),
                };
            }
            continue;
        }
        let mut parts = t.split_whitespace();
        let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(GraphError::Malformed { line: lineno });
        };
        let resolve = |s: &str| -> Result<usize, GraphError> {
            let unknown = || GraphError::UnknownIdentifier {
                line: lineno,
                id: s.to_string(),
            };
            let digits = s
                .strip_prefix("Eqn")
                .or_else(|| s.strip_prefix("Equation"))
                .unwrap_or(s);
            let v: u64 = digits
                .parse()
                .map_err(|_| GraphError::Malformed { line: lineno })?;
            match kind {
                IdKind::Corpus => (v < n as u64).then_some(v as usize).ok_or_else(unknown),
                IdKind::Et => u32::try_from(v)
                    .ok()
                    .and_then(|v| et.get(&v).copied())
                    .ok_or_else(unknown),
            }
        };
        adj.set(resolve(a)?, resolve(b)?);
    }
    ImplicationGraph::from_matrix(adj, closure)
}

pub fn load_preorder(
    path: &Path,
    corpus: &Corpus,
    closure: Closure,
) -> Result<ImplicationGraph, GraphError> {
    let f = std::fs::File::open(path)?;
    load_preorder_from(std::io::BufReader::new(f), corpus, closure)
}

/// `j ⇒ k` iff every magma of the sample satisfying `j` also satisfies `k`.
pub fn satisfaction_preorder(
    equations: &[Equation],
    magmas: &[Magma],
    exec: Execution,
) -> Result<ImplicationGraph, GraphError> {
    let n = equations.len();
    let sat: Vec<Result<Vec<u64>, StoneError>> = exec.map(n, |j| {
        let c = CompiledEquation::from_equation(&equations[j])?;
        let mut row = vec![0u64; magmas.len().div_ceil(64)];
        for (l, m) in magmas.iter().enumerate() {
            if c.holds_in(m) {
                row[l / 64] |= 1 << (l % 64);
            }
        }
        Ok(row)
    });
    let sat = sat.into_iter().collect::<Result<Vec<_>, _>>()?;
    let mut adj = BitMatrix::new(n);
    for j in 0..n {
        for k in 0..n {
            if sat[j].iter().zip(&sat[k]).all(|(a, b)| a & !b == 0) {
                adj.set(j, k);
            }
        }
    }
    ImplicationGraph::from_matrix(adj, Closure::Check)
}

/// Strongly connected components by an iterative Tarjan.
pub fn strongly_connected_components(adj: &BitMatrix) -> Vec<Vec<usize>> {
    let n = adj.len();
    const UNSEEN: usize = usize::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comps = Vec::new();
    let mut next = 0;
    // Frames: (vertex, next column to scan).
    let mut frames: Vec<(usize, usize)> = Vec::new();
    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        frames.push((root, 0));
        index[root] = next;
        low[root] = next;
        next += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut from)) = frames.last_mut() {
            match adj.next_one(v, *from) {
                Some(w) => {
                    *from = w + 1;
                    if index[w] == UNSEEN {
                        index[w] = next;
                        low[w] = next;
                        next += 1;
                        stack.push(w);
                        on_stack[w] = true;
                        frames.push((w, 0));
                    } else if on_stack[w] {
                        low[v] = low[v].min(index[w]);
                    }
                }
                None => {
                    frames.pop();
                    if let Some(&(parent, _)) = frames.last() {
                        low[parent] = low[parent].min(low[v]);
                    }
                    if low[v] == index[v] {
                        let mut comp = Vec::new();
                        loop {
                            let w = stack.pop().expect("component on stack");
                            on_stack[w] = false;
                            comp.push(w);
                            if w == v {
                                break;
                            }
                        }
                        comp.sort_unstable();
                        comps.push(comp);
                    }
                }
            }
        }
    }
    comps.sort_by_key(|c| c[0]);
    comps
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphCounts {
    pub vertices: usize,
    pub total: usize,
    pub reversible: usize,
    pub strict: usize,
    pub cliques: usize,
    pub atomic_edges: usize,
    pub vertex_atomic: usize,
    pub self_pairs: SelfPairs,
}

/// Cliques, the condensed DAG and its atomic edges.
#[derive(Clone, Debug)]
pub struct Condensation {
    /// Sorted members; cliques ordered by their smallest member.
    pub cliques: Vec<Vec<usize>>,
    pub clique_of: Vec<usize>,
    /// Strict clique implications (transitively closed, irreflexive).
    pub dag: BitMatrix,
    /// Atomic clique edges `(c, d)`, sorted.
    pub atomic_edges: Vec<(usize, usize)>,
    total: usize,
}

pub fn condense(g: &ImplicationGraph) -> Condensation {
    condense_with(g, Execution::Parallel)
}

pub fn condense_with(g: &ImplicationGraph, exec: Execution) -> Condensation {
    let cliques = strongly_connected_components(&g.adj);
    let mut clique_of = vec![0; g.num_vertices()];
    for (c, members) in cliques.iter().enumerate() {
        for &v in members {
            clique_of[v] = c;
        }
    }
    let m = cliques.len();
    let mut dag = BitMatrix::new(m);
    for (c, members) in cliques.iter().enumerate() {
        for &v in members {
            for w in g.adj.ones(v) {
                let d = clique_of[w];
                if d != c {
                    dag.set(c, d);
                }
            }
        }
    }
    // The input is a preorder, but close anyway so a non-transitive matrix
    // still yields its transitive reduction.
    let mut closed = dag.clone();
    for k in 0..m {
        for i in 0..m {
            if i != k && closed.get(i, k) {
                closed.or_row_into(k, i);
            }
        }
    }
    let dag = closed;
    let pred = dag.transpose();
    let atomic_edges: Vec<(usize, usize)> = exec
        .map(m, |c| {
            dag.ones(c)
                .filter(|&d| !BitMatrix::rows_intersect(dag.row(c), pred.row(d)))
                .map(|d| (c, d))
                .collect::<Vec<_>>()
        })
        .into_iter()
        .flatten()
        .collect();
    Condensation {
        cliques,
        clique_of,
        dag,
        atomic_edges,
        total: g.total(),
    }
}

impl Condensation {
    pub fn num_cliques(&self) -> usize {
        self.cliques.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.clique_of.len()
    }

    /// `Σ |c|²`: ordered pairs inside cliques, self-pairs included.
    pub fn reversible_with_self_pairs(&self) -> usize {
        self.cliques.iter().map(|c| c.len() * c.len()).sum()
    }

    pub fn counts(&self, convention: SelfPairs) -> GraphCounts {
        let with_self = self.reversible_with_self_pairs();
        let reversible = match convention {
            SelfPairs::Include => with_self,
            SelfPairs::Exclude => with_self - self.num_vertices(),
        };
        GraphCounts {
            vertices: self.num_vertices(),
            total: self.total,
            reversible,
            strict: self.total - reversible,
            cliques: self.num_cliques(),
            atomic_edges: self.atomic_edges.len(),
            vertex_atomic: self.vertex_atomic_count(),
            self_pairs: convention,
        }
    }

    /// Vertex pairs `(j, k)` whose cliques are joined by an atomic edge.
    pub fn vertex_atomic_count(&self) -> usize {
        self.atomic_edges
            .iter()
            .map(|&(c, d)| self.cliques[c].len() * self.cliques[d].len())
            .sum()
    }

    /// Whether `j ⇝ k` at the vertex level.
    pub fn is_atomic(&self, j: usize, k: usize) -> bool {
        self.atomic_edges
            .binary_search(&(self.clique_of[j], self.clique_of[k]))
            .is_ok()
    }

    pub fn atomic_successors(&self) -> Vec<Vec<usize>> {
        let mut succ = vec![Vec::new(); self.num_cliques()];
        for &(c, d) in &self.atomic_edges {
            succ[c].push(d);
        }
        succ
    }

    /// Clique-size histogram: `(size, number of cliques)` ascending by size.
    pub fn size_histogram(&self) -> Vec<(usize, usize)> {
        let mut h = std::collections::BTreeMap::new();
        for c in &self.cliques {
            *h.entry(c.len()).or_insert(0) += 1;
        }
        h.into_iter().collect()
    }

    /// The `top` longest paths of atomic clique edges, by edge count
    /// descending then clique sequence ascending. Every path with at least
    /// one edge is a candidate, so shorter paths follow once longer ones run
    /// out.
    pub fn longest_paths(&self, top: usize) -> Vec<Vec<usize>> {
        let succ = self.atomic_successors();
        let m = self.num_cliques();
        // Longest path (in edges) starting at each clique; atomic edges go
        // from a clique to one it strictly implies, so process in an order
        // where successors come first.
        let order = self.topological_order();
        let mut longest = vec![0usize; m];
        for &c in order.iter().rev() {
            longest[c] = succ[c].iter().map(|&d| longest[d] + 1).max().unwrap_or(0);
        }
        let max = longest.iter().copied().max().unwrap_or(0);
        let mut out = Vec::new();
        fn extend(
            u: usize,
            remaining: usize,
            succ: &[Vec<usize>],
            longest: &[usize],
            path: &mut Vec<usize>,
            out: &mut Vec<Vec<usize>>,
            top: usize,
        ) {
            if out.len() >= top {
                return;
            }
            if remaining == 0 {
                out.push(path.clone());
                return;
            }
            for &w in &succ[u] {
                if longest[w] + 1 >= remaining {
                    path.push(w);
                    extend(w, remaining - 1, succ, longest, path, out, top);
                    path.pop();
                    if out.len() >= top {
                        return;
                    }
                }
            }
        }
        for len in (1..=max).rev() {
            for start in 0..m {
                if out.len() >= top {
                    return out;
                }
                if longest[start] >= len {
                    let mut path = vec![start];
                    extend(start, len, &succ, &longest, &mut path, &mut out, top);
                }
            }
        }
        out
    }

    /// Cliques ordered so that every strict implication goes forward.
    pub fn topological_order(&self) -> Vec<usize> {
        // In a closed DAG, the number of strict predecessors is a valid key.
        let pred = self.dag.transpose();
        let mut order: Vec<usize> = (0..self.num_cliques()).collect();
        order.sort_by_key(|&c| (pred.row_count(c), c));
        order
    }

    /// Mean position of each clique's members.
    pub fn clique_centers(&self, point: impl Fn(usize) -> Vec<f64>) -> Vec<Vec<f64>> {
        self.cliques
            .iter()
            .map(|members| {
                let pts: Vec<Vec<f64>> = members.iter().map(|&v| point(v)).collect();
                let dim = pts[0].len();
                (0..dim)
                    .map(|a| crate::stats::mean(&pts.iter().map(|p| p[a]).collect::<Vec<_>>()))
                    .collect()
            })
            .collect()
    }

    /// Pairs of atomic edges that are nearly parallel and of similar length
    /// between clique centers. Ranked by `angle/angle_tol + Δ/length_tol`
    /// where `Δ = |l1 − l2| / max(l1, l2)`; zero-length edges are skipped.
    pub fn parallel_edge_candidates(
        &self,
        centers: &[Vec<f64>],
        angle_tol: f64,
        length_tol: f64,
    ) -> Result<Vec<ParallelPair>, GraphError> {
        if centers.len() != self.num_cliques() {
            return Err(GraphError::MissingCenters {
                need: self.num_cliques(),
                got: centers.len(),
            });
        }
        let vecs: Vec<(usize, Vec<f64>, f64)> = self
            .atomic_edges
            .iter()
            .enumerate()
            .filter_map(|(i, &(c, d))| {
                let v: Vec<f64> = centers[d]
                    .iter()
                    .zip(&centers[c])
                    .map(|(b, a)| b - a)
                    .collect();
                let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                (len > 0.0).then_some((i, v, len))
            })
            .collect();
        let score = |angle: f64, diff: f64| {
            let a = if angle_tol > 0.0 {
                angle / angle_tol
            } else {
                0.0
            };
            let l = if length_tol > 0.0 {
                diff / length_tol
            } else {
                0.0
            };
            a + l
        };
        let mut out = Vec::new();
        for (x, (i, u, lu)) in vecs.iter().enumerate() {
            for (j, v, lv) in &vecs[x + 1..] {
                let cos =
                    (u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() / (lu * lv)).clamp(-1.0, 1.0);
                let angle = cos.acos();
                let diff = (lu - lv).abs() / lu.max(*lv);
                if angle <= angle_tol && diff <= length_tol {
                    out.push(ParallelPair {
                        first: self.atomic_edges[*i],
                        second: self.atomic_edges[*j],
                        angle,
                        length_diff: diff,
                        score: score(angle, diff),
                    });
                }
            }
        }
        out.sort_by(|a, b| {
            a.score
                .total_cmp(&b.score)
                .then(a.first.cmp(&b.first))
                .then(a.second.cmp(&b.second))
        });
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParallelPair {
    pub first: (usize, usize),
    pub second: (usize, usize),
    /// Radians between the two direction vectors.
    pub angle: f64,
    /// Relative length difference.
    pub length_diff: f64,
    pub score: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize, pairs: &[(usize, usize)]) -> ImplicationGraph {
        ImplicationGraph::from_pairs(n, pairs.iter().copied(), Closure::Transitive).unwrap()
    }

    #[test]
    fn self_loops_only() {
        let g = graph(4, &[]);
        let c = condense(&g);
        let counts = c.counts(SelfPairs::Include);
        assert_eq!(
            (
                counts.total,
                counts.strict,
                counts.cliques,
                counts.atomic_edges
            ),
            (4, 0, 4, 0)
        );
        assert_eq!(c.vertex_atomic_count(), 0);
    }

    #[test]
    fn chain_closure_counts() {
        let g = graph(3, &[(0, 1), (1, 2)]);
        assert_eq!(g.total(), 6);
        assert!(g.implies(0, 2));
        assert!(matches!(
            ImplicationGraph::from_pairs(3, [(0, 1), (1, 2)], Closure::Check),
            Err(GraphError::NotTransitive { a: 0, b: 1, c: 2 })
        ));
    }

    #[test]
    fn mutual_pair_is_one_clique() {
        let c = condense(&graph(2, &[(0, 1), (1, 0)]));
        assert_eq!(c.cliques, vec![vec![0, 1]]);
        assert_eq!(c.counts(SelfPairs::Include).strict, 0);
        assert_eq!(c.counts(SelfPairs::Exclude).reversible, 2);
        assert_eq!(c.counts(SelfPairs::Exclude).strict, 2);
    }

    #[test]
    fn diamond_reduction_and_paths() {
        let c = condense(&graph(4, &[(0, 1), (0, 2), (1, 3), (2, 3), (0, 3)]));
        assert_eq!(c.atomic_edges, vec![(0, 1), (0, 2), (1, 3), (2, 3)]);
        assert_eq!(c.longest_paths(1), vec![vec![0, 1, 3]]);
        assert_eq!(c.longest_paths(2), vec![vec![0, 1, 3], vec![0, 2, 3]]);
        assert_eq!(c.longest_paths(3)[2], vec![0, 1]);
    }

    #[test]
    fn chain_of_five() {
        let c = condense(&graph(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]));
        assert_eq!(c.longest_paths(1), vec![vec![0, 1, 2, 3, 4]]);
    }

    #[test]
    fn product_rule_for_vertex_atomic_steps() {
        // Clique {0,1} ⇒ clique {2,3,4}.
        let g = graph(5, &[(0, 1), (1, 0), (2, 3), (3, 4), (4, 2), (0, 2)]);
        let c = condense(&g);
        assert_eq!(c.atomic_edges, vec![(0, 1)]);
        assert_eq!(c.vertex_atomic_count(), 6);
        assert!(c.is_atomic(1, 4) && !c.is_atomic(4, 1));
        assert_eq!(c.size_histogram(), vec![(2, 1), (3, 1)]);
    }

    #[test]
    fn loads_both_id_kinds() {
        let corpus = crate::enumerate::enumerate_corpus(1).unwrap();
        let g = load_preorder_from(
            "# ids: corpus\n1 0\n1 1\n".as_bytes(),
            &corpus,
            Closure::Check,
        )
        .unwrap();
        assert_eq!(g.total(), 8);
        assert!(matches!(
            load_preorder_from("9 0\n".as_bytes(), &corpus, Closure::Check),
            Err(GraphError::UnknownIdentifier { line: 1, .. })
        ));
        assert!(matches!(
            load_preorder_from("1 0 3\n".as_bytes(), &corpus, Closure::Check),
            Err(GraphError::Malformed { line: 1 })
        ));
        let corpus = corpus
            .load_et_numbering_from("x = x <-> 1\nx = y <-> 2\n".as_bytes())
            .unwrap();
        let g =
            load_preorder_from("# ids: et\nEqn2 1\n".as_bytes(), &corpus, Closure::Check).unwrap();
        assert!(g.implies(1, 0));
        assert!(matches!(
            load_preorder_from("# ids: et\n3 1\n".as_bytes(), &corpus, Closure::Check),
            Err(GraphError::UnknownIdentifier { .. })
        ));
    }

    #[test]
    fn parallel_translated_copies() {
        let c = condense(&graph(4, &[(0, 1), (2, 3)]));
        let centers = vec![
            vec![0.0, 0.0, 0.0],
            vec![1.0, 1.0, 0.0],
            vec![5.0, 0.0, 0.0],
            vec![6.0, 1.0, 0.0],
        ];
        let p = c.parallel_edge_candidates(&centers, 0.1, 0.1).unwrap();
        assert_eq!(p.len(), 1);
        assert!(p[0].angle.abs() < 1e-7);
        let ortho = vec![
            vec![0.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![5.0, 0.0, 0.0],
            vec![5.0, 1.0, 0.0],
        ];
        assert!(c
            .parallel_edge_candidates(&ortho, 1.5, 1.0)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn satisfaction_preorder_on_projections() {
        let eqs: Vec<Equation> = ["x = x", "x = y", "x = x * y"]
            .iter()
            .map(|s| s.parse().unwrap())
            .collect();
        let mags = vec![
            Magma::left_projection(2).unwrap(),
            Magma::right_projection(2).unwrap(),
        ];
        let g = satisfaction_preorder(&eqs, &mags, Execution::Sequential).unwrap();
        // x = y holds nowhere, so it implies everything.
        let i = |s: &str| eqs.iter().position(|e| *e == s.parse().unwrap()).unwrap();
        assert!(g.implies(i("x = y"), i("x = x * y")));
        assert!(!g.implies(i("x = x"), i("x = x * y")));
        assert!(g.implies(i("x = x * y"), i("x = x")));
    }
}
