//! The implication graph measured inside the latent space.
//!
//! Distances are Euclidean, by default between 3D latent coordinates; a
//! [`PointSet`] can also be built from the raw feature rows for comparison.

use std::collections::BTreeSet;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Condensation, ImplicationGraph, SelfPairs};
use crate::par::Execution;
use crate::pca::LatentEmbedding;
use crate::stats::{mean, Summary};
use crate::stone::FeatureMatrix;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("{points} points for a graph on {vertices} vertices")]
    SizeMismatch { points: usize, vertices: usize },
    #[error("point index {0} out of range")]
    BadIndex(usize),
}

/// Points in a common Euclidean space, one per vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    pub dim: usize,
    /// Row-major coordinates.
    pub coords: Vec<f64>,
}

impl PointSet {
    pub fn new(dim: usize, coords: Vec<f64>) -> PointSet {
        assert!(dim > 0 && coords.len().is_multiple_of(dim));
        PointSet { dim, coords }
    }

    pub fn from_embedding(emb: &LatentEmbedding) -> PointSet {
        PointSet::new(emb.k, emb.coords.clone())
    }

    /// The embedded points of the given rows, in that order.
    pub fn from_embedding_subset(
        emb: &LatentEmbedding,
        rows: &[usize],
    ) -> Result<PointSet, GeometryError> {
        let mut coords = Vec::with_capacity(rows.len() * emb.k);
        for &r in rows {
            if r >= emb.rows() {
                return Err(GeometryError::BadIndex(r));
            }
            coords.extend_from_slice(emb.point(r));
        }
        Ok(PointSet::new(emb.k, coords))
    }

    /// Raw feature vectors: distances in the full `n`-dimensional space.
    pub fn from_features(f: &FeatureMatrix) -> PointSet {
        PointSet::new(f.cols(), f.values().to_vec())
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        distance(self.point(i), self.point(j))
    }
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Length statistics of the three edge classes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeStats {
    pub self_pairs: SelfPairs,
    pub reversible: Summary,
    pub atomic: Summary,
    pub strict: Summary,
}

impl EdgeStats {
    pub fn atomic_over_reversible(&self) -> f64 {
        self.atomic.mean / self.reversible.mean
    }

    pub fn strict_over_reversible(&self) -> f64 {
        self.strict.mean / self.reversible.mean
    }

    /// `class,count,mean,std,min,q25,q50,q75,max`.
    pub fn write_csv(&self, mut out: impl Write, header: &str) -> std::io::Result<()> {
        for line in header.lines() {
            writeln!(out, "# {line}")?;
        }
        writeln!(
            out,
            "# self-pairs: {}",
            match self.self_pairs {
                SelfPairs::Include => "include",
                SelfPairs::Exclude => "exclude",
            }
        )?;
        writeln!(out, "class,count,mean,std,min,q25,q50,q75,max")?;
        for (name, s) in [
            ("reversible", &self.reversible),
            ("atomic", &self.atomic),
            ("strict", &self.strict),
        ] {
            writeln!(
                out,
                "{name},{},{},{},{},{},{},{},{}",
                s.count, s.mean, s.std, s.min, s.q25, s.q50, s.q75, s.max
            )?;
        }
        Ok(())
    }
}

/// Euclidean lengths of every vertex-level edge, grouped by class.
///
/// Reversible: ordered pairs inside a clique. Atomic: pairs whose cliques
/// are joined by an atomic edge. Strict: implications between different
/// cliques. Self-pairs (length 0) go to the reversible or the strict class
/// according to `convention`.
pub fn edge_lengths(
    points: &PointSet,
    g: &ImplicationGraph,
    c: &Condensation,
    convention: SelfPairs,
) -> Result<EdgeStats, GeometryError> {
    edge_lengths_with(points, g, c, convention, Execution::Parallel)
}

pub fn edge_lengths_with(
    points: &PointSet,
    g: &ImplicationGraph,
    c: &Condensation,
    convention: SelfPairs,
    exec: Execution,
) -> Result<EdgeStats, GeometryError> {
    let n = g.num_vertices();
    if points.len() != n {
        return Err(GeometryError::SizeMismatch {
            points: points.len(),
            vertices: n,
        });
    }
    let atomic_succ = c.atomic_successors();
    let per_vertex = exec.map(n, |j| {
        let cj = c.clique_of[j];
        let (mut rev, mut strict, mut atomic) = (Vec::new(), Vec::new(), Vec::new());
        for k in g.matrix().ones(j) {
            let d = points.distance(j, k);
            if j == k {
                match convention {
                    SelfPairs::Include => rev.push(d),
                    SelfPairs::Exclude => strict.push(d),
                }
            } else if c.clique_of[k] == cj {
                rev.push(d);
            } else {
                strict.push(d);
            }
        }
        for &dst in &atomic_succ[cj] {
            for &k in &c.cliques[dst] {
                atomic.push(points.distance(j, k));
            }
        }
        (rev, atomic, strict)
    });
    let (mut rev, mut atomic, mut strict) = (Vec::new(), Vec::new(), Vec::new());
    for (r, a, s) in per_vertex {
        rev.extend(r);
        atomic.extend(a);
        strict.extend(s);
    }
    Ok(EdgeStats {
        self_pairs: convention,
        reversible: Summary::of(&mut rev),
        atomic: Summary::of(&mut atomic),
        strict: Summary::of(&mut strict),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CliqueInfo {
    pub members: Vec<usize>,
    pub center: Vec<f64>,
    /// Mean member-to-center distance.
    pub spread: f64,
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CliqueGeometry {
    pub cliques: Vec<CliqueInfo>,
    /// `(size, number of cliques)`, largest size first.
    pub size_histogram: Vec<(usize, usize)>,
}

/// Default ball radius per clique member in the scene export.
pub const RADIUS_PER_MEMBER: f64 = 0.002;

pub fn clique_geometry(
    points: &PointSet,
    c: &Condensation,
    radius_per_member: f64,
) -> Result<CliqueGeometry, GeometryError> {
    if points.len() != c.num_vertices() {
        return Err(GeometryError::SizeMismatch {
            points: points.len(),
            vertices: c.num_vertices(),
        });
    }
    let cliques = c
        .cliques
        .iter()
        .map(|members| {
            let center: Vec<f64> = (0..points.dim)
                .map(|a| {
                    mean(
                        &members
                            .iter()
                            .map(|&v| points.point(v)[a])
                            .collect::<Vec<_>>(),
                    )
                })
                .collect();
            let spread = mean(
                &members
                    .iter()
                    .map(|&v| distance(points.point(v), &center))
                    .collect::<Vec<_>>(),
            );
            CliqueInfo {
                members: members.clone(),
                center,
                spread,
                radius: radius_per_member * members.len() as f64,
            }
        })
        .collect();
    let mut size_histogram = c.size_histogram();
    size_histogram.reverse();
    Ok(CliqueGeometry {
        cliques,
        size_histogram,
    })
}

impl CliqueGeometry {
    /// `clique,size,x,y,z,spread,radius,members` (members `;`-separated).
    pub fn write_csv(&self, mut out: impl Write, header: &str) -> std::io::Result<()> {
        for line in header.lines() {
            writeln!(out, "# {line}")?;
        }
        writeln!(out, "clique,size,x,y,z,spread,radius,members")?;
        for (i, c) in self.cliques.iter().enumerate() {
            let at = |a: usize| c.center.get(a).copied().unwrap_or(0.0);
            let members: Vec<String> = c.members.iter().map(|m| m.to_string()).collect();
            writeln!(
                out,
                "{i},{},{},{},{},{},{},{}",
                c.members.len(),
                at(0),
                at(1),
                at(2),
                c.spread,
                c.radius,
                members.join(";")
            )?;
        }
        Ok(())
    }

    /// Balls at clique centers and arrows along atomic edges.
    pub fn write_scene(
        &self,
        c: &Condensation,
        mut out: impl Write,
        header: &str,
    ) -> std::io::Result<()> {
        for line in header.lines() {
            writeln!(out, "# {line}")?;
        }
        writeln!(out, "kind,x1,y1,z1,x2,y2,z2,radius")?;
        let at = |v: &[f64], a: usize| v.get(a).copied().unwrap_or(0.0);
        for cl in &self.cliques {
            let p = &cl.center;
            writeln!(
                out,
                "ball,{},{},{},,,,{}",
                at(p, 0),
                at(p, 1),
                at(p, 2),
                cl.radius
            )?;
        }
        for &(s, d) in &c.atomic_edges {
            let (p, q) = (&self.cliques[s].center, &self.cliques[d].center);
            writeln!(
                out,
                "arrow,{},{},{},{},{},{},",
                at(p, 0),
                at(p, 1),
                at(p, 2),
                at(q, 0),
                at(q, 1),
                at(q, 2)
            )?;
        }
        Ok(())
    }
}

/// Strict vertex-level implications grouped by the sizes of the source and
/// target cliques.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossCliqueMatrix {
    /// Distinct clique sizes, largest first; rows and columns follow it.
    pub sizes: Vec<usize>,
    pub counts: Vec<Vec<u64>>,
    pub self_pairs: SelfPairs,
}

pub fn cross_clique_edge_matrix(c: &Condensation, convention: SelfPairs) -> CrossCliqueMatrix {
    let sizes: Vec<usize> = c
        .cliques
        .iter()
        .map(|m| m.len())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .rev()
        .collect();
    let slot = |s: usize| sizes.iter().position(|&x| x == s).expect("size present");
    let mut counts = vec![vec![0u64; sizes.len()]; sizes.len()];
    for (src, members) in c.cliques.iter().enumerate() {
        let a = slot(members.len());
        for dst in c.dag.ones(src) {
            let b = slot(c.cliques[dst].len());
            counts[a][b] += (members.len() * c.cliques[dst].len()) as u64;
        }
        if convention == SelfPairs::Exclude {
            counts[a][a] += members.len() as u64;
        }
    }
    CrossCliqueMatrix {
        sizes,
        counts,
        self_pairs: convention,
    }
}

impl CrossCliqueMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn get(&self, from_size: usize, to_size: usize) -> Option<u64> {
        let a = self.sizes.iter().position(|&s| s == from_size)?;
        let b = self.sizes.iter().position(|&s| s == to_size)?;
        Some(self.counts[a][b])
    }

    pub fn write_csv(&self, mut out: impl Write, header: &str) -> std::io::Result<()> {
        for line in header.lines() {
            writeln!(out, "# {line}")?;
        }
        let cols: Vec<String> = self.sizes.iter().map(|s| s.to_string()).collect();
        writeln!(out, "from\\to,{}", cols.join(","))?;
        for (s, row) in self.sizes.iter().zip(&self.counts) {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{s},{}", cells.join(","))?;
        }
        Ok(())
    }
}
