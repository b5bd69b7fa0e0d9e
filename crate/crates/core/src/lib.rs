//! Latent space of magma equational theories.
//!
//! The crate enumerates every magma law with at most a fixed number of
//! operation instances, samples finite magmas, measures each law against
//! each magma through its Stone pairing (the probability that a uniformly
//! random tuple satisfies the law), and embeds the laws in three dimensions
//! with PCA. On the proof side it condenses an implication preorder into its
//! reversible cliques and atomic steps, measures that graph inside the latent
//! space, and replays Herbrand-style proofs by bounded rewriting.
//!
//! Module map:
//!
//! - [`terms`]: term and equation syntax, canonical forms, conjugation.
//! - [`enumerate`]: the corpus of canonical equations.
//! - [`magma`]: finite magmas, seeded sampling, evaluation.
//! - [`stone`]: Stone pairings, the feature matrix and its spectra.
//! - [`pca`]: centering, principal components, sign conventions, regressions.
//! - [`graph`]: implication preorder, cliques, atomic edges, longest paths.
//! - [`geometry`]: edge lengths and clique statistics in the latent space.
//! - [`herbrand`]: Herbrand proofs and their verification.
//! - [`pipeline`]: staged, cached execution of the whole chain.
//!
//! Data-parallel loops run on rayon when the `parallel` feature is enabled
//! (the default) and fall back to plain iterators otherwise; see [`par`].

pub mod bitset;
pub mod enumerate;
pub mod geometry;
pub mod graph;
pub mod herbrand;
pub mod magma;
pub mod par;
pub mod pca;
pub mod pipeline;
pub mod rng;
pub mod stats;
pub mod stone;
pub mod terms;

pub use enumerate::{enumerate_corpus, Corpus};
pub use magma::{sample_magmas, Magma, MagmaSample};
pub use pca::{pca_embed, LatentEmbedding};
pub use stone::{build_feature_matrix, FeatureMatrix, StoneConfig};
pub use terms::{Equation, Term};

/// Tool version embedded in every artifact header.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
