//! Staged, cached execution of the whole chain.
//!
//! Stages run in dependency order:
//!
//! ```text
//! corpus ─┬─────────────► matrix ──► pca ──┐
//! sample ─┴─► (graph) ───────────────────► geometry
//! ```
//!
//! Each stage owns a directory under the output directory and a stamp file
//! `<stage>/stage.json` holding its key: the SHA-256 of the tool version, the
//! part of the configuration the stage reads, the keys of the stages it
//! consumes, and the contents of its input files. A stage whose stamp matches
//! is loaded instead of recomputed, so changing `pca.k` leaves the feature
//! matrix alone. A stamp that does not match is stale: the stage is rerun and
//! the run log says so. Every text artifact starts with `#` lines naming the
//! tool version, the stage and its key; binary artifacts carry the same in a
//! JSON sidecar.
//!
//! All randomness derives from `sample.seed`: magma draws, Monte Carlo
//! tuples and the eigensolver start block use separate substreams of it.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::enumerate::{enumerate_corpus, Corpus, CorpusError};
use crate::geometry::{
    clique_geometry, cross_clique_edge_matrix, edge_lengths_with, GeometryError, PointSet,
    RADIUS_PER_MEMBER,
};
use crate::graph::{
    condense_with, load_preorder_from, satisfaction_preorder, Closure, Condensation, GraphError,
    ImplicationGraph, SelfPairs,
};
use crate::magma::{sample_magmas_with, MagmaError, MagmaSample};
use crate::par::Execution;
use crate::pca::{
    fix_signs, pca_embed_with, regress, Centering, LatentEmbedding, PcaConfig, PcaError,
    SPECTRUM_LEN,
};
use crate::stats::pearson;
use crate::stone::{
    build_feature_matrix_with, FeatureMatrix, PairingMode, RowMode, StoneConfig, StoneError,
    DEFAULT_BINS, DEFAULT_EXACT_BUDGET, DEFAULT_MC_SAMPLES,
};
use crate::VERSION;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot parse configuration: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("stage `{stage}` needs `{needed}`, which is neither selected nor cached with a matching key")]
    MissingDependency { stage: Stage, needed: Stage },
    #[error("artifact {path} is unreadable: {reason}")]
    Artifact { path: PathBuf, reason: String },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Magma(#[from] MagmaError),
    #[error(transparent)]
    Stone(#[from] StoneError),
    #[error(transparent)]
    Pca(#[from] PcaError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Corpus,
    Sample,
    Matrix,
    Pca,
    Graph,
    Geometry,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Corpus,
        Stage::Sample,
        Stage::Matrix,
        Stage::Pca,
        Stage::Graph,
        Stage::Geometry,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Corpus => "corpus",
            Stage::Sample => "sample",
            Stage::Matrix => "matrix",
            Stage::Pca => "pca",
            Stage::Graph => "graph",
            Stage::Geometry => "geometry",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSection {
    pub max_ops: usize,
    /// Optional `equation <-> number` file giving the external numbering.
    pub numbering: Option<PathBuf>,
}

impl Default for CorpusSection {
    fn default() -> Self {
        CorpusSection {
            max_ops: 4,
            numbering: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleSection {
    pub n: usize,
    /// Magma order (`N`).
    #[serde(alias = "N")]
    pub size: usize,
    pub seed: u64,
    /// Draw `n / 2` magmas and add the opposite of each.
    pub symmetric: bool,
}

impl Default for SampleSection {
    fn default() -> Self {
        SampleSection {
            n: 200,
            size: 4,
            seed: 0,
            symmetric: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StoneSection {
    pub mode: PairingMode,
    pub exact_budget: u64,
    pub mc_samples: u32,
}

impl Default for StoneSection {
    fn default() -> Self {
        StoneSection {
            mode: PairingMode::Auto,
            exact_budget: DEFAULT_EXACT_BUDGET,
            mc_samples: DEFAULT_MC_SAMPLES,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PcaSection {
    pub k: usize,
    pub centering: Centering,
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Orient the axes with expectation, variance and conjugation.
    pub fix_signs: bool,
}

impl Default for PcaSection {
    fn default() -> Self {
        let d = PcaConfig::default();
        PcaSection {
            k: d.k,
            centering: d.centering,
            tolerance: d.tolerance,
            max_iterations: d.max_iterations,
            fix_signs: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphSection {
    /// Preorder file (`j k` per line). Without it the graph is the
    /// satisfaction preorder of the sample on the laws with at most
    /// `synthetic_max_ops` operations.
    pub path: Option<PathBuf>,
    pub closure: Closure,
    pub self_pairs: SelfPairs,
    pub synthetic_max_ops: usize,
    /// Number of longest atomic paths listed in the report.
    pub longest: usize,
}

impl Default for GraphSection {
    fn default() -> Self {
        GraphSection {
            path: None,
            closure: Closure::Check,
            self_pairs: SelfPairs::Include,
            synthetic_max_ops: 2,
            longest: 5,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistanceSpace {
    /// The PCA coordinates.
    #[default]
    Latent,
    /// The raw Stone-pairing vectors.
    Features,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometrySection {
    pub space: DistanceSpace,
    pub radius_per_member: f64,
}

impl Default for GeometrySection {
    fn default() -> Self {
        GeometrySection {
            space: DistanceSpace::Latent,
            radius_per_member: RADIUS_PER_MEMBER,
        }
    }
}

/// Everything a pipeline run reads. Loaded from TOML; every section and key
/// is optional.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub output: PathBuf,
    pub stages: Vec<Stage>,
    pub corpus: CorpusSection,
    pub sample: SampleSection,
    pub stone: StoneSection,
    pub pca: PcaSection,
    pub graph: GraphSection,
    pub geometry: GeometrySection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            output: PathBuf::from("out"),
            stages: Stage::ALL.to_vec(),
            corpus: CorpusSection::default(),
            sample: SampleSection::default(),
            stone: StoneSection::default(),
            pca: PcaSection::default(),
            graph: GraphSection::default(),
            geometry: GeometrySection::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<PipelineConfig, PipelineError> {
        let c: PipelineConfig = toml::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    /// Loads a config file. Relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<PipelineConfig, PipelineError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let mut c = PipelineConfig::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        rebase(&mut c.output);
        if let Some(p) = c.corpus.numbering.as_mut() {
            rebase(p);
        }
        if let Some(p) = c.graph.path.as_mut() {
            rebase(p);
        }
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if self.stages.is_empty() {
            return bad("no stages selected".into());
        }
        if self.sample.n == 0 {
            return bad("sample.n must be positive".into());
        }
        if self.sample.size == 0 || self.sample.size > crate::magma::MAX_SIZE {
            return bad(format!(
                "sample.size must be in 1..={}",
                crate::magma::MAX_SIZE
            ));
        }
        if self.sample.symmetric && self.sample.n % 2 == 1 {
            return bad("a symmetric sample needs an even sample.n".into());
        }
        if self.pca.k == 0 || self.pca.k > crate::pca::MAX_K {
            return bad(format!("pca.k must be in 1..={}", crate::pca::MAX_K));
        }
        if self.pca.tolerance.is_nan() || self.pca.tolerance <= 0.0 || self.pca.max_iterations == 0
        {
            return bad("pca.tolerance and pca.max_iterations must be positive".into());
        }
        if self.stone.mc_samples == 0 {
            return bad("stone.mc_samples must be positive".into());
        }
        if self.graph.path.is_none() && self.graph.synthetic_max_ops > self.corpus.max_ops {
            return bad("graph.synthetic_max_ops exceeds corpus.max_ops".into());
        }
        if self.geometry.radius_per_member.is_nan() || self.geometry.radius_per_member < 0.0 {
            return bad("geometry.radius_per_member must be non-negative".into());
        }
        Ok(())
    }

    /// Key of the whole configuration (output directory excluded).
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = PathBuf::new();
        sha256_hex(
            serde_json::to_string(&c)
                .expect("config serializes")
                .as_bytes(),
        )
    }

    fn stone_config(&self) -> StoneConfig {
        StoneConfig {
            mode: self.stone.mode,
            exact_budget: self.stone.exact_budget,
            mc_samples: self.stone.mc_samples,
            mc_seed: self.sample.seed,
        }
    }

    fn pca_config(&self) -> PcaConfig {
        PcaConfig {
            k: self.pca.k,
            centering: self.pca.centering,
            tolerance: self.pca.tolerance,
            max_iterations: self.pca.max_iterations,
            seed: self.sample.seed,
        }
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// What a run produced: the deterministic report and a human log noting
/// cache hits and stale stages.
#[derive(Clone, Debug)]
pub struct PipelineRun {
    pub report: Value,
    pub log: Vec<String>,
    pub output: PathBuf,
}

pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineRun, PipelineError> {
    run_pipeline_with(config, Execution::Parallel)
}

pub fn run_pipeline_with(
    config: &PipelineConfig,
    exec: Execution,
) -> Result<PipelineRun, PipelineError> {
    config.validate()?;
    let mut ctx = Ctx {
        config,
        exec,
        out: config.output.clone(),
        keys: BTreeMap::new(),
        summaries: BTreeMap::new(),
        log: Vec::new(),
    };
    fs::create_dir_all(&ctx.out).map_err(io_err(&ctx.out))?;
    let config_path = ctx.out.join("config.toml");
    let config_text = toml::to_string(config).map_err(|e| PipelineError::Config(e.to_string()))?;
    fs::write(&config_path, config_text).map_err(io_err(&config_path))?;

    let selected = |s: Stage| config.stages.contains(&s);
    let needed = |s: Stage| -> bool {
        // A stage is loaded or computed when selected or when a later
        // selected stage consumes it.
        selected(s)
            || Stage::ALL
                .iter()
                .any(|&t| selected(t) && depends_on(config, t, s))
    };

    let corpus = if needed(Stage::Corpus) {
        Some(ctx.corpus()?)
    } else {
        None
    };
    let sample = if needed(Stage::Sample) {
        Some(ctx.sample()?)
    } else {
        None
    };
    let matrix = if needed(Stage::Matrix) {
        Some(ctx.matrix(
            corpus.as_ref().expect("corpus precedes matrix"),
            sample.as_ref().expect("sample precedes matrix"),
        )?)
    } else {
        None
    };
    let emb = if needed(Stage::Pca) {
        Some(ctx.pca(
            corpus.as_ref().expect("corpus precedes pca"),
            matrix.as_ref().expect("matrix precedes pca"),
        )?)
    } else {
        None
    };
    let graph = if needed(Stage::Graph) {
        Some(ctx.graph(
            corpus.as_ref().expect("corpus precedes graph"),
            sample.as_ref(),
        )?)
    } else {
        None
    };
    if needed(Stage::Geometry) {
        let (rows, g, c) = graph.as_ref().expect("graph precedes geometry");
        ctx.geometry(
            emb.as_ref().expect("pca precedes geometry"),
            matrix.as_ref(),
            rows,
            g,
            c,
        )?;
    }

    let mut stages = serde_json::Map::new();
    for s in Stage::ALL {
        if selected(s) {
            if let Some(v) = ctx.summaries.get(&s) {
                stages.insert(s.name().to_string(), v.clone());
            }
        }
    }
    let report = json!({
        "version": VERSION,
        "config_hash": config.hash(),
        "stages": stages,
    });
    let report_path = ctx.out.join("report.json");
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    fs::write(&report_path, text).map_err(io_err(&report_path))?;
    Ok(PipelineRun {
        report,
        log: ctx.log,
        output: ctx.out,
    })
}

fn depends_on(config: &PipelineConfig, stage: Stage, on: Stage) -> bool {
    let direct: &[Stage] = match stage {
        Stage::Corpus | Stage::Sample => &[],
        Stage::Matrix => &[Stage::Corpus, Stage::Sample],
        Stage::Pca => &[Stage::Corpus, Stage::Matrix],
        Stage::Graph if config.graph.path.is_some() => &[Stage::Corpus],
        Stage::Graph => &[Stage::Corpus, Stage::Sample],
        Stage::Geometry if config.geometry.space == DistanceSpace::Features => {
            &[Stage::Pca, Stage::Graph, Stage::Matrix]
        }
        Stage::Geometry => &[Stage::Pca, Stage::Graph],
    };
    direct.iter().any(|&d| d == on || depends_on(config, d, on))
}

#[derive(Serialize, Deserialize)]
struct Stamp {
    stage: Stage,
    version: String,
    key: String,
    summary: Value,
}

struct Ctx<'a> {
    config: &'a PipelineConfig,
    exec: Execution,
    out: PathBuf,
    keys: BTreeMap<Stage, String>,
    summaries: BTreeMap<Stage, Value>,
    log: Vec<String>,
}

impl Ctx<'_> {
    fn dir(&self, stage: Stage) -> PathBuf {
        self.out.join(stage.name())
    }

    fn header(&self, stage: Stage) -> String {
        format!(
            "magmaspace {VERSION}\nstage: {stage}\nkey: {}",
            self.keys[&stage]
        )
    }

    fn file_digest(path: &Path) -> Result<String, PipelineError> {
        Ok(sha256_hex(&fs::read(path).map_err(io_err(path))?))
    }

    /// Computes the stage key and reports whether a matching stamp exists.
    fn begin(
        &mut self,
        stage: Stage,
        params: Value,
        upstream: &[Stage],
        files: &[&Path],
    ) -> Result<bool, PipelineError> {
        let upstream: BTreeMap<&str, &String> =
            upstream.iter().map(|s| (s.name(), &self.keys[s])).collect();
        let files = files
            .iter()
            .map(|p| Self::file_digest(p))
            .collect::<Result<Vec<_>, _>>()?;
        let material = json!({ "version": VERSION, "stage": stage, "params": params, "upstream": upstream, "files": files });
        let key = sha256_hex(material.to_string().as_bytes());
        self.keys.insert(stage, key.clone());
        let stamp_path = self.dir(stage).join("stage.json");
        let selected = self.config.stages.contains(&stage);
        let stamp: Option<Stamp> = fs::read(&stamp_path)
            .ok()
            .and_then(|b| serde_json::from_slice(&b).ok());
        match stamp {
            Some(s) if s.key == key => {
                self.log.push(format!("{stage}: cached ({})", &key[..12]));
                self.summaries.insert(stage, s.summary);
                Ok(true)
            }
            Some(s) if !selected => {
                let _ = s;
                Err(PipelineError::MissingDependency {
                    stage: self.first_consumer(stage),
                    needed: stage,
                })
            }
            None if !selected => Err(PipelineError::MissingDependency {
                stage: self.first_consumer(stage),
                needed: stage,
            }),
            Some(s) => {
                self.log.push(format!(
                    "{stage}: stale cache (key {} != {}), recomputing",
                    &s.key[..12.min(s.key.len())],
                    &key[..12]
                ));
                Ok(false)
            }
            None => {
                self.log
                    .push(format!("{stage}: computing ({})", &key[..12]));
                Ok(false)
            }
        }
    }

    fn first_consumer(&self, stage: Stage) -> Stage {
        Stage::ALL
            .into_iter()
            .find(|&t| self.config.stages.contains(&t) && depends_on(self.config, t, stage))
            .unwrap_or(stage)
    }

    fn finish(&mut self, stage: Stage, summary: Value) -> Result<(), PipelineError> {
        let stamp = Stamp {
            stage,
            version: VERSION.to_string(),
            key: self.keys[&stage].clone(),
            summary: summary.clone(),
        };
        let path = self.dir(stage).join("stage.json");
        let mut text = serde_json::to_string_pretty(&stamp).expect("stamp serializes");
        text.push('\n');
        fs::write(&path, text).map_err(io_err(&path))?;
        self.summaries.insert(stage, summary);
        Ok(())
    }

    fn make_dir(&self, stage: Stage) -> Result<PathBuf, PipelineError> {
        let dir = self.dir(stage);
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        // A half-written stage must not look cached.
        let stamp = dir.join("stage.json");
        if stamp.exists() {
            fs::remove_file(&stamp).map_err(io_err(&stamp))?;
        }
        Ok(dir)
    }

    fn write(&self, path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), PipelineError> {
        fs::write(path, bytes).map_err(io_err(path))
    }

    fn open(path: &Path) -> Result<BufReader<fs::File>, PipelineError> {
        Ok(BufReader::new(fs::File::open(path).map_err(io_err(path))?))
    }

    fn corpus(&mut self) -> Result<Corpus, PipelineError> {
        let c = &self.config.corpus;
        let files: Vec<&Path> = c.numbering.as_deref().into_iter().collect();
        let cached = self.begin(Stage::Corpus, json!({ "max_ops": c.max_ops }), &[], &files)?;
        let path = self.dir(Stage::Corpus).join("corpus.txt");
        let mut corpus = if cached {
            Corpus::read(Self::open(&path)?)?
        } else {
            self.make_dir(Stage::Corpus)?;
            let corpus = enumerate_corpus(c.max_ops)?;
            let mut buf = Vec::new();
            corpus
                .write(&mut buf, &self.header(Stage::Corpus))
                .map_err(io_err(&path))?;
            self.write(&path, buf)?;
            let hist: BTreeMap<String, usize> = corpus
                .signature_histogram()
                .into_iter()
                .map(|(s, n)| (format!("({},{})", s.0, s.1), n))
                .collect();
            let summary = json!({
                "max_ops": c.max_ops,
                "equations": corpus.len(),
                "self_conjugate": corpus.self_conjugate_count(),
                "signature_histogram": hist,
            });
            self.finish(Stage::Corpus, summary)?;
            corpus
        };
        if let Some(p) = &c.numbering {
            corpus = corpus.load_et_numbering(p)?;
        }
        Ok(corpus)
    }

    fn sample(&mut self) -> Result<MagmaSample, PipelineError> {
        let s = self.config.sample.clone();
        let cached = self.begin(
            Stage::Sample,
            serde_json::to_value(&s).expect("serializes"),
            &[],
            &[],
        )?;
        let path = self.dir(Stage::Sample).join("magmas.txt");
        if cached {
            return Ok(MagmaSample::read(Self::open(&path)?)?);
        }
        self.make_dir(Stage::Sample)?;
        let sample = sample_magmas_with(s.n, s.size, s.seed, s.symmetric, self.exec)?;
        let mut buf = Vec::new();
        sample
            .write(&mut buf, &self.header(Stage::Sample))
            .map_err(io_err(&path))?;
        self.write(&path, buf)?;
        let commutative = sample.magmas.iter().filter(|m| m.is_commutative()).count();
        let summary = json!({
            "n": sample.len(),
            "size": sample.size(),
            "seed": s.seed,
            "symmetric": s.symmetric,
            "opposite_closed": sample.is_opposite_closed(),
            "commutative": commutative,
        });
        self.finish(Stage::Sample, summary)?;
        Ok(sample)
    }

    fn matrix(
        &mut self,
        corpus: &Corpus,
        sample: &MagmaSample,
    ) -> Result<FeatureMatrix, PipelineError> {
        let stone = self.config.stone_config();
        let cached = self.begin(
            Stage::Matrix,
            serde_json::to_value(&stone).expect("serializes"),
            &[Stage::Corpus, Stage::Sample],
            &[],
        )?;
        let dir = self.dir(Stage::Matrix);
        let (bin, frac) = (dir.join("features.bin"), dir.join("features.frac"));
        if cached {
            let fractions = if frac.exists() {
                Some(Self::open(&frac)?)
            } else {
                None
            };
            return Ok(FeatureMatrix::read(Self::open(&bin)?, fractions)?);
        }
        self.make_dir(Stage::Matrix)?;
        let f = build_feature_matrix_with(corpus.equations(), &sample.magmas, &stone, self.exec)?;
        let mut buf = Vec::new();
        f.write_binary(&mut buf).map_err(io_err(&bin))?;
        self.write(&bin, buf)?;
        let mut buf = Vec::new();
        if f.write_fractions(&mut buf).map_err(io_err(&frac))? {
            self.write(&frac, buf)?;
        } else if frac.exists() {
            fs::remove_file(&frac).map_err(io_err(&frac))?;
        }
        let (exact, mc) = match f.fractions() {
            Some(fr) => {
                let exact = fr.modes.iter().filter(|&&m| m == RowMode::Exact).count();
                (exact, fr.modes.len() - exact)
            }
            None => (0, f.rows()),
        };
        let (expectation, variance) = f.all_expectation_variance();
        let meta = json!({
            "version": VERSION,
            "stage": Stage::Matrix,
            "key": self.keys[&Stage::Matrix],
            "rows": f.rows(),
            "cols": f.cols(),
            "format": "STONEFM1: magic, rows u64 LE, cols u64 LE, row-major f32 LE",
            "fractions": frac.exists(),
        });
        self.write(
            &dir.join("features.json"),
            format!(
                "{}\n",
                serde_json::to_string_pretty(&meta).expect("serializes")
            ),
        )?;
        let mut moments = format!("# {}\n", self.header(Stage::Matrix).replace('\n', "\n# "));
        moments.push_str("index,expectation,variance\n");
        for (i, (e, v)) in expectation.iter().zip(&variance).enumerate() {
            moments.push_str(&format!("{i},{e},{v}\n"));
        }
        self.write(&dir.join("moments.csv"), moments)?;
        let summary = json!({
            "rows": f.rows(),
            "cols": f.cols(),
            "exact_rows": exact,
            "monte_carlo_rows": mc,
            "mean_pairing": crate::stats::mean(f.values()),
        });
        self.finish(Stage::Matrix, summary)?;
        Ok(f)
    }

    fn pca(
        &mut self,
        corpus: &Corpus,
        f: &FeatureMatrix,
    ) -> Result<LatentEmbedding, PipelineError> {
        let pc = self.config.pca_config();
        let params = json!({ "pca": pc, "fix_signs": self.config.pca.fix_signs });
        let cached = self.begin(Stage::Pca, params, &[Stage::Corpus, Stage::Matrix], &[])?;
        let dir = self.dir(Stage::Pca);
        let json_path = dir.join("embedding.json");
        if cached {
            let bytes = fs::read(&json_path).map_err(io_err(&json_path))?;
            let v: Value = serde_json::from_slice(&bytes).map_err(|e| PipelineError::Artifact {
                path: json_path.clone(),
                reason: e.to_string(),
            })?;
            return serde_json::from_value(v["embedding"].clone()).map_err(|e| {
                PipelineError::Artifact {
                    path: json_path.clone(),
                    reason: e.to_string(),
                }
            });
        }
        self.make_dir(Stage::Pca)?;
        let mut emb = pca_embed_with(f, &pc, self.exec)?;
        if self.config.pca.fix_signs {
            emb = fix_signs(&emb, f, corpus)?;
        }
        let header = self.header(Stage::Pca);
        let mut buf = Vec::new();
        emb.write_csv(&mut buf, &header).map_err(io_err(&dir))?;
        self.write(&dir.join("embedding.csv"), buf)?;

        let summary = pca_summary(&emb, f, corpus)?;
        let meta = json!({
            "version": VERSION,
            "stage": Stage::Pca,
            "key": self.keys[&Stage::Pca],
            "seed": self.config.sample.seed,
            "singular_values": emb.singular_values,
            "explained_variance_ratio": emb.explained_variance_ratio,
            "embedding": emb,
        });
        self.write(
            &json_path,
            format!("{}\n", serde_json::to_string(&meta).expect("serializes")),
        )?;
        self.finish(Stage::Pca, summary)?;
        Ok(emb)
    }

    /// Returns the corpus rows the graph covers, the graph, and its condensation.
    fn graph(
        &mut self,
        corpus: &Corpus,
        sample: Option<&MagmaSample>,
    ) -> Result<(Vec<usize>, ImplicationGraph, Condensation), PipelineError> {
        let g = self.config.graph.clone();
        let files: Vec<&Path> = g.path.as_deref().into_iter().collect();
        let params = json!({
            "source": if g.path.is_some() { "file" } else { "satisfaction" },
            "closure": g.closure,
            "self_pairs": g.self_pairs,
            "synthetic_max_ops": if g.path.is_none() { Some(g.synthetic_max_ops) } else { None },
            "longest": g.longest,
        });
        let upstream: &[Stage] = if g.path.is_some() {
            &[Stage::Corpus]
        } else {
            &[Stage::Corpus, Stage::Sample]
        };
        let cached = self.begin(Stage::Graph, params, upstream, &files)?;
        let rows: Vec<usize> = match &g.path {
            Some(_) => (0..corpus.len()).collect(),
            None => (0..corpus.len())
                .filter(|&i| corpus.equations()[i].op_total() <= g.synthetic_max_ops)
                .collect(),
        };
        let dir = self.dir(Stage::Graph);
        let preorder_path = dir.join("preorder.txt");
        if cached {
            let sub = Corpus::from_equations(rows.iter().map(|&i| corpus.equations()[i].clone()));
            let graph = load_preorder_from(Self::open(&preorder_path)?, &sub, Closure::Check)?;
            let c = condense_with(&graph, self.exec);
            return Ok((rows, graph, c));
        }
        self.make_dir(Stage::Graph)?;
        let graph = match &g.path {
            Some(p) => load_preorder_from(Self::open(p)?, corpus, g.closure)?,
            None => {
                let eqs: Vec<_> = rows
                    .iter()
                    .map(|&i| corpus.equations()[i].clone())
                    .collect();
                satisfaction_preorder(
                    &eqs,
                    &sample.expect("sample precedes synthetic graph").magmas,
                    self.exec,
                )?
            }
        };
        let c = condense_with(&graph, self.exec);
        let header = self.header(Stage::Graph);
        let mut buf = Vec::new();
        graph
            .write(
                &mut buf,
                &format!(
                    "{header}\nvertex v is corpus index {}",
                    if g.path.is_some() {
                        "v"
                    } else {
                        "rows[v] (see rows.txt)"
                    }
                ),
            )
            .map_err(io_err(&preorder_path))?;
        self.write(&preorder_path, buf)?;
        let mut rows_txt = format!("# {}\n", header.replace('\n', "\n# "));
        for r in &rows {
            rows_txt.push_str(&format!("{r}\n"));
        }
        self.write(&dir.join("rows.txt"), rows_txt)?;

        let paths: Vec<Vec<usize>> = c.longest_paths(g.longest);
        let counts = c.counts(g.self_pairs);
        let other = c.counts(match g.self_pairs {
            SelfPairs::Include => SelfPairs::Exclude,
            SelfPairs::Exclude => SelfPairs::Include,
        });
        let hist: Vec<[usize; 2]> = c
            .size_histogram()
            .into_iter()
            .rev()
            .map(|(s, n)| [s, n])
            .collect();
        let summary = json!({
            "source": if g.path.is_some() { "file" } else { "satisfaction" },
            "counts": counts,
            "counts_other_convention": other,
            "clique_size_histogram": hist,
            "longest_paths": paths.iter().map(|p| p.iter().map(|&cl| c.cliques[cl][0]).map(|v| rows[v]).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "longest_path_edges": paths.first().map(|p| p.len() - 1).unwrap_or(0),
        });
        let stats_path = dir.join("stats.json");
        let mut stats =
            json!({ "version": VERSION, "key": self.keys[&Stage::Graph], "stats": summary });
        stats["stats"]["longest_paths_note"] =
            json!("paths listed by the first corpus index of each clique");
        self.write(
            &stats_path,
            format!(
                "{}\n",
                serde_json::to_string_pretty(&stats).expect("serializes")
            ),
        )?;
        self.finish(Stage::Graph, summary)?;
        Ok((rows, graph, c))
    }

    fn geometry(
        &mut self,
        emb: &LatentEmbedding,
        f: Option<&FeatureMatrix>,
        rows: &[usize],
        g: &ImplicationGraph,
        c: &Condensation,
    ) -> Result<(), PipelineError> {
        let geo = self.config.geometry.clone();
        let mut upstream = vec![Stage::Pca, Stage::Graph];
        if geo.space == DistanceSpace::Features {
            upstream.push(Stage::Matrix);
        }
        let params = json!({ "space": geo.space, "radius_per_member": geo.radius_per_member, "self_pairs": self.config.graph.self_pairs });
        if self.begin(Stage::Geometry, params, &upstream, &[])? {
            return Ok(());
        }
        let dir = self.make_dir(Stage::Geometry)?;
        let latent = PointSet::from_embedding_subset(emb, rows)?;
        let points = match geo.space {
            DistanceSpace::Latent => latent.clone(),
            DistanceSpace::Features => {
                PointSet::from_features(&f.expect("matrix precedes geometry").select_rows(rows))
            }
        };
        let conv = self.config.graph.self_pairs;
        let stats = edge_lengths_with(&points, g, c, conv, self.exec)?;
        let cg = clique_geometry(&latent, c, geo.radius_per_member)?;
        let cross = cross_clique_edge_matrix(c, conv);
        let header = format!(
            "{}\ndistances: {:?}",
            self.header(Stage::Geometry),
            geo.space
        );
        let mut buf = Vec::new();
        stats.write_csv(&mut buf, &header).map_err(io_err(&dir))?;
        self.write(&dir.join("edge_stats.csv"), buf)?;
        let mut buf = Vec::new();
        cg.write_csv(&mut buf, &header).map_err(io_err(&dir))?;
        self.write(&dir.join("cliques.csv"), buf)?;
        let mut buf = Vec::new();
        cross.write_csv(&mut buf, &header).map_err(io_err(&dir))?;
        self.write(&dir.join("cross_clique.csv"), buf)?;
        let mut buf = Vec::new();
        cg.write_scene(c, &mut buf, &header).map_err(io_err(&dir))?;
        self.write(&dir.join("scene.csv"), buf)?;
        let summary = json!({
            "space": geo.space,
            "edge_lengths": stats,
            "atomic_over_reversible": stats.atomic_over_reversible(),
            "strict_over_reversible": stats.strict_over_reversible(),
            "ordered": stats.reversible.mean < stats.atomic.mean && stats.atomic.mean < stats.strict.mean,
            "cross_clique_total": cross.total(),
            "scene": { "balls": cg.cliques.len(), "arrows": c.atomic_edges.len() },
        });
        self.finish(Stage::Geometry, summary)
    }
}

/// Axis diagnostics of an embedding: correlations with the moments of the
/// spectra, where Eqn0 lands, and how closely conjugation flips Z.
fn pca_summary(
    emb: &LatentEmbedding,
    f: &FeatureMatrix,
    corpus: &Corpus,
) -> Result<Value, PipelineError> {
    let (expectation, variance) = f.all_expectation_variance();
    let axis = |a: usize| (a < emb.k).then(|| emb.axis(a));
    let mut out = json!({
        "k": emb.k,
        "iterations": emb.iterations,
        "eigenvalues": emb.eigenvalues,
        "singular_values": emb.singular_values,
        "explained_variance_ratio": emb.explained_variance_ratio,
        "total_variance": emb.total_variance,
    });
    if let Some(x) = axis(0) {
        let argmax = (0..x.len()).fold(0, |b, i| if x[i] > x[b] { i } else { b });
        out["x_expectation_r"] = json!(pearson(&x, &expectation));
        out["x_argmax"] = json!(argmax);
        out["x_regression"] = json!(regress(&expectation, &x).ok());
    }
    if let Some(y) = axis(1) {
        out["y_variance_r"] = json!(pearson(&y, &variance));
        out["y_regression"] = json!(regress(&variance, &y).ok());
    }
    if let Some(z) = axis(2) {
        let mut antisym: f64 = 0.0;
        let mut self_conj: f64 = 0.0;
        for i in 0..corpus.len() {
            if let Some(j) = corpus.conjugate_index(i) {
                antisym = antisym.max((z[i] + z[j]).abs());
                if i == j {
                    self_conj = self_conj.max(z[i].abs());
                }
            }
        }
        out["z_conjugate_antisymmetry"] = json!(antisym);
        out["z_self_conjugate_max_abs"] = json!(self_conj);
    }
    let parity: Vec<&str> = (0..emb.k)
        .map(|a| component_parity(&emb.axis(a), corpus))
        .collect();
    out["conjugation_parity"] = json!(parity);
    Ok(out)
}

/// `even`, `odd` or `mixed` behaviour of a coordinate under conjugation.
pub fn component_parity(values: &[f64], corpus: &Corpus) -> &'static str {
    let scale = values
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let (mut even, mut odd) = (0.0f64, 0.0f64);
    for (i, &v) in values.iter().enumerate() {
        if let Some(j) = corpus.conjugate_index(i) {
            even = even.max((v - values[j]).abs());
            odd = odd.max((v + values[j]).abs());
        }
    }
    let tol = 1e-8 * scale;
    match (even <= tol, odd <= tol) {
        (true, _) => "even",
        (false, true) => "odd",
        _ => "mixed",
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlotKind {
    Spectrum,
    Interference,
    Scene,
    Regression,
    Scree,
}

impl PlotKind {
    pub const ALL: [PlotKind; 5] = [
        PlotKind::Spectrum,
        PlotKind::Interference,
        PlotKind::Scene,
        PlotKind::Regression,
        PlotKind::Scree,
    ];
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlotOptions {
    /// Corpus rows whose spectra are exported.
    pub equations: Vec<usize>,
    /// Row pairs for interference spectra; empty means each listed equation
    /// with its conjugate.
    pub pairs: Vec<(usize, usize)>,
    pub bins: usize,
}

impl Default for PlotOptions {
    fn default() -> Self {
        PlotOptions {
            equations: vec![0],
            pairs: Vec::new(),
            bins: DEFAULT_BINS,
        }
    }
}

fn stamp_key(out: &Path, stage: Stage) -> Result<String, PipelineError> {
    let path = out.join(stage.name()).join("stage.json");
    let bytes = fs::read(&path).map_err(|_| PipelineError::Artifact {
        path: path.clone(),
        reason: "missing; run the stage first".into(),
    })?;
    let stamp: Stamp = serde_json::from_slice(&bytes).map_err(|e| PipelineError::Artifact {
        path: path.clone(),
        reason: e.to_string(),
    })?;
    Ok(stamp.key)
}

fn load_matrix(out: &Path) -> Result<FeatureMatrix, PipelineError> {
    stamp_key(out, Stage::Matrix)?;
    let dir = out.join(Stage::Matrix.name());
    let frac = dir.join("features.frac");
    let fractions = if frac.exists() {
        Some(Ctx::open(&frac)?)
    } else {
        None
    };
    Ok(FeatureMatrix::read(
        Ctx::open(&dir.join("features.bin"))?,
        fractions,
    )?)
}

fn load_embedding(out: &Path) -> Result<LatentEmbedding, PipelineError> {
    stamp_key(out, Stage::Pca)?;
    let path = out.join(Stage::Pca.name()).join("embedding.json");
    let bytes = fs::read(&path).map_err(io_err(&path))?;
    let v: Value = serde_json::from_slice(&bytes).map_err(|e| PipelineError::Artifact {
        path: path.clone(),
        reason: e.to_string(),
    })?;
    serde_json::from_value(v["embedding"].clone()).map_err(|e| PipelineError::Artifact {
        path,
        reason: e.to_string(),
    })
}

fn load_corpus(out: &Path) -> Result<Corpus, PipelineError> {
    stamp_key(out, Stage::Corpus)?;
    Ok(Corpus::read(Ctx::open(
        &out.join(Stage::Corpus.name()).join("corpus.txt"),
    )?)?)
}

/// Writes plotting data derived from the artifacts of a finished run into
/// `<output>/plots/` and returns the files written.
pub fn emit_plot_data(
    output: &Path,
    kind: PlotKind,
    options: &PlotOptions,
) -> Result<Vec<PathBuf>, PipelineError> {
    let dir = output.join("plots");
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let mut written = Vec::new();
    let mut put = |name: String, text: String| -> Result<(), PipelineError> {
        let path = dir.join(name);
        fs::write(&path, text).map_err(io_err(&path))?;
        written.push(path);
        Ok(())
    };
    let header = |stage: Stage| -> Result<String, PipelineError> {
        Ok(format!(
            "# magmaspace {VERSION}\n# source: {stage} {}\n",
            stamp_key(output, stage)?
        ))
    };
    match kind {
        PlotKind::Scree => {
            let emb = load_embedding(output)?;
            let mut s = header(Stage::Pca)?;
            s.push_str("component,singular_value,eigenvalue,explained_variance_ratio\n");
            for i in 0..emb.singular_values.len().min(SPECTRUM_LEN) {
                s.push_str(&format!(
                    "{},{},{},{}\n",
                    i + 1,
                    emb.singular_values[i],
                    emb.eigenvalues[i],
                    emb.explained_variance_ratio[i]
                ));
            }
            put("scree.csv".into(), s)?;
        }
        PlotKind::Spectrum => {
            let f = load_matrix(output)?;
            for &k in &options.equations {
                let spec = f.spectrum(k)?;
                let mut buf = header(Stage::Matrix)?.into_bytes();
                spec.write_csv(&mut buf, &format!("equation {k}"))
                    .map_err(io_err(&dir))?;
                put(
                    format!("spectrum_{k}.csv"),
                    String::from_utf8(buf).expect("utf8"),
                )?;
                let mut s = header(Stage::Matrix)?;
                s.push_str(&format!("# equation {k}\nbin_low,bin_high,count\n"));
                let bins = options.bins.max(1);
                for (b, count) in spec.histogram(bins).into_iter().enumerate() {
                    s.push_str(&format!(
                        "{},{},{count}\n",
                        b as f64 / bins as f64,
                        (b + 1) as f64 / bins as f64
                    ));
                }
                put(format!("spectrum_{k}_hist.csv"), s)?;
            }
        }
        PlotKind::Interference => {
            let f = load_matrix(output)?;
            let pairs = if options.pairs.is_empty() {
                let corpus = load_corpus(output)?;
                options
                    .equations
                    .iter()
                    .filter_map(|&k| corpus.conjugate_index(k).map(|j| (k, j)))
                    .collect()
            } else {
                options.pairs.clone()
            };
            for (j, k) in pairs {
                let spec = f.interference_spectrum(j, k)?;
                let mut buf = header(Stage::Matrix)?.into_bytes();
                spec.write_csv(
                    &mut buf,
                    &format!("equations {j} and {k}, aligned by magma"),
                )
                .map_err(io_err(&dir))?;
                put(
                    format!("interference_{j}_{k}.csv"),
                    String::from_utf8(buf).expect("utf8"),
                )?;
            }
        }
        PlotKind::Scene => {
            stamp_key(output, Stage::Geometry)?;
            let src = output.join(Stage::Geometry.name()).join("scene.csv");
            put(
                "scene.csv".into(),
                fs::read_to_string(&src).map_err(io_err(&src))?,
            )?;
        }
        PlotKind::Regression => {
            let f = load_matrix(output)?;
            let emb = load_embedding(output)?;
            let (expectation, variance) = f.all_expectation_variance();
            let x = emb.axis(0);
            let y = if emb.k > 1 {
                emb.axis(1)
            } else {
                vec![f64::NAN; x.len()]
            };
            let mut s = header(Stage::Pca)?;
            if let Ok(r) = regress(&expectation, &x) {
                s.push_str(&format!(
                    "# X ~ expectation: slope {} intercept {} r2 {}\n",
                    r.slope, r.intercept, r.r2
                ));
            }
            if let Ok(r) = regress(&variance, &y) {
                s.push_str(&format!(
                    "# Y ~ variance: slope {} intercept {} r2 {}\n",
                    r.slope, r.intercept, r.r2
                ));
            }
            s.push_str("index,expectation,X,variance,Y\n");
            for i in 0..x.len() {
                s.push_str(&format!(
                    "{i},{},{},{},{}\n",
                    expectation[i], x[i], variance[i], y[i]
                ));
            }
            put("regression.csv".into(), s)?;
        }
    }
    Ok(written)
}
