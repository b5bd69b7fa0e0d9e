//! `magmaspace` command-line interface.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error (unreadable or invalid
//! input, failed computation), 3 verification failure (a Herbrand proof that
//! is not found within bounds).

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use magmaspace::enumerate::{enumerate_corpus, Corpus};
use magmaspace::geometry::{
    clique_geometry, cross_clique_edge_matrix, edge_lengths, PointSet, RADIUS_PER_MEMBER,
};
use magmaspace::graph::{
    condense, load_preorder, Closure, Condensation, ImplicationGraph, SelfPairs,
};
use magmaspace::herbrand::{
    all_magmas, instance_countermodel, replay, verification_json, verify, HerbrandProof, RuleMode,
    Verdict,
};
use magmaspace::magma::{sample_magmas, MagmaSample};
use magmaspace::par::Execution;
use magmaspace::pca::{fix_signs, pca_embed_with, Centering, LatentEmbedding, PcaConfig};
use magmaspace::pipeline::{emit_plot_data, run_pipeline, PipelineConfig, PlotKind, PlotOptions};
use magmaspace::stone::{
    build_feature_matrix, FeatureMatrix, PairingMode, StoneConfig, DEFAULT_EXACT_BUDGET,
    DEFAULT_MC_SAMPLES,
};
use magmaspace::VERSION;

#[derive(Parser)]
#[command(
    name = "magmaspace",
    version,
    about = "Latent space of magma equational theories"
)]
struct Cli {
    /// Pipeline configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate canonical equations.
    Corpus {
        #[arg(long, default_value_t = 4)]
        max_ops: usize,
        /// Write the corpus here (one equation per line).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw a seeded sample of finite magmas.
    Sample {
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(long = "size", short = 'N', default_value_t = 4)]
        size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Draw independently instead of in opposite pairs.
        #[arg(long)]
        no_symmetric: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the Stone-pairing feature matrix.
    Stone {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Magma sample file.
        #[arg(long)]
        sample: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Auto)]
        mode: ModeArg,
        #[arg(long, default_value_t = DEFAULT_EXACT_BUDGET)]
        exact_budget: u64,
        #[arg(long, default_value_t = DEFAULT_MC_SAMPLES)]
        mc_samples: u32,
        /// Output prefix: writes `<out>.bin`, `<out>.frac` and optionally `<out>.csv`.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        csv: bool,
    },
    /// Embed a feature matrix with PCA.
    Pca {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Matrix prefix written by `stone`.
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long)]
        center_rows: bool,
        #[arg(long)]
        no_fix_signs: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Embedding CSV (`index,X,Y,Z`); metadata goes to `<out>.json`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Implication-preorder analytics.
    Graph {
        #[command(subcommand)]
        action: GraphAction,
    },
    /// Edge lengths and clique statistics in the latent space.
    Geometry {
        #[command(flatten)]
        graph: GraphArgs,
        /// Embedding CSV written by `pca`.
        #[arg(long)]
        embedding: PathBuf,
        #[arg(long, default_value_t = RADIUS_PER_MEMBER)]
        radius_per_member: f64,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Herbrand proofs.
    Herbrand {
        #[command(subcommand)]
        action: HerbrandAction,
    },
    /// Staged pipeline.
    Pipeline {
        #[command(subcommand)]
        action: PipelineAction,
    },
    /// Export plotting data from a finished pipeline run.
    Plot {
        #[arg(long, value_enum)]
        kind: Vec<PlotArg>,
        /// Pipeline output directory (default: from `--config`).
        #[arg(long)]
        dir: Option<PathBuf>,
        /// Equations (corpus indices) for spectra.
        #[arg(long = "equation")]
        equations: Vec<usize>,
        /// `j,k` pairs for interference spectra.
        #[arg(long = "pair", value_parser = parse_pair)]
        pairs: Vec<(usize, usize)>,
        #[arg(long, default_value_t = 256)]
        bins: usize,
    },
}

#[derive(Args, Clone)]
struct CorpusArgs {
    /// Corpus file; without it the corpus is enumerated.
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    max_ops: usize,
    /// `equation <-> number` file for external identifiers.
    #[arg(long)]
    numbering: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct GraphArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Preorder file: `j k` per line (`j ⇒ k`).
    #[arg(long)]
    preorder: PathBuf,
    /// Close the input transitively instead of requiring it closed.
    #[arg(long)]
    close: bool,
    #[arg(long, value_enum, default_value_t = SelfPairsArg::Include)]
    self_pairs: SelfPairsArg,
}

#[derive(Subcommand)]
enum GraphAction {
    /// Read and validate a preorder.
    Load {
        #[command(flatten)]
        graph: GraphArgs,
    },
    /// List the reversible cliques.
    Condense {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// All counts as JSON.
    Stats {
        #[command(flatten)]
        graph: GraphArgs,
    },
    /// Longest chains of atomic clique edges.
    Longest {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, default_value_t = 10)]
        top: usize,
    },
    /// Pairs of atomic edges that are nearly parallel in the latent space.
    Parallel {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        embedding: PathBuf,
        /// Radians.
        #[arg(long, default_value_t = 0.05)]
        angle_tol: f64,
        /// Relative length difference.
        #[arg(long, default_value_t = 0.05)]
        length_tol: f64,
    },
}

#[derive(Subcommand)]
enum HerbrandAction {
    /// Check a proof file by bounded rewriting.
    Verify {
        proof: PathBuf,
        /// Override the rule mode in the file.
        #[arg(long, value_enum)]
        mode: Option<RuleArg>,
        /// On failure, search magmas of order ≤ 3 for a countermodel.
        #[arg(long)]
        countermodel: bool,
    },
}

#[derive(Subcommand)]
enum PipelineAction {
    /// Run the configured stages.
    Run {
        /// Override the output directory.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Auto,
    Exact,
    MonteCarlo,
}

#[derive(Clone, Copy, ValueEnum)]
enum SelfPairsArg {
    Include,
    Exclude,
}

#[derive(Clone, Copy, ValueEnum)]
enum RuleArg {
    Ground,
    Schematic,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlotArg {
    Spectrum,
    Interference,
    Scene,
    Regression,
    Scree,
}

fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or("expected `j,k`")?;
    Ok((
        a.trim().parse().map_err(|e| format!("{e}"))?,
        b.trim().parse().map_err(|e| format!("{e}"))?,
    ))
}

enum Failure {
    Usage(String),
    Data(String),
    Verification(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Data(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Data(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Verification(m)) => {
            eprintln!("{m}");
            ExitCode::from(3)
        }
    }
}

/// Prints to stdout, ignoring a closed pipe (e.g. `| head`).
fn emit(text: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn print_json(v: &Value) {
    emit(&serde_json::to_string_pretty(v).expect("serializable"));
}

fn header(what: &str) -> String {
    format!("magmaspace {VERSION}\n{what}")
}

fn write_file(path: &Path, f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Outcome {
    let mut buf = Vec::new();
    f(&mut buf).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    fs::write(path, buf).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn open(path: &Path) -> Result<BufReader<fs::File>, Failure> {
    Ok(BufReader::new(fs::File::open(path).map_err(|e| {
        Failure::Data(format!("{}: {e}", path.display()))
    })?))
}

fn load_corpus(a: &CorpusArgs) -> Result<Corpus, Failure> {
    let mut c = match &a.corpus {
        Some(p) => Corpus::read(open(p)?)?,
        None => enumerate_corpus(a.max_ops)?,
    };
    if let Some(p) = &a.numbering {
        c = c.load_et_numbering(p)?;
    }
    Ok(c)
}

fn load_graph(a: &GraphArgs) -> Result<(Corpus, ImplicationGraph, Condensation), Failure> {
    let corpus = load_corpus(&a.corpus)?;
    let closure = if a.close {
        Closure::Transitive
    } else {
        Closure::Check
    };
    let g = load_preorder(&a.preorder, &corpus, closure)
        .map_err(|e| Failure::Data(format!("{}: {e}", a.preorder.display())))?;
    let c = condense(&g);
    Ok((corpus, g, c))
}

fn self_pairs(a: SelfPairsArg) -> SelfPairs {
    match a {
        SelfPairsArg::Include => SelfPairs::Include,
        SelfPairsArg::Exclude => SelfPairs::Exclude,
    }
}

fn load_matrix(prefix: &Path) -> Result<FeatureMatrix, Failure> {
    let frac = prefix.with_extension("frac");
    let fractions = if frac.exists() {
        Some(open(&frac)?)
    } else {
        None
    };
    Ok(FeatureMatrix::read(
        open(&prefix.with_extension("bin"))?,
        fractions,
    )?)
}

/// Reads `index,X,Y,…` rows (comment lines start with `#`).
fn read_embedding_csv(path: &Path) -> Result<PointSet, Failure> {
    let mut coords = Vec::new();
    let mut dim = None;
    let mut expected = 0usize;
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') || t.starts_with("index") {
            continue;
        }
        let bad = || {
            Failure::Data(format!(
                "{}:{}: malformed embedding row",
                path.display(),
                i + 1
            ))
        };
        let mut cells = t.split(',');
        let index: usize = cells
            .next()
            .and_then(|c| c.trim().parse().ok())
            .ok_or_else(bad)?;
        if index != expected {
            return Err(bad());
        }
        expected += 1;
        let row: Vec<f64> = cells
            .map(|c| c.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad())?;
        if *dim.get_or_insert(row.len()) != row.len() || row.is_empty() {
            return Err(bad());
        }
        coords.extend(row);
    }
    Ok(PointSet::new(dim.unwrap_or(0), coords))
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Corpus { max_ops, out } => {
            let corpus = enumerate_corpus(max_ops)?;
            if let Some(p) = &out {
                write_file(p, |b| {
                    corpus.write(b, &header(&format!("corpus max_ops={max_ops}")))
                })?;
            }
            let hist: serde_json::Map<String, Value> = corpus
                .signature_histogram()
                .into_iter()
                .map(|(s, n)| (format!("({},{})", s.0, s.1), json!(n)))
                .collect();
            print_json(
                &json!({ "equations": corpus.len(), "self_conjugate": corpus.self_conjugate_count(), "signature_histogram": hist }),
            );
        }
        Command::Sample {
            n,
            size,
            seed,
            no_symmetric,
            out,
        } => {
            let s = sample_magmas(n, size, seed, !no_symmetric)?;
            write_file(&out, |b| s.write(b, &header("sample")))?;
            print_json(
                &json!({ "n": s.len(), "size": s.size(), "seed": seed, "opposite_closed": s.is_opposite_closed() }),
            );
        }
        Command::Stone {
            corpus,
            sample,
            mode,
            exact_budget,
            mc_samples,
            out,
            csv,
        } => {
            let c = load_corpus(&corpus)?;
            let s = MagmaSample::read(open(&sample)?)?;
            let mode = match mode {
                ModeArg::Auto => PairingMode::Auto,
                ModeArg::Exact => PairingMode::Exact,
                ModeArg::MonteCarlo => PairingMode::MonteCarlo,
            };
            let config = StoneConfig {
                mode,
                exact_budget,
                mc_samples,
                mc_seed: s.seed,
            };
            let f = build_feature_matrix(&c, &s, &config)?;
            write_file(&out.with_extension("bin"), |b| f.write_binary(b))?;
            let mut has_fractions = false;
            write_file(&out.with_extension("frac"), |b| {
                has_fractions = f.write_fractions(b)?;
                Ok(())
            })?;
            if !has_fractions {
                let _ = fs::remove_file(out.with_extension("frac"));
            }
            if csv {
                write_file(&out.with_extension("csv"), |b| {
                    f.write_csv(b, &header("stone pairings"))
                })?;
            }
            print_json(
                &json!({ "rows": f.rows(), "cols": f.cols(), "exact_fractions": has_fractions }),
            );
        }
        Command::Pca {
            corpus,
            matrix,
            k,
            center_rows,
            no_fix_signs,
            seed,
            out,
        } => {
            let c = load_corpus(&corpus)?;
            let f = load_matrix(&matrix)?;
            let config = PcaConfig {
                k,
                centering: if center_rows {
                    Centering::Rows
                } else {
                    Centering::Columns
                },
                seed,
                ..PcaConfig::default()
            };
            let mut emb: LatentEmbedding = pca_embed_with(&f, &config, Execution::Parallel)?;
            if !no_fix_signs {
                emb = fix_signs(&emb, &f, &c)?;
            }
            write_file(&out, |b| {
                emb.write_csv(b, &header(&format!("pca k={k} seed={seed}")))
            })?;
            let meta = json!({
                "version": VERSION,
                "seed": seed,
                "singular_values": emb.singular_values,
                "explained_variance_ratio": emb.explained_variance_ratio,
                "iterations": emb.iterations,
            });
            fs::write(
                out.with_extension("json"),
                serde_json::to_string_pretty(&meta)? + "\n",
            )?;
            print_json(&meta);
        }
        Command::Graph { action } => graph(action)?,
        Command::Geometry {
            graph,
            embedding,
            radius_per_member,
            out,
        } => {
            let (_, g, c) = load_graph(&graph)?;
            let points = read_embedding_csv(&embedding)?;
            let conv = self_pairs(graph.self_pairs);
            let stats = edge_lengths(&points, &g, &c, conv)?;
            let cg = clique_geometry(&points, &c, radius_per_member)?;
            let cross = cross_clique_edge_matrix(&c, conv);
            fs::create_dir_all(&out)?;
            let h = header("geometry");
            write_file(&out.join("edge_stats.csv"), |b| stats.write_csv(b, &h))?;
            write_file(&out.join("cliques.csv"), |b| cg.write_csv(b, &h))?;
            write_file(&out.join("cross_clique.csv"), |b| cross.write_csv(b, &h))?;
            write_file(&out.join("scene.csv"), |b| cg.write_scene(&c, b, &h))?;
            print_json(&json!({
                "edge_lengths": stats,
                "atomic_over_reversible": stats.atomic_over_reversible(),
                "strict_over_reversible": stats.strict_over_reversible(),
            }));
        }
        Command::Herbrand {
            action:
                HerbrandAction::Verify {
                    proof,
                    mode,
                    countermodel,
                },
        } => {
            let text = fs::read_to_string(&proof)
                .map_err(|e| Failure::Data(format!("{}: {e}", proof.display())))?;
            let mut p = HerbrandProof::parse(&text)?;
            if let Some(m) = mode {
                p.limits.mode = match m {
                    RuleArg::Ground => RuleMode::Ground,
                    RuleArg::Schematic => RuleMode::Schematic,
                };
            }
            let v = verify(&p)?;
            let mut out = verification_json(&p, &v);
            if v.verdict == Verdict::Proved {
                replay(&v, (&p.target.lhs, &p.target.rhs))
                    .map_err(|e| Failure::Data(format!("trace does not replay: {e}")))?;
                out["replayed"] = json!(true);
                print_json(&out);
            } else {
                if countermodel {
                    let magmas: Vec<_> = (1..=3).flat_map(all_magmas).collect();
                    out["countermodel"] = match instance_countermodel(&p, &magmas)? {
                        Some(cm) => {
                            json!({ "table": magmas[cm.magma].table(), "size": magmas[cm.magma].size(), "assignment": cm.assignment })
                        }
                        None => Value::Null,
                    };
                }
                print_json(&out);
                return Err(Failure::Verification("not proved within bounds".into()));
            }
        }
        Command::Pipeline {
            action: PipelineAction::Run { output },
        } => {
            let mut config = match &cli.config {
                Some(p) => PipelineConfig::load(p)?,
                None => return Err(Failure::Usage("pipeline run needs --config".into())),
            };
            if let Some(o) = output {
                config.output = o;
            }
            let run = run_pipeline(&config)?;
            for line in &run.log {
                eprintln!("{line}");
            }
            emit(&run.output.join("report.json").display().to_string());
        }
        Command::Plot {
            kind,
            dir,
            equations,
            pairs,
            bins,
        } => {
            let dir = match (dir, &cli.config) {
                (Some(d), _) => d,
                (None, Some(p)) => PipelineConfig::load(p)?.output,
                (None, None) => return Err(Failure::Usage("plot needs --dir or --config".into())),
            };
            let kinds: Vec<PlotKind> = if kind.is_empty() {
                PlotKind::ALL.to_vec()
            } else {
                kind.iter()
                    .map(|k| match k {
                        PlotArg::Spectrum => PlotKind::Spectrum,
                        PlotArg::Interference => PlotKind::Interference,
                        PlotArg::Scene => PlotKind::Scene,
                        PlotArg::Regression => PlotKind::Regression,
                        PlotArg::Scree => PlotKind::Scree,
                    })
                    .collect()
            };
            let options = PlotOptions {
                equations: if equations.is_empty() {
                    vec![0]
                } else {
                    equations
                },
                pairs,
                bins,
            };
            for k in kinds {
                for path in emit_plot_data(&dir, k, &options)? {
                    emit(&path.display().to_string());
                }
            }
        }
    }
    Ok(())
}

fn graph(action: GraphAction) -> Outcome {
    match action {
        GraphAction::Load { graph } => {
            let (_, g, _) = load_graph(&graph)?;
            print_json(&json!({ "vertices": g.num_vertices(), "implications": g.total() }));
        }
        GraphAction::Condense { graph, out } => {
            let (_, _, c) = load_graph(&graph)?;
            let mut text = String::from("clique,size,members\n");
            for (i, m) in c.cliques.iter().enumerate() {
                let members: Vec<String> = m.iter().map(|v| v.to_string()).collect();
                text.push_str(&format!("{i},{},{}\n", m.len(), members.join(";")));
            }
            match out {
                Some(p) => fs::write(&p, text)?,
                None => emit(text.trim_end()),
            }
            eprintln!(
                "{} cliques, {} atomic edges",
                c.num_cliques(),
                c.atomic_edges.len()
            );
        }
        GraphAction::Stats { graph } => {
            let (_, _, c) = load_graph(&graph)?;
            let counts = c.counts(self_pairs(graph.self_pairs));
            let hist: Vec<[usize; 2]> = c
                .size_histogram()
                .into_iter()
                .rev()
                .map(|(s, n)| [s, n])
                .collect();
            print_json(&json!({ "counts": counts, "clique_size_histogram": hist }));
        }
        GraphAction::Longest { graph, top } => {
            let (corpus, _, c) = load_graph(&graph)?;
            let paths: Vec<Value> = c
                .longest_paths(top)
                .into_iter()
                .map(|p| {
                    let reps: Vec<Value> = p
                        .iter()
                        .map(|&cl| {
                            let v = c.cliques[cl][0];
                            json!({ "clique": cl, "representative": v, "equation": corpus.get(v).map(|e| e.to_string()), "et": corpus.et_number(v) })
                        })
                        .collect();
                    json!({ "edges": p.len() - 1, "cliques": reps })
                })
                .collect();
            print_json(&json!(paths));
        }
        GraphAction::Parallel {
            graph,
            embedding,
            angle_tol,
            length_tol,
        } => {
            let (_, _, c) = load_graph(&graph)?;
            let points = read_embedding_csv(&embedding)?;
            if points.len() != c.num_vertices() {
                return Err(Failure::Data(format!(
                    "embedding has {} rows, graph has {} vertices",
                    points.len(),
                    c.num_vertices()
                )));
            }
            let centers = c.clique_centers(|v| points.point(v).to_vec());
            let pairs = c.parallel_edge_candidates(&centers, angle_tol, length_tol)?;
            let out: Vec<Value> = pairs
                .iter()
                .map(|p| json!({ "first": [p.first.0, p.first.1], "second": [p.second.0, p.second.1], "angle": p.angle, "length_diff": p.length_diff, "score": p.score }))
                .collect();
            print_json(&json!(out));
        }
    }
    Ok(())
}
