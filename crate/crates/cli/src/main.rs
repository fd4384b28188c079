//! `visarith`: generate probing and preference datasets, verify them, train
//! linear probes and run the DPO checks.

mod config;

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use visarith_core::cogalign::{self, client_for, CogalignParams, FallbackOnly, PreferencePair};
use visarith_core::dpo::{self, Method};
use visarith_core::geometry::{derive_stream, StreamPath};
use visarith_core::probe;
use visarith_core::probing::{self, ProbeTask, ProbingParams, QueryType, VerifyReport};
use visarith_core::stats::{self, ManifestKind};

use config::RunConfig;

const EXIT_USAGE: u8 = 2;
const EXIT_VERIFY: u8 = 3;
const EXIT_IO: u8 = 4;

/// Bad flags or configuration.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

/// An oracle or numeric check found a problem.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct VerifyFailed(String);

#[derive(Parser)]
#[command(name = "visarith", version, about = "Visual-arithmetic dataset engine and evaluation harness")]
struct Cli {
    /// TOML config file, or a run.json from an earlier run.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads; outputs do not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Log level for the JSON event stream on stderr.
    #[arg(long, global = true, default_value = "info")]
    log_level: log::LevelFilter,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Recompute every label in one or more manifests.
    Verify {
        /// `manifest.jsonl` files or directories to search for them.
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
    #[command(subcommand)]
    Probe(ProbeCommand),
    #[command(subcommand)]
    Dpo(DpoCommand),
    /// Histograms of manifest meta values as JSON and SVG.
    Stats {
        manifest: PathBuf,
    },
}

#[derive(Args)]
struct CanvasFlags {
    #[arg(long)]
    width: Option<u32>,
    #[arg(long)]
    height: Option<u32>,
    #[arg(long)]
    supersample: Option<u32>,
}

#[derive(Subcommand)]
enum GenCommand {
    Probing {
        /// One task; all four when omitted.
        #[arg(long, value_parser = parse_task)]
        task: Option<ProbeTask>,
        #[arg(long)]
        n: Option<usize>,
        /// Train:dev:test, e.g. `10:1:1`.
        #[arg(long, value_parser = parse_ratio)]
        ratio: Option<[u32; 3]>,
        #[arg(long, value_parser = parse_query_type)]
        query_type: Option<QueryType>,
        #[command(flatten)]
        canvas: CanvasFlags,
    },
    Cogalign {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_enum)]
        paraphrase: Option<ParaphraseMode>,
        /// Variants per pair when expanding.
        #[arg(long)]
        k: Option<u32>,
        #[arg(long)]
        paraphrase_url: Option<String>,
        #[command(flatten)]
        canvas: CanvasFlags,
    },
    Isolation {
        #[arg(long)]
        per_class: Option<usize>,
        #[command(flatten)]
        canvas: CanvasFlags,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ParaphraseMode {
    Off,
    /// Rule-based rewrites only.
    Fallback,
    /// The configured HTTP service, falling back on failure.
    Client,
}

#[derive(Subcommand)]
enum ProbeCommand {
    /// Write balanced synthetic embeddings as train/dev/test files.
    Synth {
        #[arg(long, default_value_t = 12_000)]
        n: usize,
        #[arg(long, default_value_t = 64)]
        dim: usize,
        #[arg(long, default_value_t = 1.0)]
        margin: f64,
        #[arg(long)]
        shuffle_labels: bool,
    },
    /// Train a probe on `<data>/{train,dev,test}.vemb`.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "probe")]
        task: String,
        /// Manifest whose ids every record must match.
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<u32>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        batch_size: Option<usize>,
    },
    /// Accuracy and AUC of a trained probe on one embedding file.
    Eval {
        #[arg(long)]
        probe: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
}

#[derive(Subcommand)]
enum DpoCommand {
    /// Loss at the reference policy and a finite-difference gradient check.
    Check {
        #[arg(long, default_value_t = 50)]
        points: usize,
    },
    /// Train the toy policy with DPO and SFT and compare held-out accuracy.
    ToyTrain {
        #[arg(long, value_enum, default_value = "both")]
        method: ToyMethod,
        #[arg(long, default_value_t = 2000)]
        n: usize,
        /// Also train on paraphrase-expanded pairs with this many variants.
        #[arg(long, default_value_t = 0)]
        paraphrase_k: u32,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        epochs: Option<u32>,
        #[arg(long)]
        lr: Option<f64>,
    },
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum ToyMethod {
    Dpo,
    Sft,
    Both,
}

fn parse_task(s: &str) -> Result<ProbeTask, String> {
    ProbeTask::from_name(s).ok_or_else(|| {
        let names: Vec<&str> = ProbeTask::ALL.iter().map(|t| t.name()).collect();
        format!("unknown task {s:?}; expected one of {}", names.join(", "))
    })
}

fn parse_query_type(s: &str) -> Result<QueryType, String> {
    QueryType::from_name(s).ok_or_else(|| format!("unknown query type {s:?}; expected original, empty or irrelevant"))
}

fn parse_ratio(s: &str) -> Result<[u32; 3], String> {
    let parts: Vec<&str> = s.split([':', ',']).collect();
    let nums: Result<Vec<u32>, _> = parts.iter().map(|p| p.trim().parse::<u32>()).collect();
    match nums {
        Ok(v) if v.len() == 3 => Ok([v[0], v[1], v[2]]),
        _ => Err(format!("ratio {s:?} must look like 10:1:1")),
    }
}

fn init_logging(level: log::LevelFilter) {
    env_logger::Builder::new()
        .filter_level(level)
        .format(|buf, record| {
            let event = serde_json::json!({
                "ts": buf.timestamp_millis().to_string(),
                "level": record.level().as_str(),
                "target": record.target(),
                "msg": record.args().to_string(),
            });
            writeln!(buf, "{event}")
        })
        .target(env_logger::Target::Stderr)
        .init();
}

fn apply_canvas(cfg: &mut RunConfig, c: &CanvasFlags) {
    if let Some(w) = c.width {
        cfg.canvas.width = w;
    }
    if let Some(h) = c.height {
        cfg.canvas.height = h;
    }
    if let Some(s) = c.supersample {
        cfg.canvas.supersample = s;
    }
}

fn effective_config(cli: &Cli) -> anyhow::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.master_seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.output_dir = o.clone();
    }
    match &cli.command {
        Command::Gen(GenCommand::Probing { n, ratio, query_type, canvas, .. }) => {
            if let Some(n) = n {
                cfg.probing.total = *n;
            }
            if let Some(r) = ratio {
                cfg.probing.ratio = *r;
            }
            if let Some(q) = query_type {
                cfg.probing.query_type = *q;
            }
            apply_canvas(&mut cfg, canvas);
        }
        Command::Gen(GenCommand::Cogalign { n, paraphrase, k, paraphrase_url, canvas }) => {
            if let Some(n) = n {
                cfg.cogalign.total = *n;
            }
            match paraphrase {
                Some(ParaphraseMode::Off) => cfg.cogalign.paraphrase = false,
                Some(ParaphraseMode::Fallback) => {
                    cfg.cogalign.paraphrase = true;
                    cfg.paraphrase.url = None;
                }
                Some(ParaphraseMode::Client) => {
                    cfg.cogalign.paraphrase = true;
                    if cfg.paraphrase.url.is_none() && paraphrase_url.is_none() {
                        return Err(UsageError("--paraphrase client needs a service url".into()).into());
                    }
                }
                None => {}
            }
            if let Some(k) = k {
                cfg.paraphrase.k = *k;
            }
            if let Some(u) = paraphrase_url {
                cfg.paraphrase.url = Some(u.clone());
            }
            apply_canvas(&mut cfg, canvas);
        }
        Command::Gen(GenCommand::Isolation { per_class, canvas }) => {
            if let Some(p) = per_class {
                cfg.isolation.per_class = *p;
            }
            apply_canvas(&mut cfg, canvas);
        }
        Command::Probe(ProbeCommand::Train { epochs, lr, batch_size, .. }) => {
            if let Some(e) = epochs {
                cfg.probe.epochs = *e;
            }
            if let Some(l) = lr {
                cfg.probe.learning_rate = *l;
            }
            if let Some(b) = batch_size {
                cfg.probe.batch_size = *b;
            }
            cfg.probe.seed = cfg.master_seed;
        }
        Command::Dpo(DpoCommand::ToyTrain { beta, epochs, lr, .. }) => {
            if let Some(b) = beta {
                cfg.dpo.beta = *b;
            }
            if let Some(e) = epochs {
                cfg.dpo.epochs = *e;
            }
            if let Some(l) = lr {
                cfg.dpo.learning_rate = *l;
            }
            cfg.dpo.seed = cfg.master_seed;
        }
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_json_file<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn gen_probing(cfg: &RunConfig, task: Option<ProbeTask>) -> anyhow::Result<()> {
    let tasks: Vec<ProbeTask> = task.map_or(ProbeTask::ALL.to_vec(), |t| vec![t]);
    for t in tasks {
        let params = ProbingParams {
            task: t,
            n_total: cfg.probing.total,
            ratio: cfg.probing.ratio,
            seed: cfg.master_seed,
            query_type: cfg.probing.query_type,
            canvas: cfg.canvas.clone(),
            margins: cfg.probing.margins,
        };
        let start = std::time::Instant::now();
        let m = probing::generate_probing(&params, &cfg.output_dir).map_err(|e| match e {
            probing::ProbingError::Indivisible { .. } | probing::ProbingError::BadRatio => {
                anyhow::Error::new(UsageError(e.to_string()))
            }
            other => other.into(),
        })?;
        cfg.write_run_json(&cfg.output_dir.join(t.name()), &["gen", "probing", "--task", t.name()])?;
        let c = m.header.counts;
        log::info!("{t}: {} instances in {:.1}s", c.train + c.dev + c.test, start.elapsed().as_secs_f64());
        println!("{}: train {} / dev {} / test {}", t.name(), c.train, c.dev, c.test);
    }
    Ok(())
}

fn gen_cogalign(cfg: &RunConfig) -> anyhow::Result<()> {
    let params = CogalignParams {
        n_total: cfg.cogalign.total,
        seed: cfg.master_seed,
        canvas: cfg.canvas.clone(),
        paraphrase: cfg.cogalign.paraphrase.then(|| cfg.paraphrase.clone()),
    };
    let client = client_for(&cfg.paraphrase);
    let m = cogalign::generate_preference_dataset(&params, &cfg.output_dir, client.as_ref()).map_err(|e| match e {
        cogalign::CogError::Indivisible(_) => anyhow::Error::new(UsageError(e.to_string())),
        other => other.into(),
    })?;
    cfg.write_run_json(&cfg.output_dir.join("cogalign"), &["gen", "cogalign"])?;
    println!("cogalign: {} base pairs, {} emitted", m.header.n_base, m.header.n_emitted);
    if !m.header.unexpanded.is_empty() {
        log::warn!("{} pairs left unexpanded", m.header.unexpanded.len());
    }
    Ok(())
}

fn gen_isolation(cfg: &RunConfig) -> anyhow::Result<()> {
    let sets =
        probing::generate_isolation_sets(cfg.master_seed, cfg.isolation.per_class, &cfg.canvas, &cfg.output_dir)?;
    let root = cfg.output_dir.join("isolation");
    cfg.write_run_json(&root, &["gen", "isolation"])?;
    for s in &sets {
        cfg.write_run_json(&root.join(s.kind.name()), &["gen", "isolation"])?;
        println!("isolation {}: {} images", s.kind.name(), s.records.len());
    }
    Ok(())
}

/// `manifest.jsonl` files under `path`, or `path` itself.
fn find_manifests(path: &Path, out: &mut Vec<PathBuf>) -> anyhow::Result<()> {
    if path.is_file() {
        out.push(path.to_path_buf());
        return Ok(());
    }
    let mut entries: Vec<_> = std::fs::read_dir(path)
        .with_context(|| format!("reading {}", path.display()))?
        .collect::<Result<_, _>>()
        .with_context(|| format!("reading {}", path.display()))?;
    entries.sort_by_key(|e| e.path());
    for e in entries {
        let p = e.path();
        if p.is_dir() {
            find_manifests(&p, out)?;
        } else if p.file_name().is_some_and(|n| n == "manifest.jsonl") {
            out.push(p);
        }
    }
    Ok(())
}

fn verify_one(path: &Path) -> anyhow::Result<VerifyReport> {
    Ok(match stats::detect_kind(path)? {
        Some(ManifestKind::Probing) => probing::verify_manifest_file(path)?,
        Some(ManifestKind::Cogalign) => cogalign::verify_pairs_file(path)?,
        Some(ManifestKind::Isolation) => probing::verify_isolation_file(path)?,
        None => VerifyReport::default(),
    })
}

fn verify(paths: &[PathBuf]) -> anyhow::Result<()> {
    let mut manifests = Vec::new();
    for p in paths {
        find_manifests(p, &mut manifests)?;
    }
    if manifests.is_empty() {
        return Err(UsageError("no manifest.jsonl found".into()).into());
    }
    let mut total = VerifyReport::default();
    for m in &manifests {
        let r = verify_one(m)?;
        println!("{}: agree {} disagree {}", m.display(), r.agree, r.disagree.len());
        for d in r.disagree.iter().take(20) {
            log::error!("{}: {}: {}", m.display(), d.id, d.reason);
        }
        total.merge(r);
    }
    println!("agree: {}", total.agree);
    println!("disagree: {}", total.disagree.len());
    if !total.ok() {
        bail!(VerifyFailed(format!("{} disagreements", total.disagree.len())));
    }
    Ok(())
}

fn probe_command(cfg: &RunConfig, cmd: &ProbeCommand) -> anyhow::Result<()> {
    match cmd {
        ProbeCommand::Synth { n, dim, margin, shuffle_labels } => {
            let records = probe::synthetic_embeddings(*n, *dim, *margin, cfg.master_seed, *shuffle_labels);
            let splits = probe::split_records(records, [10, 1, 1]);
            std::fs::create_dir_all(&cfg.output_dir)
                .with_context(|| format!("creating {}", cfg.output_dir.display()))?;
            for (name, recs) in ["train", "dev", "test"].iter().zip(&splits) {
                probe::write_vemb(&cfg.output_dir.join(format!("{name}.vemb")), recs)?;
            }
            cfg.write_run_json(&cfg.output_dir, &["probe", "synth"])?;
            println!("synthetic embeddings: {} / {} / {}", splits[0].len(), splits[1].len(), splits[2].len());
        }
        ProbeCommand::Train { data, task, manifest, .. } => {
            let load = |name: &str| probe::read_vemb(&data.join(format!("{name}.vemb")));
            let (train, dev, test) = (load("train")?, load("dev")?, load("test")?);
            if let Some(m) = manifest {
                let rows: Vec<serde_json::Value> = visarith_core::jsonl::read_jsonl(m)?;
                let ids = rows.iter().filter_map(|r| r.get("id")?.as_str().map(String::from)).collect();
                for set in [&train, &dev, &test] {
                    probe::check_ids(set, &ids).map_err(|e| VerifyFailed(e.to_string()))?;
                }
            }
            let (p, report) = probe::run_probe(task, &train, &dev, &test, &cfg.probe).map_err(|e| match e {
                probe::ProbeError::SingleClass | probe::ProbeError::Dimension { .. } => {
                    anyhow::Error::new(UsageError(e.to_string()))
                }
                other => other.into(),
            })?;
            write_json_file(&cfg.output_dir.join("probe.json"), &p)?;
            write_json_file(&cfg.output_dir.join("report.json"), &report)?;
            cfg.write_run_json(&cfg.output_dir, &["probe", "train"])?;
            println!(
                "{task}: best epoch {} dev_acc {:.4} test_acc {:.4} auc {:.4}",
                report.best_epoch, report.dev_acc, report.test_acc, report.auc
            );
        }
        ProbeCommand::Eval { probe: probe_path, data } => {
            let text = std::fs::read_to_string(probe_path).with_context(|| format!("reading {}", probe_path.display()))?;
            let p: probe::LinearProbe = serde_json::from_str(&text).map_err(|e| UsageError(e.to_string()))?;
            let recs = probe::read_vemb(data)?;
            let acc = probe::evaluate_accuracy(&p, &recs)?;
            let labels: Vec<u8> = recs.iter().map(|r| r.label).collect();
            let auc = probe::compute_auc(&probe::scores(&p, &recs), &labels)?;
            println!("accuracy: {acc:.4}");
            println!("auc: {auc:.4}");
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct CheckReport {
    loss_at_reference: f64,
    ln2_error: f64,
    gradient: dpo::GradCheckReport,
    pass: bool,
}

fn dpo_command(cfg: &RunConfig, cmd: &DpoCommand, out: Option<&Path>) -> anyhow::Result<()> {
    match cmd {
        DpoCommand::Check { points } => {
            let start = std::time::Instant::now();
            let mut st = derive_stream(cfg.master_seed, StreamPath::new(31, 0, 0));
            let pairs = dpo::random_pairs(64, 8, 3, &mut st);
            let reference = dpo::ToyPolicy { weights: (0..8).map(|_| st.uniform(-1.0, 1.0)).collect() };
            let g = dpo::gradient_check(&pairs, &reference, cfg.dpo.beta, *points, 1e-5, cfg.master_seed)?;
            let ln2_error = (g.loss_at_reference - 2f64.ln()).abs();
            let pass = ln2_error <= 1e-12 && g.max_rel_error < 1e-6;
            println!("loss_at_reference: {:.6}", g.loss_at_reference);
            println!("ln2_error: {ln2_error:.3e}");
            println!("gradient_points: {}", g.points);
            println!("max_rel_error: {:.3e}", g.max_rel_error);
            println!("elapsed_s: {:.3}", start.elapsed().as_secs_f64());
            let report = CheckReport { loss_at_reference: g.loss_at_reference, ln2_error, gradient: g, pass };
            if let Some(out) = out {
                write_json_file(&out.join("dpo_check.json"), &report)?;
            }
            if !pass {
                bail!(VerifyFailed("gradient check failed".into()));
            }
            println!("pass");
        }
        DpoCommand::ToyTrain { method, n, paraphrase_k, .. } => {
            let base = dpo::toy_dataset(*n, cfg.master_seed).map_err(|e| UsageError(e.to_string()))?;
            let mut runs: Vec<(&str, Vec<PreferencePair>)> = vec![("base", base.clone())];
            if *paraphrase_k > 0 {
                let settings = cogalign::ParaphraseSettings { k: *paraphrase_k, ..cfg.paraphrase.clone() };
                let expanded = base.iter().flat_map(|p| cogalign::paraphrase_expand(p, &FallbackOnly, &settings).0).collect();
                runs.push(("paraphrased", expanded));
            }
            let methods: Vec<Method> = match method {
                ToyMethod::Dpo => vec![Method::Dpo],
                ToyMethod::Sft => vec![Method::Sft],
                ToyMethod::Both => vec![Method::Dpo, Method::Sft],
            };
            #[derive(Serialize)]
            struct Row {
                data: String,
                #[serde(flatten)]
                report: dpo::ToyReport,
            }
            let mut rows = Vec::new();
            for (data, pairs) in &runs {
                for &m in &methods {
                    let (_, report) = dpo::train_toy(pairs, m, &cfg.dpo)?;
                    println!(
                        "{data} {}: heldout_pairwise_accuracy {:.4} ({} train / {} held out)",
                        m.name(),
                        report.heldout_pairwise_accuracy,
                        report.train_pairs,
                        report.heldout_pairs
                    );
                    rows.push(Row { data: data.to_string(), report });
                }
            }
            if let Some(out) = out {
                write_json_file(&out.join("toy_report.json"), &rows)?;
                cfg.write_run_json(out, &["dpo", "toy-train"])?;
            }
        }
    }
    Ok(())
}

fn stats_command(manifest: &Path, out: Option<&Path>) -> anyhow::Result<()> {
    let hists = stats::manifest_histograms(manifest)?
        .ok_or_else(|| UsageError(format!("{} is not a known manifest", manifest.display())))?;
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| manifest.with_file_name("stats"));
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    write_json_file(&dir.join("stats.json"), &hists)?;
    for h in &hists {
        let p = dir.join(format!("{}.svg", stats::file_stem(&h.name)));
        std::fs::write(&p, stats::histogram_svg(h)).with_context(|| format!("writing {}", p.display()))?;
    }
    println!("{} histograms written to {}", hists.len(), dir.display());
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(UsageError("--jobs must be at least 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(j).build_global().context("starting worker pool")?;
    }
    let cfg = effective_config(&cli)?;
    match &cli.command {
        Command::Gen(GenCommand::Probing { task, .. }) => gen_probing(&cfg, *task),
        Command::Gen(GenCommand::Cogalign { .. }) => gen_cogalign(&cfg),
        Command::Gen(GenCommand::Isolation { .. }) => gen_isolation(&cfg),
        Command::Verify { paths } => verify(paths),
        Command::Probe(cmd) => probe_command(&cfg, cmd),
        Command::Dpo(cmd) => dpo_command(&cfg, cmd, cli.out.as_deref()),
        Command::Stats { manifest } => stats_command(manifest, cli.out.as_deref()),
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if cause.is::<UsageError>() {
            return EXIT_USAGE;
        }
        if cause.is::<VerifyFailed>() {
            return EXIT_VERIFY;
        }
        if cause.is::<std::io::Error>() || cause.is::<serde_json::Error>() {
            return EXIT_IO;
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.log_level);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = exit_code(&e);
            let chain: Vec<String> = e.chain().map(|c| c.to_string()).collect();
            let event = serde_json::json!({ "level": "ERROR", "error": e.to_string(), "causes": chain, "exit_code": code });
            eprintln!("{event}");
            ExitCode::from(code)
        }
    }
}
