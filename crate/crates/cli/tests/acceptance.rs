//! End-to-end acceptance run: drives the `visarith` binary at full default
//! sizes and checks each criterion with oracles written here. Prints one
//! PASS/FAIL line per criterion and exits nonzero if any fails.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use sha2::{Digest, Sha256};
use visarith_core::cogalign::{evaluate, parse_statement, signed_margin, CogTask, PreferencePair, TEMPLATES};
use visarith_core::geometry::{derive_stream, StreamPath};
use visarith_core::jsonl::read_jsonl;
use visarith_core::probe::compute_auc;
use visarith_core::probing::{IsolationMeta, IsolationRecord, ProbeInstance, ProbeTask, Split};
use visarith_core::render::{decode_png, emit_svg, parse_svg, rasterize, render_png, CanvasSpec, PaletteColor, Rgb8Image};
use visarith_core::scene::{Element, Scene};

const BIN: &str = env!("CARGO_BIN_EXE_visarith");

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn run(args: &[&str]) -> Result<(Output, Duration), String> {
    let start = Instant::now();
    let out = Command::new(BIN)
        .args(["--log-level", "warn"])
        .args(args)
        .output()
        .map_err(|e| format!("spawning visarith: {e}"))?;
    Ok((out, start.elapsed()))
}

fn run_ok(args: &[&str]) -> Result<(String, Duration), String> {
    let (out, t) = run(args)?;
    if !out.status.success() {
        return Err(format!(
            "`visarith {}` exited {:?}: {}",
            args.join(" "),
            out.status.code(),
            String::from_utf8_lossy(&out.stderr).lines().last().unwrap_or("")
        ));
    }
    Ok((String::from_utf8_lossy(&out.stdout).into_owned(), t))
}

fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 temp path")
}

fn read_json(path: &Path) -> Result<serde_json::Value, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn files_under(dir: &Path, out: &mut Vec<PathBuf>) {
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    entries.sort();
    for e in entries {
        if e.is_dir() {
            files_under(&e, out);
        } else {
            out.push(e);
        }
    }
}

/// SHA-256 over every relative path and file body under `dir`.
fn dir_hash(dir: &Path) -> String {
    let mut files = Vec::new();
    files_under(dir, &mut files);
    let mut h = Sha256::new();
    for f in files {
        h.update(f.strip_prefix(dir).unwrap().to_string_lossy().as_bytes());
        h.update([0]);
        h.update(std::fs::read(&f).unwrap());
    }
    hex::encode(h.finalize())
}

fn max_channel_diff(a: &Rgb8Image, b: &Rgb8Image) -> u8 {
    assert_eq!((a.width, a.height), (b.width, b.height));
    a.pixels.iter().zip(&b.pixels).map(|(x, y)| x.abs_diff(*y)).max().unwrap_or(0)
}

struct Timings {
    probing: BTreeMap<ProbeTask, Duration>,
    cogalign: Duration,
    isolation: Duration,
}

fn generate_full(root: &Path) -> Result<Timings, String> {
    let mut probing = BTreeMap::new();
    for t in ProbeTask::ALL {
        let (_, d) = run_ok(&["--out", p(root), "gen", "probing", "--task", t.name()])?;
        probing.insert(t, d);
    }
    let (_, cogalign) = run_ok(&["--out", p(root), "gen", "cogalign"])?;
    let (_, isolation) = run_ok(&["--out", p(root), "gen", "isolation"])?;
    Ok(Timings { probing, cogalign, isolation })
}

fn c1_protocol(root: &Path, t: &Timings) -> Check {
    let mut slowest = Duration::ZERO;
    for task in ProbeTask::ALL {
        let dir = root.join(task.name());
        let insts: Vec<ProbeInstance> = read_jsonl(&dir.join("manifest.jsonl")).map_err(|e| e.to_string())?;
        ensure!(insts.len() == 12_000, "{task}: {} instances", insts.len());
        for (split, want) in [(Split::Train, 10_000), (Split::Dev, 1_000), (Split::Test, 1_000)] {
            let s: Vec<&ProbeInstance> = insts.iter().filter(|i| i.split == split).collect();
            let pos = s.iter().filter(|i| i.label == 1).count();
            ensure!(s.len() == want, "{task} {}: {} instances, want {want}", split.name(), s.len());
            ensure!(2 * pos == want, "{task} {}: {pos} positives of {want}", split.name());
        }
        let missing = insts.iter().filter(|i| !dir.join(&i.image).is_file()).count();
        ensure!(missing == 0, "{task}: {missing} images missing");
        let d = t.probing[&task];
        ensure!(d < Duration::from_secs(300), "{task} took {:.1}s", d.as_secs_f64());
        slowest = slowest.max(d);
    }
    Ok(format!("4 x 12000 (10000/1000/1000, 50/50 per split), slowest task {:.1}s", slowest.as_secs_f64()))
}

fn c2_soundness(root: &Path) -> Check {
    let mut args = vec!["verify".to_string()];
    args.extend(ProbeTask::ALL.iter().map(|t| root.join(t.name()).display().to_string()));
    args.push(root.join("cogalign").display().to_string());
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    let (stdout, _) = run_ok(&args)?;
    let field = |name: &str| -> Option<usize> {
        stdout.lines().find_map(|l| l.strip_prefix(name)?.trim().parse().ok())
    };
    let (agree, disagree) = (field("agree:"), field("disagree:"));
    ensure!(disagree == Some(0), "disagree: {disagree:?}");
    ensure!(agree == Some(4 * 12_000 + 64_000), "agree: {agree:?}");
    Ok(format!("{} records recomputed, 0 disagreements", agree.unwrap()))
}

fn c3_cogalign(root: &Path, t: &Timings) -> Check {
    let pairs: Vec<PreferencePair> =
        read_jsonl(&root.join("cogalign/manifest.jsonl")).map_err(|e| e.to_string())?;
    ensure!(pairs.len() == 64_000, "{} pairs", pairs.len());
    let mut worst_dev = 0.0f64;
    let used: std::collections::BTreeSet<&str> = pairs
        .iter()
        .flat_map(|p| [p.provenance.chosen_template.as_str(), p.provenance.rejected_template.as_str()])
        .collect();
    for t in TEMPLATES {
        let id = format!("{}/{}", t.task.name(), t.row);
        ensure!(used.contains(id.as_str()), "template {id} never emitted");
    }
    for task in CogTask::ALL {
        let ps: Vec<&PreferencePair> = pairs.iter().filter(|p| p.task == task).collect();
        ensure!(ps.len() == 8_000, "{task}: {} pairs", ps.len());
        let expect = 8_000.0 / task.outcomes().len() as f64;
        for o in task.outcomes() {
            let n = ps.iter().filter(|p| p.meta.outcome == *o).count() as f64;
            let dev = (n - expect).abs() / expect;
            ensure!(dev <= 0.02, "{task}/{o}: {n} pairs, expected {expect}");
            worst_dev = worst_dev.max(dev);
        }
        for pair in ps {
            let objs = &pair.meta.objects;
            for (text, want) in [(&pair.chosen, true), (&pair.rejected, false)] {
                let (claim, _) = parse_statement(task, text).map_err(|e| format!("{}: {e}", pair.id))?;
                let truth = evaluate(&claim, objs).map_err(|e| e.to_string())?;
                let margin = signed_margin(&claim, objs).map_err(|e| e.to_string())?;
                ensure!(truth == want, "{}: {text:?} evaluates {truth}", pair.id);
                ensure!((margin > 0.0) == want, "{}: {text:?} has margin {margin}", pair.id);
            }
        }
    }
    Ok(format!(
        "64000 pairs, 8000 per task, worst outcome deviation {:.2}%, all {} template rows used, chosen true / rejected false, {:.1}s",
        100.0 * worst_dev,
        TEMPLATES.len(),
        t.cogalign.as_secs_f64()
    ))
}

fn c4_determinism(work: &Path) -> Check {
    let dir = work.join("det");
    let gen = |jobs: &str| -> Result<String, String> {
        let _ = std::fs::remove_dir_all(&dir);
        let base = ["--jobs", jobs, "--seed", "11", "--out", p(&dir)];
        let mut a = base.to_vec();
        a.extend(["gen", "probing", "--n", "240"]);
        run_ok(&a)?;
        let mut a = base.to_vec();
        a.extend(["gen", "cogalign", "--n", "400", "--paraphrase", "fallback"]);
        run_ok(&a)?;
        let mut a = base.to_vec();
        a.extend(["gen", "isolation", "--per-class", "5"]);
        run_ok(&a)?;
        Ok(dir_hash(&dir))
    };
    let one = gen("1")?;
    let eight = gen("8")?;
    let mut files = Vec::new();
    files_under(&dir, &mut files);
    let pngs = files.iter().filter(|f| f.extension().is_some_and(|e| e == "png")).count();
    ensure!(one == eight, "directory hash differs: {one} vs {eight}");
    ensure!(pngs == 4 * 240 + 400 + 2 * 50, "{pngs} images");
    Ok(format!("{} files ({pngs} PNGs) identical at 1 and 8 jobs, sha256 {}", files.len(), &one[..16]))
}

fn c5_dpo_check(work: &Path) -> Check {
    let out = work.join("dpo_check");
    let (stdout, d) = run_ok(&["--out", p(&out), "dpo", "check"])?;
    ensure!(stdout.contains("loss_at_reference: 0.693147"), "stdout: {stdout}");
    let r = read_json(&out.join("dpo_check.json"))?;
    let loss = r["loss_at_reference"].as_f64().ok_or("no loss")?;
    let rel = r["gradient"]["max_rel_error"].as_f64().ok_or("no max_rel_error")?;
    let points = r["gradient"]["points"].as_u64().ok_or("no points")?;
    let ln2_err = (loss - std::f64::consts::LN_2).abs();
    ensure!(ln2_err <= 1e-12, "|loss - ln 2| = {ln2_err:e}");
    ensure!(points == 50, "{points} gradient points");
    ensure!(rel <= 1e-6, "max relative gradient error {rel:e}");
    ensure!(d < Duration::from_secs(10), "took {:.1}s", d.as_secs_f64());
    Ok(format!("|loss - ln 2| = {ln2_err:.1e}, max rel grad error {rel:.1e} over 50 points, {:.2}s", d.as_secs_f64()))
}

fn c6_toy_contrast(work: &Path) -> Check {
    let out = work.join("toy");
    let (_, d) = run_ok(&["--out", p(&out), "dpo", "toy-train", "--method", "both", "--n", "2000"])?;
    let rows = read_json(&out.join("toy_report.json"))?;
    let acc = |m: &str| -> Option<f64> {
        rows.as_array()?
            .iter()
            .find(|r| r["method"] == m && r["data"] == "base")?["heldout_pairwise_accuracy"]
            .as_f64()
    };
    let (dpo, sft) = (acc("dpo").ok_or("no dpo row")?, acc("sft").ok_or("no sft row")?);
    ensure!(dpo >= sft, "dpo {dpo:.4} < sft {sft:.4}");
    ensure!(dpo >= 0.95, "dpo accuracy {dpo:.4}");
    ensure!(d < Duration::from_secs(60), "took {:.1}s", d.as_secs_f64());
    Ok(format!("held-out pairwise accuracy dpo {dpo:.4} >= sft {sft:.4}, {:.1}s", d.as_secs_f64()))
}

fn train_probe(work: &Path, name: &str, synth: &[&str], train: &[&str]) -> Result<f64, String> {
    let dir = work.join(name);
    let mut a = vec!["--out", p(&dir), "probe", "synth", "--n", "12000", "--dim", "64"];
    a.extend(synth);
    run_ok(&a)?;
    let mut a = vec!["--out", p(&dir), "probe", "train", "--data", p(&dir)];
    a.extend(train);
    run_ok(&a)?;
    read_json(&dir.join("report.json"))?["test_acc"].as_f64().ok_or_else(|| "no test_acc".into())
}

fn c7_probe(work: &Path) -> Check {
    let sep = train_probe(work, "probe_sep", &[], &[])?;
    let shuf = train_probe(work, "probe_shuf", &["--shuffle-labels"], &[])?;
    let zero = train_probe(work, "probe_zero", &[], &["--epochs", "0"])?;
    ensure!(sep >= 0.99, "separable test accuracy {sep}");
    ensure!((shuf - 0.5).abs() <= 0.05, "shuffled test accuracy {shuf}");
    ensure!(zero == 0.5, "epochs=0 test accuracy {zero}");
    Ok(format!("separable {sep:.4}, shuffled {shuf:.4}, untrained {zero}"))
}

/// Wins count 2, ties 1, over 2·P·N.
fn brute_auc(scores: &[f64], labels: &[u8]) -> f64 {
    let (mut num, mut pos, mut neg) = (0u64, 0u64, 0u64);
    for (i, &si) in scores.iter().enumerate() {
        if labels[i] != 1 {
            neg += 1;
            continue;
        }
        pos += 1;
        for (j, &sj) in scores.iter().enumerate() {
            if labels[j] == 0 {
                num += if si > sj { 2 } else if si == sj { 1 } else { 0 };
            }
        }
    }
    num as f64 / (2 * pos * neg) as f64
}

fn c8_auc() -> Check {
    let mut st = derive_stream(2024, StreamPath::new(99, 0, 0));
    let mut ties = 0usize;
    for k in 0..1000 {
        let n = 2 + (st.uniform(0.0, 199.0) as usize).min(198);
        let levels = 1 + (st.uniform(0.0, 12.0) as usize);
        let scores: Vec<f64> = (0..n).map(|_| (st.uniform(0.0, levels as f64).floor()) / levels as f64).collect();
        let mut labels: Vec<u8> = (0..n).map(|_| u8::from(st.uniform(0.0, 1.0) < 0.5)).collect();
        labels[0] = 0;
        labels[1] = 1;
        let fast = compute_auc(&scores, &labels).map_err(|e| e.to_string())?;
        let slow = brute_auc(&scores, &labels);
        ensure!(fast == slow, "instance {k}: rank AUC {fast} vs pairwise {slow}");
        let mut s = scores.clone();
        s.sort_by(f64::total_cmp);
        s.dedup();
        ties += usize::from(s.len() < n);
    }
    Ok(format!("1000 instances exactly equal ({ties} with tied scores)"))
}

/// Segment length from ink area: a round-capped stroke of width `w`
/// covers `L·w + π(w/2)²`.
fn ink_length(img: &Rgb8Image, w: f64) -> f64 {
    let ink: f64 = img.pixels.chunks(3).map(|px| 1.0 - f64::from(px[0]) / 255.0).sum();
    (ink - std::f64::consts::PI * (w / 2.0).powi(2)) / w
}

fn c9_isolation(root: &Path, t: &Timings) -> Check {
    let angle_grid = [10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0, 100.0];
    let line_grid = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];
    let canvas = CanvasSpec::default();
    let mut worst_px = 0.0f64;
    for (kind, grid) in [("angle", angle_grid), ("line", line_grid)] {
        let dir = root.join("isolation").join(kind);
        let recs: Vec<IsolationRecord> = read_jsonl(&dir.join("manifest.jsonl")).map_err(|e| e.to_string())?;
        ensure!(recs.len() == 1000, "{kind}: {} images", recs.len());
        for g in grid {
            let n = recs.iter().filter(|r| r.class == g).count();
            ensure!(n == 100, "{kind} class {g}: {n} images");
        }
        for r in &recs {
            ensure!(dir.join(&r.image).is_file(), "{}: image missing", r.id);
            match &r.meta {
                IsolationMeta::Angle { wedge } => ensure!(wedge.sweep_deg == r.class, "{}: sweep {}", r.id, wedge.sweep_deg),
                IsolationMeta::Line { length, .. } => {
                    let want = r.class * f64::from(canvas.width);
                    ensure!((length - want).abs() <= 1e-6 * want, "{}: length {length} for class {}", r.id, r.class);
                    let img = decode_png(&std::fs::read(dir.join(&r.image)).unwrap()).map_err(|e| e.to_string())?;
                    let traced = ink_length(&img, canvas.stroke_width);
                    worst_px = worst_px.max((traced - want).abs());
                    ensure!((traced - want).abs() <= 1.0, "{}: traced {traced:.2}px, class length {want}px", r.id);
                }
            }
        }
    }
    Ok(format!(
        "2 x 1000 images, 10 classes of 100 on the exact grids, traced line length within {worst_px:.2}px, {:.1}s",
        t.isolation.as_secs_f64()
    ))
}

fn c10_renderer(root: &Path) -> Check {
    let canvas = CanvasSpec::default();
    let bg = decode_png(&render_png(&Scene::default(), &canvas).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    ensure!(bg.pixels.iter().all(|&v| v == 255), "empty scene is not pure background");
    let dot = Scene::new(vec![Element::Dot {
        center: visarith_core::geometry::Point2::new(200.0, 260.0),
        radius: 5.0,
        color: PaletteColor::Red,
    }]);
    let img = decode_png(&render_png(&dot, &canvas).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    ensure!(img.pixel(200, 260) == [228, 26, 28], "red dot center is {:?}", img.pixel(200, 260));

    let mut files = Vec::new();
    files_under(root, &mut files);
    let mut checked = 0usize;
    for f in files.iter().filter(|f| f.extension().is_some_and(|e| e == "png")) {
        let img = decode_png(&std::fs::read(f).unwrap()).map_err(|e| format!("{}: {e}", f.display()))?;
        let first = [img.pixels[0], img.pixels[1], img.pixels[2]];
        ensure!(img.pixels.chunks(3).any(|px| px != first), "{} is blank", f.display());
        checked += 1;
    }

    // SVG of each scene, rasterized by the reference renderer, against the PNG on disk
    let mut scenes: Vec<(PathBuf, Scene)> = Vec::new();
    for task in ProbeTask::ALL {
        let dir = root.join(task.name());
        let insts: Vec<ProbeInstance> = read_jsonl(&dir.join("manifest.jsonl")).map_err(|e| e.to_string())?;
        scenes.extend(insts.iter().step_by(240).map(|i| (dir.join(&i.image), i.meta.objects.scene())));
    }
    let dir = root.join("cogalign");
    let pairs: Vec<PreferencePair> = read_jsonl(&dir.join("manifest.jsonl")).map_err(|e| e.to_string())?;
    scenes.extend(pairs.iter().step_by(640).map(|p| (dir.join(&p.image), p.meta.objects.scene())));
    for kind in ["angle", "line"] {
        let dir = root.join("isolation").join(kind);
        let recs: Vec<IsolationRecord> = read_jsonl(&dir.join("manifest.jsonl")).map_err(|e| e.to_string())?;
        scenes.extend(recs.iter().step_by(50).map(|r| (dir.join(&r.image), r.meta.scene())));
    }
    let mut worst = 0u8;
    for (png, scene) in &scenes {
        let svg = emit_svg(scene, &canvas).map_err(|e| e.to_string())?;
        let (c, prims) = parse_svg(&svg).map_err(|e| e.to_string())?;
        ensure!((c.width, c.height) == (canvas.width, canvas.height), "svg size {}x{}", c.width, c.height);
        let from_svg = rasterize(&prims, &canvas);
        let from_png = decode_png(&std::fs::read(png).unwrap()).map_err(|e| e.to_string())?;
        let d = max_channel_diff(&from_svg, &from_png);
        ensure!(d <= 8, "{}: max channel difference {d}", png.display());
        worst = worst.max(d);
    }
    Ok(format!(
        "background pure, red dot exact, {checked} PNGs non-blank, {} SVG cross-renders max diff {worst}",
        scenes.len()
    ))
}

fn main() {
    // libtest flags such as --nocapture are accepted and ignored
    let work = tempfile::tempdir().expect("temp dir");
    let root = work.path().join("full");
    let started = Instant::now();
    let timings = generate_full(&root);

    let mut results: Vec<(u8, &str, Check)> = Vec::new();
    match &timings {
        Ok(t) => {
            results.push((1, "dataset protocol", c1_protocol(&root, t)));
            results.push((2, "label soundness", c2_soundness(&root)));
            results.push((3, "cogalign scale and balance", c3_cogalign(&root, t)));
        }
        Err(e) => {
            for (i, name) in [(1, "dataset protocol"), (2, "label soundness"), (3, "cogalign scale and balance")] {
                results.push((i, name, Err(format!("generation failed: {e}"))));
            }
        }
    }
    results.push((4, "determinism across job counts", c4_determinism(work.path())));
    results.push((5, "dpo numeric core", c5_dpo_check(work.path())));
    results.push((6, "dpo vs sft toy contrast", c6_toy_contrast(work.path())));
    results.push((7, "probe harness sanity", c7_probe(work.path())));
    results.push((8, "auc oracle equivalence", c8_auc()));
    match &timings {
        Ok(t) => {
            results.push((9, "isolation sets", c9_isolation(&root, t)));
            results.push((10, "renderer fidelity", c10_renderer(&root)));
        }
        Err(e) => {
            results.push((9, "isolation sets", Err(format!("generation failed: {e}"))));
            results.push((10, "renderer fidelity", Err(format!("generation failed: {e}"))));
        }
    }

    let mut failed = 0;
    for (i, name, r) in &results {
        match r {
            Ok(detail) => println!("PASS {i:>2} {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {i:>2} {name}: {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed in {:.0}s", results.len() - failed, started.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
