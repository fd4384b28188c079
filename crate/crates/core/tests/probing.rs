use std::path::Path;

use visarith_core::probing::{
    generate_isolation_sets, generate_probing, verify_isolation_file, verify_manifest_file, ProbeTask, ProbingParams,
    QueryType,
};
use visarith_core::render::CanvasSpec;

fn rewrite_line(path: &Path, index: usize, edit: impl Fn(&str) -> String) {
    let text = std::fs::read_to_string(path).unwrap();
    let lines: Vec<String> = text.lines().enumerate().map(|(i, l)| if i == index { edit(l) } else { l.to_string() }).collect();
    std::fs::write(path, lines.join("\n") + "\n").unwrap();
}

#[test]
fn small_runs_verify_and_tampering_is_caught() {
    let dir = tempfile::tempdir().unwrap();
    for task in ProbeTask::ALL {
        let params = ProbingParams { n_total: 24, ..ProbingParams::new(task, 3) };
        let m = generate_probing(&params, dir.path()).unwrap();
        assert_eq!(m.instances.len(), 24);
        let path = dir.path().join(task.name()).join("manifest.jsonl");
        let r = verify_manifest_file(&path).unwrap();
        assert_eq!((r.agree, r.disagree.len()), (24, 0), "{task}");

        rewrite_line(&path, 5, |l| {
            if l.contains("\"label\":1") { l.replace("\"label\":1", "\"label\":0") } else { l.replace("\"label\":0", "\"label\":1") }
        });
        let r = verify_manifest_file(&path).unwrap();
        assert_eq!(r.disagree.len(), 1, "{task}");
        assert_eq!(r.disagree[0].id, m.instances[5].id);
    }
}

#[test]
fn reruns_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let params = ProbingParams { n_total: 24, query_type: QueryType::Empty, ..ProbingParams::new(ProbeTask::AngleComparison, 9) };
    generate_probing(&params, a.path()).unwrap();
    generate_probing(&params, b.path()).unwrap();
    for rel in ["manifest.jsonl", "train/000000.png", "test/000001.png"] {
        let f = |d: &Path| std::fs::read(d.join("angle_comparison").join(rel)).unwrap();
        assert_eq!(f(a.path()), f(b.path()), "{rel}");
    }
    let text = std::fs::read_to_string(a.path().join("angle_comparison/manifest.jsonl")).unwrap();
    assert!(text.lines().all(|l| l.contains("\"query\":\"\"")));
}

#[test]
fn isolation_sets_verify_and_catch_a_wrong_class() {
    let dir = tempfile::tempdir().unwrap();
    let sets = generate_isolation_sets(4, 3, &CanvasSpec::default(), dir.path()).unwrap();
    assert!(sets.iter().all(|s| s.records.len() == 30));
    for kind in ["angle", "line"] {
        let path = dir.path().join("isolation").join(kind).join("manifest.jsonl");
        let r = verify_isolation_file(&path).unwrap();
        assert_eq!((r.agree, r.disagree.len()), (30, 0), "{kind}");
    }
    let path = dir.path().join("isolation/angle/manifest.jsonl");
    rewrite_line(&path, 0, |l| l.replacen("\"class\":10.0", "\"class\":20.0", 1));
    let r = verify_isolation_file(&path).unwrap();
    assert!(!r.disagree.is_empty());
}
