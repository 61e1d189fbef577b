//! Acceptance: end-to-end pipeline determinism. The remaining criteria live
//! in the core crate's acceptance suite.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use folim_cli::{plain_path_text, run_pipeline, PipelineArgs};

fn collect_files(dir: &Path, into: &mut BTreeMap<PathBuf, Vec<u8>>, root: &Path) {
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            collect_files(&path, into, root);
        } else {
            let rel = path.strip_prefix(root).unwrap().to_path_buf();
            into.insert(rel, fs::read(&path).unwrap());
        }
    }
}

fn pipeline_args(graphs: Vec<PathBuf>, out: PathBuf) -> PipelineArgs {
    PipelineArgs {
        k: 1,
        depth: 3,
        window: 3,
        epsilon: "1/4".into(),
        growth: 4,
        cap: 64,
        n: 20_000,
        seed: 7,
        path_bound: 6,
        template_cap: 8,
        walk_len: 16,
        budget: 10_000_000,
        color_filter: None,
        out,
        graphs,
    }
}

#[test]
fn criterion_11_pipeline_determinism() {
    let base = std::env::temp_dir().join(format!("folim-acceptance-{}", std::process::id()));
    let _ = fs::remove_dir_all(&base);
    fs::create_dir_all(&base).unwrap();

    let mut graphs = Vec::new();
    for n in [8usize, 16, 32, 64] {
        let path = base.join(format!("p{n}.graph"));
        fs::write(&path, plain_path_text(n)).unwrap();
        graphs.push(path);
    }

    let out1 = base.join("run1");
    let out2 = base.join("run2");
    let outcome1 = run_pipeline(&pipeline_args(graphs.clone(), out1.clone())).unwrap();
    let outcome2 = run_pipeline(&pipeline_args(graphs, out2.clone())).unwrap();

    let all_pass =
        outcome1.reports.iter().all(|r| r.passed()) && outcome2.reports.iter().all(|r| r.passed());

    let mut files1 = BTreeMap::new();
    let mut files2 = BTreeMap::new();
    collect_files(&out1, &mut files1, &out1);
    collect_files(&out2, &mut files2, &out2);
    let identical = files1 == files2 && !files1.is_empty();

    println!(
        "criterion 11 (pipeline determinism): {}",
        if all_pass && identical { "PASS" } else { "FAIL" }
    );
    assert!(
        all_pass,
        "pipeline checks failed: {:?}",
        outcome1
            .reports
            .iter()
            .filter(|r| !r.passed())
            .map(|r| r.line())
            .collect::<Vec<_>>()
    );
    assert!(identical, "artifacts differ between the two runs");
    let _ = fs::remove_dir_all(&base);
}
