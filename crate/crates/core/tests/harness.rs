use delegation_lab::harness::{parse_config, run_experiments, Experiment, ExperimentConfig, CSV_HEADER};
use delegation_lab::parallel::Execution;

fn scratch(tag: &str) -> std::path::PathBuf {
    std::env::temp_dir().join(format!("delegation-lab-{tag}-{}", std::process::id()))
}

#[test]
fn a_config_file_becomes_one_report_per_output() {
    let dir = scratch("harness");
    let shared = dir.join("shared.csv");
    let alone = dir.join("nested/alone.csv");
    let text = format!(
        r#"{{"experiments": [
            {{"experiment": "prophet_half", "seed": 3, "output": {shared:?},
              "instance": {{"type": "pool", "dists": [{{"atoms": [[0, 0.5], [1, 0.5]]}}], "counts": [3]}}}},
            {{"experiment": "budgeted_0316", "seed": 3, "output": {shared:?},
              "instance": {{"type": "random_boxes", "count": 5, "max_m": 6}}}},
            {{"experiment": "tightness_half", "n": 10, "output": {alone:?}}}
        ]}}"#
    );
    let cfgs = parse_config(&text).unwrap();
    let rows = run_experiments(&cfgs, Execution::default()).unwrap();
    assert!(rows.iter().all(|r| r.pass), "{rows:#?}");

    let shared_text = std::fs::read_to_string(&shared).unwrap();
    let lines: Vec<&str> = shared_text.lines().collect();
    assert!(lines[0].starts_with('#'));
    assert_eq!(lines[1], CSV_HEADER.join(","));
    // two median rows and three budgeted rows
    assert_eq!(lines.len(), 2 + 2 + 3);
    let alone_text = std::fs::read_to_string(&alone).unwrap();
    assert_eq!(alone_text.lines().count(), 3);
    assert!(alone_text.lines().last().unwrap().starts_with("tightness_half,10,"));
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn sequential_and_parallel_reports_match() {
    let text = r#"[
        {"experiment": "delegation_part3", "n": 10, "trials": 20000, "seed": 5,
         "instance": {"type": "product", "x": {"uniform": [0, 1]}, "y": {"uniform": [0, 1]}}},
        {"experiment": "binary_mx", "seed": 5, "instance": {"type": "random_boxes", "count": 20, "max_m": 8}}
    ]"#;
    let cfgs = parse_config(text).unwrap();
    let a = run_experiments(&cfgs, Execution::Sequential).unwrap();
    let b = run_experiments(&cfgs, Execution::Parallel).unwrap();
    assert_eq!(a, b);
}

#[test]
fn invalid_configs_are_rejected_before_running() {
    let err = parse_config(r#"[{"experiment": "lemma_suite", "n": 2}]"#).unwrap_err();
    assert!(err.to_string().contains("[0].n"), "{err}");

    let dir = scratch("rejected");
    let out = dir.join("never.csv");
    let mut good = ExperimentConfig::new(Experiment::TightnessHalf).with_n(10);
    good.output = Some(out.clone());
    let bad = ExperimentConfig::new(Experiment::LemmaSuite).with_n(2);
    assert!(run_experiments(&[good, bad], Execution::default()).is_err());
    assert!(!out.exists());
}
