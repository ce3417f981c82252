use std::fs;

use torus_critical::constants::ScheduleRule;
use torus_critical::experiment::{convergence_sweep, run_experiment, ExperimentConfig};
use torus_critical::io::{
    load_config, parse_config_str, sweep_plot_data, to_json, write_results, write_sweep, Overrides, Summary,
};
use torus_critical::parallel::Execution;
use torus_critical::Error;

fn small() -> ExperimentConfig {
    let mut c = ExperimentConfig::minimal(2, 1, 500.0, 40, 5);
    c.schedule = ScheduleRule::Custom {
        log_n: 1.0,
        log_log_n: 1.0,
        log_log_log_n: 0.0,
        constant: 0.0,
    };
    c
}

#[test]
fn summary_reserializes_byte_identically() {
    let r = run_experiment(&small(), Execution::Parallel).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_results(dir.path(), &r).unwrap();
    let text = fs::read_to_string(dir.path().join("summary.json")).unwrap();
    let parsed = Summary::parse(&text).unwrap();
    assert_eq!(to_json(&parsed).unwrap(), text);
    assert_eq!(parsed.stats.as_ref(), Some(&r.stats));
}

#[test]
fn output_is_deterministic_and_atoms_match_counts() {
    let cfg = small();
    let a = run_experiment(&cfg, Execution::Parallel).unwrap();
    let b = run_experiment(&cfg, Execution::Sequential).unwrap();
    let (da, db) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    write_results(da.path(), &a).unwrap();
    write_results(db.path(), &b).unwrap();
    for f in ["summary.json", "atoms.csv", "bins_plot.dat", "plot.py"] {
        assert_eq!(fs::read(da.path().join(f)).unwrap(), fs::read(db.path().join(f)).unwrap(), "{f}");
    }
    let csv = fs::read_to_string(da.path().join("atoms.csv")).unwrap();
    let atoms: usize = a.results.iter().map(|r| r.atoms.len() + r.minus_atoms.len()).sum();
    assert_eq!(csv.lines().count(), atoms + 1);
    assert_eq!(csv.lines().next().unwrap(), "trial,center_0,center_1,u,sign,index");
    let bins = fs::read_to_string(da.path().join("bins_plot.dat")).unwrap();
    assert_eq!(bins.lines().filter(|l| !l.starts_with('#')).count(), 4);
}

#[test]
fn zero_trials_are_refused() {
    let mut r = run_experiment(&small(), Execution::Sequential).unwrap();
    r.results.clear();
    r.stats.trials = 0;
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(write_results(dir.path(), &r), Err(Error::Contract(_))));
    assert!(fs::read_dir(dir.path()).unwrap().next().is_none());
}

#[test]
fn config_file_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.json");
    fs::write(&p, r#"{"d": 2, "k": 1, "n": 1000, "trials": 100, "seed": 7}"#).unwrap();
    let (c, _) = load_config(&p, &Overrides { seed: Some(9), trials: Some(3), n_list: None }).unwrap();
    assert_eq!((c.seed, c.trials), (9, 3));
    let missing = dir.path().join("missing.json");
    match load_config(&missing, &Overrides::default()) {
        Err(e) => assert!(e.to_string().contains("missing.json")),
        Ok(_) => panic!("missing file accepted"),
    }
}

#[test]
fn invalid_configs_name_the_failing_condition() {
    let kd = parse_config_str(r#"{"d": 2, "k": 2, "n": 1000, "trials": 1, "seed": 1}"#).unwrap();
    assert!(kd.validate().unwrap_err().to_string().contains("k = d"));
    let empty = parse_config_str(r#"{"d": 2, "k": 1, "n": 1000, "trials": 1, "seed": 1, "u0": 50}"#).unwrap();
    assert!(empty.validate().unwrap_err().to_string().contains("empty window"));
}

#[test]
fn sweep_plot_has_one_row_per_intensity() {
    let mut cfg = small();
    cfg.trials = 20;
    let (s, stats) = convergence_sweep(&cfg, &[400.0, 500.0, 700.0], Execution::Parallel).unwrap();
    let data = sweep_plot_data(&s);
    let rows: Vec<&str> = data.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.split_whitespace().count() == 5));
    let dir = tempfile::tempdir().unwrap();
    write_sweep(dir.path(), &cfg, &s, &stats).unwrap();
    let text = fs::read_to_string(dir.path().join("summary.json")).unwrap();
    assert_eq!(to_json(&Summary::parse(&text).unwrap()).unwrap(), text);
    assert_eq!(fs::read_to_string(dir.path().join("sweep.csv")).unwrap().lines().count(), 4);
}
