use std::path::Path;
use std::process::{Command, Output};

use proptest::prelude::*;
use slelab_cli::config::{resolve, RunConfig};
use slelab_cli::store::{run_id, ResultStore};
use slelab_core::experiments::Record;

fn slelab(store: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slelab"))
        .arg("--results")
        .arg(store)
        .args(args)
        .env_remove("SLELAB_RESULTS")
        .output()
        .expect("binary runs")
}

fn records(path: &Path) -> Vec<Record> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn hit_run_is_stored_with_its_exact_value() {
    let dir = tempfile::tempdir().unwrap();
    let out = slelab(dir.path(), &["hit", "--samples", "400", "--seed", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("one-interval"));

    let store = ResultStore::open(dir.path()).unwrap();
    let manifests = store.manifests().unwrap();
    assert_eq!(manifests.len(), 1);
    let m = &manifests[0];
    assert_eq!(m.config.samples, 400);
    assert_eq!(m.run_id, run_id(&m.config));
    assert!(m.finished >= m.started);
    let recs = records(&store.records_path(&m.run_id));
    assert_eq!(recs.len(), 1);
    assert_eq!(recs[0].experiment, "one-interval");
    assert!((recs[0].exact_or_bound.unwrap() - 0.5).abs() < 1e-12);
    assert_eq!(recs[0].n_samples + recs[0].censored, 400);
}

#[test]
fn rerun_needs_force() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["hit", "--samples", "50"];
    assert!(slelab(dir.path(), &args).status.success());
    let again = slelab(dir.path(), &args);
    assert_eq!(again.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&again.stderr).contains("--force"));
    let forced = slelab(dir.path(), &["--force", "hit", "--samples", "50"]);
    assert!(forced.status.success());
    let store = ResultStore::open(dir.path()).unwrap();
    assert_eq!(store.manifests().unwrap().len(), 2);
}

#[test]
fn same_config_gives_identical_records() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["two-hit", "--samples", "300", "--seed", "11", "--eps", "0.0625,0.03125"];
    assert!(slelab(a.path(), &args).status.success());
    assert!(slelab(b.path(), &args).status.success());
    let read = |d: &Path| {
        let store = ResultStore::open(d).unwrap();
        let id = store.manifests().unwrap()[0].run_id.clone();
        std::fs::read(store.records_path(&id)).unwrap()
    };
    let (ra, rb) = (read(a.path()), read(b.path()));
    assert!(!ra.is_empty());
    assert_eq!(ra, rb);
}

#[test]
fn kappa_outside_hitting_range_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = slelab(dir.path(), &["hit", "--kappa", "9"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("(4, 8)"));
    let out = slelab(dir.path(), &["tables", "--kappa", "4"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn tables_print_f_on_the_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = slelab(dir.path(), &["tables", "--kappa", "6", "--grid", "0:1:0.25"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<(f64, f64)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let (v, f) = l.split_once(',').unwrap();
            (v.parse().unwrap(), f.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[0], (0.0, 1.0));
    assert!(rows[4].1.abs() < 1e-10);
    // F(v) + F(1 - v) = 1 at kappa = 6
    for (v, f) in &rows {
        let (_, g) = rows.iter().find(|(w, _)| (w - (1.0 - v)).abs() < 1e-12).unwrap();
        assert!((f + g - 1.0).abs() < 1e-10, "v = {v}");
    }
    // tables never touch the store
    assert!(!dir.path().join("manifests.jsonl").exists());
}

#[test]
fn provenance_is_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("run.json");
    std::fs::write(&file, r#"{"experiment": "hit", "samples": 60, "seed": 4, "x": 0.8}"#).unwrap();
    let out = slelab(
        dir.path(),
        &["--config", file.to_str().unwrap(), "hit", "--seed", "5"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("samples = 60 (file)"), "{err}");
    assert!(err.contains("seed = 5 (flag)"), "{err}");
    assert!(err.contains("x = 0.8 (file)"), "{err}");
    assert!(err.contains("kappa = 6.0 (default)"), "{err}");
}

#[test]
fn unknown_config_keys_fail() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.json");
    std::fs::write(&file, r#"{"samples": 60, "dt": 0.001}"#).unwrap();
    let out = slelab(dir.path(), &["--config", file.to_str().unwrap(), "hit"]);
    assert_eq!(out.status.code(), Some(1));
}

fn opt<T: std::fmt::Debug + Clone + 'static>(s: impl Strategy<Value = T> + 'static) -> BoxedStrategy<Option<T>> {
    prop::option::of(s).boxed()
}

fn run_config() -> impl Strategy<Value = RunConfig> {
    (
        (
            opt(prop::sample::select(vec!["hit", "two-hit", "dimension", "near-miss", "scaling", "tables"])),
            opt(4.01f64..7.99),
            opt(1u64..1_000_000),
            opt(any::<u64>()),
            opt((1u32..6, 6u32..14).prop_map(|(a, b)| [a, b])),
            opt(0.01f64..0.3),
            opt(0.01f64..1.0),
        ),
        (
            opt(0.5f64..3.0),
            opt(prop::collection::vec(1e-4f64..0.1, 1..5)),
            opt(prop::collection::vec(1e-3f64..0.1, 1..5)),
            opt((0.0f64..0.5, 0.5f64..1.0, 1e-3f64..0.1).prop_map(|(a, b, c)| format!("{a}:{b}:{c}"))),
            opt(1e-3f64..0.5),
            opt(1000usize..100_000_000),
            opt(1e-3f64..1.0),
        ),
    )
        .prop_map(
            |((experiment, kappa, samples, seed, levels, delta, y), (x, eps, radii, grid, rel_step, max_steps, mesh))| {
                RunConfig {
                    experiment: experiment.map(str::to_string),
                    kappa,
                    samples,
                    seed,
                    levels,
                    delta,
                    y,
                    x,
                    eps,
                    radii,
                    grid,
                    rel_step,
                    max_steps,
                    mesh,
                }
            },
        )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn config_json_round_trip(cfg in run_config()) {
        let text = serde_json::to_string(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        let experiment = cfg.experiment.clone().unwrap_or_else(|| "hit".into());
        let (r1, _) = resolve(&experiment, &cfg, &RunConfig::default()).unwrap();
        let r2: slelab_cli::config::Resolved = serde_json::from_str(&serde_json::to_string(&r1).unwrap()).unwrap();
        prop_assert_eq!(run_id(&r1), run_id(&r2));
    }
}
