use std::process::Command as Process;

use openmem::config::{parse_config, RunConfig};
use openmem::record::{matrix, matrix_from_value, num, ResultRecord};
use openmem::run::{parallel_inversion, run_with_threads, Command};
use openmem_core::model::catalog_model;
use openmem_core::timedomain::inverse_laplace_with;
use openmem_core::{CMatrix, ContourSpec, EffectiveSystem, TimeGrid, C64};
use proptest::prelude::*;
use serde_json::json;

fn bits(m: &CMatrix) -> Vec<(u64, u64)> {
    m.iter().map(|z| (z.re.to_bits(), z.im.to_bits())).collect()
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        any::<f64>().prop_filter("finite", |x| x.is_finite()),
        -1e3f64..1e3,
        Just(0.0),
        Just(-0.0),
        Just(f64::MIN_POSITIVE),
    ]
}

proptest! {
    #[test]
    fn record_json_round_trip_is_bit_exact(
        n in 1usize..4,
        entries in proptest::collection::vec((finite(), finite()), 9),
        extra in finite(),
    ) {
        let m = CMatrix::from_fn(n, n, |i, j| {
            let (re, im) = entries[i * 3 + j];
            C64::new(re, im)
        });
        let model = catalog_model("QB3", 0).unwrap();
        let rec = ResultRecord {
            command: "test".into(),
            version: "0".into(),
            model: openmem::record::model_info(&model),
            parameters: json!({ "x": num(extra) }),
            payload: json!({ "m": matrix(&m), "inf": num(f64::INFINITY) }),
            diagnostics: Default::default(),
        };
        let text = rec.to_json();
        let back = ResultRecord::from_json(&text).unwrap();
        prop_assert_eq!(&back, &rec);
        let m2 = matrix_from_value(&back.payload["m"]).unwrap();
        prop_assert_eq!(bits(&m2), bits(&m));
        prop_assert_eq!(back.to_json(), text);
    }
}

#[test]
fn parallel_node_evaluation_matches_sequential_bitwise() {
    let m = catalog_model("QB3", 0).unwrap();
    let sys = EffectiveSystem::new(&m).unwrap();
    let grid = TimeGrid::uniform(4.0, 9).unwrap();
    let c = ContourSpec::default_for(&m, 4.0);
    let seq = inverse_laplace_with(&m, &sys, &c, &grid).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let par = pool.install(|| parallel_inversion(&m, &sys, c, &grid).unwrap());
    for (a, b) in seq.states.iter().zip(&par.states) {
        assert_eq!(bits(a.matrix()), bits(b.matrix()));
    }
}

#[test]
fn seeds_change_random_states_and_fingerprints() {
    let cfg = |s: u64| parse_config(&format!("seed = {s}\n[model.initial]\nkind = \"random\"\n")).unwrap();
    let a = run_with_threads(Command::Spectrum, &cfg(1), Some(2)).unwrap().record;
    let b = run_with_threads(Command::Spectrum, &cfg(2), Some(2)).unwrap().record;
    assert_ne!(a.model.fingerprint, b.model.fingerprint);
    assert_eq!(a.parameters["seed"], json!(1));
}

#[test]
fn tables_have_consistent_widths() {
    let cfg = parse_config("[evolve]\nt_max = 2.0\ncount = 5\n[freq_sweep]\ncount = 7\n").unwrap();
    for cmd in [Command::Verify, Command::Evolve, Command::FreqSweep, Command::Spectrum, Command::Longtime, Command::Diagnose, Command::Catalog] {
        let t = run_with_threads(cmd, &cfg, Some(1)).unwrap().table;
        assert!(!t.rows.is_empty(), "{cmd:?}");
        assert!(t.rows.iter().all(|r| r.len() == t.header.len()), "{cmd:?}");
    }
    let ev = run_with_threads(Command::Evolve, &cfg, None).unwrap();
    assert_eq!(ev.table.rows.len(), 5);
    assert_eq!(ev.table.header.len(), 1 + 8 + 8 + 1);
}

#[test]
fn verify_reports_threshold_violation() {
    let mut cfg = RunConfig::default();
    cfg.verify.threshold = 1e-30;
    let out = run_with_threads(Command::Verify, &cfg, Some(1)).unwrap();
    assert!(out.violation.is_some());
    assert_eq!(out.record.diagnostics.status, "threshold-violated");
}

fn cli() -> Process {
    Process::new(env!("CARGO_BIN_EXE_openmem"))
}

#[test]
fn cli_exit_codes_and_outputs() {
    let dir = std::env::temp_dir().join(format!("openmem-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();

    let bad = dir.join("bad.toml");
    std::fs::write(&bad, "[model]\ncatalog = \"QB3\"\nunknown = 1\n").unwrap();
    let out = dir.join("bad.json");
    let st = cli().args(["verify", "--config"]).arg(&bad).arg("--out").arg(&out).output().unwrap();
    assert_eq!(st.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&st.stderr).contains("unknown"));
    assert!(!out.exists());

    let strict = dir.join("strict.toml");
    std::fs::write(&strict, "[verify]\nthreshold = 1e-30\n[verify.grid]\ncount = 3\n").unwrap();
    let out = dir.join("strict.json");
    let st = cli().args(["verify", "--config"]).arg(&strict).arg("--out").arg(&out).output().unwrap();
    assert_eq!(st.status.code(), Some(4));
    let rec = ResultRecord::from_json(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(rec.command, "verify");

    let st = cli().args(["catalog", "--format", "table"]).output().unwrap();
    assert_eq!(st.status.code(), Some(0));
    let text = String::from_utf8(st.stdout).unwrap();
    assert!(text.starts_with("name,d_sys,d_env,energy_scale,fingerprint\n"));
    assert_eq!(text.lines().count(), 5);

    let st = cli().args(["diagnose", "--threads", "0"]).output().unwrap();
    assert_eq!(st.status.code(), Some(2));

    std::fs::remove_dir_all(&dir).ok();
}
