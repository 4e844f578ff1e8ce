use std::path::Path;
use std::process::Command;

use epl_core::counts::{read_csv, write_csv};
use epl_core::harness::{
    exit_code, read_rows, run_config, CampaignConfig, Chsh, ChshOutput, Experiment, Fringe,
    FringeFits, FringeRow, HeraldingRow, PgrRow, RateRow, RatesFits, RatesSweep, TableRow,
    TableRowExperiment, Teleport, TeleportOutput, Tomo, TomoOutput, EXIT_CONFIG,
    EXIT_NOT_CONVERGED,
};
use epl_core::Error;
use serde::{de::DeserializeOwned, Serialize};

fn epl(args: &[&str], dir: &Path) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_epl"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn json<T: DeserializeOwned>(path: &Path) -> T {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

/// Bytes the harness would write for `value`.
fn reserialized<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).unwrap();
    s.push('\n');
    s.into_bytes()
}

fn header(path: &Path) -> String {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string()
}

const MINIMAL: &str = r#"{"schema_version": 1, "seed": 5, "experiment": {"kind": "table-row"}}"#;

#[test]
fn minimal_config_uses_defaults() {
    let cfg = CampaignConfig::from_json(MINIMAL).unwrap();
    assert_eq!(
        cfg.experiment,
        Experiment::TableRow(TableRowExperiment::default())
    );
    assert_eq!(cfg.source, epl_core::source::SourceConfig::reference());
    let again = CampaignConfig::from_json(&cfg.to_json()).unwrap();
    assert_eq!(again, cfg);
}

#[test]
fn unknown_fields_are_reported_with_their_path() {
    let bad = r#"{"schema_version": 1, "seed": 5,
        "source": {"pump_power_mw": 1, "pgr_per_mw": 8.2e5, "coincidence_per_mw": 3e4,
                   "eta_signal": 0.19, "eta_idler": 0.19, "pump_colour": 3},
        "experiment": {"kind": "table-row"}}"#;
    let err = CampaignConfig::from_json(bad).unwrap_err();
    let msg = err.to_string();
    assert!(matches!(err, Error::Config(_)));
    assert!(
        msg.contains("source") && msg.contains("pump_colour"),
        "{msg}"
    );

    let bad = r#"{"schema_version": 1, "seed": 5, "experiment": {"kind": "fringe",
        "angle_convention": "hwp", "theta_s": [0], "theta_i": [0, 10, 20, 30], "step": 2}}"#;
    let msg = CampaignConfig::from_json(bad).unwrap_err().to_string();
    assert!(msg.contains("step"), "{msg}");
}

#[test]
fn schema_violations_are_config_errors() {
    let cases = [
        r#"{"schema_version": 2, "seed": 5, "experiment": {"kind": "table-row"}}"#,
        r#"{"schema_version": 1, "experiment": {"kind": "table-row"}}"#,
        r#"{"schema_version": 1, "seed": 5, "experiment": {"kind": "hologram"}}"#,
        // angle blocks must say which convention they use
        r#"{"schema_version": 1, "seed": 5, "experiment": {"kind": "fringe",
            "theta_s": [0], "theta_i": [0, 10, 20, 30]}}"#,
        r#"{"schema_version": 1, "seed": 5, "experiment": {"kind": "chsh"}}"#,
        r#"{"schema_version": 1, "seed": 5, "experiment": {"kind": "rates-sweep", "duration_s": -1}}"#,
        r#"{"schema_version": 1, "seed": 5, "experiment": {"kind": "teleport", "bsm_visibility": 1.5}}"#,
    ];
    for text in cases {
        let err = CampaignConfig::from_json(text).unwrap_err();
        assert_eq!(exit_code(&err), EXIT_CONFIG, "{text}: {err}");
    }
}

#[test]
fn exit_code_mapping() {
    assert_eq!(
        exit_code(&Error::NotConverged("x".into())),
        EXIT_NOT_CONVERGED
    );
    assert_eq!(exit_code(&Error::Config("x".into())), EXIT_CONFIG);
    assert_eq!(exit_code(&Error::Empty("x")), 1);
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, MINIMAL).unwrap();
    let c = cfg.to_str().unwrap();

    let (code, _) = epl(&["table-row", "--config", c, "--out", "o"], dir.path());
    assert_eq!(code, 0);
    assert!(dir.path().join("o/table_row.json").exists());

    let (code, err) = epl(&["hologram", "--config", c], dir.path());
    assert_eq!(code, 2);
    assert!(err.contains("unknown experiment"), "{err}");

    let (code, err) = epl(&["chsh", "--config", c], dir.path());
    assert_eq!(code, 2);
    assert!(err.contains("table-row"), "{err}");

    let (code, _) = epl(&["table-row", "--config", "missing.json"], dir.path());
    assert_eq!(code, 2);

    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"schema_version": 1, "seed": 5, "experiment": {"kind": "teleport", "bsm_visibility": 1,
            "convention": "standard",
            "correction_table": {"Phi+": "XZ", "Phi-": "X", "Psi+": "Z", "Psi-": "I"}}}"#,
    )
    .unwrap();
    let (code, err) = epl(&["teleport", "--config", bad.to_str().unwrap()], dir.path());
    assert_eq!(code, 2, "{err}");
    assert!(err.contains("correction table"), "{err}");
}

#[test]
fn seed_override_and_default_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, MINIMAL).unwrap();
    let c = cfg.to_str().unwrap();
    assert_eq!(epl(&["table-row", "--config", c], dir.path()).0, 0);
    assert_eq!(
        epl(
            &["table-row", "--config", c, "--seed", "6", "--out", "s6"],
            dir.path()
        )
        .0,
        0
    );
    let a = std::fs::read(dir.path().join("out/counts.csv")).unwrap();
    let b = std::fs::read(dir.path().join("s6/counts.csv")).unwrap();
    assert_ne!(a, b);
    let echoed: CampaignConfig = json(&dir.path().join("s6/campaign.json"));
    assert_eq!(echoed.seed, 6);
}

#[test]
fn threads_env_must_be_positive() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, MINIMAL).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_epl"))
        .args(["table-row", "--config", cfg.to_str().unwrap()])
        .current_dir(dir.path())
        .env("EPL_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

fn run(exp: Experiment) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    run_config(&CampaignConfig::new(11, exp), dir.path(), Some(2)).unwrap();
    dir
}

#[test]
fn rates_sweep_artifacts() {
    let dir = run(Experiment::RatesSweep(RatesSweep::default()));
    let p = dir.path();
    assert_eq!(
        header(&p.join("fig2a.csv")),
        "power_mw,n_signal,n_idler,coincidence"
    );
    let rows: Vec<RateRow> = read_rows(&p.join("fig2a.csv")).unwrap();
    assert_eq!(rows.len(), 12);
    assert_eq!(rows[11].power_mw, 14.3);
    let heralds: Vec<HeraldingRow> = read_rows(&p.join("fig2b.csv")).unwrap();
    let pgr: Vec<PgrRow> = read_rows(&p.join("fig2c.csv")).unwrap();
    assert_eq!((heralds.len(), pgr.len()), (12, 12));
    let fits: RatesFits = json(&p.join("rates_fits.json"));
    assert_eq!(
        reserialized(&fits),
        std::fs::read(p.join("rates_fits.json")).unwrap()
    );
    assert!(
        (fits.coincidence.slope / 3e4 - 1.0).abs() < 0.02,
        "{}",
        fits.coincidence.slope
    );
    for h in &heralds {
        assert!((h.eta_signal - 0.191).abs() < 0.005);
    }
}

#[test]
fn fringe_artifacts() {
    let dir = run(Experiment::Fringe(Fringe::default()));
    let p = dir.path();
    assert_eq!(
        header(&p.join("fig3c.csv")),
        "theta_s,theta_i,coincidence,fit_value"
    );
    let rows: Vec<FringeRow> = read_rows(&p.join("fig3c.csv")).unwrap();
    assert_eq!(rows.len(), 4 * 19);
    assert_eq!((rows[18].theta_s, rows[18].theta_i), (0.0, 180.0));
    let fits: FringeFits = json(&p.join("fringe_fits.json"));
    assert_eq!(
        reserialized(&fits),
        std::fs::read(p.join("fringe_fits.json")).unwrap()
    );
    assert_eq!(fits.fringes.len(), 4);
    for f in &fits.fringes {
        assert!((f.fit.visibility - f.analytic_visibility).abs() < 0.01);
    }
}

#[test]
fn tomo_artifacts() {
    let tomo = Tomo {
        bootstrap_resamples: 5,
        ..Tomo::default()
    };
    let dir = run(Experiment::Tomo(tomo));
    let p = dir.path();
    let report: TomoOutput = json(&p.join("tomo.json"));
    assert_eq!(report.n_settings, 36);
    assert!(report.reconstruction.converged);
    assert!(report.reconstruction.fidelity_sigma.unwrap() > 0.0);
    let rho = report.reconstruction.density().unwrap();
    assert!((rho.purity() - report.reconstruction.purity).abs() < 1e-9);
    assert_eq!(
        reserialized(&report),
        std::fs::read(p.join("tomo.json")).unwrap()
    );
    let records = read_csv(std::fs::File::open(p.join("tomo_counts.csv")).unwrap()).unwrap();
    assert_eq!(records.len(), 36);
    let mut buf = Vec::new();
    write_csv(&records, &mut buf).unwrap();
    assert_eq!(buf, std::fs::read(p.join("tomo_counts.csv")).unwrap());
}

#[test]
fn chsh_artifacts() {
    let chsh = Chsh {
        bootstrap_resamples: 100,
        ..Chsh::default()
    };
    let dir = run(Experiment::Chsh(chsh));
    let report: ChshOutput = json(&dir.path().join("chsh.json"));
    assert_eq!(
        reserialized(&report),
        std::fs::read(dir.path().join("chsh.json")).unwrap()
    );
    assert!((report.s - report.s_analytic).abs() < 5.0 * report.sigma);
    assert!(report.sigmas_above_2 > 50.0);
    let records =
        read_csv(std::fs::File::open(dir.path().join("chsh_counts.csv")).unwrap()).unwrap();
    assert_eq!(records.len(), 16);
}

#[test]
fn chsh_accepts_hwp_angles() {
    let text = r#"{"schema_version": 1, "seed": 3, "experiment": {"kind": "chsh",
        "angle_convention": "hwp", "bootstrap_resamples": 20,
        "angles": {"theta_s": 0, "theta_s_prime": 22.5, "theta_i": -11.25, "theta_i_prime": 11.25}}}"#;
    let cfg = CampaignConfig::from_json(text).unwrap();
    let dir = tempfile::tempdir().unwrap();
    run_config(&cfg, dir.path(), None).unwrap();
    let report: ChshOutput = json(&dir.path().join("chsh.json"));
    assert!((report.s_analytic - 2.0 * 2f64.sqrt() * 0.98).abs() < 1e-9);
    assert_eq!(report.angles.theta_s_prime, 22.5);
}

#[test]
fn teleport_artifacts() {
    let dir = run(Experiment::Teleport(Teleport::default()));
    let p = dir.path();
    let lines: Vec<String> = std::fs::read_to_string(p.join("fig4.csv"))
        .unwrap()
        .lines()
        .map(String::from)
        .collect();
    assert_eq!(lines[0], "input,Phi+,Phi-,Psi+,Psi-");
    assert_eq!(lines.len(), 5);
    let out: TeleportOutput = json(&p.join("teleport.json"));
    assert!(out.calibrated);
    assert!((out.report.average_fidelity - 0.955).abs() < 1e-9);
    assert_eq!(out.counts.len(), 16);
    let mut buf = Vec::new();
    out.report.write_csv(&mut buf).unwrap();
    assert_eq!(buf, std::fs::read(p.join("fig4.csv")).unwrap());
    assert_eq!(
        reserialized(&out),
        std::fs::read(p.join("teleport.json")).unwrap()
    );
}

#[test]
fn table_row_artifact() {
    let dir = run(Experiment::TableRow(TableRowExperiment::default()));
    let row: TableRow = json(&dir.path().join("table_row.json"));
    assert_eq!(
        reserialized(&row),
        std::fs::read(dir.path().join("table_row.json")).unwrap()
    );
    assert!((row.pgr_per_mw / 8.2e5 - 1.0).abs() < 0.01);
    assert!((row.coincidence_per_mw / 3e4 - 1.0).abs() < 0.01);
    assert!((row.fidelity - 0.985).abs() < 1e-12);
    assert!((row.symmetric_heralding - 0.191).abs() < 0.001);
    let eta = (row.coincidence_per_mw / row.pgr_per_mw).sqrt();
    assert!((row.symmetric_heralding - eta).abs() <= 1e-12);
}

#[test]
fn same_seed_same_bytes_in_process() {
    for exp in [
        Experiment::Fringe(Fringe::default()),
        Experiment::Teleport(Teleport::default()),
    ] {
        let cfg = CampaignConfig::new(99, exp);
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        run_config(&cfg, a.path(), Some(1)).unwrap();
        run_config(&cfg, b.path(), Some(3)).unwrap();
        for entry in std::fs::read_dir(a.path()).unwrap() {
            let name = entry.unwrap().file_name();
            assert_eq!(
                std::fs::read(a.path().join(&name)).unwrap(),
                std::fs::read(b.path().join(&name)).unwrap()
            );
        }
    }
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut kinds = Vec::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = CampaignConfig::load(&path).unwrap();
        assert_eq!(
            path.file_stem().unwrap().to_str().unwrap(),
            cfg.experiment.kind()
        );
        kinds.push(cfg.experiment.kind());
    }
    kinds.sort();
    let mut all = Experiment::KINDS.to_vec();
    all.sort();
    assert_eq!(kinds, all);
}
