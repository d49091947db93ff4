use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sosk_core::channels::KrausChannel;
use sosk_core::decomp::{kraus_from_angles, DecompositionPlan};
use sosk_core::mat::CMat2;
use sosk_core::optics::{su2_from_euler, EulerAngles};

fn sosk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sosk"))
        .args(args)
        .env_remove("SOSK_CONFIG")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_channel(dir: &Path, name: &str, ch: &KrausChannel) -> String {
    let p = dir.join(name);
    fs::write(&p, ch.to_json()).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn decompose_named_channel_json() {
    let o = sosk(&["decompose", "--channel", "AD", "--lambda", "0.75", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let plan = DecompositionPlan::from_json(&stdout(&o)).unwrap();
    assert!((plan.branch_a.alpha - std::f64::consts::FRAC_PI_3).abs() < 1e-12);
    assert!((plan.branch_a.gamma2 + std::f64::consts::FRAC_PI_6).abs() < 1e-12);
    assert_eq!(plan.p, 1.0);
}

#[test]
fn decompose_kraus_file_is_fitted() {
    let dir = tempfile::tempdir().unwrap();
    let (k0, k1) = kraus_from_angles(0.7, -0.3);
    let u = su2_from_euler(&EulerAngles { phi: 0.2, xi: 1.1, zeta: -0.4 });
    let up = su2_from_euler(&EulerAngles { phi: -1.3, xi: 0.5, zeta: 2.0 });
    let ch = KrausChannel::new("custom", vec![u * k0 * up, u * k1 * up]);
    let path = write_channel(dir.path(), "custom.json", &ch);
    let out = dir.path().join("out");
    let o = sosk(&["decompose", "--kraus-file", &path, "--outdir", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let residual: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("residual "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(residual <= 1e-8);
    let plan = DecompositionPlan::from_json(&fs::read_to_string(out.join("plan.json")).unwrap()).unwrap();
    let fitted = sosk_core::decomp::plan_to_channel(&plan).unwrap();
    assert!(fitted.choi_distance(&ch) <= 1e-8);
    let gates: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("gates.json")).unwrap()).unwrap();
    assert_eq!(gates.as_array().unwrap().len(), 2);
}

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let o = sosk(&["validate", "--channel", "BPF", "--lambda", "0.5"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("status ok"));

    let non_tp = KrausChannel::new("nontp", vec![CMat2::from_real([[1.0, 0.0], [0.0, 0.5]])]);
    let path = write_channel(dir.path(), "nontp.json", &non_tp);
    let o = sosk(&["validate", "--channel", &path]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    let residual: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("trace_residual "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(residual > 0.0);

    let corrupted = dir.path().join("broken.json");
    fs::write(&corrupted, r#"{"label": "x", "kraus": [[[1,0],[0,0]]]}"#).unwrap();
    let o = sosk(&["validate", "--channel", corrupted.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let o = sosk(&["validate", "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_writes_state_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim");
    let o = sosk(&[
        "simulate", "--channel", "PF", "--lambda", "1", "--phi-deg", "22.5", "--outdir", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("state.json")).unwrap()).unwrap();
    assert!((v["bloch"][0].as_f64().unwrap() + 1.0).abs() < 1e-10);
    let csv = fs::read_to_string(out.join("tomography.csv")).unwrap();
    let rec = sosk_core::tomo::TomographyRecord::from_csv(&csv).unwrap();
    assert!((rec.get(sosk_core::tomo::Basis::DA).1 - 1.0).abs() < 1e-12);

    let o = sosk(&["reconstruct", out.join("tomography.csv").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let r: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r["clamped"], false);
}

#[test]
fn simulate_identity_at_zero_lambda() {
    for ch in ["AD", "PD", "BF", "PF", "BPF"] {
        let o = sosk(&["simulate", "--channel", ch, "--lambda", "0", "--phi-deg", "10"]);
        let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
        for i in 0..3 {
            let a = v["input"]["bloch"][i].as_f64().unwrap();
            let b = v["output"]["bloch"][i].as_f64().unwrap();
            assert!((a - b).abs() < 1e-10, "{ch}");
        }
    }
}

fn parse_rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

#[test]
fn sweep_noise_off_matches_oracle() {
    for ch in ["AD", "PD", "BF", "PF", "BPF"] {
        let o = sosk(&["sweep", "--channel", ch, "--noise", "off"]);
        assert_eq!(o.status.code(), Some(0));
        let text = stdout(&o);
        assert!(text.starts_with("lambda,c_l1_sim,c_max_sim,c_l1_oracle,c_max_oracle,fidelity_sim_vs_oracle\n"));
        let rows = parse_rows(&text);
        assert_eq!(rows.len(), 21);
        for r in rows {
            assert!((r[1] - r[3]).abs() <= 1e-10 && (r[2] - r[4]).abs() <= 1e-10, "{ch}: {r:?}");
            assert!(r.iter().all(|x| (0.0..=1.0).contains(x)));
        }
    }
}

#[test]
fn sweep_is_deterministic_with_noise() {
    let args = ["sweep", "--channel", "AD", "--noise", "on", "--seed", "3", "--lambda-grid", "0:1:11"];
    let a = sosk(&args);
    let b = sosk(&args);
    assert_eq!(a.stdout, b.stdout);
    assert!(!a.stdout.contains(&b'\r'));
    let c = sosk(&["sweep", "--channel", "AD", "--noise", "on", "--seed", "4", "--lambda-grid", "0:1:11"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn config_env_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    fs::write(&cfg, "channel = BF\nlambda_grid = 0,0.5\nphi_deg = 45\nformats = csv,json\n").unwrap();
    let bin = env!("CARGO_BIN_EXE_sosk");

    let o = Command::new(bin).args(["--config", cfg.to_str().unwrap(), "sweep"]).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let rows = parse_rows(text.split('[').next().unwrap());
    assert_eq!(rows.len(), 2);
    assert!(rows[1][2].abs() < 1e-10, "BF on |V> at λ=0.5 has zero c_max");
    assert!(text.contains("\"c_max_sim\""));

    let o = Command::new(bin)
        .args(["sweep"])
        .env("SOSK_CONFIG", &cfg)
        .env("SOSK_CHANNEL", "PD")
        .env("SOSK_FORMATS", "csv")
        .output()
        .unwrap();
    let rows = parse_rows(&stdout(&o));
    assert!(rows.iter().all(|r| (r[2] - 1.0).abs() < 1e-10), "PD freezes c_max at 1");

    let o = Command::new(bin)
        .args(["sweep", "--channel", "AD", "--lambda-grid", "0.5", "--phi-deg", "22.5"])
        .env("SOSK_CONFIG", &cfg)
        .env("SOSK_CHANNEL", "PD")
        .env("SOSK_FORMATS", "csv")
        .output()
        .unwrap();
    let rows = parse_rows(&stdout(&o));
    assert_eq!(rows.len(), 1);
    assert!((rows[0][2] - 0.75f64.sqrt()).abs() < 1e-10, "flags win: AD on |+> at λ=0.5, not PD");

    let o = Command::new(bin).args(["sweep"]).env("SOSK_CHANNEL", "AD").env("SOSK_SEED", "x").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_outdir_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    let o = sosk(&["sweep", "--channel", "BPF", "--formats", "csv,json", "--outdir", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).is_empty());
    assert!(out.join("sweep.csv").exists() && out.join("sweep.json").exists());
}
