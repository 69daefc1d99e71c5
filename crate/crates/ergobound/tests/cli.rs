use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ergobound::formats::{read_grid, CertificateFile, GapFile, OrbitFile};

const LORENZ: &str = r#"
phi = "z^4"

[system]
builtin = "lorenz"
parameters = { beta = "8/3", sigma = 10, r = 28 }

[bound]
degrees = [4]

[orbit]
symbols = ["AB", "ABAB"]

[region]
resolution = 9
thresholds = [3000, 1e12]

[trace]
orbits = ["AB"]
thresholds = [1500, 3000, 6000]
"#;

fn exe() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ergobound"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    exe().current_dir(dir).args(args).output().unwrap()
}

fn setup(config: &str) -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(&cfg, config).unwrap();
    (dir, cfg)
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn certificate(dir: &Path, degree: u32) -> CertificateFile {
    let text = std::fs::read_to_string(dir.join(format!("out/certificate_deg{}.json", degree))).unwrap();
    CertificateFile::from_json(&text).unwrap()
}

#[test]
fn full_pipeline_on_lorenz() {
    let (dir, _) = setup(LORENZ);
    let d = dir.path();
    let o = run(d, &["bound", "--config", "exp.toml"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("635908.6"));
    let summary = std::fs::read_to_string(d.join("out/bound_summary.csv")).unwrap();
    assert!(summary.starts_with("degree,U,gap,validity,status,iterations\n4,635908.6,"));
    assert!(summary.contains("VALID"));
    assert!(d.join("out/sdp_deg4.dat-s").exists());

    let o = run(d, &["orbit", "--config", "exp.toml"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stderr(&o).contains("\"ABAB\" repeats \"AB\" 2 times"));
    assert!(!d.join("out/orbit_ABAB.json").exists());
    let orbit: OrbitFile = serde_json::from_str(&std::fs::read_to_string(d.join("out/orbit_AB.json")).unwrap()).unwrap();
    assert!((orbit.phi_average - 592827.338).abs() < 0.05);
    assert!(orbit.residual <= 1e-9);

    let o = run(d, &["region", "--config", "exp.toml", "--jobs", "2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let g = read_grid(&std::fs::read_to_string(d.join("out/region_deg4_M3000.grid")).unwrap()).unwrap();
    assert_eq!(g.values.len(), 729);
    let huge = read_grid(&std::fs::read_to_string(d.join("out/region_deg4_M1000000000000.grid")).unwrap())
        .unwrap()
        .into_region()
        .unwrap();
    assert_eq!(huge.member_fraction(), 1.0);

    let o = run(d, &["trace", "--config", "exp.toml"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let gap: GapFile = serde_json::from_str(&std::fs::read_to_string(d.join("out/gap_AB_deg4.json")).unwrap()).unwrap();
    assert!((gap.trace_mean - gap.epsilon).abs() <= 1e-6 * gap.epsilon);
    assert_eq!(gap.thresholds.len(), 3);
    assert!(gap.thresholds.iter().all(|e| e.consistent));
    assert!(d.join("out/trace_AB_deg4.csv").exists());

    let o = run(d, &["verify", "out/certificate_deg4.json"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("VALID"));
}

#[test]
fn outputs_are_byte_identical_across_reruns() {
    let (dir, _) = setup(LORENZ);
    let d = dir.path();
    let snapshot = |out: &str| {
        for cmd in ["bound", "orbit", "region", "trace"] {
            assert_eq!(code(&run(d, &[cmd, "--config", "exp.toml", "--out", out])), 0);
        }
        let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(d.join(out))
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
            })
            .collect();
        files.sort();
        files
    };
    let a = snapshot("a");
    let b = snapshot("b");
    assert!(a.len() >= 10);
    assert_eq!(a, b);
}

#[test]
fn concurrent_degrees_match_sequential() {
    let (dir, _) = setup(LORENZ);
    let d = dir.path();
    for (out, jobs) in [("seq", "1"), ("par", "3")] {
        let o = run(d, &["bound", "--config", "exp.toml", "--out", out, "--degree", "4", "--degree", "6", "--jobs", jobs]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    for f in ["certificate_deg4.json", "certificate_deg6.json", "bound_summary.csv"] {
        assert_eq!(std::fs::read(d.join("seq").join(f)).unwrap(), std::fs::read(d.join("par").join(f)).unwrap(), "{}", f);
    }
}

#[test]
fn infeasible_degree_fails_but_keeps_other_outputs() {
    // a quadratic V cannot cancel the leading −z⁴
    let (dir, _) = setup(LORENZ);
    let d = dir.path();
    let o = run(d, &["bound", "--config", "exp.toml", "--degree", "2", "--degree", "4"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("degree 2"));
    assert!(d.join("out/certificate_deg4.json").exists());
    assert!(!d.join("out/certificate_deg2.json").exists());
    let summary = std::fs::read_to_string(d.join("out/bound_summary.csv")).unwrap();
    assert!(summary.contains("\n2,,,INVALID,failed,0\n"), "{}", summary);
}

#[test]
fn sharp_small_bounds() {
    let cases = [
        ("5", "[bound]\ndegrees = [2]\n", 5.0, 1e-6),
        ("z", "[bound]\ndegrees = [2]\nscales = [1, 1, 1]\n", 27.0, 1e-3),
    ];
    for (phi, extra, expected, tol) in cases {
        let (dir, _) = setup(&format!("phi = \"{}\"\n[system]\nbuiltin = \"lorenz\"\n{}", phi, extra));
        let o = run(dir.path(), &["bound", "--config", "exp.toml"]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let c = certificate(dir.path(), 2);
        assert!((c.bound - expected).abs() < tol, "phi = {}: {}", phi, c.bound);
    }
}

#[test]
fn inline_system_bound() {
    // harmonic oscillator: every orbit averages x² to half its energy, so
    // no finite bound exists for x²; Φ = x·v averages to zero.
    let cfg = r#"
        phi = "x*v"
        [system]
        variables = ["x", "v"]
        components = ["v", "-x"]
        [bound]
        degrees = [2]
    "#;
    let (dir, _) = setup(cfg);
    let o = run(dir.path(), &["bound", "--config", "exp.toml"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(certificate(dir.path(), 2).bound.abs() < 1e-6);
}

#[test]
fn verify_exit_codes() {
    let (dir, _) = setup(LORENZ);
    let d = dir.path();
    assert_eq!(code(&run(d, &["bound", "--config", "exp.toml"])), 0);
    let text = std::fs::read_to_string(d.join("out/certificate_deg4.json")).unwrap();

    let mut bad = CertificateFile::from_json(&text).unwrap();
    let n = bad.gram_size;
    bad.gram[2 * n + 3] += 1.0;
    bad.gram[3 * n + 2] += 1.0;
    std::fs::write(d.join("corrupt.json"), bad.to_json()).unwrap();
    let o = run(d, &["verify", "corrupt.json"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("INVALID"));

    std::fs::write(d.join("truncated.json"), &text[..text.len() / 3]).unwrap();
    assert_eq!(code(&run(d, &["verify", "truncated.json"])), 2);
    assert_eq!(code(&run(d, &["verify", "absent.json"])), 2);
}

#[test]
fn usage_and_input_errors_exit_two() {
    let (dir, _) = setup(LORENZ);
    let d = dir.path();
    assert_eq!(code(&run(d, &["region", "--config", "exp.toml"])), 2, "missing certificate");
    assert_eq!(code(&run(d, &["trace", "--config", "exp.toml"])), 2, "missing orbit");
    assert_eq!(code(&run(d, &["bound", "--config", "nope.toml"])), 2);
    assert_eq!(code(&run(d, &["bound", "--config", "exp.toml", "--degree", "3"])), 2);
    assert_eq!(code(&run(d, &["bound", "--config", "exp.toml", "--jobs", "0"])), 2);
    assert_eq!(code(&run(d, &["frobnicate"])), 2);

    let negative = LORENZ.replace("thresholds = [3000, 1e12]", "thresholds = [-1e-9]");
    std::fs::write(d.join("neg.toml"), negative).unwrap();
    let o = run(d, &["region", "--config", "neg.toml"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("positive"));
}

#[test]
fn shooting_failure_is_reported_and_others_proceed() {
    let cfg = LORENZ.replace("symbols = [\"AB\", \"ABAB\"]", "symbols = [\"AAAAAA\", \"AB\"]\nmax_seeds = 3");
    let (dir, _) = setup(&cfg);
    let o = run(dir.path(), &["orbit", "--config", "exp.toml"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("AAAAAA"));
    assert!(dir.path().join("out/orbit_AB.json").exists());
    assert!(!dir.path().join("out/orbit_AAAAAA.json").exists());
}
