use std::path::Path;
use std::process::{Command, Output};

fn qis(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qis"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write_pgm(path: &Path, w: usize, h: usize, px: &[u8]) {
    let mut bytes = format!("P5\n{w} {h}\n255\n").into_bytes();
    bytes.extend_from_slice(px);
    std::fs::write(path, bytes).unwrap();
}

#[test]
fn help_exits_zero_everywhere() {
    for sub in [
        vec!["--help"],
        vec!["--version"],
        vec!["snr-curve", "--help"],
        vec!["simulate", "--help"],
        vec!["reconstruct", "--help"],
        vec!["compare", "--help"],
        vec!["run", "--help"],
        vec!["make-scene", "--help"],
    ] {
        let out = qis(&sub);
        assert_eq!(code(&out), 0, "{sub:?}");
        assert!(!out.stdout.is_empty());
    }
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("c.csv");
    for args in [
        vec![],
        vec!["bogus"],
        vec!["compare", "--reference", "a", "--test", "b", "--nope"],
        vec!["snr-curve", "--out", p(&csv)],
        vec!["snr-curve", "--capacity", "x", "--frames", "1", "--out", p(&csv)],
        vec!["snr-curve", "--capacity", "0", "--frames", "1", "--out", p(&csv)],
        vec!["snr-curve", "--capacity", "1", "--out", p(&csv)],
        vec!["snr-curve", "--oversample", "2", "--capacity", "1", "--frames", "1", "--out", p(&csv)],
        vec!["snr-curve", "--capacity", "1", "--frames", "1", "--combine", "4x0", "--out", p(&csv)],
        vec!["simulate", "--scene", "s.pgm", "--tau", "-1", "--capacity", "1", "--frames", "1", "--out", "o"],
        vec!["reconstruct", "--out", "o", "--display", "d"],
    ] {
        assert_eq!(code(&qis(&args)), 1, "{args:?}");
    }
    assert!(!csv.exists());
}

#[test]
fn snr_curve_three_sensor_rows() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("three.csv");
    let out = qis(&[
        "snr-curve", "--capacity", "4000", "--frames", "1", "--capacity", "1", "--frames", "1000",
        "--oversample", "2", "--capacity", "3", "--frames", "333", "--oversample", "2", "--out", p(&csv),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 201);
    assert_eq!(lines[0], "theta,L4000_T1_K1,L1_T1000_K2,L3_T333_K2");
    assert!(lines[1].starts_with("0.01,"));
    assert!(lines[200].starts_with("1000000,"));
    assert!(text.ends_with('\n') && !text.contains('\r'));

    let preset = dir.path().join("preset.csv");
    assert_eq!(code(&qis(&["snr-curve", "--compare-preset", "--out", p(&preset)])), 0);
    let preset_text = std::fs::read_to_string(&preset).unwrap();
    // Same numbers, different labels.
    let body = |t: &str| t.lines().skip(1).map(str::to_owned).collect::<Vec<_>>();
    assert_eq!(body(&text), body(&preset_text));
}

#[test]
fn snr_curve_single_bit_at_ln2() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("c.csv");
    let ln2 = format!("{}", std::f64::consts::LN_2);
    let out = qis(&[
        "snr-curve", "--capacity", "1", "--frames", "1", "--theta-min", &ln2, "--theta-max", "1",
        "--points", "2", "--out", p(&csv),
    ]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(&csv).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    let value: f64 = row[1].parse().unwrap();
    assert!((value - 20.0 * std::f64::consts::LN_2.log10()).abs() < 1e-8);
}

#[test]
fn snr_curve_combined_rows() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("c.csv");
    let out = qis(&["snr-curve", "--capacity", "1", "--frames", "4000", "--combine", "4x5", "--out", p(&csv)]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next().unwrap(), "theta,L1_T4000_K1,L1_T4000_K1 combined");
    for line in text.lines().skip(1) {
        let v: Vec<&str> = line.split(',').collect();
        if let (Ok(single), Ok(comb)) = (v[1].parse::<f64>(), v[2].parse::<f64>()) {
            if single.is_finite() {
                assert!(comb >= single - 1e-6, "{line}");
            }
        }
    }
}

#[test]
fn compare_prints_psnr() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.pgm");
    let b = dir.path().join("b.pgm");
    let c = dir.path().join("c.pgm");
    write_pgm(&a, 2, 2, &[10, 20, 30, 40]);
    write_pgm(&b, 2, 2, &[26, 36, 46, 56]);
    write_pgm(&c, 4, 1, &[0; 4]);
    let same = qis(&["compare", "--reference", p(&a), "--test", p(&a)]);
    assert_eq!((code(&same), stdout(&same).as_str()), (0, "inf\n"));
    let off = qis(&["compare", "--reference", p(&a), "--test", p(&b)]);
    assert_eq!((code(&off), stdout(&off).as_str()), (0, "24.05\n"));
    assert_eq!(code(&qis(&["compare", "--reference", p(&a), "--test", p(&c)])), 2);
    let missing = dir.path().join("missing.pgm");
    assert_eq!(code(&qis(&["compare", "--reference", p(&a), "--test", p(&missing)])), 2);
}

#[test]
fn simulate_reconstruct_pipeline_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let d = |n: &str| dir.path().join(n);
    assert_eq!(code(&qis(&["make-scene", "--kind", "landscape", "--size", "48", "--out", p(&d("scene.pgm"))])), 0);

    let settings = [
        ("cis", "1e-3", "4000", "1"),
        ("q1", "0.25e-6", "1", "4000"),
        ("q3", "1.75e-6", "7", "571"),
    ];
    for run in ["a", "b"] {
        for (name, tau, cap, frames) in settings {
            let out = qis(&[
                "simulate", "--scene", p(&d("scene.pgm")), "--tau", tau, "--capacity", cap, "--frames", frames,
                "--seed", "11", "--out", p(&d(&format!("{name}_{run}.qisf"))),
            ]);
            assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        }
        let inputs = settings
            .iter()
            .map(|s| p(&d(&format!("{}_{run}.qisf", s.0))).to_owned())
            .collect::<Vec<_>>()
            .join(",");
        let out = qis(&[
            "reconstruct", "--inputs", &inputs, "--denoise-sigma", "0.5", "--out", p(&d(&format!("hdr_{run}.qisf"))),
            "--display", p(&d(&format!("hdr_{run}.pgm"))),
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    for f in ["cis_{}.qisf", "cis_{}.qisf.cfg", "q1_{}.qisf", "q3_{}.qisf", "hdr_{}.qisf", "hdr_{}.pgm"] {
        let a = std::fs::read(d(&f.replace("{}", "a"))).unwrap();
        let b = std::fs::read(d(&f.replace("{}", "b"))).unwrap();
        assert_eq!(a, b, "{f}");
    }
    let cfg = std::fs::read_to_string(d("q3_a.qisf.cfg")).unwrap();
    assert_eq!(cfg, "tau = 0.00000175\ncapacity = 7\nframes = 571\noversample = 1\nseed = 11\n");

    // Mixed dimensions are a runtime failure.
    write_pgm(&d("small.pgm"), 2, 2, &[0, 50, 100, 255]);
    assert_eq!(
        code(&qis(&[
            "simulate", "--scene", p(&d("small.pgm")), "--tau", "1e-3", "--capacity", "4000", "--frames", "1",
            "--out", p(&d("small.qisf")),
        ])),
        0
    );
    let mixed = format!("{},{}", p(&d("cis_a.qisf")), p(&d("small.qisf")));
    assert_eq!(
        code(&qis(&["reconstruct", "--inputs", &mixed, "--out", p(&d("m.qisf")), "--display", p(&d("m.pgm"))])),
        2
    );
}

#[test]
fn single_input_reconstruct_matches_inversion() {
    let dir = tempfile::tempdir().unwrap();
    let d = |n: &str| dir.path().join(n);
    write_pgm(&d("s.pgm"), 3, 1, &[0, 128, 255]);
    let sim = qis(&[
        "simulate", "--scene", p(&d("s.pgm")), "--tau", "0.25e-6", "--capacity", "1", "--frames", "4000",
        "--seed", "5", "--out", p(&d("s.qisf")),
    ]);
    assert_eq!(code(&sim), 0);
    let rec = qis(&["reconstruct", "--inputs", p(&d("s.qisf")), "--out", p(&d("h.qisf")), "--display", p(&d("h.pgm"))]);
    assert_eq!(code(&rec), 0);

    let sums = std::fs::read(d("s.qisf")).unwrap();
    let flux = std::fs::read(d("h.qisf")).unwrap();
    for i in 0..3 {
        let at = 12 + 8 * i;
        let sum = f64::from_le_bytes(sums[at..at + 8].try_into().unwrap());
        let c = f64::from_le_bytes(flux[at..at + 8].try_into().unwrap());
        let expected = -(-sum / 4000.0).ln_1p() / 0.25e-6;
        assert!((c - expected).abs() <= 1e-9 * expected.max(1.0), "{c} vs {expected}");
    }
}

#[test]
fn missing_scene_is_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = qis(&[
        "simulate", "--scene", p(&dir.path().join("none.pgm")), "--tau", "1e-3", "--capacity", "1", "--frames", "1",
        "--out", p(&dir.path().join("o.qisf")),
    ]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("none.pgm"));
}

#[test]
fn run_config_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let d = |n: &str| dir.path().join(n);
    assert_eq!(code(&qis(&["make-scene", "--kind", "landscape", "--size", "32", "--out", p(&d("scene.pgm"))])), 0);
    std::fs::write(
        d("run.cfg"),
        "scene = scene.pgm\nseed = 4\nexposure = 1e-3 4000 1\nexposure = 0.25e-6 1 4000\n\
         out_flux = hdr.qisf\nout_display = hdr.pgm\nout_reference = ref.pgm\n",
    )
    .unwrap();
    let out = qis(&["run", "--config", p(&d("run.cfg"))]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).starts_with("psnr "));
    let cmp = qis(&["compare", "--reference", p(&d("ref.pgm")), "--test", p(&d("hdr.pgm"))]);
    assert_eq!(stdout(&out).trim_start_matches("psnr "), stdout(&cmp));

    std::fs::write(d("bad.cfg"), "scene = scene.pgm\nwat = 1\n").unwrap();
    assert_eq!(code(&qis(&["run", "--config", p(&d("bad.cfg"))])), 2);
}
