use std::path::Path;
use std::process::{Command, Output};

use holo_core::dump;

fn holoscope(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_holoscope"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn simulate_disk(dir: &Path) {
    let out = holoscope(
        &["simulate", "--disk-radius", "2e-5", "--out", "disk.rimg"],
        dir,
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn files_in(dir: &Path) -> Vec<String> {
    let mut names: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    names
}

#[test]
fn missing_input_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = holoscope(
        &["reconstruct", "--pitch", "2.5e-6", "--out-amp", "a.png"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--input"));
    assert!(files_in(dir.path()).is_empty());
}

#[test]
fn bad_flags_exit_2_and_failures_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    simulate_disk(dir.path());
    let base = ["reconstruct", "--input", "disk.rimg", "--pitch", "2.5e-6"];
    let run = |extra: &[&str]| {
        holoscope(&[&base[..], extra].concat(), dir.path())
            .status
            .code()
    };
    assert_eq!(run(&["--out-amp", "a.png", "--method", "fresnel"]), Some(2));
    assert_eq!(run(&["--out-amp", "a.jpg"]), Some(2));
    assert_eq!(run(&[]), Some(2));
    assert_eq!(run(&["--out-amp", "a.png", "--wavelength", "0"]), Some(1));
    let missing = holoscope(
        &[
            "reconstruct",
            "--input",
            "nope.png",
            "--pitch",
            "1e-6",
            "--out-amp",
            "a.png",
        ],
        dir.path(),
    );
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn zoom_sets_output_pitch() {
    let dir = tempfile::tempdir().unwrap();
    simulate_disk(dir.path());
    let out = holoscope(
        &[
            "reconstruct",
            "--input",
            "disk.rimg",
            "--pitch",
            "2.5e-6",
            "--z",
            "0.011",
            "--zoom",
            "1.2",
            "--method",
            "bldsf",
            "--out-amp",
            "amp.rimg",
            "--out-phase",
            "phase.png",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("time"), "{stdout}");
    let amp = dump::load_image(dir.path().join("amp.rimg")).unwrap();
    assert!((amp.pitch_x() - 2.5e-6 / 1.2).abs() < 1e-18);
    assert!(dir.path().join("phase.png").exists());
}

#[test]
fn focused_disk_is_dark_in_the_amplitude_png() {
    let dir = tempfile::tempdir().unwrap();
    simulate_disk(dir.path());
    let out = holoscope(
        &[
            "reconstruct",
            "--input",
            "disk.rimg",
            "--pitch",
            "2.5e-6",
            "--z",
            "0.011",
            "--out-amp",
            "amp.png",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let img = image::open(dir.path().join("amp.png"))
        .unwrap()
        .into_luma8();
    let center = img.get_pixel(128, 128)[0];
    let background = img.get_pixel(128, 40)[0];
    assert!(
        center < 60 && background > 100,
        "center {center} background {background}"
    );
}

#[test]
fn sweep_reports_the_maximum() {
    let dir = tempfile::tempdir().unwrap();
    simulate_disk(dir.path());
    let out = holoscope(
        &[
            "sweep",
            "--input",
            "disk.rimg",
            "--pitch",
            "2.5e-6",
            "--z-start",
            "0.0055",
            "--z-end",
            "0.022",
            "--steps",
            "31",
            "--out-dir",
            "sweep",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = std::fs::read_to_string(dir.path().join("sweep/report.txt")).unwrap();
    let marked: Vec<_> = report.lines().filter(|l| l.ends_with("<- max")).collect();
    assert_eq!(marked.len(), 1);
    let z: f64 = marked[0]
        .split_whitespace()
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!((z - 0.011).abs() / 0.011 < 0.05, "{z}");
    assert_eq!(files_in(&dir.path().join("sweep")).len(), 32);
}

#[test]
fn two_step_sweep_writes_two_images() {
    let dir = tempfile::tempdir().unwrap();
    simulate_disk(dir.path());
    let args = [
        "sweep",
        "--input",
        "disk.rimg",
        "--pitch",
        "2.5e-6",
        "--out-dir",
        "s",
        "--z-start",
        "0.01",
    ];
    let out = holoscope(
        &[&args[..], &["--z-end", "0.012", "--steps", "2"]].concat(),
        dir.path(),
    );
    assert!(out.status.success());
    assert_eq!(
        files_in(&dir.path().join("s")),
        vec!["amp_000.png", "amp_001.png", "report.txt"]
    );

    let same = holoscope(
        &[&args[..], &["--z-end", "0.01", "--steps", "2"]].concat(),
        dir.path(),
    );
    assert_eq!(same.status.code(), Some(2));
    let one = holoscope(
        &[&args[..], &["--z-end", "0.012", "--steps", "1"]].concat(),
        dir.path(),
    );
    assert_eq!(one.status.code(), Some(2));
}

#[test]
fn bench_prints_json_lines() {
    let dir = tempfile::tempdir().unwrap();
    let out = holoscope(
        &["bench", "--width", "64", "--height", "64", "--frames", "2"],
        dir.path(),
    );
    assert!(out.status.success());
    let lines: Vec<serde_json::Value> = String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0]["method"], "asm");
    assert_eq!(lines[1]["frames"], 2);
    assert!(lines[2]["speedup_bldsf_over_asm"].as_f64().unwrap() > 0.0);

    let single = holoscope(
        &[
            "bench",
            "--width",
            "64",
            "--height",
            "64",
            "--methods",
            "bldsf",
        ],
        dir.path(),
    );
    assert_eq!(String::from_utf8_lossy(&single.stdout).lines().count(), 1);
    let small = holoscope(&["bench", "--width", "32", "--height", "64"], dir.path());
    assert_eq!(small.status.code(), Some(1));
}

#[test]
fn simulated_png_reads_back() {
    let dir = tempfile::tempdir().unwrap();
    let out = holoscope(
        &[
            "simulate",
            "--disk-radius",
            "2e-5",
            "--width",
            "128",
            "--height",
            "96",
            "--out",
            "h.png",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let img = holo_core::ingest::read_grayscale(dir.path().join("h.png"), 2.5e-6).unwrap();
    assert_eq!((img.width(), img.height()), (128, 96));
    assert_eq!(img.values().iter().cloned().fold(0.0, f64::max), 65535.0);
}
