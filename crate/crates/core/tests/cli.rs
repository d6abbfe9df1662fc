use std::path::Path;
use std::process::Command;

use ncut_lesion::cli::{load_config, make_phantom_suite, parse_config, run_batch, CSV_HEADER, SUITE_CONFIG};
use ncut_lesion::pipeline::run_pipeline;
use ncut_lesion::postprocess::PostprocessOptions;
use ncut_lesion::preprocess::PreprocessOptions;
use ncut_lesion::raster::load_grayscale;
use ncut_lesion::spectral::NcutParams;
use ncut_lesion::Error;

const BIN: &str = env!("CARGO_BIN_EXE_ncut-lesion");

fn files_in(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

#[test]
fn batch_survives_a_missing_ground_truth() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = make_phantom_suite(3, 5, dir.path()).unwrap();
    let mut loaded = load_config(&cfg).unwrap();
    loaded.config.entries[1].ground_truth = dir.path().join("missing_gt.png");
    let summary = run_batch(&loaded).unwrap();
    assert_eq!(summary.ok_count, 2);
    assert!(!summary.all_ok());
    assert!(summary.rows[1].status.starts_with("error"));

    let mut reader = csv::Reader::from_path(&summary.csv_path).unwrap();
    assert_eq!(reader.headers().unwrap().iter().collect::<Vec<_>>(), CSV_HEADER);
    let records: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(records.len(), 5);
    assert_eq!(&records[1][3], "");
    assert_eq!(&records[3][0], "mean");
    assert_eq!(&records[4][0], "stddev");
    assert_eq!(&records[3][8], "ok=2");

    // the mean row is the mean of the two ok rows, not of three
    let agg = summary.aggregate.unwrap();
    let parsed: f64 = records[3][4].parse().unwrap();
    assert!((parsed - agg.mean.dice).abs() <= 5e-5);
    let rows: Vec<f64> = [0, 2].iter().map(|&i| records[i][4].parse().unwrap()).collect();
    assert!((parsed - (rows[0] + rows[1]) / 2.0).abs() <= 1e-4);

    let out = files_in(&loaded.config.output_dir);
    for id in ["phantom_000", "phantom_002"] {
        assert!(out.contains(&format!("{id}_mask.png")));
        assert!(out.contains(&format!("{id}_overlay.png")));
    }
    assert!(!out.iter().any(|f| f.starts_with("phantom_001")));
}

#[test]
fn one_phantom_suite_is_three_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = make_phantom_suite(1, 3, dir.path()).unwrap();
    assert_eq!(files_in(dir.path()), ["phantom_000.png", "phantom_000_gt.png", SUITE_CONFIG]);
    let loaded = load_config(&cfg).unwrap();
    assert_eq!(loaded.config.entries.len(), 1);
    assert!(loaded.config.entries[0].phantom.is_some());
    assert!(matches!(make_phantom_suite(0, 3, dir.path()), Err(Error::InvalidParameter(_))));
}

#[test]
fn both_flags_run_all_four_stages() {
    let dir = tempfile::tempdir().unwrap();
    make_phantom_suite(1, 4, dir.path()).unwrap();
    let img = load_grayscale(dir.path().join("phantom_000.png")).unwrap();
    let opts = PreprocessOptions {
        intensity_adjust: true,
        hist_equalize: true,
        ..Default::default()
    };
    let out = run_pipeline(&img, &opts, &NcutParams::default(), &PostprocessOptions::default()).unwrap();
    assert_eq!(out.preprocessed.stages.len(), 4);
    let plain = run_pipeline(&img, &PreprocessOptions::default(), &NcutParams::default(), &Default::default()).unwrap();
    assert_eq!(plain.preprocessed.stages.len(), 2);
}

#[test]
fn config_diagnostics_name_the_place() {
    let path = Path::new("bad.toml");
    let text = "output_dir = \"out\"\n\n[[entries]]\nid = \"a\"\nimage = \"a.png\"\nground_truth = \"g.png\"\ncolour = 3\n";
    match parse_config(text, path) {
        Err(Error::Config { line, message, .. }) => {
            assert_eq!(line, Some(7), "{message}");
            assert!(message.contains("colour"), "{message}");
        }
        other => panic!("{other:?}"),
    }
    let dup = "[[entries]]\nid = \"a\"\nimage = \"a.png\"\nground_truth = \"g.png\"\n\
               [[entries]]\nid = \"a\"\nimage = \"b.png\"\nground_truth = \"h.png\"\n";
    match parse_config(dup, path) {
        Err(e @ Error::Config { .. }) => assert!(e.to_string().contains("entries[1].id"), "{e}"),
        other => panic!("{other:?}"),
    }
    let bad_param = "[ncut]\nnum_regions = 0\n[[entries]]\nid = \"a\"\nimage = \"a.png\"\nground_truth = \"g.png\"\n";
    match parse_config(bad_param, path) {
        Err(e @ Error::Config { .. }) => assert!(e.to_string().contains("ncut"), "{e}"),
        other => panic!("{other:?}"),
    }
}

fn run_bin(args: &[&str]) -> (i32, String) {
    let out = Command::new(BIN).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stdout).into_owned())
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let (code, _) = run_bin(&["phantom", "--count", "1", "--seed", "2", "--out", d]);
    assert_eq!(code, 0);

    let cfg = dir.path().join(SUITE_CONFIG);
    let (code, stdout) = run_bin(&["run", cfg.to_str().unwrap()]);
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.contains("1/1 images ok"), "{stdout}");

    let mask = dir.path().join("results/phantom_000_mask.png");
    let gt = dir.path().join("phantom_000_gt.png");
    let (code, stdout) = run_bin(&["eval", mask.to_str().unwrap(), gt.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(stdout.starts_with("jaccard "), "{stdout}");

    // one entry whose image does not exist: the batch finishes but reports failure
    let broken = dir.path().join("broken.toml");
    std::fs::write(&broken, "[[entries]]\nid = \"x\"\nimage = \"nope.png\"\nground_truth = \"phantom_000_gt.png\"\n").unwrap();
    assert_eq!(run_bin(&["run", broken.to_str().unwrap()]).0, 1);

    let invalid = dir.path().join("invalid.toml");
    std::fs::write(&invalid, "entries = 3\n").unwrap();
    assert_eq!(run_bin(&["run", invalid.to_str().unwrap()]).0, 2);

    assert_eq!(run_bin(&["eval", "/nonexistent/a.png", gt.to_str().unwrap()]).0, 1);
}
