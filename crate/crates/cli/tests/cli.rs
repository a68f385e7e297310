use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rawbench_core::bench::{synthetic_scene, BenchManifest, DepthSource, ImageSource};
use rawbench_core::fit::FitConfig;
use rawbench_core::io;
use rawbench_core::isp::params::IspParams;
use rawbench_core::raw::mosaic;
use rawbench_core::CfaPattern;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_rawbench"));
    c.env_remove("RAWBENCH_SEED");
    c
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("spawn rawbench")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn ok(o: &Output) {
    assert_eq!(code(o), 0, "stderr: {}", String::from_utf8_lossy(&o.stderr));
}

/// Writes scene.ppm and scene.pgm/.json into `dir`.
fn fixtures(dir: &Path) {
    let img = synthetic_scene(32, 24, 5);
    io::write_rgb(&img, &dir.join("scene.ppm"), io::RgbMode::Linear16Ppm).unwrap();
    let bayer = mosaic(&img, CfaPattern::Rggb).unwrap();
    io::write_raw(&bayer, &dir.join("scene.pgm"), &dir.join("scene.json")).unwrap();
}

fn listing(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

#[test]
fn fog_without_depth_is_missing_dependency() {
    let t = tempfile::tempdir().unwrap();
    fixtures(t.path());
    let o = run(t.path(), &["corrupt", "--input", "scene.ppm", "--kind", "fog", "--out", "o"]);
    assert_eq!(code(&o), 5);
    assert!(String::from_utf8_lossy(&o.stderr).contains("E_MISSING_DEPENDENCY"));
    assert!(!t.path().join("o").exists());
    let o = run(t.path(), &["corrupt", "--input", "scene.ppm", "--kind", "fog", "--depth", "procedural", "--out", "o"]);
    ok(&o);
    assert!(t.path().join("o/corrupted.ppm").is_file());
    assert!(t.path().join("o/spec.json").is_file());
}

#[test]
fn usage_errors_exit_2_and_name_the_flag() {
    let t = tempfile::tempdir().unwrap();
    fixtures(t.path());
    let o = run(t.path(), &["corrupt", "--input", "scene.ppm", "--kind", "fog"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("--out"));
    let o = run(t.path(), &["corrupt", "--input", "scene.ppm", "--kind", "fog", "--spec", "x.json", "--out", "o"]);
    assert_eq!(code(&o), 2);
    let o = run(t.path(), &["corrupt", "--input", "scene.ppm", "--kind", "sunburn", "--out", "o"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("--kind"));
    let o = run(t.path(), &["develop", "--raw", "missing.pgm", "--out", "o"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("--raw"));
    assert!(!t.path().join("o").exists());
}

#[test]
fn format_errors_use_format_exit_code() {
    let t = tempfile::tempdir().unwrap();
    fixtures(t.path());
    fs::write(t.path().join("scene.json"), "{\"schema_version\":1}").unwrap();
    let o = run(t.path(), &["visualize", "--raw", "scene.pgm", "--out", "o"]);
    assert_eq!(code(&o), 4);
    assert!(String::from_utf8_lossy(&o.stderr).contains("E_SIDECAR"));
}

#[test]
fn corrupt_is_seed_reproducible_and_env_seed_falls_back() {
    let t = tempfile::tempdir().unwrap();
    fixtures(t.path());
    let args = |out: &'static str| ["corrupt", "--input", "scene.ppm", "--kind", "sensor_noise", "--out", out];
    let a = run(t.path(), &[&args("a")[..], &["--seed", "9"]].concat());
    let b = run(t.path(), &[&args("b")[..], &["--seed", "9"]].concat());
    ok(&a);
    ok(&b);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(fs::read(t.path().join("a/corrupted.ppm")).unwrap(), fs::read(t.path().join("b/corrupted.ppm")).unwrap());
    let env = bin().current_dir(t.path()).env("RAWBENCH_SEED", "9").args(args("c")).output().unwrap();
    assert_eq!(env.stdout, a.stdout);
    let flag_wins = bin()
        .current_dir(t.path())
        .env("RAWBENCH_SEED", "9")
        .args([&args("d")[..], &["--seed", "10"]].concat())
        .output()
        .unwrap();
    ok(&flag_wins);
    assert_ne!(flag_wins.stdout, a.stdout);
}

#[test]
fn spec_document_replays_sampled_run() {
    let t = tempfile::tempdir().unwrap();
    fixtures(t.path());
    ok(&run(t.path(), &["--seed", "3", "corrupt", "--input", "scene.ppm", "--kind", "motion_blur", "--out", "a"]));
    ok(&run(t.path(), &["corrupt", "--input", "scene.ppm", "--spec", "a/spec.json", "--out", "b"]));
    assert_eq!(fs::read(t.path().join("a/hash.txt")).unwrap(), fs::read(t.path().join("b/hash.txt")).unwrap());
}

#[test]
fn sweep_writes_17_outputs_and_a_replayable_manifest() {
    let t = tempfile::tempdir().unwrap();
    fixtures(t.path());
    let o = run(
        t.path(),
        &["--seed", "4", "corrupt", "--input", "scene.pgm", "--raw", "--sweep", "--depth", "procedural", "--out", "sweep"],
    );
    ok(&o);
    let files = listing(&t.path().join("sweep"));
    assert_eq!(files.iter().filter(|p| p.extension().is_some_and(|e| e == "ppm")).count(), 17);
    let hashes = fs::read_to_string(t.path().join("sweep/hashes.tsv")).unwrap();
    assert_eq!(hashes.lines().count(), 17);
    let o = run(t.path(), &["bench", "--manifest", "sweep/manifest.json", "--hashes-only", "--out", "replay"]);
    ok(&o);
    assert_eq!(fs::read_to_string(t.path().join("replay/hashes.tsv")).unwrap(), hashes);
    assert_eq!(listing(&t.path().join("replay")).len(), 1);
}

#[test]
fn bench_hash_lists_are_stable_across_runs_and_jobs() {
    let t = tempfile::tempdir().unwrap();
    fixtures(t.path());
    let mut images = BTreeMap::new();
    images.insert("file".to_string(), ImageSource::Rgb("scene.ppm".into()));
    images.insert("synth".to_string(), ImageSource::Synthetic { width: 32, height: 32, seed: 1 });
    let m = BenchManifest::sweep(21, images, Some(DepthSource::Procedural));
    io::write_json(&m, &t.path().join("m.json")).unwrap();
    let mut lists = Vec::new();
    for (jobs, out) in [("1", "a"), ("1", "b"), ("4", "c")] {
        ok(&run(t.path(), &["--jobs", jobs, "bench", "--manifest", "m.json", "--out", out]));
        lists.push(fs::read_to_string(t.path().join(out).join("hashes.tsv")).unwrap());
    }
    assert_eq!(lists[0].lines().count(), 34);
    assert_eq!(lists[0], lists[1]);
    assert_eq!(lists[0], lists[2]);
}

#[test]
fn bench_rejects_duplicate_entries() {
    let t = tempfile::tempdir().unwrap();
    let mut images = BTreeMap::new();
    images.insert("s".to_string(), ImageSource::Synthetic { width: 8, height: 8, seed: 1 });
    let mut m = BenchManifest::sweep(1, images, None);
    m.entries.truncate(1);
    m.entries[0].seed = Some(5);
    m.entries.push(m.entries[0].clone());
    io::write_json(&m, &t.path().join("m.json")).unwrap();
    let o = run(t.path(), &["bench", "--manifest", "m.json", "--out", "o"]);
    assert_eq!(code(&o), 6);
}

#[test]
fn report_prints_low_light_cd() {
    let t = tempfile::tempdir().unwrap();
    fs::write(
        t.path().join("r.csv"),
        "method,condition,score\nbaseline,normal,87.7\nbaseline,low_light,74.9\nraw_adapter,normal,88.7\nraw_adapter,low_light,75.9\n",
    )
    .unwrap();
    let o = run(t.path(), &["report", "--records", "r.csv", "--reference", "baseline", "--out", "rep"]);
    ok(&o);
    let table = fs::read_to_string(t.path().join("rep/report.txt")).unwrap();
    let row = table
        .lines()
        .find(|l| l.starts_with("raw_adapter") && l.contains("low_light"))
        .expect("low_light row");
    assert!(row.contains("96.0%"), "{row}");
    assert_eq!(String::from_utf8_lossy(&o.stdout), table);
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(t.path().join("rep/report.json")).unwrap()).unwrap();
    assert_eq!(doc["schema_version"], 1);
    let o = run(t.path(), &["report", "--records", "r.csv", "--reference", "nobody", "--out", "rep2"]);
    assert_eq!(code(&o), 7);
}

#[test]
fn augment_writes_variants_and_coefficients() {
    let t = tempfile::tempdir().unwrap();
    fixtures(t.path());
    for out in ["a", "b"] {
        ok(&run(t.path(), &["--seed", "2", "--jobs", if out == "a" { "1" } else { "3" }, "augment", "--input", "scene.ppm", "-n", "12", "--out", out]));
    }
    let csv = fs::read_to_string(t.path().join("a/coefficients.csv")).unwrap();
    assert_eq!(csv.lines().count(), 13);
    assert!(csv.starts_with("index,branch,omega"));
    assert_eq!(csv, fs::read_to_string(t.path().join("b/coefficients.csv")).unwrap());
    for i in 0..12 {
        let name = format!("aug_{i:05}.ppm");
        assert_eq!(fs::read(t.path().join("a").join(&name)).unwrap(), fs::read(t.path().join("b").join(&name)).unwrap());
    }
}

#[test]
fn develop_dumps_stages_and_visualize_writes_preview() {
    let t = tempfile::tempdir().unwrap();
    fixtures(t.path());
    io::write_json(&IspParams::identity(), &t.path().join("p.json")).unwrap();
    ok(&run(t.path(), &["develop", "--raw", "scene.pgm", "--params", "p.json", "--dump-stages", "--out", "dev"]));
    for f in ["developed.ppm", "i2.ppm", "i3.ppm", "i4.ppm", "i5.ppm", "stages.json"] {
        assert!(t.path().join("dev").join(f).is_file(), "{f}");
    }
    ok(&run(t.path(), &["visualize", "--raw", "scene.pgm", "--out", "vis"]));
    let p = io::read_pnm(&t.path().join("vis/preview.pgm")).unwrap();
    assert_eq!((p.width, p.height, p.maxval), (32, 24, 255));
}

#[test]
fn fit_writes_params_and_identical_traces() {
    let t = tempfile::tempdir().unwrap();
    fixtures(t.path());
    ok(&run(t.path(), &["develop", "--raw", "scene.pgm", "--output-mode", "linear16", "--out", "target"]));
    let cfg = FitConfig {
        budget: 150,
        ..FitConfig::default().fix_ccm()
    };
    io::write_json(&cfg, &t.path().join("fit.json")).unwrap();
    for out in ["a", "b"] {
        ok(&run(
            t.path(),
            &["--seed", "1", "fit", "--raw", "scene.pgm", "--target", "target/developed.ppm", "--config", "fit.json", "--out", out],
        ));
    }
    let trace = fs::read_to_string(t.path().join("a/trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 151);
    assert_eq!(trace, fs::read_to_string(t.path().join("b/trace.csv")).unwrap());
    let p: IspParams = io::read_json(&t.path().join("a/best_params.json")).unwrap();
    assert!(p.g.is_finite());
}

#[test]
fn nothing_is_written_outside_out() {
    let t = tempfile::tempdir().unwrap();
    fixtures(t.path());
    let before = listing(t.path());
    ok(&run(t.path(), &["develop", "--raw", "scene.pgm", "--dump-stages", "--out", "nested/dir"]));
    ok(&run(t.path(), &["corrupt", "--input", "scene.ppm", "--kind", "vignetting", "--out", "nested/c"]));
    let mut after = listing(t.path());
    after.retain(|p| !p.ends_with("nested"));
    assert_eq!(before, after);
}
