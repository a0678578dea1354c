//! Exercises the C ABI from Rust and from a small C program built against the
//! generated header.

use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use teamshock_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = ts_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

unsafe fn take(s: *mut c_char) -> String {
    let out = CStr::from_ptr(s).to_string_lossy().into_owned();
    ts_string_free(s);
    out
}

#[test]
fn config_set_validate_and_errors() {
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(ts_config_new(&mut cfg), TsStatus::Ok);
        assert_eq!(ts_config_set(cfg, c("target_year").as_ptr(), c("2021").as_ptr()), TsStatus::Ok);
        assert_eq!(ts_config_set(cfg, c("months").as_ptr(), c("[1, 2, 3]").as_ptr()), TsStatus::Ok);
        assert_eq!(ts_config_set(cfg, c("model").as_ptr(), c("rf").as_ptr()), TsStatus::Ok);
        assert_eq!(ts_config_validate(cfg), TsStatus::Ok);
        let mut s = ptr::null_mut();
        assert_eq!(ts_config_to_toml(cfg, &mut s), TsStatus::Ok);
        let toml = take(s);
        assert!(toml.contains("target_year = 2021"), "{toml}");
        assert!(toml.contains("model = \"rf\""), "{toml}");

        assert_eq!(ts_config_set(cfg, c("no_such_key").as_ptr(), c("1").as_ptr()), TsStatus::InvalidConfig);
        assert!(last_error().contains("no_such_key"));
        assert_eq!(ts_config_set(cfg, c("target_year").as_ptr(), c("2000").as_ptr()), TsStatus::Ok);
        assert_eq!(ts_config_validate(cfg), TsStatus::InvalidConfig);
        assert!(last_error().contains("target_year"));

        let mut m = ptr::null_mut();
        assert_eq!(ts_run_pipeline(cfg, &mut m), TsStatus::InvalidConfig);
        assert!(m.is_null());
        ts_config_free(cfg);
    }
}

#[test]
fn null_arguments_are_rejected() {
    unsafe {
        assert_eq!(ts_config_new(ptr::null_mut()), TsStatus::InvalidArgument);
        let mut cfg = ptr::null_mut();
        assert_eq!(ts_config_from_toml(ptr::null(), &mut cfg), TsStatus::InvalidArgument);
        assert!(last_error().contains("NULL"));
        assert_eq!(ts_config_validate(ptr::null()), TsStatus::InvalidArgument);
        assert_eq!(ts_manifest_file_count(ptr::null()), 0);
        let mut d = 0.0;
        assert_eq!(ts_conformal_halfwidth(ptr::null(), 3, 0.1, &mut d), TsStatus::InvalidArgument);
        ts_config_free(ptr::null_mut());
        ts_manifest_free(ptr::null_mut());
        ts_analysis_free(ptr::null_mut());
        ts_string_free(ptr::null_mut());
        ts_clear_error();
        assert!(ts_last_error().is_null());
    }
}

#[test]
fn statistics_kernels() {
    // 19 residuals with |r| = 1..19, alpha 0.1 -> k = ceil(20 * 0.9) = 18
    let r: Vec<f64> = (1..=19).map(|i| if i % 2 == 0 { -(i as f64) } else { i as f64 }).collect();
    let mut d = 0.0;
    unsafe {
        assert_eq!(ts_conformal_halfwidth(r.as_ptr(), r.len(), 0.1, &mut d), TsStatus::Ok);
        assert_eq!(d, 18.0);
        assert_eq!(ts_conformal_halfwidth(r.as_ptr(), 3, 0.1, &mut d), TsStatus::Ok);
        assert!(d.is_infinite());
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [10.0, 11.0, 12.0, 13.0];
        let (mut stat, mut p) = (0.0, 0.0);
        assert_eq!(ts_ks_two_sample(a.as_ptr(), 4, b.as_ptr(), 4, &mut stat, &mut p), TsStatus::Ok);
        assert_eq!(stat, 1.0);
        assert!(p < 0.05);
        assert_eq!(ts_ks_two_sample(a.as_ptr(), 0, b.as_ptr(), 4, &mut stat, &mut p), TsStatus::InvalidArgument);
    }
}

fn write_corpus(dir: &Path) {
    let spec = c("n_repos = 120\nn_background = 20\n");
    let d = c(dir.to_str().unwrap());
    assert_eq!(unsafe { ts_synth_write(spec.as_ptr(), 11, d.as_ptr()) }, TsStatus::Ok, "{}", last_error());
}

fn small_config(dir: &Path) -> *mut TsConfig {
    let toml = format!(
        "events = [{:?}]\nprofiles = {:?}\nlanguages = {:?}\noutput = {:?}\ncompare_models = false\n\
         gbdt_n_trees = [50]\ngbdt_learning_rate = [0.1]\ngbdt_max_depth = [3]\ngbdt_min_samples_leaf = [5]\n\
         bootstrap_iterations = 50\nmonths = [1, 4]\n",
        dir.join("events.jsonl"),
        dir.join("profiles.csv"),
        dir.join("languages.csv"),
        dir.join("out"),
    );
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { ts_config_from_toml(c(&toml).as_ptr(), &mut cfg) }, TsStatus::Ok);
    cfg
}

#[test]
fn synth_analyze_and_run() {
    let dir = tempfile::tempdir().unwrap();
    write_corpus(dir.path());
    unsafe {
        let cfg = small_config(dir.path());
        let mut a = ptr::null_mut();
        assert_eq!(ts_analyze(cfg, &mut a), TsStatus::Ok, "{}", last_error());
        assert!(ts_analysis_target_count(a) > 50);
        let mut ate = 0.0;
        assert_eq!(ts_analysis_ate(a, 0, 1, &mut ate), TsStatus::Ok);
        assert!((ate + 0.3).abs() < 0.15, "{ate}");
        let mut p = 1.0;
        assert_eq!(ts_analysis_ks_p(a, 0, 1, &mut p), TsStatus::Ok);
        assert!((0.0..=1.0).contains(&p));
        assert_eq!(ts_analysis_ate(a, 0, 2, &mut ate), TsStatus::NotFound);
        assert_eq!(ts_analysis_ate(a, 7, 1, &mut ate), TsStatus::InvalidArgument);
        ts_analysis_free(a);

        let mut m = ptr::null_mut();
        assert_eq!(ts_run_pipeline(cfg, &mut m), TsStatus::Ok, "{}", last_error());
        assert!(ts_manifest_file_count(m) > 20);
        let mut sha = ptr::null_mut();
        assert_eq!(ts_manifest_digest(m, c("effects.json").as_ptr(), &mut sha), TsStatus::Ok);
        assert_eq!(take(sha).len(), 64);
        assert_eq!(ts_manifest_digest(m, c("nope").as_ptr(), &mut sha), TsStatus::NotFound);
        let mut json = ptr::null_mut();
        assert_eq!(ts_manifest_to_json(m, &mut json), TsStatus::Ok);
        let json = take(json);
        let on_disk = std::fs::read_to_string(dir.path().join("out/manifest.json")).unwrap();
        assert_eq!(json.trim_end(), on_disk.trim_end());
        ts_manifest_free(m);
        ts_config_free(cfg);
    }
}

fn target_dir() -> PathBuf {
    // target/<profile>/deps/capi-<hash>
    std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn header_compiles_and_links_from_c() {
    let crate_dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = crate_dir.join("include/teamshock.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for f in ["ts_config_new", "ts_run_pipeline", "ts_last_error", "ts_ks_two_sample", "TS_STATUS_INVALID_CONFIG"] {
        assert!(text.contains(f), "{f} missing from header");
    }
    let lib_dir = target_dir();
    assert!(lib_dir.join("libteamshock_ffi.so").exists(), "cdylib not found in {}", lib_dir.display());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("probe.c");
    std::fs::write(
        &src,
        r#"
#include <stdio.h>
#include <math.h>
#include "teamshock.h"

int main(void) {
    TsConfig *cfg = NULL;
    if (ts_config_new(&cfg) != TS_STATUS_OK) return 10;
    if (ts_config_set(cfg, "reference_year", "2030") != TS_STATUS_OK) return 11;
    if (ts_config_validate(cfg) != TS_STATUS_INVALID_CONFIG) return 12;
    printf("error=%s\n", ts_last_error());
    ts_config_free(cfg);
    double r[5] = {0.5, -1.0, 2.0, -0.25, 3.0};
    double d = 0.0;
    if (ts_conformal_halfwidth(r, 5, 0.2, &d) != TS_STATUS_OK) return 13;
    printf("d=%.3f\n", d);
    printf("version=%s\n", ts_version());
    return 0;
}
"#,
    )
    .unwrap();
    let exe = dir.path().join("probe");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg("-L")
        .arg(&lib_dir)
        .arg("-lteamshock_ffi")
        .arg("-lm")
        .arg("-o")
        .arg(&exe)
        .status()
        .expect("C compiler available");
    assert!(status.success());
    let out = Command::new(&exe).env("LD_LIBRARY_PATH", &lib_dir).output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "exit {:?}: {stdout}", out.status);
    assert!(stdout.contains("error=invalid configuration: target_year"), "{stdout}");
    // n = 5, alpha = 0.2: k = ceil(6 * 0.8) = 5, the largest |r|
    assert!(stdout.contains("d=3.000"), "{stdout}");
    assert!(stdout.contains(&format!("version={}", env!("CARGO_PKG_VERSION"))));
}
