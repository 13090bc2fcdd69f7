use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use semimart_ffi::*;

const CONFIG: &str = r#"
kind = "clt"
theorem = "t5"

[model]
d = 1
m = 1
sigma0 = [1.0]

[model.jumps]
scheduled = [{ time = 0.5, size = [1.0] }]

[function]
name = "quartic"

[grid]
horizon = 1.0
n = 256

[run]
seed = 3
reps = 60
"#;

fn last_error() -> String {
    let p = semimart_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn parse(text: &str) -> *mut SemimartConfig {
    let c = CString::new(text).unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { semimart_config_parse(c.as_ptr(), &mut cfg) }, SemimartStatus::Ok);
    cfg
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(semimart_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn config_errors_are_reported() {
    let c = CString::new("kind = \"clt\"\n").unwrap();
    let mut cfg = ptr::null_mut();
    let status = unsafe { semimart_config_parse(c.as_ptr(), &mut cfg) };
    assert_eq!(status, SemimartStatus::Config);
    assert!(cfg.is_null());
    assert!(last_error().contains("seed required for reproducibility"));
    let status = unsafe { semimart_config_parse(ptr::null(), &mut cfg) };
    assert_eq!(status, SemimartStatus::NullPointer);
}

#[test]
fn path_and_functionals() {
    let cfg = parse(CONFIG);
    let mut path = ptr::null_mut();
    assert_eq!(unsafe { semimart_path_simulate(cfg, 11, &mut path) }, SemimartStatus::Ok);
    unsafe {
        assert_eq!(semimart_path_steps(path), 256);
        assert_eq!(semimart_path_dim(path), 1);
        assert_eq!(semimart_path_jumps(path), 1);
    }
    let mut x = vec![0.0; 257];
    assert_eq!(unsafe { semimart_path_x(path, x.as_mut_ptr(), 10) }, SemimartStatus::BufferTooSmall);
    assert_eq!(unsafe { semimart_path_x(path, x.as_mut_ptr(), x.len()) }, SemimartStatus::Ok);
    assert_eq!(x[0], 0.0);

    let mut f = ptr::null_mut();
    assert_eq!(unsafe { semimart_function_from_config(cfg, &mut f) }, SemimartStatus::Ok);
    assert_eq!(unsafe { semimart_function_dim(f) }, 1);
    let (mut ito, mut jump) = ([0.0], [0.0]);
    unsafe {
        assert_eq!(semimart_functional_terminal(f, path, SemimartSeries::DIto, ito.as_mut_ptr(), 1), SemimartStatus::Ok);
        assert_eq!(semimart_functional_terminal(f, path, SemimartSeries::DJump, jump.as_mut_ptr(), 1), SemimartStatus::Ok);
    }
    assert_eq!(ito, jump);
    assert_eq!(jump[0], 1.0);

    let name = CString::new("power_abs").unwrap();
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { semimart_function_new(name.as_ptr(), 1, 2.0, &mut g) }, SemimartStatus::Ok);
    let (mut vn, mut vp) = ([0.0], [0.0]);
    unsafe {
        semimart_functional_terminal(g, path, SemimartSeries::Vn, vn.as_mut_ptr(), 1);
        semimart_functional_terminal(g, path, SemimartSeries::VPrime, vp.as_mut_ptr(), 1);
    }
    assert!((vn[0] - vp[0]).abs() < 1e-12);
    let bad = CString::new("no_such_function").unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { semimart_function_new(bad.as_ptr(), 1, f64::NAN, &mut h) }, SemimartStatus::InvalidArgument);
    assert!(last_error().contains("no_such_function"));

    unsafe {
        semimart_function_free(f);
        semimart_function_free(g);
        semimart_path_free(path);
        semimart_config_free(cfg);
    }
}

#[test]
fn run_reports_inapplicable_theorems() {
    let cfg = parse(CONFIG);
    let dir = tempfile::tempdir().unwrap();
    let out = CString::new(dir.path().to_str().unwrap()).unwrap();
    let status = unsafe { semimart_run(cfg, out.as_ptr(), ptr::null_mut()) };
    assert_eq!(status, SemimartStatus::Inapplicable);
    assert!(last_error().contains("t5 does not apply"));
    unsafe { semimart_config_free(cfg) };
}

#[test]
fn run_writes_outputs() {
    let cfg = parse(&CONFIG.replace("quartic", "quad").replace("[model.jumps]\nscheduled = [{ time = 0.5, size = [1.0] }]\n", ""));
    unsafe {
        assert_eq!(semimart_config_set_seed(cfg, 99), SemimartStatus::Ok);
        assert_eq!(semimart_config_set_workers(cfg, 2), SemimartStatus::Ok);
    }
    let dir = tempfile::tempdir().unwrap();
    let out = CString::new(dir.path().to_str().unwrap()).unwrap();
    let mut failures = usize::MAX;
    assert_eq!(unsafe { semimart_run(cfg, out.as_ptr(), &mut failures) }, SemimartStatus::Ok);
    assert_eq!(failures, 0);
    let records = std::fs::read_to_string(dir.path().join("records.csv")).unwrap();
    assert!(records.contains("# seed=99"));
    unsafe { semimart_config_free(cfg) };
}

#[test]
fn ks_through_the_abi() {
    let samples = vec![0.0; 60];
    let (mut stat, mut p) = (0.0, 0.0);
    let status = unsafe { semimart_ks_test(samples.as_ptr(), samples.len(), &mut stat, &mut p) };
    assert_eq!(status, SemimartStatus::Ok);
    assert_eq!(stat, 0.5);
    assert!(p < 1e-10);
    let status = unsafe { semimart_ks_test(samples.as_ptr(), 10, &mut stat, &mut p) };
    assert_eq!(status, SemimartStatus::InvalidArgument);
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/semimart.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in ["semimart_config_parse", "semimart_run", "semimart_ks_test", "SEMIMART_STATUS_OK"] {
        assert!(text.contains(name), "{name}");
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(&src, "#include \"semimart.h\"\nint main(void) { return semimart_version() == 0; }\n").unwrap();
    let Ok(status) = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(header.parent().unwrap())
        .arg(&src)
        .status()
    else {
        return;
    };
    assert!(status.success());
}
