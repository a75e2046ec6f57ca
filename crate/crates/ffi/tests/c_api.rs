use std::ffi::{CStr, CString};
use std::ptr;

use anosov_lab_ffi::*;

const CYCLIC: &str = r#"
name = "cyclic"
radius = 4
theta = [[1]]

[group]
kind = "free"
projective = [true]

[[group.generators]]
name = "u"
blocks = [[1.0, 1.0, 0.0, 1.0]]

[budgets]
powers = 20000

[functionals.alpha]
roots = [{ factor = 0, index = 1, coefficient = 1.0 }]

[expected.delta]
value = 0.5
tolerance = 0.05
"#;

fn parse(s: &str) -> (AlStatus, *mut AlConfig) {
    let c = CString::new(s).unwrap();
    let mut cfg = ptr::null_mut();
    let st = unsafe { al_config_parse(c.as_ptr(), &mut cfg) };
    (st, cfg)
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(al_last_error()) }.to_str().unwrap().to_string()
}

#[test]
fn exponent_round_trip() {
    let (st, cfg) = parse(CYCLIC);
    assert_eq!(st, AlStatus::Ok);
    let name = CString::new("exponent").unwrap();
    let mut out = ptr::null_mut();
    let st = unsafe { al_run(cfg, name.as_ptr(), -1, false, 0, ptr::null(), &mut out) };
    assert_eq!(st, AlStatus::Ok, "{}", last_error());
    let key = CString::new("delta").unwrap();
    let mut delta = 0.0;
    assert_eq!(unsafe { al_outcome_metric(out, key.as_ptr(), &mut delta) }, AlStatus::Ok);
    assert!((delta - 0.5).abs() < 0.05, "{delta}");
    assert_eq!(unsafe { al_outcome_failed_checks(out) }, 0);
    let missing = CString::new("nope").unwrap();
    assert_eq!(unsafe { al_outcome_metric(out, missing.as_ptr(), &mut delta) }, AlStatus::NotFound);
    let json = unsafe { al_outcome_json(out) };
    assert!(!json.is_null());
    let text = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_string();
    assert!(text.contains("\"command\": \"exponent\""));
    unsafe {
        al_string_free(json);
        al_outcome_free(out);
        al_config_free(cfg);
    }
}

#[test]
fn errors_map_to_status_codes() {
    let (st, cfg) = parse("name = 1");
    assert_eq!(st, AlStatus::Config);
    assert!(cfg.is_null());
    assert!(!last_error().is_empty());

    let (_, cfg) = parse(CYCLIC);
    let bad = CString::new("plot").unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { al_run(cfg, bad.as_ptr(), -1, false, 0, ptr::null(), &mut out) }, AlStatus::Config);
    assert!(last_error().contains("plot"));
    assert_eq!(unsafe { al_run(ptr::null(), bad.as_ptr(), -1, false, 0, ptr::null(), &mut out) }, AlStatus::NullPointer);
    unsafe { al_config_free(cfg) };
}

#[test]
fn cartan_of_a_diagonal_matrix() {
    let m = [4.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.25];
    let mut k = [0.0; 3];
    assert_eq!(unsafe { al_cartan_projection(m.as_ptr(), 3, false, k.as_mut_ptr()) }, AlStatus::Ok);
    let l = 4f64.ln();
    assert!((k[0] - l).abs() < 1e-12 && k[1].abs() < 1e-12 && (k[2] + l).abs() < 1e-12);
    let singular = [1.0, 0.0, 0.0, 0.0];
    let mut k2 = [0.0; 2];
    assert_eq!(unsafe { al_cartan_projection(singular.as_ptr(), 2, false, k2.as_mut_ptr()) }, AlStatus::Config);
}
