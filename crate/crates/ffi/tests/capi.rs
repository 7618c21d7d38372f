use std::ffi::{c_char, CStr, CString};
use std::ptr;

use qmeasure_ffi::*;

fn cstrs(v: &[&str]) -> (Vec<CString>, Vec<*const c_char>) {
    let owned: Vec<CString> = v.iter().map(|s| CString::new(*s).unwrap()).collect();
    let ptrs = owned.iter().map(|s| s.as_ptr()).collect();
    (owned, ptrs)
}

fn last_error() -> Option<String> {
    let p = qm_last_error();
    if p.is_null() {
        return None;
    }
    let s = unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned();
    unsafe { qm_string_free(p) };
    Some(s)
}

#[test]
fn bell_pair_reduces_to_half_identity() {
    let (_a, a) = cstrs(&["a"]);
    let (_b, b) = cstrs(&["b"]);
    unsafe {
        let mut phi = ptr::null_mut();
        assert_eq!(qm_state_bell_phi(a[0], b[0], &mut phi), QmStatus::Ok);
        let mut rho = ptr::null_mut();
        assert_eq!(qm_state_to_density(phi, &mut rho), QmStatus::Ok);
        let mut red = ptr::null_mut();
        assert_eq!(qm_density_partial_trace(rho, a.as_ptr(), 1, &mut red), QmStatus::Ok);
        let mut dim = 0;
        assert_eq!(qm_density_dim(red, &mut dim), QmStatus::Ok);
        assert_eq!(dim, 2);
        for i in 0..2 {
            for j in 0..2 {
                let (mut re, mut im) = (0.0, 0.0);
                assert_eq!(qm_density_entry(red, i, j, &mut re, &mut im), QmStatus::Ok);
                let want = if i == j { 0.5 } else { 0.0 };
                assert!((re - want).abs() < 1e-12 && im.abs() < 1e-12);
            }
        }
        let mut td = 1.0;
        assert_eq!(qm_trace_distance(rho, rho, &mut td), QmStatus::Ok);
        assert!(td < 1e-12);
        qm_density_free(red);
        qm_density_free(rho);
        qm_state_free(phi);
    }
}

#[test]
fn tensor_and_amplitudes() {
    let (_l, l) = cstrs(&["s"]);
    let (_m, m) = cstrs(&["t"]);
    unsafe {
        let mut s = ptr::null_mut();
        let mut t = ptr::null_mut();
        assert_eq!(qm_state_new(l.as_ptr(), [2].as_ptr(), 1, [0.6, 0.8].as_ptr(), ptr::null(), 2, &mut s), QmStatus::Ok);
        assert_eq!(qm_state_new(m.as_ptr(), [2].as_ptr(), 1, [0.0, 0.0].as_ptr(), [1.0, 0.0].as_ptr(), 2, &mut t), QmStatus::Ok);
        let mut st = ptr::null_mut();
        assert_eq!(qm_state_tensor(s, t, &mut st), QmStatus::Ok);
        let mut dim = 0;
        qm_state_dim(st, &mut dim);
        assert_eq!(dim, 4);
        let (mut re, mut im) = (0.0, 0.0);
        assert_eq!(qm_state_amplitude(st, 2, &mut re, &mut im), QmStatus::Ok);
        assert!(re.abs() < 1e-15 && (im - 0.8).abs() < 1e-15);
        assert_eq!(qm_state_amplitude(st, 4, &mut re, &mut im), QmStatus::OutOfRange);
        assert_eq!(qm_state_tensor(s, s, &mut st), QmStatus::Layout);
        assert!(last_error().unwrap().contains("more than once"));
        qm_state_free(st);
        qm_state_free(s);
        qm_state_free(t);
    }
}

#[test]
fn errors_are_reported_not_panicked() {
    let (_l, l) = cstrs(&["s"]);
    unsafe {
        let mut s = ptr::null_mut();
        let st = qm_state_new(l.as_ptr(), [2].as_ptr(), 1, [1.0, 1.0].as_ptr(), ptr::null(), 2, &mut s);
        assert_eq!(st, QmStatus::NotNormalized);
        assert!(s.is_null());
        assert!(last_error().unwrap().contains("norm"));
        assert_eq!(qm_state_dim(ptr::null(), &mut 0), QmStatus::NullPointer);
        let mut dim = 0;
        assert_eq!(qm_state_new(l.as_ptr(), [2].as_ptr(), 1, [1.0, 0.0].as_ptr(), ptr::null(), 2, &mut s), QmStatus::Ok);
        assert!(last_error().is_none());
        assert_eq!(qm_state_dim(s, &mut dim), QmStatus::Ok);
        qm_state_free(s);
        qm_state_free(ptr::null_mut());
    }
}

#[test]
fn measurement_is_seeded() {
    let (_l, l) = cstrs(&["s"]);
    unsafe {
        let mut s = ptr::null_mut();
        qm_state_new(l.as_ptr(), [2].as_ptr(), 1, [0.6, 0.8].as_ptr(), ptr::null(), 2, &mut s);
        let outcomes = |seed| {
            let rng = qm_rng_new(seed);
            let mut v = Vec::new();
            for _ in 0..200 {
                let mut m = QmMeasurement::default();
                assert_eq!(qm_measure(s, QmBasis::Z, rng, &mut m), QmStatus::Ok);
                assert!(m.fidelity >= 1.0 - 1e-10);
                v.push(m.outcome_index);
            }
            qm_rng_free(rng);
            v
        };
        let a = outcomes(5);
        assert_eq!(a, outcomes(5));
        let ones = a.iter().filter(|&&i| i == 1).count();
        assert!((100..=160).contains(&ones), "{ones}");
        qm_state_free(s);
    }
}

#[test]
fn experiment_values() {
    unsafe {
        let mut p = [0.0; 2];
        assert_eq!(qm_stern_gerlach(false, p.as_mut_ptr()), QmStatus::Ok);
        assert!(p.iter().all(|x| (x - 0.5).abs() < 1e-12));
        assert_eq!(qm_mach_zehnder(true, 1.0, p.as_mut_ptr()), QmStatus::Ok);
        assert!((p[0] - 0.5f64.sin().powi(2)).abs() < 1e-10);
        let mut s = 0.0;
        use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
        assert_eq!(qm_chsh(0.0, FRAC_PI_2, FRAC_PI_4, 3.0 * FRAC_PI_4, &mut s), QmStatus::Ok);
        assert!((s - 2.0 * 2f64.sqrt()).abs() < 1e-9);
    }
}

#[test]
fn double_slit_buffers() {
    let mut g = qm_slit_geometry_default();
    g.n_points = 128;
    let mut x = vec![0.0; 128];
    let mut d = vec![0.0; 128];
    unsafe {
        assert_eq!(qm_double_slit(&g, true, true, x.as_mut_ptr(), d.as_mut_ptr(), 128), QmStatus::Ok);
        assert_eq!(qm_double_slit(&g, true, true, x.as_mut_ptr(), d.as_mut_ptr(), 100), QmStatus::BufferTooSmall);
        assert_eq!(qm_double_slit(&g, false, false, x.as_mut_ptr(), d.as_mut_ptr(), 128), QmStatus::InvalidArgument);
    }
    let sum: f64 = d.iter().sum::<f64>() * (x[1] - x[0]);
    assert!((sum - 1.0).abs() < 1e-9);
}

#[test]
fn run_command_returns_json_and_exit_code() {
    let (_a, argv) = cstrs(&["qmeasure", "sg", "--exact"]);
    unsafe {
        let mut json = ptr::null_mut();
        let mut code = -1;
        assert_eq!(qm_run_command(argv.as_ptr(), argv.len(), &mut json, &mut code), QmStatus::Ok);
        assert_eq!(code, 0);
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        qm_string_free(json);
        assert!(text.contains("\"command\": \"sg\""));
    }
    let (_b, bad) = cstrs(&["qmeasure", "nope"]);
    unsafe {
        let mut json = ptr::null_mut();
        let mut code = -1;
        qm_run_command(bad.as_ptr(), bad.len(), &mut json, &mut code);
        assert_eq!(code, 2);
        qm_string_free(json);
    }
}

#[test]
fn header_declares_the_api() {
    let h = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/qmeasure.h")).unwrap();
    for name in [
        "typedef struct QmState QmState;",
        "QM_STATUS_OK = 0",
        "qm_density_partial_trace",
        "qm_string_free",
        "qm_last_error",
    ] {
        assert!(h.contains(name), "{name} missing from header");
    }
}
