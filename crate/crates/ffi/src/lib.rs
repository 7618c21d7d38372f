//! C ABI for `qmeasure`.
//!
//! Objects cross the boundary as opaque handles (`QmState`, `QmDensity`,
//! `QmRng`) created by `*_new`-style functions and released with the matching
//! `*_free`. Every fallible call returns a [`QmStatus`]; on failure the
//! message is kept per thread and read with [`qm_last_error`]. Strings
//! handed out by this library are released with [`qm_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qmeasure::experiments::{
    chsh_exact, double_slit, mach_zehnder_probabilities, stern_gerlach, ChshSetting, SlitGeometry,
    SpinInput,
};
use qmeasure::measurement::{measure, MeasurementBasis};
use qmeasure::rng::SeededRng;
use qmeasure::state::{trace_distance, DensityMatrix, StateVector, SubsystemLayout, C64};
use qmeasure::Error;

/// Status codes. `QM_STATUS_OK` is zero.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidUtf8 = 3,
    Layout = 4,
    Shape = 5,
    NotNormalized = 6,
    InvalidOperator = 7,
    OutOfRange = 8,
    BufferTooSmall = 9,
    Numerical = 10,
    Panic = 11,
}

/// Basis for [`qm_measure`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QmBasis {
    Computational = 0,
    Z = 1,
    X = 2,
    Y = 3,
}

/// Two-slit geometry in metres. `qm_slit_geometry_default` fills the
/// library defaults.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QmSlitGeometry {
    pub slit_separation: f64,
    pub slit_width: f64,
    pub wavelength: f64,
    pub screen_distance: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
    pub weight_first: f64,
    pub weight_second: f64,
}

/// Result of one [`qm_measure`] call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QmMeasurement {
    pub outcome_index: usize,
    pub probability: f64,
    pub fidelity: f64,
    pub seed_used: u64,
}

pub struct QmState {
    inner: StateVector,
}

pub struct QmDensity {
    inner: DensityMatrix,
}

pub struct QmRng {
    inner: SeededRng,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(err: &Error) -> QmStatus {
    match err {
        Error::LabelCollision(_)
        | Error::UnknownLabel(_)
        | Error::EmptySelection
        | Error::InvalidLayout(_) => QmStatus::Layout,
        Error::Shape(_) => QmStatus::Shape,
        Error::NotNormalized(_) | Error::Normalization(_) | Error::InvalidTrace(_) => {
            QmStatus::NotNormalized
        }
        Error::NotHermitian(_)
        | Error::NotPositive(_)
        | Error::NotUnitary(_)
        | Error::Channel(_)
        | Error::Completeness(_)
        | Error::NotOrthonormal(_) => QmStatus::InvalidOperator,
        Error::Resource(_) => QmStatus::OutOfRange,
        Error::Numerical(_) | Error::DegenerateDistribution(_) | Error::NegativeProbability(_) => {
            QmStatus::Numerical
        }
        Error::NonFinite
        | Error::MarkerCapacity { .. }
        | Error::InvalidArgument(_)
        | Error::EmptyProfile => QmStatus::InvalidArgument,
    }
}

/// Runs `f`, converting errors and panics into a status and the thread's
/// last error.
fn guard(f: impl FnOnce() -> Result<(), (QmStatus, String)>) -> QmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            QmStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside qmeasure");
            QmStatus::Panic
        }
    }
}

type Fallible<T> = Result<T, (QmStatus, String)>;

fn lib<T>(r: qmeasure::Result<T>) -> Fallible<T> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (QmStatus, String) {
    (QmStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Fallible<&'a T> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn deref_mut<'a, T>(p: *mut T, what: &str) -> Fallible<&'a mut T> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Fallible<&'a [T]> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn string(p: *const c_char, what: &str) -> Fallible<String> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(str::to_owned)
        .map_err(|_| (QmStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn strings(p: *const *const c_char, n: usize, what: &str) -> Fallible<Vec<String>> {
    slice(p, n, what)?.iter().map(|&s| string(s, what)).collect()
}

unsafe fn put<T>(out: *mut T, value: T, what: &str) -> Fallible<()> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

/// Last error message on this thread, or NULL when the last call succeeded.
/// The caller owns the returned string.
#[no_mangle]
pub extern "C" fn qm_last_error() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null_mut(), |s| s.clone().into_raw()))
}

/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn qm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

// ---- states ----

/// Builds a normalized pure state over factors `labels[i]` of dimension
/// `dims[i]`. Amplitudes are given as `re`/`im` arrays of length
/// `n_amps` (the product of the dimensions); `im` may be NULL.
///
/// # Safety
/// Array pointers must be valid for their stated lengths; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn qm_state_new(
    labels: *const *const c_char,
    dims: *const usize,
    n_factors: usize,
    re: *const f64,
    im: *const f64,
    n_amps: usize,
    out: *mut *mut QmState,
) -> QmStatus {
    guard(|| {
        let labels = strings(labels, n_factors, "labels")?;
        let dims = slice(dims, n_factors, "dims")?;
        let layout = lib(SubsystemLayout::new(labels.into_iter().zip(dims.iter().copied())))?;
        let re = slice(re, n_amps, "re")?;
        let im = if im.is_null() { &[][..] } else { slice(im, n_amps, "im")? };
        let amps: Vec<C64> = re
            .iter()
            .enumerate()
            .map(|(i, &r)| C64::new(r, im.get(i).copied().unwrap_or(0.0)))
            .collect();
        let state = lib(StateVector::from_slice(layout, &amps))?;
        put(out, Box::into_raw(Box::new(QmState { inner: state })), "out")
    })
}

/// The Bell pair `(|00⟩ + |11⟩)/√2` on factors `first`, `second`.
///
/// # Safety
/// Label pointers must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qm_state_bell_phi(
    first: *const c_char,
    second: *const c_char,
    out: *mut *mut QmState,
) -> QmStatus {
    guard(|| {
        let s = lib(StateVector::bell_phi(&string(first, "first")?, &string(second, "second")?))?;
        put(out, Box::into_raw(Box::new(QmState { inner: s })), "out")
    })
}

/// # Safety
/// `s` must come from this library and not have been freed; NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn qm_state_free(s: *mut QmState) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// # Safety
/// `s` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qm_state_dim(s: *const QmState, out: *mut usize) -> QmStatus {
    guard(|| put(out, deref(s, "state")?.inner.dim(), "out"))
}

/// Copies amplitude `i` into `re`, `im`.
///
/// # Safety
/// `s` must be a live handle; `re` and `im` writable.
#[no_mangle]
pub unsafe extern "C" fn qm_state_amplitude(
    s: *const QmState,
    i: usize,
    re: *mut f64,
    im: *mut f64,
) -> QmStatus {
    guard(|| {
        let amps = deref(s, "state")?.inner.amplitudes();
        if i >= amps.len() {
            return Err((QmStatus::OutOfRange, format!("index {i} out of {}", amps.len())));
        }
        put(re, amps[i].re, "re")?;
        put(im, amps[i].im, "im")
    })
}

/// `a ⊗ b`; factor labels must be distinct.
///
/// # Safety
/// `a`, `b` must be live handles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qm_state_tensor(
    a: *const QmState,
    b: *const QmState,
    out: *mut *mut QmState,
) -> QmStatus {
    guard(|| {
        let t = lib(deref(a, "a")?.inner.tensor(&deref(b, "b")?.inner))?;
        put(out, Box::into_raw(Box::new(QmState { inner: t })), "out")
    })
}

/// # Safety
/// `s` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qm_state_to_density(s: *const QmState, out: *mut *mut QmDensity) -> QmStatus {
    guard(|| {
        let d = deref(s, "state")?.inner.to_density();
        put(out, Box::into_raw(Box::new(QmDensity { inner: d })), "out")
    })
}

// ---- density matrices ----

/// # Safety
/// `d` must come from this library and not have been freed; NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn qm_density_free(d: *mut QmDensity) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// # Safety
/// `d` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qm_density_dim(d: *const QmDensity, out: *mut usize) -> QmStatus {
    guard(|| put(out, deref(d, "density")?.inner.dim(), "out"))
}

/// Entry `(row, col)`.
///
/// # Safety
/// `d` must be a live handle; `re`, `im` writable.
#[no_mangle]
pub unsafe extern "C" fn qm_density_entry(
    d: *const QmDensity,
    row: usize,
    col: usize,
    re: *mut f64,
    im: *mut f64,
) -> QmStatus {
    guard(|| {
        let m = deref(d, "density")?.inner.matrix();
        if row >= m.nrows() || col >= m.ncols() {
            return Err((QmStatus::OutOfRange, format!("entry ({row}, {col}) out of {}", m.nrows())));
        }
        put(re, m[(row, col)].re, "re")?;
        put(im, m[(row, col)].im, "im")
    })
}

/// Keeps the factors named in `keep` (in their original order) and traces
/// out the rest.
///
/// # Safety
/// `d` must be a live handle; `keep` valid for `n_keep` strings; `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn qm_density_partial_trace(
    d: *const QmDensity,
    keep: *const *const c_char,
    n_keep: usize,
    out: *mut *mut QmDensity,
) -> QmStatus {
    guard(|| {
        let keep = strings(keep, n_keep, "keep")?;
        let refs: Vec<&str> = keep.iter().map(String::as_str).collect();
        let r = lib(deref(d, "density")?.inner.partial_trace(&refs))?;
        put(out, Box::into_raw(Box::new(QmDensity { inner: r })), "out")
    })
}

/// # Safety
/// `a`, `b` must be live handles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qm_trace_distance(
    a: *const QmDensity,
    b: *const QmDensity,
    out: *mut f64,
) -> QmStatus {
    guard(|| put(out, lib(trace_distance(&deref(a, "a")?.inner, &deref(b, "b")?.inner))?, "out"))
}

// ---- randomness and measurement ----

#[no_mangle]
pub extern "C" fn qm_rng_new(seed: u64) -> *mut QmRng {
    Box::into_raw(Box::new(QmRng { inner: SeededRng::new(seed) }))
}

/// # Safety
/// `r` must come from [`qm_rng_new`] and not have been freed; NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn qm_rng_free(r: *mut QmRng) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Marks a single-factor state in `basis` and detects one outcome.
///
/// # Safety
/// `s`, `rng` must be live handles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qm_measure(
    s: *const QmState,
    basis: QmBasis,
    rng: *mut QmRng,
    out: *mut QmMeasurement,
) -> QmStatus {
    guard(|| {
        let state = &deref(s, "state")?.inner;
        let basis = match (basis, state.dim()) {
            (QmBasis::Computational, d) => MeasurementBasis::computational(d),
            (QmBasis::Z, 2) => MeasurementBasis::z(),
            (QmBasis::X, 2) => MeasurementBasis::spin_xz(std::f64::consts::FRAC_PI_2),
            (QmBasis::Y, 2) => MeasurementBasis::y(),
            (_, d) => {
                return Err((QmStatus::InvalidArgument, format!("spin basis on dimension {d}")))
            }
        };
        let rec = lib(measure(state, &basis, &mut deref_mut(rng, "rng")?.inner))?;
        put(
            out,
            QmMeasurement {
                outcome_index: rec.outcome_index,
                probability: rec.probability,
                fidelity: rec.fidelity,
                seed_used: rec.seed_used,
            },
            "out",
        )
    })
}

// ---- experiments ----

/// Exact (upper, lower) path probabilities; `z_plus` selects a `z₊` input
/// instead of `y₊`.
///
/// # Safety
/// `out` must be writable for two doubles.
#[no_mangle]
pub unsafe extern "C" fn qm_stern_gerlach(z_plus: bool, out: *mut f64) -> QmStatus {
    guard(|| {
        let input = if z_plus { SpinInput::ZPlus } else { SpinInput::YPlus };
        let r = lib(stern_gerlach(input, 0, &mut SeededRng::new(0)))?;
        let p = r.exact_probabilities.unwrap_or_default();
        write_all(out, &p, 2)
    })
}

/// Exact receiver probabilities.
///
/// # Safety
/// `out` must be writable for two doubles.
#[no_mangle]
pub unsafe extern "C" fn qm_mach_zehnder(second_mirror: bool, phase: f64, out: *mut f64) -> QmStatus {
    guard(|| write_all(out, &lib(mach_zehnder_probabilities(second_mirror, phase))?, 2))
}

/// Exact CHSH value on the Bell pair.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qm_chsh(a: f64, a_prime: f64, b: f64, b_prime: f64, out: *mut f64) -> QmStatus {
    guard(|| {
        let phi = lib(StateVector::bell_phi("alice", "bob"))?;
        let s = lib(chsh_exact(&ChshSetting { a, a_prime, b, b_prime }, &phi))?;
        put(out, s, "out")
    })
}

#[no_mangle]
pub extern "C" fn qm_slit_geometry_default() -> QmSlitGeometry {
    let g = SlitGeometry::default();
    QmSlitGeometry {
        slit_separation: g.slit_separation,
        slit_width: g.slit_width,
        wavelength: g.wavelength,
        screen_distance: g.screen_distance,
        x_min: g.x_min,
        x_max: g.x_max,
        n_points: g.n_points,
        weight_first: g.slit_weights[0],
        weight_second: g.slit_weights[1],
    }
}

/// Screen density on the geometry's grid. `x` and `density` must hold
/// `geometry.n_points` doubles each; `capacity` is their length.
///
/// # Safety
/// `geometry` readable; `x` and `density` writable for `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn qm_double_slit(
    geometry: *const QmSlitGeometry,
    open_first: bool,
    open_second: bool,
    x: *mut f64,
    density: *mut f64,
    capacity: usize,
) -> QmStatus {
    guard(|| {
        let g = deref(geometry, "geometry")?;
        let geom = SlitGeometry {
            slit_separation: g.slit_separation,
            slit_width: g.slit_width,
            wavelength: g.wavelength,
            screen_distance: g.screen_distance,
            x_min: g.x_min,
            x_max: g.x_max,
            n_points: g.n_points,
            slit_weights: [g.weight_first, g.weight_second],
        };
        if capacity < g.n_points {
            return Err((
                QmStatus::BufferTooSmall,
                format!("buffers hold {capacity}, need {}", g.n_points),
            ));
        }
        let p = lib(double_slit(&geom, [open_first, open_second]))?;
        write_all(x, &p.x, p.x.len())?;
        write_all(density, &p.density, p.density.len())
    })
}

unsafe fn write_all(out: *mut f64, values: &[f64], n: usize) -> Fallible<()> {
    if out.is_null() {
        return Err(null("out"));
    }
    if values.len() != n {
        return Err((QmStatus::Numerical, format!("expected {n} values, got {}", values.len())));
    }
    ptr::copy_nonoverlapping(values.as_ptr(), out, n);
    Ok(())
}

// ---- command line ----

/// Runs a CLI command (`argv[0]` is the program name) and returns its JSON
/// report in `json_out` (caller frees with [`qm_string_free`]) and its exit
/// code in `exit_code`.
///
/// # Safety
/// `argv` valid for `argc` strings; outputs writable.
#[no_mangle]
pub unsafe extern "C" fn qm_run_command(
    argv: *const *const c_char,
    argc: usize,
    json_out: *mut *mut c_char,
    exit_code: *mut i32,
) -> QmStatus {
    guard(|| {
        let args = strings(argv, argc, "argv")?;
        let mut buf = Vec::new();
        let code = qmeasure::cli::run(args, &mut buf);
        let text = CString::new(buf).map_err(|_| (QmStatus::Numerical, "report contains NUL".into()))?;
        put(exit_code, code, "exit_code")?;
        put(json_out, text.into_raw(), "json_out")
    })
}
