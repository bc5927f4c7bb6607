//! C bindings for the contractivity library.
//!
//! Maps travel as opaque `PcmapMap` handles, matrices as flat row-major
//! buffers of interleaved `[re, im]` doubles (the same layout the JSON
//! artifacts use), and every fallible call returns a `PcmapStatus`. A
//! human-readable message for the most recent failure on the calling
//! thread is available through `pcmap_last_error`. Panics are trapped at
//! the boundary and reported as `PCMAP_STATUS_PANIC`.
//!
//! The committed header lives at `include/pcmap.h`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use libc::size_t;

use pcmap::contractivity::{canonicalize_triple, extension_margin_over_grid, hierarchy_scan};
use pcmap::entanglement::{isotropic_state, isotropic_threshold, witness_with_map};
use pcmap::maps::QuantumMap;
use pcmap::operator::{cx, CMatrix, DensityOperator};
use pcmap::positivity::{is_completely_positive, SearchBudget, VerdictKind};
use pcmap::report::parse_map_spec;
use pcmap::Error;

/// Status codes returned by every fallible binding.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PcmapStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    DimensionMismatch = 3,
    Constraint = 4,
    Internal = 5,
    Panic = 6,
}

/// Per-level verdict codes written by `pcmap_hierarchy_verdicts`.
pub const PCMAP_VERDICT_VIOLATION: i32 = -1;
pub const PCMAP_VERDICT_UNDECIDED: i32 = 0;
pub const PCMAP_VERDICT_MEMBER: i32 = 1;

/// Opaque handle around a superoperator.
pub struct PcmapMap {
    inner: QuantumMap,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure {
    status: PcmapStatus,
    message: String,
}

impl Failure {
    fn null(what: &str) -> Self {
        Failure {
            status: PcmapStatus::NullPointer,
            message: format!("{what} is a null pointer"),
        }
    }

    fn invalid(message: impl Into<String>) -> Self {
        Failure {
            status: PcmapStatus::InvalidInput,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::InvalidInput(_) => PcmapStatus::InvalidInput,
            Error::DimensionMismatch(_) => PcmapStatus::DimensionMismatch,
            Error::NotHermitian(_)
            | Error::NotTracePreserving(_)
            | Error::NotUnital(_)
            | Error::Precondition(_) => PcmapStatus::Constraint,
            _ => PcmapStatus::Internal,
        };
        Failure {
            status,
            message: e.to_string(),
        }
    }
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).ok();
    });
}

fn run_ffi(body: impl FnOnce() -> Result<(), Failure>) -> PcmapStatus {
    LAST_ERROR.with(|slot| slot.borrow_mut().take());
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => PcmapStatus::Ok,
        Ok(Err(failure)) => {
            set_error(&failure.message);
            failure.status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic with non-string payload".to_string());
            set_error(&message);
            PcmapStatus::Panic
        }
    }
}

fn borrowed<'a, T>(ptr: *const T, what: &str) -> Result<&'a T, Failure> {
    unsafe { ptr.as_ref() }.ok_or_else(|| Failure::null(what))
}

fn out_slot<'a, T>(ptr: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    unsafe { ptr.as_mut() }.ok_or_else(|| Failure::null(what))
}

fn c_string<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if ptr.is_null() {
        return Err(Failure::null(what));
    }
    unsafe { CStr::from_ptr(ptr) }
        .to_str()
        .map_err(|_| Failure::invalid(format!("{what} is not valid UTF-8")))
}

/// Reads `rows * cols` complex entries from `2 * rows * cols` doubles,
/// row-major, interleaved real/imaginary.
fn matrix_from_raw(
    ptr: *const f64,
    rows: usize,
    cols: usize,
    what: &str,
) -> Result<CMatrix, Failure> {
    if ptr.is_null() {
        return Err(Failure::null(what));
    }
    let raw = unsafe { std::slice::from_raw_parts(ptr, 2 * rows * cols) };
    if raw.iter().any(|v| !v.is_finite()) {
        return Err(Failure::invalid(format!("{what} contains a non-finite entry")));
    }
    Ok(CMatrix::from_fn(rows, cols, |r, c| {
        let at = 2 * (r * cols + c);
        cx(raw[at], raw[at + 1])
    }))
}

/// Copies the most recent error message on this thread into `buf`
/// (NUL-terminated, truncated to `cap`). Returns the full length of the
/// message including the terminator, or 0 when the last call succeeded.
#[no_mangle]
pub extern "C" fn pcmap_last_error(buf: *mut c_char, cap: size_t) -> size_t {
    LAST_ERROR.with(|slot| {
        let borrow = slot.borrow();
        let Some(message) = borrow.as_ref() else {
            return 0;
        };
        let bytes = message.as_bytes_with_nul();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap);
            let dst = unsafe { std::slice::from_raw_parts_mut(buf as *mut u8, n) };
            dst.copy_from_slice(&bytes[..n]);
            dst[n - 1] = 0;
        }
        bytes.len()
    })
}

/// Builds a map from a family spec such as `"lambda:a=0.6"`, `"omega:eps=0.5"`,
/// `"phi_p:d=3,p=1.5"`, or `"transpose:d=2"`.
#[no_mangle]
pub extern "C" fn pcmap_map_from_spec(spec: *const c_char, out: *mut *mut PcmapMap) -> PcmapStatus {
    run_ffi(|| {
        let slot = out_slot(out, "out")?;
        let text = c_string(spec, "spec")?;
        let inner = parse_map_spec(text)?;
        *slot = Box::into_raw(Box::new(PcmapMap { inner }));
        Ok(())
    })
}

/// Builds a map on a `dim`-level system from its `dim^2 x dim^2` superoperator,
/// passed as `2 * dim^4` doubles.
#[no_mangle]
pub extern "C" fn pcmap_map_from_superop(
    dim: size_t,
    superop: *const f64,
    label: *const c_char,
    out: *mut *mut PcmapMap,
) -> PcmapStatus {
    run_ffi(|| {
        let slot = out_slot(out, "out")?;
        let name = c_string(label, "label")?;
        let entries = matrix_from_raw(superop, dim * dim, dim * dim, "superop")?;
        let inner = QuantumMap::new(dim, entries, name)?;
        *slot = Box::into_raw(Box::new(PcmapMap { inner }));
        Ok(())
    })
}

/// Composition `first ∘ then`: the returned map applies `then`, then `first`.
#[no_mangle]
pub extern "C" fn pcmap_map_compose(
    first: *const PcmapMap,
    then: *const PcmapMap,
    out: *mut *mut PcmapMap,
) -> PcmapStatus {
    run_ffi(|| {
        let slot = out_slot(out, "out")?;
        let outer = borrowed(first, "first")?;
        let inner = borrowed(then, "then")?;
        let composed = outer.inner.compose(&inner.inner)?;
        *slot = Box::into_raw(Box::new(PcmapMap { inner: composed }));
        Ok(())
    })
}

/// Releases a map handle. Null is a no-op.
#[no_mangle]
pub extern "C" fn pcmap_map_free(map: *mut PcmapMap) {
    if !map.is_null() {
        drop(unsafe { Box::from_raw(map) });
    }
}

/// System dimension of the map, or 0 for a null handle.
#[no_mangle]
pub extern "C" fn pcmap_map_dim(map: *const PcmapMap) -> size_t {
    unsafe { map.as_ref() }.map_or(0, |m| m.inner.dim())
}

/// Smallest eigenvalue of the Choi matrix.
#[no_mangle]
pub extern "C" fn pcmap_choi_lambda_min(map: *const PcmapMap, out: *mut f64) -> PcmapStatus {
    run_ffi(|| {
        let slot = out_slot(out, "out")?;
        let map = borrowed(map, "map")?;
        *slot = map.inner.choi().lambda_min()?;
        Ok(())
    })
}

/// Writes 1 when the Choi matrix is positive semidefinite within `tol`,
/// else 0. Requires a Hermiticity-preserving map.
#[no_mangle]
pub extern "C" fn pcmap_is_completely_positive(
    map: *const PcmapMap,
    tol: f64,
    out: *mut i32,
) -> PcmapStatus {
    run_ffi(|| {
        let slot = out_slot(out, "out")?;
        let map = borrowed(map, "map")?;
        let verdict = is_completely_positive(&map.inner, tol)?;
        *slot = i32::from(verdict.kind == VerdictKind::CertifiedMember);
        Ok(())
    })
}

/// Runs the full contraction scan over levels 1..=dim^2 and writes one
/// verdict code per level into `out` (`PCMAP_VERDICT_*`). `out_len`
/// receives the number of levels; `cap` must be at least that.
#[no_mangle]
pub extern "C" fn pcmap_hierarchy_verdicts(
    map: *const PcmapMap,
    restarts: size_t,
    iters: size_t,
    seed: u64,
    out: *mut i32,
    cap: size_t,
    out_len: *mut size_t,
) -> PcmapStatus {
    run_ffi(|| {
        let len_slot = out_slot(out_len, "out_len")?;
        let map = borrowed(map, "map")?;
        let levels = map.inner.dim() * map.inner.dim();
        *len_slot = levels;
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        if cap < levels {
            return Err(Failure::invalid(format!(
                "verdict buffer holds {cap} entries, need {levels}"
            )));
        }
        let budget = SearchBudget { restarts, iters };
        let scan = hierarchy_scan(&map.inner, &budget, seed)?;
        let slots = unsafe { std::slice::from_raw_parts_mut(out, levels) };
        for (slot, cert) in slots.iter_mut().zip(&scan) {
            *slot = match cert.verdict {
                VerdictKind::CertifiedViolation => PCMAP_VERDICT_VIOLATION,
                VerdictKind::NoViolationFound => PCMAP_VERDICT_UNDECIDED,
                VerdictKind::CertifiedMember => PCMAP_VERDICT_MEMBER,
            };
        }
        Ok(())
    })
}

/// Worst extension margin of a qubit map over a grid of canonical
/// three-state spans, plus a flag for whether every grid point admitted a
/// trace-norm-compatible extension.
#[no_mangle]
pub extern "C" fn pcmap_extension_margin(
    map: *const PcmapMap,
    grid: size_t,
    out_margin: *mut f64,
    out_all_feasible: *mut i32,
) -> PcmapStatus {
    run_ffi(|| {
        let margin_slot = out_slot(out_margin, "out_margin")?;
        let feasible_slot = out_slot(out_all_feasible, "out_all_feasible")?;
        let map = borrowed(map, "map")?;
        let (margin, feasible) = extension_margin_over_grid(&map.inner, grid)?;
        *margin_slot = margin;
        *feasible_slot = i32::from(feasible);
        Ok(())
    })
}

/// Smallest eigenvalue of (id ⊗ map) applied to the isotropic state with
/// fidelity `f` on the map's dimension.
#[no_mangle]
pub extern "C" fn pcmap_isotropic_witness(
    map: *const PcmapMap,
    fidelity: f64,
    out: *mut f64,
) -> PcmapStatus {
    run_ffi(|| {
        let slot = out_slot(out, "out")?;
        let map = borrowed(map, "map")?;
        let state = isotropic_state(map.inner.dim(), fidelity)?;
        *slot = witness_with_map(&state, &map.inner)?;
        Ok(())
    })
}

/// Fidelity at which the witness spectrum of the isotropic family crosses
/// zero, bisected inside `[lo, hi]`.
#[no_mangle]
pub extern "C" fn pcmap_isotropic_threshold(
    map: *const PcmapMap,
    lo: f64,
    hi: f64,
    out: *mut f64,
) -> PcmapStatus {
    run_ffi(|| {
        let slot = out_slot(out, "out")?;
        let map = borrowed(map, "map")?;
        *slot = isotropic_threshold(&map.inner, map.inner.dim(), lo, hi)?;
        Ok(())
    })
}

/// Canonical parameter of a linearly independent triple of qubit density
/// matrices, each passed as 8 doubles (2x2, row-major, interleaved).
#[no_mangle]
pub extern "C" fn pcmap_canonical_parameter(
    rho1: *const f64,
    rho2: *const f64,
    rho3: *const f64,
    out_p: *mut f64,
) -> PcmapStatus {
    run_ffi(|| {
        let slot = out_slot(out_p, "out_p")?;
        let states = [(rho1, "rho1"), (rho2, "rho2"), (rho3, "rho3")]
            .map(|(ptr, what)| -> Result<DensityOperator, Failure> {
                Ok(DensityOperator::new(matrix_from_raw(ptr, 2, 2, what)?)?)
            });
        let [r1, r2, r3] = states;
        let triple = canonicalize_triple(&r1?, &r2?, &r3?)?;
        *slot = triple.p();
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ptr;

    fn from_spec(spec: &str) -> *mut PcmapMap {
        let c = CString::new(spec).unwrap();
        let mut handle: *mut PcmapMap = ptr::null_mut();
        let status = pcmap_map_from_spec(c.as_ptr(), &mut handle);
        assert_eq!(status, PcmapStatus::Ok, "spec {spec} failed: {}", last_error());
        assert!(!handle.is_null());
        handle
    }

    fn last_error() -> String {
        let mut buf = vec![0i8; 256];
        let needed = pcmap_last_error(buf.as_mut_ptr() as *mut c_char, buf.len());
        if needed == 0 {
            return String::new();
        }
        let text = unsafe { CStr::from_ptr(buf.as_ptr() as *const c_char) };
        text.to_string_lossy().into_owned()
    }

    #[test]
    fn spec_construction_and_cp_queries() {
        let map = from_spec("lambda:a=0.6");
        assert_eq!(pcmap_map_dim(map), 2);

        let mut lam = f64::NAN;
        assert_eq!(pcmap_choi_lambda_min(map, &mut lam), PcmapStatus::Ok);
        assert!(lam < -1e-3, "a = 0.6 sits outside the CP region, got {lam}");

        let mut cp = -1;
        assert_eq!(pcmap_is_completely_positive(map, 1e-9, &mut cp), PcmapStatus::Ok);
        assert_eq!(cp, 0);
        pcmap_map_free(map);

        let map = from_spec("lambda:a=0.4");
        let mut cp = -1;
        assert_eq!(pcmap_is_completely_positive(map, 1e-9, &mut cp), PcmapStatus::Ok);
        assert_eq!(cp, 1);
        pcmap_map_free(map);
    }

    #[test]
    fn bad_inputs_report_status_and_message() {
        let c = CString::new("lambda:a=2").unwrap();
        let mut handle: *mut PcmapMap = ptr::null_mut();
        assert_eq!(
            pcmap_map_from_spec(c.as_ptr(), &mut handle),
            PcmapStatus::InvalidInput
        );
        assert!(handle.is_null());
        assert!(last_error().contains("singular"), "got: {}", last_error());

        assert_eq!(
            pcmap_map_from_spec(ptr::null(), &mut handle),
            PcmapStatus::NullPointer
        );
        assert_eq!(pcmap_map_from_spec(c.as_ptr(), ptr::null_mut()), PcmapStatus::NullPointer);

        let mut lam = 0.0;
        assert_eq!(
            pcmap_choi_lambda_min(ptr::null(), &mut lam),
            PcmapStatus::NullPointer
        );

        // a successful call clears the message
        let map = from_spec("transpose:d=2");
        let mut lam = f64::NAN;
        assert_eq!(pcmap_choi_lambda_min(map, &mut lam), PcmapStatus::Ok);
        assert_eq!(pcmap_last_error(ptr::null_mut(), 0), 0);
        pcmap_map_free(map);
    }

    #[test]
    fn truncation_still_terminates_the_message() {
        let c = CString::new("lambda:a=2").unwrap();
        let mut handle: *mut PcmapMap = ptr::null_mut();
        pcmap_map_from_spec(c.as_ptr(), &mut handle);
        let mut buf = [1i8; 8];
        let needed = pcmap_last_error(buf.as_mut_ptr() as *mut c_char, buf.len());
        assert!(needed > buf.len());
        assert_eq!(buf[7], 0);
    }

    #[test]
    fn dense_round_trip_matches_spec_construction() {
        let reference = from_spec("transpose:d=2");
        let superop = unsafe { &(*reference).inner }.superop().clone();
        let mut flat = Vec::with_capacity(2 * 16);
        for r in 0..4 {
            for c in 0..4 {
                flat.push(superop[(r, c)].re);
                flat.push(superop[(r, c)].im);
            }
        }
        let label = CString::new("transpose copy").unwrap();
        let mut dense: *mut PcmapMap = ptr::null_mut();
        assert_eq!(
            pcmap_map_from_superop(2, flat.as_ptr(), label.as_ptr(), &mut dense),
            PcmapStatus::Ok
        );

        let mut a = f64::NAN;
        let mut b = f64::NAN;
        assert_eq!(pcmap_choi_lambda_min(reference, &mut a), PcmapStatus::Ok);
        assert_eq!(pcmap_choi_lambda_min(dense, &mut b), PcmapStatus::Ok);
        assert!((a - b).abs() < 1e-12);
        pcmap_map_free(reference);
        pcmap_map_free(dense);
    }

    #[test]
    fn composition_respects_dimensions() {
        let lam = from_spec("lambda:a=0.6");
        let omega = from_spec("omega:eps=0.55");
        let mut composed: *mut PcmapMap = ptr::null_mut();
        assert_eq!(pcmap_map_compose(lam, omega, &mut composed), PcmapStatus::Ok);
        assert_eq!(pcmap_map_dim(composed), 2);
        pcmap_map_free(composed);

        let qutrit = from_spec("phi_p:d=3,p=1.5");
        let mut bad: *mut PcmapMap = ptr::null_mut();
        assert_eq!(
            pcmap_map_compose(lam, qutrit, &mut bad),
            PcmapStatus::DimensionMismatch
        );
        assert!(bad.is_null());
        pcmap_map_free(qutrit);
        pcmap_map_free(omega);
        pcmap_map_free(lam);
    }

    #[test]
    fn hierarchy_verdicts_match_the_transposition_profile() {
        let map = from_spec("transpose:d=2");
        let mut verdicts = [7i32; 4];
        let mut len = 0usize;
        let status = pcmap_hierarchy_verdicts(map, 6, 80, 3, verdicts.as_mut_ptr(), 4, &mut len);
        assert_eq!(status, PcmapStatus::Ok, "{}", last_error());
        assert_eq!(len, 4);
        assert_eq!(verdicts[0], PCMAP_VERDICT_UNDECIDED);
        assert_eq!(verdicts[1], PCMAP_VERDICT_UNDECIDED);
        assert_eq!(verdicts[2], PCMAP_VERDICT_VIOLATION);
        assert_eq!(verdicts[3], PCMAP_VERDICT_VIOLATION);

        // a short buffer still reports the required length
        let mut len = 0usize;
        assert_eq!(
            pcmap_hierarchy_verdicts(map, 6, 80, 3, verdicts.as_mut_ptr(), 2, &mut len),
            PcmapStatus::InvalidInput
        );
        assert_eq!(len, 4);
        pcmap_map_free(map);
    }

    #[test]
    fn extension_margin_separates_the_level_three_boundary() {
        let inside = from_spec("lambda:a=0.6");
        let mut margin = f64::NAN;
        let mut feasible = 0;
        assert_eq!(
            pcmap_extension_margin(inside, 9, &mut margin, &mut feasible),
            PcmapStatus::Ok
        );
        assert_eq!(feasible, 1);
        assert!(margin > -1e-9);
        pcmap_map_free(inside);

        let outside = from_spec("lambda:a=0.75");
        assert_eq!(
            pcmap_extension_margin(outside, 9, &mut margin, &mut feasible),
            PcmapStatus::Ok
        );
        assert_eq!(feasible, 0);
        pcmap_map_free(outside);
    }

    #[test]
    fn isotropic_witness_and_threshold() {
        let map = from_spec("lambda:a=0.6");
        let mut lam = f64::NAN;
        assert_eq!(pcmap_isotropic_witness(map, 0.5, &mut lam), PcmapStatus::Ok);
        assert!(lam > 1e-6);
        assert_eq!(pcmap_isotropic_witness(map, 0.9, &mut lam), PcmapStatus::Ok);
        assert!(lam < -1e-6);

        let mut boundary = f64::NAN;
        assert_eq!(
            pcmap_isotropic_threshold(map, 0.25, 1.0, &mut boundary),
            PcmapStatus::Ok
        );
        assert!((boundary - 5.0 / 6.0).abs() < 1e-6);
        pcmap_map_free(map);
    }

    #[test]
    fn canonical_parameter_from_flat_buffers() {
        let rho1 = [0.3, 0.0, 0.0, 0.0, 0.0, 0.0, 0.7, 0.0];
        let rho2 = [0.3, 0.0, 0.2, 0.0, 0.2, 0.0, 0.7, 0.0];
        let rho3 = [0.3, 0.0, 0.0, -0.2, 0.0, 0.2, 0.7, 0.0];
        let mut p = f64::NAN;
        assert_eq!(
            pcmap_canonical_parameter(rho1.as_ptr(), rho2.as_ptr(), rho3.as_ptr(), &mut p),
            PcmapStatus::Ok
        );
        assert!((p - 0.3).abs() < 1e-9 || (p - 0.7).abs() < 1e-9);

        // a dependent triple cannot be canonicalized
        let status = pcmap_canonical_parameter(rho1.as_ptr(), rho1.as_ptr(), rho3.as_ptr(), &mut p);
        assert_ne!(status, PcmapStatus::Ok);
        assert!(!last_error().is_empty());
    }
}
