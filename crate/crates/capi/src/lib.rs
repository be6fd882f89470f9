//! C ABI over the arcdim library: opaque handles, integer status codes, and
//! a thread-local last-error message.

use arcdim::energy::{build_energy_problem, solve_penergy, EnergyParams};
use arcdim::error::Error;
use arcdim::families::{FSpec, FamilySpec};
use arcdim::pipeline::{build_family, deep_interior_vertex, Built};
use arcdim::report::RunConfig;
use arcdim::resistance::{heat_kernel_diag, ResistanceNetwork, TruncationPolicy};
use libc::{c_char, c_double, c_int, c_ulonglong};
use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::ptr;

/// Status codes mirroring the CLI exit codes.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum ArcdimStatus {
    Ok = 0,
    Internal = 1,
    InvalidArgument = 2,
    Truncated = 3,
    SolverFailure = 4,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(msg).ok();
    });
}

fn status_of(e: &Error) -> ArcdimStatus {
    match e {
        Error::InvalidParam(_) | Error::UnknownVertex(_) | Error::Json(_) => {
            ArcdimStatus::InvalidArgument
        }
        Error::Truncated(_)
        | Error::HorizonExceedsWindow { .. }
        | Error::LevelOutOfWindow(..)
        | Error::NoCertifiedCells => ArcdimStatus::Truncated,
        Error::NonConvergence { .. } | Error::ReductionStalled { .. } => {
            ArcdimStatus::SolverFailure
        }
        _ => ArcdimStatus::Internal,
    }
}

fn fail(e: Error) -> ArcdimStatus {
    let s = status_of(&e);
    set_error(e.to_string());
    s
}

/// Opaque family handle.
pub struct ArcdimFamily {
    spec: FamilySpec,
    built: Built,
}

/// Most recent error message on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn arcdim_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(ptr::null(), |s| s.as_ptr())
    })
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn arcdim_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr() as *const c_char
}

unsafe fn parse_spec(
    family: *const c_char,
    f_spec: *const c_char,
    depth: u32,
) -> Result<FamilySpec, Error> {
    if family.is_null() {
        return Err(Error::InvalidParam("family is NULL".into()));
    }
    let name = CStr::from_ptr(family)
        .to_str()
        .map_err(|_| Error::InvalidParam("family is not UTF-8".into()))?;
    let f = if f_spec.is_null() {
        FSpec::Const(0)
    } else {
        FSpec::parse(
            CStr::from_ptr(f_spec)
                .to_str()
                .map_err(|_| Error::InvalidParam("f spec is not UTF-8".into()))?,
        )?
    };
    match name {
        "dyadic" | "dyadic-halfline" => Ok(FamilySpec::Dyadic { depth }),
        "box" => Ok(FamilySpec::Box { f, depth }),
        "gasket" => Ok(FamilySpec::Gasket { f, depth }),
        "carpet" => Ok(FamilySpec::Carpet { depth }),
        other => Err(Error::InvalidParam(format!("unknown family '{other}'"))),
    }
}

/// Build a family window. On success writes a heap handle to `out`; free it
/// with `arcdim_family_free`.
///
/// # Safety
/// `family` and (optionally) `f_spec` must be valid NUL-terminated strings;
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn arcdim_family_build(
    family: *const c_char,
    f_spec: *const c_char,
    depth: u32,
    out: *mut *mut ArcdimFamily,
) -> ArcdimStatus {
    if out.is_null() {
        set_error("out handle is NULL".into());
        return ArcdimStatus::InvalidArgument;
    }
    let spec = match parse_spec(family, f_spec, depth) {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    match build_family(&spec, true) {
        Ok(built) => {
            let handle = Box::new(ArcdimFamily { spec, built });
            *out = Box::into_raw(handle);
            ArcdimStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// # Safety
/// `h` must be a handle returned by `arcdim_family_build`, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn arcdim_family_free(h: *mut ArcdimFamily) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// # Safety
/// `h` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn arcdim_family_vertex_count(
    h: *const ArcdimFamily,
    out: *mut c_ulonglong,
) -> ArcdimStatus {
    if h.is_null() || out.is_null() {
        set_error("NULL argument".into());
        return ArcdimStatus::InvalidArgument;
    }
    match &(*h).built {
        Built::Graphy { window, .. } => {
            *out = window.graph.len() as c_ulonglong;
            ArcdimStatus::Ok
        }
        Built::Carpet(t) => {
            *out = t.level(t.depth).len() as c_ulonglong;
            ArcdimStatus::Ok
        }
    }
}

/// # Safety
/// `h` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn arcdim_family_edge_count(
    h: *const ArcdimFamily,
    out: *mut c_ulonglong,
) -> ArcdimStatus {
    if h.is_null() || out.is_null() {
        set_error("NULL argument".into());
        return ArcdimStatus::InvalidArgument;
    }
    match &(*h).built {
        Built::Graphy { window, .. } => {
            *out = window.graph.edge_count() as c_ulonglong;
            ArcdimStatus::Ok
        }
        Built::Carpet(_) => {
            set_error("carpet trees have no graph edges".into());
            ArcdimStatus::InvalidArgument
        }
    }
}

/// Graph JSON export; free the string with `arcdim_string_free`.
///
/// # Safety
/// `h` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn arcdim_family_export_json(
    h: *const ArcdimFamily,
    out: *mut *mut c_char,
) -> ArcdimStatus {
    if h.is_null() || out.is_null() {
        set_error("NULL argument".into());
        return ArcdimStatus::InvalidArgument;
    }
    let json = match &(*h).built {
        Built::Graphy { window, .. } => window.to_json().to_string(),
        Built::Carpet(t) => serde_json::json!({"depth": t.depth}).to_string(),
    };
    match CString::new(json) {
        Ok(s) => {
            *out = s.into_raw();
            ArcdimStatus::Ok
        }
        Err(_) => {
            set_error("JSON contained interior NUL".into());
            ArcdimStatus::Internal
        }
    }
}

/// # Safety
/// `s` must be a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn arcdim_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Two-terminal effective resistance between vertex ids, window closed.
///
/// # Safety
/// `h` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn arcdim_resistance(
    h: *const ArcdimFamily,
    a: c_ulonglong,
    b: c_ulonglong,
    out: *mut c_double,
) -> ArcdimStatus {
    if h.is_null() || out.is_null() {
        set_error("NULL argument".into());
        return ArcdimStatus::InvalidArgument;
    }
    let (window, mu) = match &(*h).built {
        Built::Graphy { window, mu, .. } => (window.clone(), mu.clone()),
        Built::Carpet(_) => {
            set_error("resistance needs a graph family".into());
            return ArcdimStatus::InvalidArgument;
        }
    };
    let net = ResistanceNetwork::new(window, mu);
    match net.resistance_ids(
        &[arcdim::graph::VertexId(a)],
        &[arcdim::graph::VertexId(b)],
        TruncationPolicy::Closed,
    ) {
        Ok(r) => {
            *out = r.value;
            ArcdimStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Fitted slope of -log p_{2n}(x,x) against log n from the deep interior
/// vertex; `d_s_out` receives twice the slope.
///
/// # Safety
/// `h` must be a live handle; output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn arcdim_heat_slope(
    h: *const ArcdimFamily,
    horizon: c_ulonglong,
    slope_out: *mut c_double,
    d_s_out: *mut c_double,
) -> ArcdimStatus {
    if h.is_null() || slope_out.is_null() || d_s_out.is_null() {
        set_error("NULL argument".into());
        return ArcdimStatus::InvalidArgument;
    }
    let (window, mu) = match &(*h).built {
        Built::Graphy { window, mu, .. } => (window.clone(), mu.clone()),
        Built::Carpet(_) => {
            set_error("heat kernels need a graph family".into());
            return ArcdimStatus::InvalidArgument;
        }
    };
    let base_idx = deep_interior_vertex(&window);
    let base = window.graph.id(base_idx);
    let net = ResistanceNetwork::new(window, mu);
    match heat_kernel_diag(&net, base, horizon as usize) {
        Ok(series) => {
            let n_hi = series.p2n.len() - 1;
            let n_lo = (n_hi / 16).max(2);
            let slope = series.slope(n_lo, n_hi);
            *slope_out = slope;
            *d_s_out = 2.0 * slope;
            ArcdimStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// E_{p,k,w}(N1, N2, N) at the deepest certified interior edge cell.
///
/// # Safety
/// `h` must be a live handle; output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn arcdim_energy(
    h: *const ArcdimFamily,
    p: c_double,
    k: u32,
    n1: u32,
    n2: u32,
    n_fat: u32,
    value_out: *mut c_double,
    certified_out: *mut c_int,
) -> ArcdimStatus {
    if h.is_null() || value_out.is_null() || certified_out.is_null() {
        set_error("NULL argument".into());
        return ArcdimStatus::InvalidArgument;
    }
    let (window, tree) = match &(*h).built {
        Built::Graphy {
            window,
            tree: Some(tree),
            ..
        } => (window, tree),
        _ => {
            set_error("energies need a graph family with a partition tree".into());
            return ArcdimStatus::InvalidArgument;
        }
    };
    let params = match EnergyParams::new(n1, n2, n_fat) {
        Ok(p) => p,
        Err(e) => return fail(e),
    };
    // Deepest certified edge cell containing the deep interior vertex.
    let x = deep_interior_vertex(window);
    let (h_min, h_max) = tree.heights();
    let mut base = None;
    'outer: for height in (h_min..=h_max).rev() {
        if let Some(lv) = tree.level(height) {
            for i in 0..lv.len() as u32 {
                if lv.lambda_e[i as usize]
                    && lv.complete[i as usize]
                    && lv.cell(i).binary_search(&x).is_ok()
                {
                    base = Some(arcdim::partition::NodeRef::Te(arcdim::partition::NodeId {
                        height,
                        idx: i,
                    }));
                    break 'outer;
                }
            }
        }
    }
    let base = match base {
        Some(b) => b,
        None => {
            set_error("no certified edge cell found".into());
            return ArcdimStatus::Truncated;
        }
    };
    match build_energy_problem(tree, base, k, p, params).and_then(|prob| solve_penergy(&prob, 1e-9, 200))
    {
        Ok(res) => {
            *value_out = res.value;
            *certified_out = res.certified as c_int;
            ArcdimStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Composed spectral dimensions for gasket patterns: the walk dimension from
/// tilted rates and the p = 2 spectral dimension.
///
/// # Safety
/// `h` must be a live handle; output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn arcdim_gasket_dims(
    h: *const ArcdimFamily,
    d_s_walk_out: *mut c_double,
    d_s2_out: *mut c_double,
) -> ArcdimStatus {
    if h.is_null() || d_s_walk_out.is_null() || d_s2_out.is_null() {
        set_error("NULL argument".into());
        return ArcdimStatus::InvalidArgument;
    }
    let spec = &(*h).spec;
    let config = RunConfig {
        family: spec.clone(),
        n1: 0,
        n2: 2,
        n_fat: 1,
        n2_sweep: 0,
        k_range: vec![1, 2, 3],
        p_grid: vec![2.0],
        p_bracket: (1.0, 3.0),
        tol_p: 0.25,
        solver_tol: 1e-9,
        seed: 0,
        threads: 0,
        walk_horizon: 64,
        out_dir: None,
    };
    match arcdim::pipeline::run_dims(&config) {
        Ok(rep) => match rep.deep_gasket {
            Some(deep) => {
                *d_s_walk_out = deep.d_s_walk;
                *d_s2_out = deep.d_s2;
                ArcdimStatus::Ok
            }
            None => {
                set_error("family has no gasket pattern report".into());
                ArcdimStatus::InvalidArgument
            }
        },
        Err(e) => fail(e),
    }
}
