//! C ABI over the `legifield` crate.
//!
//! Scenes and trajectories are opaque handles owned by the caller and
//! released with the matching `*_free` function. Every fallible call returns
//! an [`LfStatus`]; on failure a message is available from
//! [`lf_last_error_message`] until the next call on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use legifield::baseline::BaselineConfig;
use legifield::clutter;
use legifield::config::RunConfig;
use legifield::legibility;
use legifield::scene::{self, Scene};
use legifield::trajectory::{PlannerTag, Trajectory};
use legifield::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Validation = 4,
    Io = 5,
    UnknownTarget = 6,
    DegenerateScene = 7,
    NotConverged = 8,
    BufferTooSmall = 9,
    Internal = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LfPlanner {
    PotentialField = 0,
    Baseline = 1,
}

/// Opaque scene handle.
pub struct LfScene(Scene);

/// Opaque trajectory handle.
pub struct LfTrajectory(Trajectory);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(err: &Error) -> LfStatus {
    match err {
        Error::Parse { .. } => LfStatus::Parse,
        Error::Io { .. } => LfStatus::Io,
        Error::UnknownTarget(_) => LfStatus::UnknownTarget,
        Error::DegenerateScene { .. } => LfStatus::DegenerateScene,
        Error::LocalMinimum { .. } | Error::Singularity { .. } => LfStatus::NotConverged,
        _ => LfStatus::Validation,
    }
}

fn fail(err: Error) -> LfStatus {
    set_error(err.to_string());
    status_of(&err)
}

/// Runs `body` with the error slot cleared, turning panics into `Internal`.
fn guard(body: impl FnOnce() -> LfStatus) -> LfStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            LfStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, LfStatus> {
    if p.is_null() {
        set_error("null string argument");
        return Err(LfStatus::NullPointer);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8");
        LfStatus::InvalidUtf8
    })
}

unsafe fn put<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

/// Loads a scene file. On success `*out` receives a new handle.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lf_scene_load(path: *const c_char, out: *mut *mut LfScene) -> LfStatus {
    guard(|| {
        if out.is_null() {
            set_error("null output pointer");
            return LfStatus::NullPointer;
        }
        *out = ptr::null_mut();
        let path = match str_arg(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match scene::load_scene(Path::new(path)) {
            Ok(s) => {
                put(out, LfScene(s));
                LfStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Parses a scene from JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lf_scene_from_json(
    json: *const c_char,
    out: *mut *mut LfScene,
) -> LfStatus {
    guard(|| {
        if out.is_null() {
            set_error("null output pointer");
            return LfStatus::NullPointer;
        }
        *out = ptr::null_mut();
        let text = match str_arg(json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match Scene::from_json(text, Path::new("<ffi>")) {
            Ok(s) => {
                put(out, LfScene(s));
                LfStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Generates the seeded cluttered scene in the default workspace.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lf_scene_generate_cluttered(
    n: usize,
    seed: u64,
    min_gap: f64,
    out: *mut *mut LfScene,
) -> LfStatus {
    guard(|| {
        if out.is_null() {
            set_error("null output pointer");
            return LfStatus::NullPointer;
        }
        *out = ptr::null_mut();
        match scene::generate_cluttered_scene(n, seed, min_gap) {
            Ok(s) => {
                put(out, LfScene(s));
                LfStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Generates an evenly spaced row of `n` objects.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lf_scene_generate_uncluttered(
    spacing: f64,
    n: usize,
    out: *mut *mut LfScene,
) -> LfStatus {
    guard(|| {
        if out.is_null() {
            set_error("null output pointer");
            return LfStatus::NullPointer;
        }
        *out = ptr::null_mut();
        match scene::generate_uncluttered_scene(spacing, n) {
            Ok(s) => {
                put(out, LfScene(s));
                LfStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Number of objects, or 0 for a null handle.
///
/// # Safety
/// `scene` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lf_scene_object_count(scene: *const LfScene) -> usize {
    scene.as_ref().map_or(0, |s| s.0.objects.len())
}

/// Writes the clutteredness ξ and divergence D of the scene.
///
/// # Safety
/// `scene` must be a live handle; `xi` and `divergence` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn lf_scene_measure(
    scene: *const LfScene,
    xi: *mut f64,
    divergence: *mut f64,
) -> LfStatus {
    guard(|| {
        let (Some(s), false, false) = (scene.as_ref(), xi.is_null(), divergence.is_null()) else {
            set_error("null argument");
            return LfStatus::NullPointer;
        };
        match clutter::clutteredness(&s.0) {
            Ok(r) => {
                *xi = r.xi;
                *divergence = r.divergence;
                LfStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `scene` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lf_scene_free(scene: *mut LfScene) {
    if !scene.is_null() {
        drop(Box::from_raw(scene));
    }
}

/// Plans a trajectory to `target`. `config_json` may be null for defaults or
/// a JSON object overriding any part of the run configuration.
///
/// A planner stall returns `NotConverged` and still hands back the partial
/// trajectory in `*out`; so does running out of iterations.
///
/// # Safety
/// `scene` must be a live handle, `config_json` null or NUL-terminated, and
/// `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lf_plan(
    scene: *const LfScene,
    target: u32,
    planner: LfPlanner,
    config_json: *const c_char,
    out: *mut *mut LfTrajectory,
) -> LfStatus {
    guard(|| {
        let Some(s) = scene.as_ref() else {
            set_error("null scene");
            return LfStatus::NullPointer;
        };
        if out.is_null() {
            set_error("null output pointer");
            return LfStatus::NullPointer;
        }
        *out = ptr::null_mut();
        let mut cfg = RunConfig::default();
        if !config_json.is_null() {
            let text = match str_arg(config_json) {
                Ok(t) => t,
                Err(st) => return st,
            };
            cfg = match cfg.merge_json(text, Path::new("<ffi config>")) {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
        }
        let tag = match planner {
            LfPlanner::PotentialField => PlannerTag::PotentialField,
            LfPlanner::Baseline => PlannerTag::Baseline,
        };
        let baseline: BaselineConfig = cfg.baseline;
        match legibility::plan(&s.0, target, tag, &cfg.field, &baseline) {
            Ok(t) if t.converged => {
                put(out, LfTrajectory(t));
                LfStatus::Ok
            }
            Ok(t) => {
                set_error(format!(
                    "no convergence within {} iterations",
                    cfg.field.max_iters
                ));
                put(out, LfTrajectory(t));
                LfStatus::NotConverged
            }
            Err(Error::LocalMinimum {
                position,
                iteration,
                partial,
            }) => {
                set_error(format!(
                    "planner stalled in a local minimum at ({:.6}, {:.6}, {:.6}) after {iteration} iterations",
                    position.x, position.y, position.z
                ));
                put(out, LfTrajectory(*partial));
                LfStatus::NotConverged
            }
            Err(e) => fail(e),
        }
    })
}

/// Number of waypoints, or 0 for a null handle.
///
/// # Safety
/// `traj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lf_trajectory_len(traj: *const LfTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.0.len())
}

/// # Safety
/// `traj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lf_trajectory_converged(traj: *const LfTrajectory) -> bool {
    traj.as_ref().is_some_and(|t| t.0.converged)
}

/// Copies the waypoints as `x0, y0, z0, x1, ...` into `buf`, which must hold
/// `3 * lf_trajectory_len(traj)` doubles.
///
/// # Safety
/// `traj` must be a live handle and `buf` valid for `capacity` writes.
#[no_mangle]
pub unsafe extern "C" fn lf_trajectory_waypoints(
    traj: *const LfTrajectory,
    buf: *mut f64,
    capacity: usize,
) -> LfStatus {
    guard(|| {
        let (Some(t), false) = (traj.as_ref(), buf.is_null()) else {
            set_error("null argument");
            return LfStatus::NullPointer;
        };
        let needed = 3 * t.0.len();
        if capacity < needed {
            set_error(format!("buffer holds {capacity} values, {needed} needed"));
            return LfStatus::BufferTooSmall;
        }
        let dst = std::slice::from_raw_parts_mut(buf, needed);
        for (chunk, p) in dst.chunks_exact_mut(3).zip(&t.0.waypoints) {
            chunk.copy_from_slice(&[p.x, p.y, p.z]);
        }
        LfStatus::Ok
    })
}

/// # Safety
/// `traj` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lf_trajectory_free(traj: *mut LfTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Message for the last failed call on this thread, or null. The pointer is
/// valid until the next `lf_*` call on the same thread.
#[no_mangle]
pub extern "C" fn lf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |m| m.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
