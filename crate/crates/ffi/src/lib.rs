//! C ABI over `basenode` pools and epoch sampling.
//!
//! The header `include/basenode.h` is regenerated by the build script.
//!
//! Conventions:
//!
//! - Every fallible function returns a [`BnStatus`]. On failure a message is
//!   available from [`bn_last_error`] on the same thread until the next call.
//! - Handles ([`BnBase`], [`BnRegistry`]) are opaque and immutable, so they
//!   can be shared across threads; free each exactly once.
//! - Arrays are written into caller-owned buffers whose lengths are checked.
//! - Panics never cross the boundary; they surface as [`BnStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use basenode::gen::{Distribution, DistributionSpec};
use basenode::interop;
use basenode::model::Problem;
use basenode::subsample::{self, BaseNodeDistribution, EpochArrays, SeedRegistry};
use basenode::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BnStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidInput = 2,
    Io = 3,
    ChecksumMismatch = 4,
    VersionUnsupported = 5,
    SizeExceedsBase = 6,
    SeedCollision = 7,
    BufferTooSmall = 8,
    Panic = 9,
    Other = 10,
}

/// Immutable pool handle.
pub struct BnBase {
    base: BaseNodeDistribution,
    base_id: CString,
}

/// Immutable seed registry handle.
pub struct BnRegistry {
    registry: SeedRegistry,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
    Ok(v) => v,
    Err(_) => panic!("version string contains a NUL byte"),
};

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).unwrap_or_default());
}

fn status_of(e: &Error) -> BnStatus {
    match e {
        Error::Io { .. } => BnStatus::Io,
        Error::ChecksumMismatch(_) => BnStatus::ChecksumMismatch,
        Error::VersionUnsupported { .. } => BnStatus::VersionUnsupported,
        Error::SizeExceedsBase { .. } => BnStatus::SizeExceedsBase,
        Error::SeedCollision { .. } => BnStatus::SeedCollision,
        Error::BinaryNotFound(_) | Error::ParseError { .. } | Error::InfeasibleExternalSolution(_) => BnStatus::Other,
        _ => BnStatus::InvalidInput,
    }
}

fn fail(status: BnStatus, message: impl Into<String>) -> BnStatus {
    set_error(message);
    status
}

/// Runs `body`, converting errors and panics into status codes.
fn guard(body: impl FnOnce() -> Result<(), BnStatus>) -> BnStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::default());
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => BnStatus::Ok,
        Ok(Err(status)) => status,
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(BnStatus::Panic, format!("internal panic: {message}"))
        }
    }
}

fn lift<T>(r: basenode::Result<T>) -> Result<T, BnStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, BnStatus> {
    if p.is_null() {
        return Err(fail(BnStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(BnStatus::InvalidInput, format!("{what} is not UTF-8")))
}

fn publish<T>(out: *mut *mut T, value: T) -> Result<(), BnStatus> {
    if out.is_null() {
        return Err(fail(BnStatus::NullArgument, "output handle pointer is null"));
    }
    unsafe { *out = Box::into_raw(Box::new(value)) };
    Ok(())
}

fn wrap(base: BaseNodeDistribution) -> BnBase {
    let base_id = CString::new(base.base_id.clone()).unwrap_or_default();
    BnBase { base, base_id }
}

/// Library version, identical to the `basenode` crate version.
#[no_mangle]
pub extern "C" fn bn_version() -> *const c_char {
    VERSION.as_ptr()
}

/// Message for the last failed call on this thread, or an empty string.
/// The pointer stays valid until the next `bn_*` call on this thread.
#[no_mangle]
pub extern "C" fn bn_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Opens a pool file written by `basenode gen-base`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn bn_base_open(path: *const c_char, out: *mut *mut BnBase) -> BnStatus {
    guard(|| {
        let path = text(path, "path")?;
        let base = lift(interop::load_base(Path::new(path)))?;
        publish(out, wrap(base))
    })
}

/// Builds a pool from a distribution name (`uniform`, `explosion`,
/// `rotation`, `x-c`, `x-rc`), a problem (`tsp`, `cvrp`), a size and a seed.
/// A `capacity` of 0 keeps the default rule. The result has the same
/// `base_id` as `basenode gen-base` with equal arguments.
///
/// # Safety
/// `dist` and `problem` must be NUL-terminated strings and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn bn_base_build(
    dist: *const c_char,
    problem: *const c_char,
    n_base: usize,
    seed: u64,
    capacity: u32,
    out: *mut *mut BnBase,
) -> BnStatus {
    guard(|| {
        let dist: Distribution = lift(text(dist, "dist")?.parse())?;
        let problem: Problem = lift(text(problem, "problem")?.parse())?;
        let mut spec = DistributionSpec::standard(dist, problem);
        spec.params.capacity = (capacity > 0).then_some(capacity);
        let base = lift(subsample::build_base(&spec, n_base, seed))?;
        publish(out, wrap(base))
    })
}

/// Releases a pool handle. Null is ignored.
///
/// # Safety
/// `handle` must come from `bn_base_open`/`bn_base_build` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bn_base_free(handle: *mut BnBase) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Pool size, or 0 for a null handle.
///
/// # Safety
/// `handle` must be null or a live pool handle.
#[no_mangle]
pub unsafe extern "C" fn bn_base_n_base(handle: *const BnBase) -> usize {
    handle.as_ref().map_or(0, |h| h.base.n_base)
}

/// Vehicle capacity for CVRP pools, 0 for TSP pools or a null handle.
///
/// # Safety
/// `handle` must be null or a live pool handle.
#[no_mangle]
pub unsafe extern "C" fn bn_base_capacity(handle: *const BnBase) -> u32 {
    handle.as_ref().and_then(|h| h.base.capacity).unwrap_or(0)
}

/// Whether the pool carries a depot and demands.
///
/// # Safety
/// `handle` must be null or a live pool handle.
#[no_mangle]
pub unsafe extern "C" fn bn_base_is_cvrp(handle: *const BnBase) -> bool {
    handle.as_ref().is_some_and(|h| h.base.problem() == Problem::Cvrp)
}

/// Content identifier of the pool, owned by the handle. Null for a null handle.
///
/// # Safety
/// `handle` must be null or a live pool handle.
#[no_mangle]
pub unsafe extern "C" fn bn_base_id(handle: *const BnBase) -> *const c_char {
    handle.as_ref().map_or(ptr::null(), |h| h.base_id.as_ptr())
}

/// Rows per sampled instance: `n`, plus one depot row for CVRP pools.
///
/// # Safety
/// `handle` must be null or a live pool handle.
#[no_mangle]
pub unsafe extern "C" fn bn_epoch_rows(handle: *const BnBase, n: usize) -> usize {
    match handle.as_ref() {
        Some(h) if h.base.problem() == Problem::Cvrp => n + 1,
        Some(_) => n,
        None => 0,
    }
}

/// Opens a seed registry file. A missing file yields an empty registry.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn bn_registry_open(path: *const c_char, out: *mut *mut BnRegistry) -> BnStatus {
    guard(|| {
        let path = text(path, "path")?;
        let registry = lift(interop::load_registry(Path::new(path)))?;
        publish(out, BnRegistry { registry })
    })
}

/// Releases a registry handle. Null is ignored.
///
/// # Safety
/// `handle` must come from `bn_registry_open` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bn_registry_free(handle: *mut BnRegistry) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Samples `l_epoch` training instances of `n` customers for one epoch.
///
/// `coords` receives `l_epoch * rows * 2` doubles (x, y per row) and
/// `demands`, if not null, `l_epoch * rows` integers, where `rows` is
/// [`bn_epoch_rows`]. Row 0 of every CVRP instance is the depot. The bytes
/// equal those of `basenode subsample --role epoch` for the same arguments.
/// With a non-null `registry`, a registered test seed is refused.
///
/// # Safety
/// `base` must be a live pool handle, `registry` null or a live registry
/// handle, and each buffer valid for writes of its stated length.
#[no_mangle]
pub unsafe extern "C" fn bn_sample_epoch(
    base: *const BnBase,
    registry: *const BnRegistry,
    n: usize,
    train_seed: u64,
    epoch: u64,
    l_epoch: usize,
    coords: *mut f64,
    coords_len: usize,
    demands: *mut u32,
    demands_len: usize,
) -> BnStatus {
    guard(|| {
        let Some(h) = base.as_ref() else {
            return Err(fail(BnStatus::NullArgument, "base handle is null"));
        };
        if coords.is_null() {
            return Err(fail(BnStatus::NullArgument, "coords buffer is null"));
        }
        let rows = bn_epoch_rows(base, n);
        let need_coords = l_epoch.checked_mul(rows).and_then(|c| c.checked_mul(2));
        let need_coords = need_coords.ok_or_else(|| fail(BnStatus::InvalidInput, "batch size overflows"))?;
        if coords_len < need_coords {
            return Err(fail(BnStatus::BufferTooSmall, format!("coords needs {need_coords} values, got {coords_len}")));
        }
        if !demands.is_null() && demands_len < l_epoch * rows {
            return Err(fail(
                BnStatus::BufferTooSmall,
                format!("demands needs {} values, got {demands_len}", l_epoch * rows),
            ));
        }
        let empty = SeedRegistry::default();
        let registry = registry.as_ref().map_or(&empty, |r| &r.registry);
        let dataset = lift(subsample::make_epoch(&h.base, registry, n, train_seed, epoch, l_epoch))?;
        let arrays = EpochArrays::from_dataset(&dataset);
        std::slice::from_raw_parts_mut(coords, arrays.coords.len()).copy_from_slice(&arrays.coords);
        if !demands.is_null() {
            std::slice::from_raw_parts_mut(demands, arrays.demands.len()).copy_from_slice(&arrays.demands);
        }
        Ok(())
    })
}
