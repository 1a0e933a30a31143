//! C interface to the dlsenum engine.
//!
//! Every function returns a [`DlsStatus`]. On failure the message is kept per
//! thread and can be read with [`dls_last_error`]. Counts are 128-bit and are
//! passed back as two 64-bit halves.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use dlsenum::plan::{build_plan, FixedPrefix, LayoutChoice, LookaheadChoice};
use dlsenum::square::{validate, ConstraintSet, Order, SquareGrid};
use dlsenum::symenum::{SymEnumerator, SymMode};
use dlsenum::workunit::{self, BatchEngine, RunOptions};
use dlsenum::{engine, Error, FillPlan};

/// Result code of every call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DlsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Unsupported = 3,
    Io = 4,
    Format = 5,
    Mismatch = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// Opaque fill plan.
pub struct DlsPlan {
    inner: FillPlan,
}

/// A 128-bit count split into halves.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DlsCount {
    pub lo: u64,
    pub hi: u64,
}

impl From<u128> for DlsCount {
    fn from(v: u128) -> Self {
        DlsCount {
            lo: v as u64,
            hi: (v >> 64) as u64,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> DlsStatus {
    match e {
        Error::Io(_) => DlsStatus::Io,
        Error::Format { .. } | Error::Parse(_) => DlsStatus::Format,
        Error::Fingerprint(_) => DlsStatus::Mismatch,
        Error::Unsupported(_) => DlsStatus::Unsupported,
        _ => DlsStatus::InvalidArgument,
    }
}

fn fail(status: DlsStatus, msg: impl Into<String>) -> DlsStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, recording its error and turning panics into a status.
fn guard(f: impl FnOnce() -> Result<(), DlsStatus>) -> DlsStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DlsStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(DlsStatus::Panic, "internal panic"),
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, DlsStatus>;
}

impl<T> OrStatus<T> for dlsenum::Result<T> {
    fn or_status(self) -> Result<T, DlsStatus> {
        self.map_err(|e| fail(status_of(&e), e.to_string()))
    }
}

unsafe fn opt_str<'a>(p: *const c_char) -> Result<Option<&'a str>, DlsStatus> {
    if p.is_null() {
        return Ok(None);
    }
    CStr::from_ptr(p)
        .to_str()
        .map(Some)
        .map_err(|_| fail(DlsStatus::InvalidArgument, "string is not UTF-8"))
}

unsafe fn req_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, DlsStatus> {
    opt_str(p)?.ok_or_else(|| fail(DlsStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, DlsStatus> {
    p.as_mut()
        .ok_or_else(|| fail(DlsStatus::NullPointer, format!("{what} is null")))
}

unsafe fn plan_ref<'a>(p: *const DlsPlan) -> Result<&'a FillPlan, DlsStatus> {
    p.as_ref()
        .map(|p| &p.inner)
        .ok_or_else(|| fail(DlsStatus::NullPointer, "plan is null"))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], DlsStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(DlsStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> Result<T, DlsStatus> {
    s.parse::<T>().or_status()
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next call on the same thread.
#[no_mangle]
pub extern "C" fn dls_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builds a plan. `constraints` is "ls", "dls" or "vsdls". `fixed`
/// ("first-row" or "first-row-and-column"), `layout` ("heuristic",
/// "hourglass", "row-major") and `lookahead` ("default", "off", "A..B") may
/// be NULL. Plain Latin squares then fix the first row and column, the
/// others the first row only.
///
/// # Safety
/// String arguments must be NULL or NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dls_plan_new(
    order: u32,
    constraints: *const c_char,
    fixed: *const c_char,
    layout: *const c_char,
    lookahead: *const c_char,
    out: *mut *mut DlsPlan,
) -> DlsStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        let cs: ConstraintSet = parse(req_str(constraints, "constraints")?)?;
        let fixed: Option<FixedPrefix> = opt_str(fixed)?.map(parse).transpose()?;
        let layout: LayoutChoice = opt_str(layout)?.map(parse).transpose()?.unwrap_or(LayoutChoice::Heuristic);
        let lookahead: LookaheadChoice =
            opt_str(lookahead)?.map(parse).transpose()?.unwrap_or(LookaheadChoice::Default);
        let order = Order::new(order as usize).or_status()?;
        let inner = build_plan(order, cs, fixed, layout, lookahead).or_status()?;
        *out = Box::into_raw(Box::new(DlsPlan { inner }));
        Ok(())
    })
}

/// Releases a plan. NULL is ignored.
///
/// # Safety
/// `plan` must come from [`dls_plan_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dls_plan_free(plan: *mut DlsPlan) {
    if !plan.is_null() {
        drop(Box::from_raw(plan));
    }
}

/// Number of plan steps.
///
/// # Safety
/// `plan` must be a live plan and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dls_plan_len(plan: *const DlsPlan, out: *mut usize) -> DlsStatus {
    guard(|| {
        *out_ref(out, "out")? = plan_ref(plan)?.len();
        Ok(())
    })
}

/// Writes the plan fingerprint (16 hex digits and a NUL) into `buf`.
///
/// # Safety
/// `buf` must point to `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn dls_plan_fingerprint(plan: *const DlsPlan, buf: *mut c_char, cap: usize) -> DlsStatus {
    guard(|| {
        let fp = plan_ref(plan)?.fingerprint();
        if buf.is_null() {
            return Err(fail(DlsStatus::NullPointer, "buf is null"));
        }
        if cap < fp.len() + 1 {
            return Err(fail(DlsStatus::BufferTooSmall, format!("need {} bytes", fp.len() + 1)));
        }
        ptr::copy_nonoverlapping(fp.as_ptr().cast::<c_char>(), buf, fp.len());
        *buf.add(fp.len()) = 0;
        Ok(())
    })
}

/// Counts every square the plan covers (first row fixed, or first row and
/// column for plain Latin squares). `threads` 0 uses every core.
///
/// # Safety
/// `plan` must be a live plan and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dls_count(plan: *const DlsPlan, threads: u32, out: *mut DlsCount) -> DlsStatus {
    guard(|| {
        let plan = plan_ref(plan)?;
        let out = out_ref(out, "out")?;
        *out = engine::enumerate_threads(plan, threads as usize).count.into();
        Ok(())
    })
}

/// Completions of the first `len` plan steps assigned to `prefix`.
///
/// # Safety
/// `prefix` must point to `len` bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dls_count_prefix(
    plan: *const DlsPlan,
    prefix: *const u8,
    len: usize,
    out: *mut DlsCount,
) -> DlsStatus {
    guard(|| {
        let plan = plan_ref(plan)?;
        let prefix = slice(prefix, len, "prefix")?;
        let out = out_ref(out, "out")?;
        let (c, _) = engine::count_completions(plan, prefix).or_status()?;
        *out = c.into();
        Ok(())
    })
}

/// Multiplier from the plan's normalized count to all squares.
///
/// # Safety
/// `plan` must be a live plan and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dls_total_multiplier(plan: *const DlsPlan, out: *mut DlsCount) -> DlsStatus {
    guard(|| {
        *out_ref(out, "out")? = engine::total_multiplier(plan_ref(plan)?).into();
        Ok(())
    })
}

/// Symmetry-broken count with the first row fixed. Optional outputs may be
/// NULL.
///
/// # Safety
/// `constraints` must be NUL-terminated; non-NULL outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn dls_count_symmetric(
    order: u32,
    constraints: *const c_char,
    threads: u32,
    out: *mut DlsCount,
    hourglass_seen: *mut u64,
    canonical: *mut u64,
) -> DlsStatus {
    guard(|| {
        let cs: ConstraintSet = parse(req_str(constraints, "constraints")?)?;
        let out = out_ref(out, "out")?;
        let order = Order::new(order as usize).or_status()?;
        let s = SymEnumerator::new(order, cs).or_status()?;
        let r = s.run_threads(SymMode::Canonical, threads as usize);
        *out = r.total.into();
        if let Some(h) = hourglass_seen.as_mut() {
            *h = r.hourglass_seen;
        }
        if let Some(c) = canonical.as_mut() {
            *c = r.canonical;
        }
        Ok(())
    })
}

/// Checks an `order`×`order` grid given row by row; 255 marks an empty cell
/// when `allow_partial` is set. Writes the number of violations.
///
/// # Safety
/// `cells` must point to `order * order` bytes; `violations` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dls_validate(
    order: u32,
    cells: *const u8,
    constraints: *const c_char,
    allow_partial: bool,
    violations: *mut usize,
) -> DlsStatus {
    guard(|| {
        let cs: ConstraintSet = parse(req_str(constraints, "constraints")?)?;
        let n = order as usize;
        let cells = slice(cells, n * n, "cells")?;
        let out = out_ref(violations, "violations")?;
        let order = Order::new(n).or_status()?;
        let grid = SquareGrid::from_cells(order, cells.to_vec()).or_status()?;
        *out = validate(&grid, cs, allow_partial).len();
        Ok(())
    })
}

/// Writes the workunit file for prefixes of `depth` steps (0 for the
/// default depth) and the number of workunits.
///
/// # Safety
/// `path` must be NUL-terminated; `count` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn dls_workunits_generate(
    plan: *const DlsPlan,
    depth: usize,
    path: *const c_char,
    count: *mut u64,
) -> DlsStatus {
    guard(|| {
        let plan = plan_ref(plan)?;
        let path = PathBuf::from(req_str(path, "path")?);
        let k = if depth == 0 {
            workunit::default_depth(plan)
        } else {
            depth
        };
        let c = workunit::generate_to_file(plan, k, &path).or_status()?;
        if let Some(out) = count.as_mut() {
            *out = c;
        }
        Ok(())
    })
}

/// Counts every workunit of `units` not yet in `results`, appending to it.
/// Writes the running sum over all completed workunits.
///
/// # Safety
/// Strings must be NUL-terminated; `sum` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn dls_workunits_run(
    units: *const c_char,
    results: *const c_char,
    run_tag: *const c_char,
    threads: u32,
    symmetric: bool,
    sum: *mut DlsCount,
) -> DlsStatus {
    guard(|| {
        let opts = RunOptions {
            input: PathBuf::from(req_str(units, "units")?),
            output: PathBuf::from(req_str(results, "results")?),
            threads: threads as usize,
            range: None,
            run_tag: opt_str(run_tag)?.unwrap_or("local").to_string(),
            engine: if symmetric {
                BatchEngine::Symmetric
            } else {
                BatchEngine::Plain
            },
            limit: None,
        };
        let m = workunit::run_batch(&opts).or_status()?;
        if let Some(out) = sum.as_mut() {
            *out = m.running_sum.into();
        }
        if !m.failed.is_empty() {
            return Err(fail(
                DlsStatus::InvalidArgument,
                format!("{} workunits failed", m.failed.len()),
            ));
        }
        Ok(())
    })
}

/// Merges results files under a quorum. Returns `Mismatch` when the total
/// is withheld; `validated` is written either way.
///
/// # Safety
/// `paths` must point to `count` NUL-terminated strings; outputs may be NULL.
#[no_mangle]
pub unsafe extern "C" fn dls_workunits_merge(
    paths: *const *const c_char,
    count: usize,
    quorum: u32,
    total: *mut DlsCount,
    validated: *mut u64,
) -> DlsStatus {
    guard(|| {
        let files = slice(paths, count, "paths")?
            .iter()
            .map(|&p| req_str(p, "path").map(PathBuf::from))
            .collect::<Result<Vec<_>, _>>()?;
        let r = workunit::merge(&files, quorum as usize, None).or_status()?;
        if let Some(v) = validated.as_mut() {
            *v = r.validated;
        }
        match r.total {
            Some(t) => {
                if let Some(out) = total.as_mut() {
                    *out = t.into();
                }
                Ok(())
            }
            None => Err(fail(
                DlsStatus::Mismatch,
                format!(
                    "total withheld: {} missing, {} under quorum, {} disagreeing",
                    r.missing.len(),
                    r.under_quorum.len(),
                    r.disagreements.len()
                ),
            )),
        }
    })
}
