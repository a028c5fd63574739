//! C ABI over `taupsd`.
//!
//! Objects cross the boundary as opaque handles created by `*_new`/`*_from_*`
//! functions and released by the matching `*_free`. Every fallible call
//! returns a [`TaupsdStatus`]; on failure the message is kept per thread and
//! read with [`taupsd_last_error_message`]. Panics are caught at the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use taupsd::euclid::{Endo, Grid};
use taupsd::harness::corpus::parse;
use taupsd::harness::{run, ExperimentConfig, RunReport};
use taupsd::kernelfactory::KernelMatrix;
use taupsd::quantize::{quantize, schatten, PhaseSymbol};
use taupsd::{Error, C64};

/// Result codes of the C API.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaupsdStatus {
    Ok = 0,
    NullPointer = 1,
    /// Out-of-domain argument, bad shape or dimension mismatch.
    InvalidArgument = 2,
    /// Unknown corpus reference.
    Lookup = 3,
    /// Invalid experiment config.
    Config = 4,
    /// A resource guard refused the request.
    Resource = 5,
    /// Numerical failure or a violated hypothesis.
    Numerical = 6,
    Io = 7,
    /// The output buffer is too small; the needed size was written.
    BufferTooSmall = 8,
    Panic = 9,
}

impl From<&Error> for TaupsdStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Domain(_)
            | Error::Shape(_)
            | Error::DimensionMismatch { .. }
            | Error::GridMismatch(_)
            | Error::Capability(_)
            | Error::Side(_)
            | Error::Precondition(_) => TaupsdStatus::InvalidArgument,
            Error::Lookup(_) => TaupsdStatus::Lookup,
            Error::Config { .. } => TaupsdStatus::Config,
            Error::Resource(_) => TaupsdStatus::Resource,
            Error::Io(_) | Error::Json(_) | Error::Csv(_) | Error::Format(_) => TaupsdStatus::Io,
            _ => TaupsdStatus::Numerical,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn fail(status: TaupsdStatus, msg: impl Into<String>) -> TaupsdStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, recording errors and panics.
fn guard(f: impl FnOnce() -> Result<(), TaupsdStatus>) -> TaupsdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            TaupsdStatus::Ok
        }
        Ok(Err(status)) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(TaupsdStatus::Panic, format!("panic: {msg}"))
        }
    }
}

fn check(e: Error) -> TaupsdStatus {
    let status = TaupsdStatus::from(&e);
    fail(status, e.to_string())
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, TaupsdStatus> {
    p.as_ref()
        .ok_or_else(|| fail(TaupsdStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, TaupsdStatus> {
    p.as_mut()
        .ok_or_else(|| fail(TaupsdStatus::NullPointer, format!("{what} is null")))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, TaupsdStatus> {
    if p.is_null() {
        return Err(fail(TaupsdStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(TaupsdStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], TaupsdStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(TaupsdStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], TaupsdStatus> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(fail(TaupsdStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

/// Copies `text` plus a NUL into `buf`. `needed` receives the full size.
/// Leaves the last error untouched so it can copy the error itself.
unsafe fn write_text(text: &str, buf: *mut c_char, len: usize, needed: *mut usize) -> Result<(), TaupsdStatus> {
    let size = text.len() + 1;
    if let Some(n) = needed.as_mut() {
        *n = size;
    }
    if buf.is_null() || len < size {
        return Err(TaupsdStatus::BufferTooSmall);
    }
    ptr::copy_nonoverlapping(text.as_ptr(), buf.cast::<u8>(), text.len());
    *buf.add(text.len()) = 0;
    Ok(())
}

/// Opaque grid handle.
pub struct TaupsdGrid(Grid);

/// Opaque phase-space symbol handle.
pub struct TaupsdPhaseSymbol(PhaseSymbol);

/// Opaque kernel matrix handle.
pub struct TaupsdKernel(KernelMatrix);

/// Opaque experiment report handle.
pub struct TaupsdReport(RunReport);

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

/// NUL-terminated library version. The string is static.
#[no_mangle]
pub extern "C" fn taupsd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf`.
///
/// `needed` (may be null) receives the size including the NUL. Returns
/// `BufferTooSmall` when `buf` cannot hold it.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes; `needed` null or writable.
#[no_mangle]
pub unsafe extern "C" fn taupsd_last_error_message(buf: *mut c_char, len: usize, needed: *mut usize) -> TaupsdStatus {
    let text = LAST_ERROR.with(|e| e.borrow().clone());
    match write_text(&text, buf, len, needed) {
        Ok(()) => TaupsdStatus::Ok,
        Err(s) => s,
    }
}

/// Creates the grid `x_k = -L + k h` with `N` points per axis in `dim` dimensions.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn taupsd_grid_new(
    dim: usize,
    points: usize,
    half_width: f64,
    out: *mut *mut TaupsdGrid,
) -> TaupsdStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let g = Grid::new(dim, points, half_width).map_err(check)?;
        *out = boxed(TaupsdGrid(g));
        Ok(())
    })
}

/// Number of grid points, `N^dim`.
///
/// # Safety
/// `grid` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn taupsd_grid_len(grid: *const TaupsdGrid, out: *mut usize) -> TaupsdStatus {
    guard(|| {
        *out_ptr(out, "out")? = deref(grid, "grid")?.0.len();
        Ok(())
    })
}

/// # Safety
/// `grid` must be null or a handle from [`taupsd_grid_new`], freed once.
#[no_mangle]
pub unsafe extern "C" fn taupsd_grid_free(grid: *mut TaupsdGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Samples the corpus entry `reference` (e.g. `"gauss(sigma=1)"`) on the
/// phase grid over `grid`.
///
/// # Safety
/// `reference` must be a NUL-terminated string, `grid` a live handle, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn taupsd_phase_symbol_from_corpus(
    reference: *const c_char,
    grid: *const TaupsdGrid,
    out: *mut *mut TaupsdPhaseSymbol,
) -> TaupsdStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let reference = c_str(reference, "reference")?;
        let g = deref(grid, "grid")?.0;
        let entry = parse(reference).map_err(check)?;
        let a = entry.phase(g).map_err(check)?;
        *out = boxed(TaupsdPhaseSymbol(a));
        Ok(())
    })
}

/// Builds a phase symbol from samples `re[k] + i im[k]`, `k = ix * len + jp`
/// with `len = N^dim`; `im` may be null for a real symbol.
///
/// # Safety
/// `re` (and `im` unless null) must hold `count` doubles.
#[no_mangle]
pub unsafe extern "C" fn taupsd_phase_symbol_from_values(
    grid: *const TaupsdGrid,
    re: *const f64,
    im: *const f64,
    count: usize,
    out: *mut *mut TaupsdPhaseSymbol,
) -> TaupsdStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let g = deref(grid, "grid")?.0;
        let re = slice(re, count, "re")?;
        let values: Vec<C64> = if im.is_null() {
            re.iter().map(|&r| C64::new(r, 0.0)).collect()
        } else {
            let im = slice(im, count, "im")?;
            re.iter().zip(im).map(|(&r, &i)| C64::new(r, i)).collect()
        };
        let a = PhaseSymbol::new(g, values, "ffi").map_err(check)?;
        *out = boxed(TaupsdPhaseSymbol(a));
        Ok(())
    })
}

/// # Safety
/// `symbol` must be null or a live handle, freed once.
#[no_mangle]
pub unsafe extern "C" fn taupsd_phase_symbol_free(symbol: *mut TaupsdPhaseSymbol) {
    if !symbol.is_null() {
        drop(Box::from_raw(symbol));
    }
}

/// Quantizes `symbol` at the `dim x dim` matrix `tau` (row-major).
///
/// # Safety
/// `tau` must hold `dim * dim` doubles; `symbol` live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn taupsd_quantize(
    symbol: *const TaupsdPhaseSymbol,
    tau: *const f64,
    dim: usize,
    out: *mut *mut TaupsdKernel,
) -> TaupsdStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let a = &deref(symbol, "symbol")?.0;
        let t = slice(tau, dim * dim, "tau")?;
        let rows: Vec<Vec<f64>> = t.chunks(dim.max(1)).map(<[f64]>::to_vec).collect();
        let tau = Endo::from_rows(&rows).map_err(check)?;
        let k = quantize(a, &tau).map_err(check)?;
        *out = boxed(TaupsdKernel(k));
        Ok(())
    })
}

/// Quantizes `symbol` at the scalar `tau * identity`.
///
/// # Safety
/// `symbol` live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn taupsd_quantize_scalar(
    symbol: *const TaupsdPhaseSymbol,
    tau: f64,
    out: *mut *mut TaupsdKernel,
) -> TaupsdStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let a = &deref(symbol, "symbol")?.0;
        let tau = Endo::scalar(a.grid.dim, tau).map_err(check)?;
        let k = quantize(a, &tau).map_err(check)?;
        *out = boxed(TaupsdKernel(k));
        Ok(())
    })
}

/// # Safety
/// `kernel` must be null or a live handle, freed once.
#[no_mangle]
pub unsafe extern "C" fn taupsd_kernel_free(kernel: *mut TaupsdKernel) {
    if !kernel.is_null() {
        drop(Box::from_raw(kernel));
    }
}

/// Side length of the square kernel matrix.
///
/// # Safety
/// `kernel` live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn taupsd_kernel_size(kernel: *const TaupsdKernel, out: *mut usize) -> TaupsdStatus {
    guard(|| {
        *out_ptr(out, "out")? = deref(kernel, "kernel")?.0.values.nrows();
        Ok(())
    })
}

/// Copies the kernel values row-major (`x` rows, `y` columns) into `re`/`im`,
/// each of `count = size * size` doubles.
///
/// # Safety
/// `re` and `im` must be valid for `count` doubles.
#[no_mangle]
pub unsafe extern "C" fn taupsd_kernel_values(
    kernel: *const TaupsdKernel,
    re: *mut f64,
    im: *mut f64,
    count: usize,
) -> TaupsdStatus {
    guard(|| {
        let k = &deref(kernel, "kernel")?.0.values;
        let n = k.nrows();
        if count != n * n {
            return Err(fail(
                TaupsdStatus::InvalidArgument,
                format!("kernel has {} values, buffers hold {count}", n * n),
            ));
        }
        let re = slice_mut(re, count, "re")?;
        let im = slice_mut(im, count, "im")?;
        for i in 0..n {
            for j in 0..n {
                let v = k[(i, j)];
                re[i * n + j] = v.re;
                im[i * n + j] = v.im;
            }
        }
        Ok(())
    })
}

/// Hilbert-Schmidt norm of the operator the kernel defines.
///
/// # Safety
/// `kernel` live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn taupsd_kernel_hs_norm(kernel: *const TaupsdKernel, out: *mut f64) -> TaupsdStatus {
    guard(|| {
        *out_ptr(out, "out")? = deref(kernel, "kernel")?.0.hs_norm();
        Ok(())
    })
}

/// Schatten norms for the `count` orders in `p` (use `INFINITY` for the
/// operator norm), written to `out`.
///
/// # Safety
/// `p` and `out` must be valid for `count` doubles.
#[no_mangle]
pub unsafe extern "C" fn taupsd_kernel_schatten(
    kernel: *const TaupsdKernel,
    p: *const f64,
    count: usize,
    out: *mut f64,
) -> TaupsdStatus {
    guard(|| {
        let k = &deref(kernel, "kernel")?.0;
        let p = slice(p, count, "p")?;
        let out = slice_mut(out, count, "out")?;
        if let Some(bad) = p.iter().find(|&&v| !(v >= 1.0)) {
            return Err(fail(
                TaupsdStatus::InvalidArgument,
                format!("Schatten order {bad} is below 1"),
            ));
        }
        let report = schatten(k, p).map_err(check)?;
        for (o, &pi) in out.iter_mut().zip(p) {
            *o = report.norm(pi);
        }
        Ok(())
    })
}

/// Runs the experiment described by the JSON config `json`.
///
/// The report is returned even when checks fail; see
/// [`taupsd_report_exit_code`]. Config and resource problems return their
/// status and no report.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn taupsd_run_config_json(json: *const c_char, out: *mut *mut TaupsdReport) -> TaupsdStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let text = c_str(json, "json")?;
        let cfg = ExperimentConfig::from_json_str(text).map_err(check)?;
        let report = run(&cfg).map_err(check)?;
        *out = boxed(TaupsdReport(report));
        Ok(())
    })
}

/// 0 when no asserted check failed, 1 otherwise.
///
/// # Safety
/// `report` live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn taupsd_report_exit_code(report: *const TaupsdReport, out: *mut i32) -> TaupsdStatus {
    guard(|| {
        *out_ptr(out, "out")? = deref(report, "report")?.0.exit_code();
        Ok(())
    })
}

/// Number of check rows.
///
/// # Safety
/// `report` live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn taupsd_report_row_count(report: *const TaupsdReport, out: *mut usize) -> TaupsdStatus {
    guard(|| {
        *out_ptr(out, "out")? = deref(report, "report")?.0.rows.len();
        Ok(())
    })
}

/// Writes the report as JSON into `buf`; `needed` (may be null) receives the
/// size including the NUL.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn taupsd_report_json(
    report: *const TaupsdReport,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> TaupsdStatus {
    guard(|| {
        let r = &deref(report, "report")?.0;
        let text = serde_json::to_string(r).map_err(|e| check(e.into()))?;
        write_text(&text, buf, len, needed).map_err(|s| fail(s, format!("{} bytes needed", text.len() + 1)))
    })
}

/// Writes `rows.csv` contents into `buf`, as [`taupsd_report_json`] does.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn taupsd_report_csv(
    report: *const TaupsdReport,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> TaupsdStatus {
    guard(|| {
        let r = &deref(report, "report")?.0;
        let bytes = r.csv_bytes().map_err(check)?;
        let text = String::from_utf8(bytes).map_err(|e| fail(TaupsdStatus::Io, e.to_string()))?;
        write_text(&text, buf, len, needed).map_err(|s| fail(s, format!("{} bytes needed", text.len() + 1)))
    })
}

/// # Safety
/// `report` must be null or a live handle, freed once.
#[no_mangle]
pub unsafe extern "C" fn taupsd_report_free(report: *mut TaupsdReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}
