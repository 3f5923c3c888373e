//! C ABI over the densewlan library.
//!
//! Configurations live behind an opaque `DwConfig` handle. Every fallible
//! call returns a `DwStatus`; on failure the message is kept per thread and
//! can be copied out with `dw_last_error_message`. Results are written
//! through out-pointers only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use densewlan::contention::fd_access_probability;
use densewlan::optimizer::{japo, NewtonStop};
use densewlan::throughput::{sdt_fd, ssf_mean_rate};
use densewlan::NetworkConfig;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DwStatus {
    Ok = 0,
    NullPointer = 1,
    /// Argument is not valid UTF-8, not finite, or out of range.
    InvalidArgument = 2,
    /// Unknown key, unparsable value, or a failed validation.
    InvalidConfig = 3,
    /// Quadrature or optimizer failure.
    NumericFailure = 4,
    /// A Rust panic was caught at the boundary.
    Internal = 5,
}

/// Opaque network configuration.
pub struct DwConfig {
    inner: NetworkConfig,
}

/// Link metrics at one operating point.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct DwLinkReport {
    /// Density of active links per unit area.
    pub active_density: f64,
    pub stp: f64,
    pub sdt: f64,
    /// Nonzero when the STP expression was clamped into [0, 1].
    pub flagged: u8,
}

/// Outcome of the joint association and PCS optimization.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct DwJapoReport {
    pub n_ap: usize,
    pub n_sta: usize,
    /// Mean relaxed weight of the chosen AP-STA pairs.
    pub xi_star: f64,
    /// Optimized PCS threshold, mW.
    pub gamma_star: f64,
    pub sdt_star: f64,
    /// Throughput at the configured threshold.
    pub sdt_fixed: f64,
    /// Upper bound on the PCS threshold, mW.
    pub pcs_bound: f64,
    pub newton_iterations: usize,
    /// 0 stationary, 1 bound, 2 stagnated, 3 line search failed, 4 iteration cap.
    pub newton_stop: u32,
    /// Nonzero when the association step converged.
    pub association_converged: u8,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn fail(status: DwStatus, msg: impl Into<String>) -> DwStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> DwStatus) -> DwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == DwStatus::Ok {
                set_error("");
            }
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            fail(DwStatus::Internal, msg)
        }
    }
}

/// Borrows a handle, or returns `NullPointer`.
unsafe fn handle<'a>(cfg: *const DwConfig) -> Result<&'a DwConfig, DwStatus> {
    cfg.as_ref()
        .ok_or_else(|| fail(DwStatus::NullPointer, "config handle is null"))
}

unsafe fn utf8<'a>(s: *const c_char, what: &str) -> Result<&'a str, DwStatus> {
    if s.is_null() {
        return Err(fail(DwStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(DwStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

fn validated(cfg: &DwConfig) -> Result<NetworkConfig, DwStatus> {
    cfg.inner
        .validate()
        .map_err(|e| fail(DwStatus::InvalidConfig, e.to_string()))
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

/// Returns a new handle holding the default configuration. Free it with
/// `dw_config_free`.
#[no_mangle]
pub extern "C" fn dw_config_new() -> *mut DwConfig {
    Box::into_raw(Box::new(DwConfig {
        inner: NetworkConfig::default(),
    }))
}

/// Returns an independent copy of `cfg`, or null if `cfg` is null.
///
/// # Safety
/// `cfg` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn dw_config_clone(cfg: *const DwConfig) -> *mut DwConfig {
    match cfg.as_ref() {
        Some(c) => Box::into_raw(Box::new(DwConfig { inner: c.inner.clone() })),
        None => ptr::null_mut(),
    }
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `cfg` must be null or a live handle that is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dw_config_free(cfg: *mut DwConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Sets one key using the config-file syntax, e.g. `("pcs", "-70")` in dBm.
/// The handle is unchanged on failure.
///
/// # Safety
/// `cfg` must be a live handle; `key` and `value` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn dw_config_set(cfg: *mut DwConfig, key: *const c_char, value: *const c_char) -> DwStatus {
    guard(|| {
        let Some(c) = cfg.as_mut() else {
            return fail(DwStatus::NullPointer, "config handle is null");
        };
        let key = tri!(utf8(key, "key"));
        let value = tri!(utf8(value, "value"));
        let mut next = c.inner.clone();
        match next.set(key.trim(), value.trim()) {
            Ok(()) => {
                c.inner = next;
                DwStatus::Ok
            }
            Err(e) => fail(DwStatus::InvalidConfig, e.to_string()),
        }
    })
}

/// Checks the whole configuration.
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn dw_config_validate(cfg: *const DwConfig) -> DwStatus {
    guard(|| {
        let c = tri!(handle(cfg));
        tri!(validated(c));
        DwStatus::Ok
    })
}

/// Copies the SHA-256 content hash (64 hex digits plus NUL) into `buf`.
/// Needs `len >= 65`.
///
/// # Safety
/// `cfg` must be a live handle; `buf` must hold `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn dw_config_hash(cfg: *const DwConfig, buf: *mut c_char, len: usize) -> DwStatus {
    guard(|| {
        let c = tri!(handle(cfg));
        if buf.is_null() {
            return fail(DwStatus::NullPointer, "buffer is null");
        }
        let h = c.inner.content_hash();
        if len <= h.len() {
            return fail(DwStatus::InvalidArgument, format!("buffer needs {} bytes", h.len() + 1));
        }
        copy_c_string(&h, buf, len);
        DwStatus::Ok
    })
}

unsafe fn copy_c_string(s: &str, buf: *mut c_char, len: usize) -> usize {
    let n = s.len().min(len - 1);
    ptr::copy_nonoverlapping(s.as_ptr().cast::<c_char>(), buf, n);
    *buf.add(n) = 0;
    n
}

/// Copies this thread's last error message into `buf`, truncated and
/// NUL-terminated. Returns the full message length in bytes, so a return
/// value `>= len` means truncation. `buf` may be null to query the length.
///
/// # Safety
/// `buf` must be null or hold `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn dw_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        if !buf.is_null() && len > 0 {
            copy_c_string(&e, buf, len);
        }
        e.len()
    })
}

/// Probability that a contending node wins the channel.
///
/// # Safety
/// `cfg` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dw_access_probability(cfg: *const DwConfig, out: *mut f64) -> DwStatus {
    guard(|| {
        let c = tri!(validated(tri!(handle(cfg))));
        if out.is_null() {
            return fail(DwStatus::NullPointer, "out is null");
        }
        match fd_access_probability(&c) {
            Ok(p) => {
                *out = p;
                DwStatus::Ok
            }
            Err(e) => fail(DwStatus::NumericFailure, e.to_string()),
        }
    })
}

fn write_link(out: *mut DwLinkReport, r: &densewlan::throughput::SdtReport) {
    // Caller checked `out` for null.
    unsafe {
        *out = DwLinkReport {
            active_density: r.active_density,
            stp: r.stp,
            sdt: r.sdt,
            flagged: u8::from(r.flagged),
        };
    }
}

/// Full-duplex throughput density at association weight `xi` in [0, 1].
///
/// # Safety
/// `cfg` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dw_sdt_fd(cfg: *const DwConfig, xi: f64, out: *mut DwLinkReport) -> DwStatus {
    guard(|| {
        let c = tri!(validated(tri!(handle(cfg))));
        if out.is_null() {
            return fail(DwStatus::NullPointer, "out is null");
        }
        if !(0.0..=1.0).contains(&xi) {
            return fail(DwStatus::InvalidArgument, format!("xi must lie in [0, 1] (got {xi})"));
        }
        match sdt_fd(&c, xi) {
            Ok(r) => {
                write_link(out, &r);
                DwStatus::Ok
            }
            Err(e) => fail(DwStatus::NumericFailure, e.to_string()),
        }
    })
}

/// Mean rate under strongest-signal-first association at the configured
/// threshold.
///
/// # Safety
/// `cfg` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dw_ssf_mean_rate(cfg: *const DwConfig, out: *mut DwLinkReport) -> DwStatus {
    guard(|| {
        let c = tri!(validated(tri!(handle(cfg))));
        if out.is_null() {
            return fail(DwStatus::NullPointer, "out is null");
        }
        match ssf_mean_rate(&c) {
            Ok(r) => {
                write_link(out, &r);
                DwStatus::Ok
            }
            Err(e) => fail(DwStatus::NumericFailure, e.to_string()),
        }
    })
}

/// Joint association and PCS optimization on the network drawn from the
/// configured seed.
///
/// # Safety
/// `cfg` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dw_japo(cfg: *const DwConfig, out: *mut DwJapoReport) -> DwStatus {
    guard(|| {
        let c = tri!(validated(tri!(handle(cfg))));
        if out.is_null() {
            return fail(DwStatus::NullPointer, "out is null");
        }
        match japo(&c) {
            Ok(j) => {
                *out = DwJapoReport {
                    n_ap: j.association.n_ap,
                    n_sta: j.association.n_sta,
                    xi_star: j.xi_star,
                    gamma_star: j.gamma_star,
                    sdt_star: j.sdt_star,
                    sdt_fixed: j.sdt_fixed,
                    pcs_bound: j.newton.bound,
                    newton_iterations: j.newton.iter,
                    newton_stop: match j.newton.stop {
                        NewtonStop::Stationary => 0,
                        NewtonStop::Bound => 1,
                        NewtonStop::Stagnated => 2,
                        NewtonStop::LineSearchFailed => 3,
                        NewtonStop::IterationCap => 4,
                    },
                    association_converged: u8::from(j.association.converged),
                };
                DwStatus::Ok
            }
            Err(e) => fail(DwStatus::NumericFailure, e.to_string()),
        }
    })
}
