//! C ABI over the besovlab toolkit.
//!
//! Objects cross the boundary as opaque handles created by `*_new`-style
//! constructors and released with the matching `*_free`. Every fallible call
//! returns a [`BlStatus`]; on failure a message is kept per thread and can be
//! read back with [`bl_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use besovlab::datagen::{rough_datum, RoughDatum};
use besovlab::error::Error;
use besovlab::harness::{self, Descriptor, Overrides, RunError};
use besovlab::littlewood_paley::LittlewoodPaleyBank;
use besovlab::norms::{besov_norm, sobolev_norm, BesovParams};
use besovlab::nse_solver::{abc_flow, solve_nse, SolverConfig, Trajectory};
use besovlab::spectral_core::{Grid, SpectralField};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    Io = 4,
    /// The experiment ran but at least one acceptance check failed.
    AcceptanceFailed = 5,
    Panic = 6,
}

/// Spectral field on a periodic grid.
pub struct BlField(SpectralField);

/// Littlewood-Paley filter bank for one grid size.
pub struct BlBank(LittlewoodPaleyBank);

/// Recorded solver run.
pub struct BlTrajectory(Trajectory);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &Error) -> BlStatus {
    match e {
        Error::NonFinite(_) | Error::Unstable(_) => BlStatus::Numerical,
        Error::Io(_) => BlStatus::Io,
        _ => BlStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (BlStatus, String)>) -> BlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            BlStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside besovlab");
            BlStatus::Panic
        }
    }
}

fn lift<T>(r: besovlab::error::Result<T>) -> Result<T, (BlStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (BlStatus, String) {
    (BlStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (BlStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(p: *mut T, v: T, what: &str) -> Result<(), (BlStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(v);
    Ok(())
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (BlStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (BlStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

/// Copies the calling thread's last error message into `buf` (always NUL
/// terminated, truncated if needed) and returns the full message length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn bl_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// ABC Beltrami flow with unit coefficients scaled by `amplitude`.
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn bl_field_abc(n: usize, amplitude: f64, out: *mut *mut BlField) -> BlStatus {
    guard(|| {
        let grid = lift(Grid::new(n))?;
        let f = Box::new(BlField(abc_flow(&grid, amplitude)));
        write_out(out, Box::into_raw(f), "out")
    })
}

/// Seeded divergence-free datum with Besov-type spectrum of regularity `s`
/// and summability `q`.
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn bl_field_rough(
    n: usize,
    s: f64,
    q: f64,
    amplitude: f64,
    seed: u64,
    out: *mut *mut BlField,
) -> BlStatus {
    guard(|| {
        let grid = lift(Grid::new(n))?;
        let spec = RoughDatum { s, q, amplitude, seed };
        let f = Box::new(BlField(lift(rough_datum(&grid, &spec))?));
        write_out(out, Box::into_raw(f), "out")
    })
}

/// # Safety
/// `field` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bl_field_free(field: *mut BlField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bl_field_grid_size(field: *const BlField, out: *mut usize) -> BlStatus {
    guard(|| write_out(out, deref(field, "field")?.0.grid().n(), "out"))
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bl_field_l2_norm(field: *const BlField, out: *mut f64) -> BlStatus {
    guard(|| write_out(out, deref(field, "field")?.0.l2_norm(), "out"))
}

/// Sobolev norm of order `alpha`, homogeneous when `homogeneous != 0`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bl_field_sobolev_norm(
    field: *const BlField,
    alpha: f64,
    homogeneous: i32,
    out: *mut f64,
) -> BlStatus {
    guard(|| {
        let v = lift(sobolev_norm(&deref(field, "field")?.0, alpha, homogeneous != 0))?;
        write_out(out, v, "out")
    })
}

/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn bl_bank_new(n: usize, out: *mut *mut BlBank) -> BlStatus {
    guard(|| {
        let grid = lift(Grid::new(n))?;
        let bank = Box::new(BlBank(lift(LittlewoodPaleyBank::new(&grid))?));
        write_out(out, Box::into_raw(bank), "out")
    })
}

/// # Safety
/// `bank` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bl_bank_free(bank: *mut BlBank) {
    if !bank.is_null() {
        drop(Box::from_raw(bank));
    }
}

/// Smallest and largest dyadic block index of the bank.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bl_bank_range(bank: *const BlBank, j_min: *mut i32, j_max: *mut i32) -> BlStatus {
    guard(|| {
        let b = &deref(bank, "bank")?.0;
        write_out(j_min, b.j_min(), "j_min")?;
        write_out(j_max, b.j_max(), "j_max")
    })
}

/// Largest deviation of the low-pass plus all blocks from one on the lattice.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bl_bank_partition_residual(bank: *const BlBank, out: *mut f64) -> BlStatus {
    guard(|| write_out(out, deref(bank, "bank")?.0.partition_residual(), "out"))
}

/// Besov norm with regularity `s` and exponents `p`, `q` (pass `INFINITY`
/// for the sup).
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bl_besov_norm(
    bank: *const BlBank,
    field: *const BlField,
    s: f64,
    p: f64,
    q: f64,
    out: *mut f64,
) -> BlStatus {
    guard(|| {
        let params = lift(BesovParams::new(s, p, q))?;
        let r = lift(besov_norm(&deref(field, "field")?.0, &deref(bank, "bank")?.0, params))?;
        write_out(out, r.value, "out")
    })
}

/// Integrates the Navier-Stokes equations from `field` up to `horizon`,
/// keeping every `stride`-th step.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bl_solve(
    field: *const BlField,
    dt: f64,
    horizon: f64,
    stride: usize,
    out: *mut *mut BlTrajectory,
) -> BlStatus {
    guard(|| {
        let u0 = &deref(field, "field")?.0;
        let cfg = SolverConfig::new(u0.grid().n(), dt, horizon).with_stride(stride);
        let traj = Box::new(BlTrajectory(lift(solve_nse(u0, &cfg))?));
        write_out(out, Box::into_raw(traj), "out")
    })
}

/// # Safety
/// `traj` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bl_trajectory_free(traj: *mut BlTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Number of recorded snapshots.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bl_trajectory_len(traj: *const BlTrajectory, out: *mut usize) -> BlStatus {
    guard(|| write_out(out, deref(traj, "trajectory")?.0.times.len(), "out"))
}

/// Time of snapshot `index`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bl_trajectory_time(traj: *const BlTrajectory, index: usize, out: *mut f64) -> BlStatus {
    guard(|| {
        let t = deref(traj, "trajectory")?.0.times.get(index).copied();
        let t = t.ok_or_else(|| (BlStatus::InvalidArgument, format!("snapshot {index} out of range")))?;
        write_out(out, t, "out")
    })
}

/// Copy of snapshot `index` as a new field handle.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bl_trajectory_field(
    traj: *const BlTrajectory,
    index: usize,
    out: *mut *mut BlField,
) -> BlStatus {
    guard(|| {
        let f = deref(traj, "trajectory")?.0.fields.get(index).cloned();
        let f = f.ok_or_else(|| (BlStatus::InvalidArgument, format!("snapshot {index} out of range")))?;
        write_out(out, Box::into_raw(Box::new(BlField(f))), "out")
    })
}

/// Largest relative energy-balance residual over the snapshots.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bl_trajectory_energy_balance(traj: *const BlTrajectory, out: *mut f64) -> BlStatus {
    guard(|| {
        let worst = deref(traj, "trajectory")?
            .0
            .ledger
            .balance_residuals()
            .into_iter()
            .fold(0.0, f64::max);
        write_out(out, worst, "out")
    })
}

/// Runs a registered experiment and writes its report under `out_dir`.
/// `config_json` may be null for the defaults. Returns
/// `AcceptanceFailed` when the run completed but a check failed.
///
/// # Safety
/// String arguments must be null or NUL-terminated; `passed` may be null.
#[no_mangle]
pub unsafe extern "C" fn bl_run_experiment(
    name: *const c_char,
    config_json: *const c_char,
    out_dir: *const c_char,
    threads: usize,
    passed: *mut i32,
) -> BlStatus {
    guard(|| {
        let name = read_str(name, "name")?;
        let out_dir = read_str(out_dir, "out_dir")?;
        let config = if config_json.is_null() {
            serde_json::Value::Null
        } else {
            serde_json::from_str(read_str(config_json, "config_json")?)
                .map_err(|e| (BlStatus::InvalidArgument, e.to_string()))?
        };
        let descriptor = Descriptor {
            experiment: name.into(),
            config,
            overrides: Overrides::default(),
            threads,
        };
        let (report, _) = harness::run(&descriptor, Path::new(out_dir)).map_err(|e| {
            let status = match e {
                RunError::Config(_) => BlStatus::InvalidArgument,
                RunError::Numerical(_) => BlStatus::Numerical,
            };
            (status, e.message().to_string())
        })?;
        if !passed.is_null() {
            *passed = i32::from(report.passed);
        }
        if report.passed {
            Ok(())
        } else {
            Err((BlStatus::AcceptanceFailed, format!("acceptance checks failed in {name}")))
        }
    })
}
