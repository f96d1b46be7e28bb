//! C ABI for the fmsolve solvers, stability functions, SWD and the flow-model
//! sampler.
//!
//! Every fallible function returns an [`FmsStatus`]; on failure a message is
//! available from [`fms_last_error_message`] on the same thread. Models are
//! opaque [`FmsModel`] handles owned by the caller and released with
//! [`fms_model_free`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, c_void, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use fmsolve::cfm::{sample, FlowModel};
use fmsolve::nn::ModelFile;
use fmsolve::numeric::Rng;
use fmsolve::ode::{stability_value, FieldHandle, FixedMethod, Method, SolverSpec, VectorField};
use fmsolve::Error;
use num_complex::Complex64;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FmsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// The integration or the network produced non-finite values, or hit the step limit.
    Numeric = 3,
    Io = 4,
    Parse = 5,
    /// The user callback returned nonzero.
    Callback = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FmsMethod {
    Euler = 0,
    Midpoint = 1,
    Rk4 = 2,
    Dopri5 = 3,
}

impl From<FmsMethod> for Method {
    fn from(m: FmsMethod) -> Self {
        match m {
            FmsMethod::Euler => Method::Euler,
            FmsMethod::Midpoint => Method::Midpoint,
            FmsMethod::Rk4 => Method::Rk4,
            FmsMethod::Dopri5 => Method::Dopri5,
        }
    }
}

/// Solver choice. `steps` is used by the fixed-step methods; `atol` and `rtol`
/// by DOPRI5, with defaults for the remaining controller settings.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FmsSolver {
    pub method: FmsMethod,
    pub steps: u32,
    pub atol: f64,
    pub rtol: f64,
}

impl FmsSolver {
    fn spec(&self) -> Result<SolverSpec, Failure> {
        let spec = match Method::from(self.method) {
            Method::Dopri5 => SolverSpec::dopri5(self.atol, self.rtol),
            m => SolverSpec::fixed(FixedMethod::try_from(m)?, self.steps as usize),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// A trained flow model.
pub struct FmsModel {
    model: FlowModel,
}

/// Right-hand side callback: write `f(t, y)` into `dy` (both of length `dim`)
/// and return 0, or return nonzero to abort the integration.
pub type FmsRhs = Option<unsafe extern "C" fn(t: f64, y: *const f64, dy: *mut f64, dim: usize, user_data: *mut c_void) -> c_int>;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(FmsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = if e.is_numeric() {
            FmsStatus::Numeric
        } else {
            match e.root() {
                Error::Io { .. } => FmsStatus::Io,
                Error::Json(_) | Error::Config(_) => FmsStatus::Parse,
                _ => FmsStatus::InvalidArgument,
            }
        };
        Failure(status, e.to_string())
    }
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> FmsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
            FmsStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            FmsStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(FmsStatus::NullPointer, format!("`{what}` is null"))
}

/// # Safety
/// `p` must be null or valid for reads of `len` values.
unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// # Safety
/// `p` must be null or valid for writes of `len` values.
unsafe fn slice_mut<'a>(p: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

/// Message for the last failed call on this thread, or null after a success.
/// The pointer stays valid until the next `fms_*` call on this thread.
#[no_mangle]
pub extern "C" fn fms_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fms_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a model file written by `fmsolve train`.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn fms_model_load(path: *const c_char, out: *mut *mut FmsModel) -> FmsStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let path = CStr::from_ptr(path).to_str().map_err(|_| Failure(FmsStatus::InvalidArgument, "path is not UTF-8".into()))?;
        let file = ModelFile::load(Path::new(path))?;
        let model = FlowModel::from_file(&file)?;
        *out = Box::into_raw(Box::new(FmsModel { model }));
        Ok(())
    })
}

/// Parses a model from the JSON text of a model file.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn fms_model_from_json(json: *const c_char, out: *mut *mut FmsModel) -> FmsStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let text = CStr::from_ptr(json).to_str().map_err(|_| Failure(FmsStatus::Parse, "model JSON is not UTF-8".into()))?;
        let model = FlowModel::from_file(&ModelFile::from_json(text)?)?;
        *out = Box::into_raw(Box::new(FmsModel { model }));
        Ok(())
    })
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `model` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn fms_model_free(model: *mut FmsModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Data dimension of the model, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fms_model_dim(model: *const FmsModel) -> usize {
    model.as_ref().map_or(0, |m| m.model.dim())
}

/// Evaluates the velocity field at time `t` for `n` points (row-major, `n x dim`)
/// in the model's standardized coordinates.
///
/// # Safety
/// `x` and `v` must each hold `n * dim` values; `model` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn fms_model_velocity(model: *const FmsModel, t: f64, x: *const f64, n: usize, v: *mut f64) -> FmsStatus {
    guard(|| {
        let m = &model.as_ref().ok_or_else(|| null("model"))?.model;
        let len = n * m.dim();
        let x = slice(x, len, "x")?;
        let v = slice_mut(v, len, "v")?;
        let out = fmsolve::nn::forward(&m.params, x, &vec![t; n])?;
        v.copy_from_slice(&out);
        Ok(())
    })
}

/// Draws `n` samples (row-major, `n x dim`, data coordinates) by integrating
/// the model from Gaussian noise seeded by `seed`. `nfe` (may be null)
/// receives the number of network calls.
///
/// # Safety
/// `points` must hold `n * dim` values; `model` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn fms_model_sample(
    model: *const FmsModel,
    solver: FmsSolver,
    n: usize,
    seed: u64,
    points: *mut f64,
    nfe: *mut u64,
) -> FmsStatus {
    guard(|| {
        let m = &model.as_ref().ok_or_else(|| null("model"))?.model;
        let spec = solver.spec()?;
        let out = slice_mut(points, n * m.dim(), "points")?;
        let (pts, trace) = sample(m, &spec, n, &mut Rng::new(seed))?;
        out.copy_from_slice(&pts);
        if !nfe.is_null() {
            *nfe = trace.nfe_total;
        }
        Ok(())
    })
}

/// `R(z)` of a method at `z = re + i im`.
///
/// # Safety
/// `out_re` and `out_im` must be valid for one write each.
#[no_mangle]
pub unsafe extern "C" fn fms_stability_value(method: FmsMethod, re: f64, im: f64, out_re: *mut f64, out_im: *mut f64) -> FmsStatus {
    guard(|| {
        if out_re.is_null() || out_im.is_null() {
            return Err(null("out_re/out_im"));
        }
        let r = stability_value(method.into(), Complex64::new(re, im));
        *out_re = r.re;
        *out_im = r.im;
        Ok(())
    })
}

/// Sliced 2-Wasserstein distance between two `n x dim` batches with
/// `n_projections` random directions drawn from `seed`.
///
/// # Safety
/// `a` and `b` must hold `n * dim` values; `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn fms_swd(a: *const f64, b: *const f64, n: usize, dim: usize, n_projections: usize, seed: u64, out: *mut f64) -> FmsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let a = slice(a, n * dim, "a")?;
        let b = slice(b, n * dim, "b")?;
        *out = fmsolve::analysis::swd(a, b, dim, n_projections, &mut Rng::new(seed))?;
        Ok(())
    })
}

struct CallbackField {
    rhs: unsafe extern "C" fn(f64, *const f64, *mut f64, usize, *mut c_void) -> c_int,
    user_data: *mut c_void,
    dim: usize,
    failed: Option<c_int>,
}

impl VectorField for CallbackField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&mut self, t: f64, y: &[f64], dy: &mut [f64]) {
        if self.failed.is_some() {
            dy.fill(f64::NAN);
            return;
        }
        // SAFETY: the caller of fms_integrate promised a callback valid for `dim` values.
        let rc = unsafe { (self.rhs)(t, y.as_ptr(), dy.as_mut_ptr(), self.dim, self.user_data) };
        if rc != 0 {
            self.failed = Some(rc);
            dy.fill(f64::NAN);
        }
    }
}

/// Integrates `dy/dt = rhs(t, y)` from `y0` at `t0` to `t1`, writing the final
/// state to `y_out` and the evaluation count to `nfe` (may be null).
///
/// # Safety
/// `y0` and `y_out` must hold `dim` values; `rhs` must be safe to call with
/// `user_data` and buffers of `dim` values.
#[no_mangle]
pub unsafe extern "C" fn fms_integrate(
    solver: FmsSolver,
    rhs: FmsRhs,
    user_data: *mut c_void,
    y0: *const f64,
    dim: usize,
    t0: f64,
    t1: f64,
    y_out: *mut f64,
    nfe: *mut u64,
) -> FmsStatus {
    guard(|| {
        let rhs = rhs.ok_or_else(|| null("rhs"))?;
        if dim == 0 {
            return Err(Failure(FmsStatus::InvalidArgument, "dim must be >= 1".into()));
        }
        let spec = solver.spec()?;
        let y0 = slice(y0, dim, "y0")?;
        let y_out = slice_mut(y_out, dim, "y_out")?;
        let mut field = FieldHandle::new(CallbackField { rhs, user_data, dim, failed: None });
        let result = spec.solve(&mut field, y0, t0, t1);
        let count = field.nfe();
        if !nfe.is_null() {
            *nfe = count;
        }
        if let Some(rc) = field.field().failed {
            return Err(Failure(FmsStatus::Callback, format!("callback returned {rc}")));
        }
        y_out.copy_from_slice(&result?.y_final);
        Ok(())
    })
}
