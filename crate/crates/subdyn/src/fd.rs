//! Central finite differences, used as the independent audit path for the
//! forward-mode engine (`grad-check`). Never used inside the variational
//! operators themselves.

use nalgebra::{DMatrix, DVector};

/// Default step for first-derivative central differences.
pub const GRAD_STEP: f64 = 1e-5;
/// Default step for second-derivative central differences.
pub const HESS_STEP: f64 = 1e-4;

/// Central-difference gradient of `f` at `point`.
pub fn gradient<F: Fn(&[f64]) -> f64>(f: &F, point: &[f64], h: f64) -> DVector<f64> {
    let k = point.len();
    let mut out = DVector::zeros(k);
    let mut work = point.to_vec();
    for i in 0..k {
        work[i] = point[i] + h;
        let fp = f(&work);
        work[i] = point[i] - h;
        let fm = f(&work);
        work[i] = point[i];
        out[i] = (fp - fm) / (2.0 * h);
    }
    out
}

/// Central-difference Hessian of `f` at `point` (symmetric by construction).
pub fn hessian<F: Fn(&[f64]) -> f64>(f: &F, point: &[f64], h: f64) -> DMatrix<f64> {
    let k = point.len();
    let mut out = DMatrix::zeros(k, k);
    let mut work = point.to_vec();
    let f0 = f(point);
    for i in 0..k {
        // diagonal: (f(x+h) − 2f(x) + f(x−h)) / h²
        work[i] = point[i] + h;
        let fp = f(&work);
        work[i] = point[i] - h;
        let fm = f(&work);
        work[i] = point[i];
        out[(i, i)] = (fp - 2.0 * f0 + fm) / (h * h);
        for j in 0..i {
            work[i] = point[i] + h;
            work[j] = point[j] + h;
            let fpp = f(&work);
            work[j] = point[j] - h;
            let fpm = f(&work);
            work[i] = point[i] - h;
            let fmm = f(&work);
            work[j] = point[j] + h;
            let fmp = f(&work);
            work[i] = point[i];
            work[j] = point[j];
            let v = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}
