//! Adaptive Simpson quadrature on finite intervals.

use crate::{Error, Result};

/// Initial panels, so narrow features are not skipped by the first estimate.
const PANELS: usize = 16;

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
///
/// Fails with [`Error::Quadrature`] if any subinterval still misses its
/// share of the tolerance at `max_depth` bisections.
pub fn adaptive_simpson<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    tol: f64,
    max_depth: u32,
) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::domain("integration limits must be finite"));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::domain("tolerance must be positive"));
    }
    if a == b {
        return Ok(0.0);
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let h = (hi - lo) / PANELS as f64;
    let panel_tol = tol / PANELS as f64;
    let mut total = 0.0;
    let mut worst = 0.0f64;
    for p in 0..PANELS {
        let x0 = lo + h * p as f64;
        let x1 = if p + 1 == PANELS { hi } else { x0 + h };
        let xm = 0.5 * (x0 + x1);
        let (f0, fm, f1) = (f(x0), f(xm), f(x1));
        let whole = (x1 - x0) / 6.0 * (f0 + 4.0 * fm + f1);
        let mut miss = 0.0;
        total += step(&mut f, x0, x1, f0, fm, f1, whole, panel_tol, max_depth, &mut miss);
        worst = worst.max(miss);
    }
    if !total.is_finite() {
        return Err(Error::Quadrature { achieved: f64::INFINITY, requested: tol });
    }
    if worst > 0.0 {
        return Err(Error::Quadrature { achieved: worst, requested: tol });
    }
    Ok(sign * total)
}

#[allow(clippy::too_many_arguments)]
fn step<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    miss: &mut f64,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if libm::fabs(delta) <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    if depth == 0 {
        *miss += libm::fabs(delta) / 15.0;
        return left + right + delta / 15.0;
    }
    step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, miss)
        + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, miss)
}
