//! Grid-plus-refinement one-dimensional optimization.
//!
//! The profile likelihood and the oracle risk are smooth but not
//! guaranteed unimodal, so both maximizers scan a uniform grid first and
//! then refine around the best grid point with golden-section search.
//! Ties go to the smallest argument.

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section maximization on [lo, hi] to |interval| <= tol.
/// Assumes local unimodality inside the bracket.
pub fn golden_max<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let mut a = lo;
    let mut b = hi;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Scan `points` equally spaced values on [lo, hi], keep the best (earliest
/// on ties), then golden-refine in the bracket around it. The refined point
/// is only taken if it strictly improves on the grid value, so flat
/// objectives return the smallest grid argument.
pub fn grid_then_refine_max<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    points: usize,
    tol: f64,
) -> (f64, f64) {
    assert!(points >= 2 && hi > lo);
    let step = (hi - lo) / (points - 1) as f64;
    let mut best_idx = 0usize;
    let mut best_val = f64::NEG_INFINITY;
    for k in 0..points {
        let x = lo + step * k as f64;
        let v = f(x);
        if v > best_val {
            best_val = v;
            best_idx = k;
        }
    }
    let best_x = lo + step * best_idx as f64;
    let a = if best_idx == 0 { lo } else { best_x - step };
    let b = if best_idx == points - 1 { hi } else { best_x + step };
    let (xr, vr) = golden_max(&mut f, a, b, tol);
    if vr > best_val {
        (xr, vr)
    } else {
        (best_x, best_val)
    }
}

pub fn grid_then_refine_min<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    points: usize,
    tol: f64,
) -> (f64, f64) {
    let (x, v) = grid_then_refine_max(|x| -f(x), lo, hi, points, tol);
    (x, -v)
}
