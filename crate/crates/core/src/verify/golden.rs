//! Golden-section search on a unimodal function. The bracket shrinks by
//! the inverse golden ratio per iteration, so the width after `iters`
//! iterations is (hi - lo) * 0.618^iters (down to float resolution).

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Returns (argmax, max). `f` must be unimodal on [lo, hi]; on a constant
/// function any point of the bracket is a valid argmax.
pub fn maximize_unimodal<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, iters: u32) -> (f64, f64) {
    let mut a = lo;
    let mut b = hi;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc > fd {
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
        if c >= d {
            break; // bracket collapsed to float resolution
        }
    }
    if fc > fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Minimization wrapper: returns (argmin, min).
pub fn minimize_unimodal<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, iters: u32) -> (f64, f64) {
    let (x, neg) = maximize_unimodal(|x| -f(x), lo, hi, iters);
    (x, -neg)
}

/// Golden-section in log-x over [lo, hi] (both positive). Used for the
/// gradient-bound cross-check, where the peak sits on a wide dynamic range.
pub fn maximize_unimodal_log<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, iters: u32) -> (f64, f64) {
    let (y, fy) = maximize_unimodal(|y: f64| f(y.exp()), lo.ln(), hi.ln(), iters);
    (y.exp(), fy)
}
