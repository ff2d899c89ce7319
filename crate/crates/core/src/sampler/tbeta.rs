//! Truncated Beta sampling by inverse CDF.
//!
//! The regularized incomplete beta function is evaluated in log space so
//! that intervals deep in either tail (common once a grade has accumulated
//! tens of thousands of observations) still invert accurately. Whichever
//! tail holds less than half the mass is used as the working CDF. A
//! uniform-proposal rejection sampler covers the remaining case: a tiny
//! interval near the median, where differencing two CDF values near 0.5
//! loses all precision.

use rand::Rng;
use statrs::function::gamma::ln_gamma;

const CF_EPS: f64 = 1e-15;
const CF_FPMIN: f64 = 1e-300;
const CF_MAX_ITERS: usize = 100_000;
const SOLVE_MAX_ITERS: usize = 300;
const LN_HALF: f64 = -std::f64::consts::LN_2;

/// Intervals narrower than this are treated as empty.
pub const MIN_WIDTH: f64 = 1e-12;
/// Below this truncated mass (in the non-tail case) rejection is used.
pub const REJECTION_MASS: f64 = 1e-10;
const REJECTION_MAX_TRIES: usize = 1_000_000;

pub fn ln_beta_fn(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Log density of Beta(a, b) at `x` in (0, 1).
pub fn ln_beta_pdf(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return f64::NEG_INFINITY;
    }
    (a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p() - ln_beta_fn(a, b)
}

/// `ln(1 - exp(z))` for `z <= 0`.
fn log1mexp(z: f64) -> f64 {
    if z > LN_HALF {
        (-z.exp_m1()).ln()
    } else {
        (-z.exp()).ln_1p()
    }
}

fn logaddexp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Continued fraction for the incomplete beta function (modified Lentz).
fn betacf(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < CF_FPMIN {
        d = CF_FPMIN;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITERS {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_FPMIN {
            d = CF_FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_FPMIN {
            c = CF_FPMIN;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_FPMIN {
            d = CF_FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_FPMIN {
            c = CF_FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            return h;
        }
    }
    log::warn!("incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})");
    h
}

/// Precomputed constants for one Beta(a, b).
#[derive(Debug, Clone, Copy)]
struct BetaLn {
    a: f64,
    b: f64,
    ln_b: f64,
}

impl BetaLn {
    fn new(a: f64, b: f64) -> Self {
        Self {
            a,
            b,
            ln_b: ln_beta_fn(a, b),
        }
    }

    fn ln_pdf(&self, x: f64) -> f64 {
        if x <= 0.0 || x >= 1.0 {
            return f64::NEG_INFINITY;
        }
        (self.a - 1.0) * x.ln() + (self.b - 1.0) * (-x).ln_1p() - self.ln_b
    }

    /// ln I_x(a, b). `y` must equal `1 - x` (passed separately so that
    /// values close to 1 keep their precision).
    fn ln_cdf(&self, x: f64, y: f64) -> f64 {
        lower_ln(self.a, self.b, self.ln_b, x, y)
    }

    /// ln (1 - I_x(a, b)).
    fn ln_sf(&self, x: f64, y: f64) -> f64 {
        lower_ln(self.b, self.a, self.ln_b, y, x)
    }
}

fn lower_ln(a: f64, b: f64, ln_b: f64, x: f64, y: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if y <= 0.0 {
        return 0.0;
    }
    let ln_x = x.ln();
    let ln_y = if y < 0.5 { y.ln() } else { (-x).ln_1p() };
    let front = a * ln_x + b * ln_y - ln_b;
    if x < (a + 1.0) / (a + b + 2.0) {
        front + betacf(a, b, x).ln() - a.ln()
    } else {
        let upper = front + betacf(b, a, y).ln() - b.ln();
        log1mexp(upper.min(0.0))
    }
}

/// ln of the regularized incomplete beta function I_x(a, b).
pub fn ln_beta_cdf(x: f64, a: f64, b: f64) -> f64 {
    BetaLn::new(a, b).ln_cdf(x, 1.0 - x)
}

/// ln of the Beta(a, b) survival function at `x`.
pub fn ln_beta_sf(x: f64, a: f64, b: f64) -> f64 {
    BetaLn::new(a, b).ln_sf(x, 1.0 - x)
}

#[derive(Debug, Clone, Copy)]
enum Tail {
    Lower,
    Upper,
}

/// Finds `x` in `(lo, hi)` with `ln F(x) = target` (or `ln S(x)` for the
/// upper tail) by safeguarded Newton iteration.
fn solve(dist: &BetaLn, tail: Tail, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    let eval = |x: f64| -> (f64, f64) {
        let lp = dist.ln_pdf(x);
        match tail {
            Tail::Lower => {
                let lf = dist.ln_cdf(x, 1.0 - x);
                (lf - target, (lp - lf).exp())
            }
            Tail::Upper => {
                let ls = dist.ln_sf(x, 1.0 - x);
                (ls - target, -(lp - ls).exp())
            }
        }
    };
    let increasing = matches!(tail, Tail::Lower);
    let mut x = 0.5 * (lo + hi);
    for _ in 0..SOLVE_MAX_ITERS {
        let (g, dg) = eval(x);
        if g.abs() < 1e-13 {
            return x;
        }
        if (g > 0.0) == increasing {
            hi = x;
        } else {
            lo = x;
        }
        if hi - lo <= 2.0 * f64::EPSILON * hi.abs() {
            return 0.5 * (lo + hi);
        }
        let newton = x - g / dg;
        x = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    x
}

fn reject<R: Rng + ?Sized>(dist: &BetaLn, lo: f64, hi: f64, rng: &mut R) -> f64 {
    let mut env = dist.ln_pdf(lo).max(dist.ln_pdf(hi));
    if dist.a > 1.0 && dist.b > 1.0 {
        let mode = (dist.a - 1.0) / (dist.a + dist.b - 2.0);
        if mode > lo && mode < hi {
            env = env.max(dist.ln_pdf(mode));
        }
    }
    for _ in 0..REJECTION_MAX_TRIES {
        let x = lo + (hi - lo) * rng.random::<f64>();
        if x <= lo || x >= hi {
            continue;
        }
        if rng.random::<f64>().ln() <= dist.ln_pdf(x) - env {
            return x;
        }
    }
    log::warn!("truncated beta rejection sampler exhausted; using interval midpoint");
    0.5 * (lo + hi)
}

/// Draws from Beta(a, b) restricted to the open interval `(lo, hi)`.
/// Returns `None` when the interval is numerically empty.
pub fn sample_truncated_beta<R: Rng + ?Sized>(
    a: f64,
    b: f64,
    lo: f64,
    hi: f64,
    rng: &mut R,
) -> Option<f64> {
    debug_assert!(a > 0.0 && b > 0.0);
    let lo = lo.max(0.0);
    let hi = hi.min(1.0);
    if !(hi - lo > MIN_WIDTH) {
        return None;
    }
    let dist = BetaLn::new(a, b);
    let ln_f_lo = dist.ln_cdf(lo, 1.0 - lo);
    let ln_f_hi = dist.ln_cdf(hi, 1.0 - hi);
    let ln_s_lo = dist.ln_sf(lo, 1.0 - lo);
    let ln_s_hi = dist.ln_sf(hi, 1.0 - hi);
    let u: f64 = rng.random();
    let ln_u = u.ln();

    let x = if ln_f_hi <= LN_HALF {
        let ln_mass = ln_f_hi + log1mexp((ln_f_lo - ln_f_hi).min(0.0));
        if !ln_mass.is_finite() {
            return Some(reject(&dist, lo, hi, rng));
        }
        let target = logaddexp(ln_f_lo, ln_u + ln_mass);
        solve(&dist, Tail::Lower, target, lo, hi)
    } else if ln_s_lo <= LN_HALF {
        let ln_mass = ln_s_lo + log1mexp((ln_s_hi - ln_s_lo).min(0.0));
        if !ln_mass.is_finite() {
            return Some(reject(&dist, lo, hi, rng));
        }
        let target = logaddexp(ln_s_hi, ln_u + ln_mass);
        solve(&dist, Tail::Upper, target, lo, hi)
    } else {
        let f_lo = ln_f_lo.exp();
        let s_hi = ln_s_hi.exp();
        let mass = 1.0 - f_lo - s_hi;
        if mass < REJECTION_MASS {
            return Some(reject(&dist, lo, hi, rng));
        }
        let v = f_lo + u * mass;
        if v < 0.5 {
            solve(&dist, Tail::Lower, v.ln(), lo, hi)
        } else {
            let w = s_hi + (1.0 - u) * mass;
            solve(&dist, Tail::Upper, w.ln(), lo, hi)
        }
    };
    if x > lo && x < hi {
        Some(x)
    } else {
        Some(reject(&dist, lo, hi, rng))
    }
}
