//! Test-only reference computations, written without the library's closed
//! forms or integrator.
#![allow(dead_code)]

use std::f64::consts::PI;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Kronrod estimate, error estimate and Kronrod estimate of `|f|`.
fn g7k15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    let mut abs = WGK[7] * fc.abs();
    for i in 0..7 {
        let (lo, hi) = (f(c - h * XGK[i]), f(c + h * XGK[i]));
        kronrod += WGK[i] * (lo + hi);
        abs += WGK[i] * (lo.abs() + hi.abs());
        if i % 2 == 1 {
            gauss += WG[i / 2] * (lo + hi);
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs(), abs * h.abs())
}

/// Recursive bisection with a local absolute tolerance proportional to the
/// segment length. Segments stop splitting once the error estimate reaches
/// rounding level relative to the integral of `|f|`.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, abs_tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (value, err, abs) = g7k15(f, a, b);
        if err <= tol.max(50.0 * f64::EPSILON * abs) || depth >= 40 {
            return value;
        }
        let m = 0.5 * (a + b);
        rec(f, a, m, 0.5 * tol, depth + 1) + rec(f, m, b, 0.5 * tol, depth + 1)
    }
    rec(f, a, b, abs_tol, 0)
}

/// Integral over `[lo, hi]` split at the given interior points.
pub fn integrate_pieces<F: Fn(f64) -> f64>(f: &F, breaks: &[f64], abs_tol: f64) -> f64 {
    let per = abs_tol / breaks.len().max(1) as f64;
    breaks
        .windows(2)
        .map(|w| integrate(f, w[0], w[1], per))
        .sum()
}

#[derive(Debug, Clone, Copy)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    /// `(c / v) * variance`, the slope of the posterior mean.
    pub derivative: f64,
}

/// Posterior moments of `x` under `x = b * t`, `b ~ Bern(delta)`,
/// `t ~ N(0, s)`, observed as `ybar = c * x + N(0, v)`, by direct
/// integration of the slab branch over `t`.
pub fn bg_posterior(delta: f64, s: f64, ybar: f64, c: f64, v: f64) -> Moments {
    if delta == 0.0 {
        return Moments {
            mean: 0.0,
            variance: 0.0,
            derivative: 0.0,
        };
    }
    let log_joint = |t: f64| {
        let r = ybar - c * t;
        -0.5 * t * t / s - 0.5 * (2.0 * PI * s).ln() - 0.5 * r * r / v - 0.5 * (2.0 * PI * v).ln()
    };

    let centre = ybar / c;
    let w_lik = v.sqrt() / c;
    let w_pri = s.sqrt();
    let lo = (-14.0 * w_pri).min(centre - 14.0 * w_lik);
    let hi = (14.0 * w_pri).max(centre + 14.0 * w_lik);

    let mut breaks = vec![lo, hi, 0.0, centre];
    for k in [0.25, 0.5, 1.0, 2.0, 4.0, 8.0] {
        breaks.extend([
            centre - k * w_lik,
            centre + k * w_lik,
            -k * w_pri,
            k * w_pri,
        ]);
    }
    breaks.retain(|b| (lo..=hi).contains(b));
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    // rescale by the largest value on a fine scan to keep exponents in range
    let scan = 4000;
    let mut shift = f64::NEG_INFINITY;
    for i in 0..=scan {
        shift = shift.max(log_joint(lo + (hi - lo) * i as f64 / scan as f64));
    }
    for &b in &breaks {
        shift = shift.max(log_joint(b));
    }

    let weight = |t: f64| (log_joint(t) - shift).exp();
    let tol = 1e-14;
    let z = integrate_pieces(&weight, &breaks, tol);
    let m1 = integrate_pieces(&|t: f64| t * weight(t), &breaks, tol) / z;
    let m2 = integrate_pieces(&|t: f64| (t - m1) * (t - m1) * weight(t), &breaks, tol) / z;

    let log_slab = delta.ln() + shift + z.ln();
    let (pi, pi_c) = if delta >= 1.0 {
        (1.0, 0.0)
    } else {
        let log_spike = (1.0 - delta).ln() - 0.5 * ybar * ybar / v - 0.5 * (2.0 * PI * v).ln();
        let d = log_spike - log_slab;
        (1.0 / (1.0 + d.exp()), 1.0 / (1.0 + (-d).exp()))
    };
    // law of total variance over the two branches (the spike has mean 0)
    let variance = pi * m2 + pi * pi_c * m1 * m1;
    Moments {
        mean: pi * m1,
        variance,
        derivative: c / v * variance,
    }
}

/// The 41-point observation grid on `[-10, 10]`.
pub fn ybar_grid() -> Vec<f64> {
    (0..41).map(|i| -10.0 + 0.5 * i as f64).collect()
}

pub const NOISE_GRID: [f64; 4] = [1e-3, 1e-2, 0.1, 1.0];
pub const DELTA_GRID: [f64; 4] = [0.0, 0.1, 0.5, 1.0];

/// Positive root of `v = s2 + rho * v / (1 + v)` (unit-variance Gaussian
/// signal).
pub fn gaussian_fixed_point(rho: f64, s2: f64) -> f64 {
    // v^2 + (1 - s2 - rho) v - s2 = 0
    let b = 1.0 - s2 - rho;
    0.5 * (-b + (b * b + 4.0 * s2).sqrt())
}
