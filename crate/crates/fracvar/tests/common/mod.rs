//! Shared oracles for the integration suites.
#![allow(dead_code)] // each test binary uses its own subset
//!
//! Everything here evaluates *defining integrals* by ordinary quadrature,
//! independent of the operator-matrix implementation it is used to check.

use fracvar::specfun::gamma_fn;

/// Composite Simpson over `[lo, hi]` with `panels` (rounded up to even).
pub fn simpson(lo: f64, hi: f64, panels: usize, f: impl Fn(f64) -> f64) -> f64 {
    let n = if panels.is_multiple_of(2) {
        panels
    } else {
        panels + 1
    };
    let h = (hi - lo) / n as f64;
    let mut sum = f(lo) + f(hi);
    for k in 1..n {
        let coef = if k % 2 == 1 { 4.0 } else { 2.0 };
        sum += coef * f(lo + k as f64 * h);
    }
    sum * h / 3.0
}

/// Left Riemann-Liouville fractional integral of order `mu` at `x`:
/// `(1/Γ(μ)) ∫_a^x (x−t)^{μ−1} f(t) dt`, computed after the substitution
/// `u = (x−t)^μ` which removes the kernel singularity.
pub fn left_frac_integral_oracle(f: impl Fn(f64) -> f64, a: f64, x: f64, mu: f64) -> f64 {
    if x <= a {
        return 0.0;
    }
    let upper = (x - a).powf(mu);
    let integral = simpson(0.0, upper, 20_000, |u| f(x - u.powf(1.0 / mu)));
    integral / (mu * gamma_fn(mu).unwrap())
}

/// Right-sided counterpart: `(1/Γ(μ)) ∫_x^b (t−x)^{μ−1} f(t) dt`.
pub fn right_frac_integral_oracle(f: impl Fn(f64) -> f64, b: f64, x: f64, mu: f64) -> f64 {
    if x >= b {
        return 0.0;
    }
    let upper = (b - x).powf(mu);
    let integral = simpson(0.0, upper, 20_000, |u| f(x + u.powf(1.0 / mu)));
    integral / (mu * gamma_fn(mu).unwrap())
}

/// Left Caputo derivative at `x` from the derivative function:
/// `(1/Γ(1−α)) ∫_a^x (x−t)^{−α} f'(t) dt`.
pub fn left_caputo_oracle(fprime: impl Fn(f64) -> f64, a: f64, x: f64, alpha: f64) -> f64 {
    left_frac_integral_oracle(fprime, a, x, 1.0 - alpha)
}

/// Right Caputo derivative at `x`: `(−1/Γ(1−α)) ∫_x^b (t−x)^{−α} f'(t) dt`.
pub fn right_caputo_oracle(fprime: impl Fn(f64) -> f64, b: f64, x: f64, alpha: f64) -> f64 {
    -right_frac_integral_oracle(fprime, b, x, 1.0 - alpha)
}

/// Left Riemann-Liouville derivative at `x` as the centered difference of
/// the integral oracle of complementary order.
pub fn left_rl_derivative_oracle(f: impl Fn(f64) -> f64 + Copy, a: f64, x: f64, alpha: f64) -> f64 {
    let h = 1e-4;
    (left_frac_integral_oracle(f, a, x + h, 1.0 - alpha)
        - left_frac_integral_oracle(f, a, x - h, 1.0 - alpha))
        / (2.0 * h)
}

/// Observed convergence order between errors at resolutions differing by
/// `ratio` (e.g. errors at n and ratio·n).
pub fn observed_order(coarse_err: f64, fine_err: f64, ratio: f64) -> f64 {
    (coarse_err / fine_err).ln() / ratio.ln()
}
