//! Regularized incomplete gamma and normal cdf helpers.
//!
//! Series expansion for small arguments, Lentz continued fraction for the
//! upper tail, so both tails are computed without cancellation.

use crate::num::Real;

const MAX_ITER: usize = 400;

/// Regularized lower incomplete gamma P(a, x).
pub(crate) fn reg_lower_gamma<F: Real>(a: F, x: F) -> F {
    if x <= F::zero() {
        return F::zero();
    }
    if x < a + F::one() {
        gamma_series(a, x)
    } else {
        F::one() - gamma_cont_fraction(a, x)
    }
}

/// Regularized upper incomplete gamma Q(a, x) = 1 − P(a, x).
pub(crate) fn reg_upper_gamma<F: Real>(a: F, x: F) -> F {
    if x <= F::zero() {
        return F::one();
    }
    if x < a + F::one() {
        F::one() - gamma_series(a, x)
    } else {
        gamma_cont_fraction(a, x)
    }
}

fn gamma_series<F: Real>(a: F, x: F) -> F {
    let mut ap = a;
    let mut sum = F::one() / a;
    let mut del = sum;
    for _ in 0..MAX_ITER {
        ap += F::one();
        del = del * x / ap;
        sum += del;
        if del.abs() < sum.abs() * F::epsilon() {
            break;
        }
    }
    let log_prefactor = a * x.ln() - x - a.ln_gamma();
    sum * log_prefactor.exp()
}

fn gamma_cont_fraction<F: Real>(a: F, x: F) -> F {
    let fpmin = F::min_positive_value() / F::epsilon();
    let mut b = x + F::one() - a;
    let mut c = F::one() / fpmin;
    let mut d = F::one() / b;
    let mut h = d;
    let mut i = F::one();
    for _ in 0..MAX_ITER {
        let an = -i * (i - a);
        b += F::cst(2.0);
        d = an * d + b;
        if d.abs() < fpmin {
            d = fpmin;
        }
        c = b + an / c;
        if c.abs() < fpmin {
            c = fpmin;
        }
        d = F::one() / d;
        let del = d * c;
        h *= del;
        if (del - F::one()).abs() < F::epsilon() {
            break;
        }
        i += F::one();
    }
    let log_prefactor = a * x.ln() - x - a.ln_gamma();
    h * log_prefactor.exp()
}

/// Standard normal cdf, accurate in the lower tail.
pub(crate) fn normal_cdf<F: Real>(z: F) -> F {
    let half = F::cst(0.5);
    half * (-z / F::cst(std::f64::consts::SQRT_2)).erfc()
}

/// Standard normal survival function, accurate in the upper tail.
pub(crate) fn normal_sf<F: Real>(z: F) -> F {
    let half = F::cst(0.5);
    half * (z / F::cst(std::f64::consts::SQRT_2)).erfc()
}
