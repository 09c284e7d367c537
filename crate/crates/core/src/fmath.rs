//! Float functions routed through `libm` so results are identical with and
//! without `std`.

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn expm1(x: f64) -> f64 {
    libm::expm1(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

#[inline]
pub fn round(x: f64) -> f64 {
    libm::round(x)
}

#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}

#[inline]
pub fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

/// `x log x` with the convention `0 log 0 = 0`.
#[inline]
pub fn xlogx(x: f64) -> f64 {
    if x > 0.0 {
        x * ln(x)
    } else {
        0.0
    }
}

/// Largest absolute entry, `0` for an empty slice.
pub fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, &x| acc.max(abs(x)))
}

/// Largest absolute difference between two equal-length slices.
pub fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |acc, (&x, &y)| acc.max(abs(x - y)))
}

/// Numerically stable `log Σ exp(v_i)`.
pub fn log_sum_exp(v: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = v.clone().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let s: f64 = v.map(|x| exp(x - max)).sum();
    max + ln(s)
}
