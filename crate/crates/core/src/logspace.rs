//! Natural-log arithmetic with `-inf` as log 0.

pub const LOG_ZERO: f64 = f64::NEG_INFINITY;

/// `ln(sum(exp(x)))` with the max-shift trick.
pub fn log_sum_exp(values: impl IntoIterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().into_iter().fold(LOG_ZERO, f64::max);
    if max == LOG_ZERO || max.is_infinite() {
        return max;
    }
    let sum: f64 = values.into_iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

/// `ln(exp(a) + exp(b))`.
pub fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == LOG_ZERO {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Natural log of a weight; zero weights map to `-inf`.
pub fn ln_weight(w: f64) -> f64 {
    if w > 0.0 {
        w.ln()
    } else {
        LOG_ZERO
    }
}
