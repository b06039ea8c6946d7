//! Scalar helpers shared by the model families.
//!
//! Everything routes through `libm` so results are identical on every target.

/// `log(1 + e^a)` without overflow.
#[inline]
pub fn softplus(a: f64) -> f64 {
    if a > 0.0 {
        a + libm::log1p(libm::exp(-a))
    } else {
        libm::log1p(libm::exp(a))
    }
}

/// Logistic function `1 / (1 + e^{-a})`.
#[inline]
pub fn sigmoid(a: f64) -> f64 {
    if a >= 0.0 {
        1.0 / (1.0 + libm::exp(-a))
    } else {
        let e = libm::exp(a);
        e / (1.0 + e)
    }
}

/// `x - sigmoid(a)` for binary `x`, computed without cancellation when the
/// sigmoid saturates towards `x`.
#[inline]
pub fn binary_residual(x: bool, a: f64) -> f64 {
    if x {
        sigmoid(-a)
    } else {
        -sigmoid(a)
    }
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

/// `-y log y` with the `0 log 0 = 0` convention.
#[inline]
pub fn neg_xlogx(y: f64) -> f64 {
    if y <= 0.0 {
        0.0
    } else {
        -y * libm::log(y)
    }
}

/// `log Σ exp(v)`; `-inf` for an empty or all `-inf` slice.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let mut acc = NeumaierSum::default();
    for &v in values {
        acc.add(libm::exp(v - max));
    }
    max + libm::log(acc.total())
}

/// Compensated (Neumaier) summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if libm::fabs(self.sum) >= libm::fabs(v) {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

pub(crate) fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(libm::fabs(*v)))
}

/// `max_i |a_i - b_i|`.
pub fn norm_inf_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max(libm::fabs(x - y)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softplus_matches_definition_and_stays_finite() {
        assert_eq!(softplus(0.0), core::f64::consts::LN_2);
        for a in [-30.0, -2.5, -1e-3, 0.7, 4.0, 30.0] {
            let naive = libm::log(1.0 + libm::exp(a));
            assert!((softplus(a) - naive).abs() < 1e-14, "a = {a}");
        }
        assert_eq!(softplus(1000.0), 1000.0);
        assert!(softplus(-1000.0) >= 0.0);
    }

    #[test]
    fn sigmoid_is_symmetric() {
        for a in [-40.0, -3.0, 0.0, 0.25, 12.0] {
            assert!((sigmoid(a) + sigmoid(-a) - 1.0).abs() < 1e-15);
        }
        assert!(binary_residual(true, 60.0) > 0.0);
    }

    #[test]
    fn neg_xlogx_peaks_at_inverse_e() {
        let y = 1.0 / core::f64::consts::E;
        assert!((neg_xlogx(y) - y).abs() < 1e-16);
        assert_eq!(neg_xlogx(0.0), 0.0);
        assert_eq!(neg_xlogx(1.0), 0.0);
    }

    #[test]
    fn log_sum_exp_handles_neg_infinity() {
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        let v = log_sum_exp(&[f64::NEG_INFINITY, 0.0, 0.0]);
        assert!((v - core::f64::consts::LN_2).abs() < 1e-15);
    }
}
