use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, One, ToPrimitive, Zero};

use crate::gf2::NoiseRate;

/// Scalar used by the closed-form analysis.
///
/// Floating-point impls work in the log domain; the rational impl is exact.
pub trait Probability: Num + Clone + PartialOrd + Debug + Send + Sync {
    fn from_ratio(num: u64, den: u64) -> Self;

    fn as_f64(&self) -> f64;

    /// `C(n, k) p^k (1-p)^(n-k)`.
    fn binom_pmf(n: u32, k: u32, p: &Self) -> Self;

    /// `1 - (1 - x)^e` for `x` in `[0, 1]`.
    fn one_minus_complement_pow(x: &Self, e: u64) -> Self;

    /// `(a^e - b^e) / (e (a - b))` for `0 <= b <= a <= 1`, taking the limit
    /// `a^(e-1)` when `a == b`.
    fn pow_diff_quotient(a: &Self, b: &Self, e: u64) -> Self;

    fn powu(x: &Self, e: u64) -> Self {
        num_traits::pow::pow(x.clone(), e as usize)
    }

    fn noise(eps: NoiseRate) -> Self {
        let (n, d) = eps.as_ratio();
        Self::from_ratio(n, d)
    }

    fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
}

macro_rules! float_probability {
    ($t:ty, $lgamma:path, $exp:path, $ln:path, $ln1p:path, $expm1:path) => {
        impl Probability for $t {
            fn from_ratio(num: u64, den: u64) -> Self {
                num as $t / den as $t
            }

            fn as_f64(&self) -> f64 {
                *self as f64
            }

            fn binom_pmf(n: u32, k: u32, p: &Self) -> Self {
                if k > n {
                    return 0.0;
                }
                let p = *p;
                if p == 0.0 {
                    return if k == 0 { 1.0 } else { 0.0 };
                }
                if p == 1.0 {
                    return if k == n { 1.0 } else { 0.0 };
                }
                let (n_, k_) = (n as $t, k as $t);
                let ln_c = $lgamma(n_ + 1.0) - $lgamma(k_ + 1.0) - $lgamma(n_ - k_ + 1.0);
                $exp(ln_c + k_ * $ln(p) + (n_ - k_) * $ln1p(-p))
            }

            fn one_minus_complement_pow(x: &Self, e: u64) -> Self {
                if *x >= 1.0 {
                    return if e == 0 { 0.0 } else { 1.0 };
                }
                -$expm1(e as $t * $ln1p(-*x))
            }

            fn pow_diff_quotient(a: &Self, b: &Self, e: u64) -> Self {
                // Rounding can push the inputs a hair outside [0, 1].
                let (a, b) = (a.clamp(0.0, 1.0), b.clamp(0.0, 1.0));
                let g = a - b;
                if e == 0 || a <= 0.0 {
                    return 0.0;
                }
                let e_ = e as $t;
                let a_pow = $exp((e_ - 1.0) * $ln(a));
                if g <= 0.0 {
                    return a_pow;
                }
                if b <= 0.0 {
                    return a_pow / e_;
                }
                // a^e (1 - (1 - g/a)^e) / (e g), free of cancellation.
                a_pow * a * (-$expm1(e_ * $ln1p(-g / a))) / (e_ * g)
            }
        }
    };
}

float_probability!(
    f64,
    libm::lgamma,
    libm::exp,
    libm::log,
    libm::log1p,
    libm::expm1
);
float_probability!(
    f32,
    libm::lgammaf,
    libm::expf,
    libm::logf,
    libm::log1pf,
    libm::expm1f
);

fn binomial_coeff(n: u32, k: u32) -> BigInt {
    let k = k.min(n - k);
    let mut c = BigInt::one();
    for i in 0..k {
        c = c * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    c
}

impl Probability for BigRational {
    fn from_ratio(num: u64, den: u64) -> Self {
        BigRational::new(num.into(), den.into())
    }

    fn as_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn binom_pmf(n: u32, k: u32, p: &Self) -> Self {
        if k > n {
            return Self::zero();
        }
        let q = Self::one() - p;
        BigRational::from_integer(binomial_coeff(n, k))
            * Self::powu(p, k as u64)
            * Self::powu(&q, (n - k) as u64)
    }

    fn one_minus_complement_pow(x: &Self, e: u64) -> Self {
        Self::one() - Self::powu(&(Self::one() - x), e)
    }

    fn pow_diff_quotient(a: &Self, b: &Self, e: u64) -> Self {
        if e == 0 {
            return Self::zero();
        }
        if a == b {
            return Self::powu(a, e - 1);
        }
        (Self::powu(a, e) - Self::powu(b, e)) / (BigRational::from_integer(e.into()) * (a - b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn exact_binomial() {
        assert_eq!(BigRational::binom_pmf(4, 1, &q(1, 4)), q(27, 64));
        assert_eq!(binomial_coeff(10, 3), BigInt::from(120));
        assert_eq!(BigRational::binom_pmf(3, 4, &q(1, 2)), q(0, 1));
    }

    #[test]
    fn float_binomial_matches_exact() {
        for (n, k) in [(4u32, 1u32), (80, 20), (212, 63), (512, 3)] {
            let exact = BigRational::binom_pmf(n, k, &q(1, 4)).as_f64();
            let approx = f64::binom_pmf(n, k, &0.25);
            assert!((approx / exact - 1.0).abs() < 1e-11, "{n} {k}");
            // f32 cannot represent values this small.
            if exact > 1e-30 {
                let single = f32::binom_pmf(n, k, &0.25) as f64;
                assert!((single / exact - 1.0).abs() < 1e-3, "{n} {k}");
            }
        }
    }

    #[test]
    fn degenerate_rates() {
        assert_eq!(f64::binom_pmf(5, 0, &0.0), 1.0);
        assert_eq!(f64::binom_pmf(5, 2, &0.0), 0.0);
        assert_eq!(f64::binom_pmf(5, 5, &1.0), 1.0);
    }

    #[test]
    fn complement_power() {
        let exact = BigRational::one_minus_complement_pow(&q(1, 1000), 1000).as_f64();
        let f = f64::one_minus_complement_pow(&0.001, 1000);
        assert!((f / exact - 1.0).abs() < 1e-13);
        assert_eq!(f64::one_minus_complement_pow(&0.3, 1), 0.3 * 1.0 + 0.0);
        // Tiny x: naive 1 - (1-x)^e would round to 0.
        let tiny = f64::one_minus_complement_pow(&1e-20, 1000);
        assert!((tiny / 1e-17 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn diff_quotient() {
        let a = q(9, 10);
        let b = q(9, 10) - q(1, 1_000_000_000);
        let exact = BigRational::pow_diff_quotient(&a, &b, 1000).as_f64();
        let f = f64::pow_diff_quotient(&0.9, &(0.9 - 1e-9), 1000);
        assert!((f / exact - 1.0).abs() < 1e-6, "{f} {exact}");
        assert_eq!(
            BigRational::pow_diff_quotient(&q(1, 2), &q(1, 2), 3),
            q(1, 4)
        );
        assert_eq!(f64::pow_diff_quotient(&0.5, &0.5, 3), 0.25);
    }
}
