//! Parallel HB, HB+ and HB# responses and threshold verification.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::gf2::{hamming_distance, sample_noise, BitMatrix, BitVector, NoiseRate, ToeplitzMatrix};
use crate::rng::SeededStream;

/// Every protocol dimension: noise rate, key lengths, response lengths,
/// threshold, tree shape and repeat bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolParams {
    pub eps: NoiseRate,
    pub k_x: usize,
    pub k_y: usize,
    pub r: usize,
    pub r_tr: usize,
    pub tau: usize,
    pub d: u32,
    pub beta: u64,
    #[serde(default = "one")]
    pub s: u32,
    /// Resample tag noise until its weight is at most `tau`.
    #[serde(default)]
    pub checked_noise: bool,
}

fn one() -> u32 {
    1
}

impl ProtocolParams {
    /// Zero noise is accepted as a test mode.
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::InvalidParams(m.to_string()));
        if self.k_x == 0 || self.k_y == 0 {
            return fail("key lengths must be positive");
        }
        if self.r == 0 || self.r_tr == 0 {
            return fail("response lengths must be positive");
        }
        if self.r_tr > self.r {
            return fail("r_tr must not exceed r");
        }
        if self.tau > self.r {
            return fail("tau must not exceed r");
        }
        if self.beta < 2 {
            return fail("beta must be at least 2");
        }
        if self.d == 0 {
            return fail("depth must be at least 1");
        }
        if self.s == 0 {
            return fail("s must be at least 1");
        }
        if self.capacity().is_none() {
            return fail("beta^d overflows 64 bits");
        }
        Ok(())
    }

    /// Number of leaves, `beta^d`, if it fits in a `u64`.
    pub fn capacity(&self) -> Option<u64> {
        self.beta.checked_pow(self.d)
    }

    pub fn with_eps(mut self, eps: NoiseRate) -> Self {
        self.eps = eps;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HbPlusKeys {
    pub x: BitVector,
    pub y: BitVector,
}

impl HbPlusKeys {
    pub fn random(k_x: usize, k_y: usize, stream: &mut SeededStream) -> Self {
        Self {
            x: BitVector::random(k_x, stream),
            y: BitVector::random(k_y, stream),
        }
    }
}

/// HB# secrets: `x_m` is `k_x × r`, `y_m` is `k_y × r`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HbSharpKeys {
    pub x_m: ToeplitzMatrix,
    pub y_m: ToeplitzMatrix,
}

impl HbSharpKeys {
    pub fn new(x_m: ToeplitzMatrix, y_m: ToeplitzMatrix) -> Result<Self> {
        check_dim("HbSharpKeys", x_m.cols(), y_m.cols())?;
        Ok(Self { x_m, y_m })
    }

    pub fn random(k_x: usize, k_y: usize, r: usize, stream: &mut SeededStream) -> Self {
        Self {
            x_m: ToeplitzMatrix::random(k_x, r, stream),
            y_m: ToeplitzMatrix::random(k_y, r, stream),
        }
    }

    pub fn r(&self) -> usize {
        self.x_m.cols()
    }
}

/// `z = a_m · x ⊕ noise`.
pub fn hb_tag_respond(a_m: &BitMatrix, x: &BitVector, noise: &BitVector) -> Result<BitVector> {
    check_dim("hb_tag_respond noise", a_m.rows(), noise.len())?;
    a_m.mul_vec(x)?.xor(noise)
}

/// `z' = a_m · x ⊕ b_m · y`.
pub fn hbplus_reader_expected(
    a_m: &BitMatrix,
    b_m: &BitMatrix,
    keys: &HbPlusKeys,
) -> Result<BitVector> {
    check_dim("hbplus rows", a_m.rows(), b_m.rows())?;
    let mut z = a_m.mul_vec(&keys.x)?;
    z.xor_assign(&b_m.mul_vec(&keys.y)?)?;
    Ok(z)
}

/// `z = a_m · x ⊕ b_m · y ⊕ noise`.
pub fn hbplus_tag_respond(
    a_m: &BitMatrix,
    b_m: &BitMatrix,
    keys: &HbPlusKeys,
    noise: &BitVector,
) -> Result<BitVector> {
    let mut z = hbplus_reader_expected(a_m, b_m, keys)?;
    z.xor_assign(noise)?;
    Ok(z)
}

/// `z' = a_v · X ⊕ b_v · Y`.
pub fn hbsharp_reader_expected(
    a_v: &BitVector,
    b_v: &BitVector,
    keys: &HbSharpKeys,
) -> Result<BitVector> {
    let mut z = keys.x_m.vec_mul(a_v)?;
    z.xor_assign(&keys.y_m.vec_mul(b_v)?)?;
    Ok(z)
}

/// `z = a_v · X ⊕ b_v · Y ⊕ noise`.
pub fn hbsharp_tag_respond(
    a_v: &BitVector,
    b_v: &BitVector,
    keys: &HbSharpKeys,
    noise: &BitVector,
) -> Result<BitVector> {
    let mut z = hbsharp_reader_expected(a_v, b_v, keys)?;
    z.xor_assign(noise)?;
    Ok(z)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub accepted: bool,
    pub distance: usize,
}

/// Accepts iff `z` and `z_exp` differ in at most `tau` positions.
pub fn verify_threshold(z: &BitVector, z_exp: &BitVector, tau: usize) -> Result<Verdict> {
    let distance = hamming_distance(z, z_exp)?;
    Ok(Verdict {
        accepted: distance <= tau,
        distance,
    })
}

/// Noise vector conditioned on weight at most `tau`, by rejection.
pub fn sample_noise_checked(
    stream: &mut SeededStream,
    r: usize,
    eps: NoiseRate,
    tau: usize,
) -> BitVector {
    // Only the zero vector has weight 0; rejection would almost never hit it.
    if tau == 0 {
        return BitVector::zeros(r);
    }
    loop {
        let v = sample_noise(stream, r, eps);
        if v.weight() <= tau {
            return v;
        }
    }
}

/// Tag noise for the authentication stage, honoring `checked_noise`.
pub(crate) fn auth_noise(stream: &mut SeededStream, p: &ProtocolParams) -> BitVector {
    if p.checked_noise {
        sample_noise_checked(stream, p.r, p.eps, p.tau)
    } else {
        sample_noise(stream, p.r, p.eps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf2::mul_vec_scalar;
    use crate::rng::RootSeed;
    use proptest::prelude::*;

    fn bits(s: &str) -> BitVector {
        BitVector::from_bits(s.chars().map(|c| c == '1'))
    }

    /// Scalar oracle: each output bit is an explicit dot product.
    fn dot(a: &BitVector, b: &BitVector) -> bool {
        a.iter()
            .zip(b.iter())
            .fold(false, |acc, (p, q)| acc ^ (p & q))
    }

    fn params() -> ProtocolParams {
        ProtocolParams {
            eps: NoiseRate::Dyadic { k: 2 },
            k_x: 80,
            k_y: 256,
            r: 80,
            r_tr: 80,
            tau: 20,
            d: 2,
            beta: 100,
            s: 1,
            checked_noise: false,
        }
    }

    #[test]
    fn validation() {
        assert!(params().validate().is_ok());
        let mut p = params();
        p.r_tr = 81;
        assert!(p.validate().is_err());
        let mut p = params();
        p.tau = 81;
        assert!(p.validate().is_err());
        let mut p = params();
        p.beta = 1;
        assert!(p.validate().is_err());
        let mut p = params();
        p.beta = 1 << 32;
        p.d = 3;
        assert!(p.validate().is_err());
    }

    #[test]
    fn params_json_rejects_bad_eps() {
        let mut v = serde_json::to_value(params()).unwrap();
        v["eps"] = serde_json::json!(0.3);
        assert!(serde_json::from_value::<ProtocolParams>(v).is_err());
    }

    #[test]
    fn hb_basic_cases() {
        let a = bits("1101");
        let m = BitMatrix::from_rows(4, &[a.clone(), bits("0110"), bits("1111")]).unwrap();
        let x = bits("1011");
        assert_eq!(
            hb_tag_respond(&m, &x, &bits("000")).unwrap(),
            m.mul_vec(&x).unwrap()
        );
        let noise = bits("101");
        assert_eq!(
            hb_tag_respond(&BitMatrix::zeros(3, 4), &x, &noise).unwrap(),
            noise
        );
    }

    #[test]
    fn hb_four_by_three_by_hand() {
        // rows . (1,0,1): 110->1, 011->1, 101->0, 111->0
        let m =
            BitMatrix::from_rows(3, &[bits("110"), bits("011"), bits("101"), bits("111")]).unwrap();
        let z = hb_tag_respond(&m, &bits("101"), &bits("0001")).unwrap();
        assert_eq!(z, bits("1101"));
    }

    #[test]
    fn hbplus_trivial_cases() {
        let mut s = RootSeed::from_u64(1).stream("k", 0);
        let keys = HbPlusKeys::random(4, 6, &mut s);
        let a = BitMatrix::zeros(8, 4);
        let b = BitMatrix::zeros(8, 6);
        assert_eq!(
            hbplus_tag_respond(&a, &b, &keys, &BitVector::zeros(8)).unwrap(),
            BitVector::zeros(8)
        );
        assert_eq!(
            hbplus_tag_respond(&a, &b, &keys, &BitVector::ones(8)).unwrap(),
            BitVector::ones(8)
        );
    }

    #[test]
    fn hbplus_dimension_errors() {
        let mut s = RootSeed::from_u64(1).stream("k", 0);
        let keys = HbPlusKeys::random(4, 6, &mut s);
        let a = BitMatrix::zeros(8, 4);
        assert!(hbplus_reader_expected(&a, &BitMatrix::zeros(7, 6), &keys).is_err());
        assert!(hbplus_reader_expected(&a, &BitMatrix::zeros(8, 5), &keys).is_err());
        assert!(
            hbplus_tag_respond(&a, &BitMatrix::zeros(8, 6), &keys, &BitVector::zeros(9)).is_err()
        );
    }

    #[test]
    fn hbsharp_degenerate() {
        let keys = HbSharpKeys::new(
            ToeplitzMatrix::new(1, 1, bits("1")).unwrap(),
            ToeplitzMatrix::new(1, 1, bits("0")).unwrap(),
        )
        .unwrap();
        let z = hbsharp_tag_respond(&bits("1"), &bits("1"), &keys, &bits("0")).unwrap();
        assert_eq!(z, bits("1"));
        let mut s = RootSeed::from_u64(2).stream("k", 0);
        let keys = HbSharpKeys::random(5, 7, 9, &mut s);
        let noise = BitVector::random(9, &mut s);
        let z =
            hbsharp_tag_respond(&BitVector::zeros(5), &BitVector::zeros(7), &keys, &noise).unwrap();
        assert_eq!(z, noise);
    }

    #[test]
    fn verify_boundary() {
        let z = bits("00000000");
        assert_eq!(
            verify_threshold(&z, &z, 0).unwrap(),
            Verdict {
                accepted: true,
                distance: 0
            }
        );
        let three = bits("11100000");
        assert!(verify_threshold(&three, &z, 3).unwrap().accepted);
        let four = bits("11110000");
        let v = verify_threshold(&four, &z, 3).unwrap();
        assert!(!v.accepted);
        assert_eq!(v.distance, 4);
        assert!(verify_threshold(&bits("1"), &z, 3).is_err());
    }

    #[test]
    fn checked_noise_respects_threshold() {
        let mut s = RootSeed::from_u64(3).stream("c", 0);
        let eps = NoiseRate::Dyadic { k: 2 };
        assert_eq!(
            sample_noise_checked(&mut s, 80, eps, 0),
            BitVector::zeros(80)
        );
        for _ in 0..10_000 {
            assert!(sample_noise_checked(&mut s, 80, eps, 20).weight() <= 20);
        }
    }

    #[test]
    fn checked_noise_without_bound_is_plain_noise() {
        let root = RootSeed::from_u64(4);
        let eps = NoiseRate::Dyadic { k: 2 };
        let a = sample_noise_checked(&mut root.stream("n", 0), 80, eps, 80);
        let b = sample_noise(&mut root.stream("n", 0), 80, eps);
        assert_eq!(a, b);
    }

    #[test]
    fn legitimate_reject_rate_at_80_20() {
        let root = RootSeed::from_u64(5);
        let mut s = root.stream("frr", 0);
        let eps = NoiseRate::Dyadic { k: 2 };
        let keys = HbPlusKeys::random(80, 256, &mut s);
        let trials = 100_000;
        let mut rejects = 0;
        for _ in 0..trials {
            let a = BitMatrix::random(80, 80, &mut s);
            let b = BitMatrix::random(80, 256, &mut s);
            let noise = sample_noise(&mut s, 80, eps);
            let z = hbplus_tag_respond(&a, &b, &keys, &noise).unwrap();
            let exp = hbplus_reader_expected(&a, &b, &keys).unwrap();
            if !verify_threshold(&z, &exp, 20).unwrap().accepted {
                rejects += 1;
            }
        }
        let rate = rejects as f64 / trials as f64;
        assert!((0.42..=0.46).contains(&rate), "{rate}");
    }

    proptest! {
        #[test]
        fn hbplus_matches_scalar_oracle(r in 1usize..=16, kx in 1usize..=16, ky in 1usize..=16, seed in any::<u64>()) {
            let mut s = RootSeed::from_u64(seed).stream("plus", 0);
            let keys = HbPlusKeys::random(kx, ky, &mut s);
            let a = BitMatrix::random(r, kx, &mut s);
            let b = BitMatrix::random(r, ky, &mut s);
            let noise = BitVector::random(r, &mut s);
            let oracle = BitVector::from_bits((0..r).map(|i| {
                dot(&a.row(i), &keys.x) ^ dot(&b.row(i), &keys.y) ^ noise.get(i)
            }));
            prop_assert_eq!(hbplus_tag_respond(&a, &b, &keys, &noise).unwrap(), oracle);
        }

        #[test]
        fn hbsharp_matches_dense_dual(r in 1usize..=16, kx in 1usize..=16, ky in 1usize..=16, seed in any::<u64>()) {
            let mut s = RootSeed::from_u64(seed).stream("sharp", 0);
            let keys = HbSharpKeys::random(kx, ky, r, &mut s);
            let a = BitVector::random(kx, &mut s);
            let b = BitVector::random(ky, &mut s);
            let noise = BitVector::random(r, &mut s);
            // Transposed dense secrets turn the HB# product into an HB+-shaped one.
            let xt = keys.x_m.expand().transpose();
            let yt = keys.y_m.expand().transpose();
            let dense = &(&mul_vec_scalar(&xt, &a) ^ &mul_vec_scalar(&yt, &b)) ^ &noise;
            prop_assert_eq!(hbsharp_tag_respond(&a, &b, &keys, &noise).unwrap(), dense);
        }

        #[test]
        fn reader_expected_is_linear_in_x(r in 1usize..40, kx in 1usize..40, seed in any::<u64>()) {
            let mut s = RootSeed::from_u64(seed).stream("lin", 0);
            let a = BitMatrix::random(r, kx, &mut s);
            let b = BitMatrix::zeros(r, 3);
            let k1 = HbPlusKeys::random(kx, 3, &mut s);
            let k2 = HbPlusKeys::random(kx, 3, &mut s);
            let sum = HbPlusKeys { x: &k1.x ^ &k2.x, y: k1.y.clone() };
            let lhs = hbplus_reader_expected(&a, &b, &sum).unwrap();
            let rhs = &hbplus_reader_expected(&a, &b, &k1).unwrap() ^ &hbplus_reader_expected(&a, &b, &k2).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn round_trip_accepts_iff_noise_light(r in 1usize..120, tau in 0usize..120, seed in any::<u64>()) {
            let tau = tau.min(r);
            let mut s = RootSeed::from_u64(seed).stream("rt", 0);
            let keys = HbPlusKeys::random(17, 33, &mut s);
            let a = BitMatrix::random(r, 17, &mut s);
            let b = BitMatrix::random(r, 33, &mut s);
            let noise = sample_noise(&mut s, r, NoiseRate::Dyadic { k: 2 });
            let z = hbplus_tag_respond(&a, &b, &keys, &noise).unwrap();
            let v = verify_threshold(&z, &hbplus_reader_expected(&a, &b, &keys).unwrap(), tau).unwrap();
            prop_assert_eq!(v.accepted, noise.weight() <= tau);
            prop_assert_eq!(v.distance, noise.weight());
        }
    }
}
