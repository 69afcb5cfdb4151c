use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use ff::{Field, PrimeField};
use rand::{CryptoRng, RngCore};

use crate::error::{Error, Result};

/// An integer modulo the BLS12-381 subgroup order `p`.
#[derive(Clone, Copy, PartialEq, Eq, Default)]
pub struct Scalar(pub(crate) blstrs::Scalar);

impl Scalar {
    /// Encoded width: `ceil(log2(p) / 8)` bytes, big-endian.
    pub const BYTES: usize = 32;

    pub fn zero() -> Self {
        Scalar(blstrs::Scalar::ZERO)
    }

    pub fn one() -> Self {
        Scalar(blstrs::Scalar::ONE)
    }

    pub fn from_u64(v: u64) -> Self {
        Scalar(blstrs::Scalar::from(v))
    }

    /// Uniform over the nonzero residues.
    pub fn random<R: RngCore + CryptoRng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let s = blstrs::Scalar::random(&mut *rng);
            if !bool::from(s.is_zero()) {
                return Scalar(s);
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        bool::from(self.0.is_zero())
    }

    pub fn invert(&self) -> Option<Scalar> {
        Option::from(self.0.invert()).map(Scalar)
    }

    pub fn to_bytes(&self) -> [u8; Self::BYTES] {
        self.0.to_bytes_be()
    }

    /// Rejects short buffers with `Decode` and non-canonical values (`>= p`)
    /// with `InvalidElement`.
    pub fn from_bytes(bytes: &[u8]) -> Result<Scalar> {
        let arr: [u8; Self::BYTES] = bytes
            .try_into()
            .map_err(|_| Error::Decode(format!("scalar needs {} bytes, got {}", Self::BYTES, bytes.len())))?;
        Option::from(blstrs::Scalar::from_bytes_be(&arr))
            .map(Scalar)
            .ok_or(Error::InvalidElement)
    }

    pub(crate) fn bits_be(&self) -> impl Iterator<Item = bool> {
        let repr = self.0.to_repr();
        let le: [u8; 32] = repr.as_ref().try_into().expect("32-byte repr");
        (0..256).rev().map(move |i| (le[i / 8] >> (i % 8)) & 1 == 1)
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Scalar(0x{})", hex::encode(self.to_bytes()))
    }
}

impl Add for Scalar {
    type Output = Scalar;
    fn add(self, rhs: Scalar) -> Scalar {
        Scalar(self.0 + rhs.0)
    }
}

impl Sub for Scalar {
    type Output = Scalar;
    fn sub(self, rhs: Scalar) -> Scalar {
        Scalar(self.0 - rhs.0)
    }
}

impl Mul for Scalar {
    type Output = Scalar;
    fn mul(self, rhs: Scalar) -> Scalar {
        Scalar(self.0 * rhs.0)
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar(-self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn seeded_draws_are_nonzero_distinct_and_reproducible() {
        let mut rng = ChaCha20Rng::seed_from_u64(42);
        let a = Scalar::random(&mut rng);
        let b = Scalar::random(&mut rng);
        assert_ne!(a, b);
        assert!(!a.is_zero() && !b.is_zero());

        let mut again = ChaCha20Rng::seed_from_u64(42);
        assert_eq!(Scalar::random(&mut again), a);
        assert_eq!(Scalar::random(&mut again), b);
    }

    #[test]
    fn ten_thousand_draws_never_zero() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        assert!((0..10_000).all(|_| !Scalar::random(&mut rng).is_zero()));
    }

    #[test]
    fn inverse() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let x = Scalar::random(&mut rng);
        assert_eq!(x * x.invert().unwrap(), Scalar::one());
        assert!(Scalar::zero().invert().is_none());
    }

    #[test]
    fn byte_round_trip_and_errors() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let x = Scalar::random(&mut rng);
        assert_eq!(Scalar::from_bytes(&x.to_bytes()).unwrap(), x);
        assert!(matches!(Scalar::from_bytes(&[0u8; 31]), Err(Error::Decode(_))));
        assert!(matches!(Scalar::from_bytes(&[0xff; 32]), Err(Error::InvalidElement)));
    }

    #[test]
    fn bit_order() {
        let bits: Vec<bool> = Scalar::from_u64(5).bits_be().collect();
        assert_eq!(bits.len(), 256);
        assert_eq!(&bits[253..], &[true, false, true]);
        assert!(bits[..253].iter().all(|b| !b));
    }

    #[test]
    fn negation_is_mod_p() {
        let x = Scalar::from_u64(3);
        assert_eq!(x + (-x), Scalar::zero());
        assert_eq!(Scalar::zero() - Scalar::one(), -Scalar::one());
    }
}
