use std::fmt;
use std::ops::Mul;

use blstrs::{Compress, Gt};
use group::Group;

use super::Scalar;
use crate::error::{Error, Result};
use crate::metrics;

/// An element of the pairing target group `GT`, written multiplicatively.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct TargetElement(pub(crate) Gt);

/// Simultaneous exponentiation beyond this many bases needs a table too large
/// to pay off; larger products fall back to one exponentiation per base.
const MAX_SIMULTANEOUS: usize = 4;

impl TargetElement {
    pub const BYTES: usize = 6 * 48;

    pub fn identity() -> Self {
        TargetElement(Gt::identity())
    }

    /// `e(g1, g2)` for the fixed generators.
    pub fn generator() -> Self {
        TargetElement(Gt::generator())
    }

    pub fn is_identity(&self) -> bool {
        bool::from(self.0.is_identity())
    }

    /// `self^k`; one counted exponentiation.
    pub fn exp(&self, k: &Scalar) -> TargetElement {
        metrics::target_exp(1);
        TargetElement(self.0 * k.0)
    }

    /// `prod base_i^k_i` by simultaneous square-and-multiply.
    pub fn multi_exp(terms: &[(&TargetElement, Scalar)]) -> TargetElement {
        if terms.is_empty() {
            return TargetElement::identity();
        }
        metrics::target_exp(terms.len() as u64);
        if terms.len() > MAX_SIMULTANEOUS {
            return TargetElement(terms.iter().fold(Gt::identity(), |acc, (b, k)| acc + b.0 * k.0));
        }
        // table[mask] = product of the bases selected by mask
        let mut table = vec![Gt::identity(); 1 << terms.len()];
        for mask in 1..table.len() {
            let low = mask.trailing_zeros() as usize;
            table[mask] = table[mask & (mask - 1)] + terms[low].0 .0;
        }
        let bits: Vec<Vec<bool>> = terms.iter().map(|(_, k)| k.bits_be().collect()).collect();
        let mut acc = Gt::identity();
        for i in 0..256 {
            acc = acc.double();
            let mask = bits
                .iter()
                .enumerate()
                .fold(0usize, |m, (t, b)| if b[i] { m | (1 << t) } else { m });
            if mask != 0 {
                acc += table[mask];
            }
        }
        TargetElement(acc)
    }

    pub fn inverse(&self) -> TargetElement {
        TargetElement(-self.0)
    }

    /// The backend's torus compression (six little-endian `Fp` words). The
    /// identity has no compressed form and is written as all zeros, which is
    /// not a valid compression of anything else.
    pub fn to_bytes(&self) -> [u8; Self::BYTES] {
        let mut out = [0u8; Self::BYTES];
        if !self.is_identity() {
            self.0
                .write_compressed(&mut out[..])
                .expect("buffer has the compressed size");
        }
        out
    }

    /// Accepts only canonical encodings of elements of the order-`p`
    /// subgroup.
    pub fn from_bytes(bytes: &[u8]) -> Result<TargetElement> {
        if bytes.len() != Self::BYTES {
            return Err(Error::Decode(format!(
                "target element needs {} bytes, got {}",
                Self::BYTES,
                bytes.len()
            )));
        }
        if bytes.iter().all(|&b| b == 0) {
            return Ok(TargetElement::identity());
        }
        let t = Gt::read_compressed(bytes).map(TargetElement).map_err(|_| Error::InvalidElement)?;
        if t.is_identity() || t.to_bytes()[..] != bytes[..] {
            return Err(Error::InvalidElement);
        }
        Ok(t)
    }
}

// blstrs writes the target group additively.
impl Mul for TargetElement {
    type Output = TargetElement;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, rhs: TargetElement) -> TargetElement {
        TargetElement(self.0 + rhs.0)
    }
}

impl fmt::Debug for TargetElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let bytes = self.to_bytes();
        write!(f, "TargetElement({}..)", hex::encode(&bytes[..8]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn exponent_laws() {
        let gt = TargetElement::generator();
        assert!(gt.exp(&Scalar::zero()).is_identity());
        assert_eq!(gt.exp(&Scalar::from_u64(3)) * gt.exp(&Scalar::from_u64(4)), gt.exp(&Scalar::from_u64(7)));
        assert_eq!(gt * TargetElement::identity(), gt);
        assert!((gt * gt.inverse()).is_identity());
    }

    #[test]
    fn multi_exp_matches_product() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let gt = TargetElement::generator();
        let bases: Vec<TargetElement> = (0..6).map(|_| gt.exp(&Scalar::random(&mut rng))).collect();
        let ks: Vec<Scalar> = (0..6).map(|_| Scalar::random(&mut rng)).collect();
        for n in 1..=6 {
            let terms: Vec<(&TargetElement, Scalar)> = bases[..n].iter().zip(ks.iter().copied()).collect();
            let expected = terms.iter().fold(TargetElement::identity(), |acc, (b, k)| acc * b.exp(k));
            assert_eq!(TargetElement::multi_exp(&terms), expected, "n = {n}");
        }
    }

    #[test]
    fn serialization() {
        let mut rng = ChaCha20Rng::seed_from_u64(12);
        let t = TargetElement::generator().exp(&Scalar::random(&mut rng));
        let bytes = t.to_bytes();
        assert_eq!(TargetElement::from_bytes(&bytes).unwrap(), t);
        let id = TargetElement::identity();
        assert_eq!(TargetElement::from_bytes(&id.to_bytes()).unwrap(), id);
        assert!(matches!(TargetElement::from_bytes(&bytes[1..]), Err(Error::Decode(_))));
        let mut bad = bytes;
        bad[100] ^= 1;
        assert!(matches!(TargetElement::from_bytes(&bad), Err(Error::InvalidElement)));
        assert!(matches!(TargetElement::from_bytes(&[0xff; TargetElement::BYTES]), Err(Error::InvalidElement)));
    }
}
