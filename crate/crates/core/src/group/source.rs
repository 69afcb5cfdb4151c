use std::fmt;
use std::ops::Mul;

use blstrs::{G1Affine, G1Projective, G2Affine, G2Projective};
use group::{Curve, Group};

use super::Scalar;
use crate::error::{Error, Result};
use crate::metrics;

/// An element of the symmetric source group `G`, held as a synchronized pair
/// of points in G1 and G2.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct SourceElement {
    pub(crate) left: G1Projective,
    pub(crate) right: G2Projective,
}

impl SourceElement {
    /// Compressed G1 point followed by compressed G2 point.
    pub const BYTES: usize = 48 + 96;

    pub fn generator() -> Self {
        SourceElement {
            left: G1Projective::generator(),
            right: G2Projective::generator(),
        }
    }

    pub fn identity() -> Self {
        SourceElement {
            left: G1Projective::identity(),
            right: G2Projective::identity(),
        }
    }

    pub(crate) fn from_halves(left: G1Projective, right: G2Projective) -> Self {
        SourceElement { left, right }
    }

    pub fn is_identity(&self) -> bool {
        bool::from(self.left.is_identity()) && bool::from(self.right.is_identity())
    }

    /// `self^k`; one counted exponentiation.
    pub fn exp(&self, k: &Scalar) -> SourceElement {
        metrics::source_exp(1);
        SourceElement {
            left: self.left * k.0,
            right: self.right * k.0,
        }
    }

    /// `prod base_i^k_i` as one multi-exponentiation.
    pub fn multi_exp(terms: &[(&SourceElement, Scalar)]) -> SourceElement {
        if terms.is_empty() {
            return SourceElement::identity();
        }
        metrics::source_exp(terms.len() as u64);
        let lefts: Vec<G1Projective> = terms.iter().map(|(b, _)| b.left).collect();
        let rights: Vec<G2Projective> = terms.iter().map(|(b, _)| b.right).collect();
        let ks: Vec<blstrs::Scalar> = terms.iter().map(|(_, k)| k.0).collect();
        SourceElement {
            left: G1Projective::multi_exp(&lefts, &ks),
            right: G2Projective::multi_exp(&rights, &ks),
        }
    }

    pub fn inverse(&self) -> SourceElement {
        SourceElement {
            left: -self.left,
            right: -self.right,
        }
    }

    pub fn to_bytes(&self) -> [u8; Self::BYTES] {
        let mut out = [0u8; Self::BYTES];
        out[..48].copy_from_slice(&self.left.to_affine().to_compressed());
        out[48..].copy_from_slice(&self.right.to_affine().to_compressed());
        out
    }

    /// Both halves must be valid compressed points in the prime-order
    /// subgroups.
    pub fn from_bytes(bytes: &[u8]) -> Result<SourceElement> {
        if bytes.len() != Self::BYTES {
            return Err(Error::Decode(format!(
                "source element needs {} bytes, got {}",
                Self::BYTES,
                bytes.len()
            )));
        }
        let l: [u8; 48] = bytes[..48].try_into().expect("length checked");
        let r: [u8; 96] = bytes[48..].try_into().expect("length checked");
        let left: Option<G1Affine> = G1Affine::from_compressed(&l).into();
        let right: Option<G2Affine> = G2Affine::from_compressed(&r).into();
        match (left, right) {
            (Some(l), Some(r)) => Ok(SourceElement {
                left: l.into(),
                right: r.into(),
            }),
            _ => Err(Error::InvalidElement),
        }
    }
}

impl Mul for SourceElement {
    type Output = SourceElement;
    fn mul(self, rhs: SourceElement) -> SourceElement {
        SourceElement {
            left: self.left + rhs.left,
            right: self.right + rhs.right,
        }
    }
}

impl fmt::Debug for SourceElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let bytes = self.to_bytes();
        write!(f, "SourceElement({}..)", hex::encode(&bytes[..8]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn exp_zero_is_identity() {
        assert!(SourceElement::generator().exp(&Scalar::zero()).is_identity());
    }

    #[test]
    fn nested_exp_multiplies_exponents() {
        let g = SourceElement::generator();
        let lhs = g.exp(&Scalar::from_u64(3)).exp(&Scalar::from_u64(5));
        assert_eq!(lhs, g.exp(&Scalar::from_u64(15)));
    }

    #[test]
    fn identity_is_neutral() {
        let x = SourceElement::generator().exp(&Scalar::from_u64(9));
        assert_eq!(x * SourceElement::identity(), x);
        assert!((x * x.inverse()).is_identity());
    }

    #[test]
    fn multi_exp_matches_product() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let g = SourceElement::generator();
        let x = g.exp(&Scalar::random(&mut rng));
        let (a, b) = (Scalar::random(&mut rng), Scalar::random(&mut rng));
        assert_eq!(SourceElement::multi_exp(&[(&g, a), (&x, b)]), g.exp(&a) * x.exp(&b));
        assert_eq!(SourceElement::multi_exp(&[(&x, b)]), x.exp(&b));
        assert!(SourceElement::multi_exp(&[]).is_identity());
    }

    #[test]
    fn serialization() {
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let x = SourceElement::generator().exp(&Scalar::random(&mut rng));
        let bytes = x.to_bytes();
        assert_eq!(bytes.len(), SourceElement::BYTES);
        assert_eq!(SourceElement::from_bytes(&bytes).unwrap(), x);
        assert_eq!(
            SourceElement::from_bytes(&SourceElement::identity().to_bytes()).unwrap(),
            SourceElement::identity()
        );
        assert!(matches!(SourceElement::from_bytes(&bytes[..100]), Err(Error::Decode(_))));
        let mut bad = bytes;
        bad[5] ^= 0x40;
        bad[60] ^= 0x01;
        assert!(matches!(SourceElement::from_bytes(&bad), Err(Error::InvalidElement)));
    }
}
