//! Pairing arithmetic over BLS12-381 exposed through a symmetric-pairing
//! signature `e: G x G -> GT`.
//!
//! A [`SourceElement`] carries one point in G1 (`left`) and one in G2
//! (`right`). Elements derived from the generator by exponentiation hold the
//! same discrete log in both halves, so `pair(x, y) = pair(y, x)` for them.
//! Hashed elements are hashed into each group independently and do not share
//! a discrete log between halves, so [`pair`] always reads the left half of
//! its first argument and the right half of its second, and the scheme fixes
//! which operand goes first:
//!
//! | pairing                    | first (left half)      | second (right half) |
//! |----------------------------|------------------------|---------------------|
//! | hidden label (owner)       | `(g^beta)^a`           | `F(j)`              |
//! | hidden label (user)        | `h = g^a`              | `K3 = F(j)^beta`    |
//! | cloud decryption, term 1   | `C2 = g^-r`            | `K1`                |
//! | cloud decryption, term 2   | `C3 * g^C6`            | `H(gid)^x`          |
//! | cloud decryption, term 3   | `K2 = g^t`             | `C4 = F(j)^r`       |
//! | user key check             | `g^x` / `g`            | `H(gid)` / `H(gid)^x` |
//! | pool entry check           | `C2` / `g`             | `F(j)` / `C4`       |
//!
//! Hash-derived values (`H(gid)`, `F(j)` and anything multiplied by them:
//! `K1`, `K3`, `C4`, `H(gid)^x`) only ever appear on the right.

mod hash;
mod scalar;
mod source;
mod target;

pub use hash::{Digest32, HashSuite};
pub use scalar::Scalar;
pub use source::SourceElement;
pub use target::TargetElement;

use blstrs::{Bls12, G1Affine, G2Prepared};
use group::Curve;
use pairing::{MillerLoopResult, MultiMillerLoop};

use crate::metrics;

/// `e(x, y)`, evaluated on `x.left` and `y.right`.
pub fn pair(x: &SourceElement, y: &SourceElement) -> TargetElement {
    metrics::pairings(1);
    TargetElement(blstrs::pairing(&x.left.to_affine(), &y.right.to_affine()))
}

/// Product of pairings sharing one final exponentiation. Counts one pairing
/// per term.
pub fn pair_product(terms: &[(&SourceElement, &SourceElement)]) -> TargetElement {
    metrics::pairings(terms.len() as u64);
    let lefts: Vec<G1Affine> = terms.iter().map(|(x, _)| x.left.to_affine()).collect();
    let rights: Vec<G2Prepared> = terms
        .iter()
        .map(|(_, y)| G2Prepared::from(y.right.to_affine()))
        .collect();
    let refs: Vec<(&G1Affine, &G2Prepared)> = lefts.iter().zip(rights.iter()).collect();
    TargetElement(Bls12::multi_miller_loop(&refs).final_exponentiation())
}

/// Checks that both halves of `x` carry the same discrete log relative to the
/// generator, i.e. `e(x.left, g2) = e(g1, x.right)`.
pub fn is_dual_consistent(x: &SourceElement) -> bool {
    let g = SourceElement::generator();
    pair(x, &g) == pair(&g, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn rng() -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(42)
    }

    #[test]
    fn bilinearity_on_small_exponents() {
        let g = SourceElement::generator();
        let lhs = pair(&g.exp(&Scalar::from_u64(2)), &g.exp(&Scalar::from_u64(7)));
        let rhs = pair(&g, &g).exp(&Scalar::from_u64(14));
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn bilinearity_random() {
        let mut rng = rng();
        let g = SourceElement::generator();
        for _ in 0..3 {
            let a = Scalar::random(&mut rng);
            let b = Scalar::random(&mut rng);
            assert_eq!(pair(&g.exp(&a), &g.exp(&b)), pair(&g, &g).exp(&(a * b)));
        }
    }

    #[test]
    fn pairing_is_symmetric_on_dual_elements() {
        let mut rng = rng();
        let g = SourceElement::generator();
        let x = g.exp(&Scalar::random(&mut rng));
        let y = g.exp(&Scalar::random(&mut rng));
        assert_eq!(pair(&x, &y), pair(&y, &x));
    }

    #[test]
    fn pairing_with_identity() {
        let g = SourceElement::generator();
        assert!(pair(&SourceElement::identity(), &g).is_identity());
        assert!(pair(&g, &SourceElement::identity()).is_identity());
    }

    #[test]
    fn pair_product_matches_individual_pairings() {
        let mut rng = rng();
        let g = SourceElement::generator();
        let xs: Vec<SourceElement> = (0..3).map(|_| g.exp(&Scalar::random(&mut rng))).collect();
        let f = HashSuite::default().hash_attribute("aa1:doctor").unwrap();
        let expected = pair(&xs[0], &f) * pair(&xs[1], &g) * pair(&xs[2], &f);
        let got = pair_product(&[(&xs[0], &f), (&xs[1], &g), (&xs[2], &f)]);
        assert_eq!(got, expected);
    }

    #[test]
    fn derived_elements_are_dual_consistent() {
        let mut rng = rng();
        let g = SourceElement::generator();
        let a = Scalar::random(&mut rng);
        let b = Scalar::random(&mut rng);
        let x = g.exp(&a);
        assert!(is_dual_consistent(&x));
        assert!(is_dual_consistent(&(x * g.exp(&b))));
        assert!(is_dual_consistent(&x.exp(&b).inverse()));
        assert!(is_dual_consistent(&SourceElement::multi_exp(&[(&g, a), (&x, b)])));
    }

    #[test]
    fn hashed_elements_pair_consistently_on_designated_side() {
        let mut rng = rng();
        let g = SourceElement::generator();
        let f = HashSuite::default().hash_attribute("aa1:doctor").unwrap();
        let beta = Scalar::random(&mut rng);
        let a = Scalar::random(&mut rng);
        // e((g^beta)^a, F) = e(g^a, F^beta)
        assert_eq!(
            pair(&g.exp(&beta).exp(&a), &f),
            pair(&g.exp(&a), &f.exp(&beta))
        );
    }

    #[test]
    fn metered_operations() {
        let meter = metrics::Meter::new();
        let g = SourceElement::generator();
        meter.run("t", || {
            let x = g.exp(&Scalar::from_u64(3));
            let _ = pair(&x, &g);
            let _ = pair_product(&[(&x, &g), (&g, &x)]);
            let _ = SourceElement::multi_exp(&[(&g, Scalar::from_u64(2)), (&x, Scalar::from_u64(5))]);
        });
        let t = meter.tally("t");
        assert_eq!(t.pairings, 3);
        assert_eq!(t.source_exp, 3);
        assert_eq!(t.source_exp_collapsed, 2);
        assert_eq!(t.exps_raw(), 6);
    }
}
