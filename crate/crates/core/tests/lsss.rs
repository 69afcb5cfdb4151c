use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use vfac_core::lsss::AccessStructure;
use vfac_core::{Attribute, PolicyNode, Scalar};

const NAMES: [&str; 8] = ["aa1:a", "aa2:b", "aa1:c", "aa3:d", "aa2:e", "aa1:f", "aa4:g", "aa3:h"];

/// Random formula over distinct leaves drawn from `NAMES`.
fn policy() -> impl Strategy<Value = PolicyNode> {
    let leaf = Just(()).prop_map(|_| PolicyNode::Leaf(Attribute::new("aa1:a").unwrap()));
    leaf.prop_recursive(3, 8, 3, |inner| {
        (any::<bool>(), prop::collection::vec(inner, 2..4))
            .prop_map(|(and, c)| if and { PolicyNode::And(c) } else { PolicyNode::Or(c) })
    })
    .prop_filter_map("too many leaves", |p| {
        let n = p.leaves().len();
        (n <= NAMES.len()).then(|| rename(&p, &mut 0))
    })
}

fn rename(p: &PolicyNode, next: &mut usize) -> PolicyNode {
    match p {
        PolicyNode::Leaf(_) => {
            *next += 1;
            PolicyNode::Leaf(Attribute::new(NAMES[*next - 1]).unwrap())
        }
        PolicyNode::And(c) => PolicyNode::And(c.iter().map(|n| rename(n, next)).collect()),
        PolicyNode::Or(c) => PolicyNode::Or(c.iter().map(|n| rename(n, next)).collect()),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn matrix_agrees_with_formula(p in policy(), mask in 0u32..256, seed in any::<u64>()) {
        let m = AccessStructure::compile(&p).unwrap();
        prop_assert_eq!(m.len(), p.leaves().len());
        prop_assert_eq!(m.width(), p.and_splits() + 1);
        let held: Vec<Attribute> =
            (0..NAMES.len()).filter(|i| mask & (1 << i) != 0).map(|i| Attribute::new(NAMES[i]).unwrap()).collect();
        let refs: BTreeSet<&Attribute> = held.iter().collect();
        let owned: BTreeSet<Attribute> = held.iter().cloned().collect();
        let expected = p.evaluate(&refs);
        prop_assert_eq!(m.is_authorized(&owned), expected);

        let rows: Vec<usize> = m.rows().iter().enumerate().filter(|(_, r)| owned.contains(&r.label)).map(|(i, _)| i).collect();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let s = Scalar::random(&mut rng);
        let shares = m.share(s, &mut rng).shares;
        match m.reconstruct(&rows) {
            Some(c) if expected => {
                let got = c.iter().fold(Scalar::zero(), |acc, (&i, &cj)| acc + cj * shares.lambdas[i]);
                let zero = c.iter().fold(Scalar::zero(), |acc, (&i, &cj)| acc + cj * shares.ws[i]);
                prop_assert_eq!(got, s);
                prop_assert!(zero.is_zero());
            }
            None => prop_assert!(!expected || rows.is_empty()),
            Some(_) => prop_assert!(false, "reconstructed from an unauthorized set"),
        }
    }

    #[test]
    fn text_form_round_trips(p in policy()) {
        let back: PolicyNode = p.to_string().parse().unwrap();
        prop_assert_eq!(AccessStructure::compile(&back).unwrap().len(), p.leaves().len());
        prop_assert_eq!(back.leaves(), p.leaves());
    }
}
