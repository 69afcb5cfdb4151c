use blstrs::{G1Projective, G2Projective};
use sha2::{Digest, Sha256};

use super::{SourceElement, TargetElement};
use crate::error::{Error, Result};
use crate::metrics;

pub type Digest32 = [u8; 32];

/// The five domain-separated hash roles:
///
/// * `H`  : user identifiers to `G`
/// * `F`  : attribute names to `G`
/// * `h`  : `GT` to a symmetric key of `key_bits`
/// * `H1` : `GT` to a hidden label / tag of `label_bits`
/// * `H2` : byte strings to a verification digest of `digest_bits`
///
/// Hashing into `G` hashes into G1 and G2 separately (RFC 9380 SSWU) under the
/// role tag with a per-group suffix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HashSuite {
    tags: [Vec<u8>; 5],
    key_bits: u16,
    label_bits: u16,
    digest_bits: u16,
}

const GID: usize = 0;
const ATTRIBUTE: usize = 1;
const KEY: usize = 2;
const LABEL: usize = 3;
const DIGEST: usize = 4;

impl Default for HashSuite {
    fn default() -> Self {
        HashSuite {
            tags: [
                b"VFAC-V01-BLS12381-H-GID".to_vec(),
                b"VFAC-V01-BLS12381-F-ATTR".to_vec(),
                b"VFAC-V01-h-SEKEY".to_vec(),
                b"VFAC-V01-H1-LABEL".to_vec(),
                b"VFAC-V01-H2-VERIFY".to_vec(),
            ],
            key_bits: 256,
            label_bits: 256,
            digest_bits: 256,
        }
    }
}

impl HashSuite {
    /// Tags must be pairwise distinct and every output length must be 256
    /// bits, the only width the SHA-256 instantiation provides.
    pub fn new(tags: [Vec<u8>; 5], key_bits: u16, label_bits: u16, digest_bits: u16) -> Result<Self> {
        for i in 0..tags.len() {
            if tags[i].is_empty() {
                return Err(Error::InvalidInput("empty hash domain tag".into()));
            }
            if tags[i + 1..].contains(&tags[i]) {
                return Err(Error::InvalidInput("hash domain tags must be distinct".into()));
            }
        }
        for bits in [key_bits, label_bits, digest_bits] {
            if bits != 256 {
                return Err(Error::UnsupportedParameter(format!("hash output length {bits}")));
            }
        }
        Ok(HashSuite { tags, key_bits, label_bits, digest_bits })
    }

    pub fn tags(&self) -> &[Vec<u8>; 5] {
        &self.tags
    }

    /// `(l_SE, l_H1, l_H2)` in bits.
    pub fn lengths(&self) -> (u16, u16, u16) {
        (self.key_bits, self.label_bits, self.digest_bits)
    }

    fn to_source(&self, role: usize, msg: &[u8]) -> Result<SourceElement> {
        if msg.is_empty() {
            return Err(Error::InvalidInput("cannot hash an empty string into G".into()));
        }
        metrics::hash();
        let tag = &self.tags[role];
        let dst1 = [tag.as_slice(), b"_G1"].concat();
        let dst2 = [tag.as_slice(), b"_G2"].concat();
        Ok(SourceElement::from_halves(
            G1Projective::hash_to_curve(msg, &dst1, &[]),
            G2Projective::hash_to_curve(msg, &dst2, &[]),
        ))
    }

    fn sha(&self, role: usize, parts: &[&[u8]]) -> Digest32 {
        metrics::hash();
        let mut h = Sha256::new();
        h.update((self.tags[role].len() as u32).to_be_bytes());
        h.update(&self.tags[role]);
        for p in parts {
            h.update(p);
        }
        h.finalize().into()
    }

    /// `H(gid)`.
    pub fn hash_gid(&self, gid: &[u8]) -> Result<SourceElement> {
        self.to_source(GID, gid)
    }

    /// `F(attribute)`.
    pub fn hash_attribute(&self, attribute: &str) -> Result<SourceElement> {
        self.to_source(ATTRIBUTE, attribute.as_bytes())
    }

    /// `h(t)`: symmetric key derivation.
    pub fn key_from_target(&self, t: &TargetElement) -> Digest32 {
        self.sha(KEY, &[&t.to_bytes()])
    }

    /// `H1(t)`: hidden attribute labels and the verification tag.
    pub fn label_from_target(&self, t: &TargetElement) -> Digest32 {
        self.sha(LABEL, &[&t.to_bytes()])
    }

    /// `H2(parts...)` over the concatenation of `parts`.
    pub fn digest(&self, parts: &[&[u8]]) -> Digest32 {
        self.sha(DIGEST, parts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{is_dual_consistent, pair, Scalar};

    #[test]
    fn attribute_hash_is_deterministic_and_separating() {
        let suite = HashSuite::default();
        let a = suite.hash_attribute("aa1:doctor").unwrap();
        assert_eq!(a, suite.hash_attribute("aa1:doctor").unwrap());
        assert_ne!(a, suite.hash_attribute("aa1:nurse").unwrap());
        // same input under a different role lands elsewhere
        assert_ne!(a, suite.hash_gid(b"aa1:doctor").unwrap());
    }

    #[test]
    fn fresh_hashes_are_not_dual_consistent() {
        // The halves are independent; hashed values are only paired
        // through their right half.
        let f = HashSuite::default().hash_attribute("aa1:doctor").unwrap();
        assert!(!is_dual_consistent(&f));
    }

    #[test]
    fn right_half_pairs_bilinearly() {
        let suite = HashSuite::default();
        let f = suite.hash_attribute("aa2:cardiology").unwrap();
        let g = crate::group::SourceElement::generator();
        let k = Scalar::from_u64(11);
        assert_eq!(pair(&g.exp(&k), &f), pair(&g, &f.exp(&k)));
        assert_eq!(pair(&g, &f).exp(&k), pair(&g, &f.exp(&k)));
    }

    #[test]
    fn empty_inputs_rejected() {
        let suite = HashSuite::default();
        assert!(matches!(suite.hash_gid(b""), Err(Error::InvalidInput(_))));
        assert!(matches!(suite.hash_attribute(""), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn output_lengths_and_determinism() {
        let suite = HashSuite::default();
        let t = TargetElement::generator();
        let label = suite.label_from_target(&t);
        assert_eq!(label.len() * 8, suite.lengths().1 as usize);
        assert_eq!(label, suite.label_from_target(&t));
        assert_ne!(label, suite.label_from_target(&t.exp(&Scalar::from_u64(2))));
        assert_ne!(label, suite.key_from_target(&t));
        assert_eq!(suite.digest(&[b"ab", b"c"]), suite.digest(&[b"abc"]));
    }

    #[test]
    fn suite_validation() {
        let d = HashSuite::default();
        let mut tags = d.tags().clone();
        assert!(HashSuite::new(tags.clone(), 256, 256, 256).is_ok());
        assert!(matches!(HashSuite::new(tags.clone(), 128, 256, 256), Err(Error::UnsupportedParameter(_))));
        tags[4] = tags[0].clone();
        assert!(matches!(HashSuite::new(tags, 256, 256, 256), Err(Error::InvalidInput(_))));
    }
}
