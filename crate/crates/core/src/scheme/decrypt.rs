use std::collections::BTreeMap;

use super::encrypt::Ciphertext;
use super::keys::{KeyList, UserKeys};
use super::{se, GlobalParams};
use crate::codec::{Decode, Encode, Reader, Writer};
use crate::error::{Error, Result};
use crate::group::{pair, pair_product, Scalar, SourceElement, TargetElement};
use crate::ids::{Attribute, Gid, HiddenLabel};
use crate::metrics;

/// `H1(e(h, K3_j))` for each requested attribute.
pub fn derive_labels(
    gp: &GlobalParams,
    usk: &UserKeys,
    h: &SourceElement,
    attrs: &[Attribute],
) -> Result<BTreeMap<Attribute, HiddenLabel>> {
    metrics::section("labels", || {
        attrs
            .iter()
            .map(|a| {
                let k3 = usk
                    .k3
                    .get(a)
                    .ok_or_else(|| Error::MissingAttributeKey(a.to_string()))?;
                Ok((a.clone(), HiddenLabel(gp.hashes().label_from_target(&pair(h, k3)))))
            })
            .collect()
    })
}

/// What the cloud server returns to the user.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialCiphertext {
    pub c0: TargetElement,
    pub c1_gid: TargetElement,
    pub c2_gid: TargetElement,
    pub vk_m: [u8; 32],
    pub c_se: Vec<u8>,
}

impl PartialCiphertext {
    /// `C1_GID * C2_GID^(x^-1)`, which is `e(g,g)^s` on honest inputs.
    pub fn blinding_factor(&self, x_inv: &Scalar) -> TargetElement {
        self.c1_gid * self.c2_gid.exp(x_inv)
    }
}

/// Cloud-side decryption. Rows are matched by hidden label against
/// `labels`, restricted to attributes the cloud holds a key for.
pub fn cs_dec(
    gp: &GlobalParams,
    kt: &KeyList,
    gid: &Gid,
    ct: &Ciphertext,
    labels: &BTreeMap<Attribute, HiddenLabel>,
) -> Result<PartialCiphertext> {
    let entry = kt.get(gid).ok_or_else(|| Error::UnknownUser(gid.to_string()))?;
    let by_label: BTreeMap<&HiddenLabel, &Attribute> = labels
        .iter()
        .filter(|(a, _)| entry.csk.entries.contains_key(*a))
        .map(|(a, l)| (l, a))
        .collect();
    let matched: Vec<(usize, &Attribute)> = ct
        .access
        .rows()
        .iter()
        .enumerate()
        .filter_map(|(i, row)| by_label.get(&row.label).map(|a| (i, *a)))
        .collect();
    let indices: Vec<usize> = matched.iter().map(|(i, _)| *i).collect();
    let coeffs = ct.access.reconstruct(&indices).ok_or(Error::NotSatisfied)?;
    if coeffs.is_empty() {
        return Err(Error::NotSatisfied);
    }

    metrics::section("cs.dec", || {
        let g = gp.generator();
        let mut c1_terms = Vec::with_capacity(coeffs.len());
        let mut c2_terms = Vec::with_capacity(coeffs.len());
        let mut c5_sum = Scalar::zero();
        for &(i, a) in &matched {
            let Some(&c) = coeffs.get(&i) else { continue };
            let row = &ct.rows[i];
            let part = &entry.csk.entries[a];
            c5_sum = c5_sum + c * row.c5;
            let c3_w = row.c3 * g.exp(&row.c6);
            let t = pair_product(&[(&row.c2, &part.k1), (&c3_w, &entry.upk.h_gid_x), (&part.k2, &row.c4)]);
            c1_terms.push((row.c1, c));
            c2_terms.push((t, c));
        }
        let mut c1_refs: Vec<(&TargetElement, Scalar)> = c1_terms.iter().map(|(t, c)| (t, *c)).collect();
        c1_refs.push((gp.egg(), c5_sum));
        let c2_refs: Vec<(&TargetElement, Scalar)> = c2_terms.iter().map(|(t, c)| (t, *c)).collect();
        Ok(PartialCiphertext {
            c0: ct.c0,
            c1_gid: TargetElement::multi_exp(&c1_refs),
            c2_gid: TargetElement::multi_exp(&c2_refs),
            vk_m: ct.vk_m,
            c_se: ct.c_se.clone(),
        })
    })
}

/// Final decryption: one exponentiation by `x^-1`, then the `VK_M` check,
/// then the symmetric layer. Any mismatch is `VerificationFailed`.
pub fn user_dec(gp: &GlobalParams, usk: &UserKeys, pct: &PartialCiphertext) -> Result<Vec<u8>> {
    metrics::section("user.dec", || {
        let egg_s = pct.blinding_factor(&usk.x_inv);
        let r = pct.c0 * egg_s.inverse();
        let tag = gp.hashes().label_from_target(&r);
        if gp.hashes().digest(&[&tag, &pct.c_se]) != pct.vk_m {
            return Err(Error::VerificationFailed);
        }
        se::open(&gp.hashes().key_from_target(&r), &pct.c_se, &[])
    })
}

/// [`user_dec`] on a partial ciphertext as received from the cloud. A
/// response that does not even decode is treated like one that fails the
/// check: `VerificationFailed`.
pub fn user_dec_encoded(gp: &GlobalParams, usk: &UserKeys, pct: &[u8]) -> Result<Vec<u8>> {
    let pct = PartialCiphertext::from_bytes(pct).map_err(|_| Error::VerificationFailed)?;
    user_dec(gp, usk, &pct)
}

impl Encode for PartialCiphertext {
    fn encode(&self, w: &mut Writer) {
        w.target(&self.c0)
            .target(&self.c1_gid)
            .target(&self.c2_gid)
            .fixed(&self.vk_m)
            .bytes(&self.c_se);
    }
}

impl Decode for PartialCiphertext {
    fn decode(r: &mut Reader<'_>) -> Result<Self> {
        Ok(PartialCiphertext {
            c0: r.target()?,
            c1_gid: r.target()?,
            c2_gid: r.target()?,
            vk_m: r.array()?,
            c_se: r.bytes()?.to_vec(),
        })
    }
}
