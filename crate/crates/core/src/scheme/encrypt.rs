use std::collections::{BTreeMap, BTreeSet};

use rand::{CryptoRng, RngCore};

use super::keys::PublicKeys;
use super::{se, GlobalParams};
use crate::codec::{Decode, Encode, Reader, Writer};
use crate::error::{Error, Result};
use crate::group::{pair, Scalar, SourceElement, TargetElement};
use crate::ids::{Attribute, HiddenLabel};
use crate::lsss::{AccessStructure, PolicyNode};
use crate::metrics;

/// One precomputed row: `C1 = e(g,g)^lambda' (e(g,g)^alpha)^r`,
/// `C2 = g^-r`, `C3 = (g^y)^r g^w'`, `C4 = F(j)^r`.
#[derive(Clone, Debug)]
pub struct PoolEntry {
    pub lambda_p: Scalar,
    pub w_p: Scalar,
    pub c1: TargetElement,
    pub c2: SourceElement,
    pub c3: SourceElement,
    pub c4: SourceElement,
    pub used: bool,
    /// Only filled in with the `trace` feature; never encoded.
    pub r: Option<Scalar>,
}

// `r` is bookkeeping and is left out of comparisons.
impl PartialEq for PoolEntry {
    fn eq(&self, other: &Self) -> bool {
        self.to_bytes() == other.to_bytes()
    }
}

impl Eq for PoolEntry {}

impl PoolEntry {
    /// `e(C2, F(j)) * e(g, C4) = 1`
    pub fn is_well_formed(&self, gp: &GlobalParams, attribute: &Attribute) -> Result<bool> {
        let f = gp.hashes().hash_attribute(attribute.as_str())?;
        Ok((pair(&self.c2, &f) * pair(gp.generator(), &self.c4)).is_identity())
    }
}

/// The data owner's offline pool, keyed by attribute.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IntermediateCiphertext {
    pub pools: BTreeMap<Attribute, Vec<PoolEntry>>,
}

impl IntermediateCiphertext {
    pub fn new() -> Self {
        IntermediateCiphertext::default()
    }

    /// Unused entries for `attribute`.
    pub fn available(&self, attribute: &Attribute) -> usize {
        self.pools.get(attribute).map_or(0, |p| p.iter().filter(|e| !e.used).count())
    }

    pub fn consumed(&self) -> usize {
        self.pools.values().flatten().filter(|e| e.used).count()
    }

    pub fn extend(&mut self, other: IntermediateCiphertext) {
        for (a, entries) in other.pools {
            self.pools.entry(a).or_default().extend(entries);
        }
    }

    /// Drops consumed entries.
    pub fn compact(&mut self) {
        for pool in self.pools.values_mut() {
            pool.retain(|e| !e.used);
        }
        self.pools.retain(|_, p| !p.is_empty());
    }

    fn take(&mut self, attribute: &Attribute) -> Option<PoolEntry> {
        let entry = self.pools.get_mut(attribute)?.iter_mut().find(|e| !e.used)?;
        entry.used = true;
        Some(entry.clone())
    }
}

fn authority_key<'a>(pks: &'a PublicKeys, a: &Attribute) -> Result<&'a super::AuthorityPublicKey> {
    pks.get(&a.authority())
        .ok_or_else(|| Error::UnknownAuthority(a.authority().to_string()))
}

/// Precomputes `count` pool entries for each attribute in `attrs`.
pub fn offline_enc<R: RngCore + CryptoRng + ?Sized>(
    gp: &GlobalParams,
    pks: &PublicKeys,
    attrs: &[Attribute],
    count: usize,
    rng: &mut R,
) -> Result<IntermediateCiphertext> {
    for a in attrs {
        authority_key(pks, a)?;
    }
    metrics::section("offline.enc", || {
        let mut ic = IntermediateCiphertext::new();
        let g = gp.generator();
        for a in attrs {
            let pk = authority_key(pks, a)?;
            let f = gp.hashes().hash_attribute(a.as_str())?;
            let pool = ic.pools.entry(a.clone()).or_default();
            for _ in 0..count {
                let lambda_p = Scalar::random(rng);
                let r = Scalar::random(rng);
                let w_p = Scalar::random(rng);
                pool.push(PoolEntry {
                    lambda_p,
                    w_p,
                    c1: TargetElement::multi_exp(&[(gp.egg(), lambda_p), (&pk.egg_alpha, r)]),
                    c2: g.exp(&-r),
                    c3: SourceElement::multi_exp(&[(&pk.g_y, r), (g, w_p)]),
                    c4: f.exp(&r),
                    used: false,
                    r: cfg!(feature = "trace").then_some(r),
                });
            }
        }
        Ok(ic)
    })
}

/// `(C1, C2, C3, C4, C5, C6)` for one matrix row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CiphertextRow {
    pub c1: TargetElement,
    pub c2: SourceElement,
    pub c3: SourceElement,
    pub c4: SourceElement,
    pub c5: Scalar,
    pub c6: Scalar,
}

/// A complete ciphertext. Rows are aligned with `access.rows()`, whose
/// labels are hidden labels rather than attribute names.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ciphertext {
    pub access: AccessStructure<HiddenLabel>,
    pub c0: TargetElement,
    pub h: SourceElement,
    pub c_se: Vec<u8>,
    pub vk_m: [u8; 32],
    pub rows: Vec<CiphertextRow>,
}

impl Ciphertext {
    pub fn hidden_labels(&self) -> BTreeSet<HiddenLabel> {
        self.access.labels().copied().collect()
    }
}

/// Randomness behind one ciphertext, for oracle tests.
#[derive(Clone, Debug)]
pub struct EncryptionTrace {
    pub a: Scalar,
    pub s: Scalar,
    pub v: Vec<Scalar>,
    pub w: Vec<Scalar>,
    pub lambdas: Vec<Scalar>,
    pub ws: Vec<Scalar>,
    /// Per row: the pool entry's `r`, when it was recorded.
    pub r: Vec<Option<Scalar>>,
    pub lambda_p: Vec<Scalar>,
    pub w_p: Vec<Scalar>,
    /// Per row: the attribute and its hidden label on the owner side.
    pub labels: Vec<(Attribute, HiddenLabel)>,
    pub r_target: TargetElement,
}

/// Encrypts `message` under `policy`, consuming one pool entry per policy
/// leaf. Fails with `PoolEmpty` before consuming anything if some leaf has
/// no unused entry.
pub fn online_enc<R: RngCore + CryptoRng + ?Sized>(
    gp: &GlobalParams,
    pks: &PublicKeys,
    message: &[u8],
    ic: &mut IntermediateCiphertext,
    policy: &PolicyNode,
    rng: &mut R,
) -> Result<Ciphertext> {
    encrypt(gp, pks, message, ic, policy, rng).map(|(ct, _)| ct)
}

/// [`online_enc`] that also returns the randomness it used.
#[cfg(feature = "trace")]
pub fn online_enc_traced<R: RngCore + CryptoRng + ?Sized>(
    gp: &GlobalParams,
    pks: &PublicKeys,
    message: &[u8],
    ic: &mut IntermediateCiphertext,
    policy: &PolicyNode,
    rng: &mut R,
) -> Result<(Ciphertext, EncryptionTrace)> {
    encrypt(gp, pks, message, ic, policy, rng)
}

fn encrypt<R: RngCore + CryptoRng + ?Sized>(
    gp: &GlobalParams,
    pks: &PublicKeys,
    message: &[u8],
    ic: &mut IntermediateCiphertext,
    policy: &PolicyNode,
    rng: &mut R,
) -> Result<(Ciphertext, EncryptionTrace)> {
    let compiled = AccessStructure::compile(policy)?;
    for a in compiled.labels() {
        authority_key(pks, a)?;
        if ic.available(a) == 0 {
            return Err(Error::PoolEmpty(a.to_string()));
        }
    }
    let g = gp.generator();

    let a = Scalar::random(rng);
    let labels: BTreeMap<Attribute, HiddenLabel> = metrics::section("online.hiding", || {
        compiled
            .labels()
            .map(|attr| {
                let pk = authority_key(pks, attr)?;
                let f = gp.hashes().hash_attribute(attr.as_str())?;
                let sigma = pair(&pk.g_beta.exp(&a), &f);
                Ok((attr.clone(), HiddenLabel(gp.hashes().label_from_target(&sigma))))
            })
            .collect::<Result<_>>()
    })?;
    let access = compiled.map_labels(|attr| labels[attr]);

    let s = Scalar::random(rng);
    let shares = compiled.share(s, rng);
    let r_target = metrics::section("online.sampling", || gp.egg().exp(&Scalar::random(rng)));
    let (h, egg_s) = metrics::section("online.assembly", || (g.exp(&a), gp.egg().exp(&s)));

    let mut rows = Vec::with_capacity(compiled.len());
    let mut trace_r = Vec::new();
    let mut lambda_p = Vec::new();
    let mut w_p = Vec::new();
    for (j, row) in compiled.rows().iter().enumerate() {
        let entry = ic.take(&row.label).expect("availability checked above");
        rows.push(CiphertextRow {
            c1: entry.c1,
            c2: entry.c2,
            c3: entry.c3,
            c4: entry.c4,
            c5: shares.shares.lambdas[j] - entry.lambda_p,
            c6: shares.shares.ws[j] - entry.w_p,
        });
        trace_r.push(entry.r);
        lambda_p.push(entry.lambda_p);
        w_p.push(entry.w_p);
    }

    let (c_se, vk_m) = metrics::section("online.symmetric", || {
        let key = gp.hashes().key_from_target(&r_target);
        let c_se = se::seal(&key, message, &[], rng);
        let tag = gp.hashes().label_from_target(&r_target);
        let vk_m = gp.hashes().digest(&[&tag, &c_se]);
        (c_se, vk_m)
    });

    let ct = Ciphertext {
        access,
        c0: r_target * egg_s,
        h,
        c_se,
        vk_m,
        rows,
    };
    let trace = EncryptionTrace {
        a,
        s,
        v: shares.v,
        w: shares.w,
        lambdas: shares.shares.lambdas,
        ws: shares.shares.ws,
        r: trace_r,
        lambda_p,
        w_p,
        labels: compiled.rows().iter().map(|r| (r.label.clone(), labels[&r.label])).collect(),
        r_target,
    };
    Ok((ct, trace))
}

impl Encode for PoolEntry {
    fn encode(&self, w: &mut Writer) {
        w.scalar(&self.lambda_p)
            .scalar(&self.w_p)
            .target(&self.c1)
            .source(&self.c2)
            .source(&self.c3)
            .source(&self.c4)
            .u8(self.used as u8);
    }
}

impl Decode for PoolEntry {
    fn decode(r: &mut Reader<'_>) -> Result<Self> {
        let entry = PoolEntry {
            lambda_p: r.scalar()?,
            w_p: r.scalar()?,
            c1: r.target()?,
            c2: r.source()?,
            c3: r.source()?,
            c4: r.source()?,
            used: match r.u8()? {
                0 => false,
                1 => true,
                b => return Err(Error::Decode(format!("bad flag {b}"))),
            },
            r: None,
        };
        Ok(entry)
    }
}

impl Encode for IntermediateCiphertext {
    fn encode(&self, w: &mut Writer) {
        w.len(self.pools.len());
        for (a, entries) in &self.pools {
            w.put(a).seq(entries);
        }
    }
}

impl Decode for IntermediateCiphertext {
    fn decode(r: &mut Reader<'_>) -> Result<Self> {
        let n = r.len(1)?;
        let mut pools: BTreeMap<Attribute, Vec<PoolEntry>> = BTreeMap::new();
        for _ in 0..n {
            let a: Attribute = r.get()?;
            let entries = r.seq()?;
            if pools.last_key_value().is_some_and(|(last, _)| *last >= a) {
                return Err(Error::Decode("pool keys out of order".into()));
            }
            pools.insert(a, entries);
        }
        Ok(IntermediateCiphertext { pools })
    }
}

impl Encode for CiphertextRow {
    fn encode(&self, w: &mut Writer) {
        w.target(&self.c1)
            .source(&self.c2)
            .source(&self.c3)
            .source(&self.c4)
            .scalar(&self.c5)
            .scalar(&self.c6);
    }
}

impl Decode for CiphertextRow {
    fn decode(r: &mut Reader<'_>) -> Result<Self> {
        Ok(CiphertextRow {
            c1: r.target()?,
            c2: r.source()?,
            c3: r.source()?,
            c4: r.source()?,
            c5: r.scalar()?,
            c6: r.scalar()?,
        })
    }
}

impl Encode for Ciphertext {
    fn encode(&self, w: &mut Writer) {
        w.put(&self.access)
            .target(&self.c0)
            .source(&self.h)
            .bytes(&self.c_se)
            .fixed(&self.vk_m)
            .seq(&self.rows);
    }
}

impl Decode for Ciphertext {
    fn decode(r: &mut Reader<'_>) -> Result<Self> {
        let ct = Ciphertext {
            access: r.get()?,
            c0: r.target()?,
            h: r.source()?,
            c_se: r.bytes()?.to_vec(),
            vk_m: r.array()?,
            rows: r.seq()?,
        };
        if ct.rows.len() != ct.access.len() {
            return Err(Error::Decode(format!(
                "{} ciphertext rows for a {}-row matrix",
                ct.rows.len(),
                ct.access.len()
            )));
        }
        Ok(ct)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::AuthorityId;
    use crate::metrics::Meter;
    use crate::scheme::{authority_setup, global_setup, AuthorityKeys};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn fixture() -> (GlobalParams, Vec<AuthorityKeys>, PublicKeys, ChaCha20Rng) {
        let gp = global_setup(128).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let aks: Vec<_> = ["aa1", "aa2"]
            .iter()
            .map(|id| authority_setup(&gp, &AuthorityId::new(id).unwrap(), &mut rng))
            .collect();
        let pks = aks.iter().map(|k| (k.id.clone(), k.public.clone())).collect();
        (gp, aks, pks, rng)
    }

    fn attrs(names: &[&str]) -> Vec<Attribute> {
        names.iter().map(|n| Attribute::new(n).unwrap()).collect()
    }

    #[test]
    fn pool_entries_are_well_formed() {
        let (gp, _, pks, mut rng) = fixture();
        let list = attrs(&["aa1:x", "aa2:y"]);
        let ic = offline_enc(&gp, &pks, &list, 2, &mut rng).unwrap();
        for a in &list {
            assert_eq!(ic.available(a), 2);
            for e in &ic.pools[a] {
                assert!(e.is_well_formed(&gp, a).unwrap());
            }
        }
        let empty = offline_enc(&gp, &pks, &list, 0, &mut rng).unwrap();
        assert_eq!(empty.available(&list[0]), 0);
        assert!(matches!(
            offline_enc(&gp, &pks, &attrs(&["aa9:z"]), 1, &mut rng),
            Err(Error::UnknownAuthority(_))
        ));
    }

    #[test]
    fn offline_counts_per_row() {
        let (gp, _, pks, mut rng) = fixture();
        let meter = Meter::new();
        meter.run("test", || offline_enc(&gp, &pks, &attrs(&["aa1:x"]), 3, &mut rng).unwrap());
        let t = meter.tally("offline.enc");
        assert_eq!(t.exps(), 18);
        assert_eq!(t.exps_collapsed(), 12);
    }

    #[test]
    fn online_consumes_and_checks_pool() {
        let (gp, _, pks, mut rng) = fixture();
        let mut ic = offline_enc(&gp, &pks, &attrs(&["aa1:x", "aa2:y"]), 1, &mut rng).unwrap();
        let policy: PolicyNode = "aa1:x AND aa2:y".parse().unwrap();
        let ct = online_enc(&gp, &pks, b"hello", &mut ic, &policy, &mut rng).unwrap();
        assert_eq!(ct.rows.len(), 2);
        assert_eq!(ic.consumed(), 2);
        assert_eq!(Ciphertext::from_bytes(&ct.to_bytes()).unwrap(), ct);

        let before = ic.clone();
        assert!(matches!(
            online_enc(&gp, &pks, b"hello", &mut ic, &policy, &mut rng),
            Err(Error::PoolEmpty(_))
        ));
        assert_eq!(ic, before);
        assert_eq!(IntermediateCiphertext::from_bytes(&ic.to_bytes()).unwrap(), ic);
    }

    #[test]
    fn ciphertext_size_formula() {
        let (gp, _, pks, mut rng) = fixture();
        let mut ic = offline_enc(&gp, &pks, &attrs(&["aa1:x", "aa2:y", "aa1:z"]), 1, &mut rng).unwrap();
        let policy: PolicyNode = "(aa1:x AND aa2:y) OR aa1:z".parse().unwrap();
        let ct = online_enc(&gp, &pks, b"m", &mut ic, &policy, &mut rng).unwrap();
        let t = ct.element_tally();
        assert_eq!(t.group_elements(), 4 * 3 + 2);
        assert_eq!(t.scalars, 2 * 3);
    }
}
