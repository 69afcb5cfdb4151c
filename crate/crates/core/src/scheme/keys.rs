use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::{CryptoRng, RngCore};

use super::GlobalParams;
use crate::codec::{Decode, Encode, Reader, Writer};
use crate::error::{Error, Result};
use crate::group::{pair, Scalar, SourceElement, TargetElement};
use crate::ids::{Attribute, AuthorityId, Gid};
use crate::metrics;

/// `(alpha, beta, y)`
#[derive(Clone, PartialEq, Eq)]
pub struct AuthoritySecret {
    pub alpha: Scalar,
    pub beta: Scalar,
    pub y: Scalar,
}

impl fmt::Debug for AuthoritySecret {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("AuthoritySecret(..)")
    }
}

/// `(e(g,g)^alpha, g^beta, g^y)`
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuthorityPublicKey {
    pub egg_alpha: TargetElement,
    pub g_beta: SourceElement,
    pub g_y: SourceElement,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuthorityKeys {
    pub id: AuthorityId,
    pub secret: AuthoritySecret,
    pub public: AuthorityPublicKey,
}

/// Authority public keys indexed by authority id; the authority of an
/// attribute is read from its name prefix.
pub type PublicKeys = BTreeMap<AuthorityId, AuthorityPublicKey>;

pub fn authority_setup<R: RngCore + CryptoRng + ?Sized>(
    gp: &GlobalParams,
    id: &AuthorityId,
    rng: &mut R,
) -> AuthorityKeys {
    metrics::section("authority.setup", || {
        let secret = AuthoritySecret {
            alpha: Scalar::random(rng),
            beta: Scalar::random(rng),
            y: Scalar::random(rng),
        };
        let g = gp.generator();
        let public = AuthorityPublicKey {
            egg_alpha: gp.egg().exp(&secret.alpha),
            g_beta: g.exp(&secret.beta),
            g_y: g.exp(&secret.y),
        };
        AuthorityKeys { id: id.clone(), secret, public }
    })
}

impl AuthorityKeys {
    /// Recomputes the public triple from the secrets.
    pub fn is_consistent(&self, gp: &GlobalParams) -> bool {
        let g = gp.generator();
        self.public.egg_alpha == gp.egg().exp(&self.secret.alpha)
            && self.public.g_beta == g.exp(&self.secret.beta)
            && self.public.g_y == g.exp(&self.secret.y)
    }
}

/// The user's `x`. Needed to open key envelopes; decryption uses `x^-1`.
#[derive(Clone, PartialEq, Eq)]
pub struct UserSecret {
    x: Scalar,
}

impl fmt::Debug for UserSecret {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("UserSecret(..)")
    }
}

impl UserSecret {
    pub fn x(&self) -> &Scalar {
        &self.x
    }

    /// A user key holding `x^-1` and no attribute keys yet.
    pub fn user_keys(&self, gid: &Gid) -> UserKeys {
        UserKeys {
            gid: gid.clone(),
            x_inv: self.x.invert().expect("x is nonzero"),
            k3: BTreeMap::new(),
        }
    }
}

/// `(g^x, H(gid)^x)`
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UserPublicKey {
    pub g_x: SourceElement,
    pub h_gid_x: SourceElement,
}

impl UserPublicKey {
    /// `e(g^x, H(gid)) = e(g, H(gid)^x)`
    pub fn is_well_formed(&self, gp: &GlobalParams, gid: &Gid) -> Result<bool> {
        let h = gp.hashes().hash_gid(gid.as_bytes())?;
        Ok(!self.g_x.is_identity() && pair(&self.g_x, &h) == pair(gp.generator(), &self.h_gid_x))
    }
}

/// `USK = (x^-1, {K3_j})`
#[derive(Clone, PartialEq, Eq)]
pub struct UserKeys {
    pub gid: Gid,
    pub x_inv: Scalar,
    pub k3: BTreeMap<Attribute, SourceElement>,
}

impl fmt::Debug for UserKeys {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("UserKeys")
            .field("gid", &self.gid)
            .field("attributes", &self.k3.keys().collect::<Vec<_>>())
            .finish_non_exhaustive()
    }
}

pub fn user_key_init<R: RngCore + CryptoRng + ?Sized>(
    gp: &GlobalParams,
    gid: &Gid,
    rng: &mut R,
) -> Result<(UserSecret, UserPublicKey)> {
    metrics::section("keygen.user", || {
        let h = gp.hashes().hash_gid(gid.as_bytes())?;
        let x = Scalar::random(rng);
        let upk = UserPublicKey {
            g_x: gp.generator().exp(&x),
            h_gid_x: h.exp(&x),
        };
        Ok((UserSecret { x }, upk))
    })
}

/// `(K1, K2)` for one attribute, held by the cloud server.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CloudKeyPart {
    pub k1: SourceElement,
    pub k2: SourceElement,
}

/// `CSK_{GID,S}`
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CloudUserKey {
    pub entries: BTreeMap<Attribute, CloudKeyPart>,
}

/// Output of one authority's key generation for one user.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IssuedKeys {
    pub cloud: CloudUserKey,
    pub k3: BTreeMap<Attribute, SourceElement>,
    /// The `t_j` exponents; only kept with the `trace` feature.
    #[cfg(feature = "trace")]
    pub t: BTreeMap<Attribute, Scalar>,
}

/// Issues keys for `attrs` to the holder of `upk`:
/// `K1 = (g^x)^alpha (H(gid)^x)^y F(j)^t`, `K2 = g^t`, `K3 = F(j)^beta`.
/// The authority works from `upk` and never sees `x`.
pub fn authority_keygen<R: RngCore + CryptoRng + ?Sized>(
    gp: &GlobalParams,
    ak: &AuthorityKeys,
    gid: &Gid,
    upk: &UserPublicKey,
    attrs: &[Attribute],
    rng: &mut R,
) -> Result<IssuedKeys> {
    metrics::section("keygen.authority", || {
        let mut seen = BTreeSet::new();
        for a in attrs {
            if !a.is_managed_by(&ak.id) {
                return Err(Error::WrongAuthority(a.to_string()));
            }
            if !seen.insert(a) {
                return Err(Error::DuplicateAttribute(a.to_string()));
            }
        }
        let mut issued = IssuedKeys {
            cloud: CloudUserKey::default(),
            k3: BTreeMap::new(),
            #[cfg(feature = "trace")]
            t: BTreeMap::new(),
        };
        if attrs.is_empty() {
            return Ok(issued);
        }
        if !upk.is_well_formed(gp, gid)? {
            return Err(Error::InvalidKey(format!("public key of {gid} fails the pairing check")));
        }
        let s = &ak.secret;
        for a in attrs {
            let f = gp.hashes().hash_attribute(a.as_str())?;
            let t = Scalar::random(rng);
            let k1 = SourceElement::multi_exp(&[(&upk.g_x, s.alpha), (&upk.h_gid_x, s.y), (&f, t)]);
            let k2 = gp.generator().exp(&t);
            issued.cloud.entries.insert(a.clone(), CloudKeyPart { k1, k2 });
            issued.k3.insert(a.clone(), f.exp(&s.beta));
            #[cfg(feature = "trace")]
            issued.t.insert(a.clone(), t);
        }
        Ok(issued)
    })
}

/// One user's row in the key list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeyEntry {
    pub upk: UserPublicKey,
    pub csk: CloudUserKey,
}

/// The cloud server's `KT`: gid to `(CSK, UPK)`. Revoked gids are
/// remembered so they cannot be registered again.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct KeyList {
    entries: BTreeMap<Gid, KeyEntry>,
    revoked: BTreeSet<Gid>,
}

impl KeyList {
    pub fn new() -> Self {
        KeyList::default()
    }

    pub fn get(&self, gid: &Gid) -> Option<&KeyEntry> {
        self.entries.get(gid)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn gids(&self) -> impl Iterator<Item = &Gid> {
        self.entries.keys()
    }

    pub fn is_revoked(&self, gid: &Gid) -> bool {
        self.revoked.contains(gid)
    }

    /// Merges cloud key parts from one or more authorities into `gid`'s
    /// entry. All-or-nothing: an attribute present twice (across `parts` or
    /// against the stored entry) rejects the whole call.
    pub fn register(&mut self, gid: &Gid, upk: &UserPublicKey, parts: &[CloudUserKey]) -> Result<()> {
        let entry = self.prepare_register(gid, upk, parts)?;
        self.entries.insert(gid.clone(), entry);
        Ok(())
    }

    /// The entry [`KeyList::register`] would store, without storing it.
    pub fn prepare_register(&self, gid: &Gid, upk: &UserPublicKey, parts: &[CloudUserKey]) -> Result<KeyEntry> {
        if self.revoked.contains(gid) {
            return Err(Error::Revoked(gid.to_string()));
        }
        let mut merged = match self.entries.get(gid) {
            Some(e) if e.upk != *upk => {
                return Err(Error::InvalidKey(format!("{gid} is registered under a different public key")))
            }
            Some(e) => e.csk.clone(),
            None => CloudUserKey::default(),
        };
        for part in parts {
            for (a, k) in &part.entries {
                if merged.entries.insert(a.clone(), k.clone()).is_some() {
                    return Err(Error::DuplicateAttribute(a.to_string()));
                }
            }
        }
        Ok(KeyEntry { upk: upk.clone(), csk: merged })
    }

    /// Deletes `gid`'s entry. Returns whether an entry existed; revoking an
    /// absent gid changes nothing else.
    pub fn revoke(&mut self, gid: &Gid) -> bool {
        let existed = self.entries.remove(gid).is_some();
        if existed {
            self.revoked.insert(gid.clone());
        } else {
            log::info!("revoke: {gid} not in key list");
        }
        existed
    }
}

impl Encode for AuthoritySecret {
    fn encode(&self, w: &mut Writer) {
        w.scalar(&self.alpha).scalar(&self.beta).scalar(&self.y);
    }
}

impl Decode for AuthoritySecret {
    fn decode(r: &mut Reader<'_>) -> Result<Self> {
        Ok(AuthoritySecret { alpha: r.scalar()?, beta: r.scalar()?, y: r.scalar()? })
    }
}

impl Encode for AuthorityPublicKey {
    fn encode(&self, w: &mut Writer) {
        w.target(&self.egg_alpha).source(&self.g_beta).source(&self.g_y);
    }
}

impl Decode for AuthorityPublicKey {
    fn decode(r: &mut Reader<'_>) -> Result<Self> {
        Ok(AuthorityPublicKey { egg_alpha: r.target()?, g_beta: r.source()?, g_y: r.source()? })
    }
}

impl Encode for AuthorityKeys {
    fn encode(&self, w: &mut Writer) {
        w.put(&self.id).put(&self.secret).put(&self.public);
    }
}

impl Decode for AuthorityKeys {
    fn decode(r: &mut Reader<'_>) -> Result<Self> {
        Ok(AuthorityKeys { id: r.get()?, secret: r.get()?, public: r.get()? })
    }
}

impl Encode for UserSecret {
    fn encode(&self, w: &mut Writer) {
        w.scalar(&self.x);
    }
}

impl Decode for UserSecret {
    fn decode(r: &mut Reader<'_>) -> Result<Self> {
        let x = r.scalar()?;
        if x.is_zero() {
            return Err(Error::InvalidKey("zero user secret".into()));
        }
        Ok(UserSecret { x })
    }
}

impl Encode for UserPublicKey {
    fn encode(&self, w: &mut Writer) {
        w.source(&self.g_x).source(&self.h_gid_x);
    }
}

impl Decode for UserPublicKey {
    fn decode(r: &mut Reader<'_>) -> Result<Self> {
        Ok(UserPublicKey { g_x: r.source()?, h_gid_x: r.source()? })
    }
}

impl Encode for UserKeys {
    fn encode(&self, w: &mut Writer) {
        w.put(&self.gid).scalar(&self.x_inv).map(&self.k3);
    }
}

impl Decode for UserKeys {
    fn decode(r: &mut Reader<'_>) -> Result<Self> {
        Ok(UserKeys { gid: r.get()?, x_inv: r.scalar()?, k3: r.map()? })
    }
}

impl Encode for CloudKeyPart {
    fn encode(&self, w: &mut Writer) {
        w.source(&self.k1).source(&self.k2);
    }
}

impl Decode for CloudKeyPart {
    fn decode(r: &mut Reader<'_>) -> Result<Self> {
        Ok(CloudKeyPart { k1: r.source()?, k2: r.source()? })
    }
}

impl Encode for CloudUserKey {
    fn encode(&self, w: &mut Writer) {
        w.map(&self.entries);
    }
}

impl Decode for CloudUserKey {
    fn decode(r: &mut Reader<'_>) -> Result<Self> {
        Ok(CloudUserKey { entries: r.map()? })
    }
}

impl Encode for KeyEntry {
    fn encode(&self, w: &mut Writer) {
        w.put(&self.upk).put(&self.csk);
    }
}

impl Decode for KeyEntry {
    fn decode(r: &mut Reader<'_>) -> Result<Self> {
        Ok(KeyEntry { upk: r.get()?, csk: r.get()? })
    }
}

impl Encode for KeyList {
    fn encode(&self, w: &mut Writer) {
        w.map(&self.entries);
        let revoked: Vec<Gid> = self.revoked.iter().cloned().collect();
        w.seq(&revoked);
    }
}

impl Decode for KeyList {
    fn decode(r: &mut Reader<'_>) -> Result<Self> {
        let entries = r.map()?;
        let revoked: Vec<Gid> = r.seq()?;
        Ok(KeyList { entries, revoked: revoked.into_iter().collect() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheme::global_setup;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn setup() -> (GlobalParams, ChaCha20Rng) {
        (global_setup(128).unwrap(), ChaCha20Rng::seed_from_u64(17))
    }

    fn attr(s: &str) -> Attribute {
        Attribute::new(s).unwrap()
    }

    #[test]
    fn authority_keys_are_consistent_and_distinct() {
        let (gp, mut rng) = setup();
        let a = authority_setup(&gp, &AuthorityId::new("aa1").unwrap(), &mut rng);
        let b = authority_setup(&gp, &AuthorityId::new("aa2").unwrap(), &mut rng);
        assert!(a.is_consistent(&gp));
        assert_ne!(a.secret, b.secret);
        assert_eq!(pair(gp.generator(), &a.public.g_beta), gp.egg().exp(&a.secret.beta));
        assert_eq!(a.secret.to_bytes().len(), 3 * Scalar::BYTES);
        assert_eq!(a.public.element_tally().group_elements(), 3);
        assert_eq!(AuthorityKeys::from_bytes(&a.to_bytes()).unwrap(), a);
    }

    #[test]
    fn user_keys() {
        let (gp, mut rng) = setup();
        let gid = Gid::new("alice").unwrap();
        let (x, upk) = user_key_init(&gp, &gid, &mut rng).unwrap();
        assert!(upk.is_well_formed(&gp, &gid).unwrap());
        assert!(!upk.is_well_formed(&gp, &Gid::new("bob").unwrap()).unwrap());
        let usk = x.user_keys(&gid);
        assert_eq!(usk.x_inv * *x.x(), Scalar::one());
        assert_ne!(
            gp.hashes().hash_gid(b"alice").unwrap(),
            gp.hashes().hash_gid(b"bob").unwrap()
        );
    }

    #[test]
    fn keygen_pairing_invariants() {
        let (gp, mut rng) = setup();
        let ak = authority_setup(&gp, &AuthorityId::new("aa1").unwrap(), &mut rng);
        let gid = Gid::new("alice").unwrap();
        let (_, upk) = user_key_init(&gp, &gid, &mut rng).unwrap();
        let attrs = [attr("aa1:doctor"), attr("aa1:nurse")];
        let issued = authority_keygen(&gp, &ak, &gid, &upk, &attrs, &mut rng).unwrap();
        let g = gp.generator();
        for a in &attrs {
            let f = gp.hashes().hash_attribute(a.as_str()).unwrap();
            let part = &issued.cloud.entries[a];
            // e(g, K1) = e(g^x, g)^alpha * e(g^y, H(gid)^x) * e(K2, F(j))
            let expected = pair(&upk.g_x, g).exp(&ak.secret.alpha)
                * pair(&ak.public.g_y, &upk.h_gid_x)
                * pair(&part.k2, &f);
            assert_eq!(pair(g, &part.k1), expected);
            assert_eq!(part.k2, g.exp(&issued.t[a]));
            // e(h, K3) = e((g^beta)^a, F(j))
            let a_exp = Scalar::from_u64(12345);
            let h = g.exp(&a_exp);
            assert_eq!(pair(&h, &issued.k3[a]), pair(&ak.public.g_beta.exp(&a_exp), &f));
        }
    }

    #[test]
    fn keygen_errors() {
        let (gp, mut rng) = setup();
        let ak = authority_setup(&gp, &AuthorityId::new("aa1").unwrap(), &mut rng);
        let gid = Gid::new("alice").unwrap();
        let (_, upk) = user_key_init(&gp, &gid, &mut rng).unwrap();
        assert!(matches!(
            authority_keygen(&gp, &ak, &gid, &upk, &[attr("aa2:doctor")], &mut rng),
            Err(Error::WrongAuthority(_))
        ));
        let bad = UserPublicKey { g_x: upk.g_x, h_gid_x: upk.g_x };
        assert!(matches!(
            authority_keygen(&gp, &ak, &gid, &bad, &[attr("aa1:doctor")], &mut rng),
            Err(Error::InvalidKey(_))
        ));
        let empty = authority_keygen(&gp, &ak, &gid, &upk, &[], &mut rng).unwrap();
        assert!(empty.cloud.entries.is_empty() && empty.k3.is_empty());
    }

    #[test]
    fn key_list_register_merge_revoke() {
        let (gp, mut rng) = setup();
        let a1 = authority_setup(&gp, &AuthorityId::new("aa1").unwrap(), &mut rng);
        let a2 = authority_setup(&gp, &AuthorityId::new("aa2").unwrap(), &mut rng);
        let gid = Gid::new("alice").unwrap();
        let (_, upk) = user_key_init(&gp, &gid, &mut rng).unwrap();
        let p1 = authority_keygen(&gp, &a1, &gid, &upk, &[attr("aa1:x")], &mut rng).unwrap();
        let p2 = authority_keygen(&gp, &a2, &gid, &upk, &[attr("aa2:y")], &mut rng).unwrap();

        let mut kt = KeyList::new();
        kt.register(&gid, &upk, &[p1.cloud.clone(), p2.cloud.clone()]).unwrap();
        let entry = kt.get(&gid).unwrap();
        assert_eq!(entry.csk.entries.len(), 2);
        assert_eq!(entry.csk.entries[&attr("aa1:x")], p1.cloud.entries[&attr("aa1:x")]);

        let before = kt.clone();
        assert!(matches!(kt.register(&gid, &upk, std::slice::from_ref(&p1.cloud)), Err(Error::DuplicateAttribute(_))));
        assert_eq!(kt, before);

        assert_eq!(KeyList::from_bytes(&kt.to_bytes()).unwrap(), kt);

        assert!(kt.revoke(&gid));
        let once = kt.clone();
        assert!(!kt.revoke(&gid));
        assert_eq!(kt, once);
        assert!(kt.get(&gid).is_none());
        assert!(matches!(kt.register(&gid, &upk, &[p1.cloud]), Err(Error::Revoked(_))));
    }
}
