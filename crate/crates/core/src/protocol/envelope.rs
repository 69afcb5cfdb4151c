//! Delivery of `K3` keys from an authority to a user.
//!
//! The authority picks `k`, sends `E = g^k`, and encrypts under a key derived
//! from `(g^x)^k`; the user recomputes it as `E^x`. The gid is bound in both
//! the key derivation and the AEAD associated data.

use std::collections::BTreeMap;

use rand::{CryptoRng, RngCore};
use sha2::{Digest, Sha256};

use crate::codec::{Decode, Encode, Reader, Writer};
use crate::error::{Error, Result};
use crate::group::{Scalar, SourceElement};
use crate::ids::{Attribute, Gid};
use crate::scheme::{se, GlobalParams, UserPublicKey, UserSecret};

const KDF_TAG: &[u8] = b"VFAC-V01-ENVELOPE";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SecureEnvelope {
    pub ephemeral: SourceElement,
    pub sealed: Vec<u8>,
}

fn envelope_key(shared: &SourceElement, gid: &Gid) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(KDF_TAG);
    h.update(shared.to_bytes());
    h.update((gid.as_bytes().len() as u32).to_be_bytes());
    h.update(gid.as_bytes());
    h.finalize().into()
}

impl SecureEnvelope {
    pub fn seal<R: RngCore + CryptoRng + ?Sized>(
        gp: &GlobalParams,
        gid: &Gid,
        upk: &UserPublicKey,
        k3: &BTreeMap<Attribute, SourceElement>,
        rng: &mut R,
    ) -> SecureEnvelope {
        let k = Scalar::random(rng);
        let ephemeral = gp.generator().exp(&k);
        let key = envelope_key(&upk.g_x.exp(&k), gid);
        let mut w = Writer::new();
        w.map(k3);
        SecureEnvelope { ephemeral, sealed: se::seal(&key, &w.into_bytes(), gid.as_bytes(), rng) }
    }

    /// Fails with `VerificationFailed` unless `x` is the secret behind the
    /// public key the envelope was sealed to.
    pub fn open(&self, gid: &Gid, x: &UserSecret) -> Result<BTreeMap<Attribute, SourceElement>> {
        let key = envelope_key(&self.ephemeral.exp(x.x()), gid);
        let plain = se::open(&key, &self.sealed, gid.as_bytes())?;
        let mut r = Reader::new(&plain);
        let k3 = r.map().map_err(|_| Error::VerificationFailed)?;
        r.finish()?;
        Ok(k3)
    }
}

impl Encode for SecureEnvelope {
    fn encode(&self, w: &mut Writer) {
        w.source(&self.ephemeral).bytes(&self.sealed);
    }
}

impl Decode for SecureEnvelope {
    fn decode(r: &mut Reader<'_>) -> Result<Self> {
        Ok(SecureEnvelope { ephemeral: r.source()?, sealed: r.bytes()?.to_vec() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheme::{global_setup, user_key_init};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn only_the_key_holder_opens() {
        let gp = global_setup(128).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let alice = Gid::new("alice").unwrap();
        let (x, upk) = user_key_init(&gp, &alice, &mut rng).unwrap();
        let (y, _) = user_key_init(&gp, &alice, &mut rng).unwrap();
        let k3: BTreeMap<Attribute, SourceElement> =
            [(Attribute::new("aa1:a").unwrap(), gp.generator().exp(&Scalar::from_u64(5)))].into();
        let env = SecureEnvelope::seal(&gp, &alice, &upk, &k3, &mut rng);
        assert_eq!(env.open(&alice, &x).unwrap(), k3);
        assert!(matches!(env.open(&alice, &y), Err(Error::VerificationFailed)));
        assert!(matches!(env.open(&Gid::new("bob").unwrap(), &x), Err(Error::VerificationFailed)));
        assert_eq!(SecureEnvelope::from_bytes(&env.to_bytes()).unwrap(), env);
    }
}
