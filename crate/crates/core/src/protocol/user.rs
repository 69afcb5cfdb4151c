use std::collections::BTreeMap;
use std::path::Path;

use rand::{CryptoRng, RngCore};

use super::transport::Transport;
use super::wire::{CtId, Request, Response};
use super::{read_file, write_atomic};
use crate::codec::{Reader, Writer};
use crate::error::{Error, Result};
use crate::group::SourceElement;
use crate::ids::{Attribute, Gid, HiddenLabel};
use crate::scheme::{
    derive_labels, user_dec, user_key_init, GlobalParams, PartialCiphertext, UserKeys, UserPublicKey, UserSecret,
};

/// A data user: holds `x`, the public key and the `K3` keys.
#[derive(Clone, Debug)]
pub struct DataUser {
    gp: GlobalParams,
    secret: UserSecret,
    upk: UserPublicKey,
    usk: UserKeys,
}

impl DataUser {
    pub fn new<R: RngCore + CryptoRng + ?Sized>(gp: GlobalParams, gid: &Gid, rng: &mut R) -> Result<Self> {
        let (secret, upk) = user_key_init(&gp, gid, rng)?;
        let usk = secret.user_keys(gid);
        Ok(DataUser { gp, secret, upk, usk })
    }

    pub fn gid(&self) -> &Gid {
        &self.usk.gid
    }

    pub fn public_key(&self) -> &UserPublicKey {
        &self.upk
    }

    pub fn keys(&self) -> &UserKeys {
        &self.usk
    }

    pub fn attributes(&self) -> Vec<Attribute> {
        self.usk.k3.keys().cloned().collect()
    }

    /// Requests `attrs` from one authority and stores the `K3` keys from
    /// its envelope.
    pub fn enroll(&mut self, aa: &dyn Transport, attrs: &[Attribute]) -> Result<()> {
        let req = Request::IssueKeys { gid: self.usk.gid.clone(), upk: self.upk.clone(), attrs: attrs.to_vec() };
        let envelope = aa.call(&req)?.into_envelope()?;
        let k3 = envelope.open(&self.usk.gid, &self.secret)?;
        if attrs.iter().any(|a| !k3.contains_key(a)) || k3.len() != attrs.len() {
            return Err(Error::Protocol("envelope does not match the requested attributes".into()));
        }
        self.usk.k3.extend(k3);
        Ok(())
    }

    pub fn fetch_h(&self, cs: &dyn Transport, ct_id: &CtId) -> Result<SourceElement> {
        cs.call(&Request::FetchH { ct_id: *ct_id }).and_then(Response::into_h)
    }

    pub fn derive_labels(&self, h: &SourceElement) -> Result<BTreeMap<Attribute, HiddenLabel>> {
        derive_labels(&self.gp, &self.usk, h, &self.attributes())
    }

    pub fn request_dec(
        &self,
        cs: &dyn Transport,
        ct_id: &CtId,
        labels: BTreeMap<Attribute, HiddenLabel>,
    ) -> Result<PartialCiphertext> {
        let req = Request::RequestDec { gid: self.usk.gid.clone(), ct_id: *ct_id, labels };
        cs.call(&req).and_then(Response::into_partial)
    }

    pub fn final_decrypt(&self, pct: &PartialCiphertext) -> Result<Vec<u8>> {
        user_dec(&self.gp, &self.usk, pct)
    }

    /// The four steps in order: fetch `h`, derive labels, request the
    /// partial decryption, finish locally.
    pub fn decrypt(&self, cs: &dyn Transport, ct_id: &CtId) -> Result<Vec<u8>> {
        let h = self.fetch_h(cs, ct_id)?;
        let labels = self.derive_labels(&h)?;
        let pct = self.request_dec(cs, ct_id, labels)?;
        self.final_decrypt(&pct)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.put(&self.gp).put(&self.secret).put(&self.upk).put(&self.usk);
        w.into_bytes()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        let gp: GlobalParams = r.get()?;
        let secret: UserSecret = r.get()?;
        let upk: UserPublicKey = r.get()?;
        let usk: UserKeys = r.get()?;
        r.finish()?;
        if usk.x_inv * *secret.x() != crate::group::Scalar::one() {
            return Err(Error::InvalidKey("stored x^-1 does not match x".into()));
        }
        Ok(DataUser { gp, secret, upk, usk })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&read_file(path)?)
    }
}
