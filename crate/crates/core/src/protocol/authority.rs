use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Arc, Mutex};

use rand_chacha::ChaCha20Rng;

use super::envelope::SecureEnvelope;
use super::transport::{Service, Transport};
use super::wire::{Request, Response};
use crate::error::{Error, Result};
use crate::group::SourceElement;
use crate::ids::{Attribute, Gid};
use crate::scheme::{authority_keygen, AuthorityKeys, CloudKeyPart, CloudUserKey, GlobalParams, UserPublicKey};

#[derive(Clone, Debug)]
struct Issued {
    upk: UserPublicKey,
    cloud: BTreeMap<Attribute, CloudKeyPart>,
    k3: BTreeMap<Attribute, SourceElement>,
}

/// An attribute authority. Issued keys are pushed to the cloud server
/// before the user's envelope is released, and each `(gid, attribute)` is
/// generated at most once: replayed requests resend the same keys.
pub struct AuthorityService {
    gp: GlobalParams,
    keys: AuthorityKeys,
    cs: Arc<dyn Transport>,
    rng: Mutex<ChaCha20Rng>,
    issued: Mutex<BTreeMap<Gid, Issued>>,
}

impl AuthorityService {
    pub fn new(gp: GlobalParams, keys: AuthorityKeys, cs: Arc<dyn Transport>, rng: ChaCha20Rng) -> Self {
        AuthorityService { gp, keys, cs, rng: Mutex::new(rng), issued: Mutex::new(BTreeMap::new()) }
    }

    pub fn keys(&self) -> &AuthorityKeys {
        &self.keys
    }

    pub fn issue_keys(&self, gid: &Gid, upk: &UserPublicKey, attrs: &[Attribute]) -> Result<SecureEnvelope> {
        let mut seen = BTreeSet::new();
        for a in attrs {
            if !a.is_managed_by(&self.keys.id) {
                return Err(Error::WrongAuthority(a.to_string()));
            }
            if !seen.insert(a) {
                return Err(Error::DuplicateAttribute(a.to_string()));
            }
        }
        let mut issued = self.issued.lock().expect("issuance lock poisoned");
        let previous = issued.get(gid);
        if previous.is_some_and(|p| p.upk != *upk) {
            return Err(Error::InvalidKey(format!("{gid} was issued keys under a different public key")));
        }
        let new_attrs: Vec<Attribute> = attrs
            .iter()
            .filter(|a| !previous.is_some_and(|p| p.cloud.contains_key(*a)))
            .cloned()
            .collect();
        let mut rng = self.rng.lock().expect("rng lock poisoned");
        let fresh = authority_keygen(&self.gp, &self.keys, gid, upk, &new_attrs, &mut *rng)?;

        let mut record = previous.cloned().unwrap_or(Issued {
            upk: upk.clone(),
            cloud: BTreeMap::new(),
            k3: BTreeMap::new(),
        });
        record.cloud.extend(fresh.cloud.entries);
        record.k3.extend(fresh.k3);
        let csk = CloudUserKey {
            entries: attrs.iter().map(|a| (a.clone(), record.cloud[a].clone())).collect(),
        };
        let push = Request::RegisterKey { gid: gid.clone(), upk: upk.clone(), csk };
        match self.cs.call(&push).and_then(Response::into_ack) {
            Ok(_) => {}
            Err(e @ (Error::Unavailable(_) | Error::Io(_))) => {
                return Err(Error::IssuanceAborted(format!("cloud server unreachable: {e}")))
            }
            Err(Error::Other(detail)) => return Err(Error::IssuanceAborted(detail)),
            Err(e) => return Err(e),
        }
        let k3: BTreeMap<Attribute, SourceElement> =
            attrs.iter().map(|a| (a.clone(), record.k3[a])).collect();
        let envelope = SecureEnvelope::seal(&self.gp, gid, upk, &k3, &mut *rng);
        issued.insert(gid.clone(), record);
        Ok(envelope)
    }
}

impl Service for AuthorityService {
    fn handle(&self, req: Request) -> Response {
        let result = match req {
            Request::GetPublicKey => Ok(Response::PublicKey { id: self.keys.id.clone(), pk: self.keys.public.clone() }),
            Request::IssueKeys { gid, upk, attrs } => self.issue_keys(&gid, &upk, &attrs).map(Response::Envelope),
            other => Err(Error::Protocol(format!("an authority does not serve kind {:#04x}", other.kind()))),
        };
        result.unwrap_or_else(|e| Response::from_error(&e))
    }
}
