use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ids::{Attribute, AuthorityId, Gid};
use crate::protocol::{
    AuthorityService, CloudServer, DataOwner, DataUser, InProc, Request, Response, Service, TcpServer, Transport,
};
use crate::scheme::{authority_setup, AuthorityKeys, GlobalParams, PublicKeys};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransportKind {
    #[default]
    Inproc,
    Tcp,
}

impl FromStr for TransportKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inproc" => Ok(TransportKind::Inproc),
            "tcp" => Ok(TransportKind::Tcp),
            other => Err(Error::InvalidInput(format!("unknown transport {other:?} (inproc or tcp)"))),
        }
    }
}

impl fmt::Display for TransportKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TransportKind::Inproc => "inproc",
            TransportKind::Tcp => "tcp",
        })
    }
}

/// A cloud server and a set of authorities wired together over one kind of
/// transport, plus a seeded random source for everything created through it.
pub struct Deployment {
    gp: GlobalParams,
    kind: TransportKind,
    cloud: Arc<CloudServer>,
    cloud_link: Arc<dyn Transport>,
    authorities: BTreeMap<AuthorityId, Arc<dyn Transport>>,
    servers: Vec<TcpServer>,
    rng: ChaCha20Rng,
}

impl Deployment {
    pub fn new(kind: TransportKind, seed: u64, cloud: CloudServer) -> Result<Self> {
        let gp = cloud.params().clone();
        let cloud = Arc::new(cloud);
        let mut servers = Vec::new();
        let cloud_link = link(kind, cloud.clone(), &mut servers)?;
        Ok(Deployment {
            gp,
            kind,
            cloud,
            cloud_link,
            authorities: BTreeMap::new(),
            servers,
            rng: ChaCha20Rng::seed_from_u64(seed),
        })
    }

    pub fn params(&self) -> &GlobalParams {
        &self.gp
    }

    pub fn transport(&self) -> TransportKind {
        self.kind
    }

    /// An independent generator derived from the deployment's seed.
    pub fn fork_rng(&mut self) -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(self.rng.next_u64())
    }

    pub fn add_authority(&mut self, id: &AuthorityId) -> Result<AuthorityKeys> {
        if self.authorities.contains_key(id) {
            return Err(Error::InvalidInput(format!("authority {id} already exists")));
        }
        let keys = authority_setup(&self.gp, id, &mut self.rng);
        self.add_authority_keys(keys.clone())?;
        Ok(keys)
    }

    pub fn add_authority_keys(&mut self, keys: AuthorityKeys) -> Result<()> {
        let id = keys.id.clone();
        let rng = self.fork_rng();
        let service = Arc::new(AuthorityService::new(self.gp.clone(), keys, self.cloud_link.clone(), rng));
        let l = link(self.kind, service, &mut self.servers)?;
        self.authorities.insert(id, l);
        Ok(())
    }

    pub fn cloud(&self) -> &Arc<CloudServer> {
        &self.cloud
    }

    pub fn cloud_link(&self) -> &dyn Transport {
        self.cloud_link.as_ref()
    }

    pub fn authority_link(&self, id: &AuthorityId) -> Result<&dyn Transport> {
        self.authorities
            .get(id)
            .map(|l| l.as_ref())
            .ok_or_else(|| Error::UnknownAuthority(id.to_string()))
    }

    /// Public keys as served by each authority.
    pub fn public_keys(&self) -> Result<PublicKeys> {
        self.authorities
            .values()
            .map(|l| l.call(&Request::GetPublicKey).and_then(Response::into_public_key))
            .collect()
    }

    pub fn new_user(&mut self, gid: &Gid) -> Result<DataUser> {
        DataUser::new(self.gp.clone(), gid, &mut self.rng)
    }

    /// Requests each attribute from the authority named by its prefix.
    pub fn enroll(&self, user: &mut DataUser, attrs: &[Attribute]) -> Result<()> {
        let mut by_authority: BTreeMap<AuthorityId, Vec<Attribute>> = BTreeMap::new();
        for a in attrs {
            by_authority.entry(a.authority()).or_default().push(a.clone());
        }
        for (id, list) in by_authority {
            user.enroll(self.authority_link(&id)?, &list)?;
        }
        Ok(())
    }

    pub fn owner(&mut self) -> Result<DataOwner> {
        let pks = self.public_keys()?;
        let rng = self.fork_rng();
        Ok(DataOwner::new(self.gp.clone(), pks, self.cloud_link.clone(), rng))
    }
}

fn link(kind: TransportKind, service: Arc<dyn Service>, servers: &mut Vec<TcpServer>) -> Result<Arc<dyn Transport>> {
    Ok(match kind {
        TransportKind::Inproc => Arc::new(InProc::new(service)),
        TransportKind::Tcp => {
            let server = TcpServer::spawn(service, "127.0.0.1:0")?;
            let client = server.client();
            servers.push(server);
            Arc::new(client)
        }
    })
}
