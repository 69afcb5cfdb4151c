use std::path::PathBuf;
use std::sync::Arc;

use rand_chacha::ChaCha20Rng;

use super::transport::Transport;
use super::wire::{CtId, Request, Response};
use super::{read_file, write_atomic};
use crate::codec::{Decode, Encode};
use crate::error::{Error, Result};
use crate::ids::Attribute;
use crate::lsss::PolicyNode;
use crate::scheme::{offline_enc, online_enc, GlobalParams, IntermediateCiphertext, PublicKeys};

/// The data owner: keeps an offline pool and uploads ciphertexts.
pub struct DataOwner {
    gp: GlobalParams,
    pks: PublicKeys,
    cs: Arc<dyn Transport>,
    pool: IntermediateCiphertext,
    pool_path: Option<PathBuf>,
    rng: ChaCha20Rng,
}

impl DataOwner {
    pub fn new(gp: GlobalParams, pks: PublicKeys, cs: Arc<dyn Transport>, rng: ChaCha20Rng) -> Self {
        DataOwner { gp, pks, cs, pool: IntermediateCiphertext::new(), pool_path: None, rng }
    }

    /// Keeps the pool in `path`, loading it if the file exists.
    pub fn with_pool_file(mut self, path: PathBuf) -> Result<Self> {
        match read_file(&path) {
            Ok(bytes) => self.pool = IntermediateCiphertext::from_bytes(&bytes)?,
            Err(Error::NotFound(_)) => {}
            Err(e) => return Err(e),
        }
        self.pool_path = Some(path);
        Ok(self)
    }

    pub fn pool(&self) -> &IntermediateCiphertext {
        &self.pool
    }

    fn save_pool(&mut self) -> Result<()> {
        if let Some(path) = &self.pool_path {
            self.pool.compact();
            write_atomic(path, &self.pool.to_bytes())?;
        }
        Ok(())
    }

    pub fn precompute_pool(&mut self, attrs: &[Attribute], count: usize) -> Result<()> {
        let fresh = offline_enc(&self.gp, &self.pks, attrs, count, &mut self.rng)?;
        self.pool.extend(fresh);
        self.save_pool()
    }

    /// Encrypts and uploads. The consumed pool entries are persisted as used
    /// before the upload, so a failed upload never leads to reuse.
    pub fn encrypt(&mut self, message: &[u8], policy: &PolicyNode) -> Result<CtId> {
        let ct = online_enc(&self.gp, &self.pks, message, &mut self.pool, policy, &mut self.rng)?;
        self.save_pool()?;
        self.cs.call(&Request::StoreCt { ct })?.into_ct_id()
    }

    pub fn fetch(&self, id: &CtId) -> Result<crate::scheme::Ciphertext> {
        self.cs.call(&Request::FetchCt { ct_id: *id }).and_then(Response::into_ct)
    }
}
