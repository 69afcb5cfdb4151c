//! On-disk layout of a data directory:
//!
//! ```text
//! params.bin             global parameters
//! authorities/<id>.key   authority key pairs
//! users/<gid>.user       user secrets and attribute keys
//! owner.pool             the data owner's offline pool
//! cloud/                 cloud server state (kt.log, kt.snapshot, ct/)
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use vfac_core::codec::{Decode, Encode};
use vfac_core::harness::Deployment;
use vfac_core::protocol::{read_file, write_atomic, CloudConfig, CloudServer, DataOwner, DataUser};
use vfac_core::scheme::{global_setup, AuthorityKeys, GlobalParams};
use vfac_core::{Attribute, AuthorityId, Error, Gid, Result};

use crate::args::Global;

const DEFAULT_DIR: &str = "vfac-data";

pub struct Workspace {
    dir: PathBuf,
    dep: Deployment,
}

fn data_dir(g: &Global) -> PathBuf {
    g.data_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_DIR))
}

impl Workspace {
    pub fn create(g: &Global, lambda: u32) -> Result<Workspace> {
        let dir = data_dir(g);
        let params = dir.join("params.bin");
        if params.exists() {
            return Err(Error::InvalidInput(format!("{} is already set up", dir.display())));
        }
        let gp = global_setup(lambda)?;
        for sub in ["authorities", "users", "cloud"] {
            fs::create_dir_all(dir.join(sub))?;
        }
        write_atomic(&params, &gp.to_bytes())?;
        Workspace::open(g, &[])
    }

    /// Opens an existing data directory and wires its cloud server and
    /// authorities together. `words` feed the random seed.
    pub fn open(g: &Global, words: &[String]) -> Result<Workspace> {
        let dir = data_dir(g);
        let gp = match read_file(&dir.join("params.bin")) {
            Ok(bytes) => GlobalParams::from_bytes(&bytes)?,
            Err(Error::NotFound(_)) => {
                return Err(Error::InvalidInput(format!("{} is not set up; run `vfac setup`", dir.display())))
            }
            Err(e) => return Err(e),
        };
        let seed = match g.seed {
            Some(seed) => derive_seed(&gp, &dir, seed, words)?,
            None => rand::random(),
        };
        let cloud = CloudServer::open(gp, &dir.join("cloud"), CloudConfig::default())?;
        let mut dep = Deployment::new(g.transport.unwrap_or_default(), seed, cloud)?;
        for path in list(&dir.join("authorities"), "key")? {
            dep.add_authority_keys(AuthorityKeys::from_bytes(&read_file(&path)?)?)?;
        }
        Ok(Workspace { dir, dep })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn deployment(&self) -> &Deployment {
        &self.dep
    }

    pub fn new_authority(&mut self, id: &AuthorityId) -> Result<AuthorityKeys> {
        let path = self.dir.join("authorities").join(format!("{id}.key"));
        if path.exists() {
            return Err(Error::InvalidInput(format!("authority {id} already exists")));
        }
        let keys = self.dep.add_authority(id)?;
        write_atomic(&path, &keys.to_bytes())?;
        Ok(keys)
    }

    fn user_path(&self, gid: &Gid) -> PathBuf {
        self.dir.join("users").join(format!("{}.user", hex::encode(gid.as_bytes())))
    }

    pub fn load_user(&self, gid: &Gid) -> Result<DataUser> {
        DataUser::load(&self.user_path(gid)).map_err(|e| match e {
            Error::NotFound(_) => Error::InvalidInput(format!("no local keys for user {gid}")),
            e => e,
        })
    }

    /// Requests the attributes the user does not hold yet. Returns the newly
    /// issued attributes and everything the user holds afterwards.
    pub fn enroll(&mut self, gid: &Gid, attrs: &[Attribute]) -> Result<(Vec<Attribute>, Vec<Attribute>)> {
        let mut user = match self.load_user(gid) {
            Ok(u) => u,
            Err(Error::InvalidInput(_)) => self.dep.new_user(gid)?,
            Err(e) => return Err(e),
        };
        let held = user.attributes();
        let mut wanted: Vec<Attribute> = attrs.iter().filter(|a| !held.contains(a)).cloned().collect();
        wanted.sort();
        wanted.dedup();
        if !wanted.is_empty() {
            self.dep.enroll(&mut user, &wanted)?;
        }
        user.save(&self.user_path(gid))?;
        Ok((wanted, user.attributes()))
    }

    pub fn owner(&mut self) -> Result<DataOwner> {
        self.dep.owner()?.with_pool_file(self.dir.join("owner.pool"))
    }
}

fn list(dir: &Path, ext: &str) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == ext) {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

/// Seed for one invocation: the user's seed mixed with the command line and
/// a digest of the directory state. A repeated command sees a different
/// state and gets different randomness.
fn derive_seed(gp: &GlobalParams, dir: &Path, seed: u64, words: &[String]) -> Result<u64> {
    let mut parts: Vec<Vec<u8>> = vec![seed.to_be_bytes().to_vec()];
    parts.extend(words.iter().map(|w| w.as_bytes().to_vec()));
    for file in ["owner.pool", "cloud/kt.log", "cloud/kt.snapshot"] {
        match read_file(&dir.join(file)) {
            Ok(bytes) => parts.push(bytes),
            Err(Error::NotFound(_)) => parts.push(Vec::new()),
            Err(e) => return Err(e),
        }
    }
    for sub in ["authorities", "users", "cloud/ct"] {
        if let Ok(entries) = fs::read_dir(dir.join(sub)) {
            let mut names: Vec<String> =
                entries.filter_map(|e| e.ok()).map(|e| e.file_name().to_string_lossy().into_owned()).collect();
            names.sort();
            parts.push(names.join("/").into_bytes());
        }
    }
    let refs: Vec<&[u8]> = parts.iter().map(|p| p.as_slice()).collect();
    let d = gp.hashes().digest(&refs);
    Ok(u64::from_be_bytes(d[..8].try_into().expect("8 bytes")))
}
