#![allow(dead_code)]

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use vfac_core::harness::{Deployment, TransportKind};
use vfac_core::protocol::{validate_dir, CloudConfig, CloudServer, CommitPoint, DataUser, InProc};
use vfac_core::scheme::{
    authority_keygen, authority_setup, global_setup, register_key, user_key_init, AuthorityKeys, GlobalParams,
    KeyList, PublicKeys, UserKeys,
};
use vfac_core::{Attribute, AuthorityId, Gid};

pub fn attr(s: &str) -> Attribute {
    Attribute::new(s).unwrap()
}

pub fn attrs(names: &[&str]) -> Vec<Attribute> {
    names.iter().map(|n| attr(n)).collect()
}

pub fn gid(s: &str) -> Gid {
    Gid::new(s).unwrap()
}

/// Scheme-level fixture: authorities, a key list and a seeded rng.
pub struct Fixture {
    pub gp: GlobalParams,
    pub aks: BTreeMap<AuthorityId, AuthorityKeys>,
    pub pks: PublicKeys,
    pub kt: KeyList,
    pub rng: ChaCha20Rng,
}

impl Fixture {
    pub fn new(seed: u64, authorities: usize) -> Fixture {
        let gp = global_setup(128).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut aks = BTreeMap::new();
        for i in 1..=authorities {
            let id = AuthorityId::new(&format!("aa{i}")).unwrap();
            aks.insert(id.clone(), authority_setup(&gp, &id, &mut rng));
        }
        let pks = aks.iter().map(|(id, k)| (id.clone(), k.public.clone())).collect();
        Fixture { gp, aks, pks, kt: KeyList::new(), rng }
    }

    pub fn enroll(&mut self, name: &str, held: &[Attribute]) -> UserKeys {
        let g = gid(name);
        let (x, upk) = user_key_init(&self.gp, &g, &mut self.rng).unwrap();
        let mut usk = x.user_keys(&g);
        let mut parts = Vec::new();
        for (id, ak) in &self.aks {
            let mine: Vec<Attribute> = held.iter().filter(|a| a.is_managed_by(id)).cloned().collect();
            let issued = authority_keygen(&self.gp, ak, &g, &upk, &mine, &mut self.rng).unwrap();
            usk.k3.extend(issued.k3);
            parts.push(issued.cloud);
        }
        register_key(&mut self.kt, &g, &upk, &parts).unwrap();
        usk
    }
}

pub fn deployment(kind: TransportKind, seed: u64, authorities: &[&str]) -> Deployment {
    let gp = global_setup(128).unwrap();
    deployment_with(kind, seed, authorities, CloudServer::in_memory(gp))
}

pub fn deployment_with(kind: TransportKind, seed: u64, authorities: &[&str], cloud: CloudServer) -> Deployment {
    let mut dep = Deployment::new(kind, seed, cloud).unwrap();
    for a in authorities {
        dep.add_authority(&AuthorityId::new(a).unwrap()).unwrap();
    }
    dep
}

pub fn enrolled(dep: &mut Deployment, name: &str, held: &[&str]) -> DataUser {
    let mut u = dep.new_user(&gid(name)).unwrap();
    dep.enroll(&mut u, &attrs(held)).unwrap();
    u
}

/// Crashes the cloud at `point` during a key registration or a ciphertext
/// upload, then checks the directory holds the state from before or after
/// that operation and that a reopened server still serves earlier data.
pub fn crash_check(point: CommitPoint) -> Result<(), String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let gp = global_setup(128).unwrap();
    let config = CloudConfig { snapshot_every: 1 };
    let cloud = CloudServer::open(gp.clone(), dir.path(), config).map_err(|e| e.to_string())?;
    let mut dep = deployment_with(TransportKind::Inproc, 10, &["aa1"], cloud);
    let alice = enrolled(&mut dep, "alice", &["aa1:x"]);
    let mut owner = dep.owner().unwrap();
    owner.precompute_pool(&attrs(&["aa1:x"]), 2).unwrap();
    let first = owner.encrypt(b"first", &"aa1:x".parse().unwrap()).unwrap();
    let pre = dep.cloud().state();

    dep.cloud().inject_fault(point);
    let ct_point = matches!(point, CommitPoint::CtPartial | CommitPoint::CtTemp | CommitPoint::CtRenamed);
    let result = if ct_point {
        owner.encrypt(b"second", &"aa1:x".parse().unwrap()).map(|_| ())
    } else {
        let mut bob = dep.new_user(&gid("bob")).unwrap();
        dep.enroll(&mut bob, &attrs(&["aa1:x"]))
    };
    if result.is_ok() || !dep.cloud().is_crashed() {
        return Err(format!("{point:?}: fault did not fire"));
    }
    drop(dep);

    let recovered = validate_dir(&gp, dir.path()).map_err(|e| format!("{point:?}: {e}"))?;
    let post = if ct_point {
        recovered.cts.len() == pre.cts.len() + 1 && recovered.kt == pre.kt
    } else {
        recovered.cts == pre.cts
            && recovered.kt.len() == 2
            && recovered.kt.get(&gid("alice")) == pre.kt.get(&gid("alice"))
    };
    if recovered != pre && !post {
        return Err(format!("{point:?}: recovered state is neither the pre- nor the post-state"));
    }

    let reopened = Arc::new(CloudServer::open(gp, dir.path(), config).map_err(|e| e.to_string())?);
    if reopened.state() != recovered {
        return Err(format!("{point:?}: reopened state differs from validated state"));
    }
    let link = InProc::new(reopened);
    match alice.decrypt(&link, &first) {
        Ok(m) if m == b"first" => {}
        other => return Err(format!("{point:?}: earlier ciphertext lost: {other:?}")),
    }
    let leftovers = std::fs::read_dir(dir.path().join("ct"))
        .map_err(|e| e.to_string())?
        .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().ends_with(".tmp"))
        .count();
    if leftovers > 0 {
        return Err(format!("{point:?}: {leftovers} temporary files left behind"));
    }
    Ok(())
}
