//! Shared setup for the benchmarks: two authorities, one user holding every
//! attribute of an `l`-way AND policy, and a key list with that user.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use vfac_core::scheme::{
    authority_keygen, authority_setup, global_setup, offline_enc, online_enc, register_key, user_key_init, Ciphertext,
    GlobalParams, IntermediateCiphertext, KeyList, PublicKeys, UserKeys,
};
use vfac_core::{Attribute, AuthorityId, Gid, PolicyNode};

pub struct Setup {
    pub gp: GlobalParams,
    pub pks: PublicKeys,
    pub attrs: Vec<Attribute>,
    pub policy: PolicyNode,
    pub gid: Gid,
    pub usk: UserKeys,
    pub kt: KeyList,
    pub rng: ChaCha20Rng,
}

impl Setup {
    pub fn new(rows: usize) -> Setup {
        let gp = global_setup(128).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(rows as u64);
        let aks: Vec<_> = ["aa1", "aa2"]
            .iter()
            .map(|id| authority_setup(&gp, &AuthorityId::new(id).unwrap(), &mut rng))
            .collect();
        let pks: PublicKeys = aks.iter().map(|k| (k.id.clone(), k.public.clone())).collect();
        let attrs: Vec<Attribute> =
            (0..rows).map(|i| Attribute::new(&format!("aa{}:attr{i}", 1 + i % 2)).unwrap()).collect();
        let policy = if rows == 1 {
            PolicyNode::Leaf(attrs[0].clone())
        } else {
            PolicyNode::And(attrs.iter().cloned().map(PolicyNode::Leaf).collect())
        };
        let gid = Gid::new("bench").unwrap();
        let (x, upk) = user_key_init(&gp, &gid, &mut rng).unwrap();
        let mut usk = x.user_keys(&gid);
        let mut parts = Vec::new();
        for ak in &aks {
            let mine: Vec<Attribute> = attrs.iter().filter(|a| a.is_managed_by(&ak.id)).cloned().collect();
            let issued = authority_keygen(&gp, ak, &gid, &upk, &mine, &mut rng).unwrap();
            usk.k3.extend(issued.k3);
            parts.push(issued.cloud);
        }
        let mut kt = KeyList::new();
        register_key(&mut kt, &gid, &upk, &parts).unwrap();
        Setup { gp, pks, attrs, policy, gid, usk, kt, rng }
    }

    pub fn pool(&mut self, count: usize) -> IntermediateCiphertext {
        offline_enc(&self.gp, &self.pks, &self.attrs, count, &mut self.rng).unwrap()
    }

    pub fn ciphertext(&mut self, message: &[u8]) -> Ciphertext {
        let mut ic = self.pool(1);
        online_enc(&self.gp, &self.pks, message, &mut ic, &self.policy, &mut self.rng).unwrap()
    }
}
