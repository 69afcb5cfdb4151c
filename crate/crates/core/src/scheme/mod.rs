//! The scheme's algorithms: setup, key generation, offline/online
//! encryption, cloud and user decryption, and revocation.

mod decrypt;
mod encrypt;
mod keys;
mod params;
pub mod se;

pub use decrypt::{cs_dec, derive_labels, user_dec, user_dec_encoded, PartialCiphertext};
#[cfg(feature = "trace")]
pub use encrypt::online_enc_traced;
pub use encrypt::{
    offline_enc, online_enc, Ciphertext, CiphertextRow, EncryptionTrace, IntermediateCiphertext, PoolEntry,
};
pub use keys::{
    authority_keygen, authority_setup, user_key_init, AuthorityKeys, AuthorityPublicKey, AuthoritySecret,
    CloudKeyPart, CloudUserKey, IssuedKeys, KeyEntry, KeyList, PublicKeys, UserKeys, UserPublicKey, UserSecret,
};
pub use params::{global_setup, GlobalParams, CURVE_PROFILE, SYMMETRIC_CIPHER};

use crate::error::Result;
use crate::ids::Gid;

/// Adds the cloud key parts to `kt` under `gid`.
pub fn register_key(kt: &mut KeyList, gid: &Gid, upk: &UserPublicKey, parts: &[CloudUserKey]) -> Result<()> {
    kt.register(gid, upk, parts)
}

/// Deletes `gid` from `kt`; a no-op if it is absent.
pub fn revoke(kt: &mut KeyList, gid: &Gid) {
    kt.revoke(gid);
}
