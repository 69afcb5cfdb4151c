//! The symmetric layer: ChaCha20-Poly1305 under a 256-bit key with a random
//! 96-bit nonce stored in front of the ciphertext.

use chacha20poly1305::aead::{Aead, KeyInit};
use chacha20poly1305::{ChaCha20Poly1305, Key, Nonce};
use rand::{CryptoRng, RngCore};

use crate::error::{Error, Result};

pub const NONCE_BYTES: usize = 12;
pub const TAG_BYTES: usize = 16;

pub fn seal<R: RngCore + CryptoRng + ?Sized>(key: &[u8; 32], plaintext: &[u8], aad: &[u8], rng: &mut R) -> Vec<u8> {
    let mut nonce = [0u8; NONCE_BYTES];
    rng.fill_bytes(&mut nonce);
    let cipher = ChaCha20Poly1305::new(Key::from_slice(key));
    let body = cipher
        .encrypt(Nonce::from_slice(&nonce), chacha20poly1305::aead::Payload { msg: plaintext, aad })
        .expect("encryption of in-memory buffer");
    let mut out = nonce.to_vec();
    out.extend_from_slice(&body);
    out
}

/// Any authentication failure is reported as `VerificationFailed`.
pub fn open(key: &[u8; 32], sealed: &[u8], aad: &[u8]) -> Result<Vec<u8>> {
    if sealed.len() < NONCE_BYTES + TAG_BYTES {
        return Err(Error::VerificationFailed);
    }
    let (nonce, body) = sealed.split_at(NONCE_BYTES);
    ChaCha20Poly1305::new(Key::from_slice(key))
        .decrypt(Nonce::from_slice(nonce), chacha20poly1305::aead::Payload { msg: body, aad })
        .map_err(|_| Error::VerificationFailed)
}
