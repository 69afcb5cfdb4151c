//! The four roles (authority, cloud server, data owner, data user) as
//! services and clients exchanging wire messages.

mod authority;
mod cloud;
mod envelope;
mod owner;
mod transport;
mod user;
pub mod wire;

pub use authority::AuthorityService;
pub use cloud::{ciphertext_id, validate_dir, CloudConfig, CloudServer, CloudState, CommitPoint};
pub use envelope::SecureEnvelope;
pub use owner::DataOwner;
pub use transport::{serve_frame, InProc, Service, TcpClient, TcpServer, Transport};
pub use user::DataUser;
pub use wire::{CtId, ErrorCode, Request, Response, WireMessage};

use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

const TMP_SUFFIX: &str = ".tmp";

fn tmp_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(TMP_SUFFIX);
    PathBuf::from(s)
}

/// Reads a whole file, mapping absence to `NotFound`.
pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::NotFound(path.display().to_string()),
        _ => e.into(),
    })
}

/// Writes `bytes` to `path` via a temporary file and rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = tmp_path(path);
    let mut f = File::create(&tmp)?;
    f.write_all(bytes)?;
    f.sync_all()?;
    drop(f);
    fs::rename(&tmp, path)?;
    Ok(())
}
