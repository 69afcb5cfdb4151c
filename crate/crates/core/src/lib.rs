//! Multi-authority ciphertext-policy attribute-based encryption with
//! offline/online encryption, hidden policies and verifiable cloud-assisted
//! decryption.

pub mod codec;
pub mod error;
pub mod group;
pub mod harness;
pub mod ids;
pub mod lsss;
pub mod metrics;
pub mod protocol;
pub mod scheme;

pub use error::{Error, Result};
pub use group::{pair, HashSuite, Scalar, SourceElement, TargetElement};
pub use ids::{Attribute, AuthorityId, Gid, HiddenLabel};
pub use lsss::{AccessStructure, PolicyNode};
pub use scheme::*;
