//! Names used across the scheme: attributes, authorities, users and hidden
//! labels.

use std::fmt;
use std::str::FromStr;

use crate::codec::{Decode, Encode, Reader, Writer};
use crate::error::{Error, Result};

fn valid_name_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.' | '@' | '/')
}

/// Identifier of an attribute authority.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AuthorityId(String);

impl AuthorityId {
    pub fn new(id: &str) -> Result<Self> {
        if id.is_empty() || !id.chars().all(valid_name_char) {
            return Err(Error::InvalidInput(format!("invalid authority id {id:?}")));
        }
        Ok(AuthorityId(id.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

/// An attribute named `authorityId:name`. The prefix identifies the single
/// authority that manages it.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Attribute(String);

impl Attribute {
    pub fn new(name: &str) -> Result<Self> {
        let (authority, local) = name
            .split_once(':')
            .ok_or_else(|| Error::InvalidInput(format!("attribute {name:?} is not of the form authority:name")))?;
        if authority.is_empty()
            || local.is_empty()
            || !authority.chars().all(valid_name_char)
            || !local.chars().all(valid_name_char)
        {
            return Err(Error::InvalidInput(format!("invalid attribute {name:?}")));
        }
        Ok(Attribute(name.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn authority(&self) -> AuthorityId {
        AuthorityId(self.0.split_once(':').expect("validated on construction").0.to_string())
    }

    pub fn is_managed_by(&self, id: &AuthorityId) -> bool {
        self.0.split_once(':').is_some_and(|(a, _)| a == id.0)
    }
}

/// A user's global identifier.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Gid(String);

impl Gid {
    pub fn new(gid: &str) -> Result<Self> {
        if gid.is_empty() {
            return Err(Error::InvalidInput("empty gid".into()));
        }
        Ok(Gid(gid.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn as_bytes(&self) -> &[u8] {
        self.0.as_bytes()
    }
}

/// `H1(sigma_j)`: what replaces an attribute name in a ciphertext's policy.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HiddenLabel(pub [u8; 32]);

impl fmt::Debug for HiddenLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HiddenLabel({})", hex::encode(&self.0[..6]))
    }
}

macro_rules! string_id {
    ($t:ty) => {
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl FromStr for $t {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                <$t>::new(s)
            }
        }

        impl Encode for $t {
            fn encode(&self, w: &mut Writer) {
                w.str(&self.0);
            }
        }

        impl Decode for $t {
            fn decode(r: &mut Reader<'_>) -> Result<Self> {
                let s = r.string()?;
                <$t>::new(&s).map_err(|e| Error::Decode(e.to_string()))
            }
        }
    };
}

string_id!(AuthorityId);
string_id!(Attribute);
string_id!(Gid);

impl Encode for HiddenLabel {
    fn encode(&self, w: &mut Writer) {
        w.fixed(&self.0);
    }
}

impl Decode for HiddenLabel {
    fn decode(r: &mut Reader<'_>) -> Result<Self> {
        Ok(HiddenLabel(r.array()?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn attribute_names() {
        let a = Attribute::new("aa1:doctor").unwrap();
        assert_eq!(a.authority().as_str(), "aa1");
        assert!(a.is_managed_by(&AuthorityId::new("aa1").unwrap()));
        assert!(!a.is_managed_by(&AuthorityId::new("aa10").unwrap()));
        for bad in ["doctor", ":doctor", "aa1:", "aa 1:doctor", "aa1:doc tor", "aa1:x:y", ""] {
            assert!(Attribute::new(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn gid_must_be_nonempty() {
        assert!(Gid::new("").is_err());
        assert_eq!(Gid::new("alice").unwrap().as_bytes(), b"alice");
    }

    #[test]
    fn decode_validates() {
        let mut w = Writer::new();
        w.str("not-an-attribute");
        let bytes = w.into_bytes();
        assert!(Attribute::from_bytes(&bytes).is_err());
    }
}
