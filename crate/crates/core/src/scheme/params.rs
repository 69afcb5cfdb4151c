use crate::codec::{Decode, Encode, Reader, Writer};
use crate::error::{Error, Result};
use crate::group::{pair, HashSuite, SourceElement, TargetElement};

pub const CURVE_PROFILE: &str = "BLS12-381";
pub const SYMMETRIC_CIPHER: &str = "CHACHA20-POLY1305";

/// Public parameters shared by every party.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GlobalParams {
    lambda: u32,
    g: SourceElement,
    egg: TargetElement,
    hashes: HashSuite,
}

/// Selects the curve profile for security level `lambda`. Only 128 is
/// supported; the generators are fixed constants, so the result is the same
/// on every call.
pub fn global_setup(lambda: u32) -> Result<GlobalParams> {
    if lambda != 128 {
        return Err(Error::UnsupportedParameter(format!(
            "security level {lambda} (supported: 128)"
        )));
    }
    let g = SourceElement::generator();
    Ok(GlobalParams {
        lambda,
        g,
        egg: pair(&g, &g),
        hashes: HashSuite::default(),
    })
}

impl GlobalParams {
    pub fn lambda(&self) -> u32 {
        self.lambda
    }

    /// `g`
    pub fn generator(&self) -> &SourceElement {
        &self.g
    }

    /// `e(g, g)`
    pub fn egg(&self) -> &TargetElement {
        &self.egg
    }

    pub fn hashes(&self) -> &HashSuite {
        &self.hashes
    }

    /// Bits in the group order `p`.
    pub fn order_bits(&self) -> u32 {
        255
    }
}

impl Encode for GlobalParams {
    fn encode(&self, w: &mut Writer) {
        w.u32(self.lambda).str(CURVE_PROFILE).str(SYMMETRIC_CIPHER);
        for tag in self.hashes.tags() {
            w.bytes(tag);
        }
        let (l_se, l_h1, l_h2) = self.hashes.lengths();
        w.u32(l_se as u32).u32(l_h1 as u32).u32(l_h2 as u32);
        w.source(&self.g).target(&self.egg);
    }
}

impl Decode for GlobalParams {
    fn decode(r: &mut Reader<'_>) -> Result<Self> {
        let lambda = r.u32()?;
        let profile = r.string()?;
        let cipher = r.string()?;
        if profile != CURVE_PROFILE || cipher != SYMMETRIC_CIPHER {
            return Err(Error::UnsupportedParameter(format!("{profile}/{cipher}")));
        }
        let mut tags: [Vec<u8>; 5] = Default::default();
        for tag in tags.iter_mut() {
            *tag = r.bytes()?.to_vec();
        }
        let mut len = || -> Result<u16> {
            u16::try_from(r.u32()?).map_err(|_| Error::Decode("hash length".into()))
        };
        let (l_se, l_h1, l_h2) = (len()?, len()?, len()?);
        let hashes = HashSuite::new(tags, l_se, l_h1, l_h2)?;
        let g = r.source()?;
        let egg = r.target()?;
        if g != SourceElement::generator() || egg != TargetElement::generator() {
            return Err(Error::InvalidElement);
        }
        Ok(GlobalParams { lambda, g, egg, hashes })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn setup_is_deterministic() {
        let a = global_setup(128).unwrap();
        let b = global_setup(128).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.hashes().lengths(), (256, 256, 256));
        assert_eq!(a.order_bits().div_ceil(8), 32);
    }

    #[test]
    fn unsupported_level() {
        assert!(matches!(global_setup(80), Err(Error::UnsupportedParameter(_))));
    }

    #[test]
    fn encoding_round_trip() {
        let gp = global_setup(128).unwrap();
        assert_eq!(GlobalParams::from_bytes(&gp.to_bytes()).unwrap(), gp);
        let mut bytes = gp.to_bytes();
        let last = bytes.len() - 1;
        bytes[last] ^= 1;
        assert!(GlobalParams::from_bytes(&bytes).is_err());
    }
}
