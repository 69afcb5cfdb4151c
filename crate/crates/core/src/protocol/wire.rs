//! Frames and messages exchanged between the four roles.
//!
//! A frame is `len: u32 BE ∥ version: u8 ∥ kind: u8 ∥ body`, where `len`
//! counts everything after itself. Request kinds are below `0x80`, response
//! kinds at or above it.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use crate::codec::{Reader, Writer};
use crate::error::{Error, Result};
use crate::group::SourceElement;
use crate::ids::{Attribute, AuthorityId, Gid, HiddenLabel};
use crate::scheme::{AuthorityPublicKey, Ciphertext, CloudUserKey, PartialCiphertext, UserPublicKey};

use super::envelope::SecureEnvelope;

pub const VERSION: u8 = 1;
pub const MAX_FRAME: usize = 64 << 20;

pub type CtId = [u8; 32];

/// A decoded frame before its body is interpreted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WireMessage {
    pub version: u8,
    pub kind: u8,
    pub body: Vec<u8>,
}

impl WireMessage {
    pub fn new(kind: u8, body: Vec<u8>) -> Self {
        WireMessage { version: VERSION, kind, body }
    }

    pub fn to_frame(&self) -> Vec<u8> {
        let len = self.body.len() + 2;
        assert!(len <= MAX_FRAME, "frame too large");
        let mut out = Vec::with_capacity(len + 4);
        out.extend_from_slice(&(len as u32).to_be_bytes());
        out.push(self.version);
        out.push(self.kind);
        out.extend_from_slice(&self.body);
        out
    }

    pub fn from_frame(frame: &[u8]) -> Result<Self> {
        if frame.len() < 6 {
            return Err(Error::Protocol("short frame".into()));
        }
        let len = u32::from_be_bytes(frame[..4].try_into().expect("4 bytes")) as usize;
        if len != frame.len() - 4 {
            return Err(Error::Protocol(format!("frame length {len} does not match {}", frame.len() - 4)));
        }
        Self::from_payload(&frame[4..])
    }

    fn from_payload(payload: &[u8]) -> Result<Self> {
        if payload[0] != VERSION {
            return Err(Error::Protocol(format!("unsupported version {}", payload[0])));
        }
        Ok(WireMessage { version: payload[0], kind: payload[1], body: payload[2..].to_vec() })
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(&self.to_frame())?;
        w.flush()?;
        Ok(())
    }

    /// Reads one frame. `Ok(None)` on a clean end of stream.
    pub fn read_from(r: &mut impl Read) -> Result<Option<Self>> {
        let mut len = [0u8; 4];
        match r.read_exact(&mut len) {
            Ok(()) => {}
            Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => return Ok(None),
            Err(e) => return Err(e.into()),
        }
        let len = u32::from_be_bytes(len) as usize;
        if !(2..=MAX_FRAME).contains(&len) {
            return Err(Error::Protocol(format!("bad frame length {len}")));
        }
        let mut payload = vec![0u8; len];
        r.read_exact(&mut payload)?;
        Self::from_payload(&payload).map(Some)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[allow(clippy::large_enum_variant)]
pub enum Request {
    GetPublicKey,
    IssueKeys { gid: Gid, upk: UserPublicKey, attrs: Vec<Attribute> },
    StoreCt { ct: Ciphertext },
    RequestDec { gid: Gid, ct_id: CtId, labels: BTreeMap<Attribute, HiddenLabel> },
    Revoke { gid: Gid },
    RegisterKey { gid: Gid, upk: UserPublicKey, csk: CloudUserKey },
    FetchH { ct_id: CtId },
    FetchCt { ct_id: CtId },
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[allow(clippy::large_enum_variant)]
pub enum Response {
    PublicKey { id: AuthorityId, pk: AuthorityPublicKey },
    Envelope(SecureEnvelope),
    Stored(CtId),
    Partial(PartialCiphertext),
    Ack { changed: bool },
    H(SourceElement),
    Ct(Ciphertext),
    Error { code: ErrorCode, detail: String },
}

/// Error classes carried in error responses. The first four match the CLI
/// exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum ErrorCode {
    Other = 1,
    NotSatisfied = 2,
    VerificationFailed = 3,
    UnknownUser = 4,
    NotFound = 5,
    Protocol = 6,
    WrongAuthority = 7,
    InvalidKey = 8,
    DuplicateAttribute = 9,
    Revoked = 10,
    IssuanceAborted = 11,
    InvalidInput = 12,
    Unavailable = 13,
}

impl ErrorCode {
    fn from_u8(b: u8) -> Result<Self> {
        use ErrorCode::*;
        Ok(match b {
            1 => Other,
            2 => NotSatisfied,
            3 => VerificationFailed,
            4 => UnknownUser,
            5 => NotFound,
            6 => Protocol,
            7 => WrongAuthority,
            8 => InvalidKey,
            9 => DuplicateAttribute,
            10 => Revoked,
            11 => IssuanceAborted,
            12 => InvalidInput,
            13 => Unavailable,
            _ => return Err(Error::Protocol(format!("unknown error code {b}"))),
        })
    }
}

impl Response {
    pub fn from_error(e: &Error) -> Response {
        let code = match e {
            Error::NotSatisfied => ErrorCode::NotSatisfied,
            Error::VerificationFailed => ErrorCode::VerificationFailed,
            Error::UnknownUser(_) => ErrorCode::UnknownUser,
            Error::NotFound(_) => ErrorCode::NotFound,
            Error::Protocol(_) | Error::Decode(_) | Error::InvalidElement => ErrorCode::Protocol,
            Error::WrongAuthority(_) => ErrorCode::WrongAuthority,
            Error::InvalidKey(_) => ErrorCode::InvalidKey,
            Error::DuplicateAttribute(_) => ErrorCode::DuplicateAttribute,
            Error::Revoked(_) => ErrorCode::Revoked,
            Error::IssuanceAborted(_) => ErrorCode::IssuanceAborted,
            Error::InvalidInput(_) | Error::InvalidPolicy(_) => ErrorCode::InvalidInput,
            Error::Unavailable(_) => ErrorCode::Unavailable,
            _ => ErrorCode::Other,
        };
        let detail = match e {
            Error::UnknownUser(s)
            | Error::NotFound(s)
            | Error::Protocol(s)
            | Error::WrongAuthority(s)
            | Error::InvalidKey(s)
            | Error::DuplicateAttribute(s)
            | Error::Revoked(s)
            | Error::IssuanceAborted(s)
            | Error::InvalidInput(s)
            | Error::Unavailable(s) => s.clone(),
            other => other.to_string(),
        };
        Response::Error { code, detail }
    }

    /// Turns an error response back into the matching [`Error`].
    pub fn into_result(self) -> Result<Response> {
        let Response::Error { code, detail } = self else { return Ok(self) };
        Err(match code {
            ErrorCode::NotSatisfied => Error::NotSatisfied,
            ErrorCode::VerificationFailed => Error::VerificationFailed,
            ErrorCode::UnknownUser => Error::UnknownUser(detail),
            ErrorCode::NotFound => Error::NotFound(detail),
            ErrorCode::Protocol => Error::Protocol(detail),
            ErrorCode::WrongAuthority => Error::WrongAuthority(detail),
            ErrorCode::InvalidKey => Error::InvalidKey(detail),
            ErrorCode::DuplicateAttribute => Error::DuplicateAttribute(detail),
            ErrorCode::Revoked => Error::Revoked(detail),
            ErrorCode::IssuanceAborted => Error::IssuanceAborted(detail),
            ErrorCode::InvalidInput => Error::InvalidInput(detail),
            ErrorCode::Unavailable => Error::Unavailable(detail),
            ErrorCode::Other => Error::Other(detail),
        })
    }
}

fn unexpected(r: &Response) -> Error {
    Error::Protocol(format!("unexpected response {r:?}"))
}

macro_rules! expect_variant {
    ($name:ident, $pat:pat => $out:expr, $t:ty) => {
        pub fn $name(self) -> Result<$t> {
            match self.into_result()? {
                $pat => Ok($out),
                other => Err(unexpected(&other)),
            }
        }
    };
}

impl Response {
    expect_variant!(into_public_key, Response::PublicKey { id, pk } => (id, pk), (AuthorityId, AuthorityPublicKey));
    expect_variant!(into_envelope, Response::Envelope(e) => e, SecureEnvelope);
    expect_variant!(into_ct_id, Response::Stored(id) => id, CtId);
    expect_variant!(into_partial, Response::Partial(p) => p, PartialCiphertext);
    expect_variant!(into_ack, Response::Ack { changed } => changed, bool);
    expect_variant!(into_h, Response::H(h) => h, SourceElement);
    expect_variant!(into_ct, Response::Ct(ct) => ct, Ciphertext);
}

impl Request {
    pub fn kind(&self) -> u8 {
        match self {
            Request::GetPublicKey => 0x01,
            Request::IssueKeys { .. } => 0x02,
            Request::StoreCt { .. } => 0x10,
            Request::RequestDec { .. } => 0x11,
            Request::Revoke { .. } => 0x12,
            Request::RegisterKey { .. } => 0x13,
            Request::FetchH { .. } => 0x14,
            Request::FetchCt { .. } => 0x15,
        }
    }

    pub fn to_message(&self) -> WireMessage {
        let mut w = Writer::new();
        match self {
            Request::GetPublicKey => {}
            Request::IssueKeys { gid, upk, attrs } => {
                w.put(gid).put(upk).seq(attrs);
            }
            Request::StoreCt { ct } => {
                w.put(ct);
            }
            Request::RequestDec { gid, ct_id, labels } => {
                w.put(gid).fixed(ct_id).map(labels);
            }
            Request::Revoke { gid } => {
                w.put(gid);
            }
            Request::RegisterKey { gid, upk, csk } => {
                w.put(gid).put(upk).put(csk);
            }
            Request::FetchH { ct_id } | Request::FetchCt { ct_id } => {
                w.fixed(ct_id);
            }
        }
        WireMessage::new(self.kind(), w.into_bytes())
    }

    pub fn from_message(m: &WireMessage) -> Result<Request> {
        let mut r = Reader::new(&m.body);
        let req = match m.kind {
            0x01 => Request::GetPublicKey,
            0x02 => Request::IssueKeys { gid: r.get()?, upk: r.get()?, attrs: r.seq()? },
            0x10 => Request::StoreCt { ct: r.get()? },
            0x11 => Request::RequestDec { gid: r.get()?, ct_id: r.array()?, labels: r.map()? },
            0x12 => Request::Revoke { gid: r.get()? },
            0x13 => Request::RegisterKey { gid: r.get()?, upk: r.get()?, csk: r.get()? },
            0x14 => Request::FetchH { ct_id: r.array()? },
            0x15 => Request::FetchCt { ct_id: r.array()? },
            k => return Err(Error::Protocol(format!("unknown request kind {k:#04x}"))),
        };
        r.finish()?;
        Ok(req)
    }
}

impl Response {
    pub fn kind(&self) -> u8 {
        match self {
            Response::PublicKey { .. } => 0x81,
            Response::Envelope(_) => 0x82,
            Response::Stored(_) => 0x90,
            Response::Partial(_) => 0x91,
            Response::Ack { .. } => 0x92,
            Response::H(_) => 0x93,
            Response::Ct(_) => 0x94,
            Response::Error { .. } => 0xff,
        }
    }

    pub fn to_message(&self) -> WireMessage {
        let mut w = Writer::new();
        match self {
            Response::PublicKey { id, pk } => {
                w.put(id).put(pk);
            }
            Response::Envelope(e) => {
                w.put(e);
            }
            Response::Stored(id) => {
                w.fixed(id);
            }
            Response::Partial(p) => {
                w.put(p);
            }
            Response::Ack { changed } => {
                w.u8(*changed as u8);
            }
            Response::H(h) => {
                w.source(h);
            }
            Response::Ct(ct) => {
                w.put(ct);
            }
            Response::Error { code, detail } => {
                w.u8(*code as u8).str(detail);
            }
        }
        WireMessage::new(self.kind(), w.into_bytes())
    }

    pub fn from_message(m: &WireMessage) -> Result<Response> {
        let mut r = Reader::new(&m.body);
        let resp = match m.kind {
            0x81 => Response::PublicKey { id: r.get()?, pk: r.get()? },
            0x82 => Response::Envelope(r.get()?),
            0x90 => Response::Stored(r.array()?),
            0x91 => Response::Partial(r.get()?),
            0x92 => Response::Ack {
                changed: match r.u8()? {
                    0 => false,
                    1 => true,
                    b => return Err(Error::Protocol(format!("bad ack flag {b}"))),
                },
            },
            0x93 => Response::H(r.source()?),
            0x94 => Response::Ct(r.get()?),
            0xff => Response::Error { code: ErrorCode::from_u8(r.u8()?)?, detail: r.string()? },
            k => return Err(Error::Protocol(format!("unknown response kind {k:#04x}"))),
        };
        r.finish()?;
        Ok(resp)
    }
}
