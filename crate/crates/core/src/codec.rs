//! Canonical binary encoding shared by the wire protocol, persisted state and
//! size reports.
//!
//! Fixed order, big-endian integers, `u32` length prefixes for variable-size
//! fields, group elements at their fixed widths. The writer also tallies how
//! many scalars and group elements it emitted.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{Scalar, SourceElement, TargetElement};

/// Element counts observed while encoding.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ElementTally {
    pub scalars: usize,
    pub source: usize,
    pub target: usize,
}

impl ElementTally {
    /// Group elements in the symmetric view: one per dual source element plus
    /// one per target element.
    pub fn group_elements(&self) -> usize {
        self.source + self.target
    }
}

#[derive(Debug, Default)]
pub struct Writer {
    buf: Vec<u8>,
    tally: ElementTally,
}

impl Writer {
    pub fn new() -> Self {
        Writer::default()
    }

    pub fn u8(&mut self, v: u8) -> &mut Self {
        self.buf.push(v);
        self
    }

    pub fn u32(&mut self, v: u32) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn u64(&mut self, v: u64) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn len(&mut self, n: usize) -> &mut Self {
        self.u32(u32::try_from(n).expect("length exceeds u32"))
    }

    pub fn fixed(&mut self, bytes: &[u8]) -> &mut Self {
        self.buf.extend_from_slice(bytes);
        self
    }

    pub fn bytes(&mut self, bytes: &[u8]) -> &mut Self {
        self.len(bytes.len());
        self.fixed(bytes)
    }

    pub fn str(&mut self, s: &str) -> &mut Self {
        self.bytes(s.as_bytes())
    }

    pub fn scalar(&mut self, s: &Scalar) -> &mut Self {
        self.tally.scalars += 1;
        self.fixed(&s.to_bytes())
    }

    pub fn source(&mut self, e: &SourceElement) -> &mut Self {
        self.tally.source += 1;
        self.fixed(&e.to_bytes())
    }

    pub fn target(&mut self, e: &TargetElement) -> &mut Self {
        self.tally.target += 1;
        self.fixed(&e.to_bytes())
    }

    pub fn put<T: Encode + ?Sized>(&mut self, v: &T) -> &mut Self {
        v.encode(self);
        self
    }

    pub fn seq<T: Encode>(&mut self, items: &[T]) -> &mut Self {
        self.len(items.len());
        for item in items {
            item.encode(self);
        }
        self
    }

    pub fn map<K: Encode, V: Encode>(&mut self, map: &BTreeMap<K, V>) -> &mut Self {
        self.len(map.len());
        for (k, v) in map {
            k.encode(self);
            v.encode(self);
        }
        self
    }

    pub fn tally(&self) -> ElementTally {
        self.tally
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf
    }
}

pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub fn fixed(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(Error::Decode(format!(
                "truncated: need {n} bytes at offset {}, have {}",
                self.pos,
                self.remaining()
            )));
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.fixed(N)?.try_into().expect("fixed returns N bytes"))
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.fixed(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_be_bytes(self.array()?))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_be_bytes(self.array()?))
    }

    /// A length prefix, checked against what is left in the buffer assuming
    /// each counted item occupies at least `min_item` bytes.
    pub fn len(&mut self, min_item: usize) -> Result<usize> {
        let n = self.u32()? as usize;
        if n.saturating_mul(min_item.max(1)) > self.remaining() {
            return Err(Error::Decode(format!("length {n} exceeds remaining input")));
        }
        Ok(n)
    }

    pub fn bytes(&mut self) -> Result<&'a [u8]> {
        let n = self.len(1)?;
        self.fixed(n)
    }

    pub fn string(&mut self) -> Result<String> {
        String::from_utf8(self.bytes()?.to_vec()).map_err(|_| Error::Decode("invalid utf-8".into()))
    }

    pub fn scalar(&mut self) -> Result<Scalar> {
        Scalar::from_bytes(self.fixed(Scalar::BYTES)?)
    }

    pub fn source(&mut self) -> Result<SourceElement> {
        SourceElement::from_bytes(self.fixed(SourceElement::BYTES)?)
    }

    pub fn target(&mut self) -> Result<TargetElement> {
        TargetElement::from_bytes(self.fixed(TargetElement::BYTES)?)
    }

    pub fn get<T: Decode>(&mut self) -> Result<T> {
        T::decode(self)
    }

    pub fn seq<T: Decode>(&mut self) -> Result<Vec<T>> {
        let n = self.len(1)?;
        (0..n).map(|_| T::decode(self)).collect()
    }

    /// Keys must be strictly increasing, which makes the encoding of a map
    /// unique.
    pub fn map<K: Decode + Ord, V: Decode>(&mut self) -> Result<BTreeMap<K, V>> {
        let n = self.len(1)?;
        let mut out = BTreeMap::new();
        for _ in 0..n {
            let k = K::decode(self)?;
            let v = V::decode(self)?;
            if out.last_key_value().is_some_and(|(last, _)| *last >= k) {
                return Err(Error::Decode("map keys out of order".into()));
            }
            out.insert(k, v);
        }
        Ok(out)
    }

    pub fn finish(&self) -> Result<()> {
        if self.remaining() != 0 {
            return Err(Error::Decode(format!("{} trailing bytes", self.remaining())));
        }
        Ok(())
    }
}

pub trait Encode {
    fn encode(&self, w: &mut Writer);

    fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        self.encode(&mut w);
        w.into_bytes()
    }

    fn element_tally(&self) -> ElementTally {
        let mut w = Writer::new();
        self.encode(&mut w);
        w.tally()
    }
}

pub trait Decode: Sized {
    fn decode(r: &mut Reader<'_>) -> Result<Self>;

    /// Decodes a complete buffer; trailing bytes are an error.
    fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        let v = Self::decode(&mut r)?;
        r.finish()?;
        Ok(v)
    }
}

impl Encode for Scalar {
    fn encode(&self, w: &mut Writer) {
        w.scalar(self);
    }
}

impl Decode for Scalar {
    fn decode(r: &mut Reader<'_>) -> Result<Self> {
        r.scalar()
    }
}

impl Encode for SourceElement {
    fn encode(&self, w: &mut Writer) {
        w.source(self);
    }
}

impl Decode for SourceElement {
    fn decode(r: &mut Reader<'_>) -> Result<Self> {
        r.source()
    }
}

impl Encode for TargetElement {
    fn encode(&self, w: &mut Writer) {
        w.target(self);
    }
}

impl Decode for TargetElement {
    fn decode(r: &mut Reader<'_>) -> Result<Self> {
        r.target()
    }
}

impl Encode for String {
    fn encode(&self, w: &mut Writer) {
        w.str(self);
    }
}

impl Decode for String {
    fn decode(r: &mut Reader<'_>) -> Result<Self> {
        r.string()
    }
}

impl Encode for Vec<u8> {
    fn encode(&self, w: &mut Writer) {
        w.bytes(self);
    }
}

impl Decode for Vec<u8> {
    fn decode(r: &mut Reader<'_>) -> Result<Self> {
        Ok(r.bytes()?.to_vec())
    }
}

impl Encode for [u8; 32] {
    fn encode(&self, w: &mut Writer) {
        w.fixed(self);
    }
}

impl Decode for [u8; 32] {
    fn decode(r: &mut Reader<'_>) -> Result<Self> {
        r.array()
    }
}

impl<A: Encode, B: Encode> Encode for (A, B) {
    fn encode(&self, w: &mut Writer) {
        self.0.encode(w);
        self.1.encode(w);
    }
}

impl<A: Decode, B: Decode> Decode for (A, B) {
    fn decode(r: &mut Reader<'_>) -> Result<Self> {
        Ok((A::decode(r)?, B::decode(r)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primitives_round_trip() {
        let g = SourceElement::generator();
        let t = TargetElement::generator();
        let mut w = Writer::new();
        w.u8(7).u32(9).u64(11).str("héllo").scalar(&Scalar::from_u64(5)).source(&g).target(&t);
        assert_eq!(w.tally(), ElementTally { scalars: 1, source: 1, target: 1 });
        let bytes = w.into_bytes();
        let mut r = Reader::new(&bytes);
        assert_eq!(r.u8().unwrap(), 7);
        assert_eq!(r.u32().unwrap(), 9);
        assert_eq!(r.u64().unwrap(), 11);
        assert_eq!(r.string().unwrap(), "héllo");
        assert_eq!(r.scalar().unwrap(), Scalar::from_u64(5));
        assert_eq!(r.source().unwrap(), g);
        assert_eq!(r.target().unwrap(), t);
        r.finish().unwrap();
    }

    #[test]
    fn truncation_and_trailing_bytes() {
        let bytes = Scalar::from_u64(1).to_bytes();
        assert!(matches!(Scalar::from_bytes(&bytes[..31]), Err(Error::Decode(_))));
        let mut long = bytes.to_vec();
        long.push(0);
        assert!(matches!(<Scalar as Decode>::from_bytes(&long), Err(Error::Decode(_))));
    }

    #[test]
    fn oversized_length_prefix_rejected() {
        let mut w = Writer::new();
        w.u32(1_000_000).fixed(b"ab");
        let bytes = w.into_bytes();
        assert!(Reader::new(&bytes).bytes().is_err());
    }

    #[test]
    fn map_keys_must_be_sorted() {
        let mut w = Writer::new();
        w.u32(2).str("b").str("x").str("a").str("y");
        let bytes = w.into_bytes();
        assert!(Reader::new(&bytes).map::<String, String>().is_err());

        let m: BTreeMap<String, String> = [("a".into(), "y".into()), ("b".into(), "x".into())].into();
        let mut w = Writer::new();
        w.map(&m);
        let bytes = w.into_bytes();
        assert_eq!(Reader::new(&bytes).map::<String, String>().unwrap(), m);
    }
}
