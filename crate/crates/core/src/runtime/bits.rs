//! Canonical fixed-width bit encodings of learner state.

use crate::error::{Error, Result};

/// An owned bit string, most significant bit of each field first.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct BitString(Vec<bool>);

impl BitString {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        BitString(bits)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }
}

#[derive(Debug, Default)]
pub struct BitWriter {
    bits: Vec<bool>,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push_bool(&mut self, b: bool) {
        self.bits.push(b);
    }

    /// Writes `value` in exactly `width` bits.
    pub fn push_uint(&mut self, value: u64, width: usize) {
        debug_assert!(width >= 64 || value >> width == 0, "{value} does not fit {width} bits");
        for i in (0..width).rev() {
            self.bits.push((value >> i) & 1 == 1);
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn finish(self) -> BitString {
        BitString(self.bits)
    }
}

pub struct BitReader<'a> {
    bits: &'a [bool],
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(s: &'a BitString) -> Self {
        BitReader { bits: &s.0, pos: 0 }
    }

    pub fn read_bool(&mut self) -> Result<bool> {
        let b = *self.bits.get(self.pos).ok_or_else(|| Error::Decode("unexpected end of bits".into()))?;
        self.pos += 1;
        Ok(b)
    }

    pub fn read_uint(&mut self, width: usize) -> Result<u64> {
        let mut v = 0u64;
        for _ in 0..width {
            v = (v << 1) | self.read_bool()? as u64;
        }
        Ok(v)
    }

    /// Fails unless every bit was consumed.
    pub fn finish(self) -> Result<()> {
        if self.pos != self.bits.len() {
            return Err(Error::Decode(format!("{} trailing bits", self.bits.len() - self.pos)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn uint_fields_round_trip(fields in proptest::collection::vec((0u64..1 << 20, 20usize..24), 0..8)) {
            let mut w = BitWriter::new();
            for &(v, width) in &fields {
                w.push_uint(v, width);
            }
            let s = w.finish();
            prop_assert_eq!(s.len(), fields.iter().map(|f| f.1).sum::<usize>());
            let mut r = BitReader::new(&s);
            for &(v, width) in &fields {
                prop_assert_eq!(r.read_uint(width).unwrap(), v);
            }
            prop_assert!(r.finish().is_ok());
        }
    }

    #[test]
    fn reader_reports_truncation_and_trailing_bits() {
        let mut w = BitWriter::new();
        w.push_uint(5, 3);
        let s = w.finish();
        let mut r = BitReader::new(&s);
        assert!(r.read_uint(4).is_err());
        let r = BitReader::new(&s);
        assert!(r.finish().is_err());
    }
}
