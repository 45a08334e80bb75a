//! Bit-packed points of the hypercube {-1, 1}^n.
//!
//! Bit `i` of the packing holds coordinate `i`; a set bit is the sign `-1`
//! and a clear bit is `+1`. The same bits read as an integer give the
//! point's index in a dense function table.

use std::fmt;

use base64::{engine::general_purpose::STANDARD, Engine as _};
use rand::RngCore;

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SignVector {
    len: usize,
    words: Vec<u64>,
}

impl SignVector {
    /// The all-`+1` vector.
    pub fn ones(len: usize) -> Self {
        Self {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn from_signs(signs: &[i8]) -> Result<Self> {
        let mut v = Self::ones(signs.len());
        for (i, &s) in signs.iter().enumerate() {
            match s {
                1 => {}
                -1 => v.words[i / 64] |= 1 << (i % 64),
                other => {
                    return Err(Error::InvalidArgument(format!(
                        "sign entry {i} is {other}, expected +1 or -1"
                    )))
                }
            }
        }
        Ok(v)
    }

    /// Signs of a real vector; ties (zero) map to `+1`.
    pub fn from_reals_sign(values: &[f64]) -> Self {
        let mut v = Self::ones(values.len());
        for (i, &x) in values.iter().enumerate() {
            if x < 0.0 {
                v.words[i / 64] |= 1 << (i % 64);
            }
        }
        v
    }

    /// The point with the given table index (`len <= 64`).
    pub fn from_index(len: usize, index: u64) -> Self {
        assert!(len <= 64, "index form needs len <= 64");
        let mask = if len == 64 {
            u64::MAX
        } else {
            (1u64 << len) - 1
        };
        Self {
            len,
            words: if len == 0 { vec![] } else { vec![index & mask] },
        }
    }

    /// Uniformly random point.
    pub fn random<R: RngCore + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut words: Vec<u64> = (0..len.div_ceil(64)).map(|_| rng.next_u64()).collect();
        if !len.is_multiple_of(64) {
            if let Some(last) = words.last_mut() {
                *last &= (1u64 << (len % 64)) - 1;
            }
        }
        Self { len, words }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Table index of this point (`len <= 64`).
    pub fn index(&self) -> u64 {
        assert!(self.len <= 64, "index form needs len <= 64");
        self.words.first().copied().unwrap_or(0)
    }

    #[inline]
    pub fn is_negative(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    pub fn get(&self, i: usize) -> i8 {
        if self.is_negative(i) {
            -1
        } else {
            1
        }
    }

    #[inline]
    pub fn value(&self, i: usize) -> f64 {
        if self.is_negative(i) {
            -1.0
        } else {
            1.0
        }
    }

    pub fn set(&mut self, i: usize, sign: i8) {
        assert!(i < self.len);
        let bit = 1u64 << (i % 64);
        if sign < 0 {
            self.words[i / 64] |= bit;
        } else {
            self.words[i / 64] &= !bit;
        }
    }

    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len);
        self.words[i / 64] ^= 1 << (i % 64);
    }

    /// Coordinatewise product `self · other`.
    pub fn product(&self, other: &SignVector) -> Result<SignVector> {
        if self.len != other.len {
            return Err(Error::InvalidArgument(format!(
                "sign product length mismatch: {} vs {}",
                self.len, other.len
            )));
        }
        Ok(SignVector {
            len: self.len,
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a ^ b)
                .collect(),
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = i8> + '_ {
        (0..self.len).map(|i| self.get(i))
    }

    pub fn to_reals(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.value(i)).collect()
    }

    /// Sub-vector `[start, start + len)`.
    pub fn slice(&self, start: usize, len: usize) -> SignVector {
        assert!(start + len <= self.len);
        let mut out = SignVector::ones(len);
        for i in 0..len {
            if self.is_negative(start + i) {
                out.words[i / 64] |= 1 << (i % 64);
            }
        }
        out
    }

    /// Packed little-endian bit row: byte `k` bit `b` is coordinate `8k + b`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut bytes: Vec<u8> = self.words.iter().flat_map(|w| w.to_le_bytes()).collect();
        bytes.truncate(self.len.div_ceil(8));
        bytes
    }

    pub fn from_bytes(len: usize, bytes: &[u8]) -> Result<Self> {
        if bytes.len() != len.div_ceil(8) {
            return Err(Error::Encoding(format!(
                "{} bytes cannot hold exactly {len} signs",
                bytes.len()
            )));
        }
        let mut v = SignVector::ones(len);
        for (k, &byte) in bytes.iter().enumerate() {
            v.words[k / 8] |= (byte as u64) << (8 * (k % 8));
        }
        if !len.is_multiple_of(64) {
            let tail = v.words[len / 64] >> (len % 64);
            if tail != 0 {
                return Err(Error::Encoding("padding bits are not zero".into()));
            }
        }
        Ok(v)
    }

    pub fn to_base64(&self) -> String {
        STANDARD.encode(self.to_bytes())
    }

    pub fn from_base64(len: usize, text: &str) -> Result<Self> {
        let bytes = STANDARD
            .decode(text)
            .map_err(|e| Error::Encoding(format!("base64: {e}")))?;
        Self::from_bytes(len, &bytes)
    }
}

impl fmt::Debug for SignVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SignVector[")?;
        for s in self.iter() {
            f.write_str(if s > 0 { "+" } else { "-" })?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use proptest::prelude::*;

    #[test]
    fn index_decoding_matches_bits() {
        let v = SignVector::from_index(3, 0b101);
        assert_eq!(v.iter().collect::<Vec<_>>(), vec![-1, 1, -1]);
        assert_eq!(v.index(), 5);
    }

    #[test]
    fn rejects_non_sign_entries() {
        assert!(SignVector::from_signs(&[1, 0, -1]).is_err());
    }

    #[test]
    fn product_is_xor() {
        let a = SignVector::from_signs(&[1, -1, -1, 1]).unwrap();
        let b = SignVector::from_signs(&[-1, -1, 1, 1]).unwrap();
        let p = a.product(&b).unwrap();
        assert_eq!(p.iter().collect::<Vec<_>>(), vec![-1, 1, -1, 1]);
        assert_eq!(p.product(&b).unwrap(), a);
    }

    #[test]
    fn bad_padding_is_rejected() {
        assert!(SignVector::from_bytes(3, &[0b1000]).is_err());
        assert!(SignVector::from_bytes(9, &[0]).is_err());
    }

    proptest! {
        #[test]
        fn base64_roundtrip(len in 0usize..300, seed in any::<u64>()) {
            let v = SignVector::random(len, &mut stream(seed, 0));
            let back = SignVector::from_base64(len, &v.to_base64()).unwrap();
            prop_assert_eq!(back, v);
        }
    }
}
