//! Fixed-length bit strings and their XOR algebra.
//!
//! Every secret in the hierarchy (per-edge keys, the master key, messages and
//! announced ciphertexts) is an n-bit [`Key`]. Bits are indexed from the most
//! significant end, so `Key::from_bits_str("1000")` has bit 0 set.

use std::fmt;
use std::hash::Hasher;

use fnv::FnvHasher;
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KeyError {
    #[error("key length must be at least one bit")]
    Empty,
    #[error("key length mismatch: {left} bits vs {right} bits")]
    LengthMismatch { left: usize, right: usize },
    #[error("invalid bit string {0:?}")]
    InvalidBits(String),
    #[error("invalid hex string {input:?} for a {bits}-bit key")]
    InvalidHex { input: String, bits: usize },
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Key {
    bits: Vec<bool>,
}

impl Key {
    pub fn from_bits(bits: Vec<bool>) -> Result<Self, KeyError> {
        if bits.is_empty() {
            return Err(KeyError::Empty);
        }
        Ok(Self { bits })
    }

    /// Parses a string of `0`/`1` characters.
    pub fn from_bits_str(s: &str) -> Result<Self, KeyError> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(KeyError::InvalidBits(s.to_string())),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_bits(bits)
    }

    pub fn zero(len: usize) -> Result<Self, KeyError> {
        Self::from_bits(vec![false; len])
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Result<Self, KeyError> {
        Self::from_bits((0..len).map(|_| rng.gen::<bool>()).collect())
    }

    /// Parses a big-endian hex string holding exactly `len` bits.
    ///
    /// The string must have `ceil(len / 4)` digits and any padding bits in the
    /// leading digit must be zero.
    pub fn from_hex(s: &str, len: usize) -> Result<Self, KeyError> {
        if len == 0 {
            return Err(KeyError::Empty);
        }
        let bad = || KeyError::InvalidHex {
            input: s.to_string(),
            bits: len,
        };
        let digits = len.div_ceil(4);
        if s.len() != digits {
            return Err(bad());
        }
        let mut all = Vec::with_capacity(digits * 4);
        for c in s.chars() {
            let v = c.to_digit(16).ok_or_else(bad)?;
            all.extend((0..4).rev().map(|i| (v >> i) & 1 == 1));
        }
        let pad = digits * 4 - len;
        if all[..pad].iter().any(|&b| b) {
            return Err(bad());
        }
        Self::from_bits(all.split_off(pad))
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    /// Always false; kept for clippy's `len_without_is_empty`.
    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn bit(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn is_zero(&self) -> bool {
        self.bits.iter().all(|&b| !b)
    }

    pub fn flip_bit(&mut self, i: usize) {
        self.bits[i] = !self.bits[i];
    }

    pub fn xor(&self, other: &Key) -> Result<Key, KeyError> {
        let mut out = self.clone();
        out.xor_assign(other)?;
        Ok(out)
    }

    pub fn xor_assign(&mut self, other: &Key) -> Result<(), KeyError> {
        if self.len() != other.len() {
            return Err(KeyError::LengthMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        for (a, b) in self.bits.iter_mut().zip(&other.bits) {
            *a ^= *b;
        }
        Ok(())
    }

    /// XOR of a nonempty collection of equal-length keys.
    pub fn xor_all<'a, I>(keys: I) -> Result<Key, KeyError>
    where
        I: IntoIterator<Item = &'a Key>,
    {
        let mut iter = keys.into_iter();
        let mut acc = iter.next().ok_or(KeyError::Empty)?.clone();
        for k in iter {
            acc.xor_assign(k)?;
        }
        Ok(acc)
    }

    pub fn hamming_distance(&self, other: &Key) -> Result<usize, KeyError> {
        Ok(self.xor(other)?.bits.iter().filter(|&&b| b).count())
    }

    /// MSB-first packing; the last byte is zero-padded on the right.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.bits
            .chunks(8)
            .map(|chunk| {
                chunk
                    .iter()
                    .enumerate()
                    .fold(0u8, |acc, (i, &b)| acc | ((b as u8) << (7 - i)))
            })
            .collect()
    }

    pub fn to_hex(&self) -> String {
        let pad = self.len().div_ceil(4) * 4 - self.len();
        let padded: Vec<bool> = std::iter::repeat_n(false, pad)
            .chain(self.bits.iter().copied())
            .collect();
        padded
            .chunks(4)
            .map(|nib| {
                let v = nib.iter().fold(0u32, |acc, &b| (acc << 1) | b as u32);
                char::from_digit(v, 16).expect("nibble < 16")
            })
            .collect()
    }

    /// Non-secret, test-only commitment: FNV-1a 64 of [`Key::to_bytes`] as
    /// 16 lowercase hex digits.
    pub fn fingerprint(&self) -> String {
        let mut hasher = FnvHasher::default();
        hasher.write(&self.to_bytes());
        format!("{:016x}", hasher.finish())
    }
}

impl fmt::Display for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Key({self})")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn k(s: &str) -> Key {
        Key::from_bits_str(s).unwrap()
    }

    #[test]
    fn xor_by_hand() {
        assert_eq!(k("1010").xor(&k("0110")).unwrap(), k("1100"));
        assert_eq!(k("1010").xor(&k("1010")).unwrap(), Key::zero(4).unwrap());
    }

    #[test]
    fn xor_length_mismatch() {
        assert_eq!(
            k("10").xor(&k("101")),
            Err(KeyError::LengthMismatch { left: 2, right: 3 })
        );
    }

    #[test]
    fn empty_rejected() {
        assert_eq!(Key::zero(0), Err(KeyError::Empty));
        assert_eq!(Key::from_bits_str(""), Err(KeyError::Empty));
        assert!(Key::xor_all(std::iter::empty()).is_err());
    }

    #[test]
    fn hex_padding() {
        let key = Key::from_hex("5", 3).unwrap();
        assert_eq!(key, k("101"));
        assert_eq!(key.to_hex(), "5");
        assert!(Key::from_hex("8", 3).is_err());
        assert!(Key::from_hex("05", 3).is_err());
        assert_eq!(Key::from_hex("c3", 8).unwrap(), k("11000011"));
    }

    #[test]
    fn bytes_pack_msb_first() {
        assert_eq!(k("1").to_bytes(), vec![0x80]);
        assert_eq!(k("110000111").to_bytes(), vec![0xc3, 0x80]);
    }

    #[test]
    fn fingerprint_is_fnv1a() {
        // FNV-1a 64 of the single byte 0xa0, computed independently.
        let mut h: u64 = 0xcbf29ce484222325;
        h ^= 0xa0;
        h = h.wrapping_mul(0x100000001b3);
        assert_eq!(k("1010").fingerprint(), format!("{h:016x}"));
    }

    fn key_pair() -> impl Strategy<Value = (Key, Key, Key)> {
        (1usize..40).prop_flat_map(|n| {
            let bits = || proptest::collection::vec(any::<bool>(), n);
            (bits(), bits(), bits()).prop_map(|(a, b, c)| {
                (
                    Key::from_bits(a).unwrap(),
                    Key::from_bits(b).unwrap(),
                    Key::from_bits(c).unwrap(),
                )
            })
        })
    }

    proptest! {
        #[test]
        fn xor_group_laws((a, b, c) in key_pair()) {
            let zero = Key::zero(a.len()).unwrap();
            prop_assert_eq!(a.xor(&b).unwrap(), b.xor(&a).unwrap());
            prop_assert_eq!(
                a.xor(&b).unwrap().xor(&c).unwrap(),
                a.xor(&b.xor(&c).unwrap()).unwrap()
            );
            prop_assert_eq!(a.xor(&a).unwrap(), zero.clone());
            prop_assert_eq!(a.xor(&zero).unwrap(), a.clone());
        }

        #[test]
        fn hex_round_trip((a, _, _) in key_pair()) {
            prop_assert_eq!(Key::from_hex(&a.to_hex(), a.len()).unwrap(), a);
        }
    }
}
