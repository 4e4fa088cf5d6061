//! Bit-position permutations used to lock an agent's contribution.

use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::key::Key;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PermutationError {
    #[error("mapping is not a bijection on 0..{0}")]
    NotBijection(usize),
    #[error("permutation of {perm} positions applied to a {key}-bit key")]
    LengthMismatch { perm: usize, key: usize },
}

/// A bijection on `0..n`: the bit at position `i` moves to `mapping[i]`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    mapping: Vec<usize>,
}

impl Permutation {
    pub fn new(mapping: Vec<usize>) -> Result<Self, PermutationError> {
        let n = mapping.len();
        let mut seen = vec![false; n];
        for &target in &mapping {
            if target >= n || std::mem::replace(&mut seen[target], true) {
                return Err(PermutationError::NotBijection(n));
            }
        }
        Ok(Self { mapping })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            mapping: (0..n).collect(),
        }
    }

    pub fn reverse(n: usize) -> Self {
        Self {
            mapping: (0..n).rev().collect(),
        }
    }

    /// Uniform draw by Fisher-Yates shuffle.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut mapping: Vec<usize> = (0..n).collect();
        mapping.shuffle(rng);
        Self { mapping }
    }

    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }

    pub fn mapping(&self) -> &[usize] {
        &self.mapping
    }

    pub fn is_identity(&self) -> bool {
        self.mapping.iter().enumerate().all(|(i, &t)| i == t)
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.len()];
        for (i, &t) in self.mapping.iter().enumerate() {
            inv[t] = i;
        }
        Self { mapping: inv }
    }

    pub fn apply(&self, key: &Key) -> Result<Key, PermutationError> {
        if key.len() != self.len() {
            return Err(PermutationError::LengthMismatch {
                perm: self.len(),
                key: key.len(),
            });
        }
        let mut out = vec![false; self.len()];
        for (i, &t) in self.mapping.iter().enumerate() {
            out[t] = key.bit(i);
        }
        Ok(Key::from_bits(out).expect("nonempty key"))
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Permutation{:?}", self.mapping)
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.mapping.iter().map(|t| t.to_string()).collect();
        write!(f, "[{}]", parts.join(" "))
    }
}
