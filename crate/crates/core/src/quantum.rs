//! Idealized single-qubit model for prepare-and-measure key distribution.
//!
//! Only the four BB84 states ever occur, so a qubit is tracked as its
//! preparation basis plus the encoded bit. Measuring in the preparation basis
//! returns the bit; measuring in the conjugate basis returns a fair coin.

use std::fmt;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Seeded, portable random source used by every simulated session.
pub type RandomSource = ChaCha8Rng;

pub fn seeded(seed: u64) -> RandomSource {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Basis {
    /// Computational basis, |0> and |1>.
    Z,
    /// Diagonal basis, |+> and |->.
    X,
}

impl Basis {
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        if rng.gen::<bool>() {
            Basis::X
        } else {
            Basis::Z
        }
    }

    pub fn conjugate(self) -> Self {
        match self {
            Basis::Z => Basis::X,
            Basis::X => Basis::Z,
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Basis::Z => "Z",
            Basis::X => "X",
        })
    }
}

/// One of the four BB84 states. Deliberately not `Copy`: a measurement
/// consumes the symbol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QubitSymbol {
    pub basis: Basis,
    pub bit: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EveModel {
    None,
    /// Eve measures every qubit in a uniformly random basis and re-prepares
    /// her outcome in that basis.
    InterceptResendRandomBasis,
    InterceptResendFixedBasis(Basis),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("flip probability {0} outside [0, 1]")]
pub struct InvalidProbability(pub f64);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelModel {
    eve: EveModel,
    flip_probability: f64,
}

impl ChannelModel {
    pub fn new(eve: EveModel, flip_probability: f64) -> Result<Self, InvalidProbability> {
        if !(0.0..=1.0).contains(&flip_probability) {
            return Err(InvalidProbability(flip_probability));
        }
        Ok(Self {
            eve,
            flip_probability,
        })
    }

    pub fn ideal() -> Self {
        Self {
            eve: EveModel::None,
            flip_probability: 0.0,
        }
    }

    pub fn intercept_resend() -> Self {
        Self {
            eve: EveModel::InterceptResendRandomBasis,
            flip_probability: 0.0,
        }
    }

    pub fn eve(&self) -> EveModel {
        self.eve
    }

    pub fn flip_probability(&self) -> f64 {
        self.flip_probability
    }
}

impl Default for ChannelModel {
    fn default() -> Self {
        Self::ideal()
    }
}

pub fn prepare(bit: bool, basis: Basis) -> QubitSymbol {
    QubitSymbol { basis, bit }
}

pub fn measure<R: Rng + ?Sized>(q: QubitSymbol, basis: Basis, rng: &mut R) -> bool {
    if q.basis == basis {
        q.bit
    } else {
        rng.gen::<bool>()
    }
}

/// Sends a symbol through the channel: the eavesdropper acts first, then
/// the bit-flip noise.
pub fn transmit<R: Rng + ?Sized>(q: QubitSymbol, model: &ChannelModel, rng: &mut R) -> QubitSymbol {
    let mut q = match model.eve {
        EveModel::None => q,
        EveModel::InterceptResendRandomBasis => {
            let basis = Basis::random(rng);
            let outcome = measure(q, basis, rng);
            prepare(outcome, basis)
        }
        EveModel::InterceptResendFixedBasis(basis) => {
            let outcome = measure(q, basis, rng);
            prepare(outcome, basis)
        }
    };
    // Skip the draw entirely on a noiseless channel so that adding p = 0
    // noise does not perturb the random stream.
    if model.flip_probability > 0.0 && rng.gen_bool(model.flip_probability) {
        q.bit = !q.bit;
    }
    q
}
