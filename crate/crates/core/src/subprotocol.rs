//! Two-party key establishment behind a uniform interface.
//!
//! Every edge of the hierarchy is created by one run of a sub-protocol. Two
//! are provided: a qubit-level BB84 simulation and an ideal oracle that hands
//! both parties the same uniformly random key.

use std::fmt;

use rand::seq::index;
use rand::{Rng, RngCore};
use thiserror::Error;

use crate::key::Key;
use crate::quantum::{measure, prepare, transmit, Basis, ChannelModel};

pub const DEFAULT_QBER_THRESHOLD: f64 = 0.11;

#[derive(Debug, Clone, PartialEq)]
pub enum AbortReason {
    QberExceeded { qber: f64, threshold: f64 },
    InsufficientRounds { rounds: u64, sifted: usize },
}

impl fmt::Display for AbortReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AbortReason::QberExceeded { qber, threshold } => {
                write!(f, "QberExceeded(qber={qber:.4} > {threshold})")
            }
            AbortReason::InsufficientRounds { rounds, sifted } => {
                write!(f, "InsufficientRounds(rounds={rounds}, sifted={sifted})")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SessionError {
    #[error("requested key length must be at least one bit")]
    InvalidLength,
    #[error("qber threshold {0} outside [0, 1]")]
    InvalidThreshold(f64),
    #[error("sub-protocol aborted: {reason}")]
    Aborted {
        reason: AbortReason,
        session: Box<SessionResult>,
    },
}

/// Record of one sub-protocol run.
///
/// `key_initiator` and `key_responder` are `None` when the run aborted. An
/// accepted noisy BB84 run may leave the two keys different; that mismatch
/// is reported through [`SessionResult::key_mismatches`] and never corrected.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionResult {
    pub key_initiator: Option<Key>,
    pub key_responder: Option<Key>,
    pub qber: f64,
    pub check_errors: usize,
    pub sifted_bits: usize,
    pub qubits_sent: u64,
    pub check_bits_used: usize,
    pub aborted: bool,
    pub abort_reason: Option<AbortReason>,
}

impl SessionResult {
    pub fn key_mismatches(&self) -> Option<usize> {
        match (&self.key_initiator, &self.key_responder) {
            (Some(a), Some(b)) => a.hamming_distance(b).ok(),
            _ => None,
        }
    }

    /// Both keys, or the abort as an error.
    pub fn into_keys(self) -> Result<(Key, Key), SessionError> {
        match (self.key_initiator.clone(), self.key_responder.clone()) {
            (Some(a), Some(b)) if !self.aborted => Ok((a, b)),
            _ => Err(SessionError::Aborted {
                reason: self
                    .abort_reason
                    .clone()
                    .expect("aborted session carries a reason"),
                session: Box::new(self),
            }),
        }
    }

    /// `sifted_bits / qubits_sent`.
    pub fn sift_rate(&self) -> f64 {
        self.sifted_bits as f64 / self.qubits_sent as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bb84Config {
    pub channel: ChannelModel,
    pub qber_threshold: f64,
    /// Round cap; `None` means `16 n + 256`.
    pub max_rounds: Option<u64>,
}

impl Bb84Config {
    pub fn new(channel: ChannelModel, qber_threshold: f64) -> Self {
        Self {
            channel,
            qber_threshold,
            max_rounds: None,
        }
    }
}

impl Default for Bb84Config {
    fn default() -> Self {
        Self::new(ChannelModel::ideal(), DEFAULT_QBER_THRESHOLD)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SubprotocolKind {
    Bb84(Bb84Config),
    IdealOracle,
}

/// Anything that can hand two parties a shared n-bit key.
pub trait KeyEstablishment {
    fn establish(&self, n: usize, rng: &mut dyn RngCore) -> Result<SessionResult, SessionError>;
}

impl KeyEstablishment for SubprotocolKind {
    fn establish(&self, n: usize, rng: &mut dyn RngCore) -> Result<SessionResult, SessionError> {
        establish_key(self, n, rng)
    }
}

impl KeyEstablishment for Bb84Config {
    fn establish(&self, n: usize, rng: &mut dyn RngCore) -> Result<SessionResult, SessionError> {
        run_bb84_with(n, self, rng)?.into_checked()
    }
}

impl SessionResult {
    fn into_checked(self) -> Result<SessionResult, SessionError> {
        if self.aborted {
            return Err(SessionError::Aborted {
                reason: self
                    .abort_reason
                    .clone()
                    .expect("aborted session carries a reason"),
                session: Box::new(self),
            });
        }
        Ok(self)
    }
}

/// Runs the chosen sub-protocol; an abort comes back as
/// [`SessionError::Aborted`] carrying the full session record.
pub fn establish_key<R: RngCore + ?Sized>(
    kind: &SubprotocolKind,
    n: usize,
    rng: &mut R,
) -> Result<SessionResult, SessionError> {
    match kind {
        SubprotocolKind::IdealOracle => ideal_oracle(n, rng),
        SubprotocolKind::Bb84(config) => run_bb84_with(n, config, rng)?.into_checked(),
    }
}

/// Ideal exchange. By convention it is charged `2n` qubits, half of them
/// check bits, matching a lossless maximally efficient sub-protocol.
pub fn ideal_oracle<R: RngCore + ?Sized>(
    n: usize,
    rng: &mut R,
) -> Result<SessionResult, SessionError> {
    let key = Key::random(n, rng).map_err(|_| SessionError::InvalidLength)?;
    Ok(SessionResult {
        key_initiator: Some(key.clone()),
        key_responder: Some(key),
        qber: 0.0,
        check_errors: 0,
        sifted_bits: 2 * n,
        qubits_sent: 2 * n as u64,
        check_bits_used: n,
        aborted: false,
        abort_reason: None,
    })
}

pub fn run_bb84<R: RngCore + ?Sized>(
    n: usize,
    channel: ChannelModel,
    qber_threshold: f64,
    rng: &mut R,
) -> Result<SessionResult, SessionError> {
    run_bb84_with(n, &Bb84Config::new(channel, qber_threshold), rng)
}

/// BB84 with basis sifting and a public comparison of half the sifted bits.
///
/// Rounds continue until `2n` sifted bits exist. `floor(sifted / 2)` positions
/// chosen uniformly at random are compared; if the error fraction exceeds the
/// threshold the session aborts, otherwise the first `n` unchecked sifted bits
/// become the key. `Err` is returned only for invalid parameters; a protocol
/// abort is an `Ok` record with `aborted == true`.
pub fn run_bb84_with<R: RngCore + ?Sized>(
    n: usize,
    config: &Bb84Config,
    rng: &mut R,
) -> Result<SessionResult, SessionError> {
    if n == 0 {
        return Err(SessionError::InvalidLength);
    }
    let threshold = config.qber_threshold;
    if !(0.0..=1.0).contains(&threshold) {
        return Err(SessionError::InvalidThreshold(threshold));
    }
    let target = 2 * n;
    let max_rounds = config.max_rounds.unwrap_or(16 * n as u64 + 256);

    let mut sender = Vec::with_capacity(target);
    let mut receiver = Vec::with_capacity(target);
    let mut rounds = 0u64;
    while sender.len() < target {
        if rounds == max_rounds {
            return Ok(aborted(
                AbortReason::InsufficientRounds {
                    rounds,
                    sifted: sender.len(),
                },
                rounds,
                sender.len(),
            ));
        }
        rounds += 1;
        let bit = rng.gen::<bool>();
        let basis = Basis::random(rng);
        let received = transmit(prepare(bit, basis), &config.channel, rng);
        let measured_in = Basis::random(rng);
        let outcome = measure(received, measured_in, rng);
        if basis == measured_in {
            sender.push(bit);
            receiver.push(outcome);
        }
    }

    let sifted = sender.len();
    let checks = sifted / 2;
    let mut is_check = vec![false; sifted];
    for i in index::sample(rng, sifted, checks) {
        is_check[i] = true;
    }
    let check_errors = (0..sifted)
        .filter(|&i| is_check[i] && sender[i] != receiver[i])
        .count();
    let qber = check_errors as f64 / checks as f64;

    if qber > threshold {
        let mut record = aborted(
            AbortReason::QberExceeded { qber, threshold },
            rounds,
            sifted,
        );
        record.qber = qber;
        record.check_errors = check_errors;
        record.check_bits_used = checks;
        return Ok(record);
    }

    let keep = |bits: &[bool]| -> Key {
        let kept: Vec<bool> = (0..sifted)
            .filter(|&i| !is_check[i])
            .map(|i| bits[i])
            .take(n)
            .collect();
        Key::from_bits(kept).expect("n >= 1 unchecked bits")
    };
    Ok(SessionResult {
        key_initiator: Some(keep(&sender)),
        key_responder: Some(keep(&receiver)),
        qber,
        check_errors,
        sifted_bits: sifted,
        qubits_sent: rounds,
        check_bits_used: checks,
        aborted: false,
        abort_reason: None,
    })
}

fn aborted(reason: AbortReason, rounds: u64, sifted: usize) -> SessionResult {
    SessionResult {
        key_initiator: None,
        key_responder: None,
        qber: 0.0,
        check_errors: 0,
        sifted_bits: sifted,
        qubits_sent: rounds,
        check_bits_used: 0,
        aborted: true,
        abort_reason: Some(reason),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{seeded, EveModel};

    fn sigma(p: f64, n: f64) -> f64 {
        (p * (1.0 - p) / n).sqrt()
    }

    #[test]
    fn oracle_keys_agree() {
        let s = establish_key(&SubprotocolKind::IdealOracle, 8, &mut seeded(7)).unwrap();
        assert_eq!(s.key_initiator, s.key_responder);
        assert_eq!(s.key_initiator.as_ref().unwrap().len(), 8);
        assert_eq!(s.qber, 0.0);
        assert!(!s.aborted);
        assert_eq!(s.qubits_sent, 16);
    }

    #[test]
    fn zero_length_rejected() {
        assert_eq!(
            establish_key(&SubprotocolKind::IdealOracle, 0, &mut seeded(0)),
            Err(SessionError::InvalidLength)
        );
        assert_eq!(
            run_bb84(0, ChannelModel::ideal(), 0.11, &mut seeded(0)),
            Err(SessionError::InvalidLength)
        );
    }

    #[test]
    fn threshold_validated() {
        assert_eq!(
            run_bb84(4, ChannelModel::ideal(), 1.5, &mut seeded(0)),
            Err(SessionError::InvalidThreshold(1.5))
        );
    }

    #[test]
    fn noiseless_bb84_gives_identical_keys() {
        let kind = SubprotocolKind::Bb84(Bb84Config::default());
        for seed in 0..20 {
            let s = establish_key(&kind, 128, &mut seeded(seed)).unwrap();
            assert_eq!(s.qber, 0.0);
            assert_eq!(s.key_initiator, s.key_responder);
            assert_eq!(s.key_initiator.unwrap().len(), 128);
            assert_eq!(s.sifted_bits, 256);
            assert_eq!(s.check_bits_used, 128);
        }
    }

    #[test]
    fn sift_rate_near_half() {
        let mut rng = seeded(11);
        let (mut sifted, mut sent) = (0usize, 0u64);
        for _ in 0..200 {
            let s = run_bb84(64, ChannelModel::ideal(), 0.11, &mut rng).unwrap();
            assert!(!s.aborted);
            sifted += s.sifted_bits;
            sent += s.qubits_sent;
        }
        let rate = sifted as f64 / sent as f64;
        assert!(
            (rate - 0.5).abs() <= 3.0 * sigma(0.5, sent as f64),
            "rate {rate}"
        );
    }

    #[test]
    fn noisy_run_reports_qber() {
        let channel = ChannelModel::new(EveModel::None, 0.05).unwrap();
        let mut rng = seeded(12);
        let (mut errors, mut checks, mut accepted) = (0usize, 0usize, 0usize);
        for _ in 0..300 {
            let s = run_bb84(64, channel, 0.11, &mut rng).unwrap();
            errors += s.check_errors;
            checks += s.check_bits_used;
            if !s.aborted {
                accepted += 1;
                assert!(s.key_mismatches().is_some());
            }
        }
        let rate = errors as f64 / checks as f64;
        assert!(
            (rate - 0.05).abs() <= 3.0 * sigma(0.05, checks as f64),
            "rate {rate}"
        );
        assert!(accepted > 250);
    }

    #[test]
    fn intercept_resend_aborts() {
        let kind = SubprotocolKind::Bb84(Bb84Config::new(ChannelModel::intercept_resend(), 0.11));
        match establish_key(&kind, 1000, &mut seeded(13)) {
            Err(SessionError::Aborted {
                reason: AbortReason::QberExceeded { qber, .. },
                session,
            }) => {
                assert!(session.aborted);
                assert!(session.key_initiator.is_none());
                assert!((qber - 0.25).abs() <= 3.0 * sigma(0.25, 1000.0));
            }
            other => panic!("expected abort, got {other:?}"),
        }
    }

    #[test]
    fn round_cap_aborts() {
        let config = Bb84Config {
            max_rounds: Some(10),
            ..Bb84Config::default()
        };
        let s = run_bb84_with(64, &config, &mut seeded(14)).unwrap();
        assert!(s.aborted);
        assert!(matches!(
            s.abort_reason,
            Some(AbortReason::InsufficientRounds { rounds: 10, .. })
        ));
        assert_eq!(s.qubits_sent, 10);
    }

    #[test]
    fn lowering_threshold_never_rescues_an_abort() {
        for seed in 0..50 {
            let run = |t: f64| {
                let channel = ChannelModel::new(EveModel::None, 0.1).unwrap();
                run_bb84(32, channel, t, &mut seeded(seed)).unwrap().aborted
            };
            let thresholds = [0.3, 0.2, 0.11, 0.05, 0.0];
            let outcomes: Vec<bool> = thresholds.iter().map(|&t| run(t)).collect();
            for w in outcomes.windows(2) {
                assert!(!(w[0] && !w[1]), "seed {seed}: {outcomes:?}");
            }
        }
    }

    #[test]
    fn trait_object_dispatch() {
        let kinds: Vec<Box<dyn KeyEstablishment>> = vec![
            Box::new(SubprotocolKind::IdealOracle),
            Box::new(Bb84Config::default()),
        ];
        let mut rng = seeded(15);
        for k in &kinds {
            let s = k.establish(16, &mut rng).unwrap();
            assert_eq!(s.key_initiator, s.key_responder);
        }
    }
}
