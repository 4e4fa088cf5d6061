//! Qubit efficiency, the competitor comparison table, and enumeration audits.
//!
//! Efficiencies are exact rationals. `eta1 = c / q` counts secret bits per
//! qubit; `eta2 = c / (q + b)` also charges the `b` classical bits the other
//! agents send to whoever performs the final XOR.

use std::fmt::{self, Write as _};

use num_rational::Ratio;
use rand::RngCore;
use thiserror::Error;

use crate::key::Key;
use crate::keytree::{AgentId, HierarchyTree};
use crate::permutation::Permutation;
use crate::quantum::ChannelModel;
use crate::sharing::{self, Contribution};
use crate::subprotocol::{run_bb84, SessionError, SessionResult};

pub type Rational = Ratio<u64>;

pub const MAX_AUDIT_BITS: usize = 4;
pub const MAX_AUDIT_PRIMARIES: usize = 4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("party count {0} must be at least 2")]
    InvalidPartyCount(u64),
    #[error("no sessions to aggregate")]
    NoSessions,
    #[error("session {0} aborted")]
    AbortedSession(usize),
    #[error("audit bounds exceeded: {n_bits} bits x {primaries} primaries")]
    BoundsExceeded { n_bits: usize, primaries: usize },
    #[error(transparent)]
    Session(#[from] SessionError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Protocol {
    Hsu,
    Jia,
    Liao,
    Proposed,
}

impl Protocol {
    pub const ALL: [Protocol; 4] = [
        Protocol::Hsu,
        Protocol::Jia,
        Protocol::Liao,
        Protocol::Proposed,
    ];

    /// Qubits spent per shared secret bit in an m-party scheme.
    fn qubits(self, m: u64) -> u64 {
        match self {
            Protocol::Hsu => 2 * m,
            Protocol::Jia => 4 * m - 2,
            Protocol::Liao => 2 * m - 1,
            Protocol::Proposed => 2 * m - 2,
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Protocol::Hsu => "Hsu",
            Protocol::Jia => "Jia",
            Protocol::Liao => "Liao",
            Protocol::Proposed => "Proposed",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EfficiencyReport {
    pub protocol: Protocol,
    pub m: u64,
    pub eta1: Rational,
    /// Only computed for the proposed scheme.
    pub eta2: Option<Rational>,
    pub c: u64,
    pub q: u64,
    pub b: Option<u64>,
}

fn check_parties(m: u64) -> Result<(), AnalysisError> {
    if m < 2 {
        return Err(AnalysisError::InvalidPartyCount(m));
    }
    Ok(())
}

pub fn eta1(protocol: Protocol, m: u64) -> Result<Rational, AnalysisError> {
    check_parties(m)?;
    Ok(Ratio::new(1, protocol.qubits(m)))
}

/// `1 / (3m - 4)`: `q = 2(m - 1)` qubits plus `b = m - 2` decoding bits.
pub fn eta2_proposed(m: u64) -> Result<Rational, AnalysisError> {
    check_parties(m)?;
    let q = Protocol::Proposed.qubits(m);
    Ok(Ratio::new(1, q + (m - 2)))
}

pub fn efficiency_report(protocol: Protocol, m: u64) -> Result<EfficiencyReport, AnalysisError> {
    let eta1 = eta1(protocol, m)?;
    let proposed = protocol == Protocol::Proposed;
    Ok(EfficiencyReport {
        protocol,
        m,
        eta1,
        eta2: if proposed {
            Some(eta2_proposed(m)?)
        } else {
            None
        },
        c: 1,
        q: protocol.qubits(m),
        b: proposed.then_some(m - 2),
    })
}

/// Percentage rounded half-up to two decimals with trailing zeros dropped:
/// 1/6 -> "16.67%", 1/10 -> "10%", 1/198 -> "0.51%".
pub fn format_percent(value: Rational) -> String {
    let (num, den) = (*value.numer() as u128, *value.denom() as u128);
    let hundredths = (num * 20_000 + den) / (2 * den);
    let (int, frac) = (hundredths / 100, hundredths % 100);
    if frac == 0 {
        format!("{int}%")
    } else if frac % 10 == 0 {
        format!("{int}.{}%", frac / 10)
    } else {
        format!("{int}.{frac:02}%")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComparisonRow {
    pub m: u64,
    /// In [`Protocol::ALL`] order.
    pub reports: Vec<EfficiencyReport>,
}

impl ComparisonRow {
    pub fn report(&self, protocol: Protocol) -> &EfficiencyReport {
        self.reports
            .iter()
            .find(|r| r.protocol == protocol)
            .expect("row holds every protocol")
    }
}

pub fn comparison_table(m_values: &[u64]) -> Result<Vec<ComparisonRow>, AnalysisError> {
    m_values
        .iter()
        .map(|&m| {
            let reports = Protocol::ALL
                .iter()
                .map(|&p| efficiency_report(p, m))
                .collect::<Result<_, _>>()?;
            Ok(ComparisonRow { m, reports })
        })
        .collect()
}

pub fn render_table_text(rows: &[ComparisonRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>4}  {:<8} {:<8} {:<8} {:<9} Proposed eta2",
        "m", "Hsu", "Jia", "Liao", "Proposed"
    );
    for row in rows {
        let pct = |p: Protocol| format_percent(row.report(p).eta1);
        let eta2 = row
            .report(Protocol::Proposed)
            .eta2
            .map(format_percent)
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "{:>4}  {:<8} {:<8} {:<8} {:<9} {}",
            row.m,
            pct(Protocol::Hsu),
            pct(Protocol::Jia),
            pct(Protocol::Liao),
            pct(Protocol::Proposed),
            eta2
        );
    }
    out
}

pub const TABLE_CSV_HEADER: [&str; 9] = [
    "m",
    "protocol",
    "c",
    "q",
    "b",
    "eta1",
    "eta1_percent",
    "eta2",
    "eta2_percent",
];

pub fn table_csv_records(rows: &[ComparisonRow]) -> Vec<[String; 9]> {
    let mut records = Vec::new();
    for row in rows {
        for r in &row.reports {
            records.push([
                r.m.to_string(),
                r.protocol.to_string(),
                r.c.to_string(),
                r.q.to_string(),
                r.b.map(|b| b.to_string()).unwrap_or_default(),
                r.eta1.to_string(),
                format_percent(r.eta1),
                r.eta2.map(|e| e.to_string()).unwrap_or_default(),
                r.eta2.map(format_percent).unwrap_or_default(),
            ]);
        }
    }
    records
}

pub fn render_table_csv(rows: &[ComparisonRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TABLE_CSV_HEADER).expect("in-memory write");
    for rec in table_csv_records(rows) {
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

/// Realized efficiency: secret bits over every qubit actually transmitted.
/// Basis sifting discards about half of the BB84 transmissions, so this sits
/// near half of the idealized figure.
pub fn measured_eta1(
    sessions: &[SessionResult],
    secret_bits: u64,
) -> Result<Rational, AnalysisError> {
    if sessions.is_empty() {
        return Err(AnalysisError::NoSessions);
    }
    if let Some(i) = sessions.iter().position(|s| s.aborted) {
        return Err(AnalysisError::AbortedSession(i));
    }
    let qubits: u64 = sessions.iter().map(|s| s.qubits_sent).sum();
    Ok(Ratio::new(secret_bits, qubits))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetFraction {
    /// Indices of the colluding primaries.
    pub members: Vec<usize>,
    pub matches: u64,
    pub fraction: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditReport {
    pub n_bits: usize,
    pub num_primaries: usize,
    pub assignments: u64,
    pub subsets: Vec<SubsetFraction>,
    pub pass: bool,
}

fn key_from_index(value: u64, n_bits: usize) -> Key {
    Key::from_bits((0..n_bits).rev().map(|i| (value >> i) & 1 == 1).collect()).expect("n_bits >= 1")
}

/// Enumerates every key assignment for `num_primaries` agents of `n_bits`
/// each and, for every nonempty proper coalition, counts how often the XOR
/// of its shares equals the master key. PASS iff every count is exactly
/// `2^-n_bits` of the assignments.
pub fn audit_collusion(n_bits: usize, num_primaries: usize) -> Result<AuditReport, AnalysisError> {
    if !(1..=MAX_AUDIT_BITS).contains(&n_bits)
        || !(2..=MAX_AUDIT_PRIMARIES).contains(&num_primaries)
    {
        return Err(AnalysisError::BoundsExceeded {
            n_bits,
            primaries: num_primaries,
        });
    }
    let names: Vec<AgentId> = (0..num_primaries)
        .map(|i| AgentId::new(format!("P{i}")))
        .collect();
    let full = (1u32 << num_primaries) - 1;
    let coalitions: Vec<u32> = (1..full).collect();
    let mut matches = vec![0u64; coalitions.len()];
    let assignments = 1u64 << (n_bits * num_primaries);

    for assignment in 0..assignments {
        let mut tree = HierarchyTree::new("Boss", n_bits).expect("n_bits >= 1");
        for (i, name) in names.iter().enumerate() {
            let bits = (assignment >> (i * n_bits)) & ((1 << n_bits) - 1);
            tree.join_primary_with_key(name.clone(), key_from_index(bits, n_bits))
                .expect("fresh names, sized keys");
        }
        let shares: Vec<Contribution> = names
            .iter()
            .map(|n| Contribution {
                agent: n.clone(),
                value: tree.residual_key(n).expect("member"),
            })
            .collect();
        for (slot, &mask) in coalitions.iter().enumerate() {
            let coalition: Vec<Contribution> = (0..num_primaries)
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| shares[i].clone())
                .collect();
            if sharing::collusion_xor(&coalition).expect("nonempty, sized") == *tree.master_key() {
                matches[slot] += 1;
            }
        }
    }

    let expected = Ratio::new(1, 1u64 << n_bits);
    let subsets: Vec<SubsetFraction> = coalitions
        .iter()
        .zip(matches)
        .map(|(&mask, m)| SubsetFraction {
            members: (0..num_primaries).filter(|i| mask >> i & 1 == 1).collect(),
            matches: m,
            fraction: Ratio::new(m, assignments),
        })
        .collect();
    let pass = subsets.iter().all(|s| s.fraction == expected);
    Ok(AuditReport {
        n_bits,
        num_primaries,
        assignments,
        subsets,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LockAuditReport {
    pub n_bits: usize,
    pub cases: u64,
    /// Pairs (key, permutation) with `Pi(key) == key`.
    pub fixed_pairs: u64,
    /// Cases where recovery before disclosure still produced the master key.
    pub pre_disclosure_matches: u64,
    pub post_disclosure_matches: u64,
    pub pass: bool,
}

/// All permutations of `0..n` in lexicographic order.
pub fn all_permutations(n: usize) -> Vec<Permutation> {
    let mut current: Vec<usize> = (0..n).collect();
    let mut out = vec![Permutation::new(current.clone()).expect("identity")];
    loop {
        let Some(i) = (1..n).rev().find(|&i| current[i - 1] < current[i]) else {
            return out;
        };
        let j = (i..n)
            .rev()
            .find(|&j| current[j] > current[i - 1])
            .expect("pivot has a successor");
        current.swap(i - 1, j);
        current[i..].reverse();
        out.push(Permutation::new(current.clone()).expect("permutation"));
    }
}

/// For every locked key and every permutation, runs recovery before and
/// after disclosure. PASS iff pre-disclosure recovery succeeds exactly on
/// fixed pairs and post-disclosure recovery always succeeds.
pub fn audit_permutation_lock(n_bits: usize) -> Result<LockAuditReport, AnalysisError> {
    if !(1..=MAX_AUDIT_BITS).contains(&n_bits) {
        return Err(AnalysisError::BoundsExceeded {
            n_bits,
            primaries: 3,
        });
    }
    let perms = all_permutations(n_bits);
    let locked = AgentId::from("David");
    let everyone: std::collections::BTreeSet<AgentId> = ["Bob", "Charlie", "David"]
        .into_iter()
        .map(AgentId::from)
        .collect();
    let other = |seed: u64| key_from_index(seed & ((1 << n_bits) - 1), n_bits);
    let (mut cases, mut fixed, mut pre, mut post, mut consistent) = (0, 0, 0, 0, true);

    for value in 0..1u64 << n_bits {
        let key = key_from_index(value, n_bits);
        for perm in &perms {
            let mut tree = HierarchyTree::new("Alice", n_bits).expect("n_bits >= 1");
            tree.join_primary_with_key("Bob", other(0b1010))
                .expect("join");
            tree.join_primary_with_key("Charlie", other(0b0110))
                .expect("join");
            tree.join_primary_with_key(locked.clone(), key.clone())
                .expect("join");
            sharing::lock_agent_with(&mut tree, &locked, perm.clone()).expect("primary");

            let is_fixed = perm.apply(&key).expect("sized") == key;
            let before = sharing::recover_master(&tree, &everyone).expect("all present")
                == *tree.master_key();
            sharing::disclose_in(&mut tree, &locked).expect("fresh lock");
            let after = sharing::recover_master(&tree, &everyone).expect("all present")
                == *tree.master_key();

            cases += 1;
            fixed += is_fixed as u64;
            pre += before as u64;
            post += after as u64;
            consistent &= before == is_fixed && after;
        }
    }
    Ok(LockAuditReport {
        n_bits,
        cases,
        fixed_pairs: fixed,
        pre_disclosure_matches: pre,
        post_disclosure_matches: post,
        pass: consistent,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionPoint {
    pub check_bits: usize,
    pub trials: u64,
    pub accepted: u64,
}

impl DetectionPoint {
    /// Empirical probability that the session was NOT aborted.
    pub fn acceptance_rate(&self) -> f64 {
        self.accepted as f64 / self.trials as f64
    }
}

/// Monte Carlo estimate of how often a BB84 session with `check_bits` public
/// comparisons slips past the threshold on the given channel.
pub fn detection_point<R: RngCore + ?Sized>(
    check_bits: usize,
    trials: u64,
    channel: ChannelModel,
    qber_threshold: f64,
    rng: &mut R,
) -> Result<DetectionPoint, AnalysisError> {
    let mut accepted = 0;
    for _ in 0..trials {
        // 2n sifted bits, half of them compared.
        if !run_bb84(check_bits, channel, qber_threshold, rng)?.aborted {
            accepted += 1;
        }
    }
    Ok(DetectionPoint {
        check_bits,
        trials,
        accepted,
    })
}
