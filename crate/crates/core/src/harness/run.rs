use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::analysis::{self, ComparisonRow};
use crate::key::Key;
use crate::keytree::{AgentId, HierarchyTree};
use crate::quantum::{seeded, RandomSource};
use crate::sharing;
use crate::subprotocol::{
    Bb84Config, SessionError, SessionResult, SubprotocolKind, DEFAULT_QBER_THRESHOLD,
};

use super::scenario::{Scenario, ScenarioEvent, SubprotocolSpec};

pub const DEFAULT_KEY_BITS: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarnessConfig {
    pub key_bits: usize,
    pub qber_threshold: f64,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self {
            key_bits: DEFAULT_KEY_BITS,
            qber_threshold: DEFAULT_QBER_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("key length must be at least one bit")]
    KeyBits,
    #[error("qber threshold {0} outside [0, 1]")]
    QberThreshold(f64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    /// The sub-protocol aborted; an expected protocol outcome.
    Aborted(String),
    /// The operation refused the request (unknown agent, missing share...).
    Rejected(String),
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Ok => f.write_str("ok"),
            Outcome::Aborted(r) => write!(f, "aborted: {r}"),
            Outcome::Rejected(r) => write!(f, "rejected: {r}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranscriptEntry {
    pub line: usize,
    pub event: String,
    pub outcome: Outcome,
    /// Values announced on the public channel by this event.
    pub public: Vec<(String, String)>,
    /// Fingerprint of the master key after the event.
    pub km_fingerprint: String,
    pub table: Option<Vec<ComparisonRow>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    pub seed: u64,
    pub key_length: usize,
    pub qber_threshold: String,
    pub entries: Vec<TranscriptEntry>,
    pub final_tree: String,
}

impl Transcript {
    pub fn rejected(&self) -> impl Iterator<Item = &TranscriptEntry> {
        self.entries
            .iter()
            .filter(|e| matches!(e.outcome, Outcome::Rejected(_)))
    }

    pub fn is_clean(&self) -> bool {
        self.rejected().next().is_none()
    }
}

struct Runner {
    tree: HierarchyTree,
    rng: RandomSource,
    config: HarnessConfig,
    lock_order: Vec<AgentId>,
    last_broadcast: Option<Key>,
    last_recovered: Option<Key>,
}

type Step = (Outcome, Vec<(String, String)>, Option<Vec<ComparisonRow>>);

fn pair(k: &str, v: impl ToString) -> (String, String) {
    (k.to_string(), v.to_string())
}

fn session_public(s: &SessionResult) -> Vec<(String, String)> {
    vec![
        pair("qubits", s.qubits_sent),
        pair("sifted", s.sifted_bits),
        pair("qber", format!("{}/{}", s.check_errors, s.check_bits_used)),
    ]
}

impl Runner {
    fn kind(&self, spec: &SubprotocolSpec) -> SubprotocolKind {
        match spec {
            SubprotocolSpec::Oracle => SubprotocolKind::IdealOracle,
            SubprotocolSpec::Bb84(channel) => {
                SubprotocolKind::Bb84(Bb84Config::new(*channel, self.config.qber_threshold))
            }
        }
    }

    fn membership(result: Result<SessionResult, crate::keytree::KeyTreeError>) -> Step {
        match result {
            Ok(session) => {
                let mut public = session_public(&session);
                if let Some(mismatch) = session.key_mismatches().filter(|&m| m > 0) {
                    public.push(pair("key_mismatch_bits", mismatch));
                }
                (Outcome::Ok, public, None)
            }
            Err(crate::keytree::KeyTreeError::Session(SessionError::Aborted {
                reason,
                session,
            })) => (
                Outcome::Aborted(reason.to_string()),
                session_public(&session),
                None,
            ),
            Err(e) => (Outcome::Rejected(e.to_string()), Vec::new(), None),
        }
    }

    fn step(&mut self, event: &ScenarioEvent) -> Step {
        let rejected = |e: &dyn fmt::Display| (Outcome::Rejected(e.to_string()), Vec::new(), None);
        match event {
            ScenarioEvent::JoinPrimary { agent, subprotocol } => {
                let kind = self.kind(subprotocol);
                Self::membership(self.tree.join_primary(agent.clone(), &kind, &mut self.rng))
            }
            ScenarioEvent::JoinSecondary {
                boss,
                agent,
                subprotocol,
            } => {
                let kind = self.kind(subprotocol);
                Self::membership(self.tree.join_secondary(
                    boss,
                    agent.clone(),
                    &kind,
                    &mut self.rng,
                ))
            }
            ScenarioEvent::Promote {
                agent,
                new_boss,
                subprotocol,
            } => {
                let kind = self.kind(subprotocol);
                Self::membership(self.tree.promote(agent, new_boss, &kind, &mut self.rng))
            }
            ScenarioEvent::Revoke { agent } => match self.tree.revoke(agent) {
                Ok(()) => {
                    self.lock_order.retain(|a| self.tree.lock(a).is_some());
                    (Outcome::Ok, Vec::new(), None)
                }
                Err(e) => rejected(&e),
            },
            ScenarioEvent::SetInclusion {
                boss,
                child,
                included,
            } => match self.tree.set_inclusion(boss, child, *included) {
                Ok(()) => (Outcome::Ok, Vec::new(), None),
                Err(e) => rejected(&e),
            },
            ScenarioEvent::Lock { agent } => {
                match sharing::lock_agent(&mut self.tree, agent, &mut self.rng) {
                    Ok(_) => {
                        self.lock_order.push(agent.clone());
                        (Outcome::Ok, vec![pair("locked", agent)], None)
                    }
                    Err(e) => rejected(&e),
                }
            }
            ScenarioEvent::Disclose { agent } => {
                let target = agent.clone().or_else(|| {
                    self.lock_order
                        .iter()
                        .rev()
                        .find(|a| self.tree.lock(a).is_some_and(|l| !l.disclosed))
                        .cloned()
                });
                let Some(target) = target else {
                    return rejected(&"no undisclosed lock");
                };
                match sharing::disclose_in(&mut self.tree, &target) {
                    Ok(perm) => (
                        Outcome::Ok,
                        vec![pair("agent", &target), pair("permutation", perm)],
                        None,
                    ),
                    Err(e) => rejected(&e),
                }
            }
            ScenarioEvent::Broadcast { message_hex } => {
                let message = match Key::from_hex(message_hex, self.tree.key_length()) {
                    Ok(m) => m,
                    Err(e) => return rejected(&e),
                };
                match sharing::broadcast_message(&self.tree, &message) {
                    Ok(announced) => {
                        let public = vec![pair("S_A", announced.to_hex())];
                        self.last_broadcast = Some(announced);
                        (Outcome::Ok, public, None)
                    }
                    Err(e) => rejected(&e),
                }
            }
            ScenarioEvent::Recover { participants } => {
                let set: BTreeSet<AgentId> = participants.iter().cloned().collect();
                match sharing::recover_master(&self.tree, &set) {
                    Ok(key) => {
                        let public = vec![
                            pair("recovered_fp", key.fingerprint()),
                            pair("matches_km", key == *self.tree.master_key()),
                        ];
                        self.last_recovered = Some(key);
                        (Outcome::Ok, public, None)
                    }
                    Err(e) => rejected(&e),
                }
            }
            ScenarioEvent::RecoverMessage => {
                let (Some(announced), Some(master)) = (&self.last_broadcast, &self.last_recovered)
                else {
                    return rejected(&"recover_message needs a prior broadcast and recover");
                };
                match sharing::recover_message(announced, master) {
                    Ok(message) => (Outcome::Ok, vec![pair("message", message.to_hex())], None),
                    Err(e) => rejected(&e),
                }
            }
            ScenarioEvent::AuditCollusion { n_bits, primaries } => {
                match analysis::audit_collusion(*n_bits, *primaries) {
                    Ok(report) => (
                        Outcome::Ok,
                        vec![
                            pair("assignments", report.assignments),
                            pair("coalitions", report.subsets.len()),
                            pair("audit", if report.pass { "PASS" } else { "FAIL" }),
                        ],
                        None,
                    ),
                    Err(e) => rejected(&e),
                }
            }
            ScenarioEvent::EmitTable { m_values } => match analysis::comparison_table(m_values) {
                Ok(rows) => (Outcome::Ok, vec![pair("rows", rows.len())], Some(rows)),
                Err(e) => rejected(&e),
            },
        }
    }
}

/// Executes every event in file order against a fresh tree. Protocol-level
/// failures are recorded in the transcript; only configuration errors stop
/// the run.
pub fn run_scenario(
    scenario: &Scenario,
    seed: u64,
    config: &HarnessConfig,
) -> Result<Transcript, ConfigError> {
    if !(0.0..=1.0).contains(&config.qber_threshold) {
        return Err(ConfigError::QberThreshold(config.qber_threshold));
    }
    let tree = HierarchyTree::new(scenario.boss.clone(), config.key_bits)
        .map_err(|_| ConfigError::KeyBits)?;
    let mut runner = Runner {
        tree,
        rng: seeded(seed),
        config: *config,
        lock_order: Vec::new(),
        last_broadcast: None,
        last_recovered: None,
    };
    let entries = scenario
        .events
        .iter()
        .map(|line| {
            let (outcome, public, table) = runner.step(&line.event);
            TranscriptEntry {
                line: line.line,
                event: line.event.to_string(),
                outcome,
                public,
                km_fingerprint: runner.tree.master_key().fingerprint(),
                table,
            }
        })
        .collect();
    Ok(Transcript {
        seed,
        key_length: config.key_bits,
        qber_threshold: config.qber_threshold.to_string(),
        entries,
        final_tree: runner.tree.render(),
    })
}
