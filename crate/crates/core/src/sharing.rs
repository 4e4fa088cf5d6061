//! Recovering the master key, one-time-pad broadcast, and permutation locks.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use thiserror::Error;

use crate::key::{Key, KeyError};
use crate::keytree::{AgentId, HierarchyTree};
use crate::permutation::Permutation;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SharingError {
    #[error("required participant {who} is missing")]
    MissingParticipant { who: AgentId },
    #[error("unknown agent {0}")]
    UnknownAgent(AgentId),
    #[error("{0} is not a primary agent")]
    NotPrimary(AgentId),
    #[error("{0} is already locked")]
    AlreadyLocked(AgentId),
    #[error("permutation already disclosed")]
    AlreadyDisclosed,
    #[error("the tree has no primary agents")]
    EmptyTree,
    #[error("no contributions given")]
    NoContributions,
    #[error(transparent)]
    Key(#[from] KeyError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contribution {
    pub agent: AgentId,
    pub value: Key,
}

/// Boss-side record of a locked agent. The permutation stays private until
/// [`disclose`] is called.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControlledState {
    pub locked_agent: AgentId,
    permutation: Permutation,
    pub disclosed: bool,
}

impl ControlledState {
    /// `Some` only after disclosure.
    pub fn permutation(&self) -> Option<&Permutation> {
        self.disclosed.then_some(&self.permutation)
    }

    pub(crate) fn permutation_unchecked(&self) -> &Permutation {
        &self.permutation
    }
}

/// Agents whose shares are needed: every primary, plus recursively every
/// subordinate included by a required agent. Sorted by name.
pub fn required_set(tree: &HierarchyTree) -> BTreeSet<AgentId> {
    let mut required = BTreeSet::new();
    let mut stack: Vec<AgentId> = tree.primaries().cloned().collect();
    while let Some(id) = stack.pop() {
        let node = tree.node(&id).expect("listed agents exist");
        stack.extend(node.included_subordinates.iter().cloned());
        required.insert(id);
    }
    required
}

/// The share each required agent supplies. A locked primary contributes its
/// key as it knows it (unpermuted) until the lock is disclosed.
pub fn required_contributions(
    tree: &HierarchyTree,
    participants: &BTreeSet<AgentId>,
) -> Result<Vec<Contribution>, SharingError> {
    if let Some(unknown) = participants.iter().find(|p| !tree.contains(p)) {
        return Err(SharingError::UnknownAgent(unknown.clone()));
    }
    let required = required_set(tree);
    if let Some(missing) = required.iter().find(|r| !participants.contains(r)) {
        return Err(SharingError::MissingParticipant {
            who: missing.clone(),
        });
    }
    required
        .into_iter()
        .map(|agent| {
            let value = contribution_of(tree, &agent)?;
            Ok(Contribution { agent, value })
        })
        .collect()
}

fn contribution_of(tree: &HierarchyTree, agent: &AgentId) -> Result<Key, SharingError> {
    let mut value = tree
        .residual_key(agent)
        .map_err(|_| SharingError::UnknownAgent(agent.clone()))?;
    if let Some(lock) = tree.lock(agent) {
        if let Some(perm) = lock.permutation() {
            let share = tree
                .node(agent)
                .and_then(|n| n.share_key.clone())
                .expect("primary has a key");
            value.xor_assign(&share)?;
            value.xor_assign(&perm.apply(&share).expect("lock sized to the tree"))?;
        }
    }
    Ok(value)
}

/// XOR of the required agents' shares. Fails structurally when a required
/// agent is absent; a wrong value (for instance an undisclosed lock) yields a
/// key that simply differs from the master key.
pub fn recover_master(
    tree: &HierarchyTree,
    participants: &BTreeSet<AgentId>,
) -> Result<Key, SharingError> {
    let contributions = required_contributions(tree, participants)?;
    if contributions.is_empty() {
        return Ok(Key::zero(tree.key_length())?);
    }
    Ok(Key::xor_all(contributions.iter().map(|c| &c.value))?)
}

/// Raw XOR of whatever a coalition holds, with no structural checks.
pub fn collusion_xor(contributions: &[Contribution]) -> Result<Key, SharingError> {
    if contributions.is_empty() {
        return Err(SharingError::NoContributions);
    }
    Ok(Key::xor_all(contributions.iter().map(|c| &c.value))?)
}

/// Public announcement `S = K_M xor M`.
pub fn broadcast_message(tree: &HierarchyTree, message: &Key) -> Result<Key, SharingError> {
    if tree.primaries().next().is_none() {
        return Err(SharingError::EmptyTree);
    }
    Ok(tree.master_key().xor(message)?)
}

pub fn recover_message(announced: &Key, recovered_master: &Key) -> Result<Key, SharingError> {
    Ok(announced.xor(recovered_master)?)
}

/// Replaces a primary agent's entry `K` in the master key by `Pi(K)` for a
/// uniformly drawn permutation `Pi`. The agent keeps holding plain `K`.
pub fn lock_agent<R: Rng + ?Sized>(
    tree: &mut HierarchyTree,
    agent: &AgentId,
    rng: &mut R,
) -> Result<ControlledState, SharingError> {
    let perm = Permutation::random(tree.key_length(), rng);
    lock_agent_with(tree, agent, perm)
}

pub fn lock_agent_with(
    tree: &mut HierarchyTree,
    agent: &AgentId,
    permutation: Permutation,
) -> Result<ControlledState, SharingError> {
    if !tree.contains(agent) {
        return Err(SharingError::UnknownAgent(agent.clone()));
    }
    if !tree.is_primary(agent) {
        return Err(SharingError::NotPrimary(agent.clone()));
    }
    if tree.lock(agent).is_some() {
        return Err(SharingError::AlreadyLocked(agent.clone()));
    }
    let root = tree.node(tree.root()).expect("root exists");
    let copy = root.subordinate_keys[agent].clone();
    let permuted = permutation
        .apply(&copy)
        .map_err(|_| KeyError::LengthMismatch {
            left: copy.len(),
            right: permutation.len(),
        })?;
    let delta = copy.xor(&permuted)?;
    let state = ControlledState {
        locked_agent: agent.clone(),
        permutation,
        disclosed: false,
    };
    tree.insert_lock(state.clone(), &delta)?;
    Ok(state)
}

pub fn disclose(lock: &mut ControlledState) -> Result<Permutation, SharingError> {
    if lock.disclosed {
        return Err(SharingError::AlreadyDisclosed);
    }
    lock.disclosed = true;
    Ok(lock.permutation.clone())
}

/// Discloses the lock held on `agent` inside the tree.
pub fn disclose_in(tree: &mut HierarchyTree, agent: &AgentId) -> Result<Permutation, SharingError> {
    let lock = tree
        .lock_mut(agent)
        .ok_or_else(|| SharingError::UnknownAgent(agent.clone()))?;
    disclose(lock)
}

/// Contributions keyed by agent, for callers that want to tamper with or
/// drop individual shares.
pub fn contributions_by_agent(
    tree: &HierarchyTree,
    participants: &BTreeSet<AgentId>,
) -> Result<BTreeMap<AgentId, Key>, SharingError> {
    Ok(required_contributions(tree, participants)?
        .into_iter()
        .map(|c| (c.agent, c.value))
        .collect())
}
