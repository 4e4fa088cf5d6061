//! The organizational key tree and its membership state machine.
//!
//! The root (the boss) shares one key with each child; every agent shares one
//! key with its immediate boss, who keeps a copy. The master key is the XOR of
//! the boss-held copies of the keys of all primary (level 1) agents. Deeper
//! agents never touch the master key: recruiting or dismissing a sub-agent
//! only changes how the recruiting agent splits its own contribution.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use rand::RngCore;
use thiserror::Error;

use crate::key::{Key, KeyError};
use crate::sharing::ControlledState;
use crate::subprotocol::{KeyEstablishment, SessionError, SessionResult};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AgentId(String);

impl AgentId {
    pub fn new(name: impl Into<String>) -> Self {
        Self(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for AgentId {
    fn from(s: &str) -> Self {
        Self::new(s)
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KeyTreeError {
    #[error("key length must be at least one bit")]
    InvalidLength,
    #[error("agent {0} is already in the tree")]
    DuplicateAgent(AgentId),
    #[error("unknown boss {0}")]
    UnknownBoss(AgentId),
    #[error("unknown agent {0}")]
    UnknownAgent(AgentId),
    #[error("the root cannot be revoked")]
    CannotRevokeRoot,
    #[error("the root recruits primary agents through join_primary")]
    RootBoss,
    #[error("cannot promote {agent} (level {level}) under {new_boss} (level {boss_level})")]
    LevelMismatch {
        agent: AgentId,
        level: usize,
        new_boss: AgentId,
        boss_level: usize,
    },
    #[error("{child} is not a direct subordinate of {boss}")]
    NotAChild { boss: AgentId, child: AgentId },
    #[error(transparent)]
    Key(#[from] KeyError),
    #[error(transparent)]
    Session(#[from] SessionError),
}

impl KeyTreeError {
    pub fn is_abort(&self) -> bool {
        matches!(self, KeyTreeError::Session(SessionError::Aborted { .. }))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentNode {
    pub id: AgentId,
    pub level: usize,
    pub parent: Option<AgentId>,
    /// Key shared with the immediate boss, as held by this agent.
    pub share_key: Option<Key>,
    /// Copies of the keys shared with each direct subordinate.
    pub subordinate_keys: BTreeMap<AgentId, Key>,
    pub included_subordinates: BTreeSet<AgentId>,
}

impl AgentNode {
    pub fn children(&self) -> impl Iterator<Item = &AgentId> {
        self.subordinate_keys.keys()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HierarchyTree {
    root: AgentId,
    nodes: BTreeMap<AgentId, AgentNode>,
    master_key: Key,
    key_length: usize,
    locks: BTreeMap<AgentId, ControlledState>,
}

impl HierarchyTree {
    pub fn new(boss: impl Into<AgentId>, key_length: usize) -> Result<Self, KeyTreeError> {
        if key_length == 0 {
            return Err(KeyTreeError::InvalidLength);
        }
        let root = boss.into();
        let node = AgentNode {
            id: root.clone(),
            level: 0,
            parent: None,
            share_key: None,
            subordinate_keys: BTreeMap::new(),
            included_subordinates: BTreeSet::new(),
        };
        Ok(Self {
            nodes: BTreeMap::from([(root.clone(), node)]),
            root,
            master_key: Key::zero(key_length)?,
            key_length,
            locks: BTreeMap::new(),
        })
    }

    pub fn root(&self) -> &AgentId {
        &self.root
    }

    pub fn master_key(&self) -> &Key {
        &self.master_key
    }

    pub fn key_length(&self) -> usize {
        self.key_length
    }

    pub fn contains(&self, id: &AgentId) -> bool {
        self.nodes.contains_key(id)
    }

    pub fn node(&self, id: &AgentId) -> Option<&AgentNode> {
        self.nodes.get(id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &AgentNode> {
        self.nodes.values()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    /// True when only the root is present.
    pub fn is_empty(&self) -> bool {
        self.nodes.len() == 1
    }

    pub fn primaries(&self) -> impl Iterator<Item = &AgentId> {
        self.nodes[&self.root].children()
    }

    pub fn agent(&self, id: &AgentId) -> Result<&AgentNode, KeyTreeError> {
        self.nodes
            .get(id)
            .ok_or_else(|| KeyTreeError::UnknownAgent(id.clone()))
    }

    pub fn is_primary(&self, id: &AgentId) -> bool {
        self.nodes.get(id).is_some_and(|n| n.level == 1)
    }

    pub fn lock(&self, id: &AgentId) -> Option<&ControlledState> {
        self.locks.get(id)
    }

    pub fn lock_mut(&mut self, id: &AgentId) -> Option<&mut ControlledState> {
        self.locks.get_mut(id)
    }

    pub fn locks(&self) -> impl Iterator<Item = &ControlledState> {
        self.locks.values()
    }

    pub(crate) fn insert_lock(
        &mut self,
        state: ControlledState,
        master_delta: &Key,
    ) -> Result<(), KeyError> {
        self.master_key.xor_assign(master_delta)?;
        self.locks.insert(state.locked_agent.clone(), state);
        Ok(())
    }

    /// Runs a sub-protocol between the root and `agent` and adds the agent at
    /// level 1. On abort the tree is unchanged.
    pub fn join_primary<P: KeyEstablishment + ?Sized>(
        &mut self,
        agent: impl Into<AgentId>,
        kind: &P,
        rng: &mut dyn RngCore,
    ) -> Result<SessionResult, KeyTreeError> {
        let agent = agent.into();
        self.ensure_absent(&agent)?;
        let session = kind.establish(self.key_length, rng)?;
        let (boss_copy, agent_key) = session.clone().into_keys()?;
        self.attach(&self.root.clone(), agent, boss_copy, agent_key)?;
        Ok(session)
    }

    pub fn join_primary_with_key(
        &mut self,
        agent: impl Into<AgentId>,
        key: Key,
    ) -> Result<(), KeyTreeError> {
        let agent = agent.into();
        self.ensure_absent(&agent)?;
        self.attach(&self.root.clone(), agent, key.clone(), key)
    }

    pub fn join_secondary<P: KeyEstablishment + ?Sized>(
        &mut self,
        boss: &AgentId,
        agent: impl Into<AgentId>,
        kind: &P,
        rng: &mut dyn RngCore,
    ) -> Result<SessionResult, KeyTreeError> {
        let agent = agent.into();
        self.check_secondary(boss, &agent)?;
        let session = kind.establish(self.key_length, rng)?;
        let (boss_copy, agent_key) = session.clone().into_keys()?;
        self.attach(boss, agent, boss_copy, agent_key)?;
        Ok(session)
    }

    pub fn join_secondary_with_key(
        &mut self,
        boss: &AgentId,
        agent: impl Into<AgentId>,
        key: Key,
    ) -> Result<(), KeyTreeError> {
        let agent = agent.into();
        self.check_secondary(boss, &agent)?;
        self.attach(boss, agent, key.clone(), key)
    }

    /// Removes `agent` and its whole subtree. A primary agent's key leaves the
    /// master key; a deeper agent is simply dropped by its boss.
    pub fn revoke(&mut self, agent: &AgentId) -> Result<(), KeyTreeError> {
        if *agent == self.root {
            return Err(KeyTreeError::CannotRevokeRoot);
        }
        let node = self.agent(agent)?;
        let boss = node.parent.clone().expect("non-root has a parent");
        let boss_node = self.nodes.get_mut(&boss).expect("parent exists");
        let boss_copy = boss_node
            .subordinate_keys
            .remove(agent)
            .expect("boss holds a copy of each child's key");
        boss_node.included_subordinates.remove(agent);

        if boss == self.root {
            let entry = match self.locks.remove(agent) {
                Some(lock) => lock
                    .permutation_unchecked()
                    .apply(&boss_copy)
                    .expect("lock sized to the tree"),
                None => boss_copy,
            };
            self.master_key.xor_assign(&entry)?;
        }

        let mut stack = vec![agent.clone()];
        while let Some(id) = stack.pop() {
            let removed = self.nodes.remove(&id).expect("subtree node present");
            stack.extend(removed.subordinate_keys.into_keys());
        }
        Ok(())
    }

    /// Moves an agent at level `l >= 2` under a boss at level `l - 2` with a
    /// fresh key. Atomic: on abort nothing changes.
    pub fn promote<P: KeyEstablishment + ?Sized>(
        &mut self,
        agent: &AgentId,
        new_boss: &AgentId,
        kind: &P,
        rng: &mut dyn RngCore,
    ) -> Result<SessionResult, KeyTreeError> {
        self.check_promotion(agent, new_boss)?;
        let session = kind.establish(self.key_length, rng)?;
        let (boss_copy, agent_key) = session.clone().into_keys()?;
        self.revoke(agent)?;
        self.attach(new_boss, agent.clone(), boss_copy, agent_key)?;
        Ok(session)
    }

    pub fn promote_with_key(
        &mut self,
        agent: &AgentId,
        new_boss: &AgentId,
        key: Key,
    ) -> Result<(), KeyTreeError> {
        self.check_promotion(agent, new_boss)?;
        self.check_key(&key)?;
        self.revoke(agent)?;
        self.attach(new_boss, agent.clone(), key.clone(), key)
    }

    /// The agent's own key XOR the copies of every included subordinate key.
    pub fn residual_key(&self, agent: &AgentId) -> Result<Key, KeyTreeError> {
        let node = self.agent(agent)?;
        let mut residual = node
            .share_key
            .clone()
            .ok_or_else(|| KeyTreeError::UnknownAgent(agent.clone()))?;
        for child in &node.included_subordinates {
            residual.xor_assign(&node.subordinate_keys[child])?;
        }
        Ok(residual)
    }

    pub fn set_inclusion(
        &mut self,
        boss: &AgentId,
        child: &AgentId,
        included: bool,
    ) -> Result<(), KeyTreeError> {
        let node = self
            .nodes
            .get_mut(boss)
            .ok_or_else(|| KeyTreeError::UnknownAgent(boss.clone()))?;
        if !node.subordinate_keys.contains_key(child) {
            return Err(KeyTreeError::NotAChild {
                boss: boss.clone(),
                child: child.clone(),
            });
        }
        if included {
            node.included_subordinates.insert(child.clone());
        } else {
            node.included_subordinates.remove(child);
        }
        Ok(())
    }

    /// Checks the structural invariants and recomputes the master key from
    /// the root's key copies (locked entries permuted).
    pub fn verify_invariants(&self) -> Result<(), String> {
        for node in self.nodes.values() {
            match &node.parent {
                None if node.id == self.root => {
                    if node.level != 0 {
                        return Err(format!("root {} at level {}", node.id, node.level));
                    }
                }
                None => return Err(format!("{} has no parent", node.id)),
                Some(p) => {
                    let parent = self
                        .nodes
                        .get(p)
                        .ok_or(format!("{} has dangling parent {p}", node.id))?;
                    if node.level != parent.level + 1 {
                        return Err(format!(
                            "{} level {} under level {}",
                            node.id, node.level, parent.level
                        ));
                    }
                    if !parent.subordinate_keys.contains_key(&node.id) {
                        return Err(format!("{p} holds no key copy for {}", node.id));
                    }
                }
            }
            for child in node.subordinate_keys.keys() {
                let c = self
                    .nodes
                    .get(child)
                    .ok_or(format!("{} lists missing child {child}", node.id))?;
                if c.parent.as_ref() != Some(&node.id) {
                    return Err(format!("{child} does not point back to {}", node.id));
                }
            }
            if !node
                .included_subordinates
                .is_subset(&node.subordinate_keys.keys().cloned().collect())
            {
                return Err(format!("{} includes a non-child", node.id));
            }
            for key in node.share_key.iter().chain(node.subordinate_keys.values()) {
                if key.len() != self.key_length {
                    return Err(format!("{} holds a {}-bit key", node.id, key.len()));
                }
            }
        }
        let mut expected = Key::zero(self.key_length).map_err(|e| e.to_string())?;
        for (child, copy) in &self.nodes[&self.root].subordinate_keys {
            let entry = match self.locks.get(child) {
                Some(lock) => lock
                    .permutation_unchecked()
                    .apply(copy)
                    .map_err(|e| e.to_string())?,
                None => copy.clone(),
            };
            expected.xor_assign(&entry).map_err(|e| e.to_string())?;
        }
        if expected != self.master_key {
            return Err(format!(
                "master key {} != recomputed {}",
                self.master_key, expected
            ));
        }
        for id in self.locks.keys() {
            if !self.is_primary(id) {
                return Err(format!("lock on non-primary {id}"));
            }
        }
        Ok(())
    }

    /// Deterministic indented dump; keys appear only as fingerprints.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{} (boss) km={}",
            self.root,
            self.master_key.fingerprint()
        );
        self.render_children(&self.root, 1, &mut out);
        out
    }

    fn render_children(&self, id: &AgentId, depth: usize, out: &mut String) {
        let node = &self.nodes[id];
        for child in node.children() {
            let c = &self.nodes[child];
            let mark = if node.included_subordinates.contains(child) {
                "+"
            } else {
                "-"
            };
            let lock = match self.locks.get(child) {
                Some(l) if l.disclosed => " locked(disclosed)",
                Some(_) => " locked",
                None => "",
            };
            let key = c
                .share_key
                .as_ref()
                .map(Key::fingerprint)
                .unwrap_or_default();
            let _ = writeln!(
                out,
                "{}{mark}{child} L{} key={key}{lock}",
                "  ".repeat(depth),
                c.level
            );
            self.render_children(child, depth + 1, out);
        }
    }

    fn ensure_absent(&self, agent: &AgentId) -> Result<(), KeyTreeError> {
        if self.nodes.contains_key(agent) {
            return Err(KeyTreeError::DuplicateAgent(agent.clone()));
        }
        Ok(())
    }

    fn check_key(&self, key: &Key) -> Result<(), KeyTreeError> {
        if key.len() != self.key_length {
            return Err(KeyError::LengthMismatch {
                left: self.key_length,
                right: key.len(),
            }
            .into());
        }
        Ok(())
    }

    fn check_secondary(&self, boss: &AgentId, agent: &AgentId) -> Result<(), KeyTreeError> {
        if !self.nodes.contains_key(boss) {
            return Err(KeyTreeError::UnknownBoss(boss.clone()));
        }
        if *boss == self.root {
            return Err(KeyTreeError::RootBoss);
        }
        self.ensure_absent(agent)
    }

    fn check_promotion(&self, agent: &AgentId, new_boss: &AgentId) -> Result<(), KeyTreeError> {
        if *agent == self.root {
            return Err(KeyTreeError::CannotRevokeRoot);
        }
        let level = self.agent(agent)?.level;
        let boss_level = self
            .nodes
            .get(new_boss)
            .ok_or_else(|| KeyTreeError::UnknownBoss(new_boss.clone()))?
            .level;
        if level < 2 || boss_level + 2 != level {
            return Err(KeyTreeError::LevelMismatch {
                agent: agent.clone(),
                level,
                new_boss: new_boss.clone(),
                boss_level,
            });
        }
        Ok(())
    }

    fn attach(
        &mut self,
        boss: &AgentId,
        agent: AgentId,
        boss_copy: Key,
        agent_key: Key,
    ) -> Result<(), KeyTreeError> {
        self.check_key(&boss_copy)?;
        self.check_key(&agent_key)?;
        if *boss == self.root {
            self.master_key.xor_assign(&boss_copy)?;
        }
        let boss_node = self
            .nodes
            .get_mut(boss)
            .ok_or_else(|| KeyTreeError::UnknownBoss(boss.clone()))?;
        boss_node.subordinate_keys.insert(agent.clone(), boss_copy);
        boss_node.included_subordinates.insert(agent.clone());
        let level = boss_node.level + 1;
        self.nodes.insert(
            agent.clone(),
            AgentNode {
                id: agent,
                level,
                parent: Some(boss.clone()),
                share_key: Some(agent_key),
                subordinate_keys: BTreeMap::new(),
                included_subordinates: BTreeSet::new(),
            },
        );
        Ok(())
    }
}
