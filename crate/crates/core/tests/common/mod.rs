//! Random operation sequences over the key tree and an independent checker.
#![allow(dead_code)]

use std::collections::BTreeSet;

use hdqss::sharing::{self, SharingError};
use hdqss::{AgentId, HierarchyTree, Key, SubprotocolKind};
use rand::{Rng, RngCore};

pub const MAX_NODES: usize = 12;
pub const MAX_DEPTH: usize = 4;

/// Raw op code; interpreted against the current tree so every code is valid
/// input (though not every op succeeds).
#[derive(Debug, Clone, Copy)]
pub struct OpCode {
    pub kind: u8,
    pub a: u8,
    pub b: u8,
    pub flag: bool,
}

impl OpCode {
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self {
            kind: rng.gen_range(0..5),
            a: rng.gen(),
            b: rng.gen(),
            flag: rng.gen(),
        }
    }
}

fn members(tree: &HierarchyTree) -> Vec<AgentId> {
    tree.nodes()
        .filter(|n| n.parent.is_some())
        .map(|n| n.id.clone())
        .collect()
}

fn pick<T: Clone>(items: &[T], i: u8) -> Option<T> {
    (!items.is_empty()).then(|| items[i as usize % items.len()].clone())
}

/// Applies one op with the oracle sub-protocol. Returns a description of any
/// invariant violation specific to that op (secondary-join neutrality).
pub fn apply(
    tree: &mut HierarchyTree,
    op: OpCode,
    next_name: &mut u32,
    rng: &mut dyn RngCore,
) -> Result<(), String> {
    let oracle = SubprotocolKind::IdealOracle;
    let agents = members(tree);
    let fresh = |n: &mut u32| {
        *n += 1;
        AgentId::new(format!("A{n}"))
    };
    match op.kind {
        0 if tree.len() < MAX_NODES => {
            tree.join_primary(fresh(next_name), &oracle, rng)
                .map_err(|e| e.to_string())?;
        }
        1 if tree.len() < MAX_NODES => {
            let bosses: Vec<AgentId> = agents
                .iter()
                .filter(|a| tree.node(a).unwrap().level < MAX_DEPTH)
                .cloned()
                .collect();
            if let Some(boss) = pick(&bosses, op.a) {
                let before = tree.master_key().clone();
                tree.join_secondary(&boss, fresh(next_name), &oracle, rng)
                    .map_err(|e| e.to_string())?;
                if *tree.master_key() != before {
                    return Err(format!(
                        "join_secondary under {boss} changed the master key"
                    ));
                }
            }
        }
        2 => {
            if let Some(agent) = pick(&agents, op.a) {
                tree.revoke(&agent).map_err(|e| e.to_string())?;
            }
        }
        3 => {
            let deep: Vec<AgentId> = agents
                .iter()
                .filter(|a| tree.node(a).unwrap().level >= 2)
                .cloned()
                .collect();
            if let Some(agent) = pick(&deep, op.a) {
                let level = tree.node(&agent).unwrap().level;
                let targets: Vec<AgentId> = tree
                    .nodes()
                    .filter(|n| n.level + 2 == level)
                    .map(|n| n.id.clone())
                    .collect();
                let target = pick(&targets, op.b).expect("grandparent level is populated");
                tree.promote(&agent, &target, &oracle, rng)
                    .map_err(|e| e.to_string())?;
            }
        }
        4 => {
            let bosses: Vec<AgentId> = agents
                .iter()
                .filter(|a| !tree.node(a).unwrap().subordinate_keys.is_empty())
                .cloned()
                .collect();
            if let Some(boss) = pick(&bosses, op.a) {
                let children: Vec<AgentId> =
                    tree.node(&boss).unwrap().children().cloned().collect();
                let child = pick(&children, op.b).unwrap();
                tree.set_inclusion(&boss, &child, op.flag)
                    .map_err(|e| e.to_string())?;
            }
        }
        _ => {}
    }
    Ok(())
}

/// Required set computed by walking from the primaries down through included
/// children only.
pub fn required_by_walk(tree: &HierarchyTree) -> BTreeSet<AgentId> {
    fn walk(tree: &HierarchyTree, id: &AgentId, out: &mut BTreeSet<AgentId>) {
        out.insert(id.clone());
        for child in &tree.node(id).unwrap().included_subordinates {
            walk(tree, child, out);
        }
    }
    let mut out = BTreeSet::new();
    for p in tree.primaries() {
        walk(tree, p, &mut out);
    }
    out
}

/// (a) master == XOR of primaries' share keys; (b) recovery over the
/// required set succeeds and every proper subset is refused; (c) a fresh
/// primary joined and revoked leaves the tree unchanged; plus structure.
pub fn check(tree: &HierarchyTree, rng: &mut dyn RngCore) -> Result<(), String> {
    tree.verify_invariants()?;
    let n = tree.key_length();

    let mut expected = Key::zero(n).unwrap();
    for p in tree.primaries() {
        expected
            .xor_assign(tree.node(p).unwrap().share_key.as_ref().unwrap())
            .unwrap();
    }
    if expected != *tree.master_key() {
        return Err(format!(
            "(a) master {} != primaries xor {}",
            tree.master_key(),
            expected
        ));
    }

    // Level bookkeeping.
    for node in tree.nodes() {
        if let Some(p) = &node.parent {
            if node.level != tree.node(p).unwrap().level + 1 {
                return Err(format!("level of {} is off", node.id));
            }
        }
    }

    let required = required_by_walk(tree);
    if required != sharing::required_set(tree) {
        return Err("(b) required set disagrees with the walk".into());
    }
    match sharing::recover_master(tree, &required) {
        Ok(k) if k == *tree.master_key() => {}
        other => return Err(format!("(b) recovery over required set gave {other:?}")),
    }
    for drop in &required {
        let mut subset = required.clone();
        subset.remove(drop);
        if !matches!(
            sharing::recover_master(tree, &subset),
            Err(SharingError::MissingParticipant { .. })
        ) {
            return Err(format!("(b) recovery without {drop} was not refused"));
        }
    }

    let mut probe = tree.clone();
    probe
        .join_primary("__probe", &SubprotocolKind::IdealOracle, rng)
        .map_err(|e| e.to_string())?;
    probe
        .revoke(&AgentId::from("__probe"))
        .map_err(|e| e.to_string())?;
    if probe != *tree {
        return Err("(c) join-then-revoke did not restore the tree".into());
    }
    Ok(())
}
