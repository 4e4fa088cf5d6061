//! Building a hierarchy: primaries fix the master key, secondaries only alter
//! what their boss contributes, and a boss may bypass a sub-agent.
//!
//! cargo run --example hierarchy

use std::collections::BTreeSet;

use hdqss::sharing::{recover_master, required_set};
use hdqss::{seeded, AgentId, HierarchyTree, SubprotocolKind};

fn main() {
    let mut rng = seeded(11);
    let oracle = SubprotocolKind::IdealOracle;
    let mut tree = HierarchyTree::new("Alice", 16).unwrap();
    tree.join_primary("Bob", &oracle, &mut rng).unwrap();
    tree.join_primary("Charlie", &oracle, &mut rng).unwrap();
    let master = tree.master_key().clone();
    let bob = AgentId::from("Bob");
    tree.join_secondary(&bob, "Elsa", &oracle, &mut rng)
        .unwrap();
    tree.join_secondary(&AgentId::from("Elsa"), "Fred", &oracle, &mut rng)
        .unwrap();
    assert_eq!(
        *tree.master_key(),
        master,
        "secondary joins leave the master key alone"
    );
    print!("{}", tree.render());

    let show = |tree: &HierarchyTree| {
        let need = required_set(tree);
        let names: Vec<&str> = need.iter().map(AgentId::as_str).collect();
        let key = recover_master(tree, &need).unwrap();
        println!(
            "required {names:?} -> recovered {} (master {})",
            key.to_hex(),
            tree.master_key().to_hex()
        );
    };
    show(&tree);

    tree.set_inclusion(&bob, &AgentId::from("Elsa"), false)
        .unwrap();
    println!("Bob bypasses Elsa:");
    show(&tree);

    let without_charlie: BTreeSet<AgentId> = ["Bob"].into_iter().map(AgentId::from).collect();
    println!(
        "Bob alone: {}",
        recover_master(&tree, &without_charlie).unwrap_err()
    );
}
