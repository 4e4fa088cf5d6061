//! Revoking a primary and promoting a secondary are single XOR updates of
//! the master key.
//!
//! cargo run --example revoke_promote

use hdqss::sharing::{recover_master, required_set};
use hdqss::{seeded, AgentId, HierarchyTree, SubprotocolKind};

fn main() {
    let mut rng = seeded(5);
    let oracle = SubprotocolKind::IdealOracle;
    let mut tree = HierarchyTree::new("Alice", 16).unwrap();
    for name in ["Bob", "Charlie", "David"] {
        tree.join_primary(name, &oracle, &mut rng).unwrap();
    }
    tree.join_secondary(&AgentId::from("Charlie"), "Elsa", &oracle, &mut rng)
        .unwrap();
    let report = |label: &str, tree: &HierarchyTree| {
        let recovered = recover_master(tree, &required_set(tree)).unwrap();
        assert_eq!(&recovered, tree.master_key());
        println!(
            "{label:<18} master {}  primaries {:?}",
            tree.master_key().to_hex(),
            tree.primaries().map(AgentId::as_str).collect::<Vec<_>>()
        );
    };
    report("initial", &tree);

    tree.revoke(&AgentId::from("David")).unwrap();
    report("revoke David", &tree);

    tree.promote(
        &AgentId::from("Elsa"),
        &AgentId::from("Alice"),
        &oracle,
        &mut rng,
    )
    .unwrap();
    report("promote Elsa", &tree);

    tree.revoke(&AgentId::from("Charlie")).unwrap();
    report("revoke Charlie", &tree);
    print!("{}", tree.render());
}
