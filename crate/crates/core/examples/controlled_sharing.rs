//! A locked agent contributes a permuted key; recovery works only once the
//! permutation is disclosed.
//!
//! cargo run --example controlled_sharing

use hdqss::sharing::{disclose_in, lock_agent, recover_master, required_set};
use hdqss::{seeded, AgentId, HierarchyTree, SubprotocolKind};

fn main() {
    let mut rng = seeded(3);
    let mut tree = HierarchyTree::new("Alice", 16).unwrap();
    for name in ["Bob", "Charlie", "David"] {
        tree.join_primary(name, &SubprotocolKind::IdealOracle, &mut rng)
            .unwrap();
    }
    let david = AgentId::from("David");
    let lock = lock_agent(&mut tree, &david, &mut rng).unwrap();
    println!(
        "locked {}; permutation visible before disclosure: {}",
        lock.locked_agent,
        lock.permutation().is_some()
    );

    let everyone = required_set(&tree);
    let before = recover_master(&tree, &everyone).unwrap();
    println!(
        "before disclosure: {} vs master {} -> {}",
        before.to_hex(),
        tree.master_key().to_hex(),
        if before == *tree.master_key() {
            "match"
        } else {
            "no match"
        }
    );

    let perm = disclose_in(&mut tree, &david).unwrap();
    println!("disclosed permutation {:?}", perm.mapping());
    let after = recover_master(&tree, &everyone).unwrap();
    assert_eq!(&after, tree.master_key());
    println!("after disclosure:  {} -> match", after.to_hex());
}
