//! The boss publishes S = K_M xor M; only the full coalition can read M.
//!
//! cargo run --example broadcast_message

use hdqss::sharing::{broadcast_message, recover_master, recover_message, required_set};
use hdqss::{seeded, HierarchyTree, Key, SubprotocolKind};

fn main() {
    let mut rng = seeded(99);
    let mut tree = HierarchyTree::new("Alice", 32).unwrap();
    for name in ["Bob", "Charlie", "David"] {
        tree.join_primary(name, &SubprotocolKind::IdealOracle, &mut rng)
            .unwrap();
    }
    let message = Key::from_hex("c0ffee42", 32).unwrap();
    let announced = broadcast_message(&tree, &message).unwrap();
    println!("message   {}", message.to_hex());
    println!("announced {}", announced.to_hex());

    let master = recover_master(&tree, &required_set(&tree)).unwrap();
    let read = recover_message(&announced, &master).unwrap();
    println!("recovered {}", read.to_hex());
    assert_eq!(read, message);

    let mut wrong = master.clone();
    wrong.flip_bit(3);
    println!(
        "one bad key bit -> {}",
        recover_message(&announced, &wrong).unwrap().to_hex()
    );
}
