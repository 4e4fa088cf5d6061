//! Qubit efficiency of four hierarchical schemes, exact and as percentages.
//!
//! cargo run --example efficiency_table [m...]

use hdqss::analysis::{comparison_table, measured_eta1, render_table_csv, render_table_text};
use hdqss::subprotocol::DEFAULT_QBER_THRESHOLD;
use hdqss::{run_bb84, seeded, ChannelModel};

fn main() {
    let mut m: Vec<u64> = std::env::args()
        .skip(1)
        .map(|a| a.parse().expect("m must be an integer"))
        .collect();
    if m.is_empty() {
        m = vec![3, 5, 10, 50];
    }
    let rows = comparison_table(&m).unwrap();
    print!("{}", render_table_text(&rows));
    println!();
    print!("{}", render_table_csv(&rows));

    // With real BB84 sifting, roughly four qubits are spent per key bit.
    let mut rng = seeded(1);
    let sessions: Vec<_> = (0..2)
        .map(|_| run_bb84(128, ChannelModel::ideal(), DEFAULT_QBER_THRESHOLD, &mut rng).unwrap())
        .collect();
    let eta = measured_eta1(&sessions, 128).unwrap();
    println!(
        "\nmeasured eta1 for m=3 over simulated BB84: {eta} = {:.4}",
        *eta.numer() as f64 / *eta.denom() as f64
    );
}
