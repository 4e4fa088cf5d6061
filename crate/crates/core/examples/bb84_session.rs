//! One BB84 key-establishment session over an ideal and a noisy channel.
//!
//! cargo run --example bb84_session

use hdqss::subprotocol::DEFAULT_QBER_THRESHOLD;
use hdqss::{run_bb84, seeded, ChannelModel, EveModel};

fn main() {
    let mut rng = seeded(2024);
    for (label, channel) in [
        ("ideal", ChannelModel::ideal()),
        ("3% flips", ChannelModel::new(EveModel::None, 0.03).unwrap()),
    ] {
        let s = run_bb84(128, channel, DEFAULT_QBER_THRESHOLD, &mut rng).unwrap();
        println!("{label}:");
        println!("  qubits sent     {}", s.qubits_sent);
        println!(
            "  sifted bits     {} (rate {:.3})",
            s.sifted_bits,
            s.sift_rate()
        );
        println!(
            "  check bits      {} with {} errors, qber {:.4}",
            s.check_bits_used, s.check_errors, s.qber
        );
        println!("  aborted         {}", s.aborted);
        println!("  key mismatches  {:?}", s.key_mismatches());
        if let Some(k) = &s.key_initiator {
            println!("  initiator key   {}", k.to_hex());
        }
    }
}
