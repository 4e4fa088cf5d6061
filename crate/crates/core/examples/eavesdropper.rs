//! Intercept-resend attacks push the error rate to 25% and sessions abort;
//! the chance of slipping through shrinks as more bits are compared.
//!
//! cargo run --release --example eavesdropper

use hdqss::analysis::detection_point;
use hdqss::subprotocol::DEFAULT_QBER_THRESHOLD;
use hdqss::{run_bb84, seeded, Basis, ChannelModel, EveModel};

fn main() {
    let mut rng = seeded(7);
    for eve in [
        EveModel::InterceptResendRandomBasis,
        EveModel::InterceptResendFixedBasis(Basis::Z),
    ] {
        let s = run_bb84(
            256,
            ChannelModel::new(eve, 0.0).unwrap(),
            DEFAULT_QBER_THRESHOLD,
            &mut rng,
        )
        .unwrap();
        println!(
            "{eve:?}: qber {:.4}, aborted {}, reason {:?}",
            s.qber, s.aborted, s.abort_reason
        );
    }

    println!("\ncheck bits  P(no abort)   trials = 10000, threshold = {DEFAULT_QBER_THRESHOLD}");
    for x in [8, 16, 32, 64, 128] {
        let p = detection_point(
            x,
            10_000,
            ChannelModel::intercept_resend(),
            DEFAULT_QBER_THRESHOLD,
            &mut rng,
        )
        .unwrap();
        println!("{x:>10}  {:.4}", p.acceptance_rate());
    }
}
