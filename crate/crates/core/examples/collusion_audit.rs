//! Exhaustive check that no proper coalition of primaries learns the master
//! key more often than a blind guess.
//!
//! cargo run --release --example collusion_audit

use hdqss::analysis::{audit_collusion, audit_permutation_lock};

fn main() {
    for n_bits in 1..=4 {
        for primaries in 2..=4 {
            let r = audit_collusion(n_bits, primaries).unwrap();
            let worst = r.subsets.iter().map(|s| s.fraction).max().unwrap();
            println!(
                "n={n_bits} primaries={primaries} assignments={:>6} coalitions={:>2} worst={worst} {}",
                r.assignments,
                r.subsets.len(),
                if r.pass { "PASS" } else { "FAIL" }
            );
        }
    }
    let lock = audit_permutation_lock(3).unwrap();
    println!(
        "permutation lock n=3: {} cases, {} fixed pairs, pre-disclosure matches {}, post {} {}",
        lock.cases,
        lock.fixed_pairs,
        lock.pre_disclosure_matches,
        lock.post_disclosure_matches,
        if lock.pass { "PASS" } else { "FAIL" }
    );
}
