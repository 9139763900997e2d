//! Eigenvalues of the jump-to-jump map across the sampling interval, in
//! closed form and from a general eigensolver.
//!
//! ```bash
//! cargo run --release --example monodromy_spectrum
//! ```

use hybrid_attitude::gains::{build_blocks, discriminant, monodromy, monodromy_eigs};
use hybrid_attitude::observer::GainSet;

fn main() {
    let gains = GainSet { k_o: 15.0, k_v: 0.7, k_g: 4.0, k_r: 0.1, rho: vec![1.0, 1.0] };
    let blocks = build_blocks(1, &gains);
    println!("{:>6} {:>11} {:>24} {:>10} {:>12}", "tau", "discrim.", "zeta eigenvalue", "modulus", "solver gap");
    for k in 0..=10 {
        let tau = 0.05 + 0.01 * k as f64;
        let closed = monodromy_eigs(&gains, 1, tau);
        let mut numeric: Vec<_> = monodromy(&blocks, tau).complex_eigenvalues().iter().copied().collect();
        // Nearest-match every closed-form eigenvalue against the solver output.
        let mut gap: f64 = 0.0;
        for l in &closed {
            let (i, d) = numeric
                .iter()
                .enumerate()
                .map(|(i, m)| (i, (m - l).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            gap = gap.max(d);
            numeric.swap_remove(i);
        }
        let l = closed[0];
        println!(
            "{tau:>6.2} {:>11.4} {:>11.6} {:+.6}i {:>10.6} {:>12.2e}",
            discriminant(gains.k_v, gains.k_g, tau),
            l.re,
            l.im,
            l.norm(),
            gap
        );
    }
    println!("sqrt(1 - k_v) = {:.6}", (1.0 - gains.k_v).sqrt());
}
