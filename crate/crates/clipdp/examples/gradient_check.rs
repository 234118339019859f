//! Verify every analytic derivative in the crate against central
//! differences: model Jacobians, MLP gradients, the clipped-function
//! derivatives, and the full BPTT weight gradient.

use clipdp::config::GradcheckOptions;
use clipdp::runner::run_gradcheck;

fn main() {
    let opts = GradcheckOptions {
        env: None,
        samples: 100,
        seed: 0,
    };
    let all_pass = run_gradcheck(&opts).expect("verification suites run");
    println!(
        "\nall checks {}",
        if all_pass { "passed" } else { "FAILED" }
    );
}
