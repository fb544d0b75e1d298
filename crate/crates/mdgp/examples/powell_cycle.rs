//! Powell's three-variable example: exact cyclic coordinate minimization
//! cycles among six points forever, while the regularized step breaks out
//! after a predictable number of sweeps.

use mdgp::solver::SolverParams;
use mdgp::{powell_cycle_trace, powell_k0_bound, powell_regularized_cd, powell_start};

fn main() {
    let eps = 1e-3;
    let states = powell_cycle_trace(eps, 3).unwrap();
    for (k, s) in states.iter().enumerate() {
        if let Some(eq) = s.epsilon_equivalent {
            println!("x^{k:<2} = {:?}   pattern eps = {eq:.3e}", s.x);
        }
    }
    // six-step self-similarity, ratio 64
    let expect = powell_start(eps / 64.0);
    for (a, b) in states[6].x.iter().zip(&expect) {
        assert!((a - b).abs() <= 1e-10 * b.abs());
    }
    println!("x^6 matches the eps/64 pattern; every step moves >= 0.1");

    let k0 = powell_k0_bound(2, 1e-8);
    println!("cycle-reproduction bound k0 = {k0:.3} (p = 2, alpha = 1e-8)");

    let report = powell_regularized_cd(eps, &SolverParams::default(), 0.01, 10_000).unwrap();
    let broke = report.first_small_step.expect("the cycle must break");
    println!(
        "regularized CD: first step below 0.01 at iteration {broke} \
         (cycle steps stay near 0.2 before that)"
    );
    assert!(report.step_norms[0] >= 0.1);
}
