//! Solve the regularized block model min g's + s'Hs/2 + sigma ||s||^3
//! globally for a range of sigma and cross-check against the brute-force
//! grid oracle.

use mdgp::{grid_oracle, solve_cubic_reg_global, QuadraticModel};

fn main() {
    // indefinite Hessian: the sigma = 0 problem is unbounded below
    let model = QuadraticModel::new(
        0.0,
        vec![0.3, -1.0],
        vec![1.0, 0.4, 0.4, -2.0],
        vec![0.0, 0.0],
    )
    .unwrap();

    println!("{:>8} {:>12} {:>12} {:>12} {:>10}", "sigma", "||s||", "model", "grid", "mult");
    for sigma in [0.0, 0.05, 0.2, 1.0, 5.0] {
        let sol = solve_cubic_reg_global(&model, sigma).unwrap();
        if sigma == 0.0 {
            println!("{sigma:>8} {:>12} (status {:?})", "-", sol.status);
            continue;
        }
        let norm: f64 = sol.step.iter().map(|v| v * v).sum::<f64>().sqrt();
        let grid = grid_oracle(&model, sigma, norm + 1.0, 400).unwrap();
        println!(
            "{sigma:>8} {norm:>12.6} {:>12.6} {:>12.6} {:>10.4}",
            sol.model_value, grid.1, sol.multiplier
        );
        assert!(sol.model_value <= grid.1 + 1e-6);
        // multiplier identity t = 3 sigma ||s||
        assert!((sol.multiplier - 3.0 * sigma * norm).abs() <= 1e-6 * (1.0 + sol.multiplier));
    }
    println!("global solves match the grid oracle");
}
