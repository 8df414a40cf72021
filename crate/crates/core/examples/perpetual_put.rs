//! Perpetual American put under Heston dynamics, solved three ways, with
//! the exercise boundary read off the continuation mask.

use std::time::Instant;

use degen::bvp::{apriori_bound, BoundVariant};
use degen::discretize::{assemble_system, build_grid, DomainSpec, Field};
use degen::obstacle::{
    complementarity_residual, continuation_region, payoff, solve_lcp_policy, solve_lcp_psor, solve_penalized,
    ObstacleProblem, PayoffKind, DEFAULT_EPS_SCHEDULE,
};
use degen::operator::{heston_coefficients, HestonParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let strike = 1.0;
    let cs = heston_coefficients(&HestonParams {
        sigma: 0.5,
        rho: -0.3,
        kappa: 2.0,
        theta: 0.3,
        r: 0.05,
        q: 0.0,
    })?;
    // x1 is log-price
    let grid = build_grid(&DomainSpec::truncated_slab([-3.0, 3.0], 1.0), [65, 33], None)?;
    let sys = assemble_system(&cs, &grid)?;
    let psi = grid.field(|x| payoff(PayoffKind::Put, strike, x[0]));
    let p = ObstacleProblem::new(sys, Field::zeros(grid.len()), psi.clone(), psi.clone())?;

    let t = Instant::now();
    let psor = solve_lcp_psor(&p, 1.5, 1e-10, 1_000_000)?;
    println!("PSOR:      {:>6} iterations, {:?}", psor.iterations, t.elapsed());
    let t = Instant::now();
    let policy = solve_lcp_policy(&p, 100)?;
    println!("policy:    {:>6} iterations, {:?}", policy.iterations, t.elapsed());
    let t = Instant::now();
    let pen = solve_penalized(&p, &DEFAULT_EPS_SCHEDULE, 1e-10)?;
    println!("penalty:   {:>6} Newton steps, {:?}", pen.iterations, t.elapsed());
    println!(
        "PSOR vs policy {:.2e}, PSOR vs penalty {:.2e}",
        psor.u.max_diff(&policy.u),
        psor.u.max_diff(&pen.u)
    );
    println!("complementarity residual {:.2e}", complementarity_residual(&p, &policy.u)?);

    let bound = apriori_bound(&cs, p.f.max(), p.g.max(), Some(psi.max()), BoundVariant::ObstacleUpper)?;
    println!("max u = {:.6} <= {:.6}", policy.u.max(), bound.value);

    let mask = continuation_region(&grid, &policy.u, &psi, 1e-8)?;
    println!(
        "continuation nodes {}, coincidence nodes {}",
        mask.continuation_count(),
        mask.coincidence_count()
    );
    println!("exercise boundary (largest exercised log-price per variance row):");
    for j in (0..grid.ny() - 1).step_by(4) {
        let edge = (0..grid.nx())
            .filter(|&i| mask.coincidence[grid.index(i, j)])
            .map(|i| grid.x1[i])
            .fold(f64::NAN, f64::max);
        println!("  v = {:.3}: x* = {:+.4}  (S* = {:.4})", grid.x2[j], edge, edge.exp());
    }
    Ok(())
}
