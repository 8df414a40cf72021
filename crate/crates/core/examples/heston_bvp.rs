//! Stationary Heston problem on a truncated slab: Dirichlet data on the
//! sides and top, none on the variance-zero face.
//!
//! ```text
//! cargo run --release --example heston_bvp [nx ny] > solution.csv
//! ```

use degen::bvp::{apriori_bound, solve_bvp, BoundVariant, BvpProblem, Method};
use degen::discretize::{
    assemble_system, build_grid, discrete_residual, monotonicity_check, write_field_csv, DomainSpec, NodeTag,
};
use degen::operator::{heston_coefficients, verify_conditions, HestonParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let n = match args[..] {
        [nx, ny] => [nx, ny],
        _ => [65, 33],
    };

    let params = HestonParams {
        sigma: 0.5,
        rho: -0.3,
        kappa: 2.0,
        theta: 0.3,
        r: 0.05,
        q: 0.0,
    };
    let cs = heston_coefficients(&params)?;
    let dom = DomainSpec::truncated_slab([-2.0, 2.0], 1.0);

    let samples: Vec<Vec<f64>> = (0..=20)
        .flat_map(|i| (0..=10).map(move |j| vec![-2.0 + 0.2 * i as f64, 0.1 * j as f64]))
        .collect();
    for e in verify_conditions(&cs, &dom, &samples)?.entries {
        eprintln!("{:<28} holds={} margin={:?}", format!("{:?}", e.condition), e.holds, e.margin);
    }

    let grid = build_grid(&dom, n, None)?;
    let sys = assemble_system(&cs, &grid)?;
    let mono = monotonicity_check(&sys);
    eprintln!(
        "grid {}x{}: {} interior, {} degenerate rows, monotone={}",
        grid.nx(),
        grid.ny(),
        grid.count(NodeTag::Interior),
        grid.count(NodeTag::Degenerate),
        mono.passes
    );

    let f = grid.field(|x| 1.0 + x[0].sin());
    let g = grid.field(|x| x[1] + 0.1 * x[0] * x[0]);
    let p = BvpProblem::new(sys, f, g)?;
    let u = solve_bvp(&p, Method::Direct, 1e-10, 3)?;
    let res = discrete_residual(&p.sys, &u, &p.f, &p.g)?;
    let bound = apriori_bound(&cs, p.sup_abs_f(), p.sup_abs_g(), None, BoundVariant::SolutionSupNorm)?;
    eprintln!(
        "max|u| = {:.6}, bound = {:.6}, residual = {:.2e}",
        u.sup_norm(),
        bound.value,
        res.sup_norm()
    );

    // the same solve by SOR for comparison
    let iter = solve_bvp(&p, Method::Sor { omega: 1.5 }, 1e-10, 1_000_000)?;
    eprintln!("direct vs SOR: {:.2e}", u.max_diff(&iter));

    write_field_csv(std::io::stdout().lock(), &grid, &u)?;
    Ok(())
}
