//! The independent oracles: exhaustive LCP enumeration, the first-layer
//! curvature diagnostic and its negative controls, and the corner probe.

use degen::bvp::{solve_bvp, BvpProblem, Method};
use degen::discretize::{assemble_system, build_grid, DomainKind, DomainSpec, FaceSet, Field};
use degen::obstacle::{solve_lcp_psor, ObstacleProblem};
use degen::operator::{heston_coefficients, CoefficientSet, HestonParams};
use degen::verification::{
    active_set, boundary_regularity_check, brute_force_lcp, corner_compatibility_probe, oblique_residual_check,
    OracleReport,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cs = heston_coefficients(&HestonParams {
        sigma: 0.5,
        rho: -0.3,
        kappa: 2.0,
        theta: 0.3,
        r: 0.05,
        q: 0.0,
    })?;

    // 3 x 4 free nodes: 4096 active sets
    let grid = build_grid(&DomainSpec::truncated_slab([-1.0, 1.0], 1.0), [5, 5], None)?;
    let sys = assemble_system(&cs, &grid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let f = Field((0..grid.len()).map(|_| rng.random_range(-0.05..0.05)).collect());
    let g = grid.field(|_| 0.2);
    let psi = Field((0..grid.len()).map(|_| rng.random_range(-0.2..0.2)).collect());
    let brute = brute_force_lcp(&sys, &f, &g, &psi)?;
    let p = ObstacleProblem::new(sys.clone(), f, g, psi.clone())?;
    let ps = solve_lcp_psor(&p, 1.2, 1e-12, 1_000_000)?;
    let report = OracleReport::compare("psor_vs_enumeration", &brute.u, &ps.u, 1e-10);
    println!(
        "enumeration tried {} sets, {} active; PSOR active sets agree: {}",
        brute.configurations_tried,
        brute.active.iter().filter(|&&a| a).count(),
        active_set(&sys, &ps.u, &psi, 1e-9) == brute.active
    );
    println!("{}", serde_json::to_string_pretty(&report)?);

    // x2 log x2 never becomes flat enough at the face
    for n in [17, 33, 65] {
        let grid = build_grid(&DomainSpec::truncated_slab([-1.0, 1.0], 1.0), [n, n], None)?;
        let u = grid.field(|x| if x[1] > 0.0 { x[1] * x[1].ln() } else { 0.0 });
        let rep = boundary_regularity_check(&[(&u, &grid)])?;
        println!("x2 log x2, n = {n}: first-layer value {:.6}", rep.levels[0].max_scaled_hessian);
    }

    // forcing data on the degenerate face spoils both diagnostics
    let bx = DomainSpec::new(DomainKind::Box, [[-2.0, 2.0], [0.0, 1.0]], FaceSet::all())?;
    for n in [17, 33, 65] {
        let grid = build_grid(&bx, [n, n], None)?;
        let sys = assemble_system(&cs, &grid)?;
        let f = grid.field(|_| 1.0);
        let g = grid.field(|x| if x[1] == 0.0 { 1.0 } else { 0.0 });
        let u = solve_bvp(&BvpProblem::new(sys, f.clone(), g)?, Method::Direct, 1e-10, 3)?;
        let ob = oblique_residual_check(&u, &f, &cs, &grid)?;
        let reg = boundary_regularity_check(&[(&u, &grid)])?;
        println!(
            "Dirichlet everywhere, n = {n}: oblique residual {:.3e}, first-layer value {:.3e}",
            ob.value, reg.levels[0].max_scaled_hessian
        );
    }

    // corner mismatch under the model operator with no tangential drift
    let model = CoefficientSet::constant(DMatrix::identity(2, 2), DVector::from_row_slice(&[0.0, 1.0]), 0.0)?;
    for (label, f_of) in [("f(0,0) = 0", (|x: &[f64]| x[0]) as fn(&[f64]) -> f64), ("f(0,0) = 1", |_: &[f64]| 1.0)] {
        let grid = build_grid(&DomainSpec::truncated_slab([0.0, 1.0], 1.0), [33, 33], None)?;
        let sys = assemble_system(&model, &grid)?;
        let f = grid.field(f_of);
        let u = solve_bvp(&BvpProblem::new(sys, f.clone(), Field::zeros(grid.len()))?, Method::Direct, 1e-10, 3)?;
        println!("corner probe, {label}: {:.3e}", corner_compatibility_probe(&model, &u, &f, &grid)?);
    }
    Ok(())
}
