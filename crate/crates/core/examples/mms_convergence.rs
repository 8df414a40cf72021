//! Manufactured-solution study: nodal errors on interior and degenerate
//! rows, observed orders, and the oblique residual at the flat face.

use degen::bvp::mms_convergence;
use degen::discretize::DomainSpec;
use degen::operator::{heston_coefficients, HestonParams, Jet};
use degen::verification::{oblique_residual_check, refinement_rates};
use nalgebra::{DMatrix, DVector};

fn exact(x: &[f64]) -> Jet {
    let (s, c) = x[0].sin_cos();
    let y = x[1];
    Jet {
        value: s * y * y,
        gradient: DVector::from_row_slice(&[c * y * y, 2.0 * s * y]),
        hessian: DMatrix::from_row_slice(2, 2, &[-s * y * y, 2.0 * c * y, 2.0 * c * y, 2.0 * s]),
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cs = heston_coefficients(&HestonParams {
        sigma: 0.5,
        rho: -0.3,
        kappa: 2.0,
        theta: 0.3,
        r: 0.05,
        q: 0.0,
    })?;
    let dom = DomainSpec::truncated_slab([-2.0, 2.0], 1.0);
    let (table, levels) = mms_convergence(&cs, &exact, &dom, &[[17, 17], [33, 33], [65, 65], [129, 129]])?;
    table.write_csv(std::io::stdout().lock())?;

    let oblique: Vec<f64> = levels
        .iter()
        .map(|l| oblique_residual_check(&l.solution, &l.problem.f, &cs, l.grid()).map(|r| r.value))
        .collect::<Result<_, _>>()?;
    let hs: Vec<f64> = levels.iter().map(|l| l.grid().max_spacing()).collect();
    eprintln!("oblique residuals {oblique:.3?}");
    eprintln!("oblique rates     {:.3?}", refinement_rates(&oblique, &hs));
    Ok(())
}
