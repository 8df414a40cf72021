//! The half-ball to slab change of variables: round trips, boundary faces,
//! the transformed Heston coefficients and the two-dimensional closed forms.

use std::f64::consts::FRAC_PI_2;

use degen::geometry::{
    boundary_drift_limit, closed_form_deltas, cycloidal_distance, forward_map, inverse_map, model2d_closed_form,
    pullback_coefficients,
};
use degen::operator::{heston_coefficients, HestonParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("round trips");
    for x in [[0.3, 0.4], [-0.9, 0.1], [0.0, 0.999], [0.5, 1e-9]] {
        let w = forward_map(&x)?;
        let back = inverse_map(&w)?;
        println!(
            "  x = {x:?} -> w = ({:+.6}, {:.6}) -> error {:.1e}",
            w[0],
            w[1],
            (back[0] - x[0]).hypot(back[1] - x[1])
        );
    }
    let x3 = [0.1, -0.2, 0.5];
    let w3 = forward_map(&x3)?;
    println!("  d=3: {x3:?} -> {w3:.6?}");

    println!("faces");
    println!("  flat face   x=(0.4, 0)        -> w_2 = {:.3e}", forward_map(&[0.4, 0.0])?[1]);
    println!(
        "  hemisphere  x=(0.6, 0.8)(1-1e-9) -> w_2 - pi/2 = {:.3e}",
        forward_map(&[0.6 * (1.0 - 1e-9), 0.8 * (1.0 - 1e-9)])?[1] - FRAC_PI_2
    );

    let cs = heston_coefficients(&HestonParams {
        sigma: 0.5,
        rho: -0.3,
        kappa: 2.0,
        theta: 0.3,
        r: 0.05,
        q: 0.0,
    })?;
    println!("transformed Heston coefficients");
    println!("  {:>6} {:>8} | {:>10} {:>10} {:>10} | {:>10} {:>10}", "w1", "w2", "a11", "a12", "a22", "b1", "b2");
    for w in [[-1.0, 0.5], [0.0, 0.2], [0.0, 1.2], [1.5, 0.01]] {
        let p = pullback_coefficients(&cs, &w)?;
        println!(
            "  {:>6.2} {:>8.3} | {:>10.4} {:>10.4} {:>10.4} | {:>10.4} {:>10.4}",
            w[0],
            w[1],
            p.tilde_a[(0, 0)],
            p.tilde_a[(0, 1)],
            p.tilde_a[(1, 1)],
            p.tilde_b[0],
            p.tilde_b[1]
        );
    }
    for s in [-1.0, 0.0, 1.0] {
        let near = pullback_coefficients(&cs, &[s, 1e-6])?.tilde_b[1];
        println!(
            "  normal drift at w2 -> 0, w1 = {s:+}: {near:.6} (limit {:.6})",
            boundary_drift_limit(&cs, &[s])?
        );
    }

    println!("closed forms for a = I, b = (0.3, 1), c = 0.1");
    for (s, theta) in [(0.0, 0.5), (0.0, FRAC_PI_2), (0.7, 1.0)] {
        let cf = model2d_closed_form(0.3, 1.0, 0.1, s, theta);
        let d = closed_form_deltas(0.3, 1.0, 0.1, s, theta)?;
        println!(
            "  (s, theta) = ({s}, {theta:.3}): D = {:.4}, deltas x {:.1e} y {:.1e} b ({:.1e}, {:.1e})",
            cf.big_d, d.x, d.y, d.tilde_b[0], d.tilde_b[1]
        );
    }

    println!(
        "cycloidal distance (0.5, 0.01)-(0.5, 0.04): {:.4}",
        cycloidal_distance(&[0.5, 0.01], &[0.5, 0.04])
    );
    Ok(())
}
