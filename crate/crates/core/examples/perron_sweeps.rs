//! Overlapping patch sweeps: the BVP envelopes from below and above, then
//! the obstacle sweep in both lift modes, with per-sweep telemetry.

use degen::bvp::BvpProblem;
use degen::discretize::{assemble_system, build_grid, DomainSpec, Field};
use degen::obstacle::{payoff, ObstacleProblem, PayoffKind};
use degen::operator::{heston_coefficients, HestonParams};
use degen::perron::{
    comparison_check, make_patches, perron_sweep_bvp, perron_sweep_bvp_from_above, perron_sweep_obstacle,
    auto_supersolution, Init, ObstacleMode, PatchKind, Schedule, SweepOptions, Target,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cs = heston_coefficients(&HestonParams {
        sigma: 0.5,
        rho: -0.3,
        kappa: 2.0,
        theta: 0.3,
        r: 0.05,
        q: 0.0,
    })?;

    let grid = build_grid(&DomainSpec::truncated_slab([-2.0, 2.0], 1.0), [64, 32], None)?;
    let sys = assemble_system(&cs, &grid)?;
    let f = grid.field(|x| 1.0 + x[0].sin());
    let g = grid.field(|x| x[1] + 0.1 * x[0] * x[0]);
    let p = BvpProblem::new(sys, f, g)?;
    let patches = make_patches(&grid, 12, 6)?;
    let half = patches.iter().filter(|q| q.kind == PatchKind::HalfBall).count();
    println!("{} patches, {half} touching the degenerate face", patches.len());

    let opts = SweepOptions {
        tol: 1e-9,
        schedule: Schedule::Colored,
        ..SweepOptions::default()
    };
    let up = perron_sweep_bvp(&p, &patches, &Init::Auto, &opts)?;
    let down = perron_sweep_bvp_from_above(&p, &patches, &opts)?;
    println!("sweep  gap(up)      gap(down)");
    for (k, (a, b)) in up.telemetry.iter().zip(&down.telemetry).enumerate().step_by(5) {
        println!("{k:>5}  {:.3e}  {:.3e}", a.gap_to_reference, b.gap_to_reference);
    }
    println!(
        "up {} sweeps, down {} sweeps, envelopes differ by {:.2e}",
        up.sweep_index,
        down.sweep_index,
        up.current.max_diff(&down.current)
    );

    let grid = build_grid(&DomainSpec::truncated_slab([-3.0, 3.0], 1.0), [65, 33], None)?;
    let sys = assemble_system(&cs, &grid)?;
    let psi = grid.field(|x| payoff(PayoffKind::Put, 1.0, x[0]));
    let op = ObstacleProblem::new(sys, Field::zeros(grid.len()), psi.clone(), psi)?;
    let patches = make_patches(&grid, 12, 6)?;
    for mode in [ObstacleMode::ObstacleEverywhere, ObstacleMode::TwoTier] {
        let st = perron_sweep_obstacle(
            &op,
            &patches,
            &Init::Auto,
            &SweepOptions {
                tol: 1e-10,
                max_sweeps: 2000,
                mode,
                ..SweepOptions::default()
            },
        )?;
        println!(
            "{mode:?}: {} sweeps, gap to PSOR {:.2e}, largest upward change {:.2e}",
            st.sweep_index, st.gap_to_reference, st.monotone_violation
        );
    }

    // the constant upper barrier dominates the obstacle solution
    let m = auto_supersolution(&op.sys, &op.f, &op.g, Some(&op.psi))?;
    let st = perron_sweep_obstacle(&op, &patches, &Init::Auto, &SweepOptions::default())?;
    let rep = comparison_check(&st.current, &Field::constant(grid.len(), m), Target::Obstacle(&op), 1e-12)?;
    println!("comparison with M = {m:.4}: pass={} max violation {:.2e}", rep.pass, rep.max_violation);
    Ok(())
}
