use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use super::config::{CaseKind, RunConfig, SolverMethod};
use super::output::{write_outputs, NamedField};
use super::{RunError, RunOptions, RunOutcome};
use crate::bvp::{apriori_bound, solve_bvp, AprioriBound, BoundVariant, BvpProblem, ConvergenceTable, Method};
use crate::discretize::{
    assemble_with, build_grid, discrete_residual, monotonicity_check, AssemblyOptions, Field, Grid, NodeTag, StencilSystem,
};
use crate::geometry::{closed_form_deltas, forward_map, inverse_map, pullback_coefficients};
use crate::linalg::residual_inf;
use crate::obstacle::{
    complementarity_residual, continuation_region, solve_lcp_policy, solve_lcp_psor, solve_penalized,
    ObstacleProblem, ObstacleSolution, DEFAULT_EPS_SCHEDULE,
};
use crate::operator::{apply_operator_pointwise, CoefficientSet, Jet};
use crate::perron::{
    make_patches, perron_sweep_bvp, perron_sweep_bvp_from_above, perron_sweep_obstacle, Init, PatchKind,
    SweepOptions, SweepState,
};
use crate::verification::{
    active_set, brute_force_lcp, oblique_residual_check, refinement_rates, OracleReport,
};

/// Slack on the sup-norm bounds.
const BOUND_SLACK: f64 = 1e-8;
/// Largest wrong-direction change allowed in a monotone sweep.
const MONOTONE_SLACK: f64 = 1e-12;
const PERRON_BVP_GAP: f64 = 1e-6;
const PERRON_OBSTACLE_GAP: f64 = 1e-5;
const PERRON_COMPLEMENTARITY: f64 = 1e-8;

#[derive(Default)]
struct Ctx {
    results: BTreeMap<String, Value>,
    /// Always enforced.
    oracles: Vec<OracleReport>,
    /// Enforced in acceptance mode.
    checks: Vec<OracleReport>,
    fields: Vec<(String, Grid, Field)>,
    tables: Vec<(String, Vec<u8>)>,
    timings_ms: BTreeMap<String, f64>,
}

impl Ctx {
    fn put(&mut self, key: &str, v: impl serde::Serialize) {
        self.results.insert(key.into(), serde_json::to_value(v).unwrap_or(Value::Null));
    }

    fn time<T>(&mut self, key: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.timings_ms.insert(key.into(), t.elapsed().as_secs_f64() * 1e3);
        out
    }

    fn field(&mut self, name: &str, grid: &Grid, f: &Field) {
        self.fields.push((name.into(), grid.clone(), f.clone()));
    }
}

struct Setup {
    cs: CoefficientSet,
    grid: Grid,
    sys: StencilSystem,
    f: Field,
    g: Field,
    psi: Option<Field>,
}

fn setup(cfg: &RunConfig) -> Result<Setup, RunError> {
    let cs = cfg.coefficients()?;
    let grid = cfg.grid()?;
    let sys = assemble_with(&cs, &grid, &AssemblyOptions::default())?;
    let f = cfg.field(&cfg.data.f, &grid)?;
    let g = cfg.field(&cfg.data.g, &grid)?;
    let psi = cfg.data.psi.as_ref().map(|s| cfg.field(s, &grid)).transpose()?;
    Ok(Setup {
        cs,
        grid,
        sys,
        f,
        g,
        psi,
    })
}

/// Executes the case, writes artifacts under `opts.out_dir`, and fails with
/// [`RunError::OracleMismatch`] after writing when an enforced check fails.
pub fn run_case(cfg: &RunConfig, opts: &RunOptions) -> Result<RunOutcome, RunError> {
    let mut ctx = Ctx::default();
    match cfg.case {
        CaseKind::Bvp => bvp_case(cfg, &mut ctx)?,
        CaseKind::Obstacle => obstacle_case(cfg, &mut ctx)?,
        CaseKind::PerronBvp => perron_bvp_case(cfg, &mut ctx)?,
        CaseKind::PerronObstacle => perron_obstacle_case(cfg, &mut ctx)?,
        CaseKind::TransformCheck => transform_case(cfg, opts.seed, &mut ctx)?,
        CaseKind::Verify => verify_case(cfg, opts.seed, &mut ctx)?,
    }
    let mut failures: Vec<String> = ctx
        .oracles
        .iter()
        .filter(|o| !o.pass)
        .map(|o| format!("{}: deviation {:e} > {:e}", o.case_id, o.max_deviation, o.tolerance))
        .collect();
    if opts.acceptance {
        failures.extend(
            ctx.checks
                .iter()
                .filter(|o| !o.pass)
                .map(|o| format!("{}: deviation {:e} > {:e}", o.case_id, o.max_deviation, o.tolerance)),
        );
    }
    let report = json!({
        "case": cfg.case,
        "config": cfg,
        "seed": opts.seed,
        "acceptance": opts.acceptance,
        "results": ctx.results,
        "oracles": ctx.oracles,
        "checks": ctx.checks,
        "failures": failures,
        "timings_ms": ctx.timings_ms,
    });
    let named: Vec<NamedField> = ctx
        .fields
        .iter()
        .map(|(name, grid, field)| NamedField { name, grid, field })
        .collect();
    std::fs::create_dir_all(&opts.out_dir)?;
    let mut artifacts = Vec::new();
    for (name, bytes) in &ctx.tables {
        let path = opts.out_dir.join(format!("{name}.csv"));
        std::fs::write(&path, bytes)?;
        artifacts.push(path);
    }
    artifacts.extend(write_outputs(&named, &report, &opts.out_dir)?);
    if failures.is_empty() {
        Ok(RunOutcome { report, artifacts })
    } else {
        Err(RunError::OracleMismatch(failures))
    }
}

fn linear_bound(cs: &CoefficientSet, p: &BvpProblem) -> Result<AprioriBound, String> {
    apriori_bound(cs, p.sup_abs_f(), p.sup_abs_g(), None, BoundVariant::SolutionSupNorm)
        .or_else(|_| apriori_bound(cs, p.sup_abs_f(), p.sup_abs_g(), None, BoundVariant::FiniteHeight))
        .map_err(|e| e.to_string())
}

fn monotone_check(ctx: &mut Ctx, sys: &StencilSystem) {
    let rep = monotonicity_check(sys);
    ctx.checks
        .push(OracleReport::at_most("monotone_rows", 0.0, rep.violations.len() as f64));
    ctx.put("monotonicity", rep);
}

fn bvp_case(cfg: &RunConfig, ctx: &mut Ctx) -> Result<(), RunError> {
    let s = setup(cfg)?;
    monotone_check(ctx, &s.sys);
    let p = BvpProblem::new(s.sys, s.f, s.g)?;
    let method = match cfg.solver.method {
        Some(SolverMethod::Sor) => Method::Sor {
            omega: cfg.solver.omega,
        },
        _ => Method::Direct,
    };
    let u = ctx.time("solve", || solve_bvp(&p, method, cfg.solver.tol, cfg.solver.max_iter))?;
    let residual = residual_inf(&p.sys, &u, &p.rhs());
    ctx.put("method", method);
    ctx.put("residual", residual);
    ctx.put("sup_norm", u.sup_norm());
    ctx.checks.push(OracleReport::at_most("residual", cfg.solver.tol, residual));
    match linear_bound(&s.cs, &p) {
        Ok(b) => {
            ctx.checks
                .push(OracleReport::at_most("apriori_bound", b.value + BOUND_SLACK, u.sup_norm()));
            ctx.put("apriori_bound", b);
        }
        Err(e) => ctx.put("apriori_bound", json!({ "unavailable": e })),
    }
    let res = discrete_residual(&p.sys, &u, &p.f, &p.g)?;
    ctx.field("solution", &s.grid, &u);
    ctx.field("residual", &s.grid, &res);
    Ok(())
}

fn obstacle_problem(s: Setup) -> Result<(Setup, ObstacleProblem), RunError> {
    let psi = s.psi.clone().expect("validated");
    let p = ObstacleProblem::new(s.sys.clone(), s.f.clone(), s.g.clone(), psi)?;
    Ok((s, p))
}

/// `1` on the continuation set, `0` on the coincidence set, `-1` on fixed rows.
fn mask_field(grid: &Grid, u: &Field, psi: &Field, tol: f64) -> Result<(Field, usize, usize), RunError> {
    let m = continuation_region(grid, u, psi, tol)?;
    let f = Field(
        (0..grid.len())
            .map(|k| {
                if grid.tag(k).is_fixed() {
                    -1.0
                } else if m.continuation[k] {
                    1.0
                } else {
                    0.0
                }
            })
            .collect(),
    );
    Ok((f, m.continuation_count(), m.coincidence_count()))
}

/// `min(L_h u - f, u - ψ)` on free rows, zero on fixed rows.
fn complementarity_field(p: &ObstacleProblem, u: &Field) -> Field {
    Field(
        (0..p.sys.len())
            .map(|r| {
                if p.sys.is_fixed(r) {
                    0.0
                } else {
                    (p.sys.apply_row(r, u) - p.f[r]).min(u[r] - p.psi[r])
                }
            })
            .collect(),
    )
}

fn obstacle_bound(cs: &CoefficientSet, p: &ObstacleProblem) -> Result<AprioriBound, String> {
    let fixed = |r: usize| p.sys.is_fixed(r);
    let sup = |v: &Field, on_fixed: bool| {
        (0..v.len())
            .filter(|&r| fixed(r) == on_fixed)
            .fold(f64::NEG_INFINITY, |m, r| m.max(v[r]))
    };
    apriori_bound(
        cs,
        sup(&p.f, false),
        sup(&p.g, true),
        Some(sup(&p.psi, false)),
        BoundVariant::ObstacleUpper,
    )
    .map_err(|e| e.to_string())
}

fn obstacle_case(cfg: &RunConfig, ctx: &mut Ctx) -> Result<(), RunError> {
    let (s, p) = obstacle_problem(setup(cfg)?)?;
    monotone_check(ctx, &p.sys);
    let sv = &cfg.solver;
    let method = sv.method.unwrap_or(SolverMethod::Psor);
    let sol: ObstacleSolution = ctx.time("solve", || match method {
        SolverMethod::Policy => solve_lcp_policy(&p, sv.max_iter.min(100_000)),
        SolverMethod::Penalty => solve_penalized(&p, &DEFAULT_EPS_SCHEDULE, sv.tol),
        _ => solve_lcp_psor(&p, sv.omega, sv.tol, sv.max_iter),
    })?;
    let comp = complementarity_residual(&p, &sol.u)?;
    ctx.put("method", method);
    ctx.put("iterations", sol.iterations);
    ctx.put("complementarity_residual", comp);
    ctx.put("sup_norm", sol.u.sup_norm());
    if method != SolverMethod::Penalty {
        ctx.checks.push(OracleReport::at_most("complementarity", sv.tol, comp));
    }
    match obstacle_bound(&s.cs, &p) {
        Ok(b) => {
            ctx.checks
                .push(OracleReport::at_most("apriori_bound", b.value + BOUND_SLACK, sol.u.max()));
            ctx.put("apriori_bound", b);
        }
        Err(e) => ctx.put("apriori_bound", json!({ "unavailable": e })),
    }
    let (mask, cont, coin) = mask_field(&s.grid, &sol.u, &p.psi, sv.tol)?;
    ctx.put("continuation_nodes", cont);
    ctx.put("coincidence_nodes", coin);
    ctx.field("solution", &s.grid, &sol.u);
    ctx.field("mask", &s.grid, &mask);
    ctx.field("residual", &s.grid, &complementarity_field(&p, &sol.u));
    Ok(())
}

fn sweep_summary(s: &SweepState) -> Value {
    json!({
        "sweeps": s.sweep_index,
        "effective_sweeps": s.effective_sweeps,
        "monotone_violation": s.monotone_violation,
        "monotone_system": s.monotone_system,
        "gap_to_reference": s.gap_to_reference,
        "telemetry": s.telemetry,
    })
}

fn sweep_options(cfg: &RunConfig) -> SweepOptions {
    SweepOptions {
        tol: cfg.solver.tol,
        max_sweeps: cfg.perron.max_sweeps,
        schedule: cfg.perron.schedule,
        mode: cfg.perron.mode,
        reference: None,
    }
}

fn monotone_sweep_check(ctx: &mut Ctx, name: &str, s: &SweepState) {
    // outside the M-matrix regime the monotonicity figure is a diagnostic
    if s.monotone_system {
        ctx.checks
            .push(OracleReport::at_most(name, MONOTONE_SLACK, s.monotone_violation));
    }
}

fn perron_bvp_case(cfg: &RunConfig, ctx: &mut Ctx) -> Result<(), RunError> {
    let s = setup(cfg)?;
    let patches = make_patches(&s.grid, cfg.perron.radius, cfg.perron.overlap)?;
    let p = BvpProblem::new(s.sys, s.f, s.g)?;
    let mut so = sweep_options(cfg);
    let up = ctx.time("sweep_up", || perron_sweep_bvp(&p, &patches, &Init::Auto, &so))?;
    ctx.put("patches", patches.len());
    ctx.put(
        "half_ball_patches",
        patches.iter().filter(|q| q.kind == PatchKind::HalfBall).count(),
    );
    ctx.put("up", sweep_summary(&up));
    monotone_sweep_check(ctx, "up_monotone_violation", &up);
    ctx.checks
        .push(OracleReport::at_most("up_gap_to_direct", PERRON_BVP_GAP, up.gap_to_reference));
    if cfg.perron.both_envelopes {
        so.reference = Some(up.reference.clone());
        let down = ctx.time("sweep_down", || perron_sweep_bvp_from_above(&p, &patches, &so))?;
        let agree = down.current.max_diff(&up.current);
        ctx.put("down", sweep_summary(&down));
        ctx.put("envelope_gap", agree);
        monotone_sweep_check(ctx, "down_monotone_violation", &down);
        ctx.checks
            .push(OracleReport::at_most("envelope_gap", 2.0 * PERRON_BVP_GAP, agree));
    }
    ctx.field("solution", &s.grid, &up.current);
    ctx.field("reference", &s.grid, &up.reference);
    Ok(())
}

fn perron_obstacle_case(cfg: &RunConfig, ctx: &mut Ctx) -> Result<(), RunError> {
    let (s, p) = obstacle_problem(setup(cfg)?)?;
    let patches = make_patches(&s.grid, cfg.perron.radius, cfg.perron.overlap)?;
    let so = sweep_options(cfg);
    let st = ctx.time("sweep_down", || perron_sweep_obstacle(&p, &patches, &Init::Auto, &so))?;
    let comp = complementarity_residual(&p, &st.current)?;
    let (mask, cont, coin) = mask_field(&s.grid, &st.current, &p.psi, 1e-8)?;
    ctx.put("patches", patches.len());
    ctx.put("mode", cfg.perron.mode);
    ctx.put("down", sweep_summary(&st));
    ctx.put("complementarity_residual", comp);
    ctx.put("continuation_nodes", cont);
    ctx.put("coincidence_nodes", coin);
    monotone_sweep_check(ctx, "down_monotone_violation", &st);
    ctx.checks
        .push(OracleReport::at_most("gap_to_psor", PERRON_OBSTACLE_GAP, st.gap_to_reference));
    ctx.checks
        .push(OracleReport::at_most("complementarity", PERRON_COMPLEMENTARITY, comp));
    ctx.checks.push(OracleReport::at_least("continuation_nodes", 1.0, cont as f64));
    ctx.checks.push(OracleReport::at_least("coincidence_nodes", 1.0, coin as f64));
    ctx.field("solution", &s.grid, &st.current);
    ctx.field("reference", &s.grid, &st.reference);
    ctx.field("mask", &s.grid, &mask);
    Ok(())
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn transform_case(cfg: &RunConfig, seed: u64, ctx: &mut Ctx) -> Result<(), RunError> {
    let cs = cfg.coefficients()?;
    let t = &cfg.transform;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "w1", "w2", "x1", "x2", "a11", "a12", "a22", "b1", "b2", "c", "round_trip", "d_x", "d_y", "d_theta_a",
        "d_b1", "d_b2", "d_c",
    ])?;
    let (mut worst_trip, mut worst_sym, mut min_eig) = (0.0f64, 0.0f64, f64::INFINITY);
    let mut worst_delta = [0.0f64; 6];
    for _ in 0..t.samples {
        let wp = [rng.random_range(t.w1[0]..t.w1[1]), rng.random_range(1e-6..FRAC_PI_2)];
        let pb = pullback_coefficients(&cs, &wp)?;
        let back = forward_map(&inverse_map(&wp)?)?;
        let trip = (back[0] - wp[0]).hypot(back[1] - wp[1]);
        worst_trip = worst_trip.max(trip);
        worst_sym = worst_sym.max((pb.tilde_a[(0, 1)] - pb.tilde_a[(1, 0)]).abs());
        min_eig = min_eig.min(pb.tilde_a.symmetric_eigenvalues().min());
        let d = closed_form_deltas(t.model_b[0], t.model_b[1], t.model_c, wp[0], wp[1])?;
        let ds = [d.x, d.y, d.theta_a, d.tilde_b[0], d.tilde_b[1], d.tilde_c];
        for (m, v) in worst_delta.iter_mut().zip(ds) {
            *m = m.max(v.abs());
        }
        let mut rec = vec![
            wp[0],
            wp[1],
            pb.x[0],
            pb.x[1],
            pb.tilde_a[(0, 0)],
            pb.tilde_a[(0, 1)],
            pb.tilde_a[(1, 1)],
            pb.tilde_b[0],
            pb.tilde_b[1],
            pb.tilde_c,
            trip,
        ];
        rec.extend(ds);
        w.write_record(rec.into_iter().map(fmt))?;
    }
    let bytes = w.into_inner().map_err(|e| RunError::Io(e.to_string()))?;
    ctx.tables.push(("transform".into(), bytes));
    ctx.put("samples", t.samples);
    ctx.put("max_round_trip", worst_trip);
    ctx.put("max_asymmetry", worst_sym);
    ctx.put("min_eigenvalue", min_eig);
    ctx.put(
        "closed_form_max_deltas",
        json!({
            "x": worst_delta[0], "y": worst_delta[1], "theta_a": worst_delta[2],
            "b1": worst_delta[3], "b2": worst_delta[4], "c": worst_delta[5],
        }),
    );
    ctx.oracles
        .push(OracleReport::at_most("round_trip", t.round_trip_tol, worst_trip));
    ctx.checks.push(OracleReport::at_least("min_eigenvalue", f64::MIN_POSITIVE, min_eig));
    Ok(())
}

/// `sin(x1) x2²`, smooth up to the degenerate face.
fn manufactured(x: &[f64]) -> Jet {
    let (s, c) = x[0].sin_cos();
    let y = x[1];
    Jet {
        value: s * y * y,
        gradient: DVector::from_row_slice(&[c * y * y, 2.0 * s * y]),
        hessian: DMatrix::from_row_slice(2, 2, &[-s * y * y, 2.0 * c * y, 2.0 * c * y, 2.0 * s]),
    }
}

fn verify_case(cfg: &RunConfig, seed: u64, ctx: &mut Ctx) -> Result<(), RunError> {
    let cs = cfg.coefficients()?;
    let v = &cfg.verify;
    let opts = AssemblyOptions {
        flip_drift_sign: v.inject_drift_sign_flip,
    };
    let degenerate = cfg.domain.has_degenerate_face();
    let mut errs = Vec::new();
    let mut oblique = Vec::new();
    let t0 = Instant::now();
    for &n in &v.levels {
        let grid = build_grid(&cfg.domain, n, cfg.grid.stretch)?;
        let sys = assemble_with(&cs, &grid, &opts)?;
        let f = grid.field(|x| apply_operator_pointwise(&cs, &manufactured(x), x));
        let exact = grid.field(|x| manufactured(x).value);
        let p = BvpProblem::new(sys, f, exact.clone())?;
        let u = solve_bvp(&p, Method::Direct, 1e-10, 3)?;
        let err_on = |tag: NodeTag| {
            (0..grid.len())
                .filter(|&k| grid.tag(k) == tag)
                .fold(0.0f64, |m, k| m.max((u[k] - exact[k]).abs()))
        };
        errs.push((grid.max_spacing(), err_on(NodeTag::Interior), err_on(NodeTag::Degenerate)));
        if degenerate {
            oblique.push(oblique_residual_check(&u, &p.f, &cs, &grid)?.value);
        }
    }
    ctx.timings_ms.insert("mms".into(), t0.elapsed().as_secs_f64() * 1e3);
    let table = ConvergenceTable::from_errors(&errs);
    let mut buf = Vec::new();
    table.write_csv(&mut buf)?;
    ctx.tables.push(("mms".into(), buf));
    let (oi, od) = table.final_orders().expect("at least two levels");
    ctx.oracles
        .push(OracleReport::at_least("mms_order_interior", v.min_order_interior, oi));
    if degenerate {
        ctx.oracles
            .push(OracleReport::at_least("mms_order_degenerate", v.min_order_degenerate, od));
        let hs: Vec<f64> = errs.iter().map(|e| e.0).collect();
        let rates = refinement_rates(&oblique, &hs);
        ctx.oracles.push(OracleReport::at_least(
            "oblique_order",
            v.min_order_oblique,
            *rates.last().unwrap(),
        ));
        ctx.put("oblique_residuals", &oblique);
    }
    ctx.put("mms", &table);

    // complementarity oracle on the smallest grid the operator allows
    let t0 = Instant::now();
    let grid = build_grid(&cfg.domain, if degenerate { [5, 4] } else { [5, 5] }, None)?;
    let sys = assemble_with(&cs, &grid, &opts)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lcp = Vec::new();
    for case in 0..v.lcp_cases {
        let f = Field((0..grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect());
        let g = Field((0..grid.len()).map(|_| rng.random_range(0.0..1.0)).collect());
        let mut psi = Field((0..grid.len()).map(|_| rng.random_range(-0.5..0.5)).collect());
        for k in 0..grid.len() {
            if sys.is_fixed(k) {
                psi[k] = psi[k].min(g[k]);
            }
        }
        let brute = brute_force_lcp(&sys, &f, &g, &psi)?;
        let p = ObstacleProblem::new(sys.clone(), f, g, psi.clone())?;
        let ps = solve_lcp_psor(&p, 1.2, 1e-12, 1_000_000)?;
        let act = |a: &[bool]| a.iter().map(|&b| b as u8 as f64).collect::<Vec<f64>>();
        let ps_active = active_set(&sys, &ps.u, &psi, 1e-9);
        ctx.oracles.push(OracleReport::compare(
            format!("lcp_{case}_active_set"),
            &act(&brute.active),
            &act(&ps_active),
            0.0,
        ));
        ctx.oracles
            .push(OracleReport::compare(format!("lcp_{case}_values"), &brute.u, &ps.u, 1e-10));
        lcp.push(brute.configurations_tried);
    }
    ctx.timings_ms.insert("lcp".into(), t0.elapsed().as_secs_f64() * 1e3);
    ctx.put("lcp_configurations_tried", lcp);
    ctx.put("fault_injected", v.inject_drift_sign_flip);
    Ok(())
}
