mod common;

use degen::bvp::{apriori_bound, solve_bvp, BoundVariant, BvpProblem, Method};
use degen::discretize::{assemble_system, build_grid, monotonicity_check, DomainSpec, Field};
use degen::obstacle::{
    complementarity_residual, mollify_obstacle, payoff, payoff_concavity, solve_lcp_psor, solve_penalized,
    ObstacleProblem, PayoffKind, DEFAULT_EPS_SCHEDULE,
};
use degen::perron::{comparison_check, Target};
use proptest::prelude::*;

use common::{heston, monotone_constant, values};

fn grid() -> degen::discretize::Grid {
    build_grid(&DomainSpec::truncated_slab([-1.0, 1.0], 1.0), [9, 9], None).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn solutions_respect_the_sup_bound(cs in monotone_constant(), f in values(81, -1.0, 1.0), g in values(81, -1.0, 1.0)) {
        let g0 = grid();
        let sys = assemble_system(&cs, &g0).unwrap();
        prop_assume!(monotonicity_check(&sys).passes);
        let p = BvpProblem::new(sys, Field(f), Field(g)).unwrap();
        let u = solve_bvp(&p, Method::Direct, 1e-10, 3).unwrap();
        let bound = apriori_bound(&cs, p.sup_abs_f(), p.sup_abs_g(), None, BoundVariant::SolutionSupNorm).unwrap();
        prop_assert!(u.sup_norm() <= bound.value + 1e-8);
    }

    #[test]
    fn solve_is_linear_in_the_data(
        f1 in values(81, -1.0, 1.0), f2 in values(81, -1.0, 1.0),
        g1 in values(81, -1.0, 1.0), g2 in values(81, -1.0, 1.0),
        alpha in -2.0..2.0f64, beta in -2.0..2.0f64,
    ) {
        let g0 = grid();
        let sys = assemble_system(&heston(), &g0).unwrap();
        let tol = 1e-10;
        let solve = |f: &[f64], g: &[f64]| {
            solve_bvp(&BvpProblem::new(sys.clone(), Field(f.to_vec()), Field(g.to_vec())).unwrap(), Method::Direct, tol, 3).unwrap()
        };
        let comb = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| alpha * a + beta * b).collect::<Vec<_>>();
        let lhs = solve(&comb(&f1, &f2), &comb(&g1, &g2));
        let u1 = solve(&f1, &g1);
        let u2 = solve(&f2, &g2);
        let rhs = Field(comb(&u1, &u2));
        prop_assert!(lhs.max_diff(&rhs) <= 10.0 * tol * (1.0 + rhs.sup_norm()));
    }

    #[test]
    fn psor_is_feasible_and_bounded(cs in monotone_constant(), f in values(81, -1.0, 1.0), strike in 0.5..2.0f64) {
        let g0 = grid();
        let sys = assemble_system(&cs, &g0).unwrap();
        prop_assume!(monotonicity_check(&sys).passes);
        let psi = g0.field(|x| payoff(PayoffKind::Put, strike, x[0]));
        let p = ObstacleProblem::new(sys, Field(f), psi.clone(), psi.clone()).unwrap();
        let tol = 1e-10;
        let s = solve_lcp_psor(&p, 1.4, tol, 1_000_000).unwrap();
        prop_assert!(s.u.iter().zip(psi.iter()).all(|(u, v)| u >= &(v - tol)));
        prop_assert!(complementarity_residual(&p, &s.u).unwrap() <= 1e-9);
        let b = apriori_bound(&cs, p.f.max(), p.g.max(), Some(psi.max()), BoundVariant::ObstacleUpper).unwrap();
        prop_assert!(s.u.max() <= b.value + 1e-8);
    }

    /// Any u + w with L_h w ≥ 0 and w ≥ 0 is a supersolution; PSOR stays below it.
    #[test]
    fn psor_lies_below_supersolutions(f in values(81, -1.0, 1.0), bump in values(81, 0.0, 1.0), shift in 0.0..0.5f64) {
        let g0 = grid();
        let sys = assemble_system(&heston(), &g0).unwrap();
        let psi = g0.field(|x| payoff(PayoffKind::Put, 1.0, x[0]));
        let p = ObstacleProblem::new(sys.clone(), Field(f), psi.clone(), psi).unwrap();
        let tol = 1e-11;
        let u = solve_lcp_psor(&p, 1.4, tol, 1_000_000).unwrap().u;
        // w solves L_h w = bump ≥ 0 with w = shift ≥ 0 on fixed rows: w ≥ 0 by the maximum principle
        let w = solve_bvp(
            &BvpProblem::new(sys, Field(bump), Field::constant(g0.len(), shift)).unwrap(),
            Method::Direct,
            1e-12,
            3,
        )
        .unwrap();
        prop_assert!(w.min() >= -1e-12);
        let v = Field(u.iter().zip(w.iter()).map(|(a, b)| a + b).collect());
        let rep = comparison_check(&u, &v, Target::Obstacle(&p), 1e-9).unwrap();
        prop_assert!(rep.supersolution_defect <= 1e-9, "defect {}", rep.supersolution_defect);
        prop_assert!(rep.pass);
    }
}

#[test]
fn far_obstacle_reduces_to_the_linear_problem() {
    let g0 = grid();
    let sys = assemble_system(&heston(), &g0).unwrap();
    let f = g0.field(|x| 1.0 + x[0] * x[1]);
    let g = g0.field(|x| x[0]);
    let u = solve_bvp(&BvpProblem::new(sys.clone(), f.clone(), g.clone()).unwrap(), Method::Direct, 1e-12, 3).unwrap();
    let p = ObstacleProblem::new(sys, f, g, Field::constant(g0.len(), -1e6)).unwrap();
    let pen = solve_penalized(&p, &DEFAULT_EPS_SCHEDULE, 1e-12).unwrap();
    assert!(u.max_diff(&pen.u) <= 1e-8);
    let ps = solve_lcp_psor(&p, 1.5, 1e-12, 1_000_000).unwrap();
    assert!(u.max_diff(&ps.u) <= 1e-9);
}

#[test]
fn direct_and_sor_agree_on_a_heston_slab() {
    let g0 = build_grid(&DomainSpec::truncated_slab([-2.0, 2.0], 1.0), [33, 17], None).unwrap();
    let sys = assemble_system(&heston(), &g0).unwrap();
    let p = BvpProblem::new(sys, g0.field(|_| 1.0), g0.field(|x| x[1])).unwrap();
    let tol = 1e-10;
    let d = solve_bvp(&p, Method::Direct, tol, 3).unwrap();
    let s = solve_bvp(&p, Method::Sor { omega: 1.5 }, tol, 1_000_000).unwrap();
    // iterate error ≤ residual / reaction floor
    assert!(d.max_diff(&s) <= 10.0 * tol / 0.05);
}

/// Operator applied to the mollified obstacle, away from the edges.
fn max_operator_on_mollified(psi_of: fn(f64) -> f64, concavity: f64) -> Vec<f64> {
    let dom = DomainSpec::truncated_slab([-0.5, 0.5], 0.3);
    let g0 = build_grid(&dom, [201, 61], None).unwrap();
    let sys = assemble_system(&heston(), &g0).unwrap();
    let psi = g0.field(|x| psi_of(x[0]));
    [0.1, 0.05, 0.025]
        .iter()
        .map(|&delta| {
            let m = mollify_obstacle(&psi, delta, concavity, &g0).unwrap();
            let lm = sys.apply(&m);
            (0..g0.len())
                .filter(|&k| {
                    let [a, b] = g0.point(k);
                    a.abs() < 0.35 && (0.1..=0.2).contains(&b)
                })
                .map(|k| lm[k])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

#[test]
fn mollified_semiconvex_obstacle_has_bounded_operator() {
    let g0 = build_grid(&DomainSpec::truncated_slab([-0.5, 0.5], 0.3), [201, 61], None).unwrap();
    let put = max_operator_on_mollified(|x| payoff(PayoffKind::Put, 1.0, x), payoff_concavity(&g0));
    let spread = put.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - put.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(spread < 0.05, "{put:?}");
    // a concave kink makes the same quantity blow up like 1/δ
    let tent = max_operator_on_mollified(|x| -x.abs(), 0.0);
    assert!(tent[2] > 3.0 * tent[0], "{tent:?}");
}
