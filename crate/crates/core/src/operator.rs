//! The degenerate-elliptic operator family
//!
//! ```text
//! A v = -x_d tr(a D²v) - <b, Dv> + c v
//! ```
//!
//! on subdomains of the upper half-space, its Heston instance, sampled checks
//! of the coefficient conditions, and the exponential change of dependent
//! variable `v = e^{σ x_d} u`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::discretize::DomainSpec;
use crate::error::{Error, Result};

type DiffusionFn = dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync;
type DriftFn = dyn Fn(&[f64]) -> DVector<f64> + Send + Sync;
type ReactionFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// Scalar bounds a coefficient set claims to satisfy. Any may be absent.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct DeclaredBounds {
    /// Strict ellipticity floor: `<a ξ, ξ> >= lambda0 |ξ|²`.
    pub lambda0: Option<f64>,
    /// Upper bound for `a^{dd}`.
    pub lambda_upper: Option<f64>,
    /// Positive lower bound for `b^d` on the degenerate boundary.
    pub b0: Option<f64>,
    /// Positive lower bound for `c`.
    pub c0: Option<f64>,
    /// Height of the domain.
    pub nu: Option<f64>,
    /// Quadratic growth constant for `a`, `b`.
    pub growth_k: Option<f64>,
}

/// Coefficients `a`, `b`, `c` of the operator as evaluation callbacks.
///
/// Immutable after construction and cheap to clone; the callbacks are shared.
#[derive(Clone)]
pub struct CoefficientSet {
    dim: usize,
    diffusion: Arc<DiffusionFn>,
    drift: Arc<DriftFn>,
    reaction: Arc<ReactionFn>,
    pub bounds: DeclaredBounds,
    gauge: f64,
}

impl fmt::Debug for CoefficientSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientSet")
            .field("dim", &self.dim)
            .field("bounds", &self.bounds)
            .field("gauge", &self.gauge)
            .finish_non_exhaustive()
    }
}

impl CoefficientSet {
    pub fn new<A, B, C>(dim: usize, a: A, b: B, c: C) -> Result<Self>
    where
        A: Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
        B: Fn(&[f64]) -> DVector<f64> + Send + Sync + 'static,
        C: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        if dim < 2 {
            return Err(Error::InvalidParameter(format!(
                "dimension must be at least 2, got {dim}"
            )));
        }
        Ok(Self {
            dim,
            diffusion: Arc::new(a),
            drift: Arc::new(b),
            reaction: Arc::new(c),
            bounds: DeclaredBounds::default(),
            gauge: 0.0,
        })
    }

    /// Constant coefficients.
    pub fn constant(a: DMatrix<f64>, b: DVector<f64>, c: f64) -> Result<Self> {
        let dim = b.len();
        if a.nrows() != dim || a.ncols() != dim {
            return Err(Error::ShapeMismatch {
                expected: dim,
                got: a.nrows(),
            });
        }
        Self::new(dim, move |_| a.clone(), move |_| b.clone(), move |_| c)
    }

    pub fn with_bounds(mut self, bounds: DeclaredBounds) -> Self {
        self.bounds = bounds;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn a(&self, x: &[f64]) -> DMatrix<f64> {
        (self.diffusion)(x)
    }

    pub fn b(&self, x: &[f64]) -> DVector<f64> {
        (self.drift)(x)
    }

    pub fn c(&self, x: &[f64]) -> f64 {
        (self.reaction)(x)
    }

    /// Accumulated exponent σ of the dependent-variable gauge applied so far.
    pub fn gauge(&self) -> f64 {
        self.gauge
    }
}

/// Parameters of the elliptic Heston operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HestonParams {
    pub sigma: f64,
    pub rho: f64,
    pub kappa: f64,
    pub theta: f64,
    /// Interest rate; plays the role of the zeroth-order coefficient.
    pub r: f64,
    /// Dividend yield.
    #[serde(default)]
    pub q: f64,
}

impl HestonParams {
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.sigma.is_finite() && self.sigma != 0.0) {
            bad.push(format!("sigma must be finite and nonzero (got {})", self.sigma));
        }
        if !(self.rho > -1.0 && self.rho < 1.0) {
            bad.push(format!("rho must lie in (-1, 1) (got {})", self.rho));
        }
        if !(self.kappa > 0.0) {
            bad.push(format!("kappa must be positive (got {})", self.kappa));
        }
        if !(self.theta > 0.0) {
            bad.push(format!("theta must be positive (got {})", self.theta));
        }
        if !(self.r.is_finite() && self.q.is_finite()) {
            bad.push("r and q must be finite".to_string());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(bad.join("; ")))
        }
    }
}

/// Smaller eigenvalue of `[[1, ρσ], [ρσ, σ²]]`.
///
/// The Heston diffusion matrix is half of this matrix, so the floor of
/// `<a ξ, ξ>` for the coefficient set itself is `ellipticity_floor / 2`.
pub fn ellipticity_floor(p: &HestonParams) -> Result<f64> {
    p.validate()?;
    let s2 = p.sigma * p.sigma;
    let disc = 1.0 - 2.0 * s2 + 4.0 * p.rho * p.rho * s2 + s2 * s2;
    Ok(0.5 * (1.0 + s2 - disc.sqrt()))
}

/// Heston coefficients on the half-plane `{x_2 >= 0}`:
/// `a = ½[[1, ρσ], [ρσ, σ²]]`, `b = (r - q - x_2/2, κ(θ - x_2))`, `c = r`.
pub fn heston_coefficients(p: &HestonParams) -> Result<CoefficientSet> {
    let floor = ellipticity_floor(p)?;
    let HestonParams {
        sigma,
        rho,
        kappa,
        theta,
        r,
        q,
    } = *p;
    let a = DMatrix::from_row_slice(
        2,
        2,
        &[0.5, 0.5 * rho * sigma, 0.5 * rho * sigma, 0.5 * sigma * sigma],
    );
    let growth_k = 0.25 * (1.0 + sigma * sigma) + 0.25 + 0.5 * (r - q).abs() + 0.5 * kappa * theta;
    let bounds = DeclaredBounds {
        lambda0: Some(0.5 * floor),
        lambda_upper: Some(0.5 * sigma * sigma),
        b0: Some(kappa * theta),
        c0: (r > 0.0).then_some(r),
        nu: None,
        growth_k: Some(growth_k),
    };
    let cs = CoefficientSet::new(
        2,
        move |_| a.clone(),
        move |x| DVector::from_vec(vec![r - q - 0.5 * x[1], kappa * (theta - x[1])]),
        move |_| r,
    )?;
    Ok(cs.with_bounds(bounds))
}

/// Value, gradient and Hessian of a function at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

/// `-x_d tr(a H) - <b, g> + c v` at `x`.
///
/// At `x_d = 0` the second-order term is skipped entirely, so the result does
/// not depend on the Hessian there.
pub fn apply_operator_pointwise(cs: &CoefficientSet, jet: &Jet, x: &[f64]) -> f64 {
    let d = cs.dim();
    let xd = x[d - 1];
    let b = cs.b(x);
    let mut out = -b.dot(&jet.gradient) + cs.c(x) * jet.value;
    if xd != 0.0 {
        let a = cs.a(x);
        let mut tr = 0.0;
        for i in 0..d {
            for j in 0..d {
                tr += a[(i, j)] * jet.hessian[(j, i)];
            }
        }
        out -= xd * tr;
    }
    out
}

/// Coefficients of the operator acting on `v = e^{σ x_d} u`:
/// `ã = a`, `b̃^i = b^i - 2σ x_d a^{id}`, `c̃ = c + σ b^d - σ² x_d a^{dd}`.
pub fn exponential_gauge(cs: &CoefficientSet, sigma: f64) -> Result<CoefficientSet> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "gauge exponent must be a finite nonnegative number, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(cs.clone());
    }
    let d = cs.dim();
    let base_b = cs.clone();
    let base_c = cs.clone();
    let mut out = CoefficientSet::new(
        d,
        {
            let cs = cs.clone();
            move |x| cs.a(x)
        },
        move |x| {
            let a = base_b.a(x);
            let mut b = base_b.b(x);
            let xd = x[d - 1];
            for i in 0..d {
                b[i] -= 2.0 * sigma * xd * a[(i, d - 1)];
            }
            b
        },
        move |x| {
            let xd = x[d - 1];
            let add = base_c.a(x)[(d - 1, d - 1)];
            base_c.c(x) + sigma * base_c.b(x)[d - 1] - sigma * sigma * xd * add
        },
    )?;
    out.bounds = DeclaredBounds {
        lambda0: cs.bounds.lambda0,
        lambda_upper: cs.bounds.lambda_upper,
        b0: cs.bounds.b0,
        nu: cs.bounds.nu,
        c0: None,
        growth_k: None,
    };
    out.gauge = cs.gauge + sigma;
    Ok(out)
}

/// Multiplier `e^{σ x_d}` taking data for `u` to data for the gauged unknown.
pub fn gauge_weight(sigma: f64, x: &[f64]) -> f64 {
    (sigma * x[x.len() - 1]).exp()
}

/// Identifier of a sampled coefficient condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Symmetry,
    StrictEllipticity,
    NonnegativeBoundaryDrift,
    NonnegativeReaction,
    PositiveBoundaryDrift,
    PositiveBoundaryReaction,
    BoundaryDriftLowerBound,
    ReactionLowerBound,
    DiffusionUpperBound,
    DriftLowerBoundDomain,
    FiniteHeight,
    QuadraticGrowth,
    StrongQuadraticGrowth,
}

/// Outcome of one sampled condition.
///
/// `margin` is the worst slack over the samples (negative when violated);
/// it is `None` when no sample was eligible, in which case the condition
/// holds vacuously.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionEntry {
    pub condition: Condition,
    pub holds: bool,
    pub margin: Option<f64>,
    pub witness: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct ConditionReport {
    pub entries: Vec<ConditionEntry>,
}

impl ConditionReport {
    pub fn get(&self, c: Condition) -> Option<&ConditionEntry> {
        self.entries.iter().find(|e| e.condition == c)
    }

    pub fn all_hold(&self) -> bool {
        self.entries.iter().all(|e| e.holds)
    }
}

/// Worst slack tracker. `strict` conditions require slack > 0.
struct Worst {
    condition: Condition,
    strict: bool,
    margin: Option<f64>,
    witness: Option<Vec<f64>>,
}

impl Worst {
    fn new(condition: Condition, strict: bool) -> Self {
        Self {
            condition,
            strict,
            margin: None,
            witness: None,
        }
    }

    fn push(&mut self, slack: f64, x: &[f64]) {
        if self.margin.is_none_or(|m| slack < m) {
            self.margin = Some(slack);
            self.witness = Some(x.to_vec());
        }
    }

    fn finish(self) -> ConditionEntry {
        let holds = match self.margin {
            None => true,
            Some(m) if self.strict => m > 0.0,
            Some(m) => m >= 0.0,
        };
        ConditionEntry {
            condition: self.condition,
            holds,
            margin: self.margin,
            witness: self.witness,
        }
    }
}

fn min_eigenvalue(a: &DMatrix<f64>) -> f64 {
    let sym = (a + a.transpose()) * 0.5;
    sym.symmetric_eigenvalues().min()
}

/// Checks the coefficient conditions at the given samples.
///
/// Boundary conditions are checked only at samples with `x_d = 0`. Every
/// declared bound yields an entry; the sign conditions are always reported.
pub fn verify_conditions(
    cs: &CoefficientSet,
    dom: &DomainSpec,
    samples: &[Vec<f64>],
) -> Result<ConditionReport> {
    if samples.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    let d = cs.dim();
    for x in samples {
        if x.len() != d {
            return Err(Error::ShapeMismatch {
                expected: d,
                got: x.len(),
            });
        }
        if !dom.contains(x) {
            return Err(Error::InvalidParameter(format!(
                "sample {x:?} lies outside the closed domain"
            )));
        }
    }
    let bounds = cs.bounds;

    let mut symmetry = Worst::new(Condition::Symmetry, false);
    let mut nonneg_bd = Worst::new(Condition::NonnegativeBoundaryDrift, false);
    let mut nonneg_c = Worst::new(Condition::NonnegativeReaction, false);
    let mut pos_bd = Worst::new(Condition::PositiveBoundaryDrift, true);
    let mut pos_c = Worst::new(Condition::PositiveBoundaryReaction, true);
    let mut ellip = bounds
        .lambda0
        .map(|_| Worst::new(Condition::StrictEllipticity, false));
    let mut bd_lower = bounds
        .b0
        .map(|_| Worst::new(Condition::BoundaryDriftLowerBound, false));
    let mut bd_lower_dom = bounds
        .b0
        .map(|_| Worst::new(Condition::DriftLowerBoundDomain, false));
    let mut c_lower = bounds
        .c0
        .map(|_| Worst::new(Condition::ReactionLowerBound, false));
    let mut add_upper = bounds
        .lambda_upper
        .map(|_| Worst::new(Condition::DiffusionUpperBound, false));
    let mut height = bounds.nu.map(|_| Worst::new(Condition::FiniteHeight, false));
    let mut growth = bounds
        .growth_k
        .map(|_| Worst::new(Condition::QuadraticGrowth, false));

    for x in samples {
        let a = cs.a(x);
        let b = cs.b(x);
        let c = cs.c(x);
        let xd = x[d - 1];
        let asym = (&a - a.transpose()).amax();
        symmetry.push(1e-14 - asym, x);
        nonneg_c.push(c, x);
        if let (Some(w), Some(l0)) = (ellip.as_mut(), bounds.lambda0) {
            // round-off allowance on the eigen-solve
            w.push(min_eigenvalue(&a) - l0 + 1e-12, x);
        }
        if let (Some(w), Some(c0)) = (c_lower.as_mut(), bounds.c0) {
            w.push(c - c0, x);
        }
        if let (Some(w), Some(lu)) = (add_upper.as_mut(), bounds.lambda_upper) {
            w.push(lu - a[(d - 1, d - 1)], x);
        }
        if let (Some(w), Some(b0)) = (bd_lower_dom.as_mut(), bounds.b0) {
            w.push(b[d - 1] - b0, x);
        }
        if let (Some(w), Some(nu)) = (height.as_mut(), bounds.nu) {
            w.push(nu - xd, x);
        }
        if let (Some(w), Some(k)) = (growth.as_mut(), bounds.growth_k) {
            let tr: f64 = (0..d).map(|i| xd * a[(i, i)]).sum();
            let bx: f64 = (0..d).map(|i| b[i] * x[i]).sum();
            let norm2: f64 = x.iter().map(|v| v * v).sum();
            w.push(k * (1.0 + norm2) - (tr + bx), x);
        }
        if xd == 0.0 {
            nonneg_bd.push(b[d - 1], x);
            pos_bd.push(b[d - 1], x);
            pos_c.push(c, x);
            if let (Some(w), Some(b0)) = (bd_lower.as_mut(), bounds.b0) {
                w.push(b[d - 1] - b0, x);
            }
        }
    }

    let mut entries = vec![
        symmetry.finish(),
        nonneg_bd.finish(),
        nonneg_c.finish(),
        pos_bd.finish(),
        pos_c.finish(),
    ];
    entries.extend(
        [ellip, bd_lower, c_lower, add_upper, bd_lower_dom, height, growth]
            .into_iter()
            .flatten()
            .map(Worst::finish),
    );
    if let Some(nu) = bounds.nu {
        // the domain itself must fit under the declared height
        let top = dom.height();
        let e = entries
            .iter_mut()
            .find(|e| e.condition == Condition::FiniteHeight)
            .expect("height entry present when nu is declared");
        let slack = nu - top;
        if e.margin.is_none_or(|m| slack < m) {
            e.margin = Some(slack);
            e.witness = None;
        }
        e.holds = e.margin.is_none_or(|m| m >= 0.0);
    }
    if let (Some(c0), Some(k)) = (bounds.c0, bounds.growth_k) {
        let slack = c0 - 2.0 * k;
        entries.push(ConditionEntry {
            condition: Condition::StrongQuadraticGrowth,
            holds: slack >= 0.0,
            margin: Some(slack),
            witness: None,
        });
    }
    Ok(ConditionReport { entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::{DomainKind, DomainSpec};

    fn params() -> HestonParams {
        HestonParams {
            sigma: 0.2,
            rho: 0.0,
            kappa: 2.0,
            theta: 0.3,
            r: 0.05,
            q: 0.0,
        }
    }

    fn slab() -> DomainSpec {
        DomainSpec::truncated_slab([-1.0, 1.0], 1.0)
    }

    fn jet(value: f64, g: [f64; 2], h: [f64; 4]) -> Jet {
        Jet {
            value,
            gradient: DVector::from_row_slice(&g),
            hessian: DMatrix::from_row_slice(2, 2, &h),
        }
    }

    #[test]
    fn heston_coefficients_by_hand() {
        let cs = heston_coefficients(&params()).unwrap();
        let a = cs.a(&[0.3, 0.0]);
        assert!((a - DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.02])).amax() < 1e-16);
        let b = cs.b(&[0.0, 0.0]);
        assert!((b[0] - 0.05).abs() < 1e-15);
        assert!((b[1] - 0.6).abs() < 1e-15);
        assert_eq!(cs.c(&[1.0, 1.0]), 0.05);
        assert!((cs.bounds.b0.unwrap() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn invalid_heston_parameters_rejected() {
        for bad in [
            HestonParams { sigma: 0.0, ..params() },
            HestonParams { rho: 1.0, ..params() },
            HestonParams { kappa: 0.0, ..params() },
            HestonParams { theta: -0.1, ..params() },
        ] {
            assert!(matches!(
                heston_coefficients(&bad),
                Err(Error::InvalidParameter(_))
            ));
        }
    }

    #[test]
    fn ellipticity_floor_values() {
        assert!((ellipticity_floor(&params()).unwrap() - 0.04).abs() < 1e-15);
        let p = HestonParams {
            sigma: 1.0,
            rho: 0.5,
            ..params()
        };
        // eigenvalues of [[1, .5], [.5, 1]] are 0.5 and 1.5
        assert!((ellipticity_floor(&p).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ellipticity_floor_matches_eigensolver() {
        for &(s, r) in &[(0.2, 0.0), (0.5, -0.3), (1.3, 0.9), (0.05, -0.99), (2.0, 0.4)] {
            let p = HestonParams {
                sigma: s,
                rho: r,
                ..params()
            };
            let m = DMatrix::from_row_slice(2, 2, &[1.0, r * s, r * s, s * s]);
            // closed-form 2x2 eigenvalue as oracle
            let tr = 1.0 + s * s;
            let det = s * s - r * r * s * s;
            let oracle = 0.5 * (tr - (tr * tr - 4.0 * det).sqrt());
            let eig = min_eigenvalue(&m);
            let floor = ellipticity_floor(&p).unwrap();
            assert!((floor - oracle).abs() <= 1e-14, "{s} {r}");
            assert!((floor - eig).abs() <= 1e-14, "{s} {r}");
        }
    }

    #[test]
    fn heston_conditions() {
        let cs = heston_coefficients(&params()).unwrap();
        let dom = slab();
        let mut samples = Vec::new();
        for i in 0..=10 {
            for j in 0..=10 {
                samples.push(vec![-1.0 + 0.2 * i as f64, 0.1 * j as f64]);
            }
        }
        let rep = verify_conditions(&cs, &dom, &samples).unwrap();
        assert!(rep.get(Condition::NonnegativeReaction).unwrap().holds);
        let bd = rep.get(Condition::BoundaryDriftLowerBound).unwrap();
        assert!(bd.holds);
        assert!(bd.margin.unwrap().abs() < 1e-15);
        let pos = rep.get(Condition::PositiveBoundaryDrift).unwrap();
        assert!((pos.margin.unwrap() - 0.6).abs() < 1e-15);
        assert!(rep.get(Condition::StrictEllipticity).unwrap().holds);
        assert!(rep.get(Condition::QuadraticGrowth).unwrap().holds);
        assert!(rep.get(Condition::Symmetry).unwrap().holds);
        // b^d = κ(θ - x_2) drops below κθ inside the domain
        assert!(!rep.get(Condition::DriftLowerBoundDomain).unwrap().holds);
    }

    #[test]
    fn every_declared_bound_reported() {
        let cs = CoefficientSet::constant(
            DMatrix::identity(2, 2),
            DVector::from_row_slice(&[0.0, 1.0]),
            2.0,
        )
        .unwrap()
        .with_bounds(DeclaredBounds {
            lambda0: Some(1.0),
            lambda_upper: Some(1.0),
            b0: Some(1.0),
            c0: Some(2.0),
            nu: Some(1.0),
            growth_k: Some(1.0),
        });
        let rep = verify_conditions(&cs, &slab(), &[vec![0.0, 0.0], vec![0.5, 0.5]]).unwrap();
        for c in [
            Condition::StrictEllipticity,
            Condition::BoundaryDriftLowerBound,
            Condition::ReactionLowerBound,
            Condition::DiffusionUpperBound,
            Condition::DriftLowerBoundDomain,
            Condition::FiniteHeight,
            Condition::QuadraticGrowth,
            Condition::StrongQuadraticGrowth,
        ] {
            assert!(rep.get(c).is_some(), "{c:?}");
        }
        // c0 = 2, K = 1
        assert!(rep.get(Condition::StrongQuadraticGrowth).unwrap().holds);
    }

    #[test]
    fn empty_samples_rejected() {
        let cs = heston_coefficients(&params()).unwrap();
        assert_eq!(
            verify_conditions(&cs, &slab(), &[]).unwrap_err(),
            Error::EmptySampleSet
        );
    }

    #[test]
    fn negative_rate_is_flagged() {
        let p = HestonParams { r: -0.01, ..params() };
        let cs = heston_coefficients(&p).unwrap();
        let rep = verify_conditions(&cs, &slab(), &[vec![0.0, 0.5]]).unwrap();
        assert!(!rep.get(Condition::NonnegativeReaction).unwrap().holds);
    }

    #[test]
    fn operator_constant_function() {
        let cs = heston_coefficients(&params()).unwrap();
        for x in [[0.0, 0.0], [0.4, 0.7], [-1.0, 2.0]] {
            let v = apply_operator_pointwise(&cs, &jet(1.0, [0.0; 2], [0.0; 4]), &x);
            assert!((v - 0.05).abs() < 1e-15);
        }
    }

    #[test]
    fn operator_ignores_hessian_on_boundary() {
        let cs = heston_coefficients(&HestonParams {
            rho: -0.4,
            ..params()
        })
        .unwrap();
        let x = [0.3, 0.0];
        let base = apply_operator_pointwise(&cs, &jet(0.7, [0.2, -1.0], [0.0; 4]), &x);
        let wild = apply_operator_pointwise(
            &cs,
            &jet(0.7, [0.2, -1.0], [f64::NAN, 1e300, -3.0, f64::INFINITY]),
            &x,
        );
        assert_eq!(base, wild);
        let b = cs.b(&x);
        assert_eq!(base, -(b[0] * 0.2 - b[1]) + 0.05 * 0.7);
    }

    #[test]
    fn operator_on_bilinear_by_hand() {
        // u = x1 x2 at (0, 1): u = 0, Du = (1, 0), D²u = [[0,1],[1,0]]
        let cs = heston_coefficients(&params()).unwrap();
        let v = apply_operator_pointwise(&cs, &jet(0.0, [1.0, 0.0], [0.0, 1.0, 1.0, 0.0]), &[0.0, 1.0]);
        // ρ = 0 kills the mixed term; -b¹·1 = -(0.05 - 0.5) = 0.45
        assert!((v - 0.45).abs() < 1e-15);
        let p = HestonParams { rho: 0.5, ..params() };
        let cs = heston_coefficients(&p).unwrap();
        let v = apply_operator_pointwise(&cs, &jet(0.0, [1.0, 0.0], [0.0, 1.0, 1.0, 0.0]), &[0.0, 1.0]);
        // -x2·2·a12 = -ρσ = -0.1
        assert!((v - (0.45 - 0.1)).abs() < 1e-15);
    }

    #[test]
    fn zero_gauge_is_identity() {
        let cs = heston_coefficients(&params()).unwrap();
        let g = exponential_gauge(&cs, 0.0).unwrap();
        for x in [[0.1, 0.2], [0.0, 0.0], [-0.5, 0.9]] {
            assert_eq!(g.a(&x), cs.a(&x));
            assert_eq!(g.b(&x), cs.b(&x));
            assert_eq!(g.c(&x), cs.c(&x));
        }
        assert!(exponential_gauge(&cs, -1.0).is_err());
    }

    #[test]
    fn gauge_round_trip_on_fields() {
        let sigma = 1.7;
        for &(x1, x2, v) in &[(0.0, 0.3, 2.5), (1.0, 0.9, -1e-3), (-2.0, 0.0, 7.0)] {
            let x = [x1, x2];
            let back = v * gauge_weight(sigma, &x) * gauge_weight(-sigma, &x);
            assert!((back - v).abs() <= 1e-15 * v.abs().max(1.0));
        }
    }

    #[test]
    fn gauge_lifts_reaction_on_short_slab() {
        // On a slab of height ν < θ: b^d >= κ(θ - ν) =: b0 and x_d a^{dd} <= νσ²/2 =: Λ.
        let p = params();
        let nu = 0.2;
        let b0 = p.kappa * (p.theta - nu);
        let lam = nu * 0.5 * p.sigma * p.sigma;
        let cs = heston_coefficients(&p).unwrap();
        let g = exponential_gauge(&cs, b0 / (2.0 * lam)).unwrap();
        for i in 0..=20 {
            for j in 0..=20 {
                let x = [-1.0 + 0.1 * i as f64, nu * j as f64 / 20.0];
                assert!(g.c(&x) >= b0 * b0 / (4.0 * lam) - 1e-12, "{x:?}");
            }
        }
    }

    #[test]
    fn gauge_identity_by_finite_differences() {
        // Ã(e^{σx_d}u) = e^{σx_d} A u for u = sin(x1) cos(x2) + x2²
        let cs = heston_coefficients(&HestonParams {
            rho: -0.6,
            sigma: 0.7,
            ..params()
        })
        .unwrap();
        let sigma = 0.9;
        let g = exponential_gauge(&cs, sigma).unwrap();
        let u = |x: &[f64]| x[0].sin() * x[1].cos() + x[1] * x[1];
        let v = |x: &[f64]| (sigma * x[1]).exp() * u(x);
        let fd_jet = |f: &dyn Fn(&[f64]) -> f64, x: &[f64]| {
            let h = 1e-4;
            let e = |i: usize, s: f64| {
                let mut y = x.to_vec();
                y[i] += s;
                y
            };
            let mut grad = DVector::zeros(2);
            let mut hess = DMatrix::zeros(2, 2);
            for i in 0..2 {
                grad[i] = (f(&e(i, h)) - f(&e(i, -h))) / (2.0 * h);
                hess[(i, i)] = (f(&e(i, h)) - 2.0 * f(x) + f(&e(i, -h))) / (h * h);
            }
            let pp = |s0: f64, s1: f64| f(&[x[0] + s0, x[1] + s1]);
            let m = (pp(h, h) - pp(h, -h) - pp(-h, h) + pp(-h, -h)) / (4.0 * h * h);
            hess[(0, 1)] = m;
            hess[(1, 0)] = m;
            Jet {
                value: f(x),
                gradient: grad,
                hessian: hess,
            }
        };
        for x in [[0.3, 0.4], [-1.1, 0.8], [0.7, 0.05]] {
            let lhs = apply_operator_pointwise(&g, &fd_jet(&v, &x), &x);
            let rhs = (sigma * x[1]).exp() * apply_operator_pointwise(&cs, &fd_jet(&u, &x), &x);
            assert!((lhs - rhs).abs() <= 1e-6 * rhs.abs().max(1.0), "{x:?}: {lhs} {rhs}");
        }
    }

    #[test]
    fn domain_kind_roundtrip_smoke() {
        let d = DomainSpec::new(
            DomainKind::Box,
            [[0.0, 1.0], [0.0, 1.0]],
            crate::discretize::FaceSet::all(),
        )
        .unwrap();
        assert!(d.contains(&[0.5, 0.5]));
    }
}
