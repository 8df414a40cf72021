//! Independent oracles and boundary diagnostics. Nothing here reuses the
//! assembly stencils: derivatives are taken with their own one-sided or
//! central formulas, and the complementarity oracle enumerates active sets.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::discretize::{Field, Grid, StencilSystem};
use crate::error::{Error, Result};
use crate::operator::CoefficientSet;

/// Enumeration limit for [`brute_force_lcp`].
pub const MAX_BRUTE_FORCE_UNKNOWNS: usize = 12;

/// Feasibility slack of [`brute_force_lcp`], scaled by the size of each row's terms.
pub const FEASIBILITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BruteForceSolution {
    pub u: Field,
    /// Free rows held at the obstacle.
    pub active: Vec<bool>,
    pub configurations_tried: usize,
}

/// Tries all `2^n` active sets of the free rows and returns the first one
/// whose solution satisfies `u ≥ ψ` off the set and `L_h u ≥ f` on it.
pub fn brute_force_lcp(sys: &StencilSystem, f: &Field, g: &Field, psi: &Field) -> Result<BruteForceSolution> {
    let n = sys.len();
    for v in [f, g, psi] {
        if v.len() != n {
            return Err(Error::ShapeMismatch {
                expected: n,
                got: v.len(),
            });
        }
    }
    let free: Vec<usize> = (0..n).filter(|&r| !sys.is_fixed(r)).collect();
    if free.len() > MAX_BRUTE_FORCE_UNKNOWNS {
        return Err(Error::TooManyUnknowns(free.len()));
    }
    let mut base = DMatrix::zeros(n, n);
    for r in 0..n {
        let (cols, vals) = sys.row(r);
        for (&c, &v) in cols.iter().zip(vals) {
            base[(r, c)] += v;
        }
    }
    for mask in 0u32..(1 << free.len()) {
        let active: Vec<bool> = {
            let mut a = vec![false; n];
            for (bit, &r) in free.iter().enumerate() {
                a[r] = mask & (1 << bit) != 0;
            }
            a
        };
        let mut m = base.clone();
        let mut rhs = DVector::zeros(n);
        for r in 0..n {
            if sys.is_fixed(r) || active[r] {
                m.row_mut(r).fill(0.0);
                m[(r, r)] = 1.0;
                rhs[r] = if sys.is_fixed(r) { g[r] } else { psi[r] };
            } else {
                rhs[r] = f[r];
            }
        }
        let Some(u) = m.lu().solve(&rhs) else {
            continue;
        };
        let feasible = free.iter().all(|&r| {
            let (cols, vals) = sys.row(r);
            let scale = 1.0 + cols.iter().zip(vals).map(|(&c, &v)| (v * u[c]).abs()).sum::<f64>() + f[r].abs();
            let slack = FEASIBILITY_TOL * scale;
            let res: f64 = cols.iter().zip(vals).map(|(&c, &v)| v * u[c]).sum::<f64>() - f[r];
            if active[r] {
                res >= -slack
            } else {
                u[r] - psi[r] >= -FEASIBILITY_TOL * (1.0 + psi[r].abs().min(u[r].abs()))
            }
        });
        if feasible {
            let mut u = Field(u.iter().copied().collect());
            for r in 0..n {
                if active[r] {
                    u[r] = psi[r];
                }
            }
            return Ok(BruteForceSolution {
                u,
                active,
                configurations_tried: mask as usize + 1,
            });
        }
    }
    Err(Error::NoFeasibleConfiguration)
}

/// Free rows with `u - ψ ≤ tol`.
pub fn active_set(sys: &StencilSystem, u: &Field, psi: &Field, tol: f64) -> Vec<bool> {
    (0..sys.len()).map(|r| !sys.is_fixed(r) && u[r] - psi[r] <= tol).collect()
}

/// Oracle against candidate, `pass ⇔ max_deviation ≤ tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub case_id: String,
    pub oracle: Vec<f64>,
    pub candidate: Vec<f64>,
    pub max_deviation: f64,
    pub pass: bool,
    pub tolerance: f64,
}

impl OracleReport {
    pub fn compare(case_id: impl Into<String>, oracle: &[f64], candidate: &[f64], tolerance: f64) -> Self {
        let max_deviation = if oracle.len() != candidate.len() {
            f64::INFINITY
        } else {
            oracle
                .iter()
                .zip(candidate)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        };
        Self {
            case_id: case_id.into(),
            oracle: oracle.to_vec(),
            candidate: candidate.to_vec(),
            max_deviation,
            pass: max_deviation <= tolerance,
            tolerance,
        }
    }

    /// A single scalar held against a bound.
    pub fn scalar(case_id: impl Into<String>, oracle: f64, candidate: f64, tolerance: f64) -> Self {
        Self::compare(case_id, &[oracle], &[candidate], tolerance)
    }

    /// One-sided: `candidate ≥ floor`. The deviation is the shortfall.
    pub fn at_least(case_id: impl Into<String>, floor: f64, candidate: f64) -> Self {
        let shortfall = if candidate.is_nan() { f64::INFINITY } else { (floor - candidate).max(0.0) };
        Self {
            case_id: case_id.into(),
            oracle: vec![floor],
            candidate: vec![candidate],
            max_deviation: shortfall,
            pass: shortfall <= 0.0,
            tolerance: 0.0,
        }
    }

    /// One-sided: `candidate ≤ ceiling`.
    pub fn at_most(case_id: impl Into<String>, ceiling: f64, candidate: f64) -> Self {
        let excess = if candidate.is_nan() { f64::INFINITY } else { (candidate - ceiling).max(0.0) };
        Self {
            case_id: case_id.into(),
            oracle: vec![ceiling],
            candidate: vec![candidate],
            max_deviation: excess,
            pass: excess <= 0.0,
            tolerance: 0.0,
        }
    }
}

/// `log(e_coarse / e_fine) / log(h_coarse / h_fine)` for consecutive levels.
pub fn refinement_rates(values: &[f64], spacings: &[f64]) -> Vec<f64> {
    values
        .windows(2)
        .zip(spacings.windows(2))
        .map(|(v, h)| (v[0] / v[1]).ln() / (h[0] / h[1]).ln())
        .collect()
}

/// Three-point second derivative at the middle of `x0 < x1 < x2`.
fn second_difference(x: [f64; 3], u: [f64; 3]) -> f64 {
    let (hl, hr) = (x[1] - x[0], x[2] - x[1]);
    2.0 * (u[0] / (hl * (hl + hr)) - u[1] / (hl * hr) + u[2] / (hr * (hl + hr)))
}

/// Three-point first derivative at the middle of `x0 < x1 < x2`.
fn central_first(x: [f64; 3], u: [f64; 3]) -> f64 {
    let (hl, hr) = (x[1] - x[0], x[2] - x[1]);
    (-hr / (hl * (hl + hr))) * u[0] + ((hr - hl) / (hl * hr)) * u[1] + (hl / (hr * (hl + hr))) * u[2]
}

/// Three-point first derivative at the end `x0` of `x0 < x1 < x2`.
fn one_sided_first(x: [f64; 3], u: [f64; 3]) -> f64 {
    let (h1, h2) = (x[1] - x[0], x[2] - x[1]);
    -(2.0 * h1 + h2) / (h1 * (h1 + h2)) * u[0] + (h1 + h2) / (h1 * h2) * u[1] - h1 / (h2 * (h1 + h2)) * u[2]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityLevel {
    pub nodes: [usize; 2],
    pub spacing: f64,
    /// Height of the first layer above the degenerate face.
    pub layer_height: f64,
    /// `max x_2 · max(|D²_11 u|, |D²_12 u|, |D²_22 u|)` over the first layer.
    pub max_scaled_hessian: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityReport {
    pub levels: Vec<RegularityLevel>,
    pub rates: Vec<f64>,
    /// Strictly decreasing from each level to the next.
    pub decreasing: bool,
}

fn first_layer_scaled_hessian(u: &Field, g: &Grid) -> Result<f64> {
    let (nx, ny) = (g.nx(), g.ny());
    if ny < 4 {
        return Err(Error::TooFewLayers(ny));
    }
    if u.len() != g.len() {
        return Err(Error::ShapeMismatch {
            expected: g.len(),
            got: u.len(),
        });
    }
    let at = |i: usize, j: usize| u[g.index(i, j)];
    let y = [g.x2[0], g.x2[1], g.x2[2]];
    let mut worst = 0.0f64;
    for i in 1..nx - 1 {
        let x = [g.x1[i - 1], g.x1[i], g.x1[i + 1]];
        let uxx = second_difference(x, [at(i - 1, 1), at(i, 1), at(i + 1, 1)]);
        let uyy = second_difference(y, [at(i, 0), at(i, 1), at(i, 2)]);
        let dy = |ii: usize| central_first(y, [at(ii, 0), at(ii, 1), at(ii, 2)]);
        let uxy = central_first(x, [dy(i - 1), dy(i), dy(i + 1)]);
        worst = worst.max(y[1] * uxx.abs().max(uxy.abs()).max(uyy.abs()));
    }
    Ok(worst)
}

/// `x_2 · D²_h u` on the first layer above the degenerate face, one entry
/// per refinement level, with observed decay rates.
pub fn boundary_regularity_check(levels: &[(&Field, &Grid)]) -> Result<RegularityReport> {
    let mut out = Vec::with_capacity(levels.len());
    for &(u, g) in levels {
        out.push(RegularityLevel {
            nodes: [g.nx(), g.ny()],
            spacing: g.max_spacing(),
            layer_height: g.x2[1] - g.x2[0],
            max_scaled_hessian: first_layer_scaled_hessian(u, g)?,
        });
    }
    let vals: Vec<f64> = out.iter().map(|l| l.max_scaled_hessian).collect();
    let hs: Vec<f64> = out.iter().map(|l| l.spacing).collect();
    Ok(RegularityReport {
        rates: refinement_rates(&vals, &hs),
        decreasing: vals.windows(2).all(|w| w[1] < w[0]),
        levels: out,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObliqueReport {
    /// `max |-⟨b, D_h u⟩ + c u - f|` over bottom nodes off the side faces.
    pub value: f64,
    pub node: Option<usize>,
    pub spacing: f64,
}

/// Residual of the first-order condition the equation implies on the
/// degenerate face `x_2 = 0`, whatever data the solve imposed there, with a three-point one-sided normal derivative and a
/// central tangential one.
pub fn oblique_residual_check(u: &Field, f: &Field, cs: &CoefficientSet, g: &Grid) -> Result<ObliqueReport> {
    for v in [u, f] {
        if v.len() != g.len() {
            return Err(Error::ShapeMismatch {
                expected: g.len(),
                got: v.len(),
            });
        }
    }
    if g.ny() < 3 {
        return Err(Error::TooFewLayers(g.ny()));
    }
    let at = |i: usize, j: usize| u[g.index(i, j)];
    let y = [g.x2[0], g.x2[1], g.x2[2]];
    if g.x2[0] != 0.0 {
        return Err(Error::InvalidParameter("grid does not reach the face x_2 = 0".into()));
    }
    let mut value = 0.0f64;
    let mut node = None;
    for i in 1..g.nx() - 1 {
        let k = g.index(i, 0);
        let x = [g.x1[i - 1], g.x1[i], g.x1[i + 1]];
        let ux = central_first(x, [at(i - 1, 0), at(i, 0), at(i + 1, 0)]);
        let uy = one_sided_first(y, [at(i, 0), at(i, 1), at(i, 2)]);
        let p = g.point(k);
        let b = cs.b(&p);
        let r = (-b[0] * ux - b[1] * uy + cs.c(&p) * u[k] - f[k]).abs();
        if r > value || node.is_none() {
            value = value.max(r);
            node = Some(k);
        }
    }
    Ok(ObliqueReport {
        value,
        node,
        spacing: g.max_spacing(),
    })
}

/// `|-b¹ u_{x_1} + c u - f|` at the bottom-left corner node, with a
/// three-point one-sided derivative along the degenerate face. Diagnostic only.
pub fn corner_compatibility_probe(cs: &CoefficientSet, u: &Field, f: &Field, g: &Grid) -> Result<f64> {
    for v in [u, f] {
        if v.len() != g.len() {
            return Err(Error::ShapeMismatch {
                expected: g.len(),
                got: v.len(),
            });
        }
    }
    let k = g.index(0, 0);
    if g.x2[0] != 0.0 {
        return Err(Error::InvalidParameter("grid does not reach the face x_2 = 0".into()));
    }
    let x = [g.x1[0], g.x1[1], g.x1[2]];
    let ux = one_sided_first(x, [u[k], u[g.index(1, 0)], u[g.index(2, 0)]]);
    let p = g.point(k);
    Ok((-cs.b(&p)[0] * ux + cs.c(&p) * u[k] - f[k]).abs())
}
