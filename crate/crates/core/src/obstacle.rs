//! Discrete obstacle problems `min(L_h u - f, u - ψ) = 0` with Dirichlet
//! data on fixed rows: payoffs, obstacle mollification, projected SOR,
//! penalization and complementarity diagnostics.

use serde::{Deserialize, Serialize};

use crate::discretize::{Field, Grid, StencilSystem};
use crate::error::{Error, Result};
use crate::linalg::{self, BandLu, SparseRows};

#[derive(Debug, Clone)]
pub struct ObstacleProblem {
    pub sys: StencilSystem,
    pub f: Field,
    pub g: Field,
    pub psi: Field,
}

impl ObstacleProblem {
    /// Fails with [`Error::Compatibility`] when `ψ > g` at a fixed row.
    pub fn new(sys: StencilSystem, f: Field, g: Field, psi: Field) -> Result<Self> {
        let n = sys.len();
        for v in [&f, &g, &psi] {
            if v.len() != n {
                return Err(Error::ShapeMismatch {
                    expected: n,
                    got: v.len(),
                });
            }
        }
        if let Some(r) = first_incompatible(&sys, &g, &psi) {
            return Err(Error::Compatibility {
                node: r,
                psi: psi[r],
                g: g[r],
            });
        }
        Ok(Self { sys, f, g, psi })
    }

    pub fn rhs(&self) -> Vec<f64> {
        self.sys.rhs(&self.f, &self.g)
    }

    /// Rows carrying the obstacle constraint.
    pub fn free_rows(&self) -> Vec<bool> {
        (0..self.sys.len()).map(|r| !self.sys.is_fixed(r)).collect()
    }

    /// Same data with the obstacle pushed out of reach.
    pub fn unconstrained(&self) -> Self {
        Self {
            psi: Field::constant(self.sys.len(), f64::NEG_INFINITY),
            ..self.clone()
        }
    }
}

/// First fixed row with `ψ > g`.
pub fn first_incompatible(sys: &StencilSystem, g: &[f64], psi: &[f64]) -> Option<usize> {
    (0..sys.len()).find(|&r| sys.is_fixed(r) && psi[r] > g[r])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayoffKind {
    Put,
    Call,
}

/// `(K - e^{x1})⁺` or `(e^{x1} - K)⁺`.
pub fn payoff(kind: PayoffKind, strike: f64, x1: f64) -> f64 {
    debug_assert!(strike > 0.0);
    match kind {
        PayoffKind::Put => (strike - x1.exp()).max(0.0),
        PayoffKind::Call => (x1.exp() - strike).max(0.0),
    }
}

/// Semiconvexity constant of the put and call payoffs over the grid: `max e^{x1}`.
pub fn payoff_concavity(grid: &Grid) -> f64 {
    grid.x1.iter().fold(0.0f64, |m, &x| m.max(x.exp()))
}

fn bump(t2: f64) -> f64 {
    if t2 >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - t2)).exp()
    }
}

/// Width of the dual cell around each coordinate.
fn dual_widths(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|i| {
            let lo = if i == 0 { v[0] } else { 0.5 * (v[i - 1] + v[i]) };
            let hi = if i + 1 == n { v[n - 1] } else { 0.5 * (v[i] + v[i + 1]) };
            hi - lo
        })
        .collect()
}

/// `J_δ(ψ + ½C|x|²) - ½C|x|²` with a radial bump kernel of radius `delta`.
///
/// The kernel is normalized numerically over the nodes it reaches, so near
/// the edge of the grid it becomes one-sided.
pub fn mollify_obstacle(psi: &Field, delta: f64, concavity: f64, grid: &Grid) -> Result<Field> {
    if psi.len() != grid.len() {
        return Err(Error::ShapeMismatch {
            expected: grid.len(),
            got: psi.len(),
        });
    }
    if !(concavity >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "concavity constant must be nonnegative, got {concavity}"
        )));
    }
    let spacing = grid.max_spacing();
    if !(delta > spacing) {
        return Err(Error::KernelUnresolved { delta, spacing });
    }
    let half_c = 0.5 * concavity;
    let lifted: Vec<f64> = (0..grid.len())
        .map(|k| {
            let [a, b] = grid.point(k);
            psi[k] + half_c * (a * a + b * b)
        })
        .collect();
    let wx = dual_widths(&grid.x1);
    let wy = dual_widths(&grid.x2);
    let window = |v: &[f64], c: f64| {
        let lo = v.partition_point(|&t| t <= c - delta);
        let hi = v.partition_point(|&t| t < c + delta);
        lo..hi
    };
    let out = (0..grid.len())
        .map(|k| {
            let (i0, j0) = grid.ij(k);
            let (cx, cy) = (grid.x1[i0], grid.x2[j0]);
            let mut num = 0.0;
            let mut den = 0.0;
            for j in window(&grid.x2, cy) {
                let dy = (grid.x2[j] - cy) / delta;
                for i in window(&grid.x1, cx) {
                    let dx = (grid.x1[i] - cx) / delta;
                    let w = bump(dx * dx + dy * dy) * wx[i] * wy[j];
                    num += w * lifted[grid.index(i, j)];
                    den += w;
                }
            }
            num / den - half_c * (cx * cx + cy * cy)
        })
        .collect();
    Ok(Field(out))
}

/// Result of an obstacle solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObstacleSolution {
    pub u: Field,
    pub iterations: usize,
    pub final_residual: f64,
}

/// Projected SOR, lexicographic order, stopping once the complementarity
/// measure is at most `tol`.
pub fn solve_lcp_psor(p: &ObstacleProblem, omega: f64, tol: f64, max_iter: usize) -> Result<ObstacleSolution> {
    if !(omega > 0.0 && omega < 2.0) {
        return Err(Error::InvalidParameter(format!(
            "relaxation factor must lie in (0, 2), got {omega}"
        )));
    }
    if let Some(r) = first_incompatible(&p.sys, &p.g, &p.psi) {
        return Err(Error::Compatibility {
            node: r,
            psi: p.psi[r],
            g: p.g[r],
        });
    }
    let n = p.sys.len();
    let mut u: Vec<f64> = (0..n)
        .map(|r| if p.sys.is_fixed(r) { p.g[r] } else { p.psi[r].max(0.0) })
        .collect();
    let mut history = Vec::new();
    for it in 1..=max_iter {
        for r in 0..n {
            if p.sys.is_fixed(r) {
                continue;
            }
            let (cols, vals) = p.sys.row(r);
            let mut s = p.f[r];
            for (&c, &v) in cols.iter().zip(vals).skip(1) {
                s -= v * u[c];
            }
            let next = u[r] + omega * (s / vals[0] - u[r]);
            u[r] = next.max(p.psi[r]);
        }
        if it % 10 == 0 || it == max_iter {
            let field = Field(u.clone());
            let res = complementarity_residual(p, &field)?;
            history.push(res);
            if res <= tol {
                return Ok(ObstacleSolution {
                    u: field,
                    iterations: it,
                    final_residual: res,
                });
            }
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        residual: *history.last().unwrap_or(&f64::NAN),
        history,
    })
}

/// Exact solve by policy iteration on active sets; finite for M-matrices.
pub fn solve_lcp_policy(p: &ObstacleProblem, max_iter: usize) -> Result<ObstacleSolution> {
    let a = SparseRows::from_system(&p.sys);
    let free = p.free_rows();
    let (u, it) = linalg::lcp_policy_iteration(&a, &p.rhs(), &p.psi, &free, max_iter)?;
    let u = Field(u);
    let res = complementarity_residual(p, &u)?;
    Ok(ObstacleSolution {
        u,
        iterations: it,
        final_residual: res,
    })
}

/// Smoothed penalty `β_ε(t) = (t - √(t² + ε²)) / (2ε)`, a smoothing of `min(t, 0)/ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltySpec {
    pub epsilon: f64,
}

impl PenaltySpec {
    pub fn beta(&self, t: f64) -> f64 {
        let e = self.epsilon;
        (t - t.hypot(e)) / (2.0 * e)
    }

    pub fn dbeta(&self, t: f64) -> f64 {
        let e = self.epsilon;
        (1.0 - t / t.hypot(e)) / (2.0 * e)
    }
}

pub const DEFAULT_EPS_SCHEDULE: [f64; 5] = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6];

/// Penalized problems `L_h u + β_ε(u - ψ) = f` along a decreasing schedule,
/// each solved by damped Newton and warm-started from the previous one.
pub fn solve_penalized(p: &ObstacleProblem, eps_schedule: &[f64], tol: f64) -> Result<ObstacleSolution> {
    if eps_schedule.is_empty()
        || eps_schedule.iter().any(|&e| !(e > 0.0))
        || eps_schedule.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(Error::InvalidParameter(
            "penalty schedule must be positive and strictly decreasing".into(),
        ));
    }
    let n = p.sys.len();
    let a = SparseRows::from_system(&p.sys);
    let mut u: Vec<f64> = linalg::solve_direct(&p.sys, &p.rhs(), 1e-12, 3)
        .or_else(|_| {
            let lu = BandLu::from_system(&p.sys)?;
            let mut v = p.rhs();
            lu.solve_in_place(&mut v);
            Ok::<_, Error>(v)
        })?;
    let mut total = 0;
    let mut last_res = 0.0;
    for &epsilon in eps_schedule {
        let pen = PenaltySpec { epsilon };
        let residual = |u: &[f64]| -> Vec<f64> {
            (0..n)
                .map(|r| {
                    if p.sys.is_fixed(r) {
                        u[r] - p.g[r]
                    } else {
                        a.apply_row(r, u) + pen.beta(u[r] - p.psi[r]) - p.f[r]
                    }
                })
                .collect()
        };
        let norm = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let mut res = residual(&u);
        let mut rn = norm(&res);
        let mut iters = 0;
        while rn > tol {
            iters += 1;
            if iters > 100 {
                return Err(Error::NewtonDivergence {
                    epsilon,
                    residual: rn,
                });
            }
            let entries = (0..n).flat_map(|r| {
                let (c, v) = a.row(r);
                let extra = if p.sys.is_fixed(r) {
                    0.0
                } else {
                    pen.dbeta(u[r] - p.psi[r])
                };
                c.iter()
                    .zip(v)
                    .enumerate()
                    .map(move |(t, (&j, &w))| (r, j, if t == 0 { w + extra } else { w }))
            });
            let lu = BandLu::factor(n, a.bw, a.bw, entries)?;
            let mut step = res.clone();
            lu.solve_in_place(&mut step);
            let mut lambda = 1.0;
            loop {
                let trial: Vec<f64> = u.iter().zip(&step).map(|(x, d)| x - lambda * d).collect();
                let tr = residual(&trial);
                let tn = norm(&tr);
                if tn < rn || lambda < 1e-8 {
                    u = trial;
                    res = tr;
                    rn = tn;
                    break;
                }
                lambda *= 0.5;
            }
            if lambda < 1e-8 {
                return Err(Error::NewtonDivergence {
                    epsilon,
                    residual: rn,
                });
            }
        }
        total += iters;
        last_res = rn;
    }
    Ok(ObstacleSolution {
        u: Field(u),
        iterations: total,
        final_residual: last_res,
    })
}

/// Max over free rows of `|min(r, u - ψ)|`, `(ψ - u)⁺` and `(-r)⁺` with `r = L_h u - f`.
pub fn complementarity_residual(p: &ObstacleProblem, u: &Field) -> Result<f64> {
    let n = p.sys.len();
    if u.len() != n {
        return Err(Error::ShapeMismatch {
            expected: n,
            got: u.len(),
        });
    }
    let mut worst = 0.0f64;
    for r in 0..n {
        if p.sys.is_fixed(r) {
            continue;
        }
        let res = p.sys.apply_row(r, u) - p.f[r];
        let gap = u[r] - p.psi[r];
        let m = if gap.is_finite() { res.min(gap) } else { res };
        worst = worst.max(m.abs()).max(-gap).max(-res);
    }
    Ok(worst)
}

/// Continuation set `{u - ψ > tol}` over free nodes and its complement
/// (the coincidence set), also over free nodes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionMask {
    pub continuation: Vec<bool>,
    pub coincidence: Vec<bool>,
}

impl RegionMask {
    pub fn continuation_count(&self) -> usize {
        self.continuation.iter().filter(|&&b| b).count()
    }

    pub fn coincidence_count(&self) -> usize {
        self.coincidence.iter().filter(|&&b| b).count()
    }
}

pub fn continuation_region(grid: &Grid, u: &Field, psi: &Field, tol: f64) -> Result<RegionMask> {
    let n = grid.len();
    for v in [u, psi] {
        if v.len() != n {
            return Err(Error::ShapeMismatch {
                expected: n,
                got: v.len(),
            });
        }
    }
    let mut continuation = vec![false; n];
    let mut coincidence = vec![false; n];
    for k in 0..n {
        if grid.tag(k).is_fixed() {
            continue;
        }
        if u[k] - psi[k] > tol {
            continuation[k] = true;
        } else {
            coincidence[k] = true;
        }
    }
    Ok(RegionMask {
        continuation,
        coincidence,
    })
}
