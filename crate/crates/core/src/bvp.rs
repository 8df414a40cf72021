//! Linear partial-Dirichlet problems: solves, sup-norm bounds and
//! manufactured-solution convergence studies.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::discretize::{assemble_system, build_grid, DomainSpec, Field, Grid, NodeTag, StencilSystem};
use crate::error::{Error, Result};
use crate::linalg;
use crate::operator::{apply_operator_pointwise, CoefficientSet, Jet};

/// `L_h u = f` on free rows, `u = g` on fixed rows.
#[derive(Debug, Clone)]
pub struct BvpProblem {
    pub sys: StencilSystem,
    pub f: Field,
    pub g: Field,
}

impl BvpProblem {
    pub fn new(sys: StencilSystem, f: Field, g: Field) -> Result<Self> {
        let n = sys.len();
        for v in [&f, &g] {
            if v.len() != n {
                return Err(Error::ShapeMismatch {
                    expected: n,
                    got: v.len(),
                });
            }
        }
        for r in 0..n {
            if !sys.is_fixed(r) && !f[r].is_finite() {
                return Err(Error::InvalidParameter(format!("source is not finite at node {r}")));
            }
            if sys.is_fixed(r) && !g[r].is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "boundary data is not finite at node {r}"
                )));
            }
        }
        Ok(Self { sys, f, g })
    }

    pub fn rhs(&self) -> Vec<f64> {
        self.sys.rhs(&self.f, &self.g)
    }

    /// Sup of `|f|` over free rows.
    pub fn sup_abs_f(&self) -> f64 {
        (0..self.sys.len())
            .filter(|&r| !self.sys.is_fixed(r))
            .fold(0.0, |m, r| m.max(self.f[r].abs()))
    }

    /// Sup of `|g|` over fixed rows.
    pub fn sup_abs_g(&self) -> f64 {
        (0..self.sys.len())
            .filter(|&r| self.sys.is_fixed(r))
            .fold(0.0, |m, r| m.max(self.g[r].abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Method {
    Direct,
    Sor { omega: f64 },
}

/// Solves to `‖L_h u - f‖_∞ <= tol` on free rows; fixed rows equal `g` exactly.
///
/// For `Direct`, `max_iter` bounds the iterative-refinement steps.
pub fn solve_bvp(p: &BvpProblem, method: Method, tol: f64, max_iter: usize) -> Result<Field> {
    let rhs = p.rhs();
    let mut u = match method {
        Method::Direct => linalg::solve_direct(&p.sys, &rhs, tol, max_iter.max(1))?,
        Method::Sor { omega } => {
            let x0: Vec<f64> = (0..rhs.len())
                .map(|r| if p.sys.is_fixed(r) { rhs[r] } else { 0.0 })
                .collect();
            linalg::sor(&p.sys, &rhs, &x0, omega, tol, max_iter)?.0
        }
    };
    for (r, v) in u.iter_mut().enumerate() {
        if p.sys.is_fixed(r) {
            *v = p.g[r];
        }
    }
    Ok(Field(u))
}

/// Which sup-norm estimate to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundVariant {
    /// `(1/c0) sup|f| ∨ sup|g|`, needs a positive reaction floor.
    SolutionSupNorm,
    /// `e^{b0 ν / 2Λ} ((4Λ/b0²) sup|f| ∨ sup|g|)` on a slab of finite height.
    FiniteHeight,
    /// `0 ∨ (1/c0) sup f ∨ sup g ∨ sup ψ` for obstacle problems.
    ObstacleUpper,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AprioriBound {
    pub value: f64,
    pub variant: BoundVariant,
    pub inputs: BoundInputs,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundInputs {
    pub sup_f: f64,
    pub sup_g: f64,
    pub sup_psi: Option<f64>,
    pub c0: Option<f64>,
    pub b0: Option<f64>,
    pub lambda_upper: Option<f64>,
    pub nu: Option<f64>,
}

/// Evaluates a sup-norm estimate from declared bounds.
///
/// For the two linear variants `sup_f`, `sup_g` are sups of absolute values;
/// for `ObstacleUpper` they are plain sups.
pub fn apriori_bound(
    cs: &CoefficientSet,
    sup_f: f64,
    sup_g: f64,
    sup_psi: Option<f64>,
    variant: BoundVariant,
) -> Result<AprioriBound> {
    let b = cs.bounds;
    let inputs = BoundInputs {
        sup_f,
        sup_g,
        sup_psi,
        c0: b.c0,
        b0: b.b0,
        lambda_upper: b.lambda_upper,
        nu: b.nu,
    };
    let positive = |v: Option<f64>, name: &'static str| match v {
        Some(x) if x > 0.0 => Ok(x),
        _ => Err(Error::MissingConstant(name)),
    };
    let value = match variant {
        BoundVariant::SolutionSupNorm => {
            let c0 = positive(b.c0, "c0")?;
            (sup_f / c0).max(sup_g)
        }
        BoundVariant::FiniteHeight => {
            let b0 = positive(b.b0, "b0")?;
            let lam = positive(b.lambda_upper, "lambda_upper")?;
            let nu = positive(b.nu, "nu")?;
            (b0 * nu / (2.0 * lam)).exp() * ((4.0 * lam / (b0 * b0)) * sup_f).max(sup_g)
        }
        BoundVariant::ObstacleUpper => {
            let c0 = positive(b.c0, "c0")?;
            let psi = sup_psi.ok_or(Error::MissingConstant("sup_psi"))?;
            0f64.max(sup_f / c0).max(sup_g).max(psi)
        }
    };
    Ok(AprioriBound {
        value,
        variant,
        inputs,
    })
}

/// A smooth function with analytic first and second derivatives.
pub trait ManufacturedSolution: Sync {
    fn jet(&self, x: &[f64]) -> Jet;

    fn value(&self, x: &[f64]) -> f64 {
        self.jet(x).value
    }
}

impl<F: Fn(&[f64]) -> Jet + Sync> ManufacturedSolution for F {
    fn jet(&self, x: &[f64]) -> Jet {
        self(x)
    }
}

/// One refinement level of a manufactured-solution study.
#[derive(Debug, Clone)]
pub struct MmsLevel {
    pub problem: BvpProblem,
    pub exact: Field,
    pub solution: Field,
}

impl MmsLevel {
    pub fn grid(&self) -> &Grid {
        self.problem.sys.grid()
    }

    /// Largest nodal error over nodes with the given tag.
    pub fn error_on(&self, tag: NodeTag) -> f64 {
        let g = self.grid();
        (0..g.len())
            .filter(|&k| g.tag(k) == tag)
            .fold(0.0, |m, k| m.max((self.solution[k] - self.exact[k]).abs()))
    }
}

/// Builds and solves the manufactured problem `A u = f`, `u = u_exact` on fixed rows.
pub fn mms_level(
    cs: &CoefficientSet,
    u_exact: &dyn ManufacturedSolution,
    dom: &DomainSpec,
    n: [usize; 2],
) -> Result<MmsLevel> {
    let grid = build_grid(dom, n, None)?;
    let sys = assemble_system(cs, &grid)?;
    let f = grid.field(|x| apply_operator_pointwise(cs, &u_exact.jet(x), x));
    let exact = grid.field(|x| u_exact.value(x));
    let problem = BvpProblem::new(sys, f, exact.clone())?;
    let solution = solve_bvp(&problem, Method::Direct, 1e-10, 3)?;
    Ok(MmsLevel {
        problem,
        exact,
        solution,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub level: usize,
    pub h: f64,
    pub err_interior: f64,
    pub err_degenerate: f64,
    pub order_interior: Option<f64>,
    pub order_degenerate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
}

/// Observed order between two levels.
pub fn observed_order(e_coarse: f64, e_fine: f64, h_coarse: f64, h_fine: f64) -> f64 {
    (e_coarse / e_fine).ln() / (h_coarse / h_fine).ln()
}

impl ConvergenceTable {
    pub fn from_errors(levels: &[(f64, f64, f64)]) -> Self {
        let mut rows: Vec<ConvergenceRow> = Vec::new();
        for (k, &(h, ei, ed)) in levels.iter().enumerate() {
            let (oi, od) = match rows.last() {
                Some(prev) => (
                    Some(observed_order(prev.err_interior, ei, prev.h, h)),
                    Some(observed_order(prev.err_degenerate, ed, prev.h, h)),
                ),
                None => (None, None),
            };
            rows.push(ConvergenceRow {
                level: k,
                h,
                err_interior: ei,
                err_degenerate: ed,
                order_interior: oi,
                order_degenerate: od,
            });
        }
        Self { rows }
    }

    /// Order between the last two levels.
    pub fn final_orders(&self) -> Option<(f64, f64)> {
        let r = self.rows.last()?;
        Some((r.order_interior?, r.order_degenerate?))
    }

    /// CSV `level,h,err_interior,err_degenerate,order_interior,order_degenerate`;
    /// missing orders are empty cells.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "level",
            "h",
            "err_interior",
            "err_degenerate",
            "order_interior",
            "order_degenerate",
        ])?;
        let fmt = |v: f64| format!("{v:.16e}");
        for r in &self.rows {
            w.write_record([
                r.level.to_string(),
                fmt(r.h),
                fmt(r.err_interior),
                fmt(r.err_degenerate),
                r.order_interior.map(fmt).unwrap_or_default(),
                r.order_degenerate.map(fmt).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs [`mms_level`] for each grid size and tabulates nodal errors.
///
/// Corner nodes carry Dirichlet data and are excluded from both columns.
pub fn mms_convergence(
    cs: &CoefficientSet,
    u_exact: &dyn ManufacturedSolution,
    dom: &DomainSpec,
    levels: &[[usize; 2]],
) -> Result<(ConvergenceTable, Vec<MmsLevel>)> {
    if levels.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "a convergence study needs at least 3 levels, got {}",
            levels.len()
        )));
    }
    let mut runs = Vec::with_capacity(levels.len());
    let mut errs = Vec::with_capacity(levels.len());
    for &n in levels {
        let lvl = mms_level(cs, u_exact, dom, n)?;
        errs.push((
            lvl.grid().max_spacing(),
            lvl.error_on(NodeTag::Interior),
            lvl.error_on(NodeTag::Degenerate),
        ));
        runs.push(lvl);
    }
    Ok((ConvergenceTable::from_errors(&errs), runs))
}
