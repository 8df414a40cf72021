use serde::Serialize;

use super::field::Field;
use super::grid::{Grid, NodeTag};
use crate::error::{Error, Result};
use crate::operator::CoefficientSet;

/// Assembled row-stencil operator.
///
/// Each row stores its own node first, followed by the neighbours with
/// nonzero weight. Fixed rows (Dirichlet, Corner) are identity rows.
#[derive(Debug, Clone)]
pub struct StencilSystem {
    grid: Grid,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    second_order: Vec<bool>,
    upwinded: Vec<bool>,
    report: MonotonicityReport,
}

/// Assembly switches. The fault flag exists to exercise the oracles.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AssemblyOptions {
    /// Assemble `+<b, Du>` instead of `-<b, Du>` at interior rows.
    pub flip_drift_sign: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    NonPositiveDiagonal,
    PositiveOffDiagonal,
    NegativeRowSum,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowViolation {
    pub row: usize,
    pub kind: ViolationKind,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct MonotonicityReport {
    pub passes: bool,
    pub violations: Vec<RowViolation>,
}

/// Assembles with default options.
pub fn assemble_system(cs: &CoefficientSet, g: &Grid) -> Result<StencilSystem> {
    assemble_with(cs, g, &AssemblyOptions::default())
}

/// 3x3 weight block around a node, indexed `[di + 1][dj + 1]`.
type Block = [[f64; 3]; 3];

pub fn assemble_with(cs: &CoefficientSet, g: &Grid, opts: &AssemblyOptions) -> Result<StencilSystem> {
    if cs.dim() != 2 {
        return Err(Error::ShapeMismatch {
            expected: 2,
            got: cs.dim(),
        });
    }
    let n = g.len();
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut cols = Vec::with_capacity(9 * n);
    let mut vals = Vec::with_capacity(9 * n);
    let mut second_order = vec![false; n];
    let mut upwinded = vec![false; n];
    row_ptr.push(0);
    for k in 0..n {
        let (i, j) = g.ij(k);
        let block = match g.tag(k) {
            NodeTag::Dirichlet | NodeTag::Corner => {
                let mut b = [[0.0; 3]; 3];
                b[1][1] = 1.0;
                b
            }
            NodeTag::Interior => {
                second_order[k] = true;
                let (b, up) = interior_row(cs, g, k, i, j, opts)?;
                upwinded[k] = up;
                b
            }
            NodeTag::Degenerate => {
                upwinded[k] = true;
                degenerate_row(cs, g, k, i)?
            }
        };
        cols.push(k);
        vals.push(block[1][1]);
        for (dj, row) in [(-1isize, 0usize), (0, 1), (1, 2)] {
            for (di, col) in [(-1isize, 0usize), (0, 1), (1, 2)] {
                if (di, dj) == (0, 0) {
                    continue;
                }
                let w = block[col][row];
                if w != 0.0 {
                    let ii = (i as isize + di) as usize;
                    let jj = (j as isize + dj) as usize;
                    cols.push(g.index(ii, jj));
                    vals.push(w);
                }
            }
        }
        row_ptr.push(cols.len());
    }
    let mut sys = StencilSystem {
        grid: g.clone(),
        row_ptr,
        cols,
        vals,
        second_order,
        upwinded,
        report: MonotonicityReport::default(),
    };
    sys.report = compute_monotonicity(&sys);
    Ok(sys)
}

fn evaluate(cs: &CoefficientSet, x: &[f64], k: usize) -> Result<(f64, f64, f64, f64, f64, f64)> {
    let a = cs.a(x);
    let b = cs.b(x);
    let c = cs.c(x);
    let vals = [a[(0, 0)], a[(0, 1)], a[(1, 1)], b[0], b[1], c];
    if let Some(bad) = vals.iter().position(|v| !v.is_finite()) {
        let what = ["a11", "a12", "a22", "b1", "b2", "c"][bad];
        return Err(Error::NonEvaluable { node: k, what });
    }
    if (a[(0, 1)] - a[(1, 0)]).abs() > 1e-12 * a.amax().max(1.0) {
        return Err(Error::NonEvaluable {
            node: k,
            what: "symmetric a",
        });
    }
    Ok((vals[0], vals[1], vals[2], vals[3], vals[4], vals[5]))
}

fn interior_row(
    cs: &CoefficientSet,
    g: &Grid,
    k: usize,
    i: usize,
    j: usize,
    opts: &AssemblyOptions,
) -> Result<(Block, bool)> {
    let x = g.point(k);
    let (a11, a12, a22, mut b1, mut b2, c) = evaluate(cs, &x, k)?;
    if opts.flip_drift_sign {
        b1 = -b1;
        b2 = -b2;
    }
    let y = x[1];
    let hw = g.x1[i] - g.x1[i - 1];
    let he = g.x1[i + 1] - g.x1[i];
    let hs = g.x2[j] - g.x2[j - 1];
    let hn = g.x2[j + 1] - g.x2[j];
    let mut w = [[0.0; 3]; 3];

    // -y a11 u_11
    let s = y * a11;
    w[2][1] -= s * 2.0 / (he * (hw + he));
    w[0][1] -= s * 2.0 / (hw * (hw + he));
    w[1][1] += s * 2.0 / (hw * he);
    // -y a22 u_22
    let s = y * a22;
    w[1][2] -= s * 2.0 / (hn * (hs + hn));
    w[1][0] -= s * 2.0 / (hs * (hs + hn));
    w[1][1] += s * 2.0 / (hs * hn);
    // -2 y a12 u_12 with the tilted seven-point stencil
    let m = 2.0 * y * a12;
    if a12 > 0.0 {
        // u_12 ≈ ½ [(u_ne - u_n - u_e + u)/(he hn) + (u - u_w - u_s + u_sw)/(hw hs)]
        let p = 0.5 * m / (he * hn);
        let q = 0.5 * m / (hw * hs);
        w[2][2] -= p;
        w[1][2] += p;
        w[2][1] += p;
        w[1][1] -= p;
        w[1][1] -= q;
        w[0][1] += q;
        w[1][0] += q;
        w[0][0] -= q;
    } else if a12 < 0.0 {
        // u_12 ≈ ½ [(u_e - u - u_se + u_s)/(he hs) + (u_n - u_nw - u + u_w)/(hw hn)]
        let p = 0.5 * m / (he * hs);
        let q = 0.5 * m / (hw * hn);
        w[2][1] -= p;
        w[1][1] += p;
        w[2][0] += p;
        w[1][0] -= p;
        w[1][2] -= q;
        w[0][2] += q;
        w[1][1] += q;
        w[0][1] -= q;
    }

    let mut upwinded = false;
    // -b1 u_1
    upwinded |= drift(&mut w, b1, hw, he, |w, o| &mut w[o][1]);
    // -b2 u_2
    upwinded |= drift(&mut w, b2, hs, hn, |w, o| &mut w[1][o]);
    w[1][1] += c;
    Ok((w, upwinded))
}

/// Adds `-b u'` along one axis: central when the off-diagonals stay
/// nonpositive, upwind otherwise. Returns whether it upwinded.
fn drift(
    w: &mut Block,
    b: f64,
    hm: f64,
    hp: f64,
    at: impl Fn(&mut Block, usize) -> &mut f64,
) -> bool {
    if b == 0.0 {
        return false;
    }
    let cm = b / (hm + hp);
    let plus = *at(w, 2) - cm;
    let minus = *at(w, 0) + cm;
    if plus <= 0.0 && minus <= 0.0 {
        *at(w, 2) = plus;
        *at(w, 0) = minus;
        return false;
    }
    if b > 0.0 {
        *at(w, 2) -= b / hp;
        *at(w, 1) += b / hp;
    } else {
        *at(w, 0) += b / hm;
        *at(w, 1) -= b / hm;
    }
    true
}

fn degenerate_row(cs: &CoefficientSet, g: &Grid, k: usize, i: usize) -> Result<Block> {
    let x = g.point(k);
    let (_, _, _, b1, b2, c) = evaluate(cs, &x, k)?;
    if b2 <= 0.0 {
        return Err(Error::NonPositiveBoundaryDrift { node: k, value: b2 });
    }
    let hw = g.x1[i] - g.x1[i - 1];
    let he = g.x1[i + 1] - g.x1[i];
    let hn = g.x2[1] - g.x2[0];
    let mut w = [[0.0; 3]; 3];
    if b1 > 0.0 {
        w[2][1] -= b1 / he;
        w[1][1] += b1 / he;
    } else if b1 < 0.0 {
        w[0][1] += b1 / hw;
        w[1][1] -= b1 / hw;
    }
    w[1][2] -= b2 / hn;
    w[1][1] += b2 / hn;
    w[1][1] += c;
    Ok(w)
}

fn compute_monotonicity(sys: &StencilSystem) -> MonotonicityReport {
    let mut violations = Vec::new();
    for r in 0..sys.len() {
        let (cols, vals) = sys.row(r);
        let diag = vals[0];
        if diag <= 0.0 {
            violations.push(RowViolation {
                row: r,
                kind: ViolationKind::NonPositiveDiagonal,
                value: diag,
            });
        }
        let scale = diag.abs().max(1.0);
        for (&c, &v) in cols.iter().zip(vals).skip(1) {
            debug_assert_ne!(c, r);
            if v > 1e-14 * scale {
                violations.push(RowViolation {
                    row: r,
                    kind: ViolationKind::PositiveOffDiagonal,
                    value: v,
                });
            }
        }
        let sum: f64 = vals.iter().sum();
        if sum < -1e-12 * scale {
            violations.push(RowViolation {
                row: r,
                kind: ViolationKind::NegativeRowSum,
                value: sum,
            });
        }
    }
    MonotonicityReport {
        passes: violations.is_empty(),
        violations,
    }
}

/// Row sign checks: positive diagonal, nonpositive off-diagonals, nonnegative row sums.
pub fn monotonicity_check(sys: &StencilSystem) -> MonotonicityReport {
    sys.report.clone()
}

/// `L_h u - f` on free rows, `u - g` on fixed rows.
pub fn discrete_residual(sys: &StencilSystem, u: &Field, f: &Field, g: &Field) -> Result<Field> {
    let n = sys.len();
    for v in [u, f, g] {
        if v.len() != n {
            return Err(Error::ShapeMismatch {
                expected: n,
                got: v.len(),
            });
        }
    }
    Ok(Field(
        (0..n)
            .map(|r| {
                if sys.is_fixed(r) {
                    u[r] - g[r]
                } else {
                    sys.apply_row(r, u) - f[r]
                }
            })
            .collect(),
    ))
}

impl StencilSystem {
    pub fn len(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn tag(&self, r: usize) -> NodeTag {
        self.grid.tag(r)
    }

    pub fn is_fixed(&self, r: usize) -> bool {
        self.grid.tag(r).is_fixed()
    }

    /// Column indices and weights of row `r`; the diagonal comes first.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let s = self.row_ptr[r];
        let e = self.row_ptr[r + 1];
        (&self.cols[s..e], &self.vals[s..e])
    }

    pub fn diag(&self, r: usize) -> f64 {
        self.vals[self.row_ptr[r]]
    }

    /// Whether row `r` carries second-order weights.
    pub fn has_second_order(&self, r: usize) -> bool {
        self.second_order[r]
    }

    /// Whether any drift term in row `r` was discretized one-sidedly.
    pub fn is_upwinded(&self, r: usize) -> bool {
        self.upwinded[r]
    }

    pub fn is_monotone(&self) -> bool {
        self.report.passes
    }

    pub fn apply_row(&self, r: usize, u: &[f64]) -> f64 {
        let (cols, vals) = self.row(r);
        cols.iter().zip(vals).map(|(&c, &v)| v * u[c]).sum()
    }

    pub fn apply(&self, u: &[f64]) -> Field {
        Field((0..self.len()).map(|r| self.apply_row(r, u)).collect())
    }

    /// Right-hand side with `f` on free rows and `g` on fixed rows.
    pub fn rhs(&self, f: &[f64], g: &[f64]) -> Vec<f64> {
        (0..self.len())
            .map(|r| if self.is_fixed(r) { g[r] } else { f[r] })
            .collect()
    }

    /// Half-bandwidth in flat index order.
    pub fn bandwidth(&self) -> usize {
        self.grid.nx() + 1
    }
}
