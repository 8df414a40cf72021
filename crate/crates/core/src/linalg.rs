//! Banded LU with partial pivoting and (projected) SOR on row-stencil systems.

use crate::discretize::StencilSystem;
use crate::error::{Error, Result};

/// LU factors of a band matrix with `kl` sub- and `ku` super-diagonals.
///
/// Row `i` is stored densely over columns `i - kl ..= i + kl + ku`, which
/// leaves room for the fill produced by row interchanges.
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
    piv: Vec<usize>,
}

impl BandLu {
    /// Factors the matrix given as `(row, col, value)` triplets; duplicates add up.
    pub fn factor(
        n: usize,
        kl: usize,
        ku: usize,
        entries: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let width = 2 * kl + ku + 1;
        let mut lu = Self {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
            piv: vec![0; n],
        };
        for (i, j, v) in entries {
            if j + kl < i || j > i + ku {
                return Err(Error::InvalidParameter(format!(
                    "entry ({i}, {j}) outside band kl={kl}, ku={ku}"
                )));
            }
            *lu.at_mut(i, j) += v;
        }
        lu.decompose()?;
        Ok(lu)
    }

    /// Factors a full assembled system in flat index order.
    pub fn from_system(sys: &StencilSystem) -> Result<Self> {
        let bw = sys.bandwidth();
        let entries = (0..sys.len()).flat_map(|r| {
            let (cols, vals) = sys.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (r, c, v))
        });
        Self::factor(sys.len(), bw, bw, entries)
    }

    #[inline]
    fn pos(&self, i: usize, j: usize) -> usize {
        i * self.width + (j + self.kl - i)
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[self.pos(i, j)]
    }

    #[inline]
    fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        let p = self.pos(i, j);
        &mut self.data[p]
    }

    fn decompose(&mut self) -> Result<()> {
        let n = self.n;
        let mut scale = 0.0f64;
        for v in &self.data {
            scale = scale.max(v.abs());
        }
        for k in 0..n {
            let last_row = (k + self.kl).min(n - 1);
            let last_col = (k + self.kl + self.ku).min(n - 1);
            let mut p = k;
            let mut best = self.at(k, k).abs();
            for i in k + 1..=last_row {
                let v = self.at(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= f64::EPSILON * scale * n as f64 || best == 0.0 {
                return Err(Error::Singular(k));
            }
            self.piv[k] = p;
            if p != k {
                for j in k..=last_col {
                    let a = self.pos(k, j);
                    let b = self.pos(p, j);
                    self.data.swap(a, b);
                }
            }
            let pivot = self.at(k, k);
            for i in k + 1..=last_row {
                let l = self.at(i, k) / pivot;
                if l == 0.0 {
                    continue;
                }
                *self.at_mut(i, k) = l;
                let (ri, rk) = (self.pos(i, k + 1), self.pos(k, k + 1));
                let len = last_col - k;
                for t in 0..len {
                    let u = self.data[rk + t];
                    self.data[ri + t] -= l * u;
                }
            }
        }
        Ok(())
    }

    #[allow(clippy::needless_range_loop)]
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk != 0.0 {
                for i in k + 1..=(k + self.kl).min(n - 1) {
                    b[i] -= self.at(i, k) * bk;
                }
            }
        }
        for k in (0..n).rev() {
            let last = (k + self.kl + self.ku).min(n - 1);
            let mut s = b[k];
            for j in k + 1..=last {
                s -= self.at(k, j) * b[j];
            }
            b[k] = s / self.at(k, k);
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}

/// Largest absolute entry of `L_h u - rhs` (fixed rows included).
pub fn residual_inf(sys: &StencilSystem, u: &[f64], rhs: &[f64]) -> f64 {
    (0..sys.len()).fold(0.0, |m, r| m.max((sys.apply_row(r, u) - rhs[r]).abs()))
}

/// Direct solve with up to `refinements` steps of iterative refinement
/// aimed at `‖L_h u - rhs‖_∞ <= tol`.
pub fn solve_direct(sys: &StencilSystem, rhs: &[f64], tol: f64, refinements: usize) -> Result<Vec<f64>> {
    let lu = BandLu::from_system(sys)?;
    let mut u = rhs.to_vec();
    lu.solve_in_place(&mut u);
    let mut history = Vec::new();
    for _ in 0..=refinements {
        let res: Vec<f64> = (0..sys.len()).map(|r| rhs[r] - sys.apply_row(r, &u)).collect();
        let norm = res.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        history.push(norm);
        if norm <= tol {
            return Ok(u);
        }
        let mut d = res;
        lu.solve_in_place(&mut d);
        for (x, dx) in u.iter_mut().zip(&d) {
            *x += dx;
        }
    }
    let norm = residual_inf(sys, &u, rhs);
    if norm <= tol {
        return Ok(u);
    }
    Err(Error::NonConvergence {
        iterations: refinements,
        residual: norm,
        history,
    })
}

/// Successive over-relaxation. Stops when the residual drops below `tol`.
pub fn sor(
    sys: &StencilSystem,
    rhs: &[f64],
    x0: &[f64],
    omega: f64,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, usize)> {
    if !(omega > 0.0 && omega < 2.0) {
        return Err(Error::InvalidParameter(format!(
            "relaxation factor must lie in (0, 2), got {omega}"
        )));
    }
    let mut u = x0.to_vec();
    let mut history = Vec::new();
    for it in 1..=max_iter {
        for r in 0..sys.len() {
            let (cols, vals) = sys.row(r);
            let mut s = rhs[r];
            for (&c, &v) in cols.iter().zip(vals).skip(1) {
                s -= v * u[c];
            }
            let gs = s / vals[0];
            u[r] += omega * (gs - u[r]);
        }
        if it % 10 == 0 || it == max_iter {
            let res = residual_inf(sys, &u, rhs);
            history.push(res);
            if res <= tol {
                return Ok((u, it));
            }
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        residual: *history.last().unwrap_or(&f64::NAN),
        history,
    })
}

/// Compressed rows with the diagonal stored first in each row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRows {
    pub n: usize,
    /// Half-bandwidth bound `|row - col| <= bw`.
    pub bw: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl SparseRows {
    pub fn from_system(sys: &StencilSystem) -> Self {
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for r in 0..sys.len() {
            let (c, v) = sys.row(r);
            cols.extend_from_slice(c);
            vals.extend_from_slice(v);
            row_ptr.push(cols.len());
        }
        Self {
            n: sys.len(),
            bw: sys.bandwidth(),
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (s, e) = (self.row_ptr[r], self.row_ptr[r + 1]);
        (&self.cols[s..e], &self.vals[s..e])
    }

    pub fn apply_row(&self, r: usize, u: &[f64]) -> f64 {
        let (c, v) = self.row(r);
        c.iter().zip(v).map(|(&j, &a)| a * u[j]).sum()
    }

    /// Factors the matrix whose rows in `replace` are swapped for identity rows.
    pub fn factor_with_identity_rows(&self, replace: &[bool]) -> Result<BandLu> {
        let entries = (0..self.n).flat_map(|r| {
            let (c, v) = self.row(r);
            let keep = !replace[r];
            c.iter()
                .zip(v)
                .enumerate()
                .filter(move |&(t, _)| keep || t == 0)
                .map(move |(_, (&j, &a))| (r, j, if keep { a } else { 1.0 }))
        });
        BandLu::factor(self.n, self.bw, self.bw, entries)
    }
}

/// Policy iteration for `min(A u - rhs, u - psi) = 0` on rows with
/// `free[r]`; other rows solve `(A u)_r = rhs_r` unconditionally.
///
/// Finite termination for M-matrices; `u` equals `psi` exactly on the
/// returned active set. Returns the solution and the number of policies tried.
pub fn lcp_policy_iteration(
    a: &SparseRows,
    rhs: &[f64],
    psi: &[f64],
    free: &[bool],
    max_iter: usize,
) -> Result<(Vec<f64>, usize)> {
    let n = a.n;
    let mut active = vec![false; n];
    let mut history = Vec::new();
    for it in 1..=max_iter {
        let lu = a.factor_with_identity_rows(&active)?;
        let mut u: Vec<f64> = (0..n).map(|r| if active[r] { psi[r] } else { rhs[r] }).collect();
        lu.solve_in_place(&mut u);
        for r in 0..n {
            if active[r] {
                u[r] = psi[r];
            }
        }
        let mut changed = 0usize;
        let mut worst = 0.0f64;
        for r in 0..n {
            if !free[r] {
                continue;
            }
            let res = a.apply_row(r, &u) - rhs[r];
            let gap = u[r] - psi[r];
            let next = res > gap;
            worst = worst.max(res.min(gap).abs());
            if next != active[r] {
                active[r] = next;
                changed += 1;
            }
        }
        history.push(worst);
        if changed == 0 {
            return Ok((u, it));
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        residual: *history.last().unwrap_or(&f64::NAN),
        history,
    })
}
