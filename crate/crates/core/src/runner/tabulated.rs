use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use crate::operator::{CoefficientSet, DeclaredBounds};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Row {
    x1: f64,
    x2: f64,
    a11: f64,
    a12: f64,
    a22: f64,
    b1: f64,
    b2: f64,
    c: f64,
}

const COLUMNS: usize = 6;

/// Coefficients sampled on a tensor grid, bilinear in between and clamped
/// to the table outside it.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedCoefficients {
    x1: Vec<f64>,
    x2: Vec<f64>,
    /// `values[k]` holds `a11, a12, a22, b1, b2, c` at node `i + j·n1`.
    values: Vec<[f64; COLUMNS]>,
}

fn axis(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

impl TabulatedCoefficients {
    pub fn from_path(path: &Path) -> Result<Self, String> {
        let file = std::fs::File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::from_reader(file).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn from_reader<R: std::io::Read>(input: R) -> Result<Self, String> {
        let mut rdr = csv::Reader::from_reader(input);
        let rows: Vec<Row> = rdr
            .deserialize()
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let x1 = axis(rows.iter().map(|r| r.x1).collect());
        let x2 = axis(rows.iter().map(|r| r.x2).collect());
        if x1.len() < 2 || x2.len() < 2 {
            return Err("table needs at least two distinct values per axis".into());
        }
        if rows.len() != x1.len() * x2.len() {
            return Err(format!(
                "{} rows do not form a {}x{} tensor table",
                rows.len(),
                x1.len(),
                x2.len()
            ));
        }
        let mut values = vec![[f64::NAN; COLUMNS]; rows.len()];
        for r in &rows {
            let i = x1.binary_search_by(|v| v.total_cmp(&r.x1)).unwrap();
            let j = x2.binary_search_by(|v| v.total_cmp(&r.x2)).unwrap();
            values[i + j * x1.len()] = [r.a11, r.a12, r.a22, r.b1, r.b2, r.c];
        }
        if values.iter().any(|v| v.iter().any(|c| c.is_nan())) {
            return Err("duplicate table nodes".into());
        }
        Ok(Self { x1, x2, values })
    }

    fn locate(ax: &[f64], t: f64) -> (usize, f64) {
        let t = t.clamp(ax[0], ax[ax.len() - 1]);
        let i = ax.partition_point(|&v| v <= t).clamp(1, ax.len() - 1) - 1;
        (i, (t - ax[i]) / (ax[i + 1] - ax[i]))
    }

    pub fn eval(&self, x: &[f64]) -> [f64; COLUMNS] {
        let (i, s) = Self::locate(&self.x1, x[0]);
        let (j, t) = Self::locate(&self.x2, x[1]);
        let n1 = self.x1.len();
        let at = |ii: usize, jj: usize| &self.values[ii + jj * n1];
        let mut out = [0.0; COLUMNS];
        for (c, o) in out.iter_mut().enumerate() {
            *o = (1.0 - s) * (1.0 - t) * at(i, j)[c]
                + s * (1.0 - t) * at(i + 1, j)[c]
                + (1.0 - s) * t * at(i, j + 1)[c]
                + s * t * at(i + 1, j + 1)[c];
        }
        out
    }

    /// Bounds come from the tabulated values: smallest eigenvalue of `a`,
    /// largest `a22`, smallest bottom-row `b2` and smallest `c`, each kept
    /// only when positive. Bilinear interpolation cannot leave these ranges.
    pub fn coefficient_set(&self) -> CoefficientSet {
        let n1 = self.x1.len();
        let lambda0 = self
            .values
            .iter()
            .map(|v| {
                let m = 0.5 * (v[0] + v[2]);
                let d = (0.25 * (v[0] - v[2]).powi(2) + v[1] * v[1]).sqrt();
                m - d
            })
            .fold(f64::INFINITY, f64::min);
        let lambda_upper = self.values.iter().map(|v| v[2]).fold(f64::NEG_INFINITY, f64::max);
        let b0 = self.values[..n1].iter().map(|v| v[4]).fold(f64::INFINITY, f64::min);
        let c0 = self.values.iter().map(|v| v[5]).fold(f64::INFINITY, f64::min);
        let pos = |v: f64| Some(v).filter(|v| *v > 0.0);
        let (ta, tb, tc) = (self.clone(), self.clone(), self.clone());
        CoefficientSet::new(
            2,
            move |x| {
                let v = ta.eval(x);
                DMatrix::from_row_slice(2, 2, &[v[0], v[1], v[1], v[2]])
            },
            move |x| {
                let v = tb.eval(x);
                DVector::from_row_slice(&[v[3], v[4]])
            },
            move |x| tc.eval(x)[5],
        )
        .expect("two-dimensional table")
        .with_bounds(DeclaredBounds {
            // concavity of the smallest eigenvalue keeps it above the nodal minimum
            lambda0: pos(lambda0),
            lambda_upper: pos(lambda_upper),
            b0: pos(b0),
            c0: pos(c0),
            nu: None,
            growth_k: None,
        })
    }
}
