use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::tabulated::TabulatedCoefficients;
use super::RunError;
use crate::discretize::{build_grid, DomainSpec, Field, Grid};
use crate::obstacle::{payoff, PayoffKind};
use crate::operator::{heston_coefficients, CoefficientSet, DeclaredBounds, HestonParams};
use crate::perron::{ObstacleMode, Schedule};
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CaseKind {
    Bvp,
    Obstacle,
    PerronBvp,
    PerronObstacle,
    TransformCheck,
    Verify,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorSpec {
    Heston {
        sigma: f64,
        rho: f64,
        kappa: f64,
        theta: f64,
        r: f64,
        #[serde(default)]
        q: f64,
    },
    Constant {
        a: [[f64; 2]; 2],
        b: [f64; 2],
        c: f64,
    },
    /// CSV with columns `x1,x2,a11,a12,a22,b1,b2,c` on a tensor grid.
    Tabulated { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n: [usize; 2],
    #[serde(default)]
    pub stretch: Option<f64>,
}

/// Scalar data on the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    Constant { value: f64 },
    /// `c[0] + c[1] x1 + c[2] x2`.
    Affine { coeffs: [f64; 3] },
    /// Payoff in log-price `x1`.
    Payoff { payoff: PayoffKind, strike: f64 },
    /// A field CSV in the layout written by the solver.
    Csv { path: PathBuf },
}

impl Default for FieldSpec {
    fn default() -> Self {
        FieldSpec::Constant { value: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSpec {
    #[serde(default)]
    pub f: FieldSpec,
    #[serde(default)]
    pub g: FieldSpec,
    #[serde(default)]
    pub psi: Option<FieldSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMethod {
    Direct,
    Sor,
    Psor,
    Policy,
    Penalty,
}

fn default_omega() -> f64 {
    1.5
}
fn default_tol() -> f64 {
    1e-10
}
fn default_max_iter() -> usize {
    1_000_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    /// Direct for linear cases and PSOR for obstacle cases when absent.
    #[serde(default)]
    pub method: Option<SolverMethod>,
    #[serde(default = "default_omega")]
    pub omega: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self {
            method: None,
            omega: default_omega(),
            tol: default_tol(),
            max_iter: default_max_iter(),
        }
    }
}

fn default_radius() -> usize {
    12
}
fn default_overlap() -> usize {
    6
}
fn default_sweeps() -> usize {
    500
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerronSpec {
    #[serde(default = "default_radius")]
    pub radius: usize,
    #[serde(default = "default_overlap")]
    pub overlap: usize,
    #[serde(default = "default_sweeps")]
    pub max_sweeps: usize,
    #[serde(default)]
    pub schedule: Schedule,
    #[serde(default)]
    pub mode: ObstacleMode,
    /// Also sweep down from the constant supersolution (linear case).
    #[serde(default = "yes")]
    pub both_envelopes: bool,
}

fn yes() -> bool {
    true
}

impl Default for PerronSpec {
    fn default() -> Self {
        Self {
            radius: default_radius(),
            overlap: default_overlap(),
            max_sweeps: default_sweeps(),
            schedule: Schedule::default(),
            mode: ObstacleMode::default(),
            both_envelopes: true,
        }
    }
}

fn default_samples() -> usize {
    1000
}

/// Samples for the transform table; the model drift and reaction feed the
/// closed-form comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformSpec {
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_w1")]
    pub w1: [f64; 2],
    #[serde(default = "default_model_b")]
    pub model_b: [f64; 2],
    #[serde(default)]
    pub model_c: f64,
    #[serde(default = "default_round_trip_tol")]
    pub round_trip_tol: f64,
}

fn default_w1() -> [f64; 2] {
    [-3.0, 3.0]
}
fn default_model_b() -> [f64; 2] {
    [0.3, 1.0]
}
fn default_round_trip_tol() -> f64 {
    1e-10
}

impl Default for TransformSpec {
    fn default() -> Self {
        Self {
            samples: default_samples(),
            w1: default_w1(),
            model_b: default_model_b(),
            model_c: 0.0,
            round_trip_tol: default_round_trip_tol(),
        }
    }
}

fn default_levels() -> Vec<[usize; 2]> {
    vec![[17, 17], [33, 33], [65, 65]]
}

/// Manufactured-solution and complementarity oracles run by the verify case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySpec {
    #[serde(default = "default_levels")]
    pub levels: Vec<[usize; 2]>,
    #[serde(default = "min_order_interior")]
    pub min_order_interior: f64,
    #[serde(default = "min_order_degenerate")]
    pub min_order_degenerate: f64,
    #[serde(default = "min_order_degenerate")]
    pub min_order_oblique: f64,
    #[serde(default = "default_lcp_cases")]
    pub lcp_cases: usize,
    /// Assemble interior drift with the wrong sign; the oracles must catch it.
    #[serde(default)]
    pub inject_drift_sign_flip: bool,
}

fn min_order_interior() -> f64 {
    1.8
}
fn min_order_degenerate() -> f64 {
    0.9
}
fn default_lcp_cases() -> usize {
    10
}

impl Default for VerifySpec {
    fn default() -> Self {
        Self {
            levels: default_levels(),
            min_order_interior: min_order_interior(),
            min_order_degenerate: min_order_degenerate(),
            min_order_oblique: min_order_degenerate(),
            lcp_cases: default_lcp_cases(),
            inject_drift_sign_flip: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Directory for artifacts; the `--out` flag takes precedence.
    #[serde(default)]
    pub dir: Option<PathBuf>,
}

/// One case per document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub case: CaseKind,
    pub operator: OperatorSpec,
    pub domain: DomainSpec,
    pub grid: GridSpec,
    #[serde(default)]
    pub data: DataSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub perron: PerronSpec,
    #[serde(default)]
    pub transform: TransformSpec,
    #[serde(default)]
    pub verify: VerifySpec,
    #[serde(default)]
    pub output: OutputSpec,
    /// Directory relative paths resolve against; set by [`parse_config`].
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Reads, parses and validates a configuration file.
pub fn parse_config(path: &Path) -> Result<RunConfig, RunError> {
    let text = std::fs::read_to_string(path).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_config_str(&text, &base)
}

/// Parses a JSON document. Errors carry the key path and line.
pub fn parse_config_str(text: &str, base_dir: &Path) -> Result<RunConfig, RunError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let mut cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        RunError::Parse(format!("at `{path}` (line {}, column {}): {inner}", inner.line(), inner.column()))
    })?;
    cfg.base_dir = base_dir.to_path_buf();
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Lists every violation rather than stopping at the first.
    pub fn validate(&self) -> Result<(), RunError> {
        let mut v = Vec::new();
        if let Err(e) = DomainSpec::new(self.domain.kind, self.domain.bounds, self.domain.dirichlet) {
            v.push(format!("domain: {e}"));
        }
        if self.grid.n.iter().any(|&n| n < 3) {
            v.push(format!("grid.n: need at least 3 nodes per axis, got {:?}", self.grid.n));
        }
        if let Some(s) = self.grid.stretch {
            if !(s.is_finite() && s > 0.0) {
                v.push(format!("grid.stretch: must be positive, got {s}"));
            }
        }
        let s = &self.solver;
        if !(s.omega > 0.0 && s.omega < 2.0) {
            v.push(format!("solver.omega: must lie in (0, 2), got {}", s.omega));
        }
        if !(s.tol > 0.0) {
            v.push(format!("solver.tol: must be positive, got {}", s.tol));
        }
        if s.max_iter == 0 {
            v.push("solver.max_iter: must be positive".into());
        }
        let linear = matches!(self.case, CaseKind::Bvp | CaseKind::PerronBvp | CaseKind::Verify);
        match (s.method, linear) {
            (Some(SolverMethod::Direct | SolverMethod::Sor), false) if self.case != CaseKind::TransformCheck => {
                v.push("solver.method: obstacle cases take psor, policy or penalty".into())
            }
            (Some(SolverMethod::Psor | SolverMethod::Policy | SolverMethod::Penalty), true) => {
                v.push("solver.method: linear cases take direct or sor".into())
            }
            _ => {}
        }
        if self.perron.radius < 2 {
            v.push(format!("perron.radius: must be at least 2, got {}", self.perron.radius));
        }
        if self.perron.overlap < 1 {
            v.push("perron.overlap: must be at least 1".into());
        }
        if self.verify.levels.len() < 3 {
            v.push(format!("verify.levels: need at least 3, got {}", self.verify.levels.len()));
        }
        if self.transform.samples == 0 {
            v.push("transform.samples: must be positive".into());
        }
        match &self.operator {
            OperatorSpec::Heston { .. } => {
                if let Err(e) = self.heston_params().unwrap().validate() {
                    v.push(format!("operator: {e}"));
                }
            }
            OperatorSpec::Constant { a, .. } => {
                if a[0][1] != a[1][0] {
                    v.push("operator.a: must be symmetric".into());
                }
            }
            OperatorSpec::Tabulated { path } => {
                if !self.resolve(path).is_file() {
                    v.push(format!("operator.path: {} does not exist", path.display()));
                }
            }
        }
        let obstacle = matches!(self.case, CaseKind::Obstacle | CaseKind::PerronObstacle);
        if obstacle && self.data.psi.is_none() {
            v.push("data.psi: obstacle cases need an obstacle".into());
        }
        for (name, spec) in [("f", Some(&self.data.f)), ("g", Some(&self.data.g)), ("psi", self.data.psi.as_ref())] {
            if let Some(FieldSpec::Csv { path }) = spec {
                if !self.resolve(path).is_file() {
                    v.push(format!("data.{name}.path: {} does not exist", path.display()));
                }
            }
        }
        if v.is_empty() && obstacle {
            // boundary data must not lie below the obstacle
            match self.grid().and_then(|g| Ok((self.field(&self.data.g, &g)?, self.field(self.data.psi.as_ref().unwrap(), &g)?, g))) {
                Ok((gv, psi, grid)) => {
                    let tags = grid.tags();
                    let bad: Vec<usize> = (0..grid.len())
                        .filter(|&k| tags[k].is_fixed() && psi[k] > gv[k])
                        .collect();
                    if let Some(&k) = bad.first() {
                        v.push(format!(
                            "data.psi: compatibility ψ ≤ g fails on {} boundary nodes, first at node {k} (ψ = {}, g = {})",
                            bad.len(),
                            psi[k],
                            gv[k]
                        ));
                    }
                }
                Err(e) => v.push(format!("data: {e}")),
            }
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(RunError::Validation(v))
        }
    }

    pub fn heston_params(&self) -> Option<HestonParams> {
        match self.operator {
            OperatorSpec::Heston {
                sigma,
                rho,
                kappa,
                theta,
                r,
                q,
            } => Some(HestonParams {
                sigma,
                rho,
                kappa,
                theta,
                r,
                q,
            }),
            _ => None,
        }
    }

    pub fn grid(&self) -> Result<Grid, RunError> {
        build_grid(&self.domain, self.grid.n, self.grid.stretch).map_err(RunError::Solver)
    }

    pub fn grid_with(&self, n: [usize; 2]) -> Result<Grid, RunError> {
        build_grid(&self.domain, n, self.grid.stretch).map_err(RunError::Solver)
    }

    /// Coefficients with declared bounds; constant and tabulated operators
    /// get theirs from the coefficient values and the domain height.
    pub fn coefficients(&self) -> Result<CoefficientSet, RunError> {
        let height = self.domain.height();
        match &self.operator {
            OperatorSpec::Heston { .. } => {
                let mut cs = heston_coefficients(&self.heston_params().unwrap()).map_err(RunError::Solver)?;
                cs.bounds.nu = Some(height);
                Ok(cs)
            }
            OperatorSpec::Constant { a, b, c } => {
                let am = DMatrix::from_row_slice(2, 2, &[a[0][0], a[0][1], a[1][0], a[1][1]]);
                let eig = am.symmetric_eigenvalues();
                let cs = CoefficientSet::constant(am, DVector::from_row_slice(b), *c).map_err(RunError::Solver)?;
                Ok(cs.with_bounds(DeclaredBounds {
                    lambda0: Some(eig.min()).filter(|v| *v > 0.0),
                    lambda_upper: Some(a[1][1]).filter(|v| *v > 0.0),
                    b0: Some(b[1]).filter(|v| *v > 0.0),
                    c0: Some(*c).filter(|v| *v > 0.0),
                    nu: Some(height),
                    growth_k: None,
                }))
            }
            OperatorSpec::Tabulated { path } => {
                let t = TabulatedCoefficients::from_path(&self.resolve(path)).map_err(RunError::Parse)?;
                let mut cs = t.coefficient_set();
                cs.bounds.nu = Some(height);
                Ok(cs)
            }
        }
    }

    pub fn field(&self, spec: &FieldSpec, g: &Grid) -> crate::Result<Field> {
        Ok(match spec {
            FieldSpec::Constant { value } => Field::constant(g.len(), *value),
            FieldSpec::Affine { coeffs } => g.field(|x| coeffs[0] + coeffs[1] * x[0] + coeffs[2] * x[1]),
            FieldSpec::Payoff { payoff: kind, strike } => g.field(|x| payoff(*kind, *strike, x[0])),
            FieldSpec::Csv { path } => {
                let file = std::fs::File::open(self.resolve(path))
                    .map_err(|e| crate::Error::InvalidParameter(format!("{}: {e}", path.display())))?;
                let recs = crate::discretize::read_field_csv(file)
                    .map_err(|e| crate::Error::InvalidParameter(format!("{}: {e}", path.display())))?;
                if recs.len() != g.len() {
                    return Err(crate::Error::ShapeMismatch {
                        expected: g.len(),
                        got: recs.len(),
                    });
                }
                let mut out = Field::zeros(g.len());
                for r in recs {
                    if r.idx >= g.len() {
                        return Err(crate::Error::InvalidParameter(format!("node index {} out of range", r.idx)));
                    }
                    out[r.idx] = r.value;
                }
                out
            }
        })
    }

}
