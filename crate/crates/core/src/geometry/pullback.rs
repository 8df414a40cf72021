use nalgebra::{DMatrix, DVector};

use super::map::{forward_map, height_ratio, inverse_map, jacobian};
use crate::error::{Error, Result};
use crate::operator::{CoefficientSet, DeclaredBounds};

/// Coefficients of the transformed operator at a slab point `w`.
#[derive(Debug, Clone, PartialEq)]
pub struct PullbackResult {
    pub w: Vec<f64>,
    /// Half-ball point `x = Φ⁻¹(w)`.
    pub x: Vec<f64>,
    pub tilde_a: DMatrix<f64>,
    pub tilde_b: DVector<f64>,
    pub tilde_c: f64,
}

/// `ã^{kl} = (x_d/w_d) a^{ij} ∂_i w_k ∂_j w_l`,
/// `b̃^k = b^i ∂_i w_k + x_d a^{ij} ∂_i∂_j w_k`, `c̃ = c∘Φ⁻¹`.
///
/// The first-order term uses the full chain rule, so `Ã(u∘Φ⁻¹) = (Au)∘Φ⁻¹`.
pub fn pullback_coefficients(cs: &CoefficientSet, w: &[f64]) -> Result<PullbackResult> {
    let d = cs.dim();
    if w.len() != d {
        return Err(Error::ShapeMismatch {
            expected: d,
            got: w.len(),
        });
    }
    let x = inverse_map(w)?;
    let der = jacobian(&x)?;
    let ratio = height_ratio(w);
    let a = cs.a(&x);
    let b = cs.b(&x);
    let j = &der.jacobian;
    let m = j * &a * j.transpose();
    let tilde_a = (&m + m.transpose()) * (0.5 * ratio);
    let xd = x[d - 1];
    let mut tilde_b = j * &b;
    for k in 0..d {
        let h = &der.hessians[k];
        let tr: f64 = (0..d)
            .flat_map(|i| (0..d).map(move |l| (i, l)))
            .map(|(i, l)| a[(i, l)] * h[(i, l)])
            .sum();
        tilde_b[k] += xd * tr;
    }
    let tilde_c = cs.c(&x);
    Ok(PullbackResult {
        w: w.to_vec(),
        x,
        tilde_a,
        tilde_b,
        tilde_c,
    })
}

/// The transformed operator as a coefficient set on slab coordinates.
///
/// Evaluations at corner points yield NaN, which assembly reports as
/// non-evaluable. Declared bounds are not carried over.
pub fn pulled_back_coefficients(cs: &CoefficientSet) -> CoefficientSet {
    let d = cs.dim();
    let eval = {
        let cs = cs.clone();
        move |w: &[f64]| pullback_coefficients(&cs, w).ok()
    };
    let ea = eval.clone();
    let eb = eval.clone();
    CoefficientSet::new(
        d,
        move |w| ea(w).map(|p| p.tilde_a).unwrap_or_else(|| DMatrix::from_element(d, d, f64::NAN)),
        move |w| eb(w).map(|p| p.tilde_b).unwrap_or_else(|| DVector::from_element(d, f64::NAN)),
        move |w| eval(w).map(|p| p.tilde_c).unwrap_or(f64::NAN),
    )
    .expect("dimension already validated")
    .with_bounds(DeclaredBounds::default())
}

/// Limit of `b̃^d` as `w_d ↓ 0`: `b^d(x) ∂w_d/∂x_d = 2 b^d(x)/(1 - |x|²)` at `x = Φ⁻¹(w', 0)`.
pub fn boundary_drift_limit(cs: &CoefficientSet, w_tangential: &[f64]) -> Result<f64> {
    let mut w = w_tangential.to_vec();
    w.push(0.0);
    let x = inverse_map(&w)?;
    let d = x.len();
    let norm2: f64 = x.iter().map(|v| v * v).sum();
    Ok(cs.b(&x)[d - 1] * 2.0 / (1.0 - norm2))
}

/// Applies `u ↦ u∘Φ⁻¹` to a function on the half-ball.
pub fn pull_function(u: impl Fn(&[f64]) -> f64, w: &[f64]) -> Result<f64> {
    Ok(u(&inverse_map(w)?))
}

/// Applies `v ↦ v∘Φ` to a function on the slab.
pub fn push_function(v: impl Fn(&[f64]) -> f64, x: &[f64]) -> Result<f64> {
    Ok(v(&forward_map(x)?))
}
