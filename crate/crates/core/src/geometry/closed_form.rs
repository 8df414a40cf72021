//! Closed-form coefficients of the model operator
//! `-y(u_xx + u_yy) - b¹u_x - b²u_y + cu` on the half-disk after the map to
//! the strip `(s, θ)`, evaluated exactly as the published expressions read,
//! plus their comparison with the generic pullback.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::map::inverse_map;
use super::pullback::pullback_coefficients;
use crate::error::Result;
use crate::operator::CoefficientSet;

/// Published closed-form quantities at `(s, θ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosedForm {
    pub s: f64,
    pub theta: f64,
    /// `x = (e^{2s} - 1)/(1 + 2e^s cos θ + e^{2s})`.
    pub x: f64,
    /// `y = 2 sin θ/(1 + 2e^s cos θ + e^{2s})` as printed.
    pub y: f64,
    /// `D = 4/(1 + 2e^s cos θ + e^{2s})`.
    pub big_d: f64,
    /// Coefficient of `-(v_ss + v_θθ)`: `sin²θ/(2y e^{4s})`, i.e. `θ ã`.
    pub theta_a: f64,
    pub tilde_b: [f64; 2],
    pub tilde_c: f64,
}

/// Evaluates the published expressions; nothing is reconciled here.
pub fn model2d_closed_form(b1: f64, b2: f64, c: f64, s: f64, theta: f64) -> ClosedForm {
    let es = s.exp();
    let den = 1.0 + 2.0 * es * theta.cos() + es * es;
    let x = (es * es - 1.0) / den;
    let y = 2.0 * theta.sin() / den;
    let big_d = 4.0 / den;
    let sin = theta.sin();
    let theta_a = sin * sin / (2.0 * y * es.powi(4));
    let s_x = 2.0 * theta.cos() / big_d + sin * sin;
    let s_y = -2.0 * x * sin / big_d;
    let tilde_b = [b1 * s_x + b2 * s_y, -b1 * s_y + b2 * s_x];
    ClosedForm {
        s,
        theta,
        x,
        y,
        big_d,
        theta_a,
        tilde_b,
        tilde_c: c,
    }
}

/// Differences between the published expressions and the chain-rule pullback.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosedFormDeltas {
    pub s: f64,
    pub theta: f64,
    /// Printed `x` minus the inverse-map value.
    pub x: f64,
    /// Printed `y` minus the inverse-map value.
    pub y: f64,
    /// Printed `θ ã` minus `θ ã₁₁` from the pullback.
    pub theta_a: f64,
    pub tilde_b: [f64; 2],
    pub tilde_c: f64,
}

/// Compares at `(s, θ)` for `a = I`, `b = (b1, b2)`, `c`.
pub fn closed_form_deltas(b1: f64, b2: f64, c: f64, s: f64, theta: f64) -> Result<ClosedFormDeltas> {
    let cf = model2d_closed_form(b1, b2, c, s, theta);
    let cs = CoefficientSet::constant(DMatrix::identity(2, 2), DVector::from_row_slice(&[b1, b2]), c)?;
    let pb = pullback_coefficients(&cs, &[s, theta])?;
    let x = inverse_map(&[s, theta])?;
    Ok(ClosedFormDeltas {
        s,
        theta,
        x: cf.x - x[0],
        y: cf.y - x[1],
        theta_a: cf.theta_a - theta * pb.tilde_a[(0, 0)],
        tilde_b: [cf.tilde_b[0] - pb.tilde_b[0], cf.tilde_b[1] - pb.tilde_b[1]],
        tilde_c: cf.tilde_c - pb.tilde_c,
    })
}
