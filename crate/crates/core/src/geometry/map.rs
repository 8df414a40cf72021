use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Distance below which a point counts as a corner of the half-ball.
pub const CORNER_TOLERANCE: f64 = 1e-9;

/// Distance from `x` to the corner sphere `{|x'| = 1, x_d = 0}`.
fn corner_distance(x: &[f64]) -> f64 {
    let d = x.len();
    let tangential: f64 = x[..d - 1].iter().map(|v| v * v).sum::<f64>().sqrt();
    (tangential - 1.0).hypot(x[d - 1])
}

fn check_admissible(x: &[f64]) -> Result<()> {
    let d = x.len();
    if d < 2 {
        return Err(Error::InvalidParameter(format!("dimension must be at least 2, got {d}")));
    }
    let norm2: f64 = x.iter().map(|v| v * v).sum();
    if x[d - 1] < 0.0 || norm2 > 1.0 + 1e-12 || x.iter().any(|v| !v.is_finite()) {
        return Err(Error::OutsideHalfBall(x.to_vec()));
    }
    if corner_distance(x) < CORNER_TOLERANCE {
        return Err(Error::CornerPoint {
            point: x.to_vec(),
            tolerance: CORNER_TOLERANCE,
        });
    }
    Ok(())
}

/// Half-ball to slab: `w_1 = ½ ln(((1-|x|²)² + 4x_d²)/|e_1 - x|⁴)`,
/// `w_d = arg(1 - |x|² + 2i x_d)`, `w_j = 2x_j/|e_1 - x|²` otherwise.
pub fn forward_map(x: &[f64]) -> Result<Vec<f64>> {
    check_admissible(x)?;
    let d = x.len();
    let xd = x[d - 1];
    let norm2: f64 = x.iter().map(|v| v * v).sum();
    let p = 1.0 - norm2;
    let q = norm2 - 2.0 * x[0] + 1.0;
    let r = p * p + 4.0 * xd * xd;
    let mut w = vec![0.0; d];
    w[0] = 0.5 * (r.ln() - 2.0 * q.ln());
    w[d - 1] = (2.0 * xd).atan2(p);
    for j in 1..d - 1 {
        w[j] = 2.0 * x[j] / q;
    }
    Ok(w)
}

/// Slab to half-ball. With `ξ_1 + iξ_d = e^{w_1 + i w_d}` and `ξ_j = w_j`,
/// `x_1 = (|ξ|² - 1)/|ξ + e_1|²` and `x_j = 2ξ_j/|ξ + e_1|²`; for `d = 2`
/// this is `z = (e^W - 1)/(e^W + 1)`.
pub fn inverse_map(w: &[f64]) -> Result<Vec<f64>> {
    let d = w.len();
    if d < 2 {
        return Err(Error::InvalidParameter(format!("dimension must be at least 2, got {d}")));
    }
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(format!("slab point {w:?} is not finite")));
    }
    let xi = xi_of(w);
    let norm2: f64 = xi.iter().map(|v| v * v).sum();
    let den = norm2 + 2.0 * xi[0] + 1.0;
    let mut x = vec![0.0; d];
    x[0] = (norm2 - 1.0) / den;
    for j in 1..d {
        x[j] = 2.0 * xi[j] / den;
    }
    Ok(x)
}

fn xi_of(w: &[f64]) -> Vec<f64> {
    let d = w.len();
    let e = w[0].exp();
    let mut xi = w.to_vec();
    xi[0] = e * w[d - 1].cos();
    xi[d - 1] = e * w[d - 1].sin();
    xi
}

/// `x_d / w_d` at slab point `w`, continuous up to `w_d = 0`.
pub fn height_ratio(w: &[f64]) -> f64 {
    let d = w.len();
    let wd = w[d - 1];
    let xi = xi_of(w);
    let norm2: f64 = xi.iter().map(|v| v * v).sum();
    let den = norm2 + 2.0 * xi[0] + 1.0;
    let sinc = if wd.abs() < 1e-8 { 1.0 - wd * wd / 6.0 } else { wd.sin() / wd };
    2.0 * w[0].exp() * sinc / den
}

/// First and second derivatives of the forward map at `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct MapDerivatives {
    /// `jacobian[(k, i)] = ∂w_k/∂x_i`.
    pub jacobian: DMatrix<f64>,
    /// `hessians[k][(i, j)] = ∂²w_k/∂x_i∂x_j`.
    pub hessians: Vec<DMatrix<f64>>,
}

fn delta(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        0.0
    }
}

/// Closed-form derivatives of [`forward_map`].
pub fn jacobian(x: &[f64]) -> Result<MapDerivatives> {
    check_admissible(x)?;
    let d = x.len();
    let dd = d - 1;
    let xd = x[dd];
    let norm2: f64 = x.iter().map(|v| v * v).sum();
    let p = 1.0 - norm2;
    let q = norm2 - 2.0 * x[0] + 1.0;
    let r = p * p + 4.0 * xd * xd;
    // ∂q/∂x_i and ∂R/∂x_i
    let dq: Vec<f64> = (0..d).map(|i| 2.0 * (x[i] - delta(i, 0))).collect();
    let dr: Vec<f64> = (0..d).map(|i| -4.0 * p * x[i] + 8.0 * xd * delta(i, dd)).collect();

    let mut jac = DMatrix::zeros(d, d);
    let mut hess = vec![DMatrix::zeros(d, d); d];

    // w_1 = ½ ln R - ln q
    for i in 0..d {
        let n_i = -2.0 * p * x[i] + 4.0 * xd * delta(i, dd);
        jac[(0, i)] = n_i / r - dq[i] / q;
        for k in 0..d {
            let dn = 4.0 * x[k] * x[i] - 2.0 * p * delta(i, k) + 4.0 * delta(k, dd) * delta(i, dd);
            let first = (dn * r - n_i * dr[k]) / (r * r);
            let second = 2.0 * delta(i, k) / q - dq[i] * dq[k] / (q * q);
            hess[0][(i, k)] = first - second;
        }
    }
    // w_d = arg(p + 2i x_d)
    for i in 0..d {
        let m_i = 2.0 * p * delta(i, dd) + 4.0 * xd * x[i];
        jac[(dd, i)] = m_i / r;
        for k in 0..d {
            let dm = -4.0 * x[k] * delta(i, dd) + 4.0 * delta(k, dd) * x[i] + 4.0 * xd * delta(i, k);
            hess[dd][(i, k)] = (dm * r - m_i * dr[k]) / (r * r);
        }
    }
    // w_j = 2 x_j / q
    for j in 1..dd {
        for i in 0..d {
            jac[(j, i)] = 2.0 * delta(i, j) / q - 2.0 * x[j] * dq[i] / (q * q);
            for k in 0..d {
                hess[j][(i, k)] = -2.0 * delta(i, j) * dq[k] / (q * q)
                    - 2.0 * (delta(j, k) * dq[i] + x[j] * 2.0 * delta(i, k)) / (q * q)
                    + 4.0 * x[j] * dq[i] * dq[k] / (q * q * q);
            }
        }
    }
    Ok(MapDerivatives {
        jacobian: jac,
        hessians: hess,
    })
}
