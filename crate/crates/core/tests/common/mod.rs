#![allow(dead_code)]

use degen::operator::{heston_coefficients, CoefficientSet, DeclaredBounds, HestonParams};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

pub fn heston() -> CoefficientSet {
    heston_coefficients(&HestonParams {
        sigma: 0.5,
        rho: -0.3,
        kappa: 2.0,
        theta: 0.3,
        r: 0.05,
        q: 0.0,
    })
    .unwrap()
}

/// Constant coefficients that assemble to an M-matrix on unit-aspect grids:
/// mild correlation, nonnegative normal drift, positive reaction.
pub fn monotone_constant() -> impl Strategy<Value = CoefficientSet> {
    (0.5..1.5f64, 0.5..1.5f64, -0.2..0.2f64, -0.5..0.5f64, 0.1..1.0f64, 0.05..1.0f64).prop_map(
        |(a11, a22, a12, b1, b2, c)| {
            CoefficientSet::constant(
                DMatrix::from_row_slice(2, 2, &[a11, a12, a12, a22]),
                DVector::from_row_slice(&[b1, b2]),
                c,
            )
            .unwrap()
            .with_bounds(DeclaredBounds {
                c0: Some(c),
                ..DeclaredBounds::default()
            })
        },
    )
}

pub fn values(n: usize, lo: f64, hi: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(lo..hi, n)
}
