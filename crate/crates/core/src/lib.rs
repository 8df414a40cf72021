//! Linear degenerate-elliptic boundary-value and obstacle problems on the
//! upper half-space, where the operator loses ellipticity on the flat face
//! `{x_d = 0}` and Dirichlet data is imposed only on the rest of the boundary.
//!
//! The crate covers the operator family and its Heston instance, the
//! half-ball to slab change of coordinates, monotone finite-difference
//! assembly on tensor grids, direct and iterative BVP solves, obstacle
//! problems (projected SOR, penalization), Perron-style patch sweeps and a
//! set of independent numerical oracles.
//!
//! ```
//! use degen::operator::{heston_coefficients, HestonParams};
//! use degen::discretize::{assemble_system, build_grid, DomainSpec};
//! use degen::bvp::{solve_bvp, BvpProblem, Method};
//!
//! let p = HestonParams { sigma: 0.5, rho: -0.3, kappa: 2.0, theta: 0.3, r: 0.05, q: 0.0 };
//! let cs = heston_coefficients(&p).unwrap();
//! let grid = build_grid(&DomainSpec::truncated_slab([-2.0, 2.0], 1.0), [17, 9], None).unwrap();
//! let sys = assemble_system(&cs, &grid).unwrap();
//! let f = grid.field(|_| 1.0);
//! let g = grid.field(|_| 0.0);
//! let u = solve_bvp(&BvpProblem::new(sys, f, g).unwrap(), Method::Direct, 1e-10, 1).unwrap();
//! assert!(u.iter().all(|v| v.is_finite()));
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bvp;
pub mod discretize;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod obstacle;
pub mod operator;
pub mod perron;
pub mod runner;
pub mod verification;

pub use error::{Error, Result};
