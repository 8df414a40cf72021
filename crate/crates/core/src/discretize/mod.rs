//! Tensor-product grids on truncated slabs and boxes, node classification
//! and monotone finite-difference assembly.
//!
//! Only two-dimensional grids are supported. Node `(i, j)` has flat index
//! `i + j * nx`; `j = 0` is the bottom row.

mod csv_io;
mod domain;
mod field;
mod grid;
mod stencil;

pub use csv_io::{read_field_csv, write_field_csv, FieldRecord};
pub use domain::{DomainKind, DomainSpec, Face, FaceSet};
pub use field::Field;
pub use grid::{build_grid, Grid, NodeTag};
pub use stencil::{
    assemble_system, assemble_with, discrete_residual, monotonicity_check, AssemblyOptions,
    MonotonicityReport, RowViolation, StencilSystem, ViolationKind,
};
