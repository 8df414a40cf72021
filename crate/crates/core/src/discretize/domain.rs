use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    /// `[lo, hi] × [0, ν]`, the bottom face is degenerate.
    TruncatedSlab,
    /// A box in the closed upper half-plane; the bottom face is degenerate
    /// only when it sits on `x_2 = 0` and is not listed as Dirichlet.
    Box,
    /// Slab coordinates `(w_1, w_2) ∈ [lo, hi] × [0, π/2]` of the unit
    /// half-ball; the top face is the image of the hemisphere.
    HalfBallViaSlab,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Face {
    Left,
    Right,
    Bottom,
    Top,
}

/// Faces carrying Dirichlet data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaceSet {
    pub left: bool,
    pub right: bool,
    pub bottom: bool,
    pub top: bool,
}

impl FaceSet {
    pub fn all() -> Self {
        Self {
            left: true,
            right: true,
            bottom: true,
            top: true,
        }
    }

    /// Left, right and top; the usual choice for slabs.
    pub fn sides_and_top() -> Self {
        Self {
            bottom: false,
            ..Self::all()
        }
    }

    pub fn contains(&self, face: Face) -> bool {
        match face {
            Face::Left => self.left,
            Face::Right => self.right,
            Face::Bottom => self.bottom,
            Face::Top => self.top,
        }
    }

    pub fn from_faces(faces: &[Face]) -> Self {
        let mut s = Self::default();
        for f in faces {
            match f {
                Face::Left => s.left = true,
                Face::Right => s.right = true,
                Face::Bottom => s.bottom = true,
                Face::Top => s.top = true,
            }
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub kind: DomainKind,
    /// `[[x1_lo, x1_hi], [x2_lo, x2_hi]]`.
    pub bounds: [[f64; 2]; 2],
    pub dirichlet: FaceSet,
}

impl DomainSpec {
    pub fn new(kind: DomainKind, bounds: [[f64; 2]; 2], dirichlet: FaceSet) -> Result<Self> {
        for (axis, [lo, hi]) in bounds.iter().copied().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::DegenerateBounds { axis, lo, hi });
            }
        }
        if !(dirichlet.left && dirichlet.right && dirichlet.top) {
            return Err(Error::InvalidParameter(
                "left, right and top faces must carry Dirichlet data".into(),
            ));
        }
        let [ylo, yhi] = bounds[1];
        match kind {
            DomainKind::TruncatedSlab | DomainKind::HalfBallViaSlab => {
                if ylo != 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "slab domains start at x_2 = 0, got {ylo}"
                    )));
                }
                if dirichlet.bottom {
                    return Err(Error::InvalidParameter(
                        "the degenerate face of a slab cannot carry Dirichlet data".into(),
                    ));
                }
                if kind == DomainKind::HalfBallViaSlab && yhi > std::f64::consts::FRAC_PI_2 {
                    return Err(Error::InvalidParameter(format!(
                        "half-ball slab height is at most π/2, got {yhi}"
                    )));
                }
            }
            DomainKind::Box => {
                if ylo < 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "box must lie in the closed upper half-plane, got x_2 >= {ylo}"
                    )));
                }
                if ylo > 0.0 && !dirichlet.bottom {
                    return Err(Error::InvalidParameter(
                        "a bottom face off x_2 = 0 must carry Dirichlet data".into(),
                    ));
                }
            }
        }
        Ok(Self {
            kind,
            bounds,
            dirichlet,
        })
    }

    /// `[lo, hi] × [0, height]` with Dirichlet data on the sides and top.
    pub fn truncated_slab(x1: [f64; 2], height: f64) -> Self {
        Self::new(
            DomainKind::TruncatedSlab,
            [x1, [0.0, height]],
            FaceSet::sides_and_top(),
        )
        .expect("valid slab bounds")
    }

    /// Slab image `[lo, hi] × [0, π/2]` of the half-ball, truncated in `w_1`.
    pub fn half_ball_via_slab(w1: [f64; 2]) -> Self {
        Self::new(
            DomainKind::HalfBallViaSlab,
            [w1, [0.0, std::f64::consts::FRAC_PI_2]],
            FaceSet::sides_and_top(),
        )
        .expect("valid slab bounds")
    }

    /// True when the bottom face is the degenerate boundary.
    pub fn has_degenerate_face(&self) -> bool {
        self.bounds[1][0] == 0.0 && !self.dirichlet.bottom
    }

    pub fn height(&self) -> f64 {
        self.bounds[1][1]
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == 2
            && (0..2).all(|k| x[k] >= self.bounds[k][0] && x[k] <= self.bounds[k][1])
    }
}
