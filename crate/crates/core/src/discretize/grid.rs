use serde::{Deserialize, Serialize};

use super::domain::DomainSpec;
use super::field::Field;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeTag {
    Interior,
    /// On the degenerate face `x_2 = 0`, away from Dirichlet faces.
    Degenerate,
    Dirichlet,
    /// Where the degenerate face meets a Dirichlet face. Carries Dirichlet data.
    Corner,
}

impl NodeTag {
    /// Rows that carry the prescribed boundary value.
    pub fn is_fixed(self) -> bool {
        matches!(self, NodeTag::Dirichlet | NodeTag::Corner)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NodeTag::Interior => "interior",
            NodeTag::Degenerate => "degenerate",
            NodeTag::Dirichlet => "dirichlet",
            NodeTag::Corner => "corner",
        }
    }
}

/// Tensor-product grid with node classification.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub domain: DomainSpec,
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    tags: Vec<NodeTag>,
}

/// Builds a grid with `n = [nx, ny]` nodes.
///
/// `stretch` is the ratio between consecutive `x_2` spacings, so values
/// above 1 cluster nodes toward `x_2 = 0`; `None` or `Some(1.0)` is uniform.
pub fn build_grid(dom: &DomainSpec, n: [usize; 2], stretch: Option<f64>) -> Result<Grid> {
    for (axis, &count) in n.iter().enumerate() {
        if count < 3 {
            return Err(Error::GridTooSmall(format!(
                "axis {axis} has {count} nodes, need at least 3"
            )));
        }
    }
    for (axis, [lo, hi]) in dom.bounds.iter().copied().enumerate() {
        if !(lo < hi) {
            return Err(Error::DegenerateBounds { axis, lo, hi });
        }
    }
    let ratio = stretch.unwrap_or(1.0);
    if !(ratio > 0.0 && ratio.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "grading ratio must be positive, got {ratio}"
        )));
    }
    let x1 = uniform(dom.bounds[0], n[0]);
    let x2 = if ratio == 1.0 {
        uniform(dom.bounds[1], n[1])
    } else {
        graded(dom.bounds[1], n[1], 1.0 / ratio)
    };
    let mut g = Grid {
        domain: *dom,
        x1,
        x2,
        tags: Vec::new(),
    };
    g.tags = (0..g.len()).map(|k| g.classify(k)).collect();
    Ok(g)
}

fn uniform([lo, hi]: [f64; 2], n: usize) -> Vec<f64> {
    let h = (hi - lo) / (n - 1) as f64;
    let mut v: Vec<f64> = (0..n).map(|i| lo + h * i as f64).collect();
    v[n - 1] = hi;
    v
}

/// Spacings shrink by `q` from top to bottom, so the finest cell touches `lo`.
fn graded([lo, hi]: [f64; 2], n: usize, q: f64) -> Vec<f64> {
    let cells = n - 1;
    // spacing k (from the bottom) is h0 / q^k
    let weights: Vec<f64> = (0..cells).map(|k| q.powi(-(k as i32))).collect();
    let total: f64 = weights.iter().sum();
    let mut v = Vec::with_capacity(n);
    let mut acc = lo;
    v.push(lo);
    for w in &weights[..cells - 1] {
        acc += (hi - lo) * w / total;
        v.push(acc);
    }
    v.push(hi);
    v
}

impl Grid {
    pub fn nx(&self) -> usize {
        self.x1.len()
    }

    pub fn ny(&self) -> usize {
        self.x2.len()
    }

    pub fn len(&self) -> usize {
        self.nx() * self.ny()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i + j * self.nx()
    }

    pub fn ij(&self, k: usize) -> (usize, usize) {
        (k % self.nx(), k / self.nx())
    }

    pub fn point(&self, k: usize) -> [f64; 2] {
        let (i, j) = self.ij(k);
        [self.x1[i], self.x2[j]]
    }

    pub fn tag(&self, k: usize) -> NodeTag {
        self.tags[k]
    }

    pub fn tags(&self) -> &[NodeTag] {
        &self.tags
    }

    /// Largest spacing over both axes.
    pub fn max_spacing(&self) -> f64 {
        let m = |v: &[f64]| v.windows(2).fold(0.0f64, |m, w| m.max(w[1] - w[0]));
        m(&self.x1).max(m(&self.x2))
    }

    /// Nodes not carrying Dirichlet data.
    pub fn unknowns(&self) -> Vec<usize> {
        (0..self.len()).filter(|&k| !self.tags[k].is_fixed()).collect()
    }

    pub fn count(&self, tag: NodeTag) -> usize {
        self.tags.iter().filter(|&&t| t == tag).count()
    }

    /// Evaluates `f` at every node.
    pub fn field(&self, f: impl Fn(&[f64]) -> f64) -> Field {
        Field((0..self.len()).map(|k| f(&self.point(k))).collect())
    }

    fn classify(&self, k: usize) -> NodeTag {
        let (i, j) = self.ij(k);
        let faces = self.domain.dirichlet;
        let on_side = (i == 0 && faces.left) || (i + 1 == self.nx() && faces.right);
        let on_top = j + 1 == self.ny() && faces.top;
        if j == 0 {
            if self.domain.has_degenerate_face() {
                return if on_side {
                    NodeTag::Corner
                } else {
                    NodeTag::Degenerate
                };
            }
            return NodeTag::Dirichlet;
        }
        if on_side || on_top {
            NodeTag::Dirichlet
        } else {
            NodeTag::Interior
        }
    }
}
