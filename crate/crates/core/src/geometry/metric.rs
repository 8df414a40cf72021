use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::discretize::{Field, Grid};
use crate::error::{Error, Result};

/// `s(x, y) = |x - y| / √(x_d + y_d + |x - y|)`.
pub fn cycloidal_distance(x: &[f64], y: &[f64]) -> f64 {
    let d = x.len();
    let dist = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    if dist == 0.0 {
        return 0.0;
    }
    dist / (x[d - 1] + y[d - 1] + dist).sqrt()
}

/// Pairs beyond which the seminorm is estimated from a fixed-seed sample.
pub const MAX_PAIRS: usize = 1_000_000;

/// `max |f(x) - f(y)| / s(x, y)^α` over distinct node pairs.
pub fn holder_seminorm(f: &Field, g: &Grid, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("exponent must lie in (0, 1), got {alpha}")));
    }
    let n = g.len();
    if f.len() != n {
        return Err(Error::ShapeMismatch {
            expected: n,
            got: f.len(),
        });
    }
    let pts: Vec<[f64; 2]> = (0..n).map(|k| g.point(k)).collect();
    seminorm_of_points(f, &pts, alpha)
}

/// Same as [`holder_seminorm`] for an arbitrary node set.
pub fn seminorm_of_points(f: &[f64], pts: &[[f64; 2]], alpha: f64) -> Result<f64> {
    let n = pts.len();
    if n < 2 {
        return Err(Error::SingleNode);
    }
    let ratio = |i: usize, j: usize| {
        let s = cycloidal_distance(&pts[i], &pts[j]);
        if s == 0.0 {
            0.0
        } else {
            (f[i] - f[j]).abs() / s.powf(alpha)
        }
    };
    let pairs = n * (n - 1) / 2;
    let mut best = 0.0f64;
    if pairs <= MAX_PAIRS {
        for i in 0..n {
            for j in i + 1..n {
                best = best.max(ratio(i, j));
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for _ in 0..MAX_PAIRS {
            let i = rng.random_range(0..n);
            let j = rng.random_range(0..n);
            if i != j {
                best = best.max(ratio(i, j));
            }
        }
    }
    Ok(best)
}
