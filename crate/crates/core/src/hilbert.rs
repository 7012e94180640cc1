//! Hilbert projective metric on polyhedral cones and Birkhoff contraction
//! ratios.
//!
//! For a cone with inward facet normals `a`, the ratio bounds are
//! `M(x|y) = max_a a^T x / a^T y` and `m(x|y) = min_a a^T x / a^T y` taken
//! over facets with `a^T y > 0`; a facet with `a^T y = 0 < a^T x` sends `M`
//! to infinity.

use std::fmt;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::cone::{Inclusion, PolyhedralCone, Tolerances};
use crate::linalg::{SquareMatrix, Vector};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HilbertError {
    #[error("point is not in the cone (min facet margin {margin:.3e})")]
    NotInCone { margin: f64 },
    #[error("zero vector has no projective class")]
    ZeroVector,
    #[error("image of the source cone is not contained in the target cone")]
    ImageNotContained,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("contraction ratio must lie strictly between 0 and 1, got {0}")]
    InvalidGamma(f64),
}

/// A nonnegative extended real. Infinity is a variant of its own so it can
/// never be confused with a large finite value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Extended {
    Finite(f64),
    Infinite,
}

pub type ProjectiveDistance = Extended;

impl Extended {
    pub fn is_finite(self) -> bool {
        matches!(self, Extended::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Extended::Finite(v) => Some(v),
            Extended::Infinite => None,
        }
    }

    /// Lossy conversion, mapping infinity to `f64::INFINITY`.
    pub fn to_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }

    pub fn max(self, other: Extended) -> Extended {
        match (self, other) {
            (Extended::Finite(a), Extended::Finite(b)) => Extended::Finite(a.max(b)),
            _ => Extended::Infinite,
        }
    }
}

impl PartialOrd for Extended {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        self.to_f64().partial_cmp(&other.to_f64())
    }
}

impl fmt::Display for Extended {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Extended::Finite(v) => write!(f, "{v}"),
            Extended::Infinite => f.write_str("inf"),
        }
    }
}

/// Finite values serialize as JSON numbers, infinity as the string `"inf"`.
impl Serialize for Extended {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Extended::Finite(v) => s.serialize_f64(*v),
            Extended::Infinite => s.serialize_str("inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioBounds {
    /// `M(x|y)`.
    pub upper: Extended,
    /// `m(x|y)`.
    pub lower: f64,
}

fn check_member(k: &PolyhedralCone, x: &Vector, tol: f64) -> Result<(), HilbertError> {
    if x.len() != k.dim() {
        return Err(HilbertError::DimensionMismatch {
            expected: k.dim(),
            found: x.len(),
        });
    }
    if x.norm() == 0.0 {
        return Err(HilbertError::ZeroVector);
    }
    if !k.contains(x, tol) {
        return Err(HilbertError::NotInCone {
            margin: k.min_margin(x) / x.norm(),
        });
    }
    Ok(())
}

pub fn ratio_bounds(
    k: &PolyhedralCone,
    x: &Vector,
    y: &Vector,
    tol: f64,
) -> Result<RatioBounds, HilbertError> {
    check_member(k, x, tol)?;
    check_member(k, y, tol)?;
    let (nx, ny) = (x.norm(), y.norm());
    let mut upper = Extended::Finite(0.0);
    let mut lower = f64::INFINITY;
    for a in k.facets() {
        // Work with unit representatives so the zero test is scale-free.
        let ax = (a.dot(x) / nx).max(0.0);
        let ay = (a.dot(y) / ny).max(0.0);
        let ax = if ax <= tol { 0.0 } else { ax };
        let ay = if ay <= tol { 0.0 } else { ay };
        if ay == 0.0 {
            if ax > 0.0 {
                upper = Extended::Infinite;
            }
            continue;
        }
        let r = ax / ay;
        upper = upper.max(Extended::Finite(r));
        lower = lower.min(r);
    }
    if !lower.is_finite() {
        // no facet is positive on y: both points sit on the lineality of the facet system
        lower = 0.0;
    }
    let scale = nx / ny;
    Ok(RatioBounds {
        upper: match upper {
            Extended::Finite(u) => Extended::Finite(u * scale),
            Extended::Infinite => Extended::Infinite,
        },
        lower: lower * scale,
    })
}

/// Hilbert distance `log(M(x|y) / m(x|y))`.
pub fn distance(
    k: &PolyhedralCone,
    x: &Vector,
    y: &Vector,
    tol: f64,
) -> Result<ProjectiveDistance, HilbertError> {
    let b = ratio_bounds(k, x, y, tol)?;
    Ok(match b.upper {
        Extended::Finite(u) if b.lower > 0.0 => Extended::Finite((u / b.lower).ln().max(0.0)),
        _ => Extended::Infinite,
    })
}

/// Oscillation `M(x|y) - m(x|y)`.
pub fn oscillation(
    k: &PolyhedralCone,
    x: &Vector,
    y: &Vector,
    tol: f64,
) -> Result<Extended, HilbertError> {
    let b = ratio_bounds(k, x, y, tol)?;
    Ok(match b.upper {
        Extended::Finite(u) => Extended::Finite((u - b.lower).max(0.0)),
        Extended::Infinite => Extended::Infinite,
    })
}

/// Largest pairwise distance in `dst` among `rays`, assumed inside `dst`.
pub fn pairwise_diameter(dst: &PolyhedralCone, rays: &[Vector], tol: f64) -> Result<Extended, HilbertError> {
    let rays: Vec<&Vector> = rays.iter().filter(|r| r.norm() > 0.0).collect();
    let mut diam = Extended::Finite(0.0);
    for (i, x) in rays.iter().enumerate() {
        for y in &rays[i + 1..] {
            diam = diam.max(distance(dst, x, y, tol)?);
            if diam == Extended::Infinite {
                return Ok(diam);
            }
        }
    }
    Ok(diam)
}

/// Projective diameter of `A K_src` measured in the metric of `K_dst`.
///
/// The supremum over a polyhedral image is attained on its extreme rays, so
/// only the images of generators are compared. A non-strict inclusion yields
/// infinity.
pub fn projective_diameter(
    a: &SquareMatrix,
    src: &PolyhedralCone,
    dst: &PolyhedralCone,
    tols: &Tolerances,
) -> Result<Extended, HilbertError> {
    for d in [src.dim(), dst.dim()] {
        if d != a.dim() {
            return Err(HilbertError::DimensionMismatch {
                expected: a.dim(),
                found: d,
            });
        }
    }
    let images: Vec<Vector> = src.generators().iter().map(|g| a.apply(g)).collect();
    match dst.classify_rays(&images, tols).inclusion {
        Inclusion::No => Err(HilbertError::ImageNotContained),
        Inclusion::NonStrict => Ok(Extended::Infinite),
        Inclusion::Strict => pairwise_diameter(dst, &images, tols.tol),
    }
}

/// Birkhoff contraction ratio `tanh(D / 4)`; infinity maps to 1.
pub fn contraction_ratio(d: Extended) -> f64 {
    match d {
        Extended::Finite(v) => (v / 4.0).tanh(),
        Extended::Infinite => 1.0,
    }
}

/// Diameter bound `rho = exp(D)` matching a target ratio `gamma = tanh(D/4)`,
/// i.e. `((1 + gamma) / (1 - gamma))^2`.
pub fn rho_for_gamma(gamma: f64) -> Result<f64, HilbertError> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(HilbertError::InvalidGamma(gamma));
    }
    let r = (1.0 + gamma) / (1.0 - gamma);
    Ok(r * r)
}
