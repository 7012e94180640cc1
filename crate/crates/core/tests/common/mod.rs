#![allow(dead_code)]

use conekit::cone::PolyhedralCone;
use conekit::linalg::{SquareMatrix, Vector};
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const TOL: f64 = 1e-9;

pub fn gaussian_vector(n: usize, rng: &mut ChaCha8Rng) -> Vector {
    // Box-Muller keeps the helpers on the rand core API.
    Vector::from_fn(n, |_, _| {
        let u: f64 = rng.gen_range(f64::EPSILON..1.0);
        let v: f64 = rng.gen_range(0.0..1.0);
        (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
    })
}

pub fn unit_vector(n: usize, rng: &mut ChaCha8Rng) -> Vector {
    loop {
        let v = gaussian_vector(n, rng);
        if v.norm() > 1e-3 {
            return v.normalize();
        }
    }
}

/// Generators scattered around a random axis with angular spread below a
/// right angle, so their hull is pointed; in dimension `n >= 2` at least `n`
/// of them are drawn, which makes the cone solid almost surely.
pub fn random_generators(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vector> {
    let axis = unit_vector(n, rng);
    let count = rng.gen_range(n..n + 5);
    let spread = rng.gen_range(0.2..1.5);
    (0..count)
        .map(|_| {
            let u = gaussian_vector(n, rng);
            let tangent = &u - &axis * axis.dot(&u);
            (&axis + tangent * (spread / (1.0 + u.norm()))).normalize()
        })
        .collect()
}

pub fn random_cone(n: usize, rng: &mut ChaCha8Rng) -> PolyhedralCone {
    PolyhedralCone::from_generators(&random_generators(n, rng), TOL).expect("generators are pointed")
}

/// Strictly positive combination of the generators.
pub fn interior_point(k: &PolyhedralCone, rng: &mut ChaCha8Rng) -> Vector {
    let n = k.dim();
    k.generators()
        .iter()
        .fold(Vector::zeros(n), |acc, g| acc + g * rng.gen_range(0.05..1.0))
}

/// Random subcone spanned by positive combinations of the generators.
pub fn random_subcone(k: &PolyhedralCone, rng: &mut ChaCha8Rng) -> PolyhedralCone {
    let n = k.dim();
    let gens: Vec<Vector> = (0..n + 2).map(|_| interior_point(k, rng)).collect();
    PolyhedralCone::from_generators(&gens, TOL).expect("subcone of a pointed cone is pointed")
}

pub fn gaussian_matrix(n: usize, rng: &mut ChaCha8Rng) -> SquareMatrix {
    let g = gaussian_vector(n * n, rng);
    SquareMatrix::new(DMatrix::from_fn(n, n, |i, j| g[i * n + j])).unwrap()
}

pub fn positive_matrix(n: usize, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> SquareMatrix {
    SquareMatrix::new(DMatrix::from_fn(n, n, |_, _| rng.gen_range(lo..hi))).unwrap()
}

/// True when the two sets of rays agree up to positive scaling and order.
pub fn same_rays(a: &[Vector], b: &[Vector], tol: f64) -> bool {
    let covered = |xs: &[Vector], ys: &[Vector]| {
        xs.iter()
            .all(|x| ys.iter().any(|y| (x.normalize() - y.normalize()).norm() <= tol))
    };
    a.len() == b.len() && covered(a, b) && covered(b, a)
}
