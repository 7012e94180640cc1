//! Polyhedral cones kept in both representations.
//!
//! A [`PolyhedralCone`] stores its extreme rays (generators) and its inward
//! facet normals, both normalized to unit length. Conversion between the two
//! goes through the double-description routine in [`dd`]; extreme-ray
//! redundancy is decided by the rank of the facets tight at each candidate.

mod dd;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{rank, SquareMatrix, Vector};
use crate::num::{to_f64_vec, LenientF64};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConeError {
    #[error("a cone needs at least one nonzero vector")]
    Empty,
    #[error("vector {index} is zero or non-finite")]
    InvalidVector { index: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("conic hull contains a line (cone is not pointed)")]
    NotPointed,
    #[error("inequality system has no interior point (cone is not solid)")]
    NotSolid,
    #[error("cone description must contain generators or facets")]
    MissingRepresentation,
}

/// Numerical thresholds shared by the geometric predicates. Both are
/// relative to the Euclidean norm of the tested vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Slack for membership and zero tests.
    pub tol: f64,
    /// Margin required for interior membership.
    pub strict_eps: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            strict_eps: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolyhedralCone {
    dim: usize,
    generators: Vec<Vector>,
    facets: Vec<Vector>,
    solid: bool,
}

fn normalized(vectors: &[Vector], dim: Option<usize>) -> Result<(usize, Vec<Vector>), ConeError> {
    let dim = match dim {
        Some(d) => d,
        None => vectors.first().ok_or(ConeError::Empty)?.len(),
    };
    let mut out = Vec::with_capacity(vectors.len());
    for (index, v) in vectors.iter().enumerate() {
        if v.len() != dim {
            return Err(ConeError::DimensionMismatch {
                expected: dim,
                found: v.len(),
            });
        }
        let n = v.norm();
        if !n.is_finite() || n == 0.0 || v.iter().any(|x| !x.is_finite()) {
            return Err(ConeError::InvalidVector { index });
        }
        out.push(v / n);
    }
    if out.is_empty() {
        return Err(ConeError::Empty);
    }
    Ok((dim, out))
}

/// Drops unit vectors that repeat an earlier direction.
fn dedup_directions(vectors: Vec<Vector>, tol: f64) -> Vec<Vector> {
    let mut out: Vec<Vector> = Vec::with_capacity(vectors.len());
    for v in vectors {
        if !out.iter().any(|u| (u - &v).norm() <= tol) {
            out.push(v);
        }
    }
    out
}

/// Zero threshold used inside the double-description sweep: looser than the
/// user tolerance so that accumulated rounding does not split a facet.
fn dd_eps(tol: f64) -> f64 {
    (tol * 10.0).max(1e-12)
}

/// Keeps the vectors whose tight set in `duals` has rank `dim - 1`. Nearly
/// parallel candidates can share a tight set; only the one closest to its
/// tight hyperplanes is kept.
fn extreme_subset(candidates: Vec<Vector>, duals: &[Vector], dim: usize, eps: f64) -> Vec<Vector> {
    if dim == 1 {
        return candidates.into_iter().take(1).collect();
    }
    let mut kept: Vec<(Vec<usize>, f64, Vector)> = Vec::new();
    for c in candidates {
        let tight: Vec<usize> = (0..duals.len()).filter(|&i| duals[i].dot(&c).abs() <= eps).collect();
        if tight.len() + 1 < dim || rank(tight.iter().map(|&i| &duals[i]), dim, eps) != dim - 1 {
            continue;
        }
        let residual: f64 = tight.iter().map(|&i| duals[i].dot(&c).abs()).sum();
        match kept.iter_mut().find(|k| k.0 == tight) {
            Some(k) if residual < k.1 => {
                k.1 = residual;
                k.2 = c;
            }
            Some(_) => {}
            None => kept.push((tight, residual, c)),
        }
    }
    kept.into_iter().map(|k| k.2).collect()
}

impl PolyhedralCone {
    /// Conic hull of `rays`, with redundant rays removed and facets computed.
    ///
    /// Lower-dimensional hulls are allowed: their facet list then contains
    /// both orientations of every normal to the linear span, and
    /// [`is_solid`](Self::is_solid) reports `false`.
    pub fn from_generators(rays: &[Vector], tol: f64) -> Result<Self, ConeError> {
        let (dim, rays) = normalized(rays, None)?;
        let rays = dedup_directions(rays, tol);
        let eps = dd_eps(tol);
        let dual = dd::extreme_rays(dim, &rays, eps);
        let mut facets = dual.rays;
        for l in &dual.lineality {
            facets.push(l.clone());
            facets.push(-l);
        }
        if rank(facets.iter(), dim, eps) < dim {
            return Err(ConeError::NotPointed);
        }
        let solid = dual.lineality.is_empty();
        let generators = extreme_subset(rays, &facets, dim, eps);
        if generators.is_empty() {
            return Err(ConeError::NotPointed);
        }
        Ok(Self {
            dim,
            generators,
            facets,
            solid,
        })
    }

    /// Cone `{x : a^T x >= 0}` for the given inward normals. The result must
    /// be solid and pointed.
    pub fn from_facets(normals: &[Vector], tol: f64) -> Result<Self, ConeError> {
        let (dim, normals) = normalized(normals, None)?;
        let normals = dedup_directions(normals, tol);
        let eps = dd_eps(tol);
        let primal = dd::extreme_rays(dim, &normals, eps);
        let spanned = rank(primal.rays.iter().chain(primal.lineality.iter()), dim, eps);
        if spanned < dim {
            return Err(ConeError::NotSolid);
        }
        if !primal.lineality.is_empty() {
            return Err(ConeError::NotPointed);
        }
        let generators = primal.rays;
        let facets = extreme_subset(normals, &generators, dim, eps);
        Ok(Self {
            dim,
            generators,
            facets,
            solid: true,
        })
    }

    /// Nonnegative orthant of dimension `n`.
    pub fn orthant(n: usize) -> Self {
        let e: Vec<Vector> = (0..n)
            .map(|i| Vector::from_fn(n, |j, _| if i == j { 1.0 } else { 0.0 }))
            .collect();
        Self {
            dim: n,
            generators: e.clone(),
            facets: e,
            solid: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generators(&self) -> &[Vector] {
        &self.generators
    }

    pub fn facets(&self) -> &[Vector] {
        &self.facets
    }

    pub fn is_solid(&self) -> bool {
        self.solid
    }

    /// Smallest facet value `a^T x` over all facets.
    pub fn min_margin(&self, x: &Vector) -> f64 {
        self.facets
            .iter()
            .map(|a| a.dot(x))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        self.min_margin(x) >= -tol * x.norm()
    }

    /// Interior membership with margin `strict_eps * |x|`; always false for
    /// the zero vector and for lower-dimensional cones.
    pub fn contains_interior(&self, x: &Vector, strict_eps: f64) -> bool {
        let n = x.norm();
        n > 0.0 && self.solid && self.min_margin(x) >= strict_eps * n
    }

    /// Classifies the cone spanned by `rays` against `self` as the outer cone.
    pub fn classify_rays(&self, rays: &[Vector], tols: &Tolerances) -> InclusionReport {
        let mut inclusion = Inclusion::Strict;
        let mut min_margin = f64::INFINITY;
        for (gi, g) in rays.iter().enumerate() {
            let n = g.norm();
            if n == 0.0 {
                continue;
            }
            let (fi, margin) = self
                .facets
                .iter()
                .enumerate()
                .map(|(fi, a)| (fi, a.dot(g) / n))
                .min_by(|x, y| x.1.total_cmp(&y.1))
                .expect("cones have at least one facet");
            min_margin = min_margin.min(margin);
            if margin < -tols.tol {
                return InclusionReport {
                    inclusion: Inclusion::No,
                    witness: Some(Witness {
                        generator_index: gi,
                        generator: g.clone(),
                        facet_index: fi,
                        facet: self.facets[fi].clone(),
                        margin,
                    }),
                    min_margin,
                };
            }
            if margin < tols.strict_eps || !self.solid {
                inclusion = Inclusion::NonStrict;
            }
        }
        if rays.iter().all(|g| g.norm() == 0.0) {
            inclusion = Inclusion::NonStrict;
        }
        InclusionReport {
            inclusion,
            witness: None,
            min_margin,
        }
    }

    /// How `inner` sits inside `self`.
    pub fn includes(&self, inner: &PolyhedralCone, tols: &Tolerances) -> InclusionReport {
        assert_eq!(self.dim, inner.dim, "cone dimensions differ");
        self.classify_rays(&inner.generators, tols)
    }

    /// Image `A K`, i.e. the conic hull of the mapped generators. Generators
    /// in the kernel of `A` are dropped.
    pub fn image(&self, a: &SquareMatrix, tol: f64) -> Result<Self, ConeError> {
        if a.dim() != self.dim {
            return Err(ConeError::DimensionMismatch {
                expected: self.dim,
                found: a.dim(),
            });
        }
        let imgs: Vec<Vector> = self
            .generators
            .iter()
            .map(|g| a.apply(g))
            .filter(|v| v.norm() > tol)
            .collect();
        Self::from_generators(&imgs, tol)
    }

    /// Whether the cone meets the hyperplane `w^T x = 0` outside the origin.
    pub fn meets_hyperplane(&self, w: &Vector, tol: f64) -> bool {
        let wn = w.norm();
        let mut pos = false;
        let mut neg = false;
        for g in &self.generators {
            let s = w.dot(g) / wn;
            if s.abs() <= tol {
                return true;
            }
            pos |= s > 0.0;
            neg |= s < 0.0;
        }
        pos && neg
    }

    /// Serializable form.
    pub fn to_record(&self) -> ConeRecord {
        ConeRecord {
            generators: self.generators.iter().map(|g| g.iter().copied().collect()).collect(),
            facets: self.facets.iter().map(|a| a.iter().copied().collect()).collect(),
        }
    }
}

/// Conic hull of the union of several cones.
pub fn hull_union(cones: &[PolyhedralCone], tol: f64) -> Result<PolyhedralCone, ConeError> {
    let first = cones.first().ok_or(ConeError::Empty)?;
    let mut rays = Vec::new();
    for c in cones {
        if c.dim != first.dim {
            return Err(ConeError::DimensionMismatch {
                expected: first.dim,
                found: c.dim,
            });
        }
        rays.extend(c.generators.iter().cloned());
    }
    PolyhedralCone::from_generators(&rays, tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Inclusion {
    No,
    NonStrict,
    Strict,
}

/// A generator of the inner cone violating a facet of the outer cone.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub generator_index: usize,
    #[serde(serialize_with = "crate::num::ser_vector")]
    pub generator: Vector,
    pub facet_index: usize,
    #[serde(serialize_with = "crate::num::ser_vector")]
    pub facet: Vector,
    /// Normalized facet value `a^T g / |g|` (negative).
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InclusionReport {
    pub inclusion: Inclusion,
    pub witness: Option<Witness>,
    /// Smallest normalized facet value seen before returning.
    pub min_margin: f64,
}

/// JSON form of a cone: `{"generators": [[...]], "facets": [[...]]}`. Either
/// array may be omitted on input; generators take precedence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConeRecord {
    pub generators: Vec<Vec<f64>>,
    pub facets: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ConeSpec {
    #[serde(default)]
    pub generators: Option<Vec<Vec<LenientF64>>>,
    #[serde(default)]
    pub facets: Option<Vec<Vec<LenientF64>>>,
}

impl ConeSpec {
    pub fn build(self, tol: f64) -> Result<PolyhedralCone, ConeError> {
        let to_vectors = |rows: Vec<Vec<LenientF64>>| -> Vec<Vector> {
            rows.into_iter()
                .map(|r| Vector::from_vec(to_f64_vec(r)))
                .collect()
        };
        match (self.generators, self.facets) {
            (Some(g), _) => PolyhedralCone::from_generators(&to_vectors(g), tol),
            (None, Some(f)) => PolyhedralCone::from_facets(&to_vectors(f), tol),
            (None, None) => Err(ConeError::MissingRepresentation),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    const TOL: f64 = 1e-9;

    fn same_directions(a: &[Vector], b: &[Vector]) -> bool {
        a.len() == b.len()
            && b.iter()
                .all(|v| a.iter().any(|u| (u - v.normalize()).norm() < 1e-8))
    }

    /// K0 = {x1 >= 0, |x2| <= x1}
    fn k0() -> PolyhedralCone {
        PolyhedralCone::from_generators(&[dvector![1.0, 1.0], dvector![1.0, -1.0]], TOL).unwrap()
    }

    /// K1 = {x1 >= 0, |x2| <= x1 / 4}
    fn k1() -> PolyhedralCone {
        PolyhedralCone::from_generators(&[dvector![4.0, 1.0], dvector![4.0, -1.0]], TOL).unwrap()
    }

    #[test]
    fn generators_to_facets() {
        let k = k0();
        assert!(same_directions(k.facets(), &[dvector![1.0, 1.0], dvector![1.0, -1.0]]));
        assert!(k.is_solid());
    }

    #[test]
    fn interior_ray_is_removed() {
        let k = PolyhedralCone::from_generators(
            &[dvector![1.0, 0.0], dvector![0.0, 1.0], dvector![1.0, 1.0]],
            TOL,
        )
        .unwrap();
        assert!(same_directions(k.generators(), &[dvector![1.0, 0.0], dvector![0.0, 1.0]]));
        assert!(same_directions(k.facets(), &[dvector![1.0, 0.0], dvector![0.0, 1.0]]));
    }

    #[test]
    fn line_is_not_pointed() {
        let e = PolyhedralCone::from_generators(&[dvector![1.0, 0.0], dvector![-1.0, 0.0]], TOL);
        assert_eq!(e, Err(ConeError::NotPointed));
        let e = PolyhedralCone::from_generators(
            &[dvector![1.0, 0.0, 0.0], dvector![-1.0, 1.0, 0.0], dvector![-1.0, -1.0, 0.0]],
            TOL,
        );
        assert_eq!(e, Err(ConeError::NotPointed));
    }

    #[test]
    fn facets_to_generators() {
        // Inward normals (1,1),(1,-1) cut out x1 >= |x2|, generated by (1,1),(1,-1).
        let k = PolyhedralCone::from_facets(&[dvector![1.0, 1.0], dvector![1.0, -1.0]], TOL).unwrap();
        assert!(same_directions(k.generators(), &[dvector![1.0, 1.0], dvector![1.0, -1.0]]));
        let o = PolyhedralCone::from_facets(
            &[dvector![1.0, 0.0, 0.0], dvector![0.0, 1.0, 0.0], dvector![0.0, 0.0, 1.0]],
            TOL,
        )
        .unwrap();
        assert!(same_directions(o.generators(), PolyhedralCone::orthant(3).generators()));
        let slab = PolyhedralCone::from_facets(&[dvector![1.0, 0.0], dvector![-1.0, 0.0]], TOL);
        assert_eq!(slab, Err(ConeError::NotSolid));
        let half = PolyhedralCone::from_facets(&[dvector![1.0, 0.0]], TOL);
        assert_eq!(half, Err(ConeError::NotPointed));
    }

    #[test]
    fn membership() {
        assert!(k1().contains_interior(&dvector![5.0, 1.0], 1e-7));
        let o = PolyhedralCone::orthant(2);
        assert!(o.contains(&dvector![1.0, 0.0], TOL));
        assert!(!o.contains_interior(&dvector![1.0, 0.0], 1e-7));
        assert!(!k0().contains(&dvector![1.0, 2.0], TOL));
        assert!(!o.contains_interior(&dvector![0.0, 0.0], 1e-7));
    }

    #[test]
    fn image_of_example_cone() {
        let a0 = SquareMatrix::diag(&[5.0, 1.0]);
        let img = k0().image(&a0, TOL).unwrap();
        assert!(same_directions(img.generators(), &[dvector![5.0, 1.0], dvector![5.0, -1.0]]));
        let id = k0().image(&SquareMatrix::identity(2), TOL).unwrap();
        assert!(same_directions(id.generators(), k0().generators()));
    }

    #[test]
    fn rank_deficient_image_is_a_half_line() {
        let img = PolyhedralCone::orthant(2)
            .image(&SquareMatrix::diag(&[1.0, 0.0]), TOL)
            .unwrap();
        assert!(!img.is_solid());
        assert_eq!(img.generators().len(), 1);
        assert!(img.contains(&dvector![3.0, 0.0], TOL));
        assert!(!img.contains(&dvector![3.0, 0.1], TOL));
    }

    #[test]
    fn inclusion_verdicts() {
        let tols = Tolerances::default();
        let a0 = SquareMatrix::diag(&[5.0, 1.0]);
        let img = k0().image(&a0, TOL).unwrap();
        assert_eq!(k1().includes(&img, &tols).inclusion, Inclusion::Strict);
        assert_eq!(k0().includes(&k0(), &tols).inclusion, Inclusion::NonStrict);
        assert_eq!(k0().includes(&k1(), &tols).inclusion, Inclusion::Strict);
        let rep = k1().includes(&k0(), &tols);
        assert_eq!(rep.inclusion, Inclusion::No);
        let w = rep.witness.unwrap();
        assert!(w.facet.dot(&w.generator) < 0.0);
        assert!(w.margin < 0.0);
    }

    #[test]
    fn hulls() {
        let h = hull_union(&[k0()], TOL).unwrap();
        assert!(same_directions(h.generators(), k0().generators()));
        let h = hull_union(&[k0(), k1()], TOL).unwrap();
        assert!(same_directions(h.generators(), k0().generators()));
        let neg = PolyhedralCone::from_generators(&[dvector![-1.0, 0.0], dvector![0.0, -1.0]], TOL)
            .unwrap();
        assert_eq!(
            hull_union(&[PolyhedralCone::orthant(2), neg], TOL),
            Err(ConeError::NotPointed)
        );
    }

    #[test]
    fn hyperplane_meeting() {
        let o = PolyhedralCone::orthant(2);
        assert!(!o.meets_hyperplane(&dvector![1.0, 1.0], TOL));
        assert!(o.meets_hyperplane(&dvector![1.0, -1.0], TOL));
        assert!(k0().meets_hyperplane(&dvector![0.0, 1.0], TOL));
        // touching along a generator counts
        assert!(o.meets_hyperplane(&dvector![1.0, 0.0], TOL));
    }

    #[test]
    fn cone_spec_parsing() {
        let spec: ConeSpec = serde_json::from_str(r#"{"generators": [[1, 1], ["1", "-1"]]}"#).unwrap();
        let k = spec.build(TOL).unwrap();
        assert!(same_directions(k.generators(), k0().generators()));
        let spec: ConeSpec = serde_json::from_str(r#"{"facets": [[1, 0], [0, 1]]}"#).unwrap();
        assert_eq!(spec.build(TOL).unwrap().generators().len(), 2);
        let spec: ConeSpec = serde_json::from_str("{}").unwrap();
        assert_eq!(spec.build(TOL), Err(ConeError::MissingRepresentation));
    }

    #[test]
    fn three_dimensional_pyramid() {
        let gens = vec![
            dvector![1.0, 1.0, 1.0],
            dvector![1.0, -1.0, 1.0],
            dvector![-1.0, 1.0, 1.0],
            dvector![-1.0, -1.0, 1.0],
            dvector![0.0, 0.0, 1.0],
            dvector![0.5, 0.2, 1.0],
        ];
        let k = PolyhedralCone::from_generators(&gens, TOL).unwrap();
        assert_eq!(k.generators().len(), 4);
        assert_eq!(k.facets().len(), 4);
        for g in &gens {
            assert!(k.contains(g, TOL));
        }
        let back = PolyhedralCone::from_facets(k.facets(), TOL).unwrap();
        assert!(same_directions(back.generators(), k.generators()));
    }
}
