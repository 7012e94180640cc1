//! Incremental double-description conversion from an inequality system
//! `{x : a_i^T x >= 0}` to its extreme rays and lineality space.

use crate::linalg::Vector;

#[derive(Debug, Clone, PartialEq, Eq)]
struct BitSet(Vec<u64>);

impl BitSet {
    fn new(bits: usize) -> Self {
        BitSet(vec![0; bits.div_ceil(64).max(1)])
    }

    fn insert(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn and(&self, other: &BitSet) -> BitSet {
        BitSet(self.0.iter().zip(&other.0).map(|(a, b)| a & b).collect())
    }

    fn is_subset_of(&self, other: &BitSet) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a & !b == 0)
    }

    fn count(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }
}

#[derive(Debug, Clone)]
struct Ray {
    v: Vector,
    zeros: BitSet,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct DdResult {
    pub rays: Vec<Vector>,
    /// Orthonormal basis of the lineality space.
    pub lineality: Vec<Vector>,
}

fn unit(v: Vector) -> Vector {
    let n = v.norm();
    if n > 0.0 {
        v / n
    } else {
        v
    }
}

fn reorthonormalize(basis: &mut Vec<Vector>, eps: f64) {
    let mut out: Vec<Vector> = Vec::with_capacity(basis.len());
    for v in basis.drain(..) {
        let mut u = v;
        for _ in 0..2 {
            for b in &out {
                let c = b.dot(&u);
                u -= b * c;
            }
        }
        let n = u.norm();
        if n > eps {
            out.push(u / n);
        }
    }
    *basis = out;
}

/// Extreme rays and lineality of `{x in R^dim : a^T x >= 0 for a in constraints}`.
///
/// Constraints are assumed normalized; `eps` is the absolute threshold under
/// which `a^T r` counts as zero for a unit ray `r`.
///
/// Constraints are not inserted in input order. While a lineality space
/// remains, the constraint with the largest component in it goes first;
/// afterwards the constraint most violated by the current rays does. Nearly
/// parallel constraints then arrive almost satisfied and are absorbed
/// without creating rays, which keeps clustered input well conditioned.
pub(crate) fn extreme_rays(dim: usize, constraints: &[Vector], eps: f64) -> DdResult {
    let m = constraints.len();
    let mut lineality: Vec<Vector> = (0..dim)
        .map(|i| Vector::from_fn(dim, |j, _| if i == j { 1.0 } else { 0.0 }))
        .collect();
    let mut rays: Vec<Ray> = Vec::new();
    let mut done = BitSet::new(m);
    let mut remaining: Vec<usize> = (0..m).collect();

    while !remaining.is_empty() {
        let lineal_pick = remaining
            .iter()
            .enumerate()
            .map(|(pos, &k)| {
                let w = lineality.iter().map(|l| constraints[k].dot(l).powi(2)).sum::<f64>();
                (pos, w)
            })
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .filter(|(_, w)| w.sqrt() > eps);
        let pos = match lineal_pick {
            Some((pos, _)) => pos,
            None => {
                // The cone only shrinks from here on, so a constraint that
                // holds on every current ray is redundant for good and can be
                // dropped without recording it in any zero set.
                let worst: Vec<f64> = remaining
                    .iter()
                    .map(|&k| {
                        rays.iter()
                            .map(|r| constraints[k].dot(&r.v))
                            .fold(f64::INFINITY, f64::min)
                    })
                    .collect();
                let mut kept = Vec::with_capacity(remaining.len());
                let mut best: Option<(usize, f64)> = None;
                for (&k, &w) in remaining.iter().zip(&worst) {
                    if w >= -eps {
                        continue;
                    }
                    if best.is_none_or(|b| w < b.1) {
                        best = Some((kept.len(), w));
                    }
                    kept.push(k);
                }
                remaining = kept;
                match best {
                    Some((pos, _)) => pos,
                    None => break,
                }
            }
        };
        let k = remaining.swap_remove(pos);
        let a = &constraints[k];
        insert_constraint(dim, a, k, &done, &mut lineality, &mut rays, m, eps);
        done.insert(k);
    }

    DdResult {
        rays: rays.into_iter().map(|r| r.v).collect(),
        lineality,
    }
}

/// One double-description step: intersects the current cone with `a^T x >= 0`.
/// `done` holds the constraints processed so far.
#[allow(clippy::too_many_arguments)]
fn insert_constraint(
    dim: usize,
    a: &Vector,
    k: usize,
    done: &BitSet,
    lineality: &mut Vec<Vector>,
    rays: &mut Vec<Ray>,
    m: usize,
    eps: f64,
) {
    // A lineality direction not orthogonal to `a` becomes a ray; the
    // remaining directions and all rays are projected onto `a`-orthogonal.
    let pivot = lineality
        .iter()
        .enumerate()
        .map(|(i, l)| (i, a.dot(l)))
        .max_by(|x, y| x.1.abs().total_cmp(&y.1.abs()));
    if let Some((pi, pa)) = pivot.filter(|(_, pa)| pa.abs() > eps) {
        let mut l = lineality.swap_remove(pi);
        let mut al = pa;
        if al < 0.0 {
            l = -l;
            al = -al;
        }
        for lj in lineality.iter_mut() {
            let c = a.dot(lj) / al;
            *lj -= &l * c;
        }
        reorthonormalize(lineality, eps);
        for r in rays.iter_mut() {
            let c = a.dot(&r.v) / al;
            r.v = unit(&r.v - &l * c);
            r.zeros.insert(k);
        }
        let mut zeros = BitSet::new(m);
        zeros.0.copy_from_slice(&done.0);
        rays.push(Ray { v: unit(l), zeros });
        return;
    }

    let vals: Vec<f64> = rays.iter().map(|r| a.dot(&r.v)).collect();
    let pos: Vec<usize> = (0..rays.len()).filter(|&i| vals[i] > eps).collect();
    let neg: Vec<usize> = (0..rays.len()).filter(|&i| vals[i] < -eps).collect();
    let zer: Vec<usize> = (0..rays.len()).filter(|&i| vals[i].abs() <= eps).collect();
    if neg.is_empty() {
        for &i in &zer {
            rays[i].zeros.insert(k);
        }
        return;
    }

    let d = dim - lineality.len();
    let mut created: Vec<Ray> = Vec::new();
    for &p in &pos {
        for &q in &neg {
            let common = rays[p].zeros.and(&rays[q].zeros);
            if d >= 2 && common.count() + 2 < d {
                continue;
            }
            let blocked = rays
                .iter()
                .enumerate()
                .any(|(r, ray)| r != p && r != q && common.is_subset_of(&ray.zeros));
            if blocked {
                continue;
            }
            let v = &rays[q].v * vals[p] - &rays[p].v * vals[q];
            let mut zeros = common;
            zeros.insert(k);
            created.push(Ray { v: unit(v), zeros });
        }
    }

    let mut next: Vec<Ray> = Vec::with_capacity(pos.len() + zer.len() + created.len());
    for &i in &pos {
        next.push(rays[i].clone());
    }
    for &i in &zer {
        let mut r = rays[i].clone();
        r.zeros.insert(k);
        next.push(r);
    }
    next.extend(created);
    *rays = next;
}
