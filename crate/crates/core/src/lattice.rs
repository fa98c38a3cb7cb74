//! Mixed-integer lattices: orthogonal representations, covering radii and
//! closest-vector queries.
//!
//! A mixed lattice is the set `{Ez + Fy : z integer, y real}`. Its covering
//! radius only depends on the lattice generated by the integer part once the
//! continuous part has been projected out, so every radius computation here
//! starts from the orthogonal representation.
//!
//! Rational generator data is kept exact through orthogonalization and all
//! Gram-matrix reductions; norms drop to `f64` at the very end (with a 1e-12
//! slack added to certified upper bounds).

use nalgebra::{DMatrix, DVector};

use crate::error::{ProxError, Result};
use crate::rational::{self, Rat, RatMat};
use num_traits::{Signed, ToPrimitive, Zero};

/// Method that produced a covering radius value or bracket.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoveringMethod {
    /// Mutually orthogonal basis: exact `½√Σ‖bᵢ‖²`.
    OrthogonalBox,
    /// Two-dimensional Delaunay-circumcenter value via an obtuse superbase.
    ObtuseSuperbase2d,
    /// Certified bracket; upper endpoint is the nearest-plane bound
    /// `½√Σ‖b*ᵢ‖²` on a size-reduced basis.
    NearestPlaneUpper,
}

/// Covering radius of a full-dimensional mixed lattice, exact or bracketed.
#[derive(Debug, Clone)]
pub struct CoveringRadius {
    pub lower: f64,
    pub upper: f64,
    pub exact: bool,
    pub method: CoveringMethod,
    /// Exact squared value when the method is exact and the generators were
    /// rational. Used by bound formulas that need exact arithmetic.
    pub exact_sq: Option<Rat>,
}

impl CoveringRadius {
    fn exact_value(sq: Rat, method: CoveringMethod) -> Self {
        let v = rational::to_f64(&sq).sqrt();
        CoveringRadius { lower: v, upper: v, exact: true, method, exact_sq: Some(sq) }
    }
}

/// A lattice point reported by closest-vector queries: `point = Ez + Fy`.
#[derive(Debug, Clone)]
pub struct LatticePoint {
    pub z: Vec<i64>,
    pub y: Vec<f64>,
    pub point: Vec<f64>,
    pub distance: f64,
}

/// Result of an ellipsoid lattice-point query.
#[derive(Debug, Clone)]
pub struct EllipsoidQuery {
    pub contains: bool,
    pub witness: Option<LatticePoint>,
}

/// Mixed-integer lattice `L(E, F)` with rational generators.
#[derive(Debug, Clone)]
pub struct MixedLattice {
    e: RatMat,
    f: RatMat,
}

impl MixedLattice {
    /// Build a mixed lattice; the columns of `[E F]` must be linearly
    /// independent.
    pub fn new(e: RatMat, f: RatMat) -> Result<Self> {
        if e.rows != f.rows && f.cols != 0 {
            return Err(ProxError::InvalidLattice("E and F row counts differ".into()));
        }
        let m = e.rows;
        let total = e.cols + f.cols;
        if total == 0 || total > m {
            return Err(ProxError::InvalidLattice(format!(
                "need 1 <= n1+n2 <= m, got n1+n2={total}, m={m}"
            )));
        }
        let mut stacked = RatMat::zeros(m, total);
        for i in 0..m {
            for j in 0..e.cols {
                stacked[(i, j)] = e[(i, j)].clone();
            }
            for j in 0..f.cols {
                stacked[(i, e.cols + j)] = f[(i, j)].clone();
            }
        }
        if stacked.rank() != total {
            return Err(ProxError::InvalidLattice("columns of [E F] are dependent".into()));
        }
        Ok(MixedLattice { e, f })
    }

    /// Pure integer lattice (no continuous generators).
    pub fn integer(e: RatMat) -> Result<Self> {
        let rows = e.rows;
        Self::new(e, RatMat::zeros(rows, 0))
    }

    /// Standard lattice Zⁿ.
    pub fn standard(n: usize) -> Self {
        Self::integer(RatMat::identity(n)).expect("identity basis")
    }

    pub fn ambient_dim(&self) -> usize {
        self.e.rows
    }

    pub fn n_integer(&self) -> usize {
        self.e.cols
    }

    pub fn n_continuous(&self) -> usize {
        self.f.cols
    }

    pub fn is_full_dimensional(&self) -> bool {
        self.e.cols + self.f.cols == self.e.rows
    }

    pub fn e(&self) -> &RatMat {
        &self.e
    }

    pub fn f(&self) -> &RatMat {
        &self.f
    }

    /// Orthogonal representation `(E′, F)` with `L(E′,F) = L(E,F)` and the
    /// columns of `E′` orthogonal to the column space of `F`.
    ///
    /// `E′ = E − F(FᵀF)⁻¹FᵀE`; subtracting any `F`-combination from the
    /// integer generators leaves the mixed lattice unchanged.
    pub fn orthogonal_representation(&self) -> Self {
        if self.f.cols == 0 || self.e.cols == 0 {
            return self.clone();
        }
        let ftf = self.f.gram();
        let w = ftf
            .inverse()
            .expect("FᵀF invertible for independent columns")
            .mul(&self.f.transpose())
            .mul(&self.e);
        let mut ep = self.e.clone();
        for i in 0..ep.rows {
            for j in 0..ep.cols {
                let corr = rational::dot(&self.f.row(i), &w.col(j));
                ep[(i, j)] -= corr;
            }
        }
        MixedLattice { e: ep, f: self.f.clone() }
    }

    /// Covering radius. Exact when the projected integer basis is orthogonal
    /// or at most two-dimensional; otherwise a certified bracket.
    pub fn covering_radius(&self) -> Result<CoveringRadius> {
        if !self.is_full_dimensional() {
            return Err(ProxError::InvalidLattice(
                "covering radius requires a full-dimensional lattice".into(),
            ));
        }
        if self.n_integer() == 0 {
            // Continuous generators span the space: everything is covered.
            return Ok(CoveringRadius::exact_value(Rat::zero(), CoveringMethod::OrthogonalBox));
        }
        let orth = self.orthogonal_representation();
        let gram = orth.e.gram();
        Ok(covering_radius_from_gram(gram))
    }

    /// Exact closest lattice point to `target` under the Euclidean norm.
    /// Ties are broken lexicographically on the integer coordinate vector.
    pub fn closest_point(&self, target: &[f64]) -> Result<LatticePoint> {
        if target.len() != self.ambient_dim() {
            return Err(ProxError::InvalidInput("target dimension mismatch".into()));
        }
        let orth = self.orthogonal_representation();
        let t = DVector::from_column_slice(target);

        // Continuous part: fitted exactly, independently of z thanks to
        // orthogonality.
        let (y_star, residual) = if self.f.cols > 0 {
            let f64f = self.f.to_f64();
            let ftf = &f64f.transpose() * &f64f;
            let rhs = f64f.transpose() * &t;
            let y = crate::linalg::solve(&ftf, &rhs)
                .ok_or_else(|| ProxError::InvalidLattice("FᵀF singular".into()))?;
            let r = &t - &f64f * &y;
            (y, r)
        } else {
            (DVector::zeros(0), t.clone())
        };

        if self.n_integer() == 0 {
            let f64f = self.f.to_f64();
            let point = &f64f * &y_star;
            let distance = (&t - &point).norm();
            return Ok(LatticePoint {
                z: vec![],
                y: y_star.as_slice().to_vec(),
                point: point.as_slice().to_vec(),
                distance,
            });
        }

        // Size-reduce the integer basis (exact Gram ops), then enumerate.
        let gram = orth.e.gram();
        let (_, transform) = reduce_gram(gram);
        let n1 = self.n_integer();
        let trans_i64: Vec<Vec<i64>> = (0..n1)
            .map(|i| {
                (0..n1)
                    .map(|j| rational::to_f64(&transform[(i, j)]).round() as i64)
                    .collect()
            })
            .collect();
        let basis = orth.e.to_f64() * transform.to_f64();
        // Ties resolve lexicographically on the coordinates w.r.t. the
        // original generators, so map candidates back before comparing.
        let to_original =
            |zr: &[i64]| -> Vec<i64> {
                (0..n1)
                    .map(|i| (0..n1).map(|j| trans_i64[i][j] * zr[j]).sum())
                    .collect()
            };
        let (z, dist) = closest_vector(&basis, &residual, &to_original);

        // point = E z + F y with y adjusted back to the original generators.
        let ef = self.e.to_f64();
        let mut point = DVector::zeros(self.ambient_dim());
        for (j, &zj) in z.iter().enumerate() {
            point += ef.column(j) * zj as f64;
        }
        let y_out = if self.f.cols > 0 {
            let f64f = self.f.to_f64();
            let ftf = &f64f.transpose() * &f64f;
            let rhs = f64f.transpose() * (&t - &point);
            let y = crate::linalg::solve(&ftf, &rhs).expect("FᵀF invertible");
            point += &f64f * &y;
            y
        } else {
            DVector::zeros(0)
        };
        Ok(LatticePoint {
            z,
            y: y_out.as_slice().to_vec(),
            point: point.as_slice().to_vec(),
            distance: dist,
        })
    }

    /// Does the ellipsoid `‖Ex + Fy − p‖ ≤ r` (lattice coordinates) contain a
    /// lattice point? Decided exactly by closest-vector enumeration; the
    /// covering radius gives the quick yes when `r` clears the upper bound.
    pub fn contains_in_ellipsoid(&self, center: &[f64], r: f64) -> Result<EllipsoidQuery> {
        let nearest = self.closest_point(center)?;
        let contains = nearest.distance <= r + 1e-12;
        Ok(EllipsoidQuery { contains, witness: contains.then_some(nearest) })
    }
}

/// Covering radius from the exact Gram matrix of a (projected) basis.
fn covering_radius_from_gram(gram: RatMat) -> CoveringRadius {
    let n = gram.rows;
    if is_diagonal(&gram) {
        let sq: Rat = (0..n).map(|i| gram[(i, i)].clone()).sum::<Rat>() / rational::rint(4);
        return CoveringRadius::exact_value(sq, CoveringMethod::OrthogonalBox);
    }
    if n == 2 {
        let (g, _) = reduce_gram(gram);
        let a = g[(0, 0)].clone();
        let b = g[(1, 1)].clone();
        let c = &a + rational::rint(2) * &g[(0, 1)] + &b;
        let det = &a * &b - &g[(0, 1)] * &g[(0, 1)];
        let sq = &a * &b * &c / (rational::rint(4) * det);
        return CoveringRadius::exact_value(sq, CoveringMethod::ObtuseSuperbase2d);
    }
    let (g, _) = reduce_gram(gram);
    if is_diagonal(&g) {
        let sq: Rat = (0..n).map(|i| g[(i, i)].clone()).sum::<Rat>() / rational::rint(4);
        return CoveringRadius::exact_value(sq, CoveringMethod::OrthogonalBox);
    }
    let (b2, _) = gram_schmidt(&g);
    let upper_sq: Rat = b2.iter().cloned().sum::<Rat>() / rational::rint(4);
    let lower_sq = b2.last().unwrap() / rational::rint(4);
    CoveringRadius {
        lower: rational::to_f64(&lower_sq).sqrt(),
        upper: rational::to_f64(&upper_sq).sqrt() + 1e-12,
        exact: false,
        method: CoveringMethod::NearestPlaneUpper,
        exact_sq: None,
    }
}

fn is_diagonal(g: &RatMat) -> bool {
    (0..g.rows).all(|i| (0..i).all(|j| g[(i, j)].is_zero()))
}

/// Gram–Schmidt data from a Gram matrix: squared orthogonal norms `‖b*ᵢ‖²`
/// and the `μ` coefficients (row i, column j < i), all exact.
fn gram_schmidt(g: &RatMat) -> (Vec<Rat>, Vec<Vec<Rat>>) {
    let n = g.rows;
    let mut b2 = vec![Rat::zero(); n];
    let mut mu = vec![vec![Rat::zero(); n]; n];
    for i in 0..n {
        for j in 0..i {
            let mut acc = g[(i, j)].clone();
            for k in 0..j {
                acc -= &mu[i][k] * &mu[j][k] * &b2[k];
            }
            mu[i][j] = acc / &b2[j];
        }
        let mut s = g[(i, i)].clone();
        for k in 0..i {
            s -= &mu[i][k] * &mu[i][k] * &b2[k];
        }
        b2[i] = s;
    }
    (b2, mu)
}

/// Size reduction (Lagrange/Gauss in 2D, iterated sweeps otherwise) on an
/// exact Gram matrix. Returns the reduced Gram and the unimodular column
/// transform `T` with `G_red = Tᵀ G T`.
fn reduce_gram(mut g: RatMat) -> (RatMat, RatMat) {
    let n = g.rows;
    let mut t = RatMat::identity(n);
    if n == 2 {
        loop {
            if g[(0, 0)] > g[(1, 1)] {
                swap_cols(&mut g, &mut t, 0, 1);
            }
            let k = rational::round_rat(&(&g[(0, 1)] / &g[(0, 0)]));
            if k.is_zero() {
                break;
            }
            combine(&mut g, &mut t, 1, 0, &Rat::from_integer(k));
        }
        if g[(0, 0)] > g[(1, 1)] {
            swap_cols(&mut g, &mut t, 0, 1);
        }
        if g[(0, 1)].is_positive() {
            negate_col(&mut g, &mut t, 1);
        }
        return (g, t);
    }
    for _ in 0..32 {
        let mut changed = false;
        let (_, mu) = gram_schmidt(&g);
        for i in 1..n {
            for j in (0..i).rev() {
                let k = rational::round_rat(&mu[i][j]);
                if !k.is_zero() {
                    combine(&mut g, &mut t, i, j, &Rat::from_integer(k));
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    (g, t)
}

/// Apply `b_i ← b_i − k·b_j` to a Gram matrix and the running transform.
fn combine(g: &mut RatMat, t: &mut RatMat, i: usize, j: usize, k: &Rat) {
    let n = g.rows;
    for l in 0..n {
        if l != i {
            let v = &g[(i, l)] - k * &g[(j, l)];
            g[(i, l)] = v.clone();
            g[(l, i)] = v;
        }
    }
    let gii = &g[(i, i)] - rational::rint(2) * k * &g[(i, j)] - k * k * &g[(j, j)];
    // note: g[(i, j)] above is already the updated off-diagonal entry
    g[(i, i)] = gii;
    for r in 0..n {
        let v = &t[(r, i)] - k * &t[(r, j)];
        t[(r, i)] = v;
    }
}

fn swap_cols(g: &mut RatMat, t: &mut RatMat, i: usize, j: usize) {
    let n = g.rows;
    for r in 0..n {
        let (a, b) = (g[(r, i)].clone(), g[(r, j)].clone());
        g[(r, i)] = b;
        g[(r, j)] = a;
    }
    for c in 0..n {
        let (a, b) = (g[(i, c)].clone(), g[(j, c)].clone());
        g[(i, c)] = b;
        g[(j, c)] = a;
    }
    for r in 0..t.rows {
        let (a, b) = (t[(r, i)].clone(), t[(r, j)].clone());
        t[(r, i)] = b;
        t[(r, j)] = a;
    }
}

fn negate_col(g: &mut RatMat, t: &mut RatMat, i: usize) {
    let n = g.rows;
    for l in 0..n {
        if l != i {
            let v = -g[(i, l)].clone();
            g[(i, l)] = v.clone();
            g[(l, i)] = v;
        }
    }
    for r in 0..t.rows {
        let v = -t[(r, i)].clone();
        t[(r, i)] = v;
    }
}

/// Exact closest vector in the lattice spanned by the columns of `basis` to
/// `target`, by depth-first sphere enumeration seeded with the nearest-plane
/// point. Ties within 1e-12 resolve to the lexicographically smallest
/// coefficient vector after mapping through `to_original`.
fn closest_vector(
    basis: &DMatrix<f64>,
    target: &DVector<f64>,
    to_original: &dyn Fn(&[i64]) -> Vec<i64>,
) -> (Vec<i64>, f64) {
    let n = basis.ncols();
    // Gram–Schmidt in f64.
    let mut bstar: Vec<DVector<f64>> = Vec::with_capacity(n);
    let mut mu = vec![vec![0.0; n]; n];
    for i in 0..n {
        let mut v = basis.column(i).clone_owned();
        for j in 0..i {
            mu[i][j] = basis.column(i).dot(&bstar[j]) / bstar[j].norm_squared();
            v -= &bstar[j] * mu[i][j];
        }
        bstar.push(v);
    }
    let b2: Vec<f64> = bstar.iter().map(|v| v.norm_squared()).collect();

    // Target coordinates in the basis.
    let gram = basis.transpose() * basis;
    let coords = crate::linalg::solve(&gram, &(basis.transpose() * target))
        .expect("basis columns independent");

    // Babai nearest-plane start for the initial radius.
    let mut z_babai = vec![0i64; n];
    {
        let mut c = coords.clone();
        for i in (0..n).rev() {
            let zi = c[i].round();
            z_babai[i] = zi as i64;
            let d = zi - coords[i];
            for j in 0..i {
                c[j] -= mu[i][j] * d;
            }
        }
    }
    let babai_point: DVector<f64> = {
        let mut p = DVector::zeros(basis.nrows());
        for (i, &zi) in z_babai.iter().enumerate() {
            p += basis.column(i) * zi as f64;
        }
        p
    };
    let start_d2 = (target - babai_point).norm_squared();
    let mut radius2 = start_d2 * (1.0 + 1e-12) + 1e-12;
    let mut candidates: Vec<(f64, Vec<i64>)> = vec![(start_d2, z_babai)];

    // Depth-first enumeration over levels n-1 .. 0. `shifts[i]` carries the
    // effective target coordinate at level i given the fixed z_{i+1..}.
    #[allow(clippy::too_many_arguments)]
    fn descend(
        level: isize,
        partial: f64,
        shifts: &[f64],
        mu: &[Vec<f64>],
        b2: &[f64],
        coords: &DVector<f64>,
        z: &mut Vec<i64>,
        radius2: &mut f64,
        candidates: &mut Vec<(f64, Vec<i64>)>,
    ) {
        if level < 0 {
            candidates.push((partial, z.clone()));
            let slack = 1e-12 * (1.0 + partial) + 1e-12;
            if partial + slack < *radius2 {
                *radius2 = partial + slack;
            }
            return;
        }
        let i = level as usize;
        let center = shifts[i];
        let z0 = center.round() as i64;
        for step in 0..1_000i64 {
            let mut any = false;
            for &cand in &[z0 - step, z0 + step] {
                if step == 0 && cand != z0 {
                    continue;
                }
                let diff = cand as f64 - center;
                let d = partial + diff * diff * b2[i];
                if d <= *radius2 {
                    any = true;
                    z[i] = cand;
                    let mut new_shifts = shifts.to_vec();
                    for j in 0..i {
                        new_shifts[j] -= mu[i][j] * (cand as f64 - coords[i]);
                    }
                    descend(level - 1, d, &new_shifts, mu, b2, coords, z, radius2, candidates);
                }
            }
            if !any && step > 0 {
                break;
            }
        }
    }

    let shifts: Vec<f64> = coords.as_slice().to_vec();
    let mut z = vec![0i64; n];
    descend(
        n as isize - 1,
        0.0,
        &shifts,
        &mu,
        &b2,
        &coords,
        &mut z,
        &mut radius2,
        &mut candidates,
    );

    let best_d2 = candidates.iter().map(|(d, _)| *d).fold(f64::INFINITY, f64::min);
    let tie = 1e-12 * (1.0 + best_d2);
    let best = candidates
        .iter()
        .filter(|(d, _)| *d <= best_d2 + tie)
        .map(|(_, zr)| to_original(zr))
        .min()
        .expect("at least the Babai candidate");
    (best, best_d2.max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rint};

    fn ratmat(rows: &[&[i64]]) -> RatMat {
        RatMat::from_i64_rows(rows)
    }

    #[test]
    fn orthogonal_representation_example() {
        // E = [1;0], F = [1;1] -> E' = [1/2; -1/2]
        let lat = MixedLattice::new(ratmat(&[&[1], &[0]]), ratmat(&[&[1], &[1]])).unwrap();
        let orth = lat.orthogonal_representation();
        assert_eq!(orth.e()[(0, 0)], rat(1, 2));
        assert_eq!(orth.e()[(1, 0)], rat(-1, 2));
        assert_eq!(orth.f()[(0, 0)], rint(1));
    }

    #[test]
    fn orthogonal_representation_noop_cases() {
        let lat = MixedLattice::integer(ratmat(&[&[1], &[0]])).unwrap();
        let orth = lat.orthogonal_representation();
        assert_eq!(orth.e(), lat.e());

        let lat = MixedLattice::new(ratmat(&[&[0], &[1]]), ratmat(&[&[1], &[0]])).unwrap();
        let orth = lat.orthogonal_representation();
        assert_eq!(orth.e()[(0, 0)], rint(0));
        assert_eq!(orth.e()[(1, 0)], rint(1));
    }

    #[test]
    fn rank_deficiency_rejected() {
        let err = MixedLattice::new(ratmat(&[&[1], &[1]]), ratmat(&[&[2], &[2]]));
        assert!(matches!(err, Err(ProxError::InvalidLattice(_))));
    }

    #[test]
    fn covering_radius_standard() {
        for n in 1..=8 {
            let mu = MixedLattice::standard(n).covering_radius().unwrap();
            assert!(mu.exact);
            assert!((mu.upper - (n as f64).sqrt() / 2.0).abs() < 1e-14, "n={n}");
        }
    }

    #[test]
    fn covering_radius_mixed_example() {
        let lat = MixedLattice::new(ratmat(&[&[1], &[0]]), ratmat(&[&[1], &[1]])).unwrap();
        let mu = lat.covering_radius().unwrap();
        assert!(mu.exact);
        assert!((mu.upper - 1.0 / (2.0 * 2.0f64.sqrt())).abs() < 1e-13);
    }

    #[test]
    fn covering_radius_stretched_diagonal() {
        for n in [4i64, 8] {
            let e = RatMat::from_rows(vec![
                vec![rint(1), rint(0)],
                vec![rint(0), rint(n)],
            ]);
            let mu = MixedLattice::integer(e).unwrap().covering_radius().unwrap();
            let expect = ((1 + n * n) as f64).sqrt() / 2.0;
            assert!((mu.upper - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn closest_point_examples() {
        let z2 = MixedLattice::standard(2);
        let p = z2.closest_point(&[0.6, 0.1]).unwrap();
        assert_eq!(p.z, vec![1, 0]);
        assert!((p.distance - 0.17f64.sqrt()).abs() < 1e-12);

        // Tie: (0.5, 0) is equidistant from (0,0) and (1,0).
        let p = z2.closest_point(&[0.5, 0.0]).unwrap();
        assert_eq!(p.z, vec![0, 0]);
        assert!((p.distance - 0.5).abs() < 1e-12);

        let lat = MixedLattice::new(ratmat(&[&[1], &[0]]), ratmat(&[&[1], &[1]])).unwrap();
        let p = lat.closest_point(&[0.5, 0.0]).unwrap();
        assert!((p.distance - 1.0 / (2.0 * 2.0f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn ellipsoid_queries() {
        let z2 = MixedLattice::standard(2);
        let q = z2.contains_in_ellipsoid(&[0.5, 0.5], 2.0f64.sqrt() / 2.0).unwrap();
        assert!(q.contains);
        assert_eq!(q.witness.unwrap().z, vec![0, 0]);
        let q = z2.contains_in_ellipsoid(&[0.5, 0.5], 0.5).unwrap();
        assert!(!q.contains);

        let z3 = MixedLattice::standard(3);
        let q = z3.contains_in_ellipsoid(&[0.2, 0.2, 0.2], 0.4).unwrap();
        assert!(q.contains);
        assert_eq!(q.witness.unwrap().z, vec![0, 0, 0]);
    }

    #[test]
    fn closest_distance_bounded_by_covering_radius() {
        let e = ratmat(&[&[2, 1], &[1, 3]]);
        let lat = MixedLattice::integer(e).unwrap();
        let mu = lat.covering_radius().unwrap();
        for t in [[0.3, -1.7], [2.9, 0.4], [-0.5, 0.5]] {
            let p = lat.closest_point(&t).unwrap();
            assert!(p.distance <= mu.upper + 1e-9);
        }
    }
}
