//! Closed-form continuous-relaxation solvers and the unimodular objective
//! normalization used by the integrality-gap-driven bounds.

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{ProxError, Result};
use crate::linalg;
use crate::quadric::{qr_to_er, Ellipsoid, QuadricKind, QuadricSet};
use crate::rational::{self, Rat, RatMat};

/// Solvability status of `inf{αᵀx : x ∈ S}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelaxStatus {
    Solvable,
    /// Finite infimum, not attained (asymptotic objective on a hyperboloid
    /// branch).
    BoundedNotSolvable,
    /// Finite infimum attained on more than one point (cone branch with the
    /// objective on the dual boundary).
    MultipleOptima,
    Unbounded,
}

/// Result of a continuous relaxation solve.
#[derive(Debug, Clone)]
pub struct RelaxationResult {
    pub status: RelaxStatus,
    pub value: Option<f64>,
    pub optimizer: Option<DVector<f64>>,
    pub unique: bool,
}

/// Set argument for [`solve_relaxation`].
#[derive(Debug, Clone, Copy)]
pub enum RelaxSet<'a> {
    Quadric(&'a QuadricSet),
    Ellipsoid(&'a Ellipsoid),
}

/// Minimize `αᵀx` over an ellipsoid or a quadric set in closed form.
pub fn solve_relaxation(set: RelaxSet<'_>, alpha: &DVector<f64>) -> Result<RelaxationResult> {
    if alpha.norm() == 0.0 {
        return Err(ProxError::InvalidObjective);
    }
    match set {
        RelaxSet::Ellipsoid(e) => solve_ellipsoid(e, alpha),
        RelaxSet::Quadric(q) => match q.class().kind {
            QuadricKind::Ellipsoid => solve_ellipsoid(&qr_to_er(q)?, alpha),
            QuadricKind::Singleton => {
                let c = q.center().expect("singleton center");
                Ok(RelaxationResult {
                    status: RelaxStatus::Solvable,
                    value: Some(alpha.dot(&c)),
                    optimizer: Some(c),
                    unique: true,
                })
            }
            QuadricKind::Empty => Err(ProxError::InfeasibleSet("empty set".into())),
            QuadricKind::Paraboloid => solve_paraboloid(q, alpha),
            QuadricKind::TranslatedCone | QuadricKind::TwoSheetHyperboloid => {
                if q.branch().is_none() {
                    return Err(ProxError::WrongQuadricClass(
                        "relaxation over a two-branch set needs a branch inequality".into(),
                    ));
                }
                solve_branch(q, alpha)
            }
            other => Err(ProxError::WrongQuadricClass(format!("{other:?}"))),
        },
    }
}

fn solve_ellipsoid(e: &Ellipsoid, alpha: &DVector<f64>) -> Result<RelaxationResult> {
    let w = linalg::solve(&e.q.transpose(), alpha)
        .ok_or_else(|| ProxError::InvalidInput("Q singular".into()))?;
    let wn = w.norm();
    let y = &e.p - &w * (e.r / wn);
    let x = linalg::solve(&e.q, &y).expect("Q invertible");
    let value = alpha.dot(&x);
    Ok(RelaxationResult {
        status: RelaxStatus::Solvable,
        value: Some(value),
        optimizer: Some(x),
        unique: e.r > 0.0,
    })
}

fn solve_paraboloid(q: &QuadricSet, alpha: &DVector<f64>) -> Result<RelaxationResult> {
    let un = q.u_min();
    let s = un.dot(alpha);
    let tol = 1e-12 * alpha.norm();
    if s <= tol {
        // The infimum is -inf whenever the objective fails to point into the
        // recession ray strictly; there is no finite-unattained case for a
        // genuine paraboloid.
        return Ok(RelaxationResult {
            status: RelaxStatus::Unbounded,
            value: None,
            optimizer: None,
            unique: false,
        });
    }
    let beta_un = q.beta().dot(&un);
    // stationarity Mx = β + φα with φ = −βᵀuₙ / αᵀuₙ
    let phi_mult = -beta_un / s;
    let rhs = q.beta() + alpha * phi_mult;
    let (x0, _) = linalg::least_squares(q.m(), &rhs);
    // slide along the recession ray to the boundary: φ(x0 + t·uₙ) is linear
    // in t with slope −2βᵀuₙ
    let t = q.phi(&x0) / (2.0 * beta_un);
    let x = &x0 + &un * t;
    Ok(RelaxationResult {
        status: RelaxStatus::Solvable,
        value: Some(alpha.dot(&x)),
        optimizer: Some(x),
        unique: true,
    })
}

fn solve_branch(q: &QuadricSet, alpha: &DVector<f64>) -> Result<RelaxationResult> {
    let minv_a = linalg::solve(q.m(), alpha).ok_or(ProxError::NotAQuadricOfInterest)?;
    let t_a = alpha.dot(&minv_a);
    let tol = 1e-9 * (1.0 + alpha.norm() * minv_a.norm());
    let center = q.center().expect("invertible M");
    let u = q.u_min();
    let side = alpha.dot(&u);
    let qstar = q.class().qstar.unwrap_or(0.0);

    if t_a > tol || side <= 0.0 {
        return Ok(RelaxationResult {
            status: RelaxStatus::Unbounded,
            value: None,
            optimizer: None,
            unique: false,
        });
    }
    let asymptote_value = alpha.dot(&center);
    if t_a >= -tol {
        // α on the boundary of the dual recession cone
        return match q.class().kind {
            QuadricKind::TranslatedCone => Ok(RelaxationResult {
                status: RelaxStatus::MultipleOptima,
                value: Some(asymptote_value),
                optimizer: Some(center),
                unique: false,
            }),
            _ => Ok(RelaxationResult {
                status: RelaxStatus::BoundedNotSolvable,
                value: Some(asymptote_value),
                optimizer: None,
                unique: false,
            }),
        };
    }
    // interior of the dual: unique boundary optimizer at M⁻¹β + t·M⁻¹α
    let value = asymptote_value + (qstar * t_a).max(0.0).sqrt();
    let t_opt = -((qstar / t_a).max(0.0)).sqrt();
    let x = &center + &minv_a * t_opt;
    Ok(RelaxationResult {
        status: RelaxStatus::Solvable,
        value: Some(value),
        optimizer: Some(x),
        unique: true,
    })
}

/// Unimodular normalization of an instance: after the transform the
/// objective is `eₙ` and `IG(original) = scale · IG(normalized)`.
#[derive(Debug, Clone)]
pub struct NormalizedInstance {
    /// Integer unimodular matrix with `Uᵀ(α/scale) = eₙ`; the transformed
    /// set is `U⁻¹S` and `U⁻¹Zⁿ = Zⁿ`.
    pub u: Vec<Vec<i64>>,
    pub set: QuadricSet,
    pub scale: Rat,
}

impl NormalizedInstance {
    /// Map a point of the normalized space back to original coordinates.
    pub fn to_original(&self, x: &[f64]) -> Vec<f64> {
        let n = self.u.len();
        (0..n)
            .map(|i| (0..n).map(|j| self.u[i][j] as f64 * x[j]).sum())
            .collect()
    }

    /// Map an integer point of the normalized space back.
    pub fn to_original_int(&self, x: &[i64]) -> Vec<i64> {
        let n = self.u.len();
        (0..n)
            .map(|i| (0..n).map(|j| self.u[i][j] * x[j]).sum())
            .collect()
    }
}

/// Build the unimodular `U` (via iterated extended-gcd elimination, lowest
/// index first) and transform the set so the objective becomes `eₙ`.
pub fn normalize_objective(set: &QuadricSet, alpha: &[Rat]) -> Result<NormalizedInstance> {
    let n = set.dim();
    if alpha.len() != n {
        return Err(ProxError::InvalidInput("objective dimension mismatch".into()));
    }
    let (scale, v) = rational::clear_and_factor(alpha).ok_or(ProxError::InvalidObjective)?;

    // W is unimodular with W·v = eₙ; then U = Wᵀ satisfies Uᵀ(α/scale) = eₙ.
    let mut w: Vec<Vec<BigInt>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { BigInt::from(1) } else { BigInt::zero() }).collect())
        .collect();
    let mut a = v.clone();
    for i in 0..n.saturating_sub(1) {
        if a[i].is_zero() {
            continue;
        }
        let (g, s, t) = ext_gcd(&a[n - 1], &a[i]);
        let p = &a[n - 1] / &g;
        let q_ = &a[i] / &g;
        for col in 0..n {
            let top = &s * &w[n - 1][col] + &t * &w[i][col];
            let bot = -&q_ * &w[n - 1][col] + &p * &w[i][col];
            w[n - 1][col] = top;
            w[i][col] = bot;
        }
        a[n - 1] = g;
        a[i] = BigInt::zero();
    }
    if a[n - 1].is_negative() {
        for col in 0..n {
            w[n - 1][col] = -w[n - 1][col].clone();
        }
    }

    let wi64: Vec<Vec<i64>> = w
        .iter()
        .map(|row| {
            row.iter()
                .map(|x| x.to_i64().ok_or(ProxError::InvalidObjective))
                .collect::<Result<Vec<i64>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    // U = Wᵀ
    let u: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| wi64[j][i]).collect()).collect();

    // Transform: M' = UᵀMU = W M Wᵀ, β' = W β, g' = W g.
    let set = transform_set(set, &wi64)?;
    Ok(NormalizedInstance { u, set, scale })
}

fn ext_gcd(a: &BigInt, b: &BigInt) -> (BigInt, BigInt, BigInt) {
    if b.is_zero() {
        if a.is_negative() {
            return (-a.clone(), BigInt::from(-1), BigInt::zero());
        }
        return (a.clone(), BigInt::from(1), BigInt::zero());
    }
    let (g, x, y) = ext_gcd(b, &(a % b));
    (g, y.clone(), x - (a / b) * y)
}

/// Apply the row transform `W` (with `x_original = Wᵀ x_new`) to a quadric.
fn transform_set(set: &QuadricSet, w: &[Vec<i64>]) -> Result<QuadricSet> {
    let n = set.dim();
    if let Some(ex) = set.exact() {
        let wr = RatMat::from_rows(
            w.iter().map(|row| row.iter().map(|&v| rational::rint(v)).collect()).collect(),
        );
        let m = wr.mul(&ex.m).mul(&wr.transpose());
        let beta = wr.mul_vec(&ex.beta);
        let branch = set.branch().map(|b| {
            let (ge, he) = b.exact.clone().expect("exact branch with exact set");
            (wr.mul_vec(&ge), he)
        });
        return QuadricSet::new_rational(m, beta, ex.gamma.clone(), branch);
    }
    let wf = DMatrix::from_fn(n, n, |i, j| w[i][j] as f64);
    let m = &wf * set.m() * wf.transpose();
    let beta = &wf * set.beta();
    let branch = set.branch().map(|b| (&wf * &b.g, b.h));
    QuadricSet::new(m, beta, set.gamma(), branch)
}

/// `δ_inf = inf{xₙ : x ∈ S}` for a normalized set, via the slice-radius
/// roots (independent of the stationarity route in [`solve_relaxation`]).
/// Returns the value and whether the optimum is attained uniquely.
pub fn delta_inf(set: &QuadricSet) -> Result<(f64, bool)> {
    let n = set.dim();
    let class = set.class();
    match class.kind {
        QuadricKind::Singleton => {
            let c = set.center().expect("singleton");
            return Ok((c[n - 1], true));
        }
        QuadricKind::Empty => return Err(ProxError::InfeasibleSet("empty set".into())),
        QuadricKind::Ellipsoid | QuadricKind::Paraboloid => {}
        QuadricKind::TranslatedCone | QuadricKind::TwoSheetHyperboloid => {
            if set.branch().is_none() {
                return Err(ProxError::WrongQuadricClass("branch required".into()));
            }
            let u = set.u_min();
            if u[n - 1] <= 0.0 {
                return Err(ProxError::Unbounded);
            }
            let minv_en = {
                let mut en = DVector::zeros(n);
                en[n - 1] = 1.0;
                linalg::solve(set.m(), &en).ok_or(ProxError::NotAQuadricOfInterest)?
            };
            let t_e = minv_en[n - 1];
            let tol = 1e-9 * (1.0 + minv_en.norm());
            if t_e.abs() <= tol {
                // asymptotic objective: finite infimum at the center level,
                // unattained (hyperboloid) or attained on a ray (cone)
                let c = set.center().expect("invertible M");
                return Ok((c[n - 1], false));
            }
            if t_e > tol {
                return Err(ProxError::Unbounded);
            }
        }
        other => return Err(ProxError::WrongQuadricClass(format!("{other:?}"))),
    }

    let (q2, q1, q0) = slice_poly(set)?;
    match class.kind {
        QuadricKind::Ellipsoid => {
            let disc = q1 * q1 - 4.0 * q2 * q0;
            if disc < 0.0 {
                return Err(ProxError::InfeasibleSet("negative discriminant".into()));
            }
            Ok(((-q1 + disc.sqrt()) / (2.0 * q2), true))
        }
        QuadricKind::Paraboloid => {
            if q1 <= 0.0 {
                return Err(ProxError::Unbounded);
            }
            Ok((-q0 / q1, true))
        }
        _ => {
            let disc = q1 * q1 - 4.0 * q2 * q0;
            Ok(((-q1 + disc.max(0.0).sqrt()) / (2.0 * q2), true))
        }
    }
}

/// Coefficients of the squared slice radius `r²(δ) = q₂δ² + q₁δ + q₀` from
/// the block decomposition of `M`. Requires the leading block to be
/// positive definite.
pub fn slice_poly(set: &QuadricSet) -> Result<(f64, f64, f64)> {
    let n = set.dim();
    if n < 2 {
        return Err(ProxError::InvalidInput("slice needs n >= 2".into()));
    }
    let m = set.m();
    let mbar = m.view((0, 0), (n - 1, n - 1)).clone_owned();
    let a = m.view((0, n - 1), (n - 1, 1)).clone_owned().column(0).clone_owned();
    let a0 = m[(n - 1, n - 1)];
    let beta_bar = set.beta().view((0, 0), (n - 1, 1)).clone_owned().column(0).clone_owned();
    let beta_n = set.beta()[n - 1];
    let chol = linalg::chol_upper(&mbar).ok_or_else(|| {
        ProxError::AssumptionViolated("leading block M̄ is not positive definite".into())
    })?;
    let _ = chol;
    let minv_a = linalg::solve(&mbar, &a).expect("M̄ invertible");
    let minv_b = linalg::solve(&mbar, &beta_bar).expect("M̄ invertible");
    let q2 = a.dot(&minv_a) - a0;
    let q1 = 2.0 * (beta_n - beta_bar.dot(&minv_a));
    let q0 = beta_bar.dot(&minv_b) - set.gamma();
    Ok((q2, q1, q0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rint};

    fn disk() -> QuadricSet {
        QuadricSet::new_rational(
            RatMat::identity(2),
            vec![Rat::zero(), Rat::zero()],
            rint(-1),
            None,
        )
        .unwrap()
    }

    fn ex0_parabola(n: i64) -> QuadricSet {
        // (x₁−b₁)² + (b₂²−d²) ≤ (b₂−d)x₂ with b=(4N+1/2, 4N), d=4N−1/(4N)
        let b1 = rint(4 * n) + rat(1, 2);
        let b2 = rint(4 * n);
        let d = rint(4 * n) - rat(1, 4 * n);
        let m = RatMat::from_rows(vec![vec![rint(1), rint(0)], vec![rint(0), rint(0)]]);
        let beta = vec![b1.clone(), (&b2 - &d) / rint(2)];
        let gamma = &b1 * &b1 + &b2 * &b2 - &d * &d;
        QuadricSet::new_rational(m, beta, gamma, None).unwrap()
    }

    #[test]
    fn disk_relaxation() {
        let r = solve_relaxation(RelaxSet::Quadric(&disk()), &linalg::dvec(&[0.0, 1.0])).unwrap();
        assert_eq!(r.status, RelaxStatus::Solvable);
        assert!((r.value.unwrap() + 1.0).abs() < 1e-12);
        let x = r.optimizer.unwrap();
        assert!(x[0].abs() < 1e-12 && (x[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn ex0_relaxation_values() {
        let q = ex0_parabola(1);
        let r = solve_relaxation(RelaxSet::Quadric(&q), &linalg::dvec(&[1.0, 1.0])).unwrap();
        let x = r.optimizer.unwrap();
        assert!((x[0] - 4.375).abs() < 1e-9, "x1={}", x[0]);
        assert!((x[1] - 7.8125).abs() < 1e-9, "x2={}", x[1]);
        assert!((r.value.unwrap() - 12.1875).abs() < 1e-9);
    }

    #[test]
    fn paraboloid_unbounded_directions() {
        let q = ex0_parabola(1);
        let r = solve_relaxation(RelaxSet::Quadric(&q), &linalg::dvec(&[1.0, 0.0])).unwrap();
        assert_eq!(r.status, RelaxStatus::Unbounded);
        let r = solve_relaxation(RelaxSet::Quadric(&q), &linalg::dvec(&[0.0, -1.0])).unwrap();
        assert_eq!(r.status, RelaxStatus::Unbounded);
    }

    #[test]
    fn branch_relaxations() {
        // branch x₂ ≥ 1 of x₁² − x₂² + 1 ≤ 0
        let hyp = QuadricSet::new_rational(
            RatMat::from_rows(vec![vec![rint(1), rint(0)], vec![rint(0), rint(-1)]]),
            vec![Rat::zero(), Rat::zero()],
            rint(1),
            Some((vec![Rat::zero(), rint(1)], rint(1))),
        )
        .unwrap();
        let r = solve_relaxation(RelaxSet::Quadric(&hyp), &linalg::dvec(&[0.0, 1.0])).unwrap();
        assert_eq!(r.status, RelaxStatus::Solvable);
        assert!((r.value.unwrap() - 1.0).abs() < 1e-12);
        let x = r.optimizer.unwrap();
        assert!(x[0].abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);

        // asymptotic objective: bounded, not solvable, infimum 0
        let r = solve_relaxation(RelaxSet::Quadric(&hyp), &linalg::dvec(&[1.0, 1.0])).unwrap();
        assert_eq!(r.status, RelaxStatus::BoundedNotSolvable);
        assert!(r.value.unwrap().abs() < 1e-12);

        // objective pointing across the cone: unbounded
        let r = solve_relaxation(RelaxSet::Quadric(&hyp), &linalg::dvec(&[1.0, 0.0])).unwrap();
        assert_eq!(r.status, RelaxStatus::Unbounded);

        // cone apex
        let cone = QuadricSet::new_rational(
            RatMat::from_rows(vec![vec![rint(1), rint(0)], vec![rint(0), rint(-1)]]),
            vec![Rat::zero(), Rat::zero()],
            Rat::zero(),
            Some((vec![Rat::zero(), rint(1)], Rat::zero())),
        )
        .unwrap();
        let r = solve_relaxation(RelaxSet::Quadric(&cone), &linalg::dvec(&[0.0, 1.0])).unwrap();
        assert_eq!(r.status, RelaxStatus::Solvable);
        assert!(r.value.unwrap().abs() < 1e-12);
        // boundary objective on a cone: attained on a whole ray
        let r = solve_relaxation(RelaxSet::Quadric(&cone), &linalg::dvec(&[1.0, 1.0])).unwrap();
        assert_eq!(r.status, RelaxStatus::MultipleOptima);
    }

    #[test]
    fn normalization_basics() {
        let q = disk();
        let norm = normalize_objective(&q, &[rint(0), rint(1)]).unwrap();
        assert_eq!(norm.u, vec![vec![1, 0], vec![0, 1]]);
        assert_eq!(norm.scale, rint(1));

        let norm = normalize_objective(&q, &[rint(2), rint(4)]).unwrap();
        assert_eq!(norm.scale, rint(2));
        // Uᵀ(1,2) = e₂ and |det U| = 1
        let u = &norm.u;
        let det = u[0][0] * u[1][1] - u[0][1] * u[1][0];
        assert_eq!(det.abs(), 1);
        assert_eq!(u[0][0] + 2 * u[0][1], 0);
        assert_eq!(u[1][0] + 2 * u[1][1], 1);
    }

    #[test]
    fn normalized_ex0_has_expected_slice_poly() {
        let q = ex0_parabola(1);
        let norm = normalize_objective(&q, &[rint(1), rint(1)]).unwrap();
        let (q2, q1, q0) = slice_poly(&norm.set).unwrap();
        assert!(q2.abs() < 1e-12);
        assert!((q1 - 0.25).abs() < 1e-12, "q1 = {q1}");
        // δ_inf must reproduce the relaxation value 12.1875
        let (d, unique) = delta_inf(&norm.set).unwrap();
        assert!(unique);
        assert!((d - 12.1875).abs() < 1e-9);
        assert!((-q0 / q1 - 12.1875).abs() < 1e-9);
    }

    #[test]
    fn delta_inf_cases() {
        let (d, unique) = delta_inf(&disk()).unwrap();
        assert!((d + 1.0).abs() < 1e-12);
        assert!(unique);

        let cone = QuadricSet::new_rational(
            RatMat::from_rows(vec![vec![rint(1), rint(0)], vec![rint(0), rint(-1)]]),
            vec![Rat::zero(), Rat::zero()],
            Rat::zero(),
            Some((vec![Rat::zero(), rint(1)], Rat::zero())),
        )
        .unwrap();
        let (d, unique) = delta_inf(&cone).unwrap();
        assert!(d.abs() < 1e-12);
        assert!(unique);
    }
}
