//! Simple second-order conic sets: representation, classification and
//! structural geometry.
//!
//! Three interchangeable forms are supported:
//!
//! - SOCr: `‖Ax − b‖₂ ≤ cᵀx − d`;
//! - Qr:   `xᵀMx − 2βᵀx + γ ≤ 0`, optionally with a branch inequality
//!   `gᵀx ≥ h` selecting one component of a two-sheet hyperboloid or
//!   translated cone;
//! - Er:   `‖Qx − p‖₂ ≤ r` (bounded sets only).
//!
//! Classification follows the eigenvalue sign pattern of `M`; sets with a
//! nontrivial lineality space (cylinders, lines) are rejected at
//! construction and only reported by the raw classifier.

use nalgebra::{DMatrix, DVector};

use crate::error::{ProxError, Result};
use crate::linalg;
use crate::rational::{self, Rat, RatMat};
use num_traits::{Signed, Zero};

/// Second-order cone representation `‖Ax−b‖ ≤ cᵀx−d`.
#[derive(Debug, Clone)]
pub struct SocrSet {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
    pub d: f64,
    /// Exact mirror of (A, b, c, d) when the inputs were rational.
    pub exact: Option<SocrExact>,
}

#[derive(Debug, Clone)]
pub struct SocrExact {
    pub a: RatMat,
    pub b: Vec<Rat>,
    pub c: Vec<Rat>,
    pub d: Rat,
}

impl SocrSet {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, c: DVector<f64>, d: f64) -> Result<Self> {
        if a.ncols() != c.len() || a.nrows() != b.len() || a.ncols() == 0 {
            return Err(ProxError::InvalidInput("SOCr dimension mismatch".into()));
        }
        Ok(SocrSet { a, b, c, d, exact: None })
    }

    pub fn new_rational(a: RatMat, b: Vec<Rat>, c: Vec<Rat>, d: Rat) -> Result<Self> {
        let af = a.to_f64();
        let bf = DVector::from_iterator(b.len(), b.iter().map(rational::to_f64));
        let cf = DVector::from_iterator(c.len(), c.iter().map(rational::to_f64));
        let df = rational::to_f64(&d);
        let mut s = Self::new(af, bf, cf, df)?;
        s.exact = Some(SocrExact { a, b, c, d });
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.a.ncols()
    }

    /// Constraint residual `‖Ax−b‖ − (cᵀx−d)`; nonpositive inside the set.
    pub fn residual(&self, x: &[f64]) -> f64 {
        let xv = linalg::dvec(x);
        (&self.a * &xv - &self.b).norm() - (self.c.dot(&xv) - self.d)
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.residual(x) <= tol
    }
}

/// Branch inequality `gᵀx ≥ h` attached to a Qr set.
#[derive(Debug, Clone)]
pub struct BranchData {
    pub g: DVector<f64>,
    pub h: f64,
    pub exact: Option<(Vec<Rat>, Rat)>,
}

/// Exact mirror of a Qr set.
#[derive(Debug, Clone)]
pub struct QuadricExact {
    pub m: RatMat,
    pub beta: Vec<Rat>,
    pub gamma: Rat,
}

/// Quadratic representation `xᵀMx − 2βᵀx + γ ≤ 0` with cached
/// eigenstructure and an optional branch inequality.
#[derive(Debug, Clone)]
pub struct QuadricSet {
    m: DMatrix<f64>,
    beta: DVector<f64>,
    gamma: f64,
    branch: Option<BranchData>,
    exact: Option<QuadricExact>,
    // cached eigendecomposition, eigenvalues ascending
    eigvals: Vec<f64>,
    eigvecs: DMatrix<f64>,
    tau: f64,
    class: QuadricClass,
}

/// Set type per the eigenvalue/feasibility classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadricKind {
    Ellipsoid,
    Singleton,
    Empty,
    Paraboloid,
    Cylinder,
    Line,
    OneSheetHyperboloid,
    TranslatedCone,
    TwoSheetHyperboloid,
}

/// Classification result: the kind plus the decision quantities.
#[derive(Debug, Clone)]
pub struct QuadricClass {
    pub kind: QuadricKind,
    pub qstar: Option<f64>,
    pub qhat: Option<f64>,
    pub center: Option<DVector<f64>>,
    /// Tolerance band used for the sign decisions.
    pub tolerance: f64,
}

/// Raw classification of `(M, β, γ)` without constructing a validated set.
/// This is the only entry point that reports cylinders and lines.
pub fn classify_raw(m: &DMatrix<f64>, beta: &DVector<f64>, gamma: f64) -> Result<QuadricClass> {
    let n = m.nrows();
    if n == 0 || m.ncols() != n || beta.len() != n {
        return Err(ProxError::InvalidInput("Qr dimension mismatch".into()));
    }
    let sym_err = (m - m.transpose()).norm();
    if sym_err > 1e-9 * (1.0 + m.norm()) {
        return Err(ProxError::InvalidInput("M must be symmetric".into()));
    }
    let (vals, _) = linalg::sym_eigen(m);
    let tau = 1e-9 * (1.0 + linalg::spectral_norm(m));
    if n >= 2 && vals[n - 2] <= tau {
        // more than one nonpositive eigenvalue (within tolerance)
        return Err(ProxError::NotAQuadricOfInterest);
    }
    let lam_min = vals[0];

    if lam_min > tau {
        let center = linalg::solve(m, beta).ok_or(ProxError::NotAQuadricOfInterest)?;
        let qstar = beta.dot(&center) - gamma;
        let tol_q = 1e-9 * (1.0 + beta.dot(&center).abs() + gamma.abs());
        let kind = if qstar > tol_q {
            QuadricKind::Ellipsoid
        } else if qstar < -tol_q {
            QuadricKind::Empty
        } else {
            QuadricKind::Singleton
        };
        return Ok(QuadricClass { kind, qstar: Some(qstar), qhat: None, center: Some(center), tolerance: tol_q });
    }

    if lam_min >= -tau {
        // singular case: paraboloid vs cylinder/line/empty
        let (xhat, residual) = linalg::least_squares(m, beta);
        let consistent = residual <= 1e-9 * (1.0 + beta.norm());
        if !consistent {
            return Ok(QuadricClass {
                kind: QuadricKind::Paraboloid,
                qstar: None,
                qhat: None,
                center: None,
                tolerance: tau,
            });
        }
        let qhat = xhat.dot(&(m * &xhat)) - gamma;
        let tol_q = 1e-9 * (1.0 + xhat.dot(&(m * &xhat)).abs() + gamma.abs());
        let kind = if qhat > tol_q {
            QuadricKind::Cylinder
        } else if qhat < -tol_q {
            QuadricKind::Empty
        } else {
            QuadricKind::Line
        };
        return Ok(QuadricClass { kind, qstar: None, qhat: Some(qhat), center: Some(xhat), tolerance: tol_q });
    }

    // one strictly negative eigenvalue
    let center = linalg::solve(m, beta).ok_or(ProxError::NotAQuadricOfInterest)?;
    let qstar = beta.dot(&center) - gamma;
    let tol_q = 1e-9 * (1.0 + beta.dot(&center).abs() + gamma.abs());
    let kind = if qstar > tol_q {
        QuadricKind::OneSheetHyperboloid
    } else if qstar < -tol_q {
        QuadricKind::TwoSheetHyperboloid
    } else {
        QuadricKind::TranslatedCone
    };
    Ok(QuadricClass { kind, qstar: Some(qstar), qhat: None, center: Some(center), tolerance: tol_q })
}

/// Does `(M, β, g)` define a set with trivial lineality space?
/// A lineality direction must satisfy `Md = 0`, `βᵀd = 0` and, when a branch
/// inequality is present, `gᵀd = 0`.
pub fn check_lineality_trivial(
    m: &DMatrix<f64>,
    beta: &DVector<f64>,
    g: Option<&DVector<f64>>,
) -> bool {
    let (vals, vecs) = linalg::sym_eigen(m);
    let tau = 1e-9 * (1.0 + linalg::spectral_norm(m));
    for (i, &v) in vals.iter().enumerate() {
        if v.abs() <= tau {
            let u = vecs.column(i);
            let beta_ok = beta.dot(&u).abs() <= 1e-9 * (1.0 + beta.norm());
            let g_ok = g.map(|gv| gv.dot(&u).abs() <= 1e-9 * (1.0 + gv.norm())).unwrap_or(true);
            if beta_ok && g_ok {
                return false;
            }
        }
    }
    true
}

impl QuadricSet {
    /// Validated construction: at most one nonpositive eigenvalue, trivial
    /// lineality space, and a valid branch inequality when one is given.
    pub fn new(
        m: DMatrix<f64>,
        beta: DVector<f64>,
        gamma: f64,
        branch: Option<(DVector<f64>, f64)>,
    ) -> Result<Self> {
        let class = classify_raw(&m, &beta, gamma)?;
        if matches!(class.kind, QuadricKind::Cylinder | QuadricKind::Line) {
            return Err(ProxError::AssumptionViolated(format!(
                "{:?} has a nontrivial lineality space",
                class.kind
            )));
        }
        if !check_lineality_trivial(&m, &beta, branch.as_ref().map(|(g, _)| g)) {
            return Err(ProxError::AssumptionViolated("nontrivial lineality space".into()));
        }
        let (eigvals, eigvecs) = linalg::sym_eigen(&m);
        let tau = 1e-9 * (1.0 + linalg::spectral_norm(&m));

        let branch = match branch {
            None => None,
            Some((g, h)) => {
                if g.norm() == 0.0 {
                    return Err(ProxError::InvalidInput("branch vector g must be nonzero".into()));
                }
                if !matches!(
                    class.kind,
                    QuadricKind::TranslatedCone | QuadricKind::TwoSheetHyperboloid
                ) {
                    return Err(ProxError::WrongQuadricClass(format!(
                        "branch inequality on a {:?}",
                        class.kind
                    )));
                }
                let minv_g = linalg::solve(&m, &g).ok_or(ProxError::NotAQuadricOfInterest)?;
                let t = g.dot(&minv_g);
                let tol_t = 1e-9 * (1.0 + g.norm() * minv_g.norm());
                let qstar = class.qstar.unwrap_or(0.0);
                let gmb = g.dot(class.center.as_ref().expect("center for branch classes"));
                match class.kind {
                    QuadricKind::TranslatedCone => {
                        if t >= -tol_t {
                            return Err(ProxError::InvalidInput(
                                "cone branch requires gᵀM⁻¹g < 0".into(),
                            ));
                        }
                        if (h - gmb).abs() > 1e-9 * (1.0 + gmb.abs()) {
                            return Err(ProxError::InvalidInput(
                                "cone branch requires h = gᵀM⁻¹β".into(),
                            ));
                        }
                    }
                    QuadricKind::TwoSheetHyperboloid => {
                        if t > tol_t {
                            return Err(ProxError::InvalidInput(
                                "hyperboloid branch requires gᵀM⁻¹g ≤ 0".into(),
                            ));
                        }
                        if t >= -tol_t {
                            // asymptotic separator: h must match gᵀM⁻¹β
                            if (h - gmb).abs() > 1e-9 * (1.0 + gmb.abs()) {
                                return Err(ProxError::InvalidInput(
                                    "asymptotic branch separator requires h = gᵀM⁻¹β".into(),
                                ));
                            }
                        } else {
                            let root = (qstar * t).max(0.0).sqrt();
                            let (h_minus, h_plus) = (gmb - root, gmb + root);
                            let slack = 1e-9 * (1.0 + root + gmb.abs());
                            if h < h_minus - slack || h > h_plus + slack {
                                return Err(ProxError::InvalidInput(
                                    "branch offset h outside [h₋, h₊]".into(),
                                ));
                            }
                        }
                    }
                    _ => unreachable!(),
                }
                Some(BranchData { g, h, exact: None })
            }
        };

        Ok(QuadricSet { m, beta, gamma, branch, exact: None, eigvals, eigvecs, tau, class })
    }

    /// Construction from exact rational data; keeps the exact mirror for
    /// rational membership tests and exact slice coefficients.
    pub fn new_rational(
        m: RatMat,
        beta: Vec<Rat>,
        gamma: Rat,
        branch: Option<(Vec<Rat>, Rat)>,
    ) -> Result<Self> {
        if !m.is_symmetric() {
            return Err(ProxError::InvalidInput("M must be symmetric".into()));
        }
        let mf = m.to_f64();
        let bf = DVector::from_iterator(beta.len(), beta.iter().map(rational::to_f64));
        let gf = rational::to_f64(&gamma);
        let brf = branch.as_ref().map(|(g, h)| {
            (
                DVector::from_iterator(g.len(), g.iter().map(rational::to_f64)),
                rational::to_f64(h),
            )
        });
        let mut s = Self::new(mf, bf, gf, brf)?;
        if let (Some(b), Some((ge, he))) = (s.branch.as_mut(), branch) {
            b.exact = Some((ge, he));
        }
        s.exact = Some(QuadricExact { m, beta, gamma });
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn m(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn beta(&self) -> &DVector<f64> {
        &self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn branch(&self) -> Option<&BranchData> {
        self.branch.as_ref()
    }

    pub fn exact(&self) -> Option<&QuadricExact> {
        self.exact.as_ref()
    }

    pub fn tolerance(&self) -> f64 {
        self.tau
    }

    /// Eigenvalues of `M`, ascending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigvals
    }

    pub fn lambda_min(&self) -> f64 {
        self.eigvals[0]
    }

    pub fn lambda_max(&self) -> f64 {
        *self.eigvals.last().unwrap()
    }

    /// Unit eigenvector for the smallest eigenvalue, oriented so that it is a
    /// recession direction of the set: `βᵀuₙ ≥ 0` for paraboloids, `gᵀuₙ ≥ 0`
    /// for branches.
    pub fn u_min(&self) -> DVector<f64> {
        let mut u = self.eigvecs.column(0).clone_owned();
        let orient = match &self.branch {
            Some(b) => b.g.dot(&u),
            None => self.beta.dot(&u),
        };
        if orient < 0.0 {
            u = -u;
        }
        u
    }

    /// Quadratic form value `φ(x) = xᵀMx − 2βᵀx + γ`.
    pub fn phi(&self, x: &DVector<f64>) -> f64 {
        x.dot(&(&self.m * x)) - 2.0 * self.beta.dot(x) + self.gamma
    }

    /// Scale for residual comparisons at a point.
    pub fn phi_scale(&self, x: &DVector<f64>) -> f64 {
        1.0 + x.dot(&(&self.m * x)).abs() + 2.0 * (self.beta.dot(x)).abs() + self.gamma.abs()
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        let xv = linalg::dvec(x);
        if self.phi(&xv) > tol * self.phi_scale(&xv) {
            return false;
        }
        match &self.branch {
            None => true,
            Some(b) => b.g.dot(&xv) >= b.h - tol * (1.0 + b.h.abs()),
        }
    }

    /// Exact membership for an integer point; available when the set carries
    /// rational data.
    pub fn contains_exact(&self, x: &[i64]) -> Option<bool> {
        let ex = self.exact.as_ref()?;
        let xr: Vec<Rat> = x.iter().map(|&v| rational::rint(v)).collect();
        let mx = ex.m.mul_vec(&xr);
        let phi = rational::dot(&xr, &mx) - rational::rint(2) * rational::dot(&ex.beta, &xr)
            + ex.gamma.clone();
        if phi.is_positive() {
            return Some(false);
        }
        if let Some(b) = &self.branch {
            if let Some((ge, he)) = &b.exact {
                return Some(!(rational::dot(ge, &xr) < *he));
            }
            let xv: Vec<f64> = x.iter().map(|&v| v as f64).collect();
            let xv = linalg::dvec(&xv);
            return Some(b.g.dot(&xv) >= b.h - 1e-9 * (1.0 + b.h.abs()));
        }
        Some(true)
    }

    pub fn class(&self) -> &QuadricClass {
        &self.class
    }

    /// Set classification (cached from construction).
    pub fn classify(&self) -> QuadricClass {
        self.class.clone()
    }

    /// `M⁻¹β`, defined whenever `M` is invertible.
    pub fn center(&self) -> Option<DVector<f64>> {
        self.class.center.clone()
    }
}

/// Branch regime of a candidate separator `g` per the sign of `gᵀM⁻¹g`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchRegime {
    /// `gᵀM⁻¹g = 0`: g is asymptotic, `gᵀx` is unbounded in both directions
    /// on each branch but approaches `gᵀM⁻¹β` asymptotically.
    Asymptotic,
    /// `gᵀM⁻¹g < 0`, branch in the `+uₙ` direction is bounded below (at h₊).
    BoundedBelowOnPlus,
    /// `gᵀM⁻¹g < 0`, branch in the `−uₙ` direction is bounded below.
    BoundedBelowOnMinus,
    /// `gᵀM⁻¹g > 0`: unbounded in both directions on both branches.
    UnboundedBoth,
}

/// Output of [`branch_bounds`].
#[derive(Debug, Clone)]
pub struct BranchBounds {
    pub regime: BranchRegime,
    pub h_minus: Option<f64>,
    pub h_plus: Option<f64>,
    /// When an `h` query was supplied: does `(g, h)` validly separate the two
    /// branches?
    pub separates: Option<bool>,
}

/// Range analysis of `gᵀx` over the two branches of a cone or two-sheet
/// hyperboloid, plus a validity check for a queried separator offset.
pub fn branch_bounds(
    q: &QuadricSet,
    g: &DVector<f64>,
    h_query: Option<f64>,
) -> Result<BranchBounds> {
    let class = q.class();
    if !matches!(class.kind, QuadricKind::TranslatedCone | QuadricKind::TwoSheetHyperboloid) {
        return Err(ProxError::WrongQuadricClass(format!("{:?}", class.kind)));
    }
    if g.norm() == 0.0 {
        return Err(ProxError::InvalidInput("g must be nonzero".into()));
    }
    let minv_g = linalg::solve(q.m(), g).ok_or(ProxError::NotAQuadricOfInterest)?;
    let t = g.dot(&minv_g);
    let tol_t = 1e-9 * (1.0 + minv_g.norm() * g.norm());
    let center = class.center.clone().expect("invertible M");
    let gmb = g.dot(&center);
    let qstar = class.qstar.unwrap_or(0.0);

    if t > tol_t {
        let separates = h_query.map(|_| false);
        return Ok(BranchBounds { regime: BranchRegime::UnboundedBoth, h_minus: None, h_plus: None, separates });
    }
    if t >= -tol_t {
        let separates = h_query.map(|h| {
            class.kind == QuadricKind::TwoSheetHyperboloid
                && (h - gmb).abs() <= 1e-9 * (1.0 + gmb.abs())
        });
        return Ok(BranchBounds { regime: BranchRegime::Asymptotic, h_minus: None, h_plus: None, separates });
    }

    let root = (qstar * t).max(0.0).sqrt();
    let (h_minus, h_plus) = (gmb - root, gmb + root);
    // Reference +branch: the set's own branch when one is attached,
    // otherwise the eigenvector with a deterministic sign convention.
    let u_ref = match q.branch() {
        Some(_) => q.u_min(),
        None => {
            let mut u = q.eigvecs.column(0).clone_owned();
            let lead = (0..u.len())
                .max_by(|&a, &b| u[a].abs().partial_cmp(&u[b].abs()).unwrap())
                .unwrap();
            if u[lead] < 0.0 {
                u = -u;
            }
            u
        }
    };
    let regime = if g.dot(&u_ref) > 0.0 {
        BranchRegime::BoundedBelowOnPlus
    } else {
        BranchRegime::BoundedBelowOnMinus
    };
    let separates = h_query.map(|h| {
        let slack = 1e-9 * (1.0 + root + gmb.abs());
        match class.kind {
            QuadricKind::TranslatedCone => (h - gmb).abs() <= slack,
            _ => h >= h_minus - slack && h <= h_plus + slack,
        }
    });
    Ok(BranchBounds { regime, h_minus: Some(h_minus), h_plus: Some(h_plus), separates })
}

/// Depth constant of the recession cone `K = {x : xᵀMx ≤ 0, gᵀx ≥ 0}`:
/// the optimal value of `max{ min{ fᵀd : f ∈ K*, ‖f‖=1 } : d ∈ K, ‖d‖=1 }`.
///
/// The maximizing direction is the cone axis `uₙ`, and a unit step along it
/// gains `√(−λₙ/(λ₁−λₙ))` of clearance from the boundary: the tight section
/// of the cone is the 2-plane spanned by the extreme eigenvectors, where the
/// half-angle θ from the axis has `tan θ = √(−λₙ/λ₁)`, giving depth `sin θ`.
/// A ball of radius r therefore fits at every shift `θ ≥ r/Ψ`.
pub fn psi_constant(q: &QuadricSet) -> Result<f64> {
    let lam_min = q.lambda_min();
    let lam_max = q.lambda_max();
    if lam_min >= -q.tolerance() {
        return Err(ProxError::NoFullDimRecessionCone);
    }
    Ok((-lam_min / (lam_max - lam_min)).sqrt())
}

/// Shift length along `uₙ` after which a ball of radius `r` fits inside the
/// set: `B(x0 + Θ·uₙ, r) ⊆ Q`. Uses the closed forms Θ₀ (paraboloid) and Θ₋
/// (negative eigenvalue).
pub fn ball_shift(q: &QuadricSet, x0: &[f64], r: f64) -> Result<(f64, DVector<f64>)> {
    let lam1 = q.lambda_max();
    let lamn = q.lambda_min();
    let tau = q.tolerance();
    if lam1 <= tau {
        return Err(ProxError::NoLargeBalls);
    }
    if lamn > tau {
        return Err(ProxError::NoLargeBalls);
    }
    let x0v = linalg::dvec(x0);
    let resid = q.phi(&x0v) / q.phi_scale(&x0v);
    if resid > 1e-9 {
        return Err(ProxError::InfeasibleAnchor(resid));
    }
    if q.branch().is_some() && !q.contains(x0, 1e-9) {
        return Err(ProxError::InfeasibleAnchor(1.0));
    }
    let un = q.u_min();
    let beta_un = q.beta().dot(&un);
    let tangent = (q.m() * &x0v - q.beta()).norm();

    if lamn.abs() <= tau {
        // paraboloid: Θ₀ = (r²λ₁ + 2r‖Mx0−β‖) / (2βᵀuₙ)
        if beta_un <= tau {
            return Err(ProxError::PreconditionViolated(
                "paraboloid shift requires βᵀuₙ > 0".into(),
            ));
        }
        let theta = (r * r * lam1 + 2.0 * r * tangent) / (2.0 * beta_un);
        return Ok((theta, un));
    }
    // λₙ < 0: largest root of λₙθ² + 2θ(λₙ·x0ᵀuₙ − βᵀuₙ + r|λₙ|) + r²λ₁ + 2r‖Mx0−β‖ ≤ 0
    let b_half = lamn * x0v.dot(&un) - beta_un + r * lamn.abs();
    let c = r * r * lam1 + 2.0 * r * tangent;
    let disc = b_half * b_half - lamn * c;
    let theta = (-b_half - disc.max(0.0).sqrt()) / lamn;
    Ok((theta, un))
}

/// Inner ellipsoid `‖Dx − (Dx̂ − D⁻¹d̂)‖ ≤ ‖D⁻¹d̂‖` with `d̂ = Mx̂ − β`,
/// guaranteed to lie inside the quadric when `D² ⪰ M`.
pub fn inner_ellipsoid(q: &QuadricSet, xhat: &[f64], d: &DMatrix<f64>) -> Result<Ellipsoid> {
    let xv = linalg::dvec(xhat);
    let resid = q.phi(&xv) / q.phi_scale(&xv);
    if resid > 1e-9 {
        return Err(ProxError::InfeasibleAnchor(resid));
    }
    let (dvals, _) = linalg::sym_eigen(d);
    if dvals[0] <= 0.0 {
        return Err(ProxError::InvalidRegularizer);
    }
    let d2 = d * d;
    let diff = &d2 - q.m();
    let (vals, _) = linalg::sym_eigen(&diff);
    let tau = 1e-9 * (1.0 + linalg::spectral_norm(&d2) + linalg::spectral_norm(q.m()));
    if vals[0] < -tau {
        return Err(ProxError::InvalidRegularizer);
    }
    let dhat = q.m() * &xv - q.beta();
    let dinv_dhat = linalg::solve(d, &dhat).ok_or(ProxError::InvalidRegularizer)?;
    let center = d * &xv - &dinv_dhat;
    let radius = dinv_dhat.norm();
    Ellipsoid::new(d.clone(), center, radius)
}

/// Ellipsoid representation `‖Qx − p‖ ≤ r`.
#[derive(Debug, Clone)]
pub struct Ellipsoid {
    pub q: DMatrix<f64>,
    pub p: DVector<f64>,
    pub r: f64,
    pub exact: Option<EllipsoidExact>,
}

#[derive(Debug, Clone)]
pub struct EllipsoidExact {
    pub q: RatMat,
    pub p: Vec<Rat>,
    pub r_sq: Rat,
}

impl Ellipsoid {
    pub fn new(q: DMatrix<f64>, p: DVector<f64>, r: f64) -> Result<Self> {
        if q.nrows() != q.ncols() || q.nrows() != p.len() {
            return Err(ProxError::InvalidInput("Er dimension mismatch".into()));
        }
        if linalg::smallest_singular(&q) <= 1e-12 * (1.0 + linalg::spectral_norm(&q)) {
            return Err(ProxError::InvalidInput("Q must be invertible".into()));
        }
        if r < 0.0 {
            return Err(ProxError::InvalidInput("radius must be nonnegative".into()));
        }
        Ok(Ellipsoid { q, p, r, exact: None })
    }

    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    pub fn residual(&self, x: &[f64]) -> f64 {
        let xv = linalg::dvec(x);
        (&self.q * &xv - &self.p).norm() - self.r
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.residual(x) <= tol * (1.0 + self.r)
    }

    /// Exact membership for integer points when rational data is present.
    pub fn contains_exact(&self, x: &[i64]) -> Option<bool> {
        let ex = self.exact.as_ref()?;
        let xr: Vec<Rat> = x.iter().map(|&v| rational::rint(v)).collect();
        let qx = ex.q.mul_vec(&xr);
        let diff: Vec<Rat> = qx.iter().zip(&ex.p).map(|(a, b)| a - b).collect();
        let lhs = rational::dot(&diff, &diff);
        Some(lhs <= ex.r_sq)
    }

    pub fn center(&self) -> DVector<f64> {
        linalg::solve(&self.q, &self.p).expect("Q invertible")
    }

    /// Axis-aligned bounding box: `|xᵢ − cᵢ| ≤ r‖rowᵢ(Q⁻¹)‖`.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.dim();
        let qinv = self.q.clone().try_inverse().expect("Q invertible");
        let c = self.center();
        let mut lo = vec![0.0; n];
        let mut hi = vec![0.0; n];
        for i in 0..n {
            let w = self.r * qinv.row(i).norm();
            lo[i] = c[i] - w;
            hi[i] = c[i] + w;
        }
        (lo, hi)
    }
}

/// SOCr → Qr: `M = AᵀA − ccᵀ`, `β = Aᵀb − cd`, `γ = bᵀb − d²`, branch
/// `(c, d)`. The branch inequality is dropped when `M ⪰ 0` and `(b, d)` is
/// outside the image of `(A; cᵀ)` (it is implied by the quadratic).
pub fn socr_to_qr(s: &SocrSet) -> Result<QuadricSet> {
    if let Some(ex) = &s.exact {
        let at = ex.a.transpose();
        let mut m = at.mul(&ex.a);
        let n = m.rows;
        for i in 0..n {
            for j in 0..n {
                let sub = &ex.c[i] * &ex.c[j];
                m[(i, j)] -= sub;
            }
        }
        let atb = at.mul_vec(&ex.b);
        let beta: Vec<Rat> =
            atb.iter().zip(&ex.c).map(|(v, ci)| v - ci * &ex.d).collect();
        let gamma = rational::dot(&ex.b, &ex.b) - &ex.d * &ex.d;
        let branch = branch_needed(s)?.then(|| (ex.c.clone(), ex.d.clone()));
        return QuadricSet::new_rational(m, beta, gamma, branch);
    }
    let m = s.a.transpose() * &s.a - &s.c * s.c.transpose();
    let beta = s.a.transpose() * &s.b - &s.c * s.d;
    let gamma = s.b.dot(&s.b) - s.d * s.d;
    let branch = branch_needed(s)?.then(|| (s.c.clone(), s.d));
    QuadricSet::new(m, beta, gamma, branch)
}

/// Is the linear inequality `cᵀx ≥ d` load-bearing for the SOCr set?
fn branch_needed(s: &SocrSet) -> Result<bool> {
    let m = s.a.transpose() * &s.a - &s.c * s.c.transpose();
    let (vals, _) = linalg::sym_eigen(&m);
    let tau = 1e-9 * (1.0 + linalg::spectral_norm(&m));
    if vals[0] >= -tau {
        // PSD: redundant unless (b, d) solves the stacked system exactly.
        let mut stacked = DMatrix::zeros(s.a.nrows() + 1, s.dim());
        stacked.view_mut((0, 0), (s.a.nrows(), s.dim())).copy_from(&s.a);
        stacked.view_mut((s.a.nrows(), 0), (1, s.dim())).copy_from(&s.c.transpose());
        let mut rhs = DVector::zeros(s.a.nrows() + 1);
        rhs.view_mut((0, 0), (s.a.nrows(), 1)).copy_from(&s.b);
        rhs[s.a.nrows()] = s.d;
        let (_, residual) = linalg::least_squares(&stacked, &rhs);
        return Ok(residual <= 1e-9 * (1.0 + rhs.norm()));
    }
    Ok(true)
}

/// Qr → Er for ellipsoids: `Q = chol(M)` (upper), `p = Q⁻ᵀβ`,
/// `r = √(pᵀp − γ)`.
pub fn qr_to_er(q: &QuadricSet) -> Result<Ellipsoid> {
    let class = q.class();
    if class.kind == QuadricKind::Empty {
        return Err(ProxError::EmptySet);
    }
    if !matches!(class.kind, QuadricKind::Ellipsoid | QuadricKind::Singleton) {
        return Err(ProxError::WrongQuadricClass(format!("{:?}", class.kind)));
    }
    let chol = linalg::chol_upper(q.m()).ok_or_else(|| {
        ProxError::WrongQuadricClass("M is not positive definite".into())
    })?;
    // p solves Qᵀ p = β
    let p = linalg::solve(&chol.transpose(), q.beta())
        .ok_or_else(|| ProxError::WrongQuadricClass("singular factor".into()))?;
    let r_sq = p.norm_squared() - q.gamma();
    if r_sq < 0.0 {
        return Err(ProxError::EmptySet);
    }
    let mut e = Ellipsoid::new(chol, p, r_sq.sqrt())?;
    if let Some(ex) = q.exact() {
        if let Some((qr, pr, rsq)) = rational_cholesky_er(ex) {
            e.exact = Some(EllipsoidExact { q: qr, p: pr, r_sq: rsq });
        }
    }
    Ok(e)
}

/// Exact Er data when the rational Cholesky factor exists over the rationals
/// (e.g. diagonal M). Falls back to `None` when square roots are irrational.
fn rational_cholesky_er(ex: &QuadricExact) -> Option<(RatMat, Vec<Rat>, Rat)> {
    let n = ex.m.rows;
    let mut u = RatMat::zeros(n, n);
    for i in 0..n {
        let mut diag = ex.m[(i, i)].clone();
        for k in 0..i {
            diag -= &u[(k, i)] * &u[(k, i)];
        }
        let root = rational::sqrt_exact(&diag)?;
        if root.is_zero() {
            return None;
        }
        u[(i, i)] = root.clone();
        for j in (i + 1)..n {
            let mut v = ex.m[(i, j)].clone();
            for k in 0..i {
                v -= &u[(k, i)] * &u[(k, j)];
            }
            u[(i, j)] = v / &root;
        }
    }
    // p solves Uᵀ p = β by forward substitution.
    let mut p = vec![Rat::zero(); n];
    for i in 0..n {
        let mut v = ex.beta[i].clone();
        for k in 0..i {
            v -= &u[(k, i)] * &p[k];
        }
        p[i] = v / &u[(i, i)];
    }
    let r_sq = rational::dot(&p, &p) - ex.gamma.clone();
    if r_sq.is_negative() {
        return None;
    }
    Some((u, p, r_sq))
}

/// SOCr → Er for bounded sets (`AᵀA − ccᵀ ≻ 0`).
pub fn socr_to_er(s: &SocrSet) -> Result<Ellipsoid> {
    qr_to_er(&socr_to_qr(s)?)
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

    fn parabola() -> QuadricSet {
        // x₁² ≤ x₂ as M=diag(1,0), β=(0,1/2), γ=0
        QuadricSet::new_rational(
            RatMat::from_rows(vec![vec![rint(1), rint(0)], vec![rint(0), rint(0)]]),
            vec![Rat::zero(), rat(1, 2)],
            Rat::zero(),
            None,
        )
        .unwrap()
    }

    fn hyperbola(gamma: i64, branch: Option<(Vec<Rat>, Rat)>) -> QuadricSet {
        QuadricSet::new_rational(
            RatMat::from_rows(vec![vec![rint(1), rint(0)], vec![rint(0), rint(-1)]]),
            vec![Rat::zero(), Rat::zero()],
            rint(gamma),
            branch,
        )
        .unwrap()
    }

    #[test]
    fn classify_examples() {
        let c = disk().classify();
        assert_eq!(c.kind, QuadricKind::Ellipsoid);
        assert!((c.qstar.unwrap() - 1.0).abs() < 1e-12);
        assert!(c.center.unwrap().norm() < 1e-12);

        assert_eq!(parabola().classify().kind, QuadricKind::Paraboloid);

        let h = hyperbola(1, None);
        let c = h.classify();
        assert_eq!(c.kind, QuadricKind::TwoSheetHyperboloid);
        assert!((c.qstar.unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn classify_raw_detects_cylinder_and_line() {
        // x₁² − 2x₁ + 1 ≤ 0 with free x₂: β=(1,0), γ=1 gives a line;
        // γ=0 gives a cylinder.
        let m = linalg::dvec(&[1.0, 0.0]);
        let m = DMatrix::from_diagonal(&m);
        let c = classify_raw(&m, &linalg::dvec(&[1.0, 0.0]), 0.0).unwrap();
        assert_eq!(c.kind, QuadricKind::Cylinder);
        let c = classify_raw(&m, &linalg::dvec(&[1.0, 0.0]), 1.0).unwrap();
        assert_eq!(c.kind, QuadricKind::Line);
        // and the validated constructor rejects them
        assert!(matches!(
            QuadricSet::new(m.clone(), linalg::dvec(&[1.0, 0.0]), 0.0, None),
            Err(ProxError::AssumptionViolated(_))
        ));
    }

    #[test]
    fn two_negative_eigenvalues_rejected() {
        let m = DMatrix::from_diagonal(&linalg::dvec(&[-1.0, -2.0]));
        assert!(matches!(
            classify_raw(&m, &linalg::dvec(&[0.0, 0.0]), -1.0),
            Err(ProxError::NotAQuadricOfInterest)
        ));
    }

    #[test]
    fn lineality_checks() {
        assert!(check_lineality_trivial(parabola().m(), parabola().beta(), None));
        let m = DMatrix::from_diagonal(&linalg::dvec(&[1.0, 0.0]));
        assert!(!check_lineality_trivial(&m, &linalg::dvec(&[1.0, 0.0]), None));
        assert!(check_lineality_trivial(&DMatrix::identity(2, 2), &linalg::dvec(&[0.0, 0.0]), None));
    }

    #[test]
    fn branch_bounds_hyperbola() {
        let h = hyperbola(1, None);
        let bb = branch_bounds(&h, &linalg::dvec(&[0.0, 1.0]), Some(0.0)).unwrap();
        assert_eq!(bb.regime, BranchRegime::BoundedBelowOnPlus);
        assert!((bb.h_minus.unwrap() + 1.0).abs() < 1e-9);
        assert!((bb.h_plus.unwrap() - 1.0).abs() < 1e-9);
        assert_eq!(bb.separates, Some(true));

        let bb = branch_bounds(&h, &linalg::dvec(&[1.0, 1.0]), None).unwrap();
        assert_eq!(bb.regime, BranchRegime::Asymptotic);

        let cone = hyperbola(0, None);
        let bb = branch_bounds(&cone, &linalg::dvec(&[0.0, 1.0]), Some(0.0)).unwrap();
        assert_eq!(bb.separates, Some(true));
        let bb = branch_bounds(&cone, &linalg::dvec(&[0.0, 1.0]), Some(0.5)).unwrap();
        assert_eq!(bb.separates, Some(false));

        assert!(branch_bounds(&disk(), &linalg::dvec(&[0.0, 1.0]), None).is_err());
    }

    #[test]
    fn psi_values() {
        // Lorentz cone in 2D: half-angle 45°, depth sin 45° = 1/√2.
        let cone = hyperbola(0, Some((vec![Rat::zero(), rint(1)], Rat::zero())));
        assert!((psi_constant(&cone).unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        // diag(1,-4): wide cone x₂ ≥ |x₁|/2, depth 2/√5.
        let wide = QuadricSet::new_rational(
            RatMat::from_rows(vec![vec![rint(1), rint(0)], vec![rint(0), rint(-4)]]),
            vec![Rat::zero(), Rat::zero()],
            Rat::zero(),
            Some((vec![Rat::zero(), rint(1)], Rat::zero())),
        )
        .unwrap();
        assert!((psi_constant(&wide).unwrap() - 2.0 / 5.0f64.sqrt()).abs() < 1e-12);
        assert!(psi_constant(&disk()).is_err());
    }

    #[test]
    fn ball_shift_parabola() {
        let p = parabola();
        let (theta, u) = ball_shift(&p, &[0.0, 0.0], 0.5).unwrap();
        assert!((theta - 0.75).abs() < 1e-12);
        assert!((u[1] - 1.0).abs() < 1e-12);
        // limit r -> 0
        let (theta, _) = ball_shift(&p, &[0.0, 0.0], 1e-12).unwrap();
        assert!(theta < 1e-9);
        // infeasible anchor
        assert!(matches!(
            ball_shift(&p, &[1.0, 0.0], 0.5),
            Err(ProxError::InfeasibleAnchor(_))
        ));
    }

    #[test]
    fn ball_shift_cone_contains_ball() {
        let cone = hyperbola(0, Some((vec![Rat::zero(), rint(1)], Rat::zero())));
        let (theta, u) = ball_shift(&cone, &[0.0, 0.0], 1.0).unwrap();
        let center = u * theta;
        // sample the ball boundary; all points must satisfy the quadratic
        for k in 0..1000 {
            let ang = 2.0 * std::f64::consts::PI * k as f64 / 1000.0;
            let x = [center[0] + ang.cos(), center[1] + ang.sin()];
            assert!(cone.contains(&x, 1e-9), "boundary point escaped at angle {ang}");
        }
    }

    #[test]
    fn inner_ellipsoid_examples() {
        // unit disk, x̂=(1,0), D=I reproduces the disk itself
        let e = inner_ellipsoid(&disk(), &[1.0, 0.0], &DMatrix::identity(2, 2)).unwrap();
        assert!(e.center().norm() < 1e-12);
        assert!((e.r - 1.0).abs() < 1e-12);

        // paraboloid x̂=(1,1): center (0, 3/2), radius √5/2
        let e = inner_ellipsoid(&parabola(), &[1.0, 1.0], &DMatrix::identity(2, 2)).unwrap();
        let c = e.center();
        assert!((c[0]).abs() < 1e-12 && (c[1] - 1.5).abs() < 1e-12);
        assert!((e.r - 5.0f64.sqrt() / 2.0).abs() < 1e-12);

        // interior anchor gives positive radius containing the anchor
        let e = inner_ellipsoid(&disk(), &[0.2, 0.1], &DMatrix::identity(2, 2)).unwrap();
        assert!(e.r > 0.0);
        assert!(e.contains(&[0.2, 0.1], 1e-9));

        // D too small rejected
        let d = DMatrix::from_diagonal(&linalg::dvec(&[0.5, 0.5]));
        assert!(matches!(
            inner_ellipsoid(&disk(), &[1.0, 0.0], &d),
            Err(ProxError::InvalidRegularizer)
        ));
    }

    #[test]
    fn socr_qr_er_round_trip() {
        // A=I, b=0, c=0, d=-1 → unit disk
        let s = SocrSet::new_rational(
            RatMat::identity(2),
            vec![Rat::zero(), Rat::zero()],
            vec![Rat::zero(), Rat::zero()],
            rint(-1),
        )
        .unwrap();
        let q = socr_to_qr(&s).unwrap();
        assert_eq!(q.classify().kind, QuadricKind::Ellipsoid);
        assert!(q.branch().is_none());
        let e = qr_to_er(&q).unwrap();
        assert!((e.r - 1.0).abs() < 1e-12);
        assert!(e.p.norm() < 1e-12);

        // parabola family from the rhs-dependent example: A=[[1,0],[0,1/2]],
        // c=(0,1/2) – the branch is implied and dropped.
        let s = SocrSet::new_rational(
            RatMat::from_rows(vec![vec![rint(1), rint(0)], vec![rint(0), rat(1, 2)]]),
            vec![rat(9, 2), rint(4)],
            vec![Rat::zero(), rat(1, 2)],
            rat(15, 4),
        )
        .unwrap();
        let q = socr_to_qr(&s).unwrap();
        assert_eq!(q.classify().kind, QuadricKind::Paraboloid);
        assert!(q.branch().is_none());
        // membership equivalence on a few points
        for x in [[4.5, 5.0], [0.0, 0.0], [4.0, 16.0], [10.0, 20.0]] {
            assert_eq!(s.contains(&x, 1e-9), q.contains(&x, 1e-9), "at {x:?}");
        }
    }

    #[test]
    fn qr_to_er_case1_radius() {
        // M=diag(1,N²), β=(0, N²(1/2+1/N)), γ chosen so r = N(1/2−1/N); N=4
        let n = 4i64;
        let m = RatMat::from_rows(vec![
            vec![rint(1), rint(0)],
            vec![rint(0), rint(n * n)],
        ]);
        let beta = vec![Rat::zero(), rint(n * n) * (rat(1, 2) + rat(1, n))];
        let r_target = rat(n, 1) * (rat(1, 2) - rat(1, n));
        let gamma = rint(n * n) * (rat(1, 2) + rat(1, n)) * (rat(1, 2) + rat(1, n))
            - &r_target * &r_target;
        let q = QuadricSet::new_rational(m, beta, gamma, None).unwrap();
        let e = qr_to_er(&q).unwrap();
        assert!((e.r - rational::to_f64(&r_target)).abs() < 1e-12);
        let ex = e.exact.expect("rational Cholesky path");
        assert_eq!(ex.r_sq, &r_target * &r_target);
    }

    #[test]
    fn wrong_class_conversions() {
        assert!(matches!(qr_to_er(&parabola()), Err(ProxError::WrongQuadricClass(_))));
    }
}
