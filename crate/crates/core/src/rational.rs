//! Exact rational arithmetic helpers.
//!
//! Rational data is carried exactly through lattice orthogonalization,
//! Gram-matrix reductions and the slice-coefficient algebra; conversion to
//! binary floating point happens at the last step (norm evaluation,
//! reporting). Matrices here are tiny (dimensions ≤ 13), so a dense
//! row-major `Vec` with Gauss–Jordan inversion is plenty.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rat = BigRational;

/// `n/d` as an exact rational.
pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// Integer as an exact rational.
pub fn rint(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Parse "p/q", a plain integer, or a decimal literal into an exact rational.
pub fn parse_rat(s: &str) -> Option<Rat> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num.trim().parse().ok()?;
        let d: BigInt = den.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(Rat::new(n, d));
    }
    if let Ok(n) = s.parse::<BigInt>() {
        return Some(Rat::from_integer(n));
    }
    // Decimal literal: keep it exact (e.g. "0.25" -> 1/4).
    if let Some((int_part, frac_part)) = s.split_once('.') {
        let neg = int_part.trim_start().starts_with('-');
        let i: BigInt = if int_part.is_empty() || int_part == "-" {
            BigInt::zero()
        } else {
            int_part.parse().ok()?
        };
        if frac_part.chars().any(|c| !c.is_ascii_digit()) {
            return None;
        }
        let f: BigInt = if frac_part.is_empty() {
            BigInt::zero()
        } else {
            frac_part.parse().ok()?
        };
        let scale = BigInt::from(10u32).pow(frac_part.len() as u32);
        let mag = Rat::new(i.abs() * &scale + f, scale);
        return Some(if neg { -mag } else { mag });
    }
    None
}

/// Round to the nearest integer (half away from zero).
pub fn round_rat(r: &Rat) -> BigInt {
    let half = rat(1, 2);
    if r.is_negative() {
        -((half - r).floor().to_integer())
    } else {
        (r + half).floor().to_integer()
    }
}

/// Exact square root when `r` is a perfect square of a rational.
pub fn sqrt_exact(r: &Rat) -> Option<Rat> {
    if r.is_negative() {
        return None;
    }
    let ns = r.numer().sqrt();
    let ds = r.denom().sqrt();
    if &ns * &ns == *r.numer() && &ds * &ds == *r.denom() {
        Some(Rat::new(ns, ds))
    } else {
        None
    }
}

pub fn dot(a: &[Rat], b: &[Rat]) -> Rat {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Greatest common divisor of the numerators after clearing denominators;
/// returns (gcd-as-rational, integer vector `v` with `alpha = gcd * v`).
pub fn clear_and_factor(alpha: &[Rat]) -> Option<(Rat, Vec<BigInt>)> {
    if alpha.iter().all(|a| a.is_zero()) {
        return None;
    }
    let mut lcm = BigInt::one();
    for a in alpha {
        lcm = lcm.lcm(a.denom());
    }
    let ints: Vec<BigInt> = alpha.iter().map(|a| (a * &lcm).to_integer()).collect();
    let mut g = BigInt::zero();
    for v in &ints {
        g = g.gcd(v);
    }
    let v: Vec<BigInt> = ints.iter().map(|x| x / &g).collect();
    Some((Rat::new(g, lcm), v))
}

/// Dense rational matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RatMat {
    pub rows: usize,
    pub cols: usize,
    data: Vec<Rat>,
}

impl RatMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RatMat { rows, cols, data: vec![Rat::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Rat::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Rat>>) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        assert!(rows.iter().all(|row| row.len() == c));
        RatMat { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn from_i64_rows(rows: &[&[i64]]) -> Self {
        Self::from_rows(rows.iter().map(|r| r.iter().map(|&v| rint(v)).collect()).collect())
    }

    pub fn col(&self, j: usize) -> Vec<Rat> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn row(&self, i: usize) -> Vec<Rat> {
        (0..self.cols).map(|j| self[(i, j)].clone()).collect()
    }

    pub fn transpose(&self) -> RatMat {
        let mut t = RatMat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &RatMat) -> RatMat {
        assert_eq!(self.cols, other.rows);
        let mut out = RatMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                if self[(i, k)].is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let add = &self[(i, k)] * &other[(k, j)];
                    out[(i, j)] += add;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Rat]) -> Vec<Rat> {
        assert_eq!(self.cols, v.len());
        (0..self.rows).map(|i| dot(&self.row(i), v)).collect()
    }

    /// Gram matrix of the columns, `AᵀA`.
    pub fn gram(&self) -> RatMat {
        self.transpose().mul(self)
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..i).all(|j| self[(i, j)] == self[(j, i)]))
    }

    /// Gauss–Jordan inverse; `None` when singular.
    pub fn inverse(&self) -> Option<RatMat> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = RatMat::identity(n);
        for col in 0..n {
            let pivot = (col..n).find(|&r| !a[(r, col)].is_zero())?;
            if pivot != col {
                for j in 0..n {
                    let (x, y) = (a[(pivot, j)].clone(), a[(col, j)].clone());
                    a[(pivot, j)] = y;
                    a[(col, j)] = x;
                    let (x, y) = (inv[(pivot, j)].clone(), inv[(col, j)].clone());
                    inv[(pivot, j)] = y;
                    inv[(col, j)] = x;
                }
            }
            let p = a[(col, col)].clone();
            for j in 0..n {
                a[(col, j)] /= p.clone();
                inv[(col, j)] /= p.clone();
            }
            for r in 0..n {
                if r == col || a[(r, col)].is_zero() {
                    continue;
                }
                let f = a[(r, col)].clone();
                for j in 0..n {
                    let s = &f * &a[(col, j)];
                    a[(r, j)] -= s;
                    let s = &f * &inv[(col, j)];
                    inv[(r, j)] -= s;
                }
            }
        }
        Some(inv)
    }

    /// Solve `self * x = b` exactly; `None` when singular/inconsistent is not
    /// detected here (square systems only).
    pub fn solve(&self, b: &[Rat]) -> Option<Vec<Rat>> {
        Some(self.inverse()?.mul_vec(b))
    }

    pub fn rank(&self) -> usize {
        let mut a = self.clone();
        let mut rank = 0;
        let mut row = 0;
        for col in 0..a.cols {
            let pivot = (row..a.rows).find(|&r| !a[(r, col)].is_zero());
            let Some(p) = pivot else { continue };
            if p != row {
                for j in 0..a.cols {
                    let (x, y) = (a[(p, j)].clone(), a[(row, j)].clone());
                    a[(p, j)] = y;
                    a[(row, j)] = x;
                }
            }
            for r in (row + 1)..a.rows {
                if a[(r, col)].is_zero() {
                    continue;
                }
                let f = &a[(r, col)] / &a[(row, col)];
                for j in col..a.cols {
                    let s = &f * &a[(row, j)];
                    a[(r, j)] -= s;
                }
            }
            rank += 1;
            row += 1;
            if row == a.rows {
                break;
            }
        }
        rank
    }

    pub fn to_f64(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.rows, self.cols, |i, j| to_f64(&self[(i, j)]))
    }
}

impl std::ops::Index<(usize, usize)> for RatMat {
    type Output = Rat;
    fn index(&self, (i, j): (usize, usize)) -> &Rat {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for RatMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Rat {
        &mut self.data[i * self.cols + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(parse_rat("3/4").unwrap(), rat(3, 4));
        assert_eq!(parse_rat("-7").unwrap(), rint(-7));
        assert_eq!(parse_rat("0.25").unwrap(), rat(1, 4));
        assert_eq!(parse_rat("-1.5").unwrap(), rat(-3, 2));
        assert!(parse_rat("1/0").is_none());
    }

    #[test]
    fn inverse_round_trip() {
        let m = RatMat::from_i64_rows(&[&[2, 1], &[1, 1]]);
        let inv = m.inverse().unwrap();
        assert_eq!(m.mul(&inv), RatMat::identity(2));
    }

    #[test]
    fn perfect_square_roots() {
        assert_eq!(sqrt_exact(&rat(9, 4)).unwrap(), rat(3, 2));
        assert!(sqrt_exact(&rat(2, 1)).is_none());
    }

    #[test]
    fn factor_objective() {
        let (g, v) = clear_and_factor(&[rat(2, 1), rat(4, 1)]).unwrap();
        assert_eq!(g, rint(2));
        assert_eq!(v, vec![BigInt::from(1), BigInt::from(2)]);
        let (g, v) = clear_and_factor(&[rat(1, 2), rat(1, 3)]).unwrap();
        assert_eq!(g, rat(1, 6));
        assert_eq!(v, vec![BigInt::from(3), BigInt::from(2)]);
    }

    #[test]
    fn rounding() {
        assert_eq!(round_rat(&rat(3, 2)), BigInt::from(2));
        assert_eq!(round_rat(&rat(-3, 2)), BigInt::from(-2));
        assert_eq!(round_rat(&rat(1, 3)), BigInt::from(0));
    }
}
