//! Gauss-Jordan elimination over the field of rational functions.
//!
//! Whether an entry counts as zero is delegated to a [`ZeroTest`]: either
//! identically zero (with random-point certification of every pivot), or
//! zero on a sampled constraint surface.

use num::{BigInt, BigRational, Integer, One, Signed, Zero};

use super::expr::Expression;
use super::ideal::{sample_surface, ConstraintIdeal, Surface};
use super::poly::{lcm, Poly};
use super::SymError;

pub type Matrix = Vec<Vec<Expression>>;

pub trait ZeroTest {
    fn is_zero(&self, e: &Expression) -> Result<bool, SymError>;
}

/// Identically-zero test. A symbolically nonzero pivot must be nonzero at
/// one of the certification points, otherwise the rank is unstable.
pub struct Generic {
    points: Vec<Vec<BigRational>>,
}

/// Number of random points used to certify a symbolic pivot.
pub const CERTIFY_POINTS: usize = 10;

impl Generic {
    pub fn new(nvars: usize, nonvanishing: &[Expression], seed: u64) -> Result<Self, SymError> {
        let ideal = ConstraintIdeal::new(nvars, &[], nonvanishing, true)?;
        let points = (0..CERTIFY_POINTS as u64)
            .map(|k| sample_surface(&ideal, seed.wrapping_add(0x5eed).wrapping_mul(31).wrapping_add(k)).map(|s| s.values))
            .collect::<Result<_, _>>()?;
        Ok(Generic { points })
    }
}

impl ZeroTest for Generic {
    fn is_zero(&self, e: &Expression) -> Result<bool, SymError> {
        if e.is_zero() {
            return Ok(true);
        }
        for p in &self.points {
            if let Some(v) = e.eval(p) {
                if !v.is_zero() {
                    return Ok(false);
                }
            }
        }
        Err(SymError::RankInstability)
    }
}

impl ZeroTest for Surface {
    fn is_zero(&self, e: &Expression) -> Result<bool, SymError> {
        self.vanishes(e)
    }
}

/// Reduced row echelon form and its pivot columns.
#[derive(Clone, Debug)]
pub struct Echelon {
    pub reduced: Matrix,
    pub pivots: Vec<usize>,
}

impl Echelon {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }
}

pub fn row_reduce(m: &Matrix, ncols: usize, zt: &dyn ZeroTest) -> Result<Echelon, SymError> {
    let mut a = m.clone();
    let rows = a.len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == rows {
            break;
        }
        let mut found = None;
        for i in r..rows {
            if zt.is_zero(&a[i][c])? {
                a[i][c] = Expression::zero(a[i][c].nvars());
            } else {
                found = Some(i);
                break;
            }
        }
        let Some(i) = found else { continue };
        a.swap(r, i);
        let inv = a[r][c].recip()?;
        for entry in a[r].iter_mut() {
            *entry = &*entry * &inv;
        }
        for k in 0..rows {
            if k == r || a[k][c].is_zero() {
                continue;
            }
            let f = a[k][c].clone();
            for j in 0..a[k].len() {
                if a[r][j].is_zero() {
                    continue;
                }
                let t = &f * &a[r][j];
                a[k][j] = &a[k][j] - &t;
            }
            a[k][c] = Expression::zero(f.nvars());
        }
        pivots.push(c);
        r += 1;
    }
    Ok(Echelon { reduced: a, pivots })
}

pub fn rank(m: &Matrix, ncols: usize, zt: &dyn ZeroTest) -> Result<usize, SymError> {
    Ok(row_reduce(m, ncols, zt)?.rank())
}

/// Basis of `{ v : m v = 0 }`, one vector per free column, normalized with
/// [`normalize_vector`].
pub fn null_space(m: &Matrix, ncols: usize, nvars: usize, zt: &dyn ZeroTest) -> Result<Vec<Vec<Expression>>, SymError> {
    let ech = row_reduce(m, ncols, zt)?;
    let mut basis = Vec::new();
    for f in (0..ncols).filter(|c| !ech.pivots.contains(c)) {
        let mut v = vec![Expression::zero(nvars); ncols];
        v[f] = Expression::one(nvars);
        for (row, &pc) in ech.pivots.iter().enumerate() {
            v[pc] = -&ech.reduced[row][f];
        }
        basis.push(normalize_vector(&v));
    }
    Ok(basis)
}

/// A particular solution of `a x = b` (free unknowns set to zero), or
/// `None` when the system is inconsistent.
pub fn solve(a: &Matrix, b: &[Expression], ncols: usize, zt: &dyn ZeroTest) -> Result<Option<Vec<Expression>>, SymError> {
    let nvars = b.first().map(Expression::nvars).unwrap_or(0);
    let aug: Matrix = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    let ech = row_reduce(&aug, ncols + 1, zt)?;
    if ech.pivots.contains(&ncols) {
        return Ok(None);
    }
    let mut x = vec![Expression::zero(nvars); ncols];
    for (row, &pc) in ech.pivots.iter().enumerate() {
        x[pc] = ech.reduced[row][ncols].clone();
    }
    Ok(Some(x))
}

/// Scales a vector so that its entries are polynomials with no common
/// factor and coprime integer coefficients, and the first nonzero entry has
/// a positive leading coefficient.
pub fn normalize_vector(v: &[Expression]) -> Vec<Expression> {
    let Some(first) = v.iter().find(|e| !e.is_zero()) else {
        return v.to_vec();
    };
    let n = first.nvars();
    let mut l = Poly::one(n);
    for e in v {
        if !e.is_zero() {
            l = lcm(&l, e.denominator());
        }
    }
    let le = Expression::from_poly(l);
    let polys: Vec<Poly> = v.iter().map(|e| (e * &le).numerator().clone()).collect();
    let g = super::poly::gcd_list(&polys, n);
    let polys: Vec<Poly> = polys
        .iter()
        .map(|p| if p.is_zero() { p.clone() } else { p.div_exact(&g).expect("gcd divides") })
        .collect();
    let mut den_lcm = BigInt::one();
    let mut num_gcd = BigInt::zero();
    for p in &polys {
        for (_, c) in p.terms() {
            den_lcm = den_lcm.lcm(c.denom());
        }
    }
    for p in &polys {
        for (_, c) in p.terms() {
            num_gcd = num_gcd.gcd(&(c.numer() * (&den_lcm / c.denom())));
        }
    }
    let mut k = BigRational::new(den_lcm, num_gcd);
    let lead = polys.iter().find(|p| !p.is_zero()).unwrap().leading_coefficient();
    if lead.is_negative() {
        k = -k;
    }
    polys.iter().map(|p| Expression::from_poly(p.scale(&k))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symcore::parse::parse_expression;
    use crate::symcore::vars::VariableTable;

    fn t() -> VariableTable {
        VariableTable::new(&["x", "y", "z"], &[]).unwrap()
    }

    fn e(s: &str) -> Expression {
        parse_expression(s, &t()).unwrap()
    }

    fn gen() -> Generic {
        Generic::new(9, &[e("z")], 0).unwrap()
    }

    #[test]
    fn rank_and_null_space_of_singular_hessian() {
        let w = vec![
            vec![e("1"), e("0"), e("0")],
            vec![e("0"), e("1/z"), e("0")],
            vec![e("0"), e("0"), e("0")],
        ];
        assert_eq!(rank(&w, 3, &gen()).unwrap(), 2);
        let ns = null_space(&w, 3, 9, &gen()).unwrap();
        assert_eq!(ns, vec![vec![e("0"), e("0"), e("1")]]);
    }

    #[test]
    fn null_vectors_are_denominator_free() {
        let m = vec![vec![e("1/z"), e("x/(2*z^2)")]];
        let ns = null_space(&m, 2, 9, &gen()).unwrap();
        assert_eq!(ns, vec![vec![e("x"), e("-2*z")]]);
    }

    #[test]
    fn solves_linear_systems() {
        let a = vec![vec![e("0"), e("-1")], vec![e("1"), e("0")]];
        let b = vec![e("x"), e("y")];
        let x = solve(&a, &b, 2, &gen()).unwrap().unwrap();
        assert_eq!(x, vec![e("y"), e("-x")]);
        let a = vec![vec![e("1")], vec![e("2")]];
        assert!(solve(&a, &[e("1"), e("3")], 1, &gen()).unwrap().is_none());
    }
}
