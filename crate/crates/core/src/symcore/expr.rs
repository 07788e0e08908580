//! Canonical rational functions.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use num::{BigInt, BigRational, One, Signed, Zero};

use super::poly::{gcd, Poly};
use super::vars::VariableTable;
use super::SymError;

/// An exact rational function `num / den`.
///
/// Canonical form: `num` and `den` are coprime, `den` has coprime integer
/// coefficients and a positive leading coefficient (grlex), and zero is
/// `0 / 1`. Structural equality is therefore mathematical equality.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Expression {
    num: Poly,
    den: Poly,
}

impl Expression {
    pub fn zero(nvars: usize) -> Self {
        Expression {
            num: Poly::zero(nvars),
            den: Poly::one(nvars),
        }
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, BigRational::one())
    }

    pub fn constant(nvars: usize, c: BigRational) -> Self {
        Expression {
            num: Poly::constant(nvars, c),
            den: Poly::one(nvars),
        }
    }

    pub fn int(nvars: usize, k: i64) -> Self {
        Self::constant(nvars, BigRational::from_integer(BigInt::from(k)))
    }

    pub fn rational(nvars: usize, n: i64, d: i64) -> Self {
        Self::constant(nvars, BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn var(nvars: usize, index: usize) -> Self {
        Self::from_poly(Poly::var(nvars, index))
    }

    pub fn from_poly(p: Poly) -> Self {
        let n = p.nvars();
        Expression {
            num: p,
            den: Poly::one(n),
        }
    }

    /// Builds `num / den` and brings it into canonical form.
    pub fn from_parts(num: Poly, den: Poly) -> Result<Self, SymError> {
        if den.is_zero() {
            return Err(SymError::DivisionByZero);
        }
        if num.is_zero() {
            return Ok(Self::zero(num.nvars()));
        }
        if den.is_constant() {
            let k = den.constant_value();
            return Ok(Self::from_poly(num.scale(&k.recip())));
        }
        let g = gcd(&num, &den);
        let (num, den) = if g.is_constant() {
            (num, den)
        } else {
            (
                num.div_exact(&g).expect("gcd divides numerator"),
                den.div_exact(&g).expect("gcd divides denominator"),
            )
        };
        Ok(Self::from_coprime(num, den))
    }

    fn from_coprime(num: Poly, den: Poly) -> Self {
        let (k, den) = den.primitive();
        let num = num.scale(&k.recip());
        if den.is_one() {
            return Self::from_poly(num);
        }
        Expression { num, den }
    }

    pub fn nvars(&self) -> usize {
        self.num.nvars()
    }

    pub fn numerator(&self) -> &Poly {
        &self.num
    }

    pub fn denominator(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_one()
    }

    pub fn is_constant(&self) -> bool {
        self.den.is_one() && self.num.is_constant()
    }

    pub fn constant_value(&self) -> Option<BigRational> {
        self.is_constant().then(|| self.num.constant_value())
    }

    pub fn contains_var(&self, var: usize) -> bool {
        self.num.contains_var(var) || self.den.contains_var(var)
    }

    pub fn present_vars(&self) -> Vec<bool> {
        let a = self.num.present_vars();
        let b = self.den.present_vars();
        a.into_iter().zip(b).map(|(x, y)| x || y).collect()
    }

    pub fn scale(&self, c: &BigRational) -> Expression {
        if c.is_zero() {
            return Self::zero(self.nvars());
        }
        Expression {
            num: self.num.scale(c),
            den: self.den.clone(),
        }
    }

    pub fn checked_div(&self, rhs: &Expression) -> Result<Expression, SymError> {
        if rhs.is_zero() {
            return Err(SymError::DivisionByZero);
        }
        if self.is_zero() {
            return Ok(self.clone());
        }
        let inv = Expression::from_coprime(rhs.den.clone(), rhs.num.clone());
        Ok(self * &inv)
    }

    pub fn recip(&self) -> Result<Expression, SymError> {
        Expression::one(self.nvars()).checked_div(self)
    }

    pub fn pow(&self, e: i32) -> Result<Expression, SymError> {
        if e < 0 {
            return self.recip()?.pow(-e);
        }
        let e = e as u32;
        Ok(Expression {
            num: self.num.pow(e),
            den: self.den.pow(e),
        })
    }

    pub fn differentiate(&self, var: usize) -> Expression {
        if self.den.is_one() {
            return Self::from_poly(self.num.derivative(var));
        }
        let dn = self.num.derivative(var);
        let dd = self.den.derivative(var);
        if dd.is_zero() {
            return Self::from_parts(dn, self.den.clone()).expect("nonzero denominator");
        }
        // With s = gcd(D, D'), (N/D)' = (N' D/s - N D'/s) / (D D/s). A factor
        // of D that involves `var` cannot divide the new numerator, so only
        // factors of D free of `var` may cancel, and those all divide s.
        let s = gcd(&self.den, &dd);
        let ds = self.den.div_exact(&s).expect("gcd divides");
        let dds = dd.div_exact(&s).expect("gcd divides");
        let top = &(&dn * &ds) - &(&self.num * &dds);
        if top.is_zero() {
            return Self::zero(self.nvars());
        }
        let h = gcd(&top, &s);
        let top = top.div_exact(&h).expect("gcd divides");
        let den = &self.den.div_exact(&h).expect("gcd divides") * &ds;
        Self::from_coprime(top, den)
    }

    pub fn eval(&self, point: &[BigRational]) -> Option<BigRational> {
        let d = self.den.eval(point);
        if d.is_zero() {
            return None;
        }
        Some(self.num.eval(point) / d)
    }

    /// Simultaneous substitution `var -> expression`.
    pub fn substitute(&self, bindings: &BTreeMap<usize, Expression>) -> Result<Expression, SymError> {
        if bindings.is_empty() {
            return Ok(self.clone());
        }
        let (nn, nd) = substitute_poly(&self.num, bindings);
        if nn.is_zero() {
            return Ok(Self::zero(self.nvars()));
        }
        let (dn, dd) = substitute_poly(&self.den, bindings);
        if dn.is_zero() {
            return Err(SymError::DivisionByZero);
        }
        Self::from_parts(&nn * &dd, &nd * &dn)
    }

    /// Re-embeds into a table that has extra trailing (auxiliary) variables.
    pub fn extend_vars(&self, nvars: usize) -> Expression {
        Expression {
            num: extend_poly(&self.num, nvars),
            den: extend_poly(&self.den, nvars),
        }
    }

    /// Renders in the input grammar.
    pub fn render(&self, vars: &VariableTable) -> String {
        let num = render_poly(&self.num, vars);
        if self.den.is_one() {
            return num;
        }
        let num = if self.num.num_terms() > 1 {
            format!("({num})")
        } else {
            num
        };
        let den = render_poly(&self.den, vars);
        let simple_den = self.den.num_terms() == 1
            && self.den.leading_coefficient().is_one()
            && self
                .den
                .leading()
                .map(|(m, _)| m.exponents().iter().filter(|&&e| e > 0).count() == 1)
                .unwrap_or(false);
        if simple_den {
            format!("{num}/{den}")
        } else {
            format!("{num}/({den})")
        }
    }
}

fn extend_poly(p: &Poly, nvars: usize) -> Poly {
    let mut out = Poly::zero(nvars);
    for (m, c) in p.terms() {
        let mut e = m.exponents().to_vec();
        e.resize(nvars, 0);
        out = &out + &Poly::term(c.clone(), super::poly::Monomial::from_exponents(e));
    }
    out
}

/// Substitutes into a polynomial over a common denominator; returns the
/// unreduced pair `(numerator, denominator)`.
fn substitute_poly(p: &Poly, bindings: &BTreeMap<usize, Expression>) -> (Poly, Poly) {
    let n = p.nvars();
    let maxdeg: BTreeMap<usize, u32> = bindings
        .keys()
        .map(|&v| (v, p.degree_in(v)))
        .filter(|&(_, d)| d > 0)
        .collect();
    let mut num_pows: BTreeMap<usize, Vec<Poly>> = BTreeMap::new();
    let mut den_pows: BTreeMap<usize, Vec<Poly>> = BTreeMap::new();
    let mut common = Poly::one(n);
    for (&v, &d) in &maxdeg {
        let b = &bindings[&v];
        let mut np = vec![Poly::one(n)];
        let mut dp = vec![Poly::one(n)];
        for k in 1..=d as usize {
            np.push(&np[k - 1] * &b.num);
            dp.push(&dp[k - 1] * &b.den);
        }
        common = &common * &dp[d as usize];
        num_pows.insert(v, np);
        den_pows.insert(v, dp);
    }
    let mut total = Poly::zero(n);
    for (m, c) in p.terms() {
        let mut rest = m.exponents().to_vec();
        let mut t = Poly::one(n);
        for (&v, &d) in &maxdeg {
            let e = rest[v];
            rest[v] = 0;
            t = &t * &num_pows[&v][e as usize];
            let comp = d - e;
            if comp > 0 {
                t = &t * &den_pows[&v][comp as usize];
            }
        }
        let base = Poly::term(c.clone(), super::poly::Monomial::from_exponents(rest));
        total = &total + &(&base * &t);
    }
    (total, common)
}

fn render_rational(c: &BigRational) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

fn render_poly(p: &Poly, vars: &VariableTable) -> String {
    if p.is_zero() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (i, (m, c)) in p.terms().rev().enumerate() {
        let neg = c.is_negative();
        let abs = c.abs();
        if i == 0 {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        let factors: Vec<String> = m
            .exponents()
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > 0)
            .map(|(v, &e)| {
                if e == 1 {
                    vars.name(v).to_string()
                } else {
                    format!("{}^{}", vars.name(v), e)
                }
            })
            .collect();
        if factors.is_empty() {
            out.push_str(&render_rational(&abs));
        } else {
            if !abs.is_one() {
                out.push_str(&render_rational(&abs));
                out.push('*');
            }
            out.push_str(&factors.join("*"));
        }
    }
    out
}

impl Add for &Expression {
    type Output = Expression;
    fn add(self, rhs: &Expression) -> Expression {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        if self.den == rhs.den {
            let num = &self.num + &rhs.num;
            if self.den.is_one() {
                return Expression::from_poly(num);
            }
            return Expression::from_parts(num, self.den.clone()).expect("nonzero denominator");
        }
        let g = gcd(&self.den, &rhs.den);
        let bd = self.den.div_exact(&g).expect("gcd divides");
        let dd = rhs.den.div_exact(&g).expect("gcd divides");
        // Any factor shared by the new numerator and denominator divides g.
        let num = &(&self.num * &dd) + &(&rhs.num * &bd);
        if num.is_zero() {
            return Expression::zero(self.nvars());
        }
        let h = gcd(&num, &g);
        let num = num.div_exact(&h).expect("gcd divides");
        let den = &bd * &rhs.den.div_exact(&h).expect("gcd divides");
        Expression::from_coprime(num, den)
    }
}

impl Sub for &Expression {
    type Output = Expression;
    fn sub(self, rhs: &Expression) -> Expression {
        self + &(-rhs)
    }
}

impl Neg for &Expression {
    type Output = Expression;
    fn neg(self) -> Expression {
        Expression {
            num: -&self.num,
            den: self.den.clone(),
        }
    }
}

impl Mul for &Expression {
    type Output = Expression;
    fn mul(self, rhs: &Expression) -> Expression {
        if self.is_zero() || rhs.is_zero() {
            return Expression::zero(self.nvars());
        }
        if self.den.is_one() && rhs.den.is_one() {
            return Expression::from_poly(&self.num * &rhs.num);
        }
        let g1 = gcd(&self.num, &rhs.den);
        let g2 = gcd(&rhs.num, &self.den);
        let a = self.num.div_exact(&g1).expect("gcd divides");
        let d = rhs.den.div_exact(&g1).expect("gcd divides");
        let c = rhs.num.div_exact(&g2).expect("gcd divides");
        let b = self.den.div_exact(&g2).expect("gcd divides");
        Expression::from_coprime(&a * &c, &b * &d)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Expression {
            type Output = Expression;
            fn $m(self, rhs: Expression) -> Expression {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Expression> for Expression {
            type Output = Expression;
            fn $m(self, rhs: &Expression) -> Expression {
                (&self).$m(rhs)
            }
        }
        impl $tr<Expression> for &Expression {
            type Output = Expression;
            fn $m(self, rhs: Expression) -> Expression {
                self.$m(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Expression {
    type Output = Expression;
    fn neg(self) -> Expression {
        -&self
    }
}

impl std::iter::Sum for Expression {
    fn sum<I: Iterator<Item = Expression>>(mut iter: I) -> Self {
        let first = iter.next().expect("sum of an empty iterator needs an explicit zero");
        iter.fold(first, |acc, e| &acc + &e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(i: usize) -> Expression {
        Expression::var(4, i)
    }

    #[test]
    fn cancellation_gives_identical_normal_forms() {
        // z * (dy / z) - dy == 0
        let z = v(2);
        let dy = v(1);
        let q = dy.checked_div(&z).unwrap();
        assert!((&(&z * &q) - &dy).is_zero());
    }

    #[test]
    fn denominator_is_primitive_integer() {
        // dy^2 / (2 z) -> (1/2) dy^2 / z
        let e = v(1).pow(2).unwrap().checked_div(&(&Expression::int(4, 2) * &v(2))).unwrap();
        assert_eq!(e.denominator(), &Poly::var(4, 2));
        assert_eq!(e.numerator(), &Poly::var(4, 1).pow(2).scale(&BigRational::new(1.into(), 2.into())));
    }

    #[test]
    fn quotient_rule() {
        // d/dz (dy^2/(2z)) = -dy^2/(2 z^2)
        let e = v(1).pow(2).unwrap().checked_div(&(&Expression::int(4, 2) * &v(2))).unwrap();
        let d = e.differentiate(2);
        let expected = -&(v(1).pow(2).unwrap().checked_div(&(&Expression::int(4, 2) * &v(2).pow(2).unwrap())).unwrap());
        assert_eq!(d, expected);
    }

    #[test]
    fn substitution_through_denominators() {
        // (1/2) z p^2 with p -> dy/z gives dy^2/(2z)
        let half = Expression::rational(4, 1, 2);
        let e = &(&half * &v(2)) * &v(3).pow(2).unwrap();
        let mut b = BTreeMap::new();
        b.insert(3, v(1).checked_div(&v(2)).unwrap());
        let s = e.substitute(&b).unwrap();
        let expected = v(1).pow(2).unwrap().checked_div(&(&Expression::int(4, 2) * &v(2))).unwrap();
        assert_eq!(s, expected);
    }

    #[test]
    fn forced_singularity_is_an_error() {
        let e = v(2).recip().unwrap();
        let mut b = BTreeMap::new();
        b.insert(2, Expression::zero(4));
        assert!(matches!(e.substitute(&b), Err(SymError::DivisionByZero)));
    }
}
