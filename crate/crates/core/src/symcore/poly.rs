//! Sparse multivariate polynomials over the rationals.
//!
//! Every polynomial carries the number of variables of the table it was built
//! from; exponent vectors are dense. Terms are kept in a `BTreeMap` ordered by
//! graded-lexicographic order, where an earlier variable is larger than a
//! later one, so the leading term is always the last entry of the map.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num::{BigInt, BigRational, Integer, One, Signed, Zero};

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn one(nvars: usize) -> Self {
        Monomial(vec![0; nvars])
    }

    pub fn var(nvars: usize, index: usize) -> Self {
        let mut e = vec![0; nvars];
        e[index] = 1;
        Monomial(e)
    }

    pub fn from_exponents(exps: Vec<u32>) -> Self {
        Monomial(exps)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn exponent(&self, var: usize) -> u32 {
        self.0[var]
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn divides(&self, other: &Monomial) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `self / other`; caller guarantees divisibility.
    pub fn div(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    fn with_exponent(&self, var: usize, e: u32) -> Monomial {
        let mut m = self.0.clone();
        m[var] = e;
        Monomial(m)
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Poly {
    nvars: usize,
    terms: BTreeMap<Monomial, BigRational>,
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (m, c) in self.terms.iter().rev() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{}*{:?}", c, m.0)?;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Poly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, BigRational::one())
    }

    pub fn constant(nvars: usize, c: BigRational) -> Self {
        let mut p = Self::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(Monomial::one(nvars), c);
        }
        p
    }

    pub fn from_int(nvars: usize, c: i64) -> Self {
        Self::constant(nvars, BigRational::from_integer(BigInt::from(c)))
    }

    pub fn var(nvars: usize, index: usize) -> Self {
        Self::term(BigRational::one(), Monomial::var(nvars, index))
    }

    pub fn term(c: BigRational, m: Monomial) -> Self {
        let nvars = m.0.len();
        let mut p = Self::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(m, c);
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &BigRational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        match self.terms.len() {
            0 => true,
            1 => self.terms.keys().next().unwrap().is_one(),
            _ => false,
        }
    }

    pub fn is_one(&self) -> bool {
        self.is_constant() && self.constant_value().is_one()
    }

    /// Constant term.
    pub fn constant_value(&self) -> BigRational {
        self.terms
            .get(&Monomial::one(self.nvars))
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn leading(&self) -> Option<(&Monomial, &BigRational)> {
        self.terms.iter().next_back()
    }

    pub fn leading_coefficient(&self) -> BigRational {
        self.leading()
            .map(|(_, c)| c.clone())
            .unwrap_or_else(BigRational::zero)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn degree_in(&self, var: usize) -> u32 {
        self.terms.keys().map(|m| m.0[var]).max().unwrap_or(0)
    }

    pub fn contains_var(&self, var: usize) -> bool {
        self.terms.keys().any(|m| m.0[var] > 0)
    }

    pub fn present_vars(&self) -> Vec<bool> {
        let mut out = vec![false; self.nvars];
        for m in self.terms.keys() {
            for (i, &e) in m.0.iter().enumerate() {
                if e > 0 {
                    out[i] = true;
                }
            }
        }
        out
    }

    fn add_term(&mut self, m: Monomial, c: BigRational) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn scale(&self, c: &BigRational) -> Poly {
        if c.is_zero() {
            return Poly::zero(self.nvars);
        }
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, k)| (m.clone(), k * c)).collect(),
        }
    }

    fn mul_term(&self, m: &Monomial, c: &BigRational) -> Poly {
        Poly {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(tm, tc)| (tm.mul(m), tc * c))
                .collect(),
        }
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut result = Poly::one(self.nvars);
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        result
    }

    pub fn derivative(&self, var: usize) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (m, c) in &self.terms {
            let e = m.0[var];
            if e == 0 {
                continue;
            }
            let k = c * BigRational::from_integer(BigInt::from(e));
            out.add_term(m.with_exponent(var, e - 1), k);
        }
        out
    }

    pub fn eval(&self, point: &[BigRational]) -> BigRational {
        let mut acc = BigRational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (i, &e) in m.0.iter().enumerate() {
                if e > 0 {
                    t *= num::pow(point[i].clone(), e as usize);
                }
            }
            acc += t;
        }
        acc
    }

    /// Substitutes the assigned variables and keeps the rest symbolic.
    pub fn partial_eval(&self, point: &[Option<BigRational>]) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (m, c) in &self.terms {
            let mut k = c.clone();
            let mut rest = m.0.clone();
            for (i, e) in rest.iter_mut().enumerate() {
                if *e > 0 {
                    if let Some(v) = &point[i] {
                        k *= num::pow(v.clone(), *e as usize);
                        *e = 0;
                    }
                }
            }
            out.add_term(Monomial(rest), k);
        }
        out
    }

    /// Coefficients with respect to `var`, indexed by power.
    pub fn coefficients_in(&self, var: usize) -> Vec<Poly> {
        let deg = self.degree_in(var) as usize;
        let mut out = vec![Poly::zero(self.nvars); deg + 1];
        if self.is_zero() {
            return vec![];
        }
        for (m, c) in &self.terms {
            let e = m.0[var] as usize;
            out[e].add_term(m.with_exponent(var, 0), c.clone());
        }
        out
    }

    pub fn from_coefficients_in(nvars: usize, var: usize, coeffs: &[Poly]) -> Poly {
        let mut out = Poly::zero(nvars);
        for (k, c) in coeffs.iter().enumerate() {
            for (m, v) in &c.terms {
                out.add_term(m.with_exponent(var, m.0[var] + k as u32), v.clone());
            }
        }
        out
    }

    /// Scales so that the leading coefficient is one.
    pub fn monic(&self) -> Poly {
        match self.leading() {
            None => self.clone(),
            Some((_, c)) => {
                let inv = c.recip();
                self.scale(&inv)
            }
        }
    }

    /// Returns `(k, p)` with `self = k * p`, `p` having coprime integer
    /// coefficients and a positive leading coefficient.
    pub fn primitive(&self) -> (BigRational, Poly) {
        if self.is_zero() {
            return (BigRational::one(), self.clone());
        }
        let mut den_lcm = BigInt::one();
        for c in self.terms.values() {
            den_lcm = den_lcm.lcm(c.denom());
        }
        let mut num_gcd = BigInt::zero();
        for c in self.terms.values() {
            let v = c.numer() * (&den_lcm / c.denom());
            num_gcd = num_gcd.gcd(&v);
        }
        let mut k = BigRational::new(num_gcd, den_lcm);
        if self.leading_coefficient().is_negative() {
            k = -k;
        }
        let inv = k.recip();
        (k, self.scale(&inv))
    }

    /// Exact division; `None` if `d` does not divide `self`.
    pub fn div_exact(&self, d: &Poly) -> Option<Poly> {
        assert!(!d.is_zero(), "division by zero polynomial");
        if d.is_constant() {
            return Some(self.scale(&d.constant_value().recip()));
        }
        if self.is_zero() {
            return Some(Poly::zero(self.nvars));
        }
        if (0..self.nvars).any(|v| d.degree_in(v) > self.degree_in(v)) {
            return None;
        }
        let (dm, dc) = d.leading().map(|(m, c)| (m.clone(), c.clone()))?;
        let mut rem = self.clone();
        let mut quot = Poly::zero(self.nvars);
        while let Some((m, c)) = rem.leading().map(|(m, c)| (m.clone(), c.clone())) {
            if !dm.divides(&m) {
                return None;
            }
            let qm = m.div(&dm);
            let qc = c / &dc;
            rem = &rem - &d.mul_term(&qm, &qc);
            quot.add_term(qm, qc);
        }
        Some(quot)
    }

    /// Multivariate division by an ordered list of divisors. Returns the
    /// quotients and the remainder, `self = sum q_i g_i + r`, where no term
    /// of `r` is divisible by a leading monomial of any `g_i`.
    pub fn divide_by(&self, divisors: &[Poly]) -> (Vec<Poly>, Poly) {
        let mut quots = vec![Poly::zero(self.nvars); divisors.len()];
        let mut rem = Poly::zero(self.nvars);
        let mut p = self.clone();
        let leads: Vec<Option<(Monomial, BigRational)>> = divisors
            .iter()
            .map(|g| g.leading().map(|(m, c)| (m.clone(), c.clone())))
            .collect();
        while let Some((m, c)) = p.leading().map(|(m, c)| (m.clone(), c.clone())) {
            let hit = leads.iter().enumerate().find_map(|(i, l)| match l {
                Some((gm, gc)) if gm.divides(&m) => Some((i, gm, gc)),
                _ => None,
            });
            match hit {
                Some((i, gm, gc)) => {
                    let qm = m.div(gm);
                    let qc = &c / gc;
                    p = &p - &divisors[i].mul_term(&qm, &qc);
                    quots[i].add_term(qm, qc);
                }
                None => {
                    p.terms.remove(&m);
                    rem.add_term(m, c);
                }
            }
        }
        (quots, rem)
    }

    /// Remainder of `divide_by`.
    pub fn remainder(&self, divisors: &[Poly]) -> Poly {
        self.divide_by(divisors).1
    }

    /// Gcd of the coefficients of `self` viewed as a polynomial in `var`.
    pub fn content_in(&self, var: usize) -> Poly {
        gcd_list(&self.coefficients_in(var), self.nvars)
    }

    /// Squarefree part, normalized to be primitive with positive leading
    /// coefficient.
    pub fn squarefree_part(&self) -> Poly {
        if self.is_constant() {
            return if self.is_zero() {
                self.clone()
            } else {
                Poly::one(self.nvars)
            };
        }
        let mut g = self.clone();
        for (v, present) in self.present_vars().into_iter().enumerate() {
            if present {
                g = gcd(&g, &self.derivative(v));
                if g.is_constant() {
                    break;
                }
            }
        }
        let sq = self.div_exact(&g).expect("gcd divides its argument");
        sq.primitive().1
    }
}

/// Monic gcd over Q[x_1..x_n]. `gcd(0, 0) = 0`.
pub fn gcd(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() {
        return b.monic();
    }
    if b.is_zero() {
        return a.monic();
    }
    let n = a.nvars;
    if a.is_constant() || b.is_constant() {
        return Poly::one(n);
    }
    if a == b {
        return a.monic();
    }
    if a.num_terms() == 1 || b.num_terms() == 1 {
        let (mono, other) = if a.num_terms() == 1 { (a, b) } else { (b, a) };
        let mut exps = mono.terms.keys().next().unwrap().0.clone();
        for m in other.terms.keys() {
            for (e, &o) in exps.iter_mut().zip(&m.0) {
                *e = (*e).min(o);
            }
        }
        return Poly::term(BigRational::one(), Monomial(exps));
    }
    let pa = a.present_vars();
    let pb = b.present_vars();
    let bounds = gcd_degree_bounds(a, b, &pa, &pb);
    if bounds.iter().all(|b| *b == Some(0)) {
        return Poly::one(n);
    }
    // Main variable: shared, with the smallest nonzero degree bound on the gcd,
    // so the remainder sequence is as short as possible.
    let v = (0..n)
        .filter(|&i| pa[i] && pb[i] && bounds[i] != Some(0))
        .min_by_key(|&i| (bounds[i].unwrap_or(u32::MAX), a.degree_in(i) + b.degree_in(i)))
        .or_else(|| (0..n).find(|&i| pa[i] || pb[i]))
        .expect("nonconstant");
    if let Some(g) = dense_gcd(a, b) {
        return g;
    }
    match (pa[v], pb[v]) {
        (true, false) => gcd(&a.content_in(v), b),
        (false, true) => gcd(a, &b.content_in(v)),
        _ => {
            let ua = a.coefficients_in(v);
            let ub = b.coefficients_in(v);
            let ca = gcd_list(&ua, n);
            let cb = gcd_list(&ub, n);
            let content = gcd(&ca, &cb);
            let mut x = primitive_in(a, &ca, v);
            let mut y = primitive_in(b, &cb, v);
            if x.degree_in(v) < y.degree_in(v) {
                std::mem::swap(&mut x, &mut y);
            }
            loop {
                let r = pseudo_remainder(&x, &y, v);
                if r.is_zero() {
                    break;
                }
                if r.degree_in(v) == 0 {
                    y = Poly::one(n);
                    break;
                }
                let cr = r.content_in(v);
                x = y;
                y = primitive_in(&r, &cr, v).monic();
            }
            (&content * &y).monic()
        }
    }
}

/// Upper bounds on the degree of `gcd(a, b)` in each variable, from univariate
/// images: every other variable is fixed at a point where both leading
/// coefficients survive, so the image of the true gcd keeps its degree and
/// divides the gcd of the images. `None` when no admissible point was found.
fn gcd_degree_bounds(a: &Poly, b: &Poly, pa: &[bool], pb: &[bool]) -> Vec<Option<u32>> {
    const ATTEMPTS: u64 = 4;
    let n = a.nvars;
    (0..n)
        .map(|v| {
            if !(pa[v] && pb[v]) {
                return Some(0);
            }
            (0..ATTEMPTS).find_map(|t| {
                let point: Vec<Option<BigRational>> = (0..n)
                    .map(|i| (i != v).then(|| image_point_value(i, t)))
                    .collect();
                let ia = univariate_image(a, v, &point)?;
                let ib = univariate_image(b, v, &point)?;
                Some(univariate_gcd_degree(ia, ib))
            })
        })
        .collect()
}

fn image_point_value(var: usize, attempt: u64) -> BigRational {
    // Small, deterministic, pairwise distinct-looking integers.
    let k = (var as u64 + 1) * 7919 + attempt * 104_729;
    BigRational::from_integer(BigInt::from((k % 97) as i64 + 2))
}

/// Coefficients in `var` after substituting `point`, or `None` if the leading
/// coefficient vanishes there.
fn univariate_image(p: &Poly, var: usize, point: &[Option<BigRational>]) -> Option<Vec<BigRational>> {
    let img = p.partial_eval(point);
    let deg = p.degree_in(var) as usize;
    let mut coeffs = vec![BigRational::zero(); deg + 1];
    for (m, c) in &img.terms {
        coeffs[m.0[var] as usize] += c;
    }
    if coeffs[deg].is_zero() {
        None
    } else {
        Some(coeffs)
    }
}

fn univariate_gcd_degree(mut x: Vec<BigRational>, mut y: Vec<BigRational>) -> u32 {
    if x.len() < y.len() {
        std::mem::swap(&mut x, &mut y);
    }
    loop {
        if y.len() <= 1 {
            return if y.is_empty() { x.len() as u32 - 1 } else { 0 };
        }
        let dy = y.len() - 1;
        let inv = y[dy].recip();
        while x.len() > dy {
            let dx = x.len() - 1;
            let f = &x[dx] * &inv;
            for k in 0..=dy {
                let t = &f * &y[k];
                x[k + dx - dy] -= t;
            }
            while x.last().is_some_and(Zero::is_zero) {
                x.pop();
            }
        }
        std::mem::swap(&mut x, &mut y);
    }
}

/// Gcd by evaluation and interpolation, one variable at a time.
///
/// The variable `v` being eliminated is split off: both operands are viewed as
/// polynomials in the remaining variables with coefficients in `Q[v]`. Their
/// contents in `Q[v]` are handled by univariate gcds; the primitive parts are
/// evaluated at points `v = c` where both leading coefficients survive, the
/// images' gcds are computed recursively, scaled by the gcd of the leading
/// coefficients, and interpolated back. Images whose leading monomial is too
/// large are unlucky and dropped. The result is accepted only if it divides
/// both operands, so `None` means "fall back", never a wrong answer.
fn dense_gcd(a: &Poly, b: &Poly) -> Option<Poly> {
    const EXTRA_POINTS: usize = 24;
    let n = a.nvars;
    if a.is_zero() {
        return Some(b.monic());
    }
    if b.is_zero() {
        return Some(a.monic());
    }
    if a.is_constant() || b.is_constant() {
        return Some(Poly::one(n));
    }
    let pa = a.present_vars();
    let pb = b.present_vars();
    let live: Vec<usize> = (0..n).filter(|&i| pa[i] || pb[i]).collect();
    if let [v] = live[..] {
        let g = univariate_gcd(&univariate_coefficients(a, v), &univariate_coefficients(b, v));
        return Some(from_univariate(n, v, &g));
    }
    let bounds = gcd_degree_bounds(a, b, &pa, &pb);
    if bounds.iter().all(|b| *b == Some(0)) {
        return Some(Poly::one(n));
    }
    // Eliminate first a variable the gcd does not involve, otherwise the one
    // needing the fewest interpolation points.
    let cost = |i: usize| match bounds[i] {
        Some(0) => 0,
        Some(k) => {
            let lc = |p: &Poly| split_in(p, i).pop_last().map(|(_, c)| c).unwrap_or_default();
            k as usize + univariate_gcd(&lc(a), &lc(b)).len()
        }
        None => usize::MAX,
    };
    let v = *live.iter().min_by_key(|&&i| (cost(i), a.degree_in(i) + b.degree_in(i)))?;
    let mut point = vec![None; n];

    if bounds[v] == Some(0) {
        // The gcd does not involve v, so it divides the gcd of any image; an
        // image gcd that divides both operands is therefore the gcd itself.
        for k in 1..=3 {
            point[v] = Some(BigRational::from_integer(BigInt::from(k)));
            let h = dense_gcd(&a.partial_eval(&point), &b.partial_eval(&point))?;
            if a.div_exact(&h).is_some() && b.div_exact(&h).is_some() {
                return Some(h);
            }
        }
    }

    let sa = split_in(a, v);
    let sb = split_in(b, v);
    let cont_a = sa.values().fold(Vec::new(), |g, c| univariate_gcd(&g, c));
    let cont_b = sb.values().fold(Vec::new(), |g, c| univariate_gcd(&g, c));
    let content = from_univariate(n, v, &univariate_gcd(&cont_a, &cont_b));
    let ap = a.div_exact(&from_univariate(n, v, &cont_a))?;
    let bp = b.div_exact(&from_univariate(n, v, &cont_b))?;
    let lc_a = split_in(&ap, v).pop_last()?.1;
    let lc_b = split_in(&bp, v).pop_last()?.1;
    let gamma = univariate_gcd(&lc_a, &lc_b);
    let bound = bounds[v].unwrap_or_else(|| ap.degree_in(v).min(bp.degree_in(v))) as usize;
    // Points that always suffice; fewer do whenever the interpolant settles.
    let mut need = bound + gamma.len();

    let accept = |candidate: &Poly| -> Option<Poly> {
        let cont = split_in(candidate, v).values().fold(Vec::new(), |g, c| univariate_gcd(&g, c));
        let primitive = candidate.div_exact(&from_univariate(n, v, &cont))?;
        (ap.div_exact(&primitive).is_some() && bp.div_exact(&primitive).is_some())
            .then(|| (&primitive * &content).monic())
    };

    let mut images: Vec<(BigRational, Poly)> = Vec::new();
    let mut settled_at = usize::MAX;
    for k in 1..=(need + EXTRA_POINTS) as i64 {
        let c = BigRational::from_integer(BigInt::from(k));
        if univariate_eval(&lc_a, &c).is_zero() || univariate_eval(&lc_b, &c).is_zero() {
            continue;
        }
        point[v] = Some(c.clone());
        let h = dense_gcd(&ap.partial_eval(&point), &bp.partial_eval(&point))?;
        let lm = h.leading().map(|(m, _)| m.clone())?;
        match images.first().and_then(|(_, g)| g.leading()).map(|(m, _)| lm.cmp(m)) {
            Some(Ordering::Greater) => continue,
            Some(Ordering::Less) => {
                images.clear();
                settled_at = usize::MAX;
            }
            _ => {}
        }
        let image = h.scale(&univariate_eval(&gamma, &c));
        if !images.is_empty() && images.len() < settled_at {
            // Early termination: the new image is predicted by the previous ones.
            let previous = interpolate_in(n, v, &images);
            if previous.partial_eval(&point) == image {
                settled_at = images.len();
                if let Some(g) = accept(&previous) {
                    return Some(g);
                }
            }
        }
        images.push((c, image));
        if images.len() >= need {
            if let Some(g) = accept(&interpolate_in(n, v, &images)) {
                return Some(g);
            }
            need += 1;
        }
    }
    None
}

/// Groups the terms of `p` by their monomial in the other variables; each
/// group is a dense univariate polynomial in `v` (index = power).
fn split_in(p: &Poly, v: usize) -> BTreeMap<Monomial, Vec<BigRational>> {
    let mut out: BTreeMap<Monomial, Vec<BigRational>> = BTreeMap::new();
    for (m, c) in &p.terms {
        let e = m.0[v] as usize;
        let slot = out.entry(m.with_exponent(v, 0)).or_default();
        if slot.len() <= e {
            slot.resize(e + 1, BigRational::zero());
        }
        slot[e] = c.clone();
    }
    out
}

fn univariate_coefficients(p: &Poly, v: usize) -> Vec<BigRational> {
    let mut out = vec![BigRational::zero(); p.degree_in(v) as usize + 1];
    for (m, c) in &p.terms {
        out[m.0[v] as usize] += c;
    }
    trim(&mut out);
    out
}

fn from_univariate(nvars: usize, v: usize, coeffs: &[BigRational]) -> Poly {
    let mut out = Poly::zero(nvars);
    for (e, c) in coeffs.iter().enumerate() {
        let mut exps = vec![0; nvars];
        exps[v] = e as u32;
        out.add_term(Monomial(exps), c.clone());
    }
    out
}

fn trim(p: &mut Vec<BigRational>) {
    while p.last().is_some_and(Zero::is_zero) {
        p.pop();
    }
}

fn univariate_eval(p: &[BigRational], x: &BigRational) -> BigRational {
    p.iter().rev().fold(BigRational::zero(), |acc, c| acc * x + c)
}

/// Monic gcd of dense univariate polynomials; the empty vector is zero.
fn univariate_gcd(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    trim(&mut x);
    trim(&mut y);
    while !y.is_empty() {
        let dy = y.len() - 1;
        let inv = y[dy].recip();
        while x.len() > dy {
            let dx = x.len() - 1;
            let f = &x[dx] * &inv;
            for k in 0..=dy {
                let t = &f * &y[k];
                x[k + dx - dy] -= t;
            }
            trim(&mut x);
        }
        std::mem::swap(&mut x, &mut y);
    }
    if let Some(lead) = x.last().cloned() {
        for c in x.iter_mut() {
            *c /= &lead;
        }
    }
    x
}

/// Recovers the polynomial whose images at `v = c_i` are the given
/// polynomials, coefficient by coefficient, in Newton form.
fn interpolate_in(nvars: usize, v: usize, images: &[(BigRational, Poly)]) -> Poly {
    let mut monomials: BTreeMap<Monomial, Vec<BigRational>> = BTreeMap::new();
    for (i, (_, h)) in images.iter().enumerate() {
        for (m, c) in &h.terms {
            monomials.entry(m.clone()).or_insert_with(|| vec![BigRational::zero(); images.len()])[i] = c.clone();
        }
    }
    let xs: Vec<&BigRational> = images.iter().map(|(c, _)| c).collect();
    let mut out = Poly::zero(nvars);
    for (m, ys) in monomials {
        let coeffs = newton_interpolate(&xs, ys);
        for (e, c) in coeffs.into_iter().enumerate() {
            out.add_term(m.with_exponent(v, e as u32), c);
        }
    }
    out
}

fn newton_interpolate(xs: &[&BigRational], mut d: Vec<BigRational>) -> Vec<BigRational> {
    let n = xs.len();
    for j in 1..n {
        for i in (j..n).rev() {
            d[i] = (&d[i] - &d[i - 1]) / (xs[i] - xs[i - j]);
        }
    }
    // Expand d[0] + d[1](x - x0) + d[2](x - x0)(x - x1) + ... by Horner.
    let mut poly = vec![BigRational::zero(); n];
    for i in (0..n).rev() {
        // poly = poly * (x - xs[i]) + d[i]
        let mut next = vec![BigRational::zero(); n];
        for k in 0..n {
            if poly[k].is_zero() {
                continue;
            }
            if k + 1 < n {
                next[k + 1] += &poly[k];
            }
            next[k] -= &poly[k] * xs[i];
        }
        next[0] += &d[i];
        poly = next;
    }
    trim(&mut poly);
    poly
}

fn primitive_in(p: &Poly, content: &Poly, _var: usize) -> Poly {
    p.div_exact(content).expect("content divides polynomial")
}

pub fn gcd_list(polys: &[Poly], nvars: usize) -> Poly {
    let mut g = Poly::zero(nvars);
    for p in polys {
        if p.is_zero() {
            continue;
        }
        g = gcd(&g, p);
        if g.is_constant() {
            return Poly::one(nvars);
        }
    }
    g
}

/// Pseudo-remainder of `a` by `b` as polynomials in `var`.
fn pseudo_remainder(a: &Poly, b: &Poly, var: usize) -> Poly {
    let n = a.nvars;
    let bc = b.coefficients_in(var);
    let db = bc.len() - 1;
    let lb = &bc[db];
    let mut r = a.coefficients_in(var);
    while r.len() > db && !r.is_empty() {
        let dr = r.len() - 1;
        let lr = r[dr].clone();
        for c in r.iter_mut() {
            *c = &*c * lb;
        }
        for (k, bk) in bc.iter().enumerate() {
            let t = &lr * bk;
            r[k + dr - db] = &r[k + dr - db] - &t;
        }
        while r.last().is_some_and(Poly::is_zero) {
            r.pop();
        }
    }
    Poly::from_coefficients_in(n, var, &r)
}

pub fn lcm(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() || b.is_zero() {
        return Poly::zero(a.nvars);
    }
    let g = gcd(a, b);
    (&a.div_exact(&g).expect("gcd divides") * b).monic()
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        debug_assert_eq!(self.nvars, rhs.nvars);
        let (mut big, small) = if self.terms.len() >= rhs.terms.len() {
            (self.clone(), rhs)
        } else {
            (rhs.clone(), self)
        };
        for (m, c) in &small.terms {
            big.add_term(m.clone(), c.clone());
        }
        big
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        debug_assert_eq!(self.nvars, rhs.nvars);
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        debug_assert_eq!(self.nvars, rhs.nvars);
        let mut out = Poly::zero(self.nvars);
        if self.is_zero() || rhs.is_zero() {
            return out;
        }
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(i: usize) -> Poly {
        Poly::var(3, i)
    }

    fn c(k: i64) -> Poly {
        Poly::from_int(3, k)
    }

    #[test]
    fn grlex_order_prefers_degree_then_earlier_variable() {
        let a = Monomial::from_exponents(vec![0, 2, 0]);
        let b = Monomial::from_exponents(vec![1, 0, 0]);
        let d = Monomial::from_exponents(vec![0, 1, 0]);
        assert!(a > b);
        assert!(b > d);
    }

    #[test]
    fn gcd_of_products() {
        // (x+y)(x-z)^2 and (x+y)(y+1)
        let f = &(&x(0) + &x(1)) * &(&x(0) - &x(2)).pow(2);
        let g = &(&x(0) + &x(1)) * &(&x(1) + &c(1));
        assert_eq!(gcd(&f, &g), (&x(0) + &x(1)).monic());
        assert_eq!(gcd(&f, &c(3)), c(1));
    }

    #[test]
    fn gcd_of_coprime_dense_polynomials_is_one() {
        // Coprime, with a leading coefficient that vanishes at some points.
        let f = &(&(&x(0) * &x(1)) - &x(2)).pow(3) + &(&x(0) - &c(2));
        let g = &(&(&x(1) * &x(2).pow(2)) + &(&x(0) * &x(2))) + &c(5);
        assert_eq!(gcd(&f, &g), c(1));
    }

    #[test]
    fn gcd_recovers_shared_factor_in_several_variables() {
        let h = &(&(&x(0) * &x(2)) + &x(1).pow(2)) - &c(3);
        let f = &h * &(&(&x(0) - &x(1)) * &x(2));
        let g = &h * &(&(&x(0).pow(2) + &(&x(1) * &x(2))) + &c(1));
        assert_eq!(gcd(&f, &g), h.monic());
        assert_eq!(gcd(&f.pow(2), &g), h.monic());
    }

    #[test]
    fn gcd_with_monomial() {
        let f = &x(2).pow(3) * &(&x(0) + &c(1));
        let g = &x(2).pow(2) * &x(1);
        assert_eq!(gcd(&f, &g), x(2).pow(2));
    }

    #[test]
    fn squarefree_strips_powers() {
        let f = &c(-3) * &(&(&x(0) - &x(1)).pow(3) * &x(2).pow(2));
        let s = f.squarefree_part();
        let expected = (&(&x(0) - &x(1)) * &x(2)).primitive().1;
        assert_eq!(s, expected);
    }

    #[test]
    fn exact_division_detects_nondivisibility() {
        let f = &(&x(0) + &x(1)) * &x(2);
        assert_eq!(f.div_exact(&x(2)), Some(&x(0) + &x(1)));
        assert_eq!(f.div_exact(&x(1)), None);
    }

    #[test]
    fn division_by_list() {
        // y^2 mod {z, y} -> 0 ; x mod {z} -> x
        let (_, r) = x(1).pow(2).divide_by(&[x(2), x(1)]);
        assert!(r.is_zero());
        let (_, r) = x(0).divide_by(&[x(2)]);
        assert_eq!(r, x(0));
    }
}
