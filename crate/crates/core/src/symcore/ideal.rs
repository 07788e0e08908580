//! Constraint surfaces: generator lists, reduction by division, and exact
//! rational sample points.

use std::sync::OnceLock;

use num::{BigInt, BigRational, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::expr::Expression;
use super::poly::{gcd, Poly};
use super::SymError;

/// Attempts per seed before a surface is declared unsampleable.
pub const SAMPLE_RETRY_BUDGET: usize = 100;
/// Sampled coordinates are `a/b` with `|a|, |b| <= COORD_BOUND`.
pub const COORD_BOUND: i64 = 999;

/// Polynomial generators of a constraint surface, plus the domain
/// restrictions (declared-nonvanishing expressions) of the model.
#[derive(Clone, Debug)]
pub struct ConstraintIdeal {
    nvars: usize,
    generators: Vec<Poly>,
    nonvanishing: Vec<Expression>,
    radical: bool,
    sample_hint: Vec<(usize, BigRational)>,
}

impl ConstraintIdeal {
    pub fn new(
        nvars: usize,
        generators: &[Expression],
        nonvanishing: &[Expression],
        radical: bool,
    ) -> Result<Self, SymError> {
        let mut ideal = ConstraintIdeal {
            nvars,
            generators: Vec::new(),
            nonvanishing: nonvanishing.to_vec(),
            radical,
            sample_hint: Vec::new(),
        };
        for g in generators {
            ideal.push(g)?;
        }
        Ok(ideal)
    }

    fn push(&mut self, g: &Expression) -> Result<(), SymError> {
        let p = g.numerator().clone();
        if p.is_zero() {
            return Err(SymError::ZeroGenerator);
        }
        if p.is_constant() {
            return Err(SymError::EmptySurface);
        }
        let prim = p.primitive().1;
        for nv in &self.nonvanishing {
            if nv.numerator().primitive().1 == prim || nv.denominator().primitive().1 == prim {
                return Err(SymError::NonvanishingGenerator);
            }
        }
        self.generators.push(p);
        Ok(())
    }

    /// A copy with additional generators appended.
    pub fn extended(&self, extra: &[Expression]) -> Result<Self, SymError> {
        let mut out = self.clone();
        for g in extra {
            out.push(g)?;
        }
        Ok(out)
    }

    pub fn with_sample_hint(mut self, hint: Vec<(usize, BigRational)>) -> Self {
        self.sample_hint = hint;
        self
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn generators(&self) -> &[Poly] {
        &self.generators
    }

    pub fn nonvanishing(&self) -> &[Expression] {
        &self.nonvanishing
    }

    pub fn radical(&self) -> bool {
        self.radical
    }

    pub fn sample_hint(&self) -> &[(usize, BigRational)] {
        &self.sample_hint
    }

    /// Divisors used for reduction: squarefree parts in radical mode.
    pub fn division_basis(&self) -> Vec<Poly> {
        if self.radical {
            self.generators.iter().map(Poly::squarefree_part).collect()
        } else {
            self.generators.clone()
        }
    }
}

/// Remainder of the numerator of `e` after division by the generators,
/// over the original denominator.
pub fn reduce_on_surface(e: &Expression, ideal: &ConstraintIdeal) -> Expression {
    if e.is_zero() || ideal.generators.is_empty() {
        return e.clone();
    }
    let rem = e.numerator().remainder(&ideal.division_basis());
    Expression::from_parts(rem, e.denominator().clone()).expect("denominator is nonzero")
}

/// An exact rational point.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceSample {
    pub values: Vec<BigRational>,
    pub seed: u64,
}

fn random_nonzero_rational(rng: &mut ChaCha8Rng) -> BigRational {
    let mut n = 0;
    while n == 0 {
        n = rng.gen_range(-COORD_BOUND..=COORD_BOUND);
    }
    let d = rng.gen_range(1..=COORD_BOUND);
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Draws a point on the zero set of the ideal, respecting the nonvanishing
/// declarations. Each generator is solved for a variable in which it is
/// linear; every other coordinate is random. Deterministic in `seed`.
///
/// Sample hints are used only where needed: a hinted coordinate is pinned
/// only if it occurs in a generator that is linear in no free variable.
/// Pinned coordinates bias every vanishing test towards the hinted slice.
pub fn sample_surface(ideal: &ConstraintIdeal, seed: u64) -> Result<SurfaceSample, SymError> {
    match sample_with(ideal, seed, &[]) {
        Err(SymError::Unsampleable) if !ideal.sample_hint.is_empty() => {
            let stuck: Vec<Poly> = ideal
                .generators
                .iter()
                .map(Poly::squarefree_part)
                .filter(|g| (0..ideal.nvars).all(|v| g.degree_in(v) != 1))
                .collect();
            let needed: Vec<(usize, BigRational)> = ideal
                .sample_hint
                .iter()
                .filter(|(v, _)| stuck.iter().any(|g| g.degree_in(*v) > 0))
                .cloned()
                .collect();
            match sample_with(ideal, seed, &needed) {
                Err(SymError::Unsampleable) => sample_with(ideal, seed, &ideal.sample_hint),
                other => other,
            }
        }
        other => other,
    }
}

fn sample_with(ideal: &ConstraintIdeal, seed: u64, hint: &[(usize, BigRational)]) -> Result<SurfaceSample, SymError> {
    let n = ideal.nvars;
    let basis: Vec<Poly> = ideal.generators.iter().map(Poly::squarefree_part).collect();
    let mut hinted = vec![None; n];
    for (v, val) in hint {
        hinted[*v] = Some(val.clone());
    }

    // One solve variable per generator, highest variable index first. A
    // generator in hinted variables only needs none: the hint must satisfy it.
    let mut solve_var = Vec::with_capacity(basis.len());
    let mut taken = vec![false; n];
    for g in &basis {
        let v = (0..n).rev().find(|&v| !taken[v] && hinted[v].is_none() && g.degree_in(v) == 1);
        match v {
            Some(v) => taken[v] = true,
            None if g.present_vars().iter().zip(&hinted).all(|(p, h)| !p || h.is_some()) => {}
            None => return Err(SymError::Unsampleable),
        }
        solve_var.push(v);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    'attempt: for _ in 0..SAMPLE_RETRY_BUDGET {
        let mut point: Vec<Option<BigRational>> = (0..n)
            .map(|v| {
                if let Some(h) = &hinted[v] {
                    Some(h.clone())
                } else if taken[v] {
                    None
                } else {
                    Some(random_nonzero_rational(&mut rng))
                }
            })
            .collect();

        let mut pending: Vec<usize> = (0..basis.len()).collect();
        while !pending.is_empty() {
            let mut progress = false;
            let mut still = Vec::new();
            for &gi in &pending {
                let reduced = basis[gi].partial_eval(&point);
                let open: Vec<usize> = reduced
                    .present_vars()
                    .iter()
                    .enumerate()
                    .filter(|(_, &p)| p)
                    .map(|(v, _)| v)
                    .collect();
                match open.as_slice() {
                    [] => {
                        if !reduced.is_zero() {
                            continue 'attempt;
                        }
                        progress = true;
                    }
                    [v] if Some(*v) == solve_var[gi] => {
                        let coeffs = reduced.coefficients_in(*v);
                        let c0 = coeffs[0].constant_value();
                        let c1 = coeffs[1].constant_value();
                        if c1.is_zero() {
                            continue 'attempt;
                        }
                        point[*v] = Some(-c0 / c1);
                        progress = true;
                    }
                    _ => still.push(gi),
                }
            }
            if !progress {
                return Err(SymError::Unsampleable);
            }
            pending = still;
        }

        let values: Vec<BigRational> = point
            .into_iter()
            .map(|v| v.unwrap_or_else(|| random_nonzero_rational(&mut rng)))
            .collect();
        for nv in &ideal.nonvanishing {
            match nv.eval(&values) {
                Some(x) if !x.is_zero() => {}
                _ => continue 'attempt,
            }
        }
        if basis.iter().any(|g| !g.eval(&values).is_zero()) {
            continue 'attempt;
        }
        return Ok(SurfaceSample { values, seed });
    }
    Err(SymError::Unsampleable)
}

/// A constraint ideal together with lazily drawn sample points.
#[derive(Debug)]
pub struct Surface {
    ideal: ConstraintIdeal,
    count: usize,
    seed: u64,
    samples: OnceLock<Result<Vec<SurfaceSample>, SymError>>,
}

impl Surface {
    pub fn new(ideal: ConstraintIdeal, count: usize, seed: u64) -> Self {
        Surface {
            ideal,
            count: count.max(1),
            seed,
            samples: OnceLock::new(),
        }
    }

    pub fn ideal(&self) -> &ConstraintIdeal {
        &self.ideal
    }

    pub fn samples(&self) -> Result<&[SurfaceSample], SymError> {
        self.samples
            .get_or_init(|| {
                (0..self.count as u64)
                    .map(|k| sample_surface(&self.ideal, self.seed.wrapping_mul(1_000_003).wrapping_add(k)))
                    .collect()
            })
            .as_ref()
            .map(Vec::as_slice)
            .map_err(Clone::clone)
    }

    pub fn reduce(&self, e: &Expression) -> Expression {
        reduce_on_surface(e, &self.ideal)
    }

    /// Remainder-zero, or (radical mode) zero at every sample.
    pub fn vanishes(&self, e: &Expression) -> Result<bool, SymError> {
        vanishes_on_surface(e, self)
    }
}

pub fn vanishes_on_surface(e: &Expression, surface: &Surface) -> Result<bool, SymError> {
    if e.is_zero() {
        return Ok(true);
    }
    if reduce_on_surface(e, &surface.ideal).is_zero() {
        return Ok(true);
    }
    if !surface.ideal.radical {
        return Ok(false);
    }
    let mut evaluated = 0;
    for s in surface.samples()? {
        if let Some(v) = e.eval(&s.values) {
            if !v.is_zero() {
                return Ok(false);
            }
            evaluated += 1;
        }
    }
    if evaluated == 0 {
        return Err(SymError::DenominatorVanishes);
    }
    Ok(true)
}

/// Effective form of a constraint: numerator with declared-nonvanishing
/// factors removed, squarefree, primitive with positive leading coefficient.
pub fn effective_part(e: &Expression, nonvanishing: &[Expression]) -> Poly {
    let mut p = e.numerator().clone();
    if p.is_zero() {
        return p;
    }
    for nv in nonvanishing {
        for f in [nv.numerator(), nv.denominator()] {
            if f.is_constant() {
                continue;
            }
            loop {
                let g = gcd(&p, f);
                if g.is_constant() {
                    break;
                }
                p = p.div_exact(&g).expect("gcd divides");
            }
        }
    }
    p.squarefree_part()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symcore::parse::parse_expression;
    use crate::symcore::vars::VariableTable;

    fn table() -> VariableTable {
        VariableTable::new(&["x", "y", "z"], &[]).unwrap()
    }

    fn e(s: &str) -> Expression {
        parse_expression(s, &table()).unwrap()
    }

    fn ideal(gens: &[&str]) -> ConstraintIdeal {
        let g: Vec<Expression> = gens.iter().map(|s| e(s)).collect();
        ConstraintIdeal::new(9, &g, &[e("z")], true).unwrap()
    }

    #[test]
    fn reductions_from_long_division() {
        assert!(reduce_on_surface(&e("py^2"), &ideal(&["pz", "py"])).is_zero());
        assert_eq!(reduce_on_surface(&e("x"), &ideal(&["pz"])), e("x"));
        assert_eq!(
            reduce_on_surface(&e("px^2/2 + z*py^2/2"), &ideal(&["pz", "py"])),
            e("px^2/2")
        );
        assert!(reduce_on_surface(&e("0"), &ideal(&["pz"])).is_zero());
    }

    #[test]
    fn samples_solve_generators() {
        let t = table();
        let s = sample_surface(&ideal(&["pz", "py"]), 1).unwrap();
        assert!(s.values[t.p(2)].is_zero());
        assert!(s.values[t.p(1)].is_zero());
        assert!(!s.values[t.q(2)].is_zero());

        let s = sample_surface(&ideal(&["px - y"]), 3).unwrap();
        assert_eq!(s.values[t.p(0)], s.values[t.q(1)]);

        let s = sample_surface(&ideal(&[]), 5).unwrap();
        assert!(!s.values[t.q(2)].is_zero());
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_surface(&ideal(&["px - y*x"]), 42).unwrap();
        let b = sample_surface(&ideal(&["px - y*x"]), 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn nonlinear_generators_need_a_hint() {
        let i = ideal(&["px^2 + py^2 - 1"]);
        assert!(matches!(sample_surface(&i, 0), Err(SymError::Unsampleable)));
    }

    #[test]
    fn radical_mode_sees_ineffective_vanishing() {
        // py vanishes where py^2 does, but is not in the ideal <pz, py^2>.
        let g = [e("pz"), e("py^2")];
        let radical = Surface::new(ConstraintIdeal::new(9, &g, &[], true).unwrap(), 5, 0);
        assert!(radical.vanishes(&e("py")).unwrap());
        let plain = Surface::new(ConstraintIdeal::new(9, &g, &[], false).unwrap(), 5, 0);
        assert!(!plain.vanishes(&e("py")).unwrap());
        assert!(!radical.vanishes(&e("px")).unwrap());
    }

    #[test]
    fn effective_part_strips_units_and_powers() {
        let nv = [e("z")];
        assert_eq!(Expression::from_poly(effective_part(&e("-py^2/2"), &nv)), e("py"));
        assert_eq!(Expression::from_poly(effective_part(&e("z*py"), &nv)), e("py"));
        assert_eq!(Expression::from_poly(effective_part(&e("pz"), &nv)), e("pz"));
        assert_eq!(Expression::from_poly(effective_part(&e("-px"), &nv)), e("px"));
    }

    #[test]
    fn nonvanishing_generators_are_rejected() {
        assert!(matches!(
            ConstraintIdeal::new(9, &[e("2*z")], &[e("z")], true),
            Err(SymError::NonvanishingGenerator)
        ));
    }
}
