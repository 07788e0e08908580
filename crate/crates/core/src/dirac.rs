//! Phase-space machinery: Poisson brackets, first/second-class
//! classification, ineffective-constraint detection, effectivization, the
//! stabilization loop and structure-function decomposition.

use std::collections::BTreeMap;

use num::{BigRational, Zero};
use thiserror::Error;

use crate::legendre::effective_form;
use crate::symcore::linalg::{self, Matrix};
use crate::symcore::poly::Poly;
use crate::symcore::{ConstraintIdeal, Expression, Surface, SymError, VariableTable};

#[derive(Clone, Debug, Error, PartialEq)]
pub enum DiracError {
    #[error(transparent)]
    Sym(#[from] SymError),
    #[error("constraint `{0}` has no zeros: the dynamics is inconsistent (empty surface)")]
    EmptySurface(String),
    #[error("stabilization did not terminate within {0} levels")]
    MaxLevelsExceeded(usize),
}

/// `{f, g} = Σ_i (∂f/∂q^i ∂g/∂p_i - ∂f/∂p_i ∂g/∂q^i)`.
pub fn poisson_bracket(f: &Expression, g: &Expression, vars: &VariableTable) -> Expression {
    let nv = f.nvars();
    let mut acc = Expression::zero(nv);
    for i in 0..vars.n() {
        let (q, p) = (vars.q(i), vars.p(i));
        let fq = f.differentiate(q);
        if !fq.is_zero() {
            let gp = g.differentiate(p);
            if !gp.is_zero() {
                acc = acc + fq * gp;
            }
        }
        let fp = f.differentiate(p);
        if !fp.is_zero() {
            let gq = g.differentiate(q);
            if !gq.is_zero() {
                acc = acc - fp * gq;
            }
        }
    }
    acc
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstraintClass {
    First,
    Second,
    /// Part of a first-class combination that is not a single constraint.
    Undetermined,
}

impl ConstraintClass {
    pub fn as_str(self) -> &'static str {
        match self {
            ConstraintClass::First => "first",
            ConstraintClass::Second => "second",
            ConstraintClass::Undetermined => "undetermined",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Provenance {
    Primary,
    /// `{Σ c_a φ_a, H_c}` for a first-class combination of earlier constraints.
    Stabilization { combination: Vec<(usize, Expression)> },
}

#[derive(Clone, Debug)]
pub struct Constraint {
    /// Effectivized working form.
    pub expr: Expression,
    /// Form as produced, before effectivization.
    pub raw: Expression,
    pub level: usize,
    pub class: ConstraintClass,
    /// False when the raw form had a vanishing differential on its surface.
    pub effective: bool,
    /// True when even the working form still has a vanishing differential:
    /// the squarefree part did not repair it and no other repair is attempted.
    pub effectivization_unresolved: bool,
    pub provenance: Provenance,
}

/// Classification of a constraint list on one surface.
#[derive(Clone, Debug)]
pub struct Classification {
    pub level: usize,
    /// `C_ab = {φ_a, φ_b}`, entries vanishing on the surface set to zero.
    pub bracket_matrix: Matrix,
    pub rank: usize,
    /// First-class combinations: `Σ_a c_a φ_a` with `c` a null vector of `C`.
    pub first_class: Vec<Vec<Expression>>,
    pub tags: Vec<ConstraintClass>,
    /// Indices of a nonsingular second-class block.
    pub second_class_block: Vec<usize>,
    /// Determinant of that block at the first surface sample.
    pub block_determinant: Option<BigRational>,
    /// Every first-class combination has vanishing brackets with every constraint.
    pub closure_holds: bool,
}

impl Classification {
    pub fn first_class_count(&self) -> usize {
        self.first_class.len()
    }

    pub fn second_class_count(&self) -> usize {
        self.rank
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    Pending,
    Stable { level: usize },
}

/// Multipliers `u^b` of the non-first-class primaries fixed by the
/// second-class consistency conditions.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MultiplierSolution {
    pub primaries: Vec<usize>,
    pub values: Option<Vec<Expression>>,
}

#[derive(Clone, Debug)]
pub struct LedgerOptions {
    pub radical: bool,
    pub samples: usize,
    pub seed: u64,
    pub sample_hint: Vec<(usize, BigRational)>,
}

impl Default for LedgerOptions {
    fn default() -> Self {
        LedgerOptions {
            radical: true,
            samples: 10,
            seed: 0,
            sample_hint: Vec::new(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ConstraintLedger {
    pub vars: VariableTable,
    pub nonvanishing: Vec<Expression>,
    pub options: LedgerOptions,
    pub constraints: Vec<Constraint>,
    pub snapshots: BTreeMap<usize, Classification>,
    pub termination: Termination,
    pub multipliers: MultiplierSolution,
}

impl ConstraintLedger {
    /// Level-1 ledger from effectivized primary constraints.
    pub fn new(vars: VariableTable, primaries: &[Expression], nonvanishing: &[Expression], options: LedgerOptions) -> Self {
        let constraints = primaries
            .iter()
            .map(|p| Constraint {
                expr: p.clone(),
                raw: p.clone(),
                level: 1,
                class: ConstraintClass::Undetermined,
                effective: true,
                effectivization_unresolved: false,
                provenance: Provenance::Primary,
            })
            .collect();
        ConstraintLedger {
            vars,
            nonvanishing: nonvanishing.to_vec(),
            options,
            constraints,
            snapshots: BTreeMap::new(),
            termination: Termination::Pending,
            multipliers: MultiplierSolution::default(),
        }
    }

    pub fn nvars(&self) -> usize {
        self.vars.nvars()
    }

    pub fn top_level(&self) -> usize {
        self.constraints.iter().map(|c| c.level).max().unwrap_or(1)
    }

    pub fn exprs_up_to(&self, level: usize) -> Vec<Expression> {
        self.constraints
            .iter()
            .filter(|c| c.level <= level)
            .map(|c| c.expr.clone())
            .collect()
    }

    pub fn exprs(&self) -> Vec<Expression> {
        self.constraints.iter().map(|c| c.expr.clone()).collect()
    }

    pub fn primaries(&self) -> Vec<Expression> {
        self.exprs_up_to(1)
    }

    /// Ideal of `M_level`.
    pub fn ideal(&self, level: usize) -> Result<ConstraintIdeal, SymError> {
        Ok(ConstraintIdeal::new(self.nvars(), &self.exprs_up_to(level), &self.nonvanishing, self.options.radical)?
            .with_sample_hint(self.options.sample_hint.clone()))
    }

    pub fn surface(&self, level: usize) -> Result<Surface, SymError> {
        Ok(Surface::new(self.ideal(level)?, self.options.samples, self.options.seed))
    }

    pub fn final_classification(&self) -> Option<&Classification> {
        self.snapshots.values().next_back()
    }

    /// `M`: number of independent (effectivized) constraints.
    pub fn total(&self) -> usize {
        self.constraints.len()
    }

    /// `P_f`: number of independent final first-class combinations.
    pub fn final_first_class(&self) -> usize {
        self.final_classification().map_or(0, Classification::first_class_count)
    }

    /// `G`: final first-class directions whose discovery form was effective.
    pub fn gauge_fixing_count(&self) -> usize {
        let ineffective_first = self
            .constraints
            .iter()
            .filter(|c| c.class == ConstraintClass::First && !c.effective)
            .count();
        self.final_first_class() - ineffective_first
    }
}

fn rational_determinant(mut m: Vec<Vec<BigRational>>) -> BigRational {
    let n = m.len();
    let mut det = BigRational::from_integer(1.into());
    for c in 0..n {
        let Some(r) = (c..n).find(|&r| !m[r][c].is_zero()) else {
            return BigRational::zero();
        };
        if r != c {
            m.swap(r, c);
            det = -det;
        }
        let piv = m[c][c].clone();
        det *= &piv;
        for r in c + 1..n {
            if m[r][c].is_zero() {
                continue;
            }
            let f = &m[r][c] / &piv;
            for k in c..n {
                let t = &f * &m[c][k];
                m[r][k] -= t;
            }
        }
    }
    det
}

/// Bracket matrix, its rank on the surface, first-class combinations and tags.
pub fn classify(
    constraints: &[Expression],
    surface: &Surface,
    vars: &VariableTable,
    level: usize,
) -> Result<Classification, DiracError> {
    let m = constraints.len();
    let nv = vars.nvars();
    let mut c: Matrix = vec![vec![Expression::zero(nv); m]; m];
    for a in 0..m {
        for b in a + 1..m {
            let br = poisson_bracket(&constraints[a], &constraints[b], vars);
            if !surface.vanishes(&br)? {
                c[b][a] = -&br;
                c[a][b] = br;
            }
        }
    }
    let ech = linalg::row_reduce(&c, m, surface)?;
    let rank = ech.rank();
    let first_class = linalg::null_space(&c, m, nv, surface)?;
    let tags = (0..m)
        .map(|a| {
            if c[a].iter().all(Expression::is_zero) {
                ConstraintClass::First
            } else if first_class.iter().all(|v| v[a].is_zero()) {
                ConstraintClass::Second
            } else {
                ConstraintClass::Undetermined
            }
        })
        .collect();
    let block = ech.pivots.clone();
    let block_determinant = if block.is_empty() {
        None
    } else {
        let sample = &surface.samples()?[0];
        let entries: Option<Vec<Vec<BigRational>>> = block
            .iter()
            .map(|&a| block.iter().map(|&b| c[a][b].eval(&sample.values)).collect())
            .collect();
        entries.map(rational_determinant)
    };
    let mut closure_holds = true;
    for v in &first_class {
        let combo: Expression = v.iter().zip(constraints).map(|(k, phi)| k * phi).sum();
        for phi in constraints {
            if !surface.vanishes(&poisson_bracket(&combo, phi, vars))? {
                closure_holds = false;
            }
        }
    }
    Ok(Classification {
        level,
        bracket_matrix: c,
        rank,
        first_class,
        tags,
        second_class_block: block,
        block_determinant,
        closure_holds,
    })
}

/// True iff every first partial of `phi` vanishes on the surface.
pub fn detect_ineffective(phi: &Expression, surface: &Surface) -> Result<bool, SymError> {
    for v in 0..phi.nvars() {
        let d = phi.differentiate(v);
        if !surface.vanishes(&d)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Effective form; a constant result means the surface is empty.
pub fn effectivize(phi: &Expression, nonvanishing: &[Expression], vars: &VariableTable) -> Result<Expression, DiracError> {
    let eff = effective_form(phi, nonvanishing);
    if eff.is_constant() {
        return Err(DiracError::EmptySurface(phi.render(vars)));
    }
    Ok(eff)
}

/// Dirac's algorithm: adds `{first-class, H_c}` conditions level by level
/// until nothing new appears.
pub fn stabilize(ledger: &mut ConstraintLedger, hamiltonian: &Expression, max_levels: usize) -> Result<(), DiracError> {
    let vars = ledger.vars.clone();
    loop {
        let level = ledger.top_level();
        let surface = ledger.surface(level)?;
        let exprs = ledger.exprs();
        let cls = classify(&exprs, &surface, &vars, level)?;
        for (con, tag) in ledger.constraints.iter_mut().zip(&cls.tags) {
            con.class = *tag;
        }
        let mut fresh: Vec<Constraint> = Vec::new();
        for v in &cls.first_class {
            let combo: Expression = v.iter().zip(&exprs).map(|(k, phi)| k * phi).sum();
            let chi = poisson_bracket(&combo, hamiltonian, &vars);
            if surface.vanishes(&chi)? {
                continue;
            }
            let reduced = surface.reduce(&chi);
            let eff = effectivize(&reduced, &ledger.nonvanishing, &vars)?;
            let mut current = exprs.clone();
            current.extend(fresh.iter().map(|c| c.expr.clone()));
            let ideal = ConstraintIdeal::new(vars.nvars(), &current, &ledger.nonvanishing, ledger.options.radical)?
                .with_sample_hint(ledger.options.sample_hint.clone());
            let extended = Surface::new(ideal.clone(), ledger.options.samples, ledger.options.seed);
            if extended.vanishes(&eff)? {
                continue;
            }
            let with_raw = Surface::new(ideal.extended(std::slice::from_ref(&reduced))?, ledger.options.samples, ledger.options.seed);
            let ineffective = detect_ineffective(&reduced, &with_raw)?;
            let unresolved = ineffective && {
                let with_eff = Surface::new(ideal.extended(std::slice::from_ref(&eff))?, ledger.options.samples, ledger.options.seed);
                detect_ineffective(&eff, &with_eff)?
            };
            let combination = v
                .iter()
                .enumerate()
                .filter(|(_, k)| !k.is_zero())
                .map(|(i, k)| (i, k.clone()))
                .collect();
            fresh.push(Constraint {
                expr: eff,
                raw: chi,
                level: level + 1,
                class: ConstraintClass::Undetermined,
                effective: !ineffective,
                effectivization_unresolved: unresolved,
                provenance: Provenance::Stabilization { combination },
            });
        }
        ledger.snapshots.insert(level, cls);
        if fresh.is_empty() {
            ledger.termination = Termination::Stable { level };
            break;
        }
        if level + 1 > max_levels {
            return Err(DiracError::MaxLevelsExceeded(max_levels));
        }
        ledger.constraints.extend(fresh);
    }
    ledger.multipliers = second_class_multipliers(ledger, hamiltonian)?;
    Ok(())
}

/// Solves `{φ_a, H_c} + Σ_b u^b {φ_a, φ_b} ≈ 0` over the second-class block
/// for the multipliers of the primaries that are not first class.
pub fn second_class_multipliers(ledger: &ConstraintLedger, hamiltonian: &Expression) -> Result<MultiplierSolution, DiracError> {
    let Some(cls) = ledger.final_classification() else {
        return Ok(MultiplierSolution::default());
    };
    let primaries: Vec<usize> = (0..ledger.constraints.len())
        .filter(|&b| ledger.constraints[b].level == 1 && cls.tags[b] != ConstraintClass::First)
        .collect();
    if primaries.is_empty() || cls.second_class_block.is_empty() {
        return Ok(MultiplierSolution {
            primaries,
            values: None,
        });
    }
    let surface = ledger.surface(ledger.top_level())?;
    let vars = &ledger.vars;
    let exprs = ledger.exprs();
    let a: Matrix = cls
        .second_class_block
        .iter()
        .map(|&r| primaries.iter().map(|&b| cls.bracket_matrix[r][b].clone()).collect())
        .collect();
    let rhs: Vec<Expression> = cls
        .second_class_block
        .iter()
        .map(|&r| -poisson_bracket(&exprs[r], hamiltonian, vars))
        .collect();
    let values = linalg::solve(&a, &rhs, primaries.len(), &surface)?;
    Ok(MultiplierSolution { primaries, values })
}

/// Expansion of one bracket in the constraints.
#[derive(Clone, Debug)]
pub struct StructureEntry {
    pub left: usize,
    pub right: usize,
    pub bracket: Expression,
    /// Coefficient of `φ_k`, free of constraint factors.
    pub linear: Vec<Expression>,
    /// Coefficients of `φ_k φ_l` (k ≤ l), nonzero ones only.
    pub quadratic: Vec<(usize, usize, Expression)>,
    pub remainder: Expression,
    pub decomposable: bool,
    pub remainder_vanishes_on_surface: bool,
}

fn over(p: Poly, den: &Poly) -> Expression {
    Expression::from_parts(p, den.clone()).expect("denominator is nonzero")
}

/// Expresses brackets of first-class constraints with all constraints as
/// combinations of constraints (linear and quadratic terms).
pub fn structure_decompose(
    first_class: &[usize],
    constraints: &[Expression],
    surface: &Surface,
    vars: &VariableTable,
) -> Result<Vec<StructureEntry>, SymError> {
    let basis: Vec<Poly> = constraints.iter().map(|c| c.numerator().clone()).collect();
    let mut out = Vec::new();
    for &a in first_class {
        for b in 0..constraints.len() {
            if a == b || (first_class.contains(&b) && b < a) {
                continue;
            }
            let bracket = poisson_bracket(&constraints[a], &constraints[b], vars);
            let den = bracket.denominator().clone();
            let (quots, rem) = bracket.numerator().divide_by(&basis);
            let mut linear = Vec::new();
            let mut quadratic = Vec::new();
            for (k, qk) in quots.into_iter().enumerate() {
                let (qq, r) = qk.divide_by(&basis);
                linear.push(over(r, &den));
                for (l, ql) in qq.into_iter().enumerate() {
                    if !ql.is_zero() {
                        quadratic.push((k, l, over(ql, &den)));
                    }
                }
            }
            let remainder = over(rem, &den);
            let decomposable = remainder.is_zero();
            let remainder_vanishes_on_surface = surface.vanishes(&remainder)?;
            out.push(StructureEntry {
                left: a,
                right: b,
                bracket,
                linear,
                quadratic,
                remainder,
                decomposable,
                remainder_vanishes_on_surface,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symcore::parse_expression;

    fn table() -> VariableTable {
        VariableTable::new(&["x", "y", "z"], &[]).unwrap()
    }

    fn e(s: &str) -> Expression {
        parse_expression(s, &table()).unwrap()
    }

    fn surface(gens: &[&str], nonzero: &[&str]) -> Surface {
        let g: Vec<Expression> = gens.iter().map(|s| e(s)).collect();
        let nz: Vec<Expression> = nonzero.iter().map(|s| e(s)).collect();
        Surface::new(ConstraintIdeal::new(9, &g, &nz, true).unwrap(), 10, 0)
    }

    #[test]
    fn brackets() {
        let t = table();
        assert_eq!(poisson_bracket(&e("x"), &e("px"), &t), e("1"));
        assert_eq!(
            poisson_bracket(&e("pz"), &e("px^2/2 + z*py^2/2"), &t),
            e("-py^2/2")
        );
        assert_eq!(poisson_bracket(&e("px - y"), &e("py"), &t), e("-1"));
    }

    #[test]
    fn classification_examples() {
        let t = table();
        let c = classify(&[e("pz")], &surface(&["pz"], &["z"]), &t, 1).unwrap();
        assert_eq!(c.tags, vec![ConstraintClass::First]);
        assert_eq!(c.rank, 0);

        let c = classify(&[e("px - y"), e("py")], &surface(&["px - y", "py"], &[]), &t, 1).unwrap();
        assert_eq!(c.tags, vec![ConstraintClass::Second, ConstraintClass::Second]);
        assert_eq!(c.rank, 2);
        assert_eq!(c.block_determinant, Some(BigRational::from_integer(1.into())));

        let c = classify(&[e("pz"), e("py")], &surface(&["pz", "py"], &["z"]), &t, 2).unwrap();
        assert_eq!(c.tags, vec![ConstraintClass::First, ConstraintClass::First]);
        assert!(c.closure_holds);
    }

    #[test]
    fn ineffectiveness() {
        assert!(detect_ineffective(&e("py^2"), &surface(&["pz", "py^2"], &["z"])).unwrap());
        assert!(!detect_ineffective(&e("pz"), &surface(&["pz"], &["z"])).unwrap());
        assert!(detect_ineffective(&e("z*py^2"), &surface(&["py^2"], &["z"])).unwrap());
    }

    #[test]
    fn effectivization() {
        let t = table();
        let nz = [e("z")];
        assert_eq!(effectivize(&e("py^2"), &nz, &t).unwrap(), e("py"));
        assert_eq!(effectivize(&e("z*py"), &nz, &t).unwrap(), e("py"));
        assert_eq!(effectivize(&e("pz"), &nz, &t).unwrap(), e("pz"));
        assert_eq!(effectivize(&e("-py^2/2"), &nz, &t).unwrap(), e("py"));
        assert!(matches!(effectivize(&e("z^3"), &nz, &t), Err(DiracError::EmptySurface(_))));
    }

    #[test]
    fn stabilization_of_the_worked_example() {
        let t = table();
        let mut ledger = ConstraintLedger::new(t.clone(), &[e("pz")], &[e("z")], LedgerOptions::default());
        let h = e("px^2/2 + z*py^2/2");
        stabilize(&mut ledger, &h, 10).unwrap();
        assert_eq!(ledger.total(), 2);
        let sec = &ledger.constraints[1];
        assert_eq!(sec.raw, e("-py^2/2"));
        assert_eq!(sec.expr, e("py"));
        assert!(!sec.effective);
        assert_eq!(ledger.termination, Termination::Stable { level: 2 });
        assert_eq!(ledger.final_first_class(), 2);
        assert_eq!(ledger.gauge_fixing_count(), 1);

        stabilize(&mut ledger, &h, 10).unwrap();
        assert_eq!(ledger.total(), 2);
    }

    #[test]
    fn second_class_multipliers_are_solved() {
        let t = VariableTable::new(&["x", "y"], &[]).unwrap();
        let p = |s: &str| parse_expression(s, &t).unwrap();
        let mut ledger = ConstraintLedger::new(t.clone(), &[p("px - y"), p("py")], &[], LedgerOptions::default());
        stabilize(&mut ledger, &p("(x^2 + y^2)/2"), 10).unwrap();
        assert_eq!(ledger.total(), 2);
        assert_eq!(ledger.multipliers.values, Some(vec![p("y"), p("-x")]));
    }

    #[test]
    fn structure_coefficients() {
        let t = table();
        let s = surface(&["py", "pz"], &["z"]);
        let cons = [e("py"), e("pz")];
        let entries = structure_decompose(&[0, 1], &cons, &s, &t).unwrap();
        assert_eq!(entries.len(), 1);
        assert!(entries[0].decomposable);
        assert!(entries[0].linear.iter().all(Expression::is_zero));

        let (quots, rem) = e("z*py").numerator().divide_by(&[e("py").numerator().clone(), e("pz").numerator().clone()]);
        assert!(rem.is_zero());
        assert_eq!(Expression::from_poly(quots[0].clone()), e("z"));
    }

    #[test]
    fn max_levels_is_enforced() {
        let t = table();
        let mut ledger = ConstraintLedger::new(t.clone(), &[e("pz")], &[e("z")], LedgerOptions::default());
        assert_eq!(
            stabilize(&mut ledger, &e("px^2/2 + z*py^2/2"), 1),
            Err(DiracError::MaxLevelsExceeded(1))
        );
    }
}
