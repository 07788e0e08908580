//! Tangent-space / phase-space bridge: momenta, Hessian, velocity
//! inversion, primary constraints, canonical Hamiltonian, pullback by the
//! Legendre map, the multiplier functions `v` and the evolution operator `K`.

use std::collections::BTreeMap;

use num::BigRational;
use thiserror::Error;

use crate::dirac::poisson_bracket;
use crate::symcore::linalg::{self, Generic, Matrix};
use crate::symcore::{effective_part, ConstraintIdeal, Expression, SymError, VariableTable};

#[derive(Clone, Debug, Error, PartialEq)]
pub enum LegendreError {
    #[error(transparent)]
    Sym(#[from] SymError),
    #[error("the Lagrangian must not contain momentum variables (found `{0}`)")]
    MomentumInLagrangian(String),
    #[error("declared-nonvanishing expression `{0}` is identically zero")]
    VanishingDeclaration(String),
    #[error("invalid hint: {0}")]
    InvalidHint(String),
    #[error("cannot solve for velocities {velocities:?} by linear elimination; supply `velocity` hints")]
    Unsolvable { velocities: Vec<String> },
    #[error("inconsistent Legendre data: {0}")]
    Inconsistent(String),
    #[error("canonical Hamiltonian keeps velocity dependence: {0}")]
    ResidualVelocity(String),
    #[error("the multiplier system for v is inconsistent")]
    InconsistentMultipliers,
}

/// User-supplied shortcuts for steps the engine cannot do alone.
#[derive(Clone, Debug, Default)]
pub struct Hints {
    /// Velocity solutions, keyed by configuration index.
    pub velocities: Vec<(usize, Expression)>,
    /// Explicit primary constraints.
    pub primaries: Vec<Expression>,
    /// Fixed coordinates for surface sampling.
    pub sample: Vec<(usize, BigRational)>,
}

#[derive(Clone, Debug)]
pub struct LagrangianModel {
    pub vars: VariableTable,
    pub lagrangian: Expression,
    pub nonvanishing: Vec<Expression>,
    pub hints: Hints,
}

impl LagrangianModel {
    pub fn new(
        vars: VariableTable,
        lagrangian: Expression,
        nonvanishing: Vec<Expression>,
        hints: Hints,
    ) -> Result<Self, LegendreError> {
        let present = lagrangian.present_vars();
        for i in 0..vars.n() {
            if present[vars.p(i)] {
                return Err(LegendreError::MomentumInLagrangian(vars.name(vars.p(i)).to_string()));
            }
        }
        for nv in &nonvanishing {
            if nv.is_zero() {
                return Err(LegendreError::VanishingDeclaration(nv.render(&vars)));
            }
        }
        for (k, e) in &hints.velocities {
            if e.contains_var(vars.qdot(*k)) {
                return Err(LegendreError::InvalidHint(format!(
                    "velocity hint for {} refers to itself",
                    vars.name(vars.qdot(*k))
                )));
            }
        }
        for e in &hints.primaries {
            let pv = e.present_vars();
            if (0..vars.n()).any(|i| pv[vars.qdot(i)]) {
                return Err(LegendreError::InvalidHint("primary hints must be expressions in (q, p)".into()));
            }
        }
        Ok(LagrangianModel {
            vars,
            lagrangian,
            nonvanishing,
            hints,
        })
    }

    pub fn n(&self) -> usize {
        self.vars.n()
    }

    pub fn nvars(&self) -> usize {
        self.vars.nvars()
    }
}

/// Hessian of the Lagrangian with respect to the velocities.
#[derive(Clone, Debug)]
pub struct HessianData {
    pub matrix: Matrix,
    pub rank: usize,
    pub null_basis: Vec<Vec<Expression>>,
}

/// Velocities solved from `p = p̂(q, q̇)`, each in terms of `(q, p)` and the
/// unsolved velocities.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct VelocitySolutions {
    pub solved: Vec<(usize, Expression)>,
    pub unsolved: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct LegendreData {
    pub vars: VariableTable,
    pub lagrangian: Expression,
    pub momenta: Vec<Expression>,
    pub energy: Expression,
    pub hessian: Matrix,
    pub rank: usize,
    pub null_basis: Vec<Vec<Expression>>,
    pub velocities: VelocitySolutions,
    pullback_map: BTreeMap<usize, Expression>,
}

impl LegendreData {
    pub fn build(m: &LagrangianModel, seed: u64) -> Result<Self, LegendreError> {
        let momenta = conjugate_momenta(m);
        let h = hessian(m, &momenta, seed)?;
        let velocities = solve_velocities(m, &momenta, h.rank)?;
        let vars = m.vars.clone();
        let energy = &(0..m.n())
            .map(|i| &momenta[i] * &Expression::var(m.nvars(), vars.qdot(i)))
            .fold(Expression::zero(m.nvars()), |a, b| a + b)
            - &m.lagrangian;
        let pullback_map = (0..m.n()).map(|i| (vars.p(i), momenta[i].clone())).collect();
        Ok(LegendreData {
            vars,
            lagrangian: m.lagrangian.clone(),
            momenta,
            energy,
            hessian: h.matrix,
            rank: h.rank,
            null_basis: h.null_basis,
            velocities,
            pullback_map,
        })
    }

    pub fn n(&self) -> usize {
        self.vars.n()
    }

    pub fn nvars(&self) -> usize {
        self.vars.nvars()
    }

    /// Number of primary constraints, `N - rank W`.
    pub fn primary_count(&self) -> usize {
        self.n() - self.rank
    }

    /// `FL*(f)`: substitutes `p_i -> p̂_i(q, q̇)`.
    pub fn pullback(&self, f: &Expression) -> Expression {
        f.substitute(&self.pullback_map)
            .expect("momenta are polynomial in p-free variables; substitution cannot hit a zero denominator")
    }

    /// Momentum gradient `∂f/∂p_i`.
    pub fn momentum_gradient(&self, f: &Expression) -> Vec<Expression> {
        (0..self.n()).map(|i| f.differentiate(self.vars.p(i))).collect()
    }

    /// `γ_f = FL*(∂f/∂p)`.
    pub fn pulled_gradient(&self, f: &Expression) -> Vec<Expression> {
        self.momentum_gradient(f).iter().map(|g| self.pullback(g)).collect()
    }

    fn velocity_bindings(&self) -> BTreeMap<usize, Expression> {
        self.velocities
            .solved
            .iter()
            .map(|(k, e)| (self.vars.qdot(*k), e.clone()))
            .collect()
    }

    /// `K f = q̇^i FL*(∂f/∂q^i) + ∂L/∂q^i FL*(∂f/∂p_i)`.
    pub fn k_operator(&self, f: &Expression) -> Expression {
        let nv = self.nvars();
        let mut acc = Expression::zero(nv);
        for i in 0..self.n() {
            let dq = f.differentiate(self.vars.q(i));
            if !dq.is_zero() {
                acc = acc + Expression::var(nv, self.vars.qdot(i)) * self.pullback(&dq);
            }
            let dp = f.differentiate(self.vars.p(i));
            if !dp.is_zero() {
                acc = acc + self.lagrangian.differentiate(self.vars.q(i)) * self.pullback(&dp);
            }
        }
        acc
    }

    /// `K f - FL*({f, H_c}) - v^μ FL*({f, φ_μ})`; identically zero.
    pub fn k_identity_residual(&self, f: &Expression, ham: &CanonicalHamiltonian, primaries: &[Expression]) -> Expression {
        let mut rhs = self.pullback(&poisson_bracket(f, &ham.hamiltonian, &self.vars));
        for (v, phi) in ham.multipliers.iter().zip(primaries) {
            rhs = rhs + v * &self.pullback(&poisson_bracket(f, phi, &self.vars));
        }
        self.k_operator(f) - rhs
    }
}

/// `p̂_i = ∂L/∂q̇^i`.
pub fn conjugate_momenta(m: &LagrangianModel) -> Vec<Expression> {
    (0..m.n())
        .map(|i| m.lagrangian.differentiate(m.vars.qdot(i)))
        .collect()
}

/// `W_ij = ∂p̂_i/∂q̇^j`, its generic rank and a normalized null basis.
pub fn hessian(m: &LagrangianModel, momenta: &[Expression], seed: u64) -> Result<HessianData, LegendreError> {
    let n = m.n();
    let matrix: Matrix = (0..n)
        .map(|i| (0..n).map(|j| momenta[i].differentiate(m.vars.qdot(j))).collect())
        .collect();
    let zt = Generic::new(m.nvars(), &m.nonvanishing, seed)?;
    let rank = linalg::rank(&matrix, n, &zt)?;
    let null_basis = linalg::null_space(&matrix, n, m.nvars(), &zt)?;
    Ok(HessianData {
        matrix,
        rank,
        null_basis,
    })
}

fn is_certified_nonvanishing(c: &Expression, nonvanishing: &[Expression]) -> bool {
    let num = effective_part(&Expression::from_poly(c.numerator().clone()), nonvanishing);
    num.is_constant()
}

/// Greedy triangular elimination of velocities from `p_i = p̂_i`.
pub fn solve_velocities(m: &LagrangianModel, momenta: &[Expression], rank: usize) -> Result<VelocitySolutions, LegendreError> {
    let n = m.n();
    let nv = m.nvars();
    let vars = &m.vars;
    let mut eqs: Vec<Expression> = (0..n)
        .map(|i| Expression::var(nv, vars.p(i)) - &momenta[i])
        .collect();
    let mut solved: BTreeMap<usize, Expression> = BTreeMap::new();
    for (k, e) in &m.hints.velocities {
        solved.insert(*k, e.clone());
    }
    if !solved.is_empty() {
        let b: BTreeMap<usize, Expression> = solved.iter().map(|(k, e)| (vars.qdot(*k), e.clone())).collect();
        for eq in eqs.iter_mut() {
            *eq = eq.substitute(&b)?;
        }
    }
    let mut used: Vec<bool> = eqs.iter().map(Expression::is_zero).collect();

    while solved.len() < rank {
        let mut choice = None;
        'pass: for certified_only in [true, false] {
            for (i, eq) in eqs.iter().enumerate() {
                if used[i] {
                    continue;
                }
                for k in (0..n).filter(|k| !solved.contains_key(k)) {
                    let v = vars.qdot(k);
                    if eq.numerator().degree_in(v) != 1 || eq.denominator().degree_in(v) != 0 {
                        continue;
                    }
                    let c = eq.differentiate(v);
                    if c.is_zero() || (certified_only && !is_certified_nonvanishing(&c, &m.nonvanishing)) {
                        continue;
                    }
                    choice = Some((i, k, c));
                    break 'pass;
                }
            }
        }
        let Some((i, k, c)) = choice else {
            let velocities = (0..n)
                .filter(|k| !solved.contains_key(k))
                .map(|k| vars.name(vars.qdot(k)).to_string())
                .collect();
            return Err(LegendreError::Unsolvable { velocities });
        };
        let v = vars.qdot(k);
        let sol = Expression::var(nv, v) - eqs[i].checked_div(&c)?;
        let b: BTreeMap<usize, Expression> = [(v, sol.clone())].into();
        for eq in eqs.iter_mut() {
            *eq = eq.substitute(&b)?;
        }
        for s in solved.values_mut() {
            *s = s.substitute(&b)?;
        }
        used[i] = true;
        solved.insert(k, sol);
        for (j, eq) in eqs.iter().enumerate() {
            if eq.is_zero() {
                used[j] = true;
            }
        }
    }
    if solved.len() != rank {
        return Err(LegendreError::Inconsistent(format!(
            "velocity hints solve {} velocities but the Hessian has rank {}",
            solved.len(),
            rank
        )));
    }
    let unsolved = (0..n).filter(|k| !solved.contains_key(k)).collect();
    Ok(VelocitySolutions {
        solved: solved.into_iter().collect(),
        unsolved,
    })
}

/// Normalizes sign so that the term that is largest when momenta are
/// compared first has a positive coefficient.
pub(crate) fn momentum_sign_normalized(e: &Expression) -> Expression {
    use num::Signed;
    let p = e.numerator();
    let lead = p
        .terms()
        .max_by(|(a, _), (b, _)| a.exponents().iter().rev().cmp(b.exponents().iter().rev()))
        .map(|(_, c)| c.is_negative())
        .unwrap_or(false);
    if lead {
        -e
    } else {
        e.clone()
    }
}

/// Effective constraint normal form.
pub fn effective_form(e: &Expression, nonvanishing: &[Expression]) -> Expression {
    momentum_sign_normalized(&Expression::from_poly(effective_part(e, nonvanishing)))
}

/// Primary constraints `φ⁽¹⁾_μ(q, p)`, stored in effective form.
pub fn primary_constraints(
    m: &LagrangianModel,
    ld: &LegendreData,
) -> Result<Vec<Expression>, LegendreError> {
    let nv = m.nvars();
    let vars = &m.vars;
    let candidates: Vec<Expression> = if !m.hints.primaries.is_empty() {
        m.hints.primaries.clone()
    } else {
        let b = ld.velocity_bindings();
        let mut out = Vec::new();
        for i in 0..m.n() {
            let rel = (Expression::var(nv, vars.p(i)) - &ld.momenta[i]).substitute(&b)?;
            if rel.is_zero() {
                continue;
            }
            let pv = rel.present_vars();
            if let Some(j) = (0..m.n()).find(|&j| pv[vars.qdot(j)]) {
                return Err(LegendreError::Inconsistent(format!(
                    "momentum relation for {} still depends on {}",
                    vars.name(vars.p(i)),
                    vars.name(vars.qdot(j))
                )));
            }
            out.push(rel);
        }
        out
    };

    let mut accepted: Vec<Expression> = Vec::new();
    for c in &candidates {
        let eff = effective_form(c, &m.nonvanishing);
        if eff.is_constant() {
            return Err(LegendreError::Inconsistent(format!(
                "momentum relation {} has no solutions",
                c.render(vars)
            )));
        }
        if !accepted.is_empty() {
            let ideal = ConstraintIdeal::new(nv, &accepted, &m.nonvanishing, false)?;
            if crate::symcore::reduce_on_surface(&eff, &ideal).is_zero() {
                continue;
            }
        }
        accepted.push(eff);
    }
    // With velocity or primary hints in play these failures are the hints' fault.
    let fail = |msg: String| {
        if m.hints.primaries.is_empty() && m.hints.velocities.is_empty() {
            LegendreError::Inconsistent(msg)
        } else {
            LegendreError::InvalidHint(msg)
        }
    };
    if accepted.len() != ld.primary_count() {
        return Err(fail(format!(
            "found {} independent primary constraints, Hessian corank is {}",
            accepted.len(),
            ld.primary_count()
        )));
    }
    for phi in &accepted {
        let pb = ld.pullback(phi);
        if !pb.is_zero() {
            return Err(fail(format!(
                "pullback of primary constraint {} is {} instead of 0",
                phi.render(vars),
                pb.render(vars)
            )));
        }
    }
    if !gradients_span_null_space(ld, &accepted, m, 0)? {
        return Err(fail("primary momentum-gradients do not span the Hessian null space".into()));
    }
    Ok(accepted)
}

/// The pulled-back momentum gradients of the primaries and the Hessian null
/// basis span the same space.
pub fn gradients_span_null_space(
    ld: &LegendreData,
    primaries: &[Expression],
    m: &LagrangianModel,
    seed: u64,
) -> Result<bool, LegendreError> {
    let p = ld.null_basis.len();
    if primaries.len() != p {
        return Ok(false);
    }
    if p == 0 {
        return Ok(true);
    }
    let zt = Generic::new(m.nvars(), &m.nonvanishing, seed)?;
    let grads: Matrix = primaries.iter().map(|phi| ld.pulled_gradient(phi)).collect();
    let mut stacked = grads.clone();
    stacked.extend(ld.null_basis.iter().cloned());
    let n = ld.n();
    Ok(linalg::rank(&grads, n, &zt)? == p
        && linalg::rank(&ld.null_basis, n, &zt)? == p
        && linalg::rank(&stacked, n, &zt)? == p)
}

/// Canonical Hamiltonian with the multiplier functions `v^μ`.
#[derive(Clone, Debug)]
pub struct CanonicalHamiltonian {
    pub hamiltonian: Expression,
    pub multipliers: Vec<Expression>,
}

impl CanonicalHamiltonian {
    pub fn build(m: &LagrangianModel, ld: &LegendreData, primaries: &[Expression]) -> Result<Self, LegendreError> {
        let hamiltonian = canonical_hamiltonian(m, ld)?;
        let multipliers = multiplier_functions(m, ld, &hamiltonian, primaries)?;
        Ok(CanonicalHamiltonian {
            hamiltonian,
            multipliers,
        })
    }
}

/// `H_c = p_i q̇^i - L` with solved velocities substituted. Dependence on the
/// unsolved velocities must be linear with coefficients that pull back to
/// zero; those terms are dropped.
pub fn canonical_hamiltonian(m: &LagrangianModel, ld: &LegendreData) -> Result<Expression, LegendreError> {
    let nv = m.nvars();
    let vars = &m.vars;
    let raw = &(0..m.n())
        .map(|i| Expression::var(nv, vars.p(i)) * Expression::var(nv, vars.qdot(i)))
        .fold(Expression::zero(nv), |a, b| a + b)
        - &m.lagrangian;
    let mut h = raw.substitute(&ld.velocity_bindings())?;
    let mut zeros = BTreeMap::new();
    for &u in &ld.velocities.unsolved {
        let v = vars.qdot(u);
        let coeff = h.differentiate(v);
        let pv = coeff.present_vars();
        if (0..m.n()).any(|j| pv[vars.qdot(j)]) || !ld.pullback(&coeff).is_zero() {
            return Err(LegendreError::ResidualVelocity(format!(
                "coefficient of {} is {}",
                vars.name(v),
                coeff.render(vars)
            )));
        }
        zeros.insert(v, Expression::zero(nv));
    }
    h = h.substitute(&zeros)?;
    let pv = h.present_vars();
    if let Some(j) = (0..m.n()).find(|&j| pv[vars.qdot(j)]) {
        return Err(LegendreError::ResidualVelocity(vars.name(vars.qdot(j)).to_string()));
    }
    let residual = ld.pullback(&h) - &ld.energy;
    if !residual.is_zero() {
        return Err(LegendreError::Inconsistent(format!(
            "FL*(H_c) - E_L = {}",
            residual.render(vars)
        )));
    }
    Ok(h)
}

/// Solves `q̇^i = FL*({q^i, H_c}) + v^μ FL*({q^i, φ_μ})` for `v^μ`.
pub fn multiplier_functions(
    m: &LagrangianModel,
    ld: &LegendreData,
    hamiltonian: &Expression,
    primaries: &[Expression],
) -> Result<Vec<Expression>, LegendreError> {
    if primaries.is_empty() {
        return Ok(Vec::new());
    }
    let nv = m.nvars();
    let vars = &m.vars;
    let n = m.n();
    let a: Matrix = (0..n)
        .map(|i| {
            primaries
                .iter()
                .map(|phi| ld.pullback(&phi.differentiate(vars.p(i))))
                .collect()
        })
        .collect();
    let b: Vec<Expression> = (0..n)
        .map(|i| Expression::var(nv, vars.qdot(i)) - ld.pullback(&hamiltonian.differentiate(vars.p(i))))
        .collect();
    let zt = Generic::new(nv, &m.nonvanishing, 0)?;
    let v = linalg::solve(&a, &b, primaries.len(), &zt)?.ok_or(LegendreError::InconsistentMultipliers)?;
    for i in 0..n {
        let lhs: Expression = a[i]
            .iter()
            .zip(&v)
            .map(|(aij, vj)| aij * vj)
            .fold(Expression::zero(nv), |x, y| x + y);
        if !(lhs - &b[i]).is_zero() {
            return Err(LegendreError::InconsistentMultipliers);
        }
    }
    Ok(v)
}

/// Acceleration-free part of the Euler-Lagrange expressions,
/// `α_i = ∂L/∂q^i - q̇^j ∂²L/∂q^j∂q̇^i`.
pub fn euler_lagrange_alpha(m: &LagrangianModel) -> Vec<Expression> {
    let nv = m.nvars();
    let vars = &m.vars;
    (0..m.n())
        .map(|i| {
            let dl_dqdot = m.lagrangian.differentiate(vars.qdot(i));
            let mut a = m.lagrangian.differentiate(vars.q(i));
            for j in 0..m.n() {
                let mixed = dl_dqdot.differentiate(vars.q(j));
                if !mixed.is_zero() {
                    a = a - Expression::var(nv, vars.qdot(j)) * mixed;
                }
            }
            a
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symcore::parse_expression;

    fn model(config: &[&str], lagrangian: &str, nonzero: &[&str]) -> LagrangianModel {
        let vars = VariableTable::new(config, &[]).unwrap();
        let l = parse_expression(lagrangian, &vars).unwrap();
        let nz = nonzero.iter().map(|s| parse_expression(s, &vars).unwrap()).collect();
        LagrangianModel::new(vars, l, nz, Hints::default()).unwrap()
    }

    fn ex(m: &LagrangianModel, s: &str) -> Expression {
        parse_expression(s, &m.vars).unwrap()
    }

    #[test]
    fn momenta_of_the_three_reference_models() {
        let m = model(&["x", "y", "z"], "(1/2)*dx^2 + dy^2/(2*z)", &["z"]);
        assert_eq!(conjugate_momenta(&m), vec![ex(&m, "dx"), ex(&m, "dy/z"), ex(&m, "0")]);
        let m = model(&["x"], "dx^2/2", &[]);
        assert_eq!(conjugate_momenta(&m), vec![ex(&m, "dx")]);
        let m = model(&["x", "y"], "dx*y - (x^2 + y^2)/2", &[]);
        assert_eq!(conjugate_momenta(&m), vec![ex(&m, "y"), ex(&m, "0")]);
    }

    #[test]
    fn hessian_rank_and_null_basis() {
        let m = model(&["x", "y", "z"], "(1/2)*dx^2 + dy^2/(2*z)", &["z"]);
        let h = hessian(&m, &conjugate_momenta(&m), 0).unwrap();
        assert_eq!(h.rank, 2);
        assert_eq!(h.matrix[1][1], ex(&m, "1/z"));
        assert_eq!(h.null_basis, vec![vec![ex(&m, "0"), ex(&m, "0"), ex(&m, "1")]]);

        let m = model(&["x", "y"], "(dx^2 + dy^2)/2", &[]);
        let h = hessian(&m, &conjugate_momenta(&m), 0).unwrap();
        assert_eq!(h.rank, 2);
        assert!(h.null_basis.is_empty());

        let m = model(&["x", "y"], "dx*y - (x^2 + y^2)/2", &[]);
        let h = hessian(&m, &conjugate_momenta(&m), 0).unwrap();
        assert_eq!(h.rank, 0);
        assert_eq!(
            h.null_basis,
            vec![vec![ex(&m, "1"), ex(&m, "0")], vec![ex(&m, "0"), ex(&m, "1")]]
        );
    }

    #[test]
    fn velocity_inversion() {
        let m = model(&["x", "y", "z"], "(1/2)*dx^2 + dy^2/(2*z)", &["z"]);
        let ld = LegendreData::build(&m, 0).unwrap();
        assert_eq!(ld.velocities.solved, vec![(0, ex(&m, "px")), (1, ex(&m, "z*py"))]);
        assert_eq!(ld.velocities.unsolved, vec![2]);

        let m = model(&["x"], "dx^4", &[]);
        match LegendreData::build(&m, 0) {
            Err(LegendreError::Unsolvable { velocities }) => assert_eq!(velocities, vec!["dx".to_string()]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn primaries_and_hamiltonians() {
        let m = model(&["x", "y", "z"], "(1/2)*dx^2 + dy^2/(2*z)", &["z"]);
        let ld = LegendreData::build(&m, 0).unwrap();
        let phi = primary_constraints(&m, &ld).unwrap();
        assert_eq!(phi, vec![ex(&m, "pz")]);
        let h = CanonicalHamiltonian::build(&m, &ld, &phi).unwrap();
        assert_eq!(h.hamiltonian, ex(&m, "px^2/2 + z*py^2/2"));
        assert_eq!(h.multipliers, vec![ex(&m, "dz")]);

        let m = model(&["x", "y"], "dx*y - (x^2 + y^2)/2", &[]);
        let ld = LegendreData::build(&m, 0).unwrap();
        let phi = primary_constraints(&m, &ld).unwrap();
        assert_eq!(phi, vec![ex(&m, "px - y"), ex(&m, "py")]);
        let h = CanonicalHamiltonian::build(&m, &ld, &phi).unwrap();
        assert_eq!(h.hamiltonian, ex(&m, "(x^2 + y^2)/2"));
        assert_eq!(h.multipliers, vec![ex(&m, "dx"), ex(&m, "dy")]);

        let m = model(&["x", "y"], "(dx - y)^2/2", &[]);
        let ld = LegendreData::build(&m, 0).unwrap();
        let phi = primary_constraints(&m, &ld).unwrap();
        assert_eq!(phi, vec![ex(&m, "py")]);
        let h = CanonicalHamiltonian::build(&m, &ld, &phi).unwrap();
        assert_eq!(h.hamiltonian, ex(&m, "px^2/2 + y*px"));
        assert_eq!(h.multipliers, vec![ex(&m, "dy")]);

        let m = model(&["x"], "dx^2/2", &[]);
        let ld = LegendreData::build(&m, 0).unwrap();
        assert!(primary_constraints(&m, &ld).unwrap().is_empty());
        assert_eq!(canonical_hamiltonian(&m, &ld).unwrap(), ex(&m, "px^2/2"));
    }

    #[test]
    fn k_operator_values() {
        let m = model(&["x", "y", "z"], "(1/2)*dx^2 + dy^2/(2*z)", &["z"]);
        let ld = LegendreData::build(&m, 0).unwrap();
        assert_eq!(ld.k_operator(&ex(&m, "pz")), ex(&m, "-dy^2/(2*z^2)"));
        assert_eq!(ld.k_operator(&ex(&m, "y")), ex(&m, "dy"));
        assert!(ld.k_operator(&ex(&m, "7")).is_zero());
        assert_eq!(ld.pullback(&ex(&m, "py")), ex(&m, "dy/z"));
        assert_eq!(ld.pullback(&ex(&m, "x")), ex(&m, "x"));
    }

    #[test]
    fn alpha_follows_the_acceleration_free_formula() {
        let m = model(&["x", "y", "z"], "(1/2)*dx^2 + dy^2/(2*z)", &["z"]);
        let a = euler_lagrange_alpha(&m);
        assert_eq!(a[0], ex(&m, "0"));
        assert_eq!(a[1], ex(&m, "dy*dz/z^2"));
        assert_eq!(a[2], ex(&m, "-dy^2/(2*z^2)"));

        let m = model(&["x", "y"], "(dx - y)^2/2", &[]);
        let a = euler_lagrange_alpha(&m);
        assert_eq!(a, vec![ex(&m, "dy"), ex(&m, "y - dx")]);
    }

    #[test]
    fn momenta_in_lagrangian_are_rejected() {
        let vars = VariableTable::new(&["x"], &[]).unwrap();
        let l = parse_expression("px*dx", &vars).unwrap();
        assert!(matches!(
            LagrangianModel::new(vars, l, vec![], Hints::default()),
            Err(LegendreError::MomentumInLagrangian(_))
        ));
    }
}
