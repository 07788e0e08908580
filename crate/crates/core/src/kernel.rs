//! Explicit basis of `Ker(ω_L)` on configuration-velocity space: the
//! vertical fields `Γ_μ`, the mixed fields `Δ_μ₁`, and the identities they
//! satisfy.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dirac::{poisson_bracket, ConstraintLedger};
use crate::legendre::{euler_lagrange_alpha, CanonicalHamiltonian, LagrangianModel, LegendreData};
use crate::symcore::linalg::{self, Generic, Matrix};
use crate::symcore::{Expression, SymError, VariableTable};

/// `W_ij` and `A_ij = ∂p̂_i/∂q^j - ∂p̂_j/∂q^i`; together `ω_L = dq^s ∧ dp̂_s`.
#[derive(Clone, Debug)]
pub struct PresymplecticData {
    pub w: Matrix,
    pub a: Matrix,
}

pub fn presymplectic_data(ld: &LegendreData) -> PresymplecticData {
    let n = ld.n();
    let a = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| ld.momenta[i].differentiate(ld.vars.q(j)) - ld.momenta[j].differentiate(ld.vars.q(i)))
                .collect()
        })
        .collect();
    PresymplecticData {
        w: ld.hessian.clone(),
        a,
    }
}

impl PresymplecticData {
    pub fn is_antisymmetric(&self) -> bool {
        let n = self.a.len();
        (0..n).all(|i| (0..n).all(|j| (&self.a[i][j] + &self.a[j][i]).is_zero()))
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.w.len();
        (0..n).all(|i| (0..n).all(|j| self.w[i][j] == self.w[j][i]))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldRole {
    Gamma,
    Delta,
    Generic,
}

/// `ε^i ∂/∂q^i + β^i ∂/∂q̇^i`.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentVectorField {
    pub eps: Vec<Expression>,
    pub beta: Vec<Expression>,
    pub role: FieldRole,
}

impl TangentVectorField {
    pub fn zero(n: usize, nvars: usize) -> Self {
        TangentVectorField {
            eps: vec![Expression::zero(nvars); n],
            beta: vec![Expression::zero(nvars); n],
            role: FieldRole::Generic,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.eps.iter().chain(&self.beta).all(Expression::is_zero)
    }

    pub fn is_vertical(&self) -> bool {
        self.eps.iter().all(Expression::is_zero)
    }

    /// Components in the order `(ε, β)`.
    pub fn components(&self) -> Vec<Expression> {
        self.eps.iter().chain(&self.beta).cloned().collect()
    }

    pub fn same_components(&self, other: &TangentVectorField) -> bool {
        self.eps == other.eps && self.beta == other.beta
    }
}

/// The two component vectors of `i_Y ω_L`.
#[derive(Clone, Debug, PartialEq)]
pub struct OneForm {
    /// Coefficients of `dq^j`: `ε^i A_ij - β^i W_ij`.
    pub dq: Vec<Expression>,
    /// Coefficients of `dq̇^j`: `ε^i W_ij`.
    pub dqdot: Vec<Expression>,
}

impl OneForm {
    pub fn is_zero(&self) -> bool {
        self.dq.iter().chain(&self.dqdot).all(Expression::is_zero)
    }
}

pub fn contract_omega(y: &TangentVectorField, p: &PresymplecticData) -> OneForm {
    let n = y.eps.len();
    let nv = y.eps.first().map_or(0, Expression::nvars);
    let mut dq = vec![Expression::zero(nv); n];
    let mut dqdot = vec![Expression::zero(nv); n];
    for j in 0..n {
        for i in 0..n {
            if !y.eps[i].is_zero() {
                dq[j] = &dq[j] + &(&y.eps[i] * &p.a[i][j]);
                dqdot[j] = &dqdot[j] + &(&y.eps[i] * &p.w[i][j]);
            }
            if !y.beta[i].is_zero() {
                dq[j] = &dq[j] - &(&y.beta[i] * &p.w[i][j]);
            }
        }
    }
    OneForm { dq, dqdot }
}

/// Directional derivative `ε^i ∂g/∂q^i + β^i ∂g/∂q̇^i`.
pub fn apply_field(y: &TangentVectorField, g: &Expression, vars: &VariableTable) -> Expression {
    let mut acc = Expression::zero(g.nvars());
    for i in 0..y.eps.len() {
        if !y.eps[i].is_zero() {
            acc = acc + &y.eps[i] * &g.differentiate(vars.q(i));
        }
        if !y.beta[i].is_zero() {
            acc = acc + &y.beta[i] * &g.differentiate(vars.qdot(i));
        }
    }
    acc
}

/// Commutator `[Y1, Y2]`.
pub fn lie_bracket(y1: &TangentVectorField, y2: &TangentVectorField, vars: &VariableTable) -> TangentVectorField {
    let comp = |a: &[Expression], b: &[Expression]| -> Vec<Expression> {
        a.iter()
            .zip(b)
            .map(|(ak, bk)| apply_field(y1, bk, vars) - apply_field(y2, ak, vars))
            .collect()
    };
    TangentVectorField {
        eps: comp(&y1.eps, &y2.eps),
        beta: comp(&y1.beta, &y2.beta),
        role: FieldRole::Generic,
    }
}

/// `S(Y)`: ε moved into the velocity slots.
pub fn vertical_endomorphism(y: &TangentVectorField) -> TangentVectorField {
    let nv = y.eps.first().map_or(0, Expression::nvars);
    TangentVectorField {
        eps: vec![Expression::zero(nv); y.eps.len()],
        beta: y.eps.clone(),
        role: FieldRole::Generic,
    }
}

/// Coefficients `c` with `Σ c_k basis_k = z` exactly, if they exist.
pub fn span_coefficients(
    z: &TangentVectorField,
    basis: &[TangentVectorField],
    zt: &Generic,
) -> Result<Option<Vec<Expression>>, SymError> {
    let target = z.components();
    let nv = target.first().map_or(0, Expression::nvars);
    if basis.is_empty() {
        return Ok(z.is_zero().then(Vec::new));
    }
    let cols: Vec<Vec<Expression>> = basis.iter().map(TangentVectorField::components).collect();
    let a: Matrix = (0..target.len())
        .map(|r| cols.iter().map(|c| c[r].clone()).collect())
        .collect();
    let Some(x) = linalg::solve(&a, &target, basis.len(), zt)? else {
        return Ok(None);
    };
    for (r, t) in target.iter().enumerate() {
        let lhs: Expression = (0..basis.len()).map(|k| &a[r][k] * &x[k]).fold(Expression::zero(nv), |s, v| s + v);
        if !(lhs - t).is_zero() {
            return Ok(None);
        }
    }
    Ok(Some(x))
}

/// `Γ_μ`: `ε = 0`, `β = FL*(∂φ_μ/∂p)`.
pub fn gamma_fields(ld: &LegendreData, primaries: &[Expression]) -> Vec<TangentVectorField> {
    primaries
        .iter()
        .map(|phi| TangentVectorField {
            eps: vec![Expression::zero(ld.nvars()); ld.n()],
            beta: ld.pulled_gradient(phi),
            role: FieldRole::Gamma,
        })
        .collect()
}

/// A first-class primary `φ₁ = Σ c_a φ_a` with its raw stabilization
/// bracket `φ₂ = {φ₁, H_c}`.
#[derive(Clone, Debug)]
pub struct FirstClassPrimary {
    pub combination: Vec<Expression>,
    pub phi1: Expression,
    pub phi2: Expression,
}

/// First-class combinations of the primaries, taken from the level-1
/// classification.
pub fn first_class_primaries(ledger: &ConstraintLedger, ham: &CanonicalHamiltonian) -> Vec<FirstClassPrimary> {
    let primaries = ledger.primaries();
    let Some(cls) = ledger.snapshots.get(&1) else {
        return Vec::new();
    };
    cls.first_class
        .iter()
        .map(|v| {
            let phi1: Expression = v.iter().zip(&primaries).map(|(c, p)| c * p).sum();
            let phi2 = poisson_bracket(&phi1, &ham.hamiltonian, &ledger.vars);
            FirstClassPrimary {
                combination: v.clone(),
                phi1,
                phi2,
            }
        })
        .collect()
}

/// `Δ_μ₁`: `ε^i = FL*(∂φ₁/∂p_i)`, `β^j = K(∂φ₁/∂p_j) - FL*(∂φ₂/∂p_j)`.
pub fn delta_fields(ld: &LegendreData, fcp: &[FirstClassPrimary]) -> Vec<TangentVectorField> {
    fcp.iter()
        .map(|f| {
            let grad1 = ld.momentum_gradient(&f.phi1);
            let grad2 = ld.momentum_gradient(&f.phi2);
            TangentVectorField {
                eps: grad1.iter().map(|g| ld.pullback(g)).collect(),
                beta: grad1
                    .iter()
                    .zip(&grad2)
                    .map(|(g1, g2)| ld.k_operator(g1) - ld.pullback(g2))
                    .collect(),
                role: FieldRole::Delta,
            }
        })
        .collect()
}

/// `Δ(E_L)` for each Δ field.
pub fn energy_obstruction(deltas: &[TangentVectorField], ld: &LegendreData) -> Vec<Expression> {
    deltas.iter().map(|d| apply_field(d, &ld.energy, &ld.vars)).collect()
}

/// One verified identity.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Rendered residual, `0` when the identity holds exactly.
    pub residual: String,
}

impl Check {
    pub fn exact(name: impl Into<String>, residual: &Expression, vars: &VariableTable) -> Check {
        Check {
            name: name.into(),
            passed: residual.is_zero(),
            residual: residual.render(vars),
        }
    }

    pub fn flag(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Check {
        Check {
            name: name.into(),
            passed,
            residual: detail.into(),
        }
    }
}

fn render_list(es: &[Expression], vars: &VariableTable) -> String {
    let parts: Vec<String> = es.iter().map(|e| e.render(vars)).collect();
    format!("({})", parts.join(", "))
}

/// Commutator of two basis fields expressed in the basis.
#[derive(Clone, Debug)]
pub struct Commutator {
    pub left: String,
    pub right: String,
    pub field: TangentVectorField,
    pub coefficients: Option<Vec<Expression>>,
}

#[derive(Clone, Debug)]
pub struct KernelBasis {
    pub gammas: Vec<TangentVectorField>,
    pub deltas: Vec<TangentVectorField>,
    pub first_class_primaries: Vec<FirstClassPrimary>,
    pub obstructions: Vec<Expression>,
    pub commutators: Vec<Commutator>,
    pub presymplectic: PresymplecticData,
    pub checks: Vec<Check>,
}

impl KernelBasis {
    pub fn fields(&self) -> Vec<(String, TangentVectorField)> {
        let mut out: Vec<(String, TangentVectorField)> = self
            .gammas
            .iter()
            .enumerate()
            .map(|(i, g)| (format!("Gamma{}", i + 1), g.clone()))
            .collect();
        out.extend(self.deltas.iter().enumerate().map(|(i, d)| (format!("Delta{}", i + 1), d.clone())));
        out
    }
}

/// A random polynomial in `(q, p)` of degree ≤ 3 with small integer coefficients.
pub fn random_phase_polynomial(vars: &VariableTable, rng: &mut ChaCha8Rng) -> Expression {
    let nv = vars.nvars();
    let pool: Vec<usize> = (0..vars.n()).flat_map(|i| [vars.q(i), vars.p(i)]).collect();
    let mut acc = Expression::zero(nv);
    for _ in 0..rng.gen_range(1..=4) {
        let mut term = Expression::int(nv, rng.gen_range(-5..=5));
        for _ in 0..rng.gen_range(0..=3) {
            term = term * Expression::var(nv, pool[rng.gen_range(0..pool.len())]);
        }
        acc = acc + term;
    }
    acc
}

/// Test functions: every `q^i`, `p_i`, `H_c`, and five random polynomials.
pub fn test_functions(vars: &VariableTable, ham: &Expression, seed: u64) -> Vec<Expression> {
    let nv = vars.nvars();
    let mut fs: Vec<Expression> = (0..vars.n())
        .flat_map(|i| [Expression::var(nv, vars.q(i)), Expression::var(nv, vars.p(i))])
        .collect();
    fs.push(ham.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    fs.extend((0..5).map(|_| random_phase_polynomial(vars, &mut rng)));
    fs
}

/// Builds `Γ`, `Δ` and verifies every kernel identity.
pub fn build_kernel(
    m: &LagrangianModel,
    ld: &LegendreData,
    ham: &CanonicalHamiltonian,
    ledger: &ConstraintLedger,
    seed: u64,
) -> Result<KernelBasis, SymError> {
    let vars = &ld.vars;
    let nv = ld.nvars();
    let primaries = ledger.primaries();
    let pre = presymplectic_data(ld);
    let gammas = gamma_fields(ld, &primaries);
    let fcp = first_class_primaries(ledger, ham);
    let deltas = delta_fields(ld, &fcp);
    let obstructions = energy_obstruction(&deltas, ld);
    let mut checks = vec![
        Check::flag("W symmetric", pre.is_symmetric(), ""),
        Check::flag("A antisymmetric", pre.is_antisymmetric(), ""),
    ];
    let tests = test_functions(vars, &ham.hamiltonian, seed);

    for (k, g) in gammas.iter().enumerate() {
        let c = contract_omega(g, &pre);
        checks.push(Check::flag(
            format!("Gamma{} in Ker(omega_L)", k + 1),
            c.is_zero(),
            format!("dq {} dqdot {}", render_list(&c.dq, vars), render_list(&c.dqdot, vars)),
        ));
        let gw: Vec<Expression> = (0..ld.n())
            .map(|j| (0..ld.n()).map(|i| &g.beta[i] * &pre.w[i][j]).sum())
            .collect();
        checks.push(Check::flag(
            format!("gamma{} . W = 0", k + 1),
            gw.iter().all(Expression::is_zero),
            render_list(&gw, vars),
        ));
        let worst = tests
            .iter()
            .map(|f| apply_field(g, &ld.pullback(f), vars))
            .find(|r| !r.is_zero())
            .unwrap_or_else(|| Expression::zero(nv));
        checks.push(Check::exact(format!("Gamma{}(FL* f) = 0", k + 1), &worst, vars));
    }

    for (k, (d, f)) in deltas.iter().zip(&fcp).enumerate() {
        let c = contract_omega(d, &pre);
        checks.push(Check::flag(
            format!("Delta{} in Ker(omega_L)", k + 1),
            c.is_zero(),
            format!("dq {} dqdot {}", render_list(&c.dq, vars), render_list(&c.dqdot, vars)),
        ));
        let worst = tests
            .iter()
            .map(|t| apply_field(d, &ld.pullback(t), vars) - ld.pullback(&poisson_bracket(t, &f.phi1, vars)))
            .find(|r| !r.is_zero())
            .unwrap_or_else(|| Expression::zero(nv));
        checks.push(Check::exact(format!("Delta{}(FL* f) = FL*({{f, phi1}})", k + 1), &worst, vars));
        let obs = &obstructions[k];
        checks.push(Check::exact(
            format!("Delta{}(E_L) = -FL*(phi2)", k + 1),
            &(obs + &ld.pullback(&f.phi2)),
            vars,
        ));
        let alpha = euler_lagrange_alpha(m);
        let ag: Expression = alpha.iter().zip(&d.eps).map(|(a, g)| a * g).sum();
        checks.push(Check::exact(format!("Delta{}(E_L) = -alpha . gamma", k + 1), &(obs + &ag), vars));
        let gamma = TangentVectorField {
            eps: vec![Expression::zero(nv); ld.n()],
            beta: ld.pulled_gradient(&f.phi1),
            role: FieldRole::Gamma,
        };
        checks.push(Check::flag(
            format!("S(Delta{}) = Gamma", k + 1),
            vertical_endomorphism(d).same_components(&gamma),
            render_list(&vertical_endomorphism(d).beta, vars),
        ));
    }

    let zt = Generic::new(nv, &m.nonvanishing, seed)?;
    let named: Vec<(String, TangentVectorField)> = gammas
        .iter()
        .enumerate()
        .map(|(i, g)| (format!("Gamma{}", i + 1), g.clone()))
        .chain(deltas.iter().enumerate().map(|(i, d)| (format!("Delta{}", i + 1), d.clone())))
        .collect();
    let basis: Vec<TangentVectorField> = named.iter().map(|(_, f)| f.clone()).collect();
    let mut commutators = Vec::new();
    for a in 0..named.len() {
        for b in a + 1..named.len() {
            let field = lie_bracket(&named[a].1, &named[b].1, vars);
            let coefficients = span_coefficients(&field, &basis, &zt)?;
            let label = format!("[{}, {}]", named[a].0, named[b].0);
            checks.push(Check::flag(format!("{label} in span"), coefficients.is_some(), ""));
            match (named[a].1.role, named[b].1.role) {
                (FieldRole::Gamma, FieldRole::Gamma) => {
                    checks.push(Check::flag(format!("{label} = 0"), field.is_zero(), render_list(&field.components(), vars)))
                }
                (FieldRole::Gamma, FieldRole::Delta) => checks.push(Check::flag(
                    format!("{label} vertical"),
                    field.is_vertical(),
                    render_list(&field.eps, vars),
                )),
                _ => {}
            }
            commutators.push(Commutator {
                left: named[a].0.clone(),
                right: named[b].0.clone(),
                field,
                coefficients,
            });
        }
    }

    let p = primaries.len();
    checks.push(Check::flag("|Gamma| = P", gammas.len() == ld.primary_count(), format!("{} vs {}", gammas.len(), ld.primary_count())));
    checks.push(Check::flag(
        "P - |Delta| even",
        (p - deltas.len()).is_multiple_of(2),
        format!("{}", p - deltas.len()),
    ));
    let span_rank = linalg::rank(&basis.iter().map(TangentVectorField::components).collect(), 2 * ld.n(), &zt)?;
    checks.push(Check::flag("dim K <= 2 dim Ver(K)", span_rank <= 2 * gammas.len(), format!("{span_rank}")));

    Ok(KernelBasis {
        gammas,
        deltas,
        first_class_primaries: fcp,
        obstructions,
        commutators,
        presymplectic: pre,
        checks,
    })
}
