//! Acceptance suite: one pass/fail line per criterion.
//!
//! Runs without the libtest harness so the per-criterion lines are always
//! printed; the process exits nonzero if any criterion fails.

use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use presym::dirac::{poisson_bracket, ConstraintClass};
use presym::kernel::{
    apply_field, contract_omega, lie_bracket, presymplectic_data, random_phase_polynomial, vertical_endomorphism,
};
use presym::legendre::{
    euler_lagrange_alpha, gradients_span_null_space, primary_constraints, CanonicalHamiltonian, Hints,
    LagrangianModel, LegendreData,
};
use presym::report::{build_report, load_model, run_analysis, serialize_report, Analysis, AnalysisOptions, Format};
use presym::symcore::{parse_expression, Expression, VariableTable};

/// Cases per randomized property.
const CASES: usize = 100;

struct Outcome {
    failures: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Outcome { failures: Vec::new() }
    }

    fn expect(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }

    fn expect_eq(&mut self, got: &Expression, want: &str, vars: &VariableTable, what: &str) {
        match parse_expression(want, vars) {
            Ok(w) if &w == got => {}
            Ok(_) => self.failures.push(format!("{what}: got {}, want {want}", got.render(vars))),
            Err(e) => self.failures.push(format!("{what}: bad expectation {want}: {e}")),
        }
    }
}

fn model_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../models").join(name)
}

fn analyze(name: &str) -> Result<Analysis, String> {
    let lm = load_model(&model_path(name)).map_err(|e| e.to_string())?;
    run_analysis(&lm.model, &AnalysisOptions::default()).map_err(|e| e.to_string())
}

fn all_checks_pass(a: &Analysis, o: &mut Outcome) {
    for c in &a.checks {
        o.expect(c.passed, format!("verification `{}` failed: {}", c.name, c.residual));
    }
}

fn criterion_1() -> Outcome {
    let mut o = Outcome::new();
    let a = match analyze("worked_example.model") {
        Ok(a) => a,
        Err(e) => {
            o.expect(false, e);
            return o;
        }
    };
    let vars = &a.model.vars;
    o.expect(a.model.n() == 3, "N = 3");
    o.expect(a.legendre.rank == 2, "Hessian rank 2");
    o.expect(a.primaries.len() == 1, "one primary constraint");
    if let Some(phi) = a.primaries.first() {
        o.expect_eq(phi, "pz", vars, "primary");
    }
    o.expect_eq(&a.hamiltonian.hamiltonian, "px^2/2 + z*py^2/2", vars, "H_c");
    let cons = &a.ledger.constraints;
    o.expect(cons.len() == 2, format!("two constraints, got {}", cons.len()));
    if let Some(sec) = cons.get(1) {
        o.expect_eq(&sec.raw, "-py^2/2", vars, "raw secondary");
        o.expect_eq(&sec.expr, "py", vars, "effectivized secondary");
        o.expect(!sec.effective, "secondary flagged ineffective");
        o.expect(sec.level == 2, "secondary at level 2");
    }
    o.expect(a.ledger.top_level() == 2, "termination at level 2");
    let c = a.counts;
    o.expect((c.m, c.p_f, c.g) == (2, 2, 1), format!("M, P_f, G = {}, {}, {}", c.m, c.p_f, c.g));
    o.expect(c.quotient_dim == 2, format!("quotient dim {}", c.quotient_dim));
    o.expect(c.dirac_original_dim == 3, format!("Dirac-original dim {}", c.dirac_original_dim));
    o.expect(!a.dirac_conjecture_holds(), "dirac_conjecture_holds = false");
    o.expect(a.odd_dof(), "odd_dof = true");
    all_checks_pass(&a, &mut o);
    o
}

fn criterion_2() -> Outcome {
    let mut o = Outcome::new();
    let a = match analyze("worked_example.model") {
        Ok(a) => a,
        Err(e) => {
            o.expect(false, e);
            return o;
        }
    };
    let vars = &a.model.vars;
    let k = &a.kernel;
    o.expect(k.gammas.len() == 1 && k.deltas.len() == 1, "one Γ and one Δ");
    if k.gammas.len() != 1 || k.deltas.len() != 1 {
        return o;
    }
    let (g, d) = (&k.gammas[0], &k.deltas[0]);
    for (i, want) in ["0", "0", "0"].iter().enumerate() {
        o.expect_eq(&g.eps[i], want, vars, "Γ ε");
    }
    for (i, want) in ["0", "0", "1"].iter().enumerate() {
        o.expect_eq(&g.beta[i], want, vars, "Γ β");
    }
    for (i, want) in ["0", "0", "1"].iter().enumerate() {
        o.expect_eq(&d.eps[i], want, vars, "Δ ε");
    }
    for (i, want) in ["0", "dy/z", "0"].iter().enumerate() {
        o.expect_eq(&d.beta[i], want, vars, "Δ β");
    }
    let pre = presymplectic_data(&a.legendre);
    o.expect(contract_omega(g, &pre).is_zero(), "contract_omega(Γ) = 0");
    o.expect(contract_omega(d, &pre).is_zero(), "contract_omega(Δ) = 0");
    let obs = apply_field(d, &a.legendre.energy, vars);
    o.expect_eq(&obs, "dy^2/(2*z^2)", vars, "Δ(E_L)");
    let raw_phi2 = &a.ledger.constraints[1].raw;
    o.expect((&obs + &a.legendre.pullback(raw_phi2)).is_zero(), "Δ(E_L) = -FL*(-py^2/2)");
    let alpha = euler_lagrange_alpha(&a.model);
    let ag: Expression = alpha.iter().zip(&d.eps).map(|(x, y)| x * y).sum();
    // α·γ = -ẏ²/(2z²); the obstruction is its negative.
    o.expect((&obs + &ag).is_zero(), "Δ(E_L) = -α·γ");
    o.expect(lie_bracket(g, d, vars).is_zero(), "[Γ, Δ] = 0");
    o.expect(vertical_endomorphism(d).same_components(g), "S(Δ) = Γ");
    o
}

fn criterion_3() -> Outcome {
    let mut o = Outcome::new();
    let a = match analyze("first_class_chain.model") {
        Ok(a) => a,
        Err(e) => {
            o.expect(false, e);
            return o;
        }
    };
    let vars = &a.model.vars;
    let cons = &a.ledger.constraints;
    o.expect(cons.len() == 2, "two constraints");
    if cons.len() == 2 {
        o.expect_eq(&cons[0].expr, "py", vars, "primary");
        o.expect_eq(&cons[1].raw, "-px", vars, "secondary (raw)");
        o.expect_eq(&cons[1].expr, "px", vars, "secondary (stored, sign-normalized)");
        o.expect(cons[1].effective, "secondary effective");
        o.expect(
            cons.iter().all(|c| c.class == ConstraintClass::First),
            "both first class",
        );
    }
    o.expect(a.counts.quotient_dim == 0 && a.counts.dirac_original_dim == 0, "dims (0, 0)");
    o.expect(a.dirac_conjecture_holds(), "dirac_conjecture_holds");
    let k = &a.kernel;
    o.expect(k.deltas.len() == 1, "one Δ");
    if let Some(d) = k.deltas.first() {
        o.expect_eq(&d.eps[0], "0", vars, "Δ ε_x");
        o.expect_eq(&d.eps[1], "1", vars, "Δ ε_y");
        o.expect_eq(&d.beta[0], "1", vars, "Δ β_x");
        o.expect_eq(&d.beta[1], "0", vars, "Δ β_y");
    }
    if let Some(obs) = k.obstructions.first() {
        o.expect_eq(obs, "dx - y", vars, "Δ(E_L)");
    }
    all_checks_pass(&a, &mut o);
    o
}

fn criterion_4() -> Outcome {
    let mut o = Outcome::new();
    let a = match analyze("second_class_pair.model") {
        Ok(a) => a,
        Err(e) => {
            o.expect(false, e);
            return o;
        }
    };
    let vars = &a.model.vars;
    o.expect(a.primaries.len() == 2, "two primaries");
    if a.primaries.len() == 2 {
        o.expect_eq(&a.primaries[0], "px - y", vars, "primary 1");
        o.expect_eq(&a.primaries[1], "py", vars, "primary 2");
    }
    o.expect(
        a.ledger.constraints.iter().all(|c| c.class == ConstraintClass::Second),
        "both second class",
    );
    o.expect(a.ledger.constraints.len() == 2, "no secondaries");
    let cls = a.ledger.final_classification();
    let det_one = cls.and_then(|c| c.block_determinant.clone()) == Some(num::BigRational::from_integer(1.into()));
    o.expect(det_one, "bracket determinant 1 at sample");
    o.expect(cls.is_some_and(|c| c.second_class_count() % 2 == 0), "second-class count even");
    o.expect(a.kernel.deltas.is_empty(), "no Δ fields");
    let gammas: Vec<Vec<Expression>> = a.kernel.gammas.iter().map(|g| g.beta.clone()).collect();
    let zt = presym::symcore::linalg::Generic::new(vars.nvars(), &[], 0).expect("certification points");
    let r = presym::symcore::linalg::rank(&gammas, 2, &zt).unwrap_or(0);
    o.expect(r == 2, "Γ span the whole vertical space");
    o.expect(a.counts.quotient_dim == 2 && a.counts.dirac_original_dim == 2, "dims (2, 2)");
    all_checks_pass(&a, &mut o);
    o
}

fn criterion_5() -> Outcome {
    let mut o = Outcome::new();
    let a = match analyze("free_particle_2d.model") {
        Ok(a) => a,
        Err(e) => {
            o.expect(false, e);
            return o;
        }
    };
    o.expect(a.ledger.constraints.is_empty(), "empty ledger");
    o.expect(a.kernel.gammas.is_empty() && a.kernel.deltas.is_empty(), "empty kernel");
    o.expect(a.counts.quotient_dim == 4 && a.counts.dirac_original_dim == 4, "dims (4, 4)");
    let json = serialize_report(&build_report(&a, None), Format::Structured);
    o.expect(json.contains("\"constraints\": []"), "structured report has empty constraint list");
    all_checks_pass(&a, &mut o);
    o
}

fn random_rational_function(vars: &VariableTable, rng: &mut ChaCha8Rng) -> Expression {
    let num = random_phase_polynomial(vars, rng);
    let den = random_phase_polynomial(vars, rng);
    let nv = vars.nvars();
    let vel = Expression::var(nv, vars.qdot(rng.gen_range(0..vars.n())));
    let num = num + vel * Expression::int(nv, rng.gen_range(-3..=3));
    match num.checked_div(&den) {
        Ok(f) => f,
        Err(_) => num,
    }
}

/// `L = c/2 (ẋ - u)² + w ẏ - V` with random polynomials `u, w, V` in `(x, y)`.
fn random_singular_model(rng: &mut ChaCha8Rng) -> LagrangianModel {
    let vars = VariableTable::new(&["x", "y"], &[]).expect("valid names");
    let poly = |rng: &mut ChaCha8Rng| {
        let mut terms = Vec::new();
        for _ in 0..rng.gen_range(1..=3) {
            let c: i64 = rng.gen_range(-4..=4);
            let (i, j): (u32, u32) = (rng.gen_range(0..=2), rng.gen_range(0..=2));
            terms.push(format!("({c})*x^{i}*y^{j}"));
        }
        terms.join(" + ")
    };
    let c = rng.gen_range(1..=5);
    let text = format!(
        "({c})/2*(dx - ({}))^2 + ({})*dy - ({})",
        poly(rng),
        poly(rng),
        poly(rng)
    );
    let l = parse_expression(&text, &vars).expect("generated Lagrangian parses");
    LagrangianModel::new(vars, l, vec![], Hints::default()).expect("valid model")
}

fn criterion_6() -> Outcome {
    let mut o = Outcome::new();
    let vars3 = VariableTable::new(&["x", "y", "z"], &[]).expect("valid names");

    // Jacobi identity.
    let mut rng = ChaCha8Rng::seed_from_u64(6001);
    for case in 0..CASES {
        let f = random_phase_polynomial(&vars3, &mut rng);
        let g = random_phase_polynomial(&vars3, &mut rng);
        let h = random_phase_polynomial(&vars3, &mut rng);
        let pb = |a: &Expression, b: &Expression| poisson_bracket(a, b, &vars3);
        let jac = pb(&f, &pb(&g, &h)) + pb(&g, &pb(&h, &f)) + pb(&h, &pb(&f, &g));
        o.expect(jac.is_zero(), format!("Jacobi case {case}"));
    }

    // Leibniz rule.
    let mut rng = ChaCha8Rng::seed_from_u64(6002);
    for case in 0..CASES {
        let f = random_rational_function(&vars3, &mut rng);
        let g = random_rational_function(&vars3, &mut rng);
        let v = rng.gen_range(0..vars3.nvars());
        let lhs = (&f * &g).differentiate(v);
        let rhs = &f.differentiate(v) * &g + &f * &g.differentiate(v);
        o.expect(lhs == rhs, format!("Leibniz case {case}"));
    }

    // K identity, Γ and Δ on pullbacks, on the three constrained models.
    for (k, name) in ["worked_example.model", "first_class_chain.model", "second_class_pair.model"]
        .iter()
        .enumerate()
    {
        let a = match analyze(name) {
            Ok(a) => a,
            Err(e) => {
                o.expect(false, e);
                continue;
            }
        };
        let vars = &a.model.vars;
        let ld = &a.legendre;
        let mut rng = ChaCha8Rng::seed_from_u64(6100 + k as u64);
        for case in 0..CASES {
            let f = random_phase_polynomial(vars, &mut rng);
            let r = ld.k_identity_residual(&f, &a.hamiltonian, &a.primaries);
            o.expect(r.is_zero(), format!("{name}: K identity case {case}"));
            let pf = ld.pullback(&f);
            for (i, g) in a.kernel.gammas.iter().enumerate() {
                o.expect(apply_field(g, &pf, vars).is_zero(), format!("{name}: Γ{i}(FL* f) case {case}"));
            }
            for (i, (d, fcp)) in a.kernel.deltas.iter().zip(&a.kernel.first_class_primaries).enumerate() {
                let lhs = apply_field(d, &pf, vars);
                let rhs = ld.pullback(&poisson_bracket(&f, &fcp.phi1, vars));
                o.expect(lhs == rhs, format!("{name}: Δ{i}(FL* f) case {case}"));
            }
        }
    }

    // γ·W = 0 and span(γ) = Ker W on random singular Lagrangians.
    let mut rng = ChaCha8Rng::seed_from_u64(6200);
    for case in 0..CASES {
        let m = random_singular_model(&mut rng);
        let ld = match LegendreData::build(&m, case as u64) {
            Ok(ld) => ld,
            Err(e) => {
                o.expect(false, format!("random model {case}: {e}"));
                continue;
            }
        };
        let phi = match primary_constraints(&m, &ld) {
            Ok(p) => p,
            Err(e) => {
                o.expect(false, format!("random model {case}: {e}"));
                continue;
            }
        };
        for p in &phi {
            let gamma = ld.pulled_gradient(p);
            for j in 0..m.n() {
                let s: Expression = (0..m.n()).map(|i| &gamma[i] * &ld.hessian[i][j]).sum();
                o.expect(s.is_zero(), format!("γ·W case {case}"));
            }
        }
        o.expect(
            gradients_span_null_space(&ld, &phi, &m, case as u64).unwrap_or(false),
            format!("span equality case {case}"),
        );
        if let Ok(h) = CanonicalHamiltonian::build(&m, &ld, &phi) {
            let f = random_phase_polynomial(&m.vars, &mut rng);
            o.expect(
                ld.k_identity_residual(&f, &h, &phi).is_zero(),
                format!("K identity on random model {case}"),
            );
        } else {
            o.expect(false, format!("random model {case}: no canonical Hamiltonian"));
        }
    }
    o
}

fn criterion_7() -> Outcome {
    let mut o = Outcome::new();
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_presym"))
            .args(["analyze", "--format", "structured", "--seed", "7"])
            .arg(model_path("worked_example.model"))
            .output()
    };
    match (run(), run()) {
        (Ok(a), Ok(b)) => {
            o.expect(a.status.success() && b.status.success(), "both runs exit 0");
            o.expect(!a.stdout.is_empty(), "non-empty report");
            o.expect(a.stdout == b.stdout, "byte-identical structured reports");
        }
        (Err(e), _) | (_, Err(e)) => o.expect(false, format!("cannot run binary: {e}")),
    }
    o
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 7] = [
        ("worked example end-to-end", criterion_1),
        ("worked example kernel", criterion_2),
        ("first-class chain regression", criterion_3),
        ("second-class regression", criterion_4),
        ("regular Lagrangian control", criterion_5),
        ("randomized identity suites", criterion_6),
        ("determinism of analyze", criterion_7),
    ];
    let mut failed = 0;
    for (i, (title, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        if outcome.failures.is_empty() {
            println!("criterion {}: PASS  {} ({secs:.2}s)", i + 1, title);
        } else {
            failed += 1;
            println!("criterion {}: FAIL  {} ({secs:.2}s)", i + 1, title);
            for f in outcome.failures.iter().take(10) {
                println!("    {f}");
            }
            if outcome.failures.len() > 10 {
                println!("    ... {} more", outcome.failures.len() - 10);
            }
        }
    }
    println!("acceptance: {} passed, {} failed", criteria.len() - failed, failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
