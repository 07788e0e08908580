//! Model-file ingestion, pipeline orchestration, degree-of-freedom counting
//! and report serialization.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::dirac::{
    stabilize, structure_decompose, ConstraintClass, ConstraintLedger, DiracError, LedgerOptions, Provenance,
    StructureEntry, Termination,
};
use crate::kernel::{build_kernel, test_functions, Check, KernelBasis, TangentVectorField};
use crate::legendre::{
    gradients_span_null_space, primary_constraints, CanonicalHamiltonian, Hints, LagrangianModel, LegendreData,
    LegendreError,
};
use crate::symcore::{parse_expression, parse_rational, Expression, SymError, VariableTable};

/// A model-file problem, with the 1-based line it was found on.
#[derive(Clone, Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("cannot read model file: {0}")]
    Io(String),
    #[error("missing section [{0}]")]
    MissingSection(&'static str),
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
}

fn at(line: usize, message: impl Into<String>) -> ModelError {
    ModelError::Line {
        line,
        message: message.into(),
    }
}

/// Options stored in the `[options]` section.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FileOptions {
    pub max_levels: Option<usize>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub radical: Option<bool>,
}

#[derive(Clone, Debug)]
pub struct LoadedModel {
    pub model: LagrangianModel,
    pub lagrangian_text: String,
    pub options: FileOptions,
}

#[derive(PartialEq)]
enum Section {
    None,
    Variables,
    Nonzero,
    Lagrangian,
    Hints,
    Options,
}

fn sym_at(line: usize, e: SymError) -> ModelError {
    at(line, e.to_string())
}

/// Parses model-file text.
pub fn parse_model(text: &str) -> Result<LoadedModel, ModelError> {
    let mut section = Section::None;
    let mut seen_lagrangian = false;
    let mut seen_variables = false;
    let mut names: Vec<String> = Vec::new();
    let mut nonzero: Vec<(usize, String)> = Vec::new();
    let mut lagrangian: Vec<(usize, String)> = Vec::new();
    let mut hints: Vec<(usize, String)> = Vec::new();
    let mut options = FileOptions::default();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            section = match name.trim() {
                "variables" => {
                    if seen_variables {
                        return Err(at(line, "duplicate section [variables]"));
                    }
                    seen_variables = true;
                    Section::Variables
                }
                "nonzero" => Section::Nonzero,
                "lagrangian" => {
                    if seen_lagrangian {
                        return Err(at(line, "duplicate section [lagrangian]"));
                    }
                    seen_lagrangian = true;
                    Section::Lagrangian
                }
                "hints" => Section::Hints,
                "options" => Section::Options,
                other => return Err(at(line, format!("unknown section [{other}]"))),
            };
            continue;
        }
        match section {
            Section::None => return Err(at(line, "content before the first section header")),
            Section::Variables => names.extend(
                content
                    .split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|s| !s.is_empty())
                    .map(str::to_string),
            ),
            Section::Nonzero => nonzero.push((line, content.to_string())),
            Section::Lagrangian => lagrangian.push((line, content.to_string())),
            Section::Hints => hints.push((line, content.to_string())),
            Section::Options => parse_option(line, content, &mut options)?,
        }
    }
    if !seen_variables {
        return Err(ModelError::MissingSection("variables"));
    }
    if !seen_lagrangian {
        return Err(ModelError::MissingSection("lagrangian"));
    }
    if names.is_empty() {
        return Err(ModelError::Invalid("[variables] declares no configuration variables".into()));
    }
    let vars = VariableTable::new(&names, &[]).map_err(|e| ModelError::Invalid(e.to_string()))?;
    let Some(&(lline, _)) = lagrangian.first() else {
        return Err(ModelError::Invalid("[lagrangian] section is empty".into()));
    };
    let lagrangian_text = lagrangian.iter().map(|(_, s)| s.as_str()).collect::<Vec<_>>().join(" ");
    let l = parse_expression(&lagrangian_text, &vars).map_err(|e| sym_at(lline, e))?;
    let nz = nonzero
        .iter()
        .map(|(line, s)| parse_expression(s, &vars).map_err(|e| sym_at(*line, e)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut parsed_hints = Hints::default();
    for (line, h) in &hints {
        parse_hint(*line, h, &vars, &mut parsed_hints)?;
    }
    let model = LagrangianModel::new(vars, l, nz, parsed_hints).map_err(|e| at(lline, e.to_string()))?;
    Ok(LoadedModel {
        model,
        lagrangian_text,
        options,
    })
}

fn parse_option(line: usize, content: &str, options: &mut FileOptions) -> Result<(), ModelError> {
    let Some((key, value)) = content.split_once('=') else {
        return Err(at(line, "expected `key = value`"));
    };
    let (key, value) = (key.trim(), value.trim());
    let bad = || at(line, format!("invalid value `{value}` for option `{key}`"));
    match key {
        "max_levels" => options.max_levels = Some(value.parse().map_err(|_| bad())?),
        "samples" => options.samples = Some(value.parse().map_err(|_| bad())?),
        "seed" => options.seed = Some(value.parse().map_err(|_| bad())?),
        "radical_mode" => options.radical = Some(value.parse().map_err(|_| bad())?),
        _ => return Err(at(line, format!("unknown option `{key}`"))),
    }
    Ok(())
}

fn parse_hint(line: usize, content: &str, vars: &VariableTable, hints: &mut Hints) -> Result<(), ModelError> {
    let (kind, rest) = content.split_once(char::is_whitespace).unwrap_or((content, ""));
    let rest = rest.trim();
    let lhs_rhs = || {
        rest.split_once('=')
            .map(|(a, b)| (a.trim(), b.trim()))
            .ok_or_else(|| at(line, "expected `<name> = <value>`"))
    };
    match kind {
        "velocity" => {
            let (name, expr) = lhs_rhs()?;
            let k = vars
                .lookup(name)
                .filter(|&v| vars.is_velocity(v))
                .ok_or_else(|| at(line, format!("`{name}` is not a velocity variable")))?
                - vars.n();
            let e = parse_expression(expr, vars).map_err(|e| sym_at(line, e))?;
            hints.velocities.push((k, e));
        }
        "primary" => {
            let e = parse_expression(rest, vars).map_err(|e| sym_at(line, e))?;
            hints.primaries.push(e);
        }
        "sample" => {
            let (name, value) = lhs_rhs()?;
            let v = vars
                .lookup(name)
                .ok_or_else(|| at(line, format!("unknown variable `{name}` in sample hint")))?;
            let r = parse_rational(value).ok_or_else(|| at(line, format!("`{value}` is not a rational number")))?;
            hints.sample.push((v, r));
        }
        other => return Err(at(line, format!("unknown hint `{other}`"))),
    }
    Ok(())
}

pub fn load_model(path: &Path) -> Result<LoadedModel, ModelError> {
    let text = std::fs::read_to_string(path).map_err(|e| ModelError::Io(format!("{}: {e}", path.display())))?;
    parse_model(&text)
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisOptions {
    pub max_levels: usize,
    pub samples: usize,
    pub seed: u64,
    pub radical: bool,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            max_levels: 10,
            samples: 10,
            seed: 0,
            radical: true,
        }
    }
}

impl AnalysisOptions {
    /// File options fill in whatever the caller left unset.
    pub fn resolve(cli: &FileOptions, file: &FileOptions) -> Self {
        let d = AnalysisOptions::default();
        AnalysisOptions {
            max_levels: cli.max_levels.or(file.max_levels).unwrap_or(d.max_levels),
            samples: cli.samples.or(file.samples).unwrap_or(d.samples),
            seed: cli.seed.or(file.seed).unwrap_or(d.seed),
            radical: cli.radical.or(file.radical).unwrap_or(d.radical),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Legendre,
    Stabilization,
    Kernel,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Legendre => "legendre",
            Stage::Stabilization => "stabilization",
            Stage::Kernel => "kernel",
        }
    }
}

/// Whether a failure is the model's fault or a limit of the engine.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FailureKind {
    Model,
    Limitation,
}

#[derive(Clone, Debug, Error, PartialEq)]
#[error("{} stage: {message}", stage.as_str())]
pub struct AnalysisError {
    pub stage: Stage,
    pub kind: FailureKind,
    pub message: String,
}

fn classify_sym(e: &SymError) -> FailureKind {
    match e {
        SymError::Unsampleable | SymError::RankInstability | SymError::DenominatorVanishes => FailureKind::Limitation,
        _ => FailureKind::Model,
    }
}

impl AnalysisError {
    fn sym(stage: Stage, e: SymError) -> Self {
        AnalysisError {
            stage,
            kind: classify_sym(&e),
            message: e.to_string(),
        }
    }

    fn legendre(e: LegendreError) -> Self {
        let kind = match &e {
            LegendreError::Sym(s) => classify_sym(s),
            LegendreError::MomentumInLagrangian(_)
            | LegendreError::VanishingDeclaration(_)
            | LegendreError::InvalidHint(_) => FailureKind::Model,
            LegendreError::Unsolvable { .. }
            | LegendreError::Inconsistent(_)
            | LegendreError::ResidualVelocity(_)
            | LegendreError::InconsistentMultipliers => FailureKind::Limitation,
        };
        AnalysisError {
            stage: Stage::Legendre,
            kind,
            message: e.to_string(),
        }
    }

    fn dirac(e: DiracError) -> Self {
        let kind = match &e {
            DiracError::Sym(s) => classify_sym(s),
            DiracError::EmptySurface(_) => FailureKind::Model,
            DiracError::MaxLevelsExceeded(_) => FailureKind::Limitation,
        };
        AnalysisError {
            stage: Stage::Stabilization,
            kind,
            message: e.to_string(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct DofCounts {
    pub quotient_dim: i64,
    pub dirac_original_dim: i64,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "P_f")]
    pub p_f: usize,
    #[serde(rename = "G")]
    pub g: usize,
}

/// Quotient dimension `2N - M - P_f` and Dirac-original dimension `2N - M - G`.
pub fn dof_counts(n: usize, ledger: &ConstraintLedger) -> DofCounts {
    let m = ledger.total();
    let p_f = ledger.final_first_class();
    let g = ledger.gauge_fixing_count();
    let two_n = 2 * n as i64;
    DofCounts {
        quotient_dim: two_n - m as i64 - p_f as i64,
        dirac_original_dim: two_n - m as i64 - g as i64,
        m,
        p_f,
        g,
    }
}

/// Everything the pipeline computed, in memory.
#[derive(Clone, Debug)]
pub struct Analysis {
    pub model: LagrangianModel,
    pub options: AnalysisOptions,
    pub legendre: LegendreData,
    pub primaries: Vec<Expression>,
    pub hamiltonian: CanonicalHamiltonian,
    pub ledger: ConstraintLedger,
    pub kernel: KernelBasis,
    pub structure: Vec<StructureEntry>,
    pub checks: Vec<Check>,
    pub counts: DofCounts,
}

impl Analysis {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn dirac_conjecture_holds(&self) -> bool {
        self.counts.quotient_dim == self.counts.dirac_original_dim
    }

    fn primary_tags(&self) -> Vec<ConstraintClass> {
        self.ledger.constraints.iter().filter(|c| c.level == 1).map(|c| c.class).collect()
    }

    /// All primaries are first class.
    pub fn type_ii(&self) -> bool {
        let tags = self.primary_tags();
        !tags.is_empty() && tags.iter().all(|t| *t == ConstraintClass::First)
    }

    /// Constraints exist and none is first class.
    pub fn all_second_class(&self) -> bool {
        self.counts.m > 0 && self.counts.p_f == 0
    }

    pub fn odd_dof(&self) -> bool {
        self.counts.dirac_original_dim % 2 != 0
    }
}

/// Runs Legendre analysis, stabilization, kernel construction and every
/// verification.
pub fn run_analysis(model: &LagrangianModel, options: &AnalysisOptions) -> Result<Analysis, AnalysisError> {
    let vars = &model.vars;
    let ld = LegendreData::build(model, options.seed).map_err(AnalysisError::legendre)?;
    let primaries = primary_constraints(model, &ld).map_err(AnalysisError::legendre)?;
    let hamiltonian = CanonicalHamiltonian::build(model, &ld, &primaries).map_err(AnalysisError::legendre)?;

    let mut checks = Vec::new();
    let energy_residual = ld.pullback(&hamiltonian.hamiltonian) - &ld.energy;
    checks.push(Check::exact("FL*(H_c) = E_L", &energy_residual, vars));
    for (k, phi) in primaries.iter().enumerate() {
        checks.push(Check::exact(format!("FL*(phi{}) = 0", k + 1), &ld.pullback(phi), vars));
    }
    let spans = gradients_span_null_space(&ld, &primaries, model, options.seed).map_err(AnalysisError::legendre)?;
    checks.push(Check::flag("span(gamma) = Ker W", spans, ""));
    let tests = test_functions(vars, &hamiltonian.hamiltonian, options.seed);
    let worst = tests
        .iter()
        .map(|f| ld.k_identity_residual(f, &hamiltonian, &primaries))
        .find(|r| !r.is_zero())
        .unwrap_or_else(|| Expression::zero(vars.nvars()));
    checks.push(Check::exact("K f = FL*({f, H_c}) + v FL*({f, phi})", &worst, vars));

    let ledger_options = LedgerOptions {
        radical: options.radical,
        samples: options.samples,
        seed: options.seed,
        sample_hint: model.hints.sample.clone(),
    };
    let mut ledger = ConstraintLedger::new(vars.clone(), &primaries, &model.nonvanishing, ledger_options);
    stabilize(&mut ledger, &hamiltonian.hamiltonian, options.max_levels).map_err(AnalysisError::dirac)?;

    let surface = ledger
        .surface(ledger.top_level())
        .map_err(|e| AnalysisError::sym(Stage::Stabilization, e))?;
    let exprs = ledger.exprs();
    let first_class: Vec<usize> = (0..exprs.len())
        .filter(|&i| ledger.constraints[i].class == ConstraintClass::First)
        .collect();
    let structure = structure_decompose(&first_class, &exprs, &surface, vars)
        .map_err(|e| AnalysisError::sym(Stage::Stabilization, e))?;
    if let Some(cls) = ledger.final_classification() {
        checks.push(Check::flag("final first-class closure on M_f", cls.closure_holds, ""));
        checks.push(Check::flag(
            "second-class count even",
            cls.second_class_count() % 2 == 0,
            format!("{}", cls.second_class_count()),
        ));
        if let Some(det) = &cls.block_determinant {
            checks.push(Check::flag(
                "second-class block nonsingular at sample",
                *det != num::BigRational::from_integer(0.into()),
                det.to_string(),
            ));
        }
    }
    for (k, c) in ledger.constraints.iter().enumerate().filter(|(_, c)| c.level > 1) {
        let covered = surface.vanishes(&c.raw).map_err(|e| AnalysisError::sym(Stage::Stabilization, e))?;
        checks.push(Check::flag(format!("raw constraint {} vanishes on M_f", k + 1), covered, c.raw.render(vars)));
    }
    for s in &structure {
        checks.push(Check::flag(
            format!("{{phi{}, phi{}}} vanishes on M_f", s.left + 1, s.right + 1),
            s.remainder_vanishes_on_surface,
            s.remainder.render(vars),
        ));
    }

    let kernel = build_kernel(model, &ld, &hamiltonian, &ledger, options.seed)
        .map_err(|e| AnalysisError::sym(Stage::Kernel, e))?;
    checks.extend(kernel.checks.iter().cloned());
    let counts = dof_counts(model.n(), &ledger);
    checks.push(Check::flag("quotient dim even", counts.quotient_dim % 2 == 0, counts.quotient_dim.to_string()));
    checks.push(Check::flag(
        "quotient dim <= Dirac-original dim",
        counts.quotient_dim <= counts.dirac_original_dim,
        "",
    ));

    Ok(Analysis {
        model: model.clone(),
        options: options.clone(),
        legendre: ld,
        primaries,
        hamiltonian,
        ledger,
        kernel,
        structure,
        checks,
        counts,
    })
}

// ---------------------------------------------------------------------------
// Structured report

#[derive(Clone, Debug, Serialize)]
pub struct ReductionReport {
    pub variables: Vec<String>,
    pub nonzero: Vec<String>,
    pub lagrangian: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub hessian_rank: usize,
    #[serde(rename = "P")]
    pub p: usize,
    pub momenta: Vec<String>,
    pub velocity_solutions: Vec<VelocityEntry>,
    pub primary_constraints: Vec<String>,
    pub hamiltonian: String,
    pub primary_multipliers: Vec<String>,
    pub constraints: Vec<ConstraintEntry>,
    pub levels: Vec<LevelEntry>,
    pub terminated_at_level: Option<usize>,
    pub second_class_multipliers: Option<Vec<MultiplierEntry>>,
    pub kernel: KernelEntry,
    pub structure: Vec<StructureReport>,
    pub verification: Vec<CheckEntry>,
    pub counts: DofCounts,
    pub quotient_dim: i64,
    pub dirac_original_dim: i64,
    pub flags: Flags,
}

#[derive(Clone, Debug, Serialize)]
pub struct VelocityEntry {
    pub velocity: String,
    pub solution: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConstraintEntry {
    pub index: usize,
    pub expression: String,
    pub raw: String,
    pub level: usize,
    pub class: &'static str,
    pub effective: bool,
    pub effectivization_unresolved: bool,
    pub provenance: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelEntry {
    pub level: usize,
    pub constraints: usize,
    pub bracket_rank: usize,
    pub first_class_combinations: Vec<Vec<String>>,
    pub tags: Vec<&'static str>,
    pub second_class_block: Vec<usize>,
    pub block_determinant: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MultiplierEntry {
    pub constraint: usize,
    pub value: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct FieldEntry {
    pub name: String,
    pub eps: Vec<String>,
    pub beta: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CommutatorEntry {
    pub bracket: String,
    pub eps: Vec<String>,
    pub beta: Vec<String>,
    pub coefficients: Option<Vec<String>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct KernelEntry {
    pub gamma: Vec<FieldEntry>,
    pub delta: Vec<FieldEntry>,
    pub energy_obstruction: Vec<String>,
    pub commutators: Vec<CommutatorEntry>,
    pub general_element: Option<FieldEntry>,
    pub vertical_image: &'static str,
}

#[derive(Clone, Debug, Serialize)]
pub struct StructureReport {
    pub bracket: String,
    pub value: String,
    pub linear: Vec<String>,
    pub quadratic: Vec<String>,
    pub remainder: String,
    pub decomposable: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckEntry {
    pub name: String,
    pub passed: bool,
    pub residual: String,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Flags {
    pub dirac_conjecture_holds: bool,
    pub type_ii: bool,
    pub all_second_class: bool,
    pub odd_dof: bool,
    /// Some constraint stayed ineffective after taking its squarefree part.
    pub effectivization_unresolved: bool,
    pub all_verifications_passed: bool,
}

fn render_all(es: &[Expression], vars: &VariableTable) -> Vec<String> {
    es.iter().map(|e| e.render(vars)).collect()
}

fn field_entry(name: &str, f: &TangentVectorField, vars: &VariableTable) -> FieldEntry {
    FieldEntry {
        name: name.to_string(),
        eps: render_all(&f.eps, vars),
        beta: render_all(&f.beta, vars),
    }
}

/// `λ^k Δ_k + η^μ Γ_μ` with the span coefficients as auxiliary symbols.
fn general_element(a: &Analysis) -> Option<FieldEntry> {
    let k = &a.kernel;
    if k.gammas.is_empty() {
        return None;
    }
    let lambdas: Vec<String> = (1..=k.deltas.len()).map(|i| format!("lambda{i}")).collect();
    let etas: Vec<String> = (1..=k.gammas.len()).map(|i| format!("eta{i}")).collect();
    let aux: Vec<String> = lambdas.iter().chain(&etas).cloned().collect();
    let table = a.model.vars.with_aux(&aux).ok()?;
    let nv = table.nvars();
    let n = a.model.n();
    let mut eps = vec![Expression::zero(nv); n];
    let mut beta = vec![Expression::zero(nv); n];
    let fields = k.deltas.iter().chain(&k.gammas);
    for (name, f) in aux.iter().zip(fields) {
        let c = Expression::var(nv, table.lookup(name)?);
        for i in 0..n {
            eps[i] = &eps[i] + &(&c * &f.eps[i].extend_vars(nv));
            beta[i] = &beta[i] + &(&c * &f.beta[i].extend_vars(nv));
        }
    }
    Some(FieldEntry {
        name: "general".into(),
        eps: render_all(&eps, &table),
        beta: render_all(&beta, &table),
    })
}

pub fn build_report(a: &Analysis, lagrangian_text: Option<&str>) -> ReductionReport {
    let vars = &a.model.vars;
    let ld = &a.legendre;
    let n = a.model.n();
    let velocity_solutions = (0..n)
        .map(|k| VelocityEntry {
            velocity: vars.name(vars.qdot(k)).to_string(),
            solution: ld.velocities.solved.iter().find(|(j, _)| *j == k).map(|(_, e)| e.render(vars)),
        })
        .collect();
    let constraints = a
        .ledger
        .constraints
        .iter()
        .enumerate()
        .map(|(i, c)| ConstraintEntry {
            index: i + 1,
            expression: c.expr.render(vars),
            raw: c.raw.render(vars),
            level: c.level,
            class: c.class.as_str(),
            effective: c.effective,
            effectivization_unresolved: c.effectivization_unresolved,
            provenance: match &c.provenance {
                Provenance::Primary => "primary".to_string(),
                Provenance::Stabilization { combination } => {
                    let terms: Vec<String> = combination
                        .iter()
                        .map(|(j, k)| {
                            if k.is_constant() && k.constant_value() == Some(num::BigRational::from_integer(1.into())) {
                                format!("phi{}", j + 1)
                            } else {
                                format!("({})*phi{}", k.render(vars), j + 1)
                            }
                        })
                        .collect();
                    format!("{{{}, H_c}}", terms.join(" + "))
                }
            },
        })
        .collect();
    let levels = a
        .ledger
        .snapshots
        .values()
        .map(|s| LevelEntry {
            level: s.level,
            constraints: s.tags.len(),
            bracket_rank: s.rank,
            first_class_combinations: s.first_class.iter().map(|v| render_all(v, vars)).collect(),
            tags: s.tags.iter().map(|t| t.as_str()).collect(),
            second_class_block: s.second_class_block.iter().map(|i| i + 1).collect(),
            block_determinant: s.block_determinant.as_ref().map(ToString::to_string),
        })
        .collect();
    let terminated_at_level = match a.ledger.termination {
        Termination::Stable { level } => Some(level),
        Termination::Pending => None,
    };
    let second_class_multipliers = a.ledger.multipliers.values.as_ref().map(|vals| {
        a.ledger
            .multipliers
            .primaries
            .iter()
            .zip(vals)
            .map(|(i, v)| MultiplierEntry {
                constraint: i + 1,
                value: v.render(vars),
            })
            .collect()
    });
    let k = &a.kernel;
    let vertical_image = if k.gammas.is_empty() {
        "none"
    } else if k.deltas.is_empty() {
        "empty"
    } else if k.deltas.len() == k.gammas.len() {
        "equals Ver(K)"
    } else {
        "proper subspace of Ver(K)"
    };
    let kernel = KernelEntry {
        gamma: k
            .gammas
            .iter()
            .enumerate()
            .map(|(i, g)| field_entry(&format!("Gamma{}", i + 1), g, vars))
            .collect(),
        delta: k
            .deltas
            .iter()
            .enumerate()
            .map(|(i, d)| field_entry(&format!("Delta{}", i + 1), d, vars))
            .collect(),
        energy_obstruction: render_all(&k.obstructions, vars),
        commutators: k
            .commutators
            .iter()
            .map(|c| CommutatorEntry {
                bracket: format!("[{}, {}]", c.left, c.right),
                eps: render_all(&c.field.eps, vars),
                beta: render_all(&c.field.beta, vars),
                coefficients: c.coefficients.as_ref().map(|v| render_all(v, vars)),
            })
            .collect(),
        general_element: general_element(a),
        vertical_image,
    };
    let structure = a
        .structure
        .iter()
        .map(|s| StructureReport {
            bracket: format!("{{phi{}, phi{}}}", s.left + 1, s.right + 1),
            value: s.bracket.render(vars),
            linear: render_all(&s.linear, vars),
            quadratic: s
                .quadratic
                .iter()
                .map(|(i, j, c)| format!("({})*phi{}*phi{}", c.render(vars), i + 1, j + 1))
                .collect(),
            remainder: s.remainder.render(vars),
            decomposable: s.decomposable,
        })
        .collect();
    ReductionReport {
        variables: vars.config_names().to_vec(),
        nonzero: render_all(&a.model.nonvanishing, vars),
        lagrangian: lagrangian_text.map_or_else(|| a.model.lagrangian.render(vars), str::to_string),
        n,
        hessian_rank: ld.rank,
        p: ld.primary_count(),
        momenta: render_all(&ld.momenta, vars),
        velocity_solutions,
        primary_constraints: render_all(&a.primaries, vars),
        hamiltonian: a.hamiltonian.hamiltonian.render(vars),
        primary_multipliers: render_all(&a.hamiltonian.multipliers, vars),
        constraints,
        levels,
        terminated_at_level,
        second_class_multipliers,
        kernel,
        structure,
        verification: a
            .checks
            .iter()
            .map(|c| CheckEntry {
                name: c.name.clone(),
                passed: c.passed,
                residual: c.residual.clone(),
            })
            .collect(),
        counts: a.counts,
        quotient_dim: a.counts.quotient_dim,
        dirac_original_dim: a.counts.dirac_original_dim,
        flags: Flags {
            dirac_conjecture_holds: a.dirac_conjecture_holds(),
            type_ii: a.type_ii(),
            all_second_class: a.all_second_class(),
            odd_dof: a.odd_dof(),
            effectivization_unresolved: a.ledger.constraints.iter().any(|c| c.effectivization_unresolved),
            all_verifications_passed: a.all_passed(),
        },
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Human,
    Structured,
}

pub fn serialize_report(r: &ReductionReport, format: Format) -> String {
    match format {
        Format::Structured => {
            let mut s = serde_json::to_string_pretty(r).expect("report is serializable");
            s.push('\n');
            s
        }
        Format::Human => render_human(r),
    }
}

fn render_human(r: &ReductionReport) -> String {
    let mut o = String::new();
    let _ = writeln!(o, "Model");
    let _ = writeln!(o, "  variables   {}", r.variables.join(", "));
    if !r.nonzero.is_empty() {
        let _ = writeln!(o, "  nonzero     {}", r.nonzero.join(", "));
    }
    let _ = writeln!(o, "  L           {}", r.lagrangian);
    let _ = writeln!(o);
    let _ = writeln!(o, "Legendre map");
    let _ = writeln!(o, "  N = {}, rank W = {}, P = {}", r.n, r.hessian_rank, r.p);
    for (v, p) in r.velocity_solutions.iter().zip(&r.momenta) {
        let sol = v.solution.as_deref().unwrap_or("(unsolved)");
        let _ = writeln!(o, "  p_hat[{}] = {:<24} {} = {}", v.velocity, p, v.velocity, sol);
    }
    let _ = writeln!(o, "  H_c = {}", r.hamiltonian);
    for (i, (phi, v)) in r.primary_constraints.iter().zip(&r.primary_multipliers).enumerate() {
        let _ = writeln!(o, "  phi{} = {}   (v = {})", i + 1, phi, v);
    }
    let _ = writeln!(o);
    let _ = writeln!(o, "Constraints");
    if r.constraints.is_empty() {
        let _ = writeln!(o, "  (none)");
    } else {
        let _ = writeln!(
            o,
            "  {:<4} {:<6} {:<13} {:<10} {:<20} {:<20} {}",
            "#", "level", "class", "effective", "expression", "raw", "provenance"
        );
        for c in &r.constraints {
            let _ = writeln!(
                o,
                "  {:<4} {:<6} {:<13} {:<10} {:<20} {:<20} {}",
                c.index,
                c.level,
                c.class,
                if c.effective { "yes" } else { "no" },
                c.expression,
                c.raw,
                c.provenance
            );
        }
    }
    for l in &r.levels {
        let _ = writeln!(
            o,
            "  level {}: {} constraints, bracket rank {}, first-class combinations {:?}",
            l.level, l.constraints, l.bracket_rank, l.first_class_combinations
        );
    }
    if let Some(level) = r.terminated_at_level {
        let _ = writeln!(o, "  stabilization terminated at level {level}");
    }
    if let Some(ms) = &r.second_class_multipliers {
        for m in ms {
            let _ = writeln!(o, "  multiplier of phi{} = {}", m.constraint, m.value);
        }
    }
    let _ = writeln!(o);
    o.push_str(&render_kernel_human(&r.kernel));
    if !r.structure.is_empty() {
        let _ = writeln!(o);
        let _ = writeln!(o, "Structure functions");
        for s in &r.structure {
            let _ = writeln!(
                o,
                "  {} = {}   linear [{}]  quadratic [{}]  remainder {}",
                s.bracket,
                s.value,
                s.linear.join(", "),
                s.quadratic.join(", "),
                s.remainder
            );
        }
    }
    let _ = writeln!(o);
    o.push_str(&render_checks_human(&r.verification));
    let _ = writeln!(o);
    let _ = writeln!(o, "Counting");
    let c = &r.counts;
    let _ = writeln!(o, "  M = {}, P_f = {}, G = {}", c.m, c.p_f, c.g);
    let _ = writeln!(o, "  quotient dim         = {}", r.quotient_dim);
    let _ = writeln!(o, "  Dirac-original dim   = {}", r.dirac_original_dim);
    let f = &r.flags;
    let _ = writeln!(o, "  dirac_conjecture_holds = {}", f.dirac_conjecture_holds);
    let _ = writeln!(o, "  type_ii                = {}", f.type_ii);
    let _ = writeln!(o, "  all_second_class       = {}", f.all_second_class);
    let _ = writeln!(o, "  odd_dof                = {}", f.odd_dof);
    if f.effectivization_unresolved {
        let _ = writeln!(o, "  effectivization_unresolved = true (some constraint is still ineffective)");
    }
    o
}

pub fn render_kernel_human(k: &KernelEntry) -> String {
    let mut o = String::new();
    let _ = writeln!(o, "Kernel of omega_L");
    if k.gamma.is_empty() && k.delta.is_empty() {
        let _ = writeln!(o, "  (trivial)");
    }
    for f in k.gamma.iter().chain(&k.delta) {
        let _ = writeln!(o, "  {:<8} eps = ({})  beta = ({})", f.name, f.eps.join(", "), f.beta.join(", "));
    }
    for (i, e) in k.energy_obstruction.iter().enumerate() {
        let _ = writeln!(o, "  Delta{}(E_L) = {}", i + 1, e);
    }
    for c in &k.commutators {
        let coeffs = c
            .coefficients
            .as_ref()
            .map_or_else(|| "not in span".to_string(), |v| format!("coefficients ({})", v.join(", ")));
        let _ = writeln!(o, "  {} = eps ({}) beta ({}); {}", c.bracket, c.eps.join(", "), c.beta.join(", "), coeffs);
    }
    if let Some(g) = &k.general_element {
        let _ = writeln!(o, "  general element: eps = ({})  beta = ({})", g.eps.join(", "), g.beta.join(", "));
    }
    let _ = writeln!(o, "  S(K) vs Ver(K): {}", k.vertical_image);
    o
}

pub fn render_checks_human(checks: &[CheckEntry]) -> String {
    let mut o = String::new();
    let _ = writeln!(o, "Verification");
    for c in checks {
        let status = if c.passed { "pass" } else { "FAIL" };
        if c.passed || c.residual.is_empty() {
            let _ = writeln!(o, "  [{status}] {}", c.name);
        } else {
            let _ = writeln!(o, "  [{status}] {}   residual: {}", c.name, c.residual);
        }
    }
    o
}

/// Exit codes of the command-line tool.
pub mod exit {
    pub const OK: i32 = 0;
    pub const VERIFICATION_FAILED: i32 = 2;
    pub const MODEL_ERROR: i32 = 3;
    pub const LIMITATION: i32 = 4;
}

pub fn exit_code(kind: FailureKind) -> i32 {
    match kind {
        FailureKind::Model => exit::MODEL_ERROR,
        FailureKind::Limitation => exit::LIMITATION,
    }
}

/// Exit code of a completed analysis: 0 when every check passed, else 2.
pub fn verification_exit_code(checks: &[Check]) -> i32 {
    if checks.iter().all(|c| c.passed) {
        exit::OK
    } else {
        exit::VERIFICATION_FAILED
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const WORKED: &str = "\
# worked example
[variables]
x y z
[nonzero]
z
[lagrangian]
(1/2)*dx^2 + dy^2/(2*z)
";

    #[test]
    fn a_failed_check_yields_exit_code_two() {
        let lm = parse_model(WORKED).unwrap();
        let a = run_analysis(&lm.model, &AnalysisOptions::default()).unwrap();
        assert_eq!(verification_exit_code(&a.checks), exit::OK);
        let mut checks = a.checks.clone();
        checks[0].passed = false;
        assert_eq!(verification_exit_code(&checks), exit::VERIFICATION_FAILED);
    }

    #[test]
    fn loads_and_counts_the_worked_example() {
        let lm = parse_model(WORKED).unwrap();
        assert_eq!(lm.model.n(), 3);
        assert_eq!(lm.model.nonvanishing.len(), 1);
        let a = run_analysis(&lm.model, &AnalysisOptions::default()).unwrap();
        assert_eq!(
            a.counts,
            DofCounts {
                quotient_dim: 2,
                dirac_original_dim: 3,
                m: 2,
                p_f: 2,
                g: 1
            }
        );
        assert!(!a.dirac_conjecture_holds());
        assert!(a.odd_dof());
        for c in &a.checks {
            assert!(c.passed, "{} failed: {}", c.name, c.residual);
        }
        let json = serialize_report(&build_report(&a, Some(&lm.lagrangian_text)), Format::Structured);
        assert!(json.contains("\"quotient_dim\": 2"));
        assert!(json.contains("\"dirac_original_dim\": 3"));
    }

    #[test]
    fn model_file_errors() {
        assert_eq!(parse_model("[variables]\nx\n").unwrap_err(), ModelError::MissingSection("lagrangian"));
        match parse_model("[variables]\nx\n[lagrangian]\ndx^2\n[hints]\nsample w = 1\n") {
            Err(ModelError::Line { line, message }) => {
                assert_eq!(line, 6);
                assert!(message.contains('w'));
            }
            other => panic!("unexpected {other:?}"),
        }
        match parse_model("[variables]\nx\n[lagrangian]\ndx +\n") {
            Err(ModelError::Line { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn regular_free_particle_counts() {
        let lm = parse_model("[variables]\nx\n[lagrangian]\ndx^2/2\n").unwrap();
        let a = run_analysis(&lm.model, &AnalysisOptions::default()).unwrap();
        assert_eq!(
            a.counts,
            DofCounts {
                quotient_dim: 2,
                dirac_original_dim: 2,
                m: 0,
                p_f: 0,
                g: 0
            }
        );
        let json = serialize_report(&build_report(&a, None), Format::Structured);
        assert!(json.contains("\"constraints\": []"));
    }

    #[test]
    fn options_resolution_prefers_cli() {
        let cli = FileOptions {
            seed: Some(5),
            ..Default::default()
        };
        let file = FileOptions {
            seed: Some(9),
            samples: Some(3),
            ..Default::default()
        };
        let o = AnalysisOptions::resolve(&cli, &file);
        assert_eq!((o.seed, o.samples, o.max_levels, o.radical), (5, 3, 10, true));
    }
}
