//! Exact symbolic arithmetic over rational functions.

pub mod expr;
pub mod ideal;
pub mod linalg;
pub mod parse;
pub mod poly;
pub mod vars;

use std::collections::BTreeMap;

use thiserror::Error;

pub use expr::Expression;
pub use ideal::{
    effective_part, reduce_on_surface, sample_surface, vanishes_on_surface, ConstraintIdeal, Surface,
    SurfaceSample,
};
pub use parse::{parse_expression, parse_rational};
pub use vars::{VarKind, VariableTable};

#[derive(Clone, Debug, Error, PartialEq)]
pub enum SymError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("division by an identically zero expression")]
    DivisionByZero,
    #[error("invalid variable table: {0}")]
    InvalidTable(String),
    #[error("constraint generator is identically zero")]
    ZeroGenerator,
    #[error("a declared-nonvanishing expression cannot be a constraint generator")]
    NonvanishingGenerator,
    #[error("constraint surface is empty (a generator reduces to a nonzero constant)")]
    EmptySurface,
    #[error("no rational point found on the constraint surface within the retry budget; supply a `sample` hint")]
    Unsampleable,
    #[error("every sample point hits a zero of the denominator")]
    DenominatorVanishes,
    #[error("rank instability: a symbolically nonzero pivot vanishes at every certification point")]
    RankInstability,
}

/// Partial derivative.
pub fn differentiate(e: &Expression, var: usize) -> Expression {
    e.differentiate(var)
}

/// Simultaneous substitution.
pub fn substitute(e: &Expression, bindings: &BTreeMap<usize, Expression>) -> Result<Expression, SymError> {
    e.substitute(bindings)
}

pub fn is_zero(e: &Expression) -> bool {
    e.is_zero()
}
