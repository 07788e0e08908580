use std::collections::HashMap;

use super::SymError;

/// Which family a registered variable belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    Configuration(usize),
    Velocity(usize),
    Momentum(usize),
    Auxiliary(usize),
}

/// Registered symbols of a model.
///
/// Layout is fixed: the `N` configuration variables come first, then their
/// velocities `d<q>`, then momenta `p<q>`, then auxiliary symbols. This order
/// is also the variable order of the monomial ordering.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VariableTable {
    n: usize,
    names: Vec<String>,
    index: HashMap<String, usize>,
}

pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl VariableTable {
    pub fn new<S: AsRef<str>>(config: &[S], aux: &[S]) -> Result<Self, SymError> {
        if config.is_empty() {
            return Err(SymError::InvalidTable("at least one configuration variable is required".into()));
        }
        let n = config.len();
        let mut names: Vec<String> = config.iter().map(|s| s.as_ref().to_string()).collect();
        names.extend(config.iter().map(|s| format!("d{}", s.as_ref())));
        names.extend(config.iter().map(|s| format!("p{}", s.as_ref())));
        names.extend(aux.iter().map(|s| s.as_ref().to_string()));
        let mut index = HashMap::new();
        for (i, name) in names.iter().enumerate() {
            if !is_identifier(name) {
                return Err(SymError::InvalidTable(format!("`{name}` is not a valid identifier")));
            }
            if index.insert(name.clone(), i).is_some() {
                return Err(SymError::InvalidTable(format!("duplicate variable name `{name}`")));
            }
        }
        Ok(VariableTable { n, names, index })
    }

    /// Same configuration variables with an extra auxiliary set.
    pub fn with_aux<S: AsRef<str>>(&self, aux: &[S]) -> Result<Self, SymError> {
        let config: Vec<&str> = self.names[..self.n].iter().map(String::as_str).collect();
        let mut all_aux: Vec<String> = self.names[3 * self.n..].to_vec();
        all_aux.extend(aux.iter().map(|s| s.as_ref().to_string()));
        VariableTable::new(&config, &all_aux.iter().map(String::as_str).collect::<Vec<_>>())
    }

    /// Number of configuration variables `N`.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nvars(&self) -> usize {
        self.names.len()
    }

    pub fn q(&self, i: usize) -> usize {
        debug_assert!(i < self.n);
        i
    }

    pub fn qdot(&self, i: usize) -> usize {
        debug_assert!(i < self.n);
        self.n + i
    }

    pub fn p(&self, i: usize) -> usize {
        debug_assert!(i < self.n);
        2 * self.n + i
    }

    pub fn name(&self, var: usize) -> &str {
        &self.names[var]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn config_names(&self) -> &[String] {
        &self.names[..self.n]
    }

    pub fn aux_names(&self) -> &[String] {
        &self.names[3 * self.n..]
    }

    pub fn lookup(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn kind(&self, var: usize) -> VarKind {
        let n = self.n;
        match var {
            v if v < n => VarKind::Configuration(v),
            v if v < 2 * n => VarKind::Velocity(v - n),
            v if v < 3 * n => VarKind::Momentum(v - 2 * n),
            v => VarKind::Auxiliary(v - 3 * n),
        }
    }

    pub fn is_velocity(&self, var: usize) -> bool {
        matches!(self.kind(var), VarKind::Velocity(_))
    }

    pub fn is_momentum(&self, var: usize) -> bool {
        matches!(self.kind(var), VarKind::Momentum(_))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_names_follow_layout() {
        let t = VariableTable::new(&["x", "y", "z"], &[]).unwrap();
        assert_eq!(t.nvars(), 9);
        assert_eq!(t.name(t.qdot(1)), "dy");
        assert_eq!(t.name(t.p(2)), "pz");
        assert_eq!(t.kind(t.lookup("px").unwrap()), VarKind::Momentum(0));
    }

    #[test]
    fn collisions_are_rejected() {
        assert!(VariableTable::new(&["x", "dx"], &[]).is_err());
        assert!(VariableTable::new(&["x"], &["px"]).is_err());
        assert!(VariableTable::new(&["1x"], &[]).is_err());
    }
}
