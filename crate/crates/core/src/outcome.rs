use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Verdict of a check, with an optional witness and numeric evidence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metrics: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub components: Vec<CheckOutcome>,
}

impl CheckOutcome {
    pub fn pass(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed: true,
            detail: String::new(),
            witness: None,
            metrics: BTreeMap::new(),
            components: Vec::new(),
        }
    }

    pub fn fail(name: impl Into<String>, detail: impl Into<String>) -> Self {
        Self {
            passed: false,
            detail: detail.into(),
            ..Self::pass(name)
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    pub fn with_witness(mut self, witness: impl Into<String>) -> Self {
        self.witness = Some(witness.into());
        self
    }

    pub fn with_metric(mut self, key: impl Into<String>, value: f64) -> Self {
        self.metrics.insert(key.into(), value);
        self
    }

    pub fn metric(&self, key: &str) -> Option<f64> {
        self.metrics.get(key).copied()
    }

    /// Conjunction: passes iff every component passes. The first failing
    /// component's detail and witness are lifted to the top level.
    pub fn all(name: impl Into<String>, components: Vec<CheckOutcome>) -> Self {
        let mut out = Self::pass(name);
        if let Some(first) = components.iter().find(|c| !c.passed) {
            out.passed = false;
            out.detail = format!("{}: {}", first.name, first.detail);
            out.witness = first.witness.clone();
        }
        out.components = components;
        out
    }

    /// First failing component, searching depth-first.
    pub fn first_failure(&self) -> Option<&CheckOutcome> {
        if self.passed {
            return None;
        }
        self.components
            .iter()
            .find_map(|c| c.first_failure())
            .or(Some(self))
    }
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {}",
            self.name,
            if self.passed { "pass" } else { "FAIL" }
        )?;
        if !self.detail.is_empty() {
            write!(f, " ({})", self.detail)?;
        }
        if let Some(w) = &self.witness {
            write!(f, " [witness: {w}]")?;
        }
        Ok(())
    }
}
