//! Discrete structural causal models.
//!
//! An [`Scm`] couples an explicit joint distribution over exogenous
//! variables with one structural table per endogenous variable. Everything
//! downstream — counterfactuals, effect definitions, identification
//! formulas — is grounded in exact enumeration of the exogenous space, so
//! models are restricted to finite domains and the exogenous support is
//! capped at 10^7 tuples.
//!
//! Models are immutable once built; construction goes through
//! [`ScmBuilder`], which reports every invariant violation with a location
//! instead of stopping at the first.

mod dataset;
mod dist;
mod surgery;

pub use dataset::{Dataset, DatasetError, RegimeDecl};
pub use dist::Distribution;
pub use surgery::{PathSubgraph, SurgeredModel};

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::Serialize;
use thiserror::Error;

use crate::graph::{CausalGraph, GraphError, VariableId};
use crate::Real;

/// Exogenous-support ceiling for exact enumeration.
pub const UNIT_CAP: usize = 10_000_000;

/// A finite, ordered domain with a numeric coding.
///
/// Codes default to the label's ordinal position; effect magnitudes are
/// differences of codes, so models with non-ordinal numeric structure
/// (e.g. a domain `{0, 2, 5}`) should set codes explicitly.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec<T> {
    labels: Vec<String>,
    codes: Vec<T>,
    index: HashMap<String, usize>,
}

impl<T: Real> DomainSpec<T> {
    pub fn new(labels: Vec<String>) -> Result<Self, String> {
        let codes = (0..labels.len()).map(|i| T::of(i as f64)).collect();
        Self::with_codes(labels, codes)
    }

    pub fn with_codes(labels: Vec<String>, codes: Vec<T>) -> Result<Self, String> {
        if labels.is_empty() {
            return Err("domain must have at least one value".to_string());
        }
        if codes.len() != labels.len() {
            return Err(format!(
                "domain has {} values but {} numeric codes",
                labels.len(),
                codes.len()
            ));
        }
        let mut index = HashMap::new();
        for (i, label) in labels.iter().enumerate() {
            if label.is_empty()
                || !label.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
            {
                return Err(format!(
                    "domain value {label:?} is not a token of letters, digits, or underscore"
                ));
            }
            if index.insert(label.clone(), i).is_some() {
                return Err(format!("domain value {label:?} appears twice"));
            }
        }
        for (label, code) in labels.iter().zip(&codes) {
            if !code.is_finite() {
                return Err(format!("numeric code for {label:?} is not finite"));
            }
        }
        Ok(DomainSpec {
            labels,
            codes,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, ix: usize) -> &str {
        &self.labels[ix]
    }

    pub fn code(&self, ix: usize) -> T {
        self.codes[ix]
    }

    pub fn codes(&self) -> &[T] {
        &self.codes
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub(crate) fn has_default_codes(&self) -> bool {
        self.codes
            .iter()
            .enumerate()
            .all(|(i, c)| *c == T::of(i as f64))
    }
}

/// Mixed-radix strides with the first position most significant, so that
/// scanning the flat index space visits tuples in lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Radix {
    sizes: Vec<usize>,
    strides: Vec<usize>,
    len: usize,
}

impl Radix {
    pub(crate) fn new(sizes: Vec<usize>) -> Radix {
        let mut strides = vec![1usize; sizes.len()];
        for i in (0..sizes.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * sizes[i + 1];
        }
        let len = sizes.iter().product::<usize>().max(1);
        Radix {
            sizes,
            strides,
            len,
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.len
    }

    pub(crate) fn arity(&self) -> usize {
        self.sizes.len()
    }

    pub(crate) fn size(&self, pos: usize) -> usize {
        self.sizes[pos]
    }

    pub(crate) fn index(&self, values: &[usize]) -> usize {
        debug_assert_eq!(values.len(), self.sizes.len());
        values
            .iter()
            .zip(&self.strides)
            .map(|(v, s)| v * s)
            .sum()
    }

    pub(crate) fn decode(&self, mut ix: usize, out: &mut Vec<usize>) {
        out.clear();
        for (&size, &stride) in self.sizes.iter().zip(&self.strides) {
            let _ = size;
            out.push(ix / stride);
            ix %= stride;
        }
    }
}

/// The joint distribution over exogenous variables, stored densely in
/// lexicographic tuple order.
#[derive(Debug, Clone)]
pub struct ExogenousSpace<T> {
    vars: Vec<VariableId>,
    domains: Vec<DomainSpec<T>>,
    radix: Radix,
    joint: Vec<T>,
    factorizes: bool,
}

impl<T: Real> ExogenousSpace<T> {
    fn new(
        vars: Vec<VariableId>,
        domains: Vec<DomainSpec<T>>,
        joint: Vec<T>,
    ) -> Result<Self, String> {
        let radix = Radix::new(domains.iter().map(|d| d.len()).collect());
        if radix.len() > UNIT_CAP {
            return Err(format!(
                "exogenous support has {} tuples, above the cap of {UNIT_CAP}",
                radix.len()
            ));
        }
        debug_assert_eq!(joint.len(), radix.len());
        let mut total = T::zero();
        for &p in &joint {
            if !(p >= T::zero()) || !p.is_finite() {
                return Err("exogenous probabilities must be finite and nonnegative".to_string());
            }
            total = total + p;
        }
        if (total - T::one()).abs() > T::mass_tolerance() {
            return Err(format!("exogenous probability mass {total} does not sum to 1"));
        }
        let factorizes = Self::check_factorization(&radix, &joint);
        Ok(ExogenousSpace {
            vars,
            domains,
            radix,
            joint,
            factorizes,
        })
    }

    /// True iff the joint equals the product of its per-variable marginals.
    fn check_factorization(radix: &Radix, joint: &[T]) -> bool {
        if radix.arity() <= 1 {
            return true;
        }
        let mut marginals: Vec<Vec<T>> = (0..radix.arity())
            .map(|pos| vec![T::zero(); radix.size(pos)])
            .collect();
        let mut tuple = Vec::new();
        for (ix, &p) in joint.iter().enumerate() {
            radix.decode(ix, &mut tuple);
            for (pos, &val) in tuple.iter().enumerate() {
                marginals[pos][val] = marginals[pos][val] + p;
            }
        }
        for (ix, &p) in joint.iter().enumerate() {
            radix.decode(ix, &mut tuple);
            let mut prod = T::one();
            for (pos, &val) in tuple.iter().enumerate() {
                prod = prod * marginals[pos][val];
            }
            if (prod - p).abs() > T::mass_tolerance() {
                return false;
            }
        }
        true
    }

    pub fn variables(&self) -> &[VariableId] {
        &self.vars
    }

    pub fn domain(&self, pos: usize) -> &DomainSpec<T> {
        &self.domains[pos]
    }
}

/// How the exogenous distribution is declared in a builder.
#[derive(Debug, Clone, PartialEq)]
pub enum ExogenousSpec<T> {
    /// Mutually independent variables with explicit marginals.
    Independent(Vec<(VariableId, DomainSpec<T>, Vec<T>)>),
    /// An explicit joint table; keys are comma-joined label tuples in
    /// variable order, missing tuples carry probability zero.
    Joint {
        vars: Vec<(VariableId, DomainSpec<T>)>,
        table: BTreeMap<String, T>,
    },
}

impl<T: Real> ExogenousSpec<T> {
    pub fn empty() -> Self {
        ExogenousSpec::Independent(Vec::new())
    }
}

/// One endogenous variable's declaration: domain, parents, and the full
/// structural table keyed by comma-joined parent values (endogenous parents
/// first, then exogenous parents, in declared order).
#[derive(Debug, Clone, PartialEq)]
pub struct EquationSpec<T> {
    pub child: VariableId,
    pub domain: DomainSpec<T>,
    pub observable: bool,
    pub endo_parents: Vec<VariableId>,
    pub exo_parents: Vec<VariableId>,
    pub table: BTreeMap<String, String>,
}

impl<T: Real> EquationSpec<T> {
    /// Builds the table by evaluating `f` on every parent combination.
    /// Parent labels are passed endogenous-first, in declared order.
    pub fn from_fn(
        child: VariableId,
        domain: DomainSpec<T>,
        endo_parents: Vec<(VariableId, usize)>,
        exo_parents: Vec<(VariableId, usize)>,
        parent_labels: &dyn Fn(&VariableId, usize) -> String,
        f: &dyn Fn(&[&str]) -> String,
    ) -> Self {
        let sizes: Vec<usize> = endo_parents
            .iter()
            .chain(exo_parents.iter())
            .map(|(_, n)| *n)
            .collect();
        let vars: Vec<&VariableId> = endo_parents
            .iter()
            .chain(exo_parents.iter())
            .map(|(v, _)| v)
            .collect();
        let radix = Radix::new(sizes);
        let mut table = BTreeMap::new();
        let mut tuple = Vec::new();
        for ix in 0..radix.len() {
            radix.decode(ix, &mut tuple);
            let labels: Vec<String> = tuple
                .iter()
                .enumerate()
                .map(|(pos, &val)| parent_labels(vars[pos], val))
                .collect();
            let refs: Vec<&str> = labels.iter().map(|s| s.as_str()).collect();
            table.insert(labels.join(","), f(&refs));
        }
        EquationSpec {
            child,
            domain,
            observable: true,
            endo_parents: endo_parents.into_iter().map(|(v, _)| v).collect(),
            exo_parents: exo_parents.into_iter().map(|(v, _)| v).collect(),
            table,
        }
    }
}

/// A single invariant violation found during validation.
#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    /// Where the problem sits (variable or section name).
    pub location: String,
    pub message: String,
}

/// Every violation found in a model declaration; nonempty means the model
/// cannot be built.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, location: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation {
            location: location.into(),
            message: message.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("valid");
        }
        for violation in &self.violations {
            writeln!(f, "{}: {}", violation.location, violation.message)?;
        }
        Ok(())
    }
}

/// Declarative form of a model, checked and compiled by [`ScmBuilder::build`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScmBuilder<T> {
    pub name: String,
    pub exogenous: ExogenousSpec<T>,
    pub equations: Vec<EquationSpec<T>>,
}

#[derive(Debug, Error)]
pub enum ScmError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("unknown variable {0:?}")]
    UnknownVariable(String),
    #[error("{0:?} is not an endogenous variable")]
    NotEndogenous(String),
    #[error("{label:?} is not a value of {variable}'s domain")]
    UnknownLabel { variable: String, label: String },
    #[error("unit does not assign exogenous variable {0}")]
    IncompleteUnit(String),
    #[error("unit was built against a different model")]
    ForeignUnit,
    #[error("mediator set must be nonempty")]
    EmptyMediators,
    #[error("mediator set may not contain {0}")]
    MediatorsContain(String),
    #[error("edge {from} -> {to} is not an edge of the induced graph over endogenous variables")]
    EdgeNotInGraph { from: String, to: String },
    #[error("sample count must be at least 1")]
    EmptySample,
    #[error("conditioning event has zero probability: {0}")]
    ZeroMassEvent(String),
    #[error("model is invalid:\n{0}")]
    Invalid(ValidationReport),
}

#[derive(Debug, Clone)]
struct CompiledEquation {
    endo_parents: Vec<usize>,
    exo_parents: Vec<usize>,
    radix: Radix,
    outputs: Vec<u32>,
}

/// A validated, immutable structural causal model.
///
/// All evaluation entry points are pure functions of the model, the unit,
/// and the regime, and are safe to call concurrently.
#[derive(Debug, Clone)]
pub struct Scm<T> {
    name: String,
    exogenous: ExogenousSpace<T>,
    endo_vars: Vec<VariableId>,
    endo_domains: Vec<DomainSpec<T>>,
    endo_index: HashMap<String, usize>,
    observable: Vec<bool>,
    equations: Vec<CompiledEquation>,
    topo_order: Vec<usize>,
    graph: CausalGraph,
    markovian: bool,
}

/// A full exogenous assignment, i.e. one deterministic "world".
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Unit {
    values: Vec<usize>,
    model_tag: usize,
}

impl Unit {
    pub(crate) fn value_ixs(&self) -> &[usize] {
        &self.values
    }
}

/// A map from variable names to domain labels.
pub type Assignment = BTreeMap<VariableId, String>;

/// An intervention: endogenous variables forced to fixed values.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Regime {
    pub fixings: BTreeMap<VariableId, String>,
}

impl Regime {
    pub fn observational() -> Self {
        Regime::default()
    }

    pub fn fixing<I: IntoIterator<Item = (VariableId, String)>>(pairs: I) -> Self {
        Regime {
            fixings: pairs.into_iter().collect(),
        }
    }

    pub fn fix(mut self, var: VariableId, value: impl Into<String>) -> Self {
        self.fixings.insert(var, value.into());
        self
    }

    pub fn is_observational(&self) -> bool {
        self.fixings.is_empty()
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.fixings.is_empty() {
            return f.write_str("observational");
        }
        let parts: Vec<String> = self
            .fixings
            .iter()
            .map(|(v, val)| format!("{}={}", v.as_str(), val))
            .collect();
        write!(f, "do({})", parts.join(","))
    }
}

impl<T: Real> ScmBuilder<T> {
    /// Checks every declared invariant and reports all violations.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        self.check(&mut report);
        report
    }

    /// Validates and compiles the model.
    pub fn build(self) -> Result<Scm<T>, ScmError> {
        let report = self.validate();
        if !report.is_valid() {
            return Err(ScmError::Invalid(report));
        }
        Ok(self.compile())
    }

    fn exo_decls(&self) -> Vec<(VariableId, DomainSpec<T>)> {
        match &self.exogenous {
            ExogenousSpec::Independent(list) => list
                .iter()
                .map(|(v, d, _)| (v.clone(), d.clone()))
                .collect(),
            ExogenousSpec::Joint { vars, .. } => vars.clone(),
        }
    }

    fn check(&self, report: &mut ValidationReport) {
        let exo_decls = self.exo_decls();
        let mut seen: HashMap<&str, &'static str> = HashMap::new();
        for (var, _) in &exo_decls {
            if seen.insert(var.as_str(), "exogenous").is_some() {
                report.push(var.as_str(), "variable declared twice");
            }
        }
        for eq in &self.equations {
            if let Some(prev) = seen.insert(eq.child.as_str(), "endogenous") {
                report.push(
                    eq.child.as_str(),
                    format!("variable declared twice (already declared {prev})"),
                );
            }
        }

        // Exogenous distribution.
        match &self.exogenous {
            ExogenousSpec::Independent(list) => {
                for (var, domain, marginal) in list {
                    if marginal.len() != domain.len() {
                        report.push(
                            var.as_str(),
                            format!(
                                "marginal has {} entries for a domain of {}",
                                marginal.len(),
                                domain.len()
                            ),
                        );
                        continue;
                    }
                    let mut total = T::zero();
                    for &p in marginal {
                        if !(p >= T::zero()) || !p.is_finite() {
                            report.push(var.as_str(), "marginal probabilities must be finite and nonnegative");
                        }
                        total = total + p;
                    }
                    if (total - T::one()).abs() > T::mass_tolerance() {
                        report.push(
                            var.as_str(),
                            format!("exogenous mass {total} does not sum to 1"),
                        );
                    }
                }
                let support: usize = list.iter().map(|(_, d, _)| d.len()).product();
                if support > UNIT_CAP {
                    report.push(
                        "exogenous",
                        format!("exogenous support has {support} tuples, above the cap of {UNIT_CAP}"),
                    );
                }
            }
            ExogenousSpec::Joint { vars, table } => {
                let radix = Radix::new(vars.iter().map(|(_, d)| d.len()).collect());
                if radix.len() > UNIT_CAP {
                    report.push(
                        "exogenous",
                        format!(
                            "exogenous support has {} tuples, above the cap of {UNIT_CAP}",
                            radix.len()
                        ),
                    );
                    return;
                }
                let mut total = T::zero();
                for (key, &p) in table {
                    if self.parse_tuple(vars, key).is_none() {
                        report.push("exogenous.joint", format!("tuple {key:?} does not match the declared domains"));
                    }
                    if !(p >= T::zero()) || !p.is_finite() {
                        report.push("exogenous.joint", format!("probability of {key:?} must be finite and nonnegative"));
                    }
                    total = total + p;
                }
                if (total - T::one()).abs() > T::mass_tolerance() {
                    report.push(
                        "exogenous.joint",
                        format!("exogenous mass {total} does not sum to 1"),
                    );
                }
            }
        }

        // Equations: parent references and table totality.
        let endo_domains: HashMap<&str, &DomainSpec<T>> = self
            .equations
            .iter()
            .map(|eq| (eq.child.as_str(), &eq.domain))
            .collect();
        let exo_domains: HashMap<&str, &DomainSpec<T>> = exo_decls
            .iter()
            .map(|(v, d)| (v.as_str(), d))
            .collect();
        for eq in &self.equations {
            let loc = eq.child.as_str();
            let mut parent_domains: Vec<&DomainSpec<T>> = Vec::new();
            let mut refs_ok = true;
            for p in &eq.endo_parents {
                match endo_domains.get(p.as_str()) {
                    Some(d) => parent_domains.push(d),
                    None => {
                        refs_ok = false;
                        let hint = if exo_domains.contains_key(p.as_str()) {
                            " (declared exogenous; list it under exo_parents)"
                        } else {
                            ""
                        };
                        report.push(loc, format!("unknown endogenous parent {:?}{hint}", p.as_str()));
                    }
                }
            }
            for p in &eq.exo_parents {
                match exo_domains.get(p.as_str()) {
                    Some(d) => parent_domains.push(d),
                    None => {
                        refs_ok = false;
                        report.push(loc, format!("unknown exogenous parent {:?}", p.as_str()));
                    }
                }
            }
            if !refs_ok {
                continue;
            }
            let radix = Radix::new(parent_domains.iter().map(|d| d.len()).collect());
            let mut expected: BTreeSet<String> = BTreeSet::new();
            let mut tuple = Vec::new();
            for ix in 0..radix.len() {
                radix.decode(ix, &mut tuple);
                let key: Vec<&str> = tuple
                    .iter()
                    .enumerate()
                    .map(|(pos, &val)| parent_domains[pos].label(val))
                    .collect();
                expected.insert(key.join(","));
            }
            for key in eq.table.keys() {
                if !expected.remove(key) {
                    report.push(loc, format!("table key {key:?} does not match any parent combination"));
                }
            }
            for missing in expected {
                report.push(loc, format!("table not total: missing entry for {missing:?}"));
            }
            for (key, out) in &eq.table {
                if eq.domain.index_of(out).is_none() {
                    report.push(
                        loc,
                        format!("table output {out:?} at {key:?} is outside the domain"),
                    );
                }
            }
        }

        // Induced graph must be acyclic; reuse the graph constructor.
        if let Err(err) = self.induced_graph() {
            report.push("graph", err.to_string());
        }
    }

    fn parse_tuple(
        &self,
        vars: &[(VariableId, DomainSpec<T>)],
        key: &str,
    ) -> Option<Vec<usize>> {
        let parts: Vec<&str> = if key.is_empty() {
            Vec::new()
        } else {
            key.split(',').collect()
        };
        if parts.len() != vars.len() {
            return None;
        }
        parts
            .iter()
            .zip(vars)
            .map(|(label, (_, domain))| domain.index_of(label))
            .collect()
    }

    fn induced_graph(&self) -> Result<CausalGraph, GraphError> {
        let exo_decls = self.exo_decls();
        let mut nodes: Vec<VariableId> = exo_decls.iter().map(|(v, _)| v.clone()).collect();
        nodes.extend(self.equations.iter().map(|eq| eq.child.clone()));
        let mut edges = Vec::new();
        for eq in &self.equations {
            for p in eq.endo_parents.iter().chain(eq.exo_parents.iter()) {
                edges.push((p.clone(), eq.child.clone()));
            }
        }
        let exo_mark: BTreeSet<VariableId> = exo_decls.iter().map(|(v, _)| v.clone()).collect();
        CausalGraph::new(nodes, &edges, &exo_mark)
    }

    fn compile(self) -> Scm<T> {
        let graph = self.induced_graph().expect("validated");
        let exogenous = match &self.exogenous {
            ExogenousSpec::Independent(list) => {
                let vars: Vec<VariableId> = list.iter().map(|(v, _, _)| v.clone()).collect();
                let domains: Vec<DomainSpec<T>> = list.iter().map(|(_, d, _)| d.clone()).collect();
                let radix = Radix::new(domains.iter().map(|d| d.len()).collect());
                let mut joint = vec![T::one(); radix.len()];
                let mut tuple = Vec::new();
                for ix in 0..radix.len() {
                    radix.decode(ix, &mut tuple);
                    let mut p = T::one();
                    for (pos, &val) in tuple.iter().enumerate() {
                        p = p * list[pos].2[val];
                    }
                    joint[ix] = p;
                }
                ExogenousSpace::new(vars, domains, joint).expect("validated")
            }
            ExogenousSpec::Joint { vars, table } => {
                let var_ids: Vec<VariableId> = vars.iter().map(|(v, _)| v.clone()).collect();
                let domains: Vec<DomainSpec<T>> = vars.iter().map(|(_, d)| d.clone()).collect();
                let radix = Radix::new(domains.iter().map(|d| d.len()).collect());
                let mut joint = vec![T::zero(); radix.len()];
                for (key, &p) in table {
                    let tuple = self.parse_tuple(vars, key).expect("validated");
                    joint[radix.index(&tuple)] = p;
                }
                ExogenousSpace::new(var_ids, domains, joint).expect("validated")
            }
        };

        let endo_vars: Vec<VariableId> = self.equations.iter().map(|eq| eq.child.clone()).collect();
        let endo_domains: Vec<DomainSpec<T>> =
            self.equations.iter().map(|eq| eq.domain.clone()).collect();
        let endo_index: HashMap<String, usize> = endo_vars
            .iter()
            .enumerate()
            .map(|(i, v)| (v.as_str().to_string(), i))
            .collect();
        let exo_index: HashMap<&str, usize> = exogenous
            .vars
            .iter()
            .enumerate()
            .map(|(i, v)| (v.as_str(), i))
            .collect();
        let observable: Vec<bool> = self.equations.iter().map(|eq| eq.observable).collect();

        let mut equations = Vec::new();
        for eq in &self.equations {
            let endo_parents: Vec<usize> = eq
                .endo_parents
                .iter()
                .map(|p| endo_index[p.as_str()])
                .collect();
            let exo_parents: Vec<usize> = eq
                .exo_parents
                .iter()
                .map(|p| exo_index[p.as_str()])
                .collect();
            let mut sizes: Vec<usize> = endo_parents
                .iter()
                .map(|&p| endo_domains[p].len())
                .collect();
            sizes.extend(exo_parents.iter().map(|&p| exogenous.domains[p].len()));
            let radix = Radix::new(sizes);
            let mut outputs = vec![0u32; radix.len()];
            let parent_domains: Vec<&DomainSpec<T>> = endo_parents
                .iter()
                .map(|&p| &endo_domains[p])
                .chain(exo_parents.iter().map(|&p| &exogenous.domains[p]))
                .collect();
            let mut tuple = Vec::new();
            for ix in 0..radix.len() {
                radix.decode(ix, &mut tuple);
                let key: Vec<&str> = tuple
                    .iter()
                    .enumerate()
                    .map(|(pos, &val)| parent_domains[pos].label(val))
                    .collect();
                let out_label = &eq.table[&key.join(",")];
                outputs[ix] = eq.domain.index_of(out_label).expect("validated") as u32;
            }
            equations.push(CompiledEquation {
                endo_parents,
                exo_parents,
                radix,
                outputs,
            });
        }

        let topo_order = topological_order(&equations, endo_vars.len());
        let markovian = {
            let mut child_count = vec![0usize; exogenous.vars.len()];
            for eq in &equations {
                for &p in &eq.exo_parents {
                    child_count[p] += 1;
                }
            }
            exogenous.factorizes && child_count.iter().all(|&c| c <= 1)
        };

        Scm {
            name: self.name,
            exogenous,
            endo_vars,
            endo_domains,
            endo_index,
            observable,
            equations,
            topo_order,
            graph,
            markovian,
        }
    }
}

fn topological_order(equations: &[CompiledEquation], n: usize) -> Vec<usize> {
    let mut indegree = vec![0usize; n];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (child, eq) in equations.iter().enumerate() {
        indegree[child] += eq.endo_parents.len();
        for &p in &eq.endo_parents {
            children[p].push(child);
        }
    }
    // Kahn's algorithm with an index-ordered frontier for determinism.
    let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(&next) = ready.iter().next() {
        ready.remove(&next);
        order.push(next);
        for &c in &children[next] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.insert(c);
            }
        }
    }
    debug_assert_eq!(order.len(), n);
    order
}

impl<T: Real> Scm<T> {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn graph(&self) -> &CausalGraph {
        &self.graph
    }

    /// Endogenous variables in declaration order.
    pub fn endogenous(&self) -> &[VariableId] {
        &self.endo_vars
    }

    pub fn exogenous(&self) -> &ExogenousSpace<T> {
        &self.exogenous
    }

    pub fn is_endogenous(&self, var: &VariableId) -> bool {
        self.endo_index.contains_key(var.as_str())
    }

    /// True iff the exogenous joint factorizes into independent marginals
    /// and no exogenous variable enters more than one equation. Recomputed
    /// at build time, never user-asserted.
    pub fn is_markovian(&self) -> bool {
        self.markovian
    }

    pub fn domain_of(&self, var: &VariableId) -> Result<&DomainSpec<T>, ScmError> {
        if let Some(&i) = self.endo_index.get(var.as_str()) {
            return Ok(&self.endo_domains[i]);
        }
        if let Some(pos) = self
            .exogenous
            .vars
            .iter()
            .position(|v| v.as_str() == var.as_str())
        {
            return Ok(&self.exogenous.domains[pos]);
        }
        Err(ScmError::UnknownVariable(var.as_str().to_string()))
    }

    pub fn is_observable(&self, var: &VariableId) -> Result<bool, ScmError> {
        match self.endo_index.get(var.as_str()) {
            Some(&i) => Ok(self.observable[i]),
            None => {
                // Exogenous variables are never observable.
                if self.exogenous.vars.iter().any(|v| v == var) {
                    Ok(false)
                } else {
                    Err(ScmError::UnknownVariable(var.as_str().to_string()))
                }
            }
        }
    }

    /// Observable endogenous variables, the candidate pool for covariate
    /// searches.
    pub fn observable_variables(&self) -> BTreeSet<VariableId> {
        self.endo_vars
            .iter()
            .zip(&self.observable)
            .filter(|(_, &obs)| obs)
            .map(|(v, _)| v.clone())
            .collect()
    }

    /// The default mediator set: endogenous parents of `y` excluding `x`.
    pub fn default_mediators(
        &self,
        x: &VariableId,
        y: &VariableId,
    ) -> Result<Vec<VariableId>, ScmError> {
        let yi = self.endo_ix(y)?;
        Ok(self.equations[yi]
            .endo_parents
            .iter()
            .map(|&p| self.endo_vars[p].clone())
            .filter(|p| p != x)
            .collect())
    }

    pub(crate) fn endo_ix(&self, var: &VariableId) -> Result<usize, ScmError> {
        self.endo_index
            .get(var.as_str())
            .copied()
            .ok_or_else(|| match self.exogenous.vars.iter().any(|v| v == var) {
                true => ScmError::NotEndogenous(var.as_str().to_string()),
                false => ScmError::UnknownVariable(var.as_str().to_string()),
            })
    }

    pub(crate) fn endo_value_ix(&self, var: usize, label: &str) -> Result<usize, ScmError> {
        self.endo_domains[var].index_of(label).ok_or_else(|| {
            ScmError::UnknownLabel {
                variable: self.endo_vars[var].as_str().to_string(),
                label: label.to_string(),
            }
        })
    }

    pub(crate) fn endo_domain(&self, var: usize) -> &DomainSpec<T> {
        &self.endo_domains[var]
    }

    pub(crate) fn endo_var(&self, var: usize) -> &VariableId {
        &self.endo_vars[var]
    }

    fn model_tag(&self) -> usize {
        // Cheap identity check so a Unit from one model is rejected by
        // another: length of the exogenous radix is part of it, plus a
        // pointer-free structural fingerprint of variable names.
        self.exogenous
            .vars
            .iter()
            .map(|v| v.as_str().len())
            .sum::<usize>()
            .wrapping_mul(31)
            .wrapping_add(self.exogenous.radix.len())
    }

    /// Builds a [`Unit`] from a full exogenous assignment.
    pub fn unit(&self, assignment: &Assignment) -> Result<Unit, ScmError> {
        let mut values = Vec::with_capacity(self.exogenous.vars.len());
        for (pos, var) in self.exogenous.vars.iter().enumerate() {
            let label = assignment
                .get(var)
                .ok_or_else(|| ScmError::IncompleteUnit(var.as_str().to_string()))?;
            let ix = self.exogenous.domains[pos].index_of(label).ok_or_else(|| {
                ScmError::UnknownLabel {
                    variable: var.as_str().to_string(),
                    label: label.clone(),
                }
            })?;
            values.push(ix);
        }
        Ok(Unit {
            values,
            model_tag: self.model_tag(),
        })
    }

    /// Renders a unit back into an assignment over exogenous variables.
    pub fn unit_assignment(&self, unit: &Unit) -> Result<Assignment, ScmError> {
        self.check_unit(unit)?;
        Ok(self
            .exogenous
            .vars
            .iter()
            .zip(&unit.values)
            .map(|(v, &ix)| (v.clone(), self.exogenous.domains[self.exo_pos(v)].label(ix).to_string()))
            .collect())
    }

    fn exo_pos(&self, var: &VariableId) -> usize {
        self.exogenous
            .vars
            .iter()
            .position(|v| v == var)
            .expect("exogenous variable")
    }

    fn check_unit(&self, unit: &Unit) -> Result<(), ScmError> {
        if unit.model_tag != self.model_tag() || unit.values.len() != self.exogenous.vars.len() {
            return Err(ScmError::ForeignUnit);
        }
        Ok(())
    }

    pub(crate) fn resolve_regime(&self, regime: &Regime) -> Result<Vec<Option<usize>>, ScmError> {
        let mut fixed = vec![None; self.endo_vars.len()];
        for (var, label) in &regime.fixings {
            let i = self.endo_ix(var)?;
            fixed[i] = Some(self.endo_value_ix(i, label)?);
        }
        Ok(fixed)
    }

    pub(crate) fn evaluate_ix(&self, u: &[usize], fixed: &[Option<usize>]) -> Vec<usize> {
        let mut world = vec![usize::MAX; self.endo_vars.len()];
        let mut key = Vec::new();
        for &i in &self.topo_order {
            if let Some(v) = fixed[i] {
                world[i] = v;
                continue;
            }
            let eq = &self.equations[i];
            key.clear();
            key.extend(eq.endo_parents.iter().map(|&p| world[p]));
            key.extend(eq.exo_parents.iter().map(|&p| u[p]));
            world[i] = eq.outputs[eq.radix.index(&key)] as usize;
        }
        world
    }

    /// Computes every endogenous value for unit `u` under `regime`.
    ///
    /// Variables named in the regime take their forced value; all others
    /// take their structural value, in topological order. Deterministic.
    pub fn evaluate(&self, u: &Unit, regime: &Regime) -> Result<Assignment, ScmError> {
        self.check_unit(u)?;
        let fixed = self.resolve_regime(regime)?;
        let world = self.evaluate_ix(&u.values, &fixed);
        Ok(self.render_world(&world))
    }

    pub(crate) fn render_world(&self, world: &[usize]) -> Assignment {
        self.endo_vars
            .iter()
            .zip(world)
            .map(|(v, &ix)| (v.clone(), self.endo_domains[self.endo_index[v.as_str()]].label(ix).to_string()))
            .collect()
    }

    /// The nested counterfactual Y_{x, Z_{x_ref}}(u): mediators are held at
    /// the values they would take under `x_ref` while `x` is applied.
    pub fn nested_outcome(
        &self,
        u: &Unit,
        x: &VariableId,
        x_val: &str,
        x_ref: &str,
        mediators: &[VariableId],
        y: &VariableId,
    ) -> Result<String, ScmError> {
        self.check_unit(u)?;
        if mediators.is_empty() {
            return Err(ScmError::EmptyMediators);
        }
        if mediators.contains(x) {
            return Err(ScmError::MediatorsContain(x.as_str().to_string()));
        }
        if mediators.contains(y) {
            return Err(ScmError::MediatorsContain(y.as_str().to_string()));
        }
        let xi = self.endo_ix(x)?;
        let yi = self.endo_ix(y)?;
        let x_val_ix = self.endo_value_ix(xi, x_val)?;
        let x_ref_ix = self.endo_value_ix(xi, x_ref)?;
        let mediator_ixs: Vec<usize> = mediators
            .iter()
            .map(|m| self.endo_ix(m))
            .collect::<Result<_, _>>()?;

        let mut ref_fixed = vec![None; self.endo_vars.len()];
        ref_fixed[xi] = Some(x_ref_ix);
        let ref_world = self.evaluate_ix(&u.values, &ref_fixed);

        let mut fixed = vec![None; self.endo_vars.len()];
        fixed[xi] = Some(x_val_ix);
        for &m in &mediator_ixs {
            fixed[m] = Some(ref_world[m]);
        }
        let world = self.evaluate_ix(&u.values, &fixed);
        Ok(self.endo_domains[yi].label(world[yi]).to_string())
    }

    /// Every exogenous tuple with positive probability, in lexicographic
    /// order of declared variable order and domain order.
    pub fn enumerate_units(&self) -> impl Iterator<Item = (Unit, T)> + '_ {
        let tag = self.model_tag();
        let radix = self.exogenous.radix.clone();
        self.exogenous
            .joint
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > T::zero())
            .map(move |(ix, &p)| {
                let mut values = Vec::new();
                radix.decode(ix, &mut values);
                (
                    Unit {
                        values,
                        model_tag: tag,
                    },
                    p,
                )
            })
    }

    /// Exact marginal distribution of `over` under `regime`, computed by
    /// full unit enumeration.
    pub fn exact_distribution(
        &self,
        regime: &Regime,
        over: &[VariableId],
    ) -> Result<Distribution<T>, ScmError> {
        let fixed = self.resolve_regime(regime)?;
        let over_ixs: Vec<usize> = over
            .iter()
            .map(|v| self.endo_ix(v))
            .collect::<Result<_, _>>()?;
        let domains: Vec<DomainSpec<T>> = over_ixs
            .iter()
            .map(|&i| self.endo_domains[i].clone())
            .collect();
        let radix = Radix::new(domains.iter().map(|d| d.len()).collect());
        let mut probs = vec![T::zero(); radix.len()];
        let mut key = Vec::with_capacity(over_ixs.len());
        for (unit, p) in self.enumerate_units() {
            let world = self.evaluate_ix(&unit.values, &fixed);
            key.clear();
            key.extend(over_ixs.iter().map(|&i| world[i]));
            let ix = radix.index(&key);
            probs[ix] = probs[ix] + p;
        }
        Ok(Distribution::new(
            over.to_vec(),
            domains,
            probs,
            regime.clone(),
        ))
    }

    /// Draws `n` i.i.d. rows under the given sampling declaration.
    ///
    /// Each row samples a unit from the exogenous joint and evaluates it;
    /// `Randomized` designs additionally draw the listed variables uniformly
    /// and apply them as interventions. The generator is ChaCha12 seeded
    /// with `seed`, so the same (model, declaration, n, seed) reproduces
    /// identical rows.
    pub fn sample(&self, n: usize, seed: u64, decl: &RegimeDecl) -> Result<Dataset, ScmError> {
        if n == 0 {
            return Err(ScmError::EmptySample);
        }
        let base = match decl {
            RegimeDecl::Observational => Regime::observational(),
            RegimeDecl::Do(regime) => regime.clone(),
            RegimeDecl::Randomized { base, .. } => base.clone(),
        };
        let mut fixed = self.resolve_regime(&base)?;
        let randomized: Vec<usize> = match decl {
            RegimeDecl::Randomized { uniform, .. } => uniform
                .iter()
                .map(|v| self.endo_ix(v))
                .collect::<Result<_, _>>()?,
            _ => Vec::new(),
        };
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut rows = Vec::with_capacity(n);
        let mut decode_buf = Vec::new();
        for _ in 0..n {
            let r = T::of(rng.gen::<f64>());
            let mut acc = T::zero();
            let mut chosen = self.exogenous.joint.len() - 1;
            for (ix, &p) in self.exogenous.joint.iter().enumerate() {
                acc = acc + p;
                if r < acc {
                    chosen = ix;
                    break;
                }
            }
            self.exogenous.radix.decode(chosen, &mut decode_buf);
            for &var in &randomized {
                let k = rng.gen_range(0..self.endo_domains[var].len());
                fixed[var] = Some(k);
            }
            let world = self.evaluate_ix(&decode_buf, &fixed);
            rows.push(world.iter().map(|&v| v as u32).collect());
        }
        Ok(Dataset::from_sampled(
            self.endo_vars.clone(),
            self.endo_domains
                .iter()
                .map(|d| d.labels().to_vec())
                .collect(),
            rows,
            decl.clone(),
            seed,
        ))
    }
}
