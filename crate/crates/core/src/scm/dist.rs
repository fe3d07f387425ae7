//! Exact marginal distributions over endogenous assignments.

use super::{Assignment, DomainSpec, Radix, Regime, ScmError};
use crate::graph::VariableId;
use crate::Real;

/// A distribution over a tuple of endogenous variables, produced by exact
/// enumeration under a fixed regime.
///
/// Probabilities are dense over the product of the variables' domains, in
/// lexicographic order. Conditionals are ratios; conditioning on a
/// zero-probability event is an error here, and the caller decides how to
/// resolve it (the estimand layer falls back to interventional semantics
/// for exact sources and skips the stratum for empirical ones).
#[derive(Debug, Clone)]
pub struct Distribution<T> {
    vars: Vec<VariableId>,
    domains: Vec<DomainSpec<T>>,
    radix: Radix,
    probs: Vec<T>,
    regime: Regime,
}

impl<T: Real> Distribution<T> {
    pub(crate) fn new(
        vars: Vec<VariableId>,
        domains: Vec<DomainSpec<T>>,
        probs: Vec<T>,
        regime: Regime,
    ) -> Self {
        let radix = Radix::new(domains.iter().map(|d| d.len()).collect());
        debug_assert_eq!(radix.len(), probs.len());
        Distribution {
            vars,
            domains,
            radix,
            probs,
            regime,
        }
    }

    pub fn variables(&self) -> &[VariableId] {
        &self.vars
    }

    pub fn regime(&self) -> &Regime {
        &self.regime
    }

    pub fn total_mass(&self) -> T {
        self.probs.iter().copied().sum()
    }

    /// Support in lexicographic order: (value indices, probability), zero
    /// entries skipped.
    pub fn support(&self) -> impl Iterator<Item = (Vec<usize>, T)> + '_ {
        let radix = self.radix.clone();
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > T::zero())
            .map(move |(ix, &p)| {
                let mut tuple = Vec::new();
                radix.decode(ix, &mut tuple);
                (tuple, p)
            })
    }

    /// Support rendered as assignments, for reports.
    pub fn assignments(&self) -> Vec<(Assignment, T)> {
        self.support()
            .map(|(tuple, p)| {
                let a: Assignment = self
                    .vars
                    .iter()
                    .zip(&tuple)
                    .map(|(v, &ix)| (v.clone(), self.domains[self.pos_of(v).unwrap()].label(ix).to_string()))
                    .collect();
                (a, p)
            })
            .collect()
    }

    fn pos_of(&self, var: &VariableId) -> Option<usize> {
        self.vars.iter().position(|v| v == var)
    }

    fn event_ixs(&self, event: &Assignment) -> Result<Vec<(usize, usize)>, ScmError> {
        let mut out = Vec::with_capacity(event.len());
        for (var, label) in event {
            let pos = self
                .pos_of(var)
                .ok_or_else(|| ScmError::UnknownVariable(var.as_str().to_string()))?;
            let val = self.domains[pos].index_of(label).ok_or_else(|| {
                ScmError::UnknownLabel {
                    variable: var.as_str().to_string(),
                    label: label.clone(),
                }
            })?;
            out.push((pos, val));
        }
        Ok(out)
    }

    /// Probability of a (possibly partial) event over this distribution's
    /// variables.
    pub fn prob_of(&self, event: &Assignment) -> Result<T, ScmError> {
        let constraints = self.event_ixs(event)?;
        let mut tuple = Vec::new();
        let mut total = T::zero();
        for (ix, &p) in self.probs.iter().enumerate() {
            if p <= T::zero() {
                continue;
            }
            self.radix.decode(ix, &mut tuple);
            if constraints.iter().all(|&(pos, val)| tuple[pos] == val) {
                total = total + p;
            }
        }
        Ok(total)
    }

    /// Marginal over a subset of the variables (kept in the given order).
    pub fn marginal(&self, keep: &[VariableId]) -> Result<Distribution<T>, ScmError> {
        let keep_pos: Vec<usize> = keep
            .iter()
            .map(|v| {
                self.pos_of(v)
                    .ok_or_else(|| ScmError::UnknownVariable(v.as_str().to_string()))
            })
            .collect::<Result<_, _>>()?;
        let domains: Vec<DomainSpec<T>> =
            keep_pos.iter().map(|&p| self.domains[p].clone()).collect();
        let radix = Radix::new(domains.iter().map(|d| d.len()).collect());
        let mut probs = vec![T::zero(); radix.len()];
        let mut tuple = Vec::new();
        let mut key = Vec::with_capacity(keep_pos.len());
        for (ix, &p) in self.probs.iter().enumerate() {
            if p <= T::zero() {
                continue;
            }
            self.radix.decode(ix, &mut tuple);
            key.clear();
            key.extend(keep_pos.iter().map(|&pos| tuple[pos]));
            let out_ix = radix.index(&key);
            probs[out_ix] = probs[out_ix] + p;
        }
        Ok(Distribution {
            vars: keep.to_vec(),
            domains,
            radix,
            probs,
            regime: self.regime.clone(),
        })
    }

    /// Conditional distribution given an event, derived by ratio.
    pub fn condition(&self, given: &Assignment) -> Result<Distribution<T>, ScmError> {
        let mass = self.prob_of(given)?;
        if mass <= T::zero() {
            let event: Vec<String> = given
                .iter()
                .map(|(v, l)| format!("{}={}", v.as_str(), l))
                .collect();
            return Err(ScmError::ZeroMassEvent(event.join(",")));
        }
        let constraints = self.event_ixs(given)?;
        let mut probs = vec![T::zero(); self.probs.len()];
        let mut tuple = Vec::new();
        for (ix, &p) in self.probs.iter().enumerate() {
            if p <= T::zero() {
                continue;
            }
            self.radix.decode(ix, &mut tuple);
            if constraints.iter().all(|&(pos, val)| tuple[pos] == val) {
                probs[ix] = p / mass;
            }
        }
        Ok(Distribution {
            vars: self.vars.clone(),
            domains: self.domains.clone(),
            radix: self.radix.clone(),
            probs,
            regime: self.regime.clone(),
        })
    }

    /// Expectation of `f` applied to one variable's labels.
    pub fn expectation_with(
        &self,
        var: &VariableId,
        f: impl Fn(&str) -> T,
    ) -> Result<T, ScmError> {
        let pos = self
            .pos_of(var)
            .ok_or_else(|| ScmError::UnknownVariable(var.as_str().to_string()))?;
        let mut tuple = Vec::new();
        let mut total = T::zero();
        for (ix, &p) in self.probs.iter().enumerate() {
            if p <= T::zero() {
                continue;
            }
            self.radix.decode(ix, &mut tuple);
            total = total + p * f(self.domains[pos].label(tuple[pos]));
        }
        Ok(total)
    }
}
