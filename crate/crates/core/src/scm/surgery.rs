//! Path-deactivation surgery.
//!
//! A path-specific effect is the total effect in a modified model where
//! every parent without a link in the selected edge-subgraph is replaced,
//! per unit, by the value it takes in the reference world. Those frozen
//! values depend on the unit, so the modified model keeps a handle on the
//! original and resolves them lazily at evaluation time instead of baking
//! constants into tables.

use std::collections::BTreeSet;

use serde::Serialize;

use super::{Assignment, Regime, Scm, ScmError, Unit};
use crate::graph::VariableId;
use crate::Real;

/// An edge-subgraph selecting the paths along which effects may flow.
///
/// Edges must exist in the model's induced graph and connect endogenous
/// variables; exogenous inputs are never frozen.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PathSubgraph {
    pub edges: BTreeSet<(VariableId, VariableId)>,
}

impl PathSubgraph {
    pub fn new<I: IntoIterator<Item = (VariableId, VariableId)>>(edges: I) -> Self {
        PathSubgraph {
            edges: edges.into_iter().collect(),
        }
    }

    pub fn contains(&self, from: &VariableId, to: &VariableId) -> bool {
        self.edges
            .contains(&(from.clone(), to.clone()))
    }
}

/// The modified model produced by [`Scm::surgery`]; evaluates lazily
/// against the base model for reference-world parent values.
#[derive(Debug, Clone)]
pub struct SurgeredModel<'m, T> {
    base: &'m Scm<T>,
    /// Per equation, per endogenous parent: does the edge survive in g?
    live: Vec<Vec<bool>>,
    x: usize,
    x_ref: usize,
}

impl<T: Real> Scm<T> {
    /// Builds the path-surgery model for subgraph `g`: parents without a
    /// g-link to their child are replaced, per unit, by their values under
    /// the regime fixing `x_var` to `x_ref`.
    pub fn surgery(
        &self,
        g: &PathSubgraph,
        x_var: &VariableId,
        x: &str,
        x_ref: &str,
    ) -> Result<SurgeredModel<'_, T>, ScmError> {
        let xi = self.endo_ix(x_var)?;
        let x_ix = self.endo_value_ix(xi, x)?;
        let x_ref_ix = self.endo_value_ix(xi, x_ref)?;
        for (from, to) in &g.edges {
            let fi = self.endo_ix(from).map_err(|_| ScmError::EdgeNotInGraph {
                from: from.as_str().to_string(),
                to: to.as_str().to_string(),
            })?;
            let ti = self.endo_ix(to).map_err(|_| ScmError::EdgeNotInGraph {
                from: from.as_str().to_string(),
                to: to.as_str().to_string(),
            })?;
            if !self.equation_endo_parents(ti).contains(&fi) {
                return Err(ScmError::EdgeNotInGraph {
                    from: from.as_str().to_string(),
                    to: to.as_str().to_string(),
                });
            }
        }
        let live = (0..self.endogenous().len())
            .map(|child| {
                let child_var = self.endo_var(child).clone();
                self.equation_endo_parents(child)
                    .iter()
                    .map(|&p| g.contains(self.endo_var(p), &child_var))
                    .collect()
            })
            .collect();
        // `x` is validated here but enters later through the evaluation
        // regime; only the reference value is part of the frozen state.
        let _ = x_ix;
        Ok(SurgeredModel {
            base: self,
            live,
            x: xi,
            x_ref: x_ref_ix,
        })
    }

    pub(crate) fn equation_endo_parents(&self, child: usize) -> &[usize] {
        &self.equations[child].endo_parents
    }
}

impl<'m, T: Real> SurgeredModel<'m, T> {
    pub fn base(&self) -> &Scm<T> {
        self.base
    }

    /// The treatment variable the surgery was built for.
    pub fn treatment(&self) -> &VariableId {
        self.base.endo_var(self.x)
    }

    pub(crate) fn evaluate_ix(&self, u: &[usize], fixed: &[Option<usize>]) -> Vec<usize> {
        // Reference world: the base model under do(X = x_ref).
        let mut ref_fixed = vec![None; self.base.endogenous().len()];
        ref_fixed[self.x] = Some(self.x_ref);
        let ref_world = self.base.evaluate_ix(u, &ref_fixed);

        let n = self.base.endogenous().len();
        let mut world = vec![usize::MAX; n];
        let mut key = Vec::new();
        for &i in &self.base.topo_order {
            if let Some(v) = fixed[i] {
                world[i] = v;
                continue;
            }
            let eq = &self.base.equations[i];
            key.clear();
            for (slot, &p) in eq.endo_parents.iter().enumerate() {
                key.push(if self.live[i][slot] {
                    world[p]
                } else {
                    ref_world[p]
                });
            }
            key.extend(eq.exo_parents.iter().map(|&p| u[p]));
            world[i] = eq.outputs[eq.radix.index(&key)] as usize;
        }
        world
    }

    /// Evaluates the modified model for a unit under a regime.
    pub fn evaluate(&self, u: &Unit, regime: &Regime) -> Result<Assignment, ScmError> {
        self.base.check_unit(u)?;
        let fixed = self.base.resolve_regime(regime)?;
        let world = self.evaluate_ix(&u.values, &fixed);
        Ok(self.base.render_world(&world))
    }
}
