//! Ground-truth effect computation by exact enumeration.
//!
//! Five effect kinds are supported, each at unit level and averaged over
//! the exogenous distribution:
//!
//! - controlled direct effect: force the mediators to a fixed setting and
//!   compare the outcome under the two treatment values;
//! - natural direct effect: hold the mediators at the values they take in
//!   the reference world of each unit;
//! - natural indirect effect: hold the treatment at its reference value and
//!   move the mediators to their treated-world values;
//! - total effect: plain difference of interventional outcomes;
//! - path-specific effect: total effect inside the path-surgery model of a
//!   chosen edge-subgraph.
//!
//! Outcomes are mapped to numbers by the domain's numeric coding, or by an
//! indicator on a target label, which reproduces probability-scale effects.

use serde::Serialize;
use thiserror::Error;

use crate::graph::VariableId;
use crate::scm::{Assignment, PathSubgraph, Scm, ScmError, Unit};
use crate::Real;

#[derive(Debug, Error)]
pub enum EffectError {
    #[error(transparent)]
    Scm(#[from] ScmError),
    #[error("setting may not cover {0}")]
    SettingCovers(String),
    #[error("{kind} queries need {field}")]
    MissingField { kind: &'static str, field: &'static str },
    #[error("{kind} queries do not take {field}")]
    UnexpectedField { kind: &'static str, field: &'static str },
}

/// How outcome labels become numbers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum OutcomeScale {
    /// The domain's numeric coding (ordinal by default).
    Code,
    /// 1 when the outcome equals the target label, else 0; effect values
    /// are then differences of probabilities.
    Indicator(String),
}

/// The outcome variable together with its numeric scale.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OutcomeTarget {
    pub variable: VariableId,
    pub scale: OutcomeScale,
}

impl OutcomeTarget {
    pub fn coded(variable: VariableId) -> Self {
        OutcomeTarget {
            variable,
            scale: OutcomeScale::Code,
        }
    }

    pub fn indicator(variable: VariableId, label: impl Into<String>) -> Self {
        OutcomeTarget {
            variable,
            scale: OutcomeScale::Indicator(label.into()),
        }
    }
}

/// Resolved treatment/outcome context shared by the effect loops.
struct Ctx<'a, T: Real> {
    scm: &'a Scm<T>,
    xi: usize,
    x_ix: usize,
    x_ref_ix: usize,
    yi: usize,
    yvals: Vec<T>,
}

impl<'a, T: Real> Ctx<'a, T> {
    fn new(
        scm: &'a Scm<T>,
        treatment: &VariableId,
        x: &str,
        x_ref: &str,
        outcome: &OutcomeTarget,
    ) -> Result<Self, EffectError> {
        let xi = scm.endo_ix(treatment)?;
        let x_ix = scm.endo_value_ix(xi, x)?;
        let x_ref_ix = scm.endo_value_ix(xi, x_ref)?;
        let yi = scm.endo_ix(&outcome.variable)?;
        let domain = scm.endo_domain(yi);
        let yvals: Vec<T> = match &outcome.scale {
            OutcomeScale::Code => domain.codes().to_vec(),
            OutcomeScale::Indicator(label) => {
                let target = domain.index_of(label).ok_or_else(|| ScmError::UnknownLabel {
                    variable: outcome.variable.as_str().to_string(),
                    label: label.clone(),
                })?;
                (0..domain.len())
                    .map(|i| if i == target { T::one() } else { T::zero() })
                    .collect()
            }
        };
        Ok(Ctx {
            scm,
            xi,
            x_ix,
            x_ref_ix,
            yi,
            yvals,
        })
    }

    /// Resolves a mediator set, defaulting to the endogenous parents of the
    /// outcome excluding the treatment.
    fn mediators(
        &self,
        requested: Option<&[VariableId]>,
    ) -> Result<Vec<usize>, EffectError> {
        let vars: Vec<VariableId> = match requested {
            Some(set) => set.to_vec(),
            None => self
                .scm
                .default_mediators(self.scm.endo_var(self.xi), self.scm.endo_var(self.yi))?,
        };
        if vars.is_empty() {
            return Err(ScmError::EmptyMediators.into());
        }
        let mut out = Vec::with_capacity(vars.len());
        for m in &vars {
            let i = self.scm.endo_ix(m)?;
            if i == self.xi || i == self.yi {
                return Err(ScmError::MediatorsContain(m.as_str().to_string()).into());
            }
            out.push(i);
        }
        Ok(out)
    }

    fn none_fixed(&self) -> Vec<Option<usize>> {
        vec![None; self.scm.endogenous().len()]
    }

    fn code_at(&self, world: &[usize]) -> T {
        self.yvals[world[self.yi]]
    }

    fn average(
        &self,
        mut term: impl FnMut(&[usize]) -> T,
    ) -> T {
        let mut total = T::zero();
        for (unit, p) in self.scm.enumerate_units() {
            total = total + p * term(unit_values(&unit));
        }
        total
    }
}

fn unit_values(unit: &Unit) -> &[usize] {
    unit.value_ixs()
}

fn resolve_setting<T: Real>(
    scm: &Scm<T>,
    ctx: &Ctx<'_, T>,
    setting: &Assignment,
) -> Result<Vec<(usize, usize)>, EffectError> {
    let mut out = Vec::with_capacity(setting.len());
    for (var, label) in setting {
        let i = scm.endo_ix(var)?;
        if i == ctx.xi || i == ctx.yi {
            return Err(EffectError::SettingCovers(var.as_str().to_string()));
        }
        out.push((i, scm.endo_value_ix(i, label)?));
    }
    Ok(out)
}

/// Controlled direct effect at a unit: the outcome difference between the
/// two treatment values with the mediators clamped to `setting`.
pub fn cde_unit<T: Real>(
    scm: &Scm<T>,
    u: &Unit,
    treatment: &VariableId,
    x: &str,
    x_ref: &str,
    setting: &Assignment,
    outcome: &OutcomeTarget,
) -> Result<T, EffectError> {
    let ctx = Ctx::new(scm, treatment, x, x_ref, outcome)?;
    let clamped = resolve_setting(scm, &ctx, setting)?;
    scm.unit_assignment(u)?;
    Ok(cde_term(&ctx, &clamped, unit_values(u)))
}

fn cde_term<T: Real>(ctx: &Ctx<'_, T>, clamped: &[(usize, usize)], u: &[usize]) -> T {
    let mut fixed = ctx.none_fixed();
    for &(i, val) in clamped {
        fixed[i] = Some(val);
    }
    fixed[ctx.xi] = Some(ctx.x_ix);
    let treated = ctx.scm.evaluate_ix(u, &fixed);
    fixed[ctx.xi] = Some(ctx.x_ref_ix);
    let reference = ctx.scm.evaluate_ix(u, &fixed);
    ctx.code_at(&treated) - ctx.code_at(&reference)
}

/// Average controlled direct effect: the probability-weighted sum of
/// [`cde_unit`] over the enumerated units.
pub fn cde_avg<T: Real>(
    scm: &Scm<T>,
    treatment: &VariableId,
    x: &str,
    x_ref: &str,
    setting: &Assignment,
    outcome: &OutcomeTarget,
) -> Result<T, EffectError> {
    let ctx = Ctx::new(scm, treatment, x, x_ref, outcome)?;
    let clamped = resolve_setting(scm, &ctx, setting)?;
    Ok(ctx.average(|u| cde_term(&ctx, &clamped, u)))
}

fn nde_term<T: Real>(ctx: &Ctx<'_, T>, mediators: &[usize], u: &[usize]) -> T {
    let mut ref_fixed = ctx.none_fixed();
    ref_fixed[ctx.xi] = Some(ctx.x_ref_ix);
    let ref_world = ctx.scm.evaluate_ix(u, &ref_fixed);
    let mut fixed = ctx.none_fixed();
    fixed[ctx.xi] = Some(ctx.x_ix);
    for &m in mediators {
        fixed[m] = Some(ref_world[m]);
    }
    let nested = ctx.scm.evaluate_ix(u, &fixed);
    ctx.code_at(&nested) - ctx.code_at(&ref_world)
}

/// Natural direct effect at a unit: mediators frozen at their
/// reference-world values while the treatment moves.
pub fn nde_unit<T: Real>(
    scm: &Scm<T>,
    u: &Unit,
    treatment: &VariableId,
    x: &str,
    x_ref: &str,
    mediators: Option<&[VariableId]>,
    outcome: &OutcomeTarget,
) -> Result<T, EffectError> {
    let ctx = Ctx::new(scm, treatment, x, x_ref, outcome)?;
    let meds = ctx.mediators(mediators)?;
    scm.unit_assignment(u)?;
    Ok(nde_term(&ctx, &meds, unit_values(u)))
}

/// Average natural direct effect.
pub fn nde_avg<T: Real>(
    scm: &Scm<T>,
    treatment: &VariableId,
    x: &str,
    x_ref: &str,
    mediators: Option<&[VariableId]>,
    outcome: &OutcomeTarget,
) -> Result<T, EffectError> {
    let ctx = Ctx::new(scm, treatment, x, x_ref, outcome)?;
    let meds = ctx.mediators(mediators)?;
    Ok(ctx.average(|u| nde_term(&ctx, &meds, u)))
}

fn nie_term<T: Real>(ctx: &Ctx<'_, T>, mediators: &[usize], u: &[usize]) -> T {
    let mut treated_fixed = ctx.none_fixed();
    treated_fixed[ctx.xi] = Some(ctx.x_ix);
    let treated_world = ctx.scm.evaluate_ix(u, &treated_fixed);
    let mut ref_fixed = ctx.none_fixed();
    ref_fixed[ctx.xi] = Some(ctx.x_ref_ix);
    let ref_world = ctx.scm.evaluate_ix(u, &ref_fixed);
    let mut fixed = ctx.none_fixed();
    fixed[ctx.xi] = Some(ctx.x_ref_ix);
    for &m in mediators {
        fixed[m] = Some(treated_world[m]);
    }
    let moved = ctx.scm.evaluate_ix(u, &fixed);
    ctx.code_at(&moved) - ctx.code_at(&ref_world)
}

/// Natural indirect effect at a unit: treatment held at the reference value
/// while the mediators move to their treated-world values.
pub fn nie_unit<T: Real>(
    scm: &Scm<T>,
    u: &Unit,
    treatment: &VariableId,
    x: &str,
    x_ref: &str,
    mediators: Option<&[VariableId]>,
    outcome: &OutcomeTarget,
) -> Result<T, EffectError> {
    let ctx = Ctx::new(scm, treatment, x, x_ref, outcome)?;
    let meds = ctx.mediators(mediators)?;
    scm.unit_assignment(u)?;
    Ok(nie_term(&ctx, &meds, unit_values(u)))
}

/// Average natural indirect effect.
pub fn nie_avg<T: Real>(
    scm: &Scm<T>,
    treatment: &VariableId,
    x: &str,
    x_ref: &str,
    mediators: Option<&[VariableId]>,
    outcome: &OutcomeTarget,
) -> Result<T, EffectError> {
    let ctx = Ctx::new(scm, treatment, x, x_ref, outcome)?;
    let meds = ctx.mediators(mediators)?;
    Ok(ctx.average(|u| nie_term(&ctx, &meds, u)))
}

fn te_term<T: Real>(ctx: &Ctx<'_, T>, u: &[usize]) -> T {
    let mut fixed = ctx.none_fixed();
    fixed[ctx.xi] = Some(ctx.x_ix);
    let treated = ctx.scm.evaluate_ix(u, &fixed);
    fixed[ctx.xi] = Some(ctx.x_ref_ix);
    let reference = ctx.scm.evaluate_ix(u, &fixed);
    ctx.code_at(&treated) - ctx.code_at(&reference)
}

/// Total effect at a unit.
pub fn te_unit<T: Real>(
    scm: &Scm<T>,
    u: &Unit,
    treatment: &VariableId,
    x: &str,
    x_ref: &str,
    outcome: &OutcomeTarget,
) -> Result<T, EffectError> {
    let ctx = Ctx::new(scm, treatment, x, x_ref, outcome)?;
    scm.unit_assignment(u)?;
    Ok(te_term(&ctx, unit_values(u)))
}

/// Average total effect.
pub fn te_avg<T: Real>(
    scm: &Scm<T>,
    treatment: &VariableId,
    x: &str,
    x_ref: &str,
    outcome: &OutcomeTarget,
) -> Result<T, EffectError> {
    let ctx = Ctx::new(scm, treatment, x, x_ref, outcome)?;
    Ok(ctx.average(|u| te_term(&ctx, u)))
}

/// Path-specific effect at a unit: total effect of the treatment inside the
/// surgery model of `subgraph`.
pub fn pse_unit<T: Real>(
    scm: &Scm<T>,
    u: &Unit,
    subgraph: &PathSubgraph,
    treatment: &VariableId,
    x: &str,
    x_ref: &str,
    outcome: &OutcomeTarget,
) -> Result<T, EffectError> {
    let ctx = Ctx::new(scm, treatment, x, x_ref, outcome)?;
    let surgered = scm.surgery(subgraph, treatment, x, x_ref)?;
    scm.unit_assignment(u)?;
    Ok(pse_term(&ctx, &surgered, unit_values(u)))
}

fn pse_term<T: Real>(
    ctx: &Ctx<'_, T>,
    surgered: &crate::scm::SurgeredModel<'_, T>,
    u: &[usize],
) -> T {
    let mut fixed = ctx.none_fixed();
    fixed[ctx.xi] = Some(ctx.x_ix);
    let modified = surgered.evaluate_ix(u, &fixed);
    fixed[ctx.xi] = Some(ctx.x_ref_ix);
    let reference = ctx.scm.evaluate_ix(u, &fixed);
    ctx.code_at(&modified) - ctx.code_at(&reference)
}

/// Average path-specific effect.
pub fn pse_avg<T: Real>(
    scm: &Scm<T>,
    subgraph: &PathSubgraph,
    treatment: &VariableId,
    x: &str,
    x_ref: &str,
    outcome: &OutcomeTarget,
) -> Result<T, EffectError> {
    let ctx = Ctx::new(scm, treatment, x, x_ref, outcome)?;
    let surgered = scm.surgery(subgraph, treatment, x, x_ref)?;
    Ok(ctx.average(|u| pse_term(&ctx, &surgered, u)))
}

/// Which existential to search in [`has_effect`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum HasEffectKind {
    ControlledDirect,
    NaturalDirect,
    Indirect,
}

/// The first value pair (and mediator setting, for the controlled kind)
/// under which the effect is nonzero for the given unit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectWitness {
    pub x: String,
    pub x_ref: String,
    pub setting: Option<Assignment>,
}

/// Searches the definitional existential for one unit.
///
/// The reference value is anchored at the unit's natural treatment value
/// (its observational value for this unit): the natural-effect definitions
/// compare hypothetical transitions against the world as it is, and the
/// aspirin story depends on that anchoring — the patient who takes aspirin
/// iff treated has no natural direct effect from the untreated baseline
/// even though the reverse transition is not null. Candidate treated
/// values iterate in declared domain order; for the controlled kind the
/// mediator settings iterate lexicographically inside. The first witness
/// is returned.
pub fn has_effect<T: Real>(
    scm: &Scm<T>,
    kind: HasEffectKind,
    u: &Unit,
    treatment: &VariableId,
    outcome: &VariableId,
) -> Result<Option<EffectWitness>, EffectError> {
    let xi = scm.endo_ix(treatment)?;
    let domain_len = scm.endo_domain(xi).len();
    let target = OutcomeTarget::coded(outcome.clone());
    let natural = scm.evaluate(u, &crate::scm::Regime::observational())?;
    let x_ref = natural[treatment].clone();
    let labels: Vec<String> = (0..domain_len)
        .map(|i| scm.endo_domain(xi).label(i).to_string())
        .collect();
    let witness = |x: &String, setting: Option<Assignment>| EffectWitness {
        x: x.clone(),
        x_ref: x_ref.clone(),
        setting,
    };
    for x in &labels {
        if *x == x_ref {
            continue;
        }
        match kind {
            HasEffectKind::ControlledDirect => {
                let mediator_vars = scm.default_mediators(treatment, outcome)?;
                for setting in settings_of(scm, &mediator_vars)? {
                    let delta = cde_unit(scm, u, treatment, x, &x_ref, &setting, &target)?;
                    if delta != T::zero() {
                        return Ok(Some(witness(x, Some(setting))));
                    }
                }
            }
            HasEffectKind::NaturalDirect => {
                let delta = nde_unit(scm, u, treatment, x, &x_ref, None, &target)?;
                if delta != T::zero() {
                    return Ok(Some(witness(x, None)));
                }
            }
            HasEffectKind::Indirect => {
                let delta = nie_unit(scm, u, treatment, x, &x_ref, None, &target)?;
                if delta != T::zero() {
                    return Ok(Some(witness(x, None)));
                }
            }
        }
    }
    Ok(None)
}

fn settings_of<T: Real>(
    scm: &Scm<T>,
    vars: &[VariableId],
) -> Result<Vec<Assignment>, EffectError> {
    let mut out = vec![Assignment::new()];
    for var in vars {
        let i = scm.endo_ix(var)?;
        let labels = scm.endo_domain(i).labels().to_vec();
        let mut next = Vec::with_capacity(out.len() * labels.len());
        for base in &out {
            for label in &labels {
                let mut a = base.clone();
                a.insert(var.clone(), label.clone());
                next.push(a);
            }
        }
        out = next;
    }
    Ok(out)
}

/// The effect kinds a query can ask for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EffectKind {
    Cde,
    Nde,
    Nie,
    Te,
    Pse,
}

impl EffectKind {
    pub fn name(self) -> &'static str {
        match self {
            EffectKind::Cde => "cde",
            EffectKind::Nde => "nde",
            EffectKind::Nie => "nie",
            EffectKind::Te => "te",
            EffectKind::Pse => "pse",
        }
    }
}

/// A complete effect request, as the CLI sees it.
#[derive(Debug, Clone, Serialize)]
pub struct EffectQuery {
    pub kind: EffectKind,
    pub treatment: VariableId,
    pub x: String,
    pub x_ref: String,
    pub outcome: OutcomeTarget,
    pub mediators: Option<Vec<VariableId>>,
    pub setting: Option<Assignment>,
    pub subgraph: Option<PathSubgraph>,
    /// Exogenous assignment for unit-level queries; absent means average.
    pub unit: Option<Assignment>,
}

/// A computed effect with its provenance.
#[derive(Debug, Clone, Serialize)]
pub struct EffectReport<T> {
    pub query: EffectQuery,
    pub value: EffectValue<T>,
    pub method: &'static str,
    pub mediator_note: MediatorNote,
    pub decomposition: Option<Decomposition<T>>,
}

#[derive(Debug, Clone, Serialize)]
pub enum EffectValue<T> {
    Population(T),
    PerUnit(Vec<UnitEffect<T>>),
}

impl<T: Copy> EffectValue<T> {
    /// The single headline number of the report.
    pub fn scalar(&self) -> T {
        match self {
            EffectValue::Population(v) => *v,
            EffectValue::PerUnit(rows) => rows[0].value,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct UnitEffect<T> {
    pub unit: Assignment,
    pub value: T,
}

/// Whether the mediator set is the definitional default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MediatorNote {
    /// All parents of the outcome excluding the treatment.
    DefaultParents,
    /// A user-supplied set; the direct/indirect reading is not implied.
    CustomMediatorSet,
}

/// What TE decomposes into, both composition routes (the reversal identities
/// hold within the working tolerance by construction).
#[derive(Debug, Clone, Serialize)]
pub struct Decomposition<T> {
    pub te: T,
    pub nie_forward: T,
    pub nde_reverse: T,
    pub nde_forward: T,
    pub nie_reverse: T,
}

fn require_absent<V>(
    field: &Option<V>,
    kind: &'static str,
    name: &'static str,
) -> Result<(), EffectError> {
    if field.is_some() {
        return Err(EffectError::UnexpectedField { kind, field: name });
    }
    Ok(())
}

/// Runs a complete query: validates kind-specific fields, evaluates the
/// effect, and assembles the report (with the TE decomposition echoes when
/// mediators are available).
pub fn run_query<T: Real>(scm: &Scm<T>, query: &EffectQuery) -> Result<EffectReport<T>, EffectError> {
    let q = query;
    let kind = q.kind.name();
    match q.kind {
        EffectKind::Cde => {
            if q.setting.is_none() {
                return Err(EffectError::MissingField { kind: "cde", field: "setting" });
            }
            require_absent(&q.mediators, kind, "mediators")?;
            require_absent(&q.subgraph, kind, "subgraph")?;
        }
        EffectKind::Nde | EffectKind::Nie => {
            require_absent(&q.setting, kind, "setting")?;
            require_absent(&q.subgraph, kind, "subgraph")?;
        }
        EffectKind::Te => {
            require_absent(&q.setting, kind, "setting")?;
            require_absent(&q.subgraph, kind, "subgraph")?;
            require_absent(&q.mediators, kind, "mediators")?;
        }
        EffectKind::Pse => {
            if q.subgraph.is_none() {
                return Err(EffectError::MissingField { kind: "pse", field: "subgraph" });
            }
            require_absent(&q.setting, kind, "setting")?;
            require_absent(&q.mediators, kind, "mediators")?;
        }
    }

    let mediator_note = match (&q.kind, &q.mediators, &q.setting) {
        (EffectKind::Nde | EffectKind::Nie, Some(set), _) => {
            let default = scm.default_mediators(&q.treatment, &q.outcome.variable)?;
            let mut a: Vec<_> = set.clone();
            a.sort();
            let mut b = default;
            b.sort();
            if a == b {
                MediatorNote::DefaultParents
            } else {
                MediatorNote::CustomMediatorSet
            }
        }
        (EffectKind::Cde, _, Some(setting)) => {
            let default = scm.default_mediators(&q.treatment, &q.outcome.variable)?;
            let keys: Vec<_> = setting.keys().cloned().collect();
            let mut b = default;
            b.sort();
            if keys == b {
                MediatorNote::DefaultParents
            } else {
                MediatorNote::CustomMediatorSet
            }
        }
        _ => MediatorNote::DefaultParents,
    };

    let unit = match &q.unit {
        Some(assignment) => Some(scm.unit(assignment)?),
        None => None,
    };

    let compute = |x: &str, x_ref: &str, unit: Option<&Unit>| -> Result<T, EffectError> {
        match (&q.kind, unit) {
            (EffectKind::Cde, Some(u)) => cde_unit(
                scm, u, &q.treatment, x, x_ref, q.setting.as_ref().unwrap(), &q.outcome,
            ),
            (EffectKind::Cde, None) => cde_avg(
                scm, &q.treatment, x, x_ref, q.setting.as_ref().unwrap(), &q.outcome,
            ),
            (EffectKind::Nde, Some(u)) => {
                nde_unit(scm, u, &q.treatment, x, x_ref, q.mediators.as_deref(), &q.outcome)
            }
            (EffectKind::Nde, None) => {
                nde_avg(scm, &q.treatment, x, x_ref, q.mediators.as_deref(), &q.outcome)
            }
            (EffectKind::Nie, Some(u)) => {
                nie_unit(scm, u, &q.treatment, x, x_ref, q.mediators.as_deref(), &q.outcome)
            }
            (EffectKind::Nie, None) => {
                nie_avg(scm, &q.treatment, x, x_ref, q.mediators.as_deref(), &q.outcome)
            }
            (EffectKind::Te, Some(u)) => te_unit(scm, u, &q.treatment, x, x_ref, &q.outcome),
            (EffectKind::Te, None) => te_avg(scm, &q.treatment, x, x_ref, &q.outcome),
            (EffectKind::Pse, Some(u)) => pse_unit(
                scm, u, q.subgraph.as_ref().unwrap(), &q.treatment, x, x_ref, &q.outcome,
            ),
            (EffectKind::Pse, None) => pse_avg(
                scm, q.subgraph.as_ref().unwrap(), &q.treatment, x, x_ref, &q.outcome,
            ),
        }
    };

    let headline = compute(&q.x, &q.x_ref, unit.as_ref())?;
    let value = match &unit {
        Some(u) => EffectValue::PerUnit(vec![UnitEffect {
            unit: scm.unit_assignment(u)?,
            value: headline,
        }]),
        None => EffectValue::Population(headline),
    };

    // TE reports carry both composition routes when the default mediator
    // set is usable.
    let decomposition = if q.kind == EffectKind::Te {
        let default = scm.default_mediators(&q.treatment, &q.outcome.variable)?;
        if default.is_empty() {
            None
        } else {
            let nie_forward = match &unit {
                Some(u) => nie_unit(scm, u, &q.treatment, &q.x, &q.x_ref, None, &q.outcome)?,
                None => nie_avg(scm, &q.treatment, &q.x, &q.x_ref, None, &q.outcome)?,
            };
            let nde_reverse = match &unit {
                Some(u) => nde_unit(scm, u, &q.treatment, &q.x_ref, &q.x, None, &q.outcome)?,
                None => nde_avg(scm, &q.treatment, &q.x_ref, &q.x, None, &q.outcome)?,
            };
            let nde_forward = match &unit {
                Some(u) => nde_unit(scm, u, &q.treatment, &q.x, &q.x_ref, None, &q.outcome)?,
                None => nde_avg(scm, &q.treatment, &q.x, &q.x_ref, None, &q.outcome)?,
            };
            let nie_reverse = match &unit {
                Some(u) => nie_unit(scm, u, &q.treatment, &q.x_ref, &q.x, None, &q.outcome)?,
                None => nie_avg(scm, &q.treatment, &q.x_ref, &q.x, None, &q.outcome)?,
            };
            Some(Decomposition {
                te: headline,
                nie_forward,
                nde_reverse,
                nde_forward,
                nie_reverse,
            })
        }
    } else {
        None
    };

    Ok(EffectReport {
        query: query.clone(),
        value,
        method: "ground-truth enumeration",
        mediator_note,
        decomposition,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn v(name: &str) -> VariableId {
        VariableId::new(name).unwrap()
    }

    fn y() -> OutcomeTarget {
        OutcomeTarget::coded(v("Y"))
    }

    fn only_unit(scm: &Scm<f64>) -> Unit {
        scm.enumerate_units().next().unwrap().0
    }

    #[test]
    fn aspirin_controlled_vs_natural() {
        let scm = fixtures::aspirin();
        let u = only_unit(&scm);
        let z1: Assignment = [(v("Z"), "1".to_string())].into_iter().collect();
        let z0: Assignment = [(v("Z"), "0".to_string())].into_iter().collect();
        assert_eq!(cde_unit(&scm, &u, &v("X"), "1", "0", &z1, &y()).unwrap(), 1.0);
        assert_eq!(cde_unit(&scm, &u, &v("X"), "1", "0", &z0, &y()).unwrap(), 0.0);
        assert_eq!(nde_unit(&scm, &u, &v("X"), "1", "0", None, &y()).unwrap(), 0.0);
        assert_eq!(nde_avg(&scm, &v("X"), "1", "0", None, &y()).unwrap(), 0.0);
        assert_eq!(nie_unit(&scm, &u, &v("X"), "1", "0", None, &y()).unwrap(), 0.0);
        assert_eq!(te_avg(&scm, &v("X"), "1", "0", &y()).unwrap(), 1.0);
    }

    #[test]
    fn linear_fixture_values() {
        let scm = fixtures::linear();
        let u = only_unit(&scm);
        assert_eq!(nde_unit(&scm, &u, &v("X"), "1", "0", None, &y()).unwrap(), 1.0);
        assert_eq!(nde_avg(&scm, &v("X"), "1", "0", None, &y()).unwrap(), 1.0);
        assert_eq!(nie_unit(&scm, &u, &v("X"), "1", "0", None, &y()).unwrap(), 2.0);
        assert_eq!(nie_avg(&scm, &v("X"), "1", "0", None, &y()).unwrap(), 2.0);
        assert_eq!(te_avg(&scm, &v("X"), "1", "0", &y()).unwrap(), 3.0);
    }

    #[test]
    fn null_transition_is_exactly_zero() {
        let scm = fixtures::confounded_mediator();
        let u = only_unit(&scm);
        let z1: Assignment = [(v("Z"), "1".to_string()), (v("W"), "1".to_string())]
            .into_iter()
            .collect();
        assert_eq!(cde_unit(&scm, &u, &v("X"), "1", "1", &z1, &y()).unwrap(), 0.0);
        assert_eq!(nde_avg(&scm, &v("X"), "0", "0", Some(&[v("Z")]), &y()).unwrap(), 0.0);
        assert_eq!(nie_avg(&scm, &v("X"), "1", "1", Some(&[v("Z")]), &y()).unwrap(), 0.0);
        assert_eq!(te_avg(&scm, &v("X"), "0", "0", &y()).unwrap(), 0.0);
        let g = PathSubgraph::new([(v("X"), v("Y"))]);
        assert_eq!(pse_avg(&scm, &g, &v("X"), "1", "1", &y()).unwrap(), 0.0);
    }

    #[test]
    fn confounded_mediator_hand_values() {
        let scm = fixtures::confounded_mediator();
        assert!((nde_avg(&scm, &v("X"), "1", "0", Some(&[v("Z")]), &y()).unwrap()).abs() < 1e-12);
        assert!((nie_avg(&scm, &v("X"), "1", "0", Some(&[v("Z")]), &y()).unwrap() + 0.5).abs() < 1e-12);
        assert!((te_avg(&scm, &v("X"), "1", "0", &y()).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn diamond_pse_matches_hand_composition() {
        let scm = fixtures::diamond();
        let u = only_unit(&scm);
        let g = PathSubgraph::new([(v("X"), v("Z")), (v("Z"), v("W")), (v("W"), v("Y"))]);
        assert_eq!(pse_unit(&scm, &u, &g, &v("X"), "1", "0", &y()).unwrap(), 2.0);
        assert_eq!(pse_avg(&scm, &g, &v("X"), "1", "0", &y()).unwrap(), 2.0);
    }

    #[test]
    fn pse_reduces_to_nde_and_nie() {
        let scm = fixtures::confounded_mediator();
        let direct = PathSubgraph::new([(v("X"), v("Y"))]);
        let indirect = PathSubgraph::new(
            scm.graph()
                .edges()
                .into_iter()
                .filter(|(from, to)| scm.is_endogenous(from) && !(from == &v("X") && to == &v("Y"))),
        );
        let meds = scm.default_mediators(&v("X"), &v("Y")).unwrap();
        let nde = nde_avg(&scm, &v("X"), "1", "0", Some(&meds), &y()).unwrap();
        let nie = nie_avg(&scm, &v("X"), "1", "0", Some(&meds), &y()).unwrap();
        assert!((pse_avg(&scm, &direct, &v("X"), "1", "0", &y()).unwrap() - nde).abs() < 1e-12);
        assert!((pse_avg(&scm, &indirect, &v("X"), "1", "0", &y()).unwrap() - nie).abs() < 1e-12);
    }

    #[test]
    fn theorem3_identities_on_fixtures() {
        for scm in fixtures::all() {
            let meds = scm.default_mediators(&v("X"), &v("Y")).unwrap();
            if meds.is_empty() {
                continue;
            }
            for (a, b) in [("1", "0"), ("0", "1")] {
                let te = te_avg(&scm, &v("X"), a, b, &y()).unwrap();
                let nie_f = nie_avg(&scm, &v("X"), a, b, None, &y()).unwrap();
                let nde_r = nde_avg(&scm, &v("X"), b, a, None, &y()).unwrap();
                let nde_f = nde_avg(&scm, &v("X"), a, b, None, &y()).unwrap();
                let nie_r = nie_avg(&scm, &v("X"), b, a, None, &y()).unwrap();
                assert!((te - (nie_f - nde_r)).abs() < 1e-9, "{}", scm.name());
                assert!((te - (nde_f - nie_r)).abs() < 1e-9, "{}", scm.name());
            }
        }
    }

    #[test]
    fn has_effect_aspirin() {
        let scm = fixtures::aspirin();
        let u = only_unit(&scm);
        let controlled = has_effect(&scm, HasEffectKind::ControlledDirect, &u, &v("X"), &v("Y"))
            .unwrap()
            .expect("controlled direct effect exists");
        assert_eq!(
            controlled.setting.unwrap()[&v("Z")],
            "1",
            "the nonzero setting is aspirin on"
        );
        assert!(has_effect(&scm, HasEffectKind::NaturalDirect, &u, &v("X"), &v("Y"))
            .unwrap()
            .is_none());
        assert!(has_effect(&scm, HasEffectKind::Indirect, &u, &v("X"), &v("Y"))
            .unwrap()
            .is_none());
    }

    #[test]
    fn has_effect_constant_outcome() {
        // Y ignores everything: all three existentials are empty.
        let scm = crate::scm::ScmBuilder {
            name: "const".to_string(),
            exogenous: crate::scm::ExogenousSpec::empty(),
            equations: vec![
                crate::scm::EquationSpec {
                    child: v("X"),
                    domain: crate::scm::DomainSpec::new(vec!["0".into(), "1".into()]).unwrap(),
                    observable: true,
                    endo_parents: vec![],
                    exo_parents: vec![],
                    table: [("".to_string(), "0".to_string())].into_iter().collect(),
                },
                crate::scm::EquationSpec {
                    child: v("Z"),
                    domain: crate::scm::DomainSpec::new(vec!["0".into(), "1".into()]).unwrap(),
                    observable: true,
                    endo_parents: vec![v("X")],
                    exo_parents: vec![],
                    table: [("0".to_string(), "0".to_string()), ("1".to_string(), "1".to_string())]
                        .into_iter()
                        .collect(),
                },
                crate::scm::EquationSpec {
                    child: v("Y"),
                    domain: crate::scm::DomainSpec::new(vec!["0".into(), "1".into()]).unwrap(),
                    observable: true,
                    endo_parents: vec![v("X"), v("Z")],
                    exo_parents: vec![],
                    table: [
                        ("0,0".to_string(), "1".to_string()),
                        ("0,1".to_string(), "1".to_string()),
                        ("1,0".to_string(), "1".to_string()),
                        ("1,1".to_string(), "1".to_string()),
                    ]
                    .into_iter()
                    .collect(),
                },
            ],
        }
        .build()
        .unwrap();
        let u = only_unit(&scm);
        for kind in [
            HasEffectKind::ControlledDirect,
            HasEffectKind::NaturalDirect,
            HasEffectKind::Indirect,
        ] {
            assert!(has_effect(&scm, kind, &u, &v("X"), &v("Y")).unwrap().is_none());
        }
    }

    #[test]
    fn indicator_scale_gives_probability_effects() {
        let scm = fixtures::noisy_mediation();
        let target = OutcomeTarget::indicator(v("Y"), "1");
        let te = te_avg(&scm, &v("X"), "1", "0", &target).unwrap();
        // P(Y_1 = 1) - P(Y_0 = 1) = 0.86 - 0.14.
        assert!((te - 0.72).abs() < 1e-12);
    }

    #[test]
    fn query_validation() {
        let scm = fixtures::linear();
        let base = EffectQuery {
            kind: EffectKind::Te,
            treatment: v("X"),
            x: "1".to_string(),
            x_ref: "0".to_string(),
            outcome: OutcomeTarget::coded(v("Y")),
            mediators: None,
            setting: None,
            subgraph: None,
            unit: None,
        };
        let report = run_query(&scm, &base).unwrap();
        assert_eq!(report.value.scalar(), 3.0);
        let d = report.decomposition.unwrap();
        assert!((d.te - (d.nie_forward - d.nde_reverse)).abs() < 1e-12);
        assert!((d.te - (d.nde_forward - d.nie_reverse)).abs() < 1e-12);

        let mut bad = base.clone();
        bad.kind = EffectKind::Cde;
        assert!(matches!(
            run_query(&scm, &bad),
            Err(EffectError::MissingField { kind: "cde", field: "setting" })
        ));

        let mut bad = base.clone();
        bad.subgraph = Some(PathSubgraph::default());
        assert!(matches!(
            run_query(&scm, &bad),
            Err(EffectError::UnexpectedField { .. })
        ));
    }
}
