//! Seeded random graphs and models for the verification suites.
//!
//! Everything here is deterministic in the seed (ChaCha12), so failures
//! reproduce exactly. The generators are deliberately conservative: each
//! constructor documents the structural guarantees it provides, and the
//! test suites lean on those guarantees rather than re-deriving them.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::graph::{CausalGraph, VariableId};
use crate::scm::{DomainSpec, EquationSpec, ExogenousSpec, Radix, Scm, ScmBuilder};

fn v(name: &str) -> VariableId {
    VariableId::new(name).expect("generated name")
}

fn ordinal_labels(size: usize) -> Vec<String> {
    (0..size).map(|i| i.to_string()).collect()
}

/// Random positive marginal over `size` values (no zero entries).
fn positive_marginal(rng: &mut ChaCha12Rng, size: usize) -> Vec<f64> {
    let weights: Vec<f64> = (0..size).map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

fn random_table(
    rng: &mut ChaCha12Rng,
    parent_labels: &[Vec<String>],
    child_labels: &[String],
) -> BTreeMap<String, String> {
    let radix = Radix::new(parent_labels.iter().map(|d| d.len()).collect());
    let mut table = BTreeMap::new();
    let mut tuple = Vec::new();
    for ix in 0..radix.len() {
        radix.decode(ix, &mut tuple);
        let key: Vec<&str> = tuple
            .iter()
            .enumerate()
            .map(|(pos, &val)| parent_labels[pos][val].as_str())
            .collect();
        let out = &child_labels[rng.gen_range(0..child_labels.len())];
        table.insert(key.join(","), out.clone());
    }
    table
}

/// A random DAG over `n` nodes named `N0..N{n-1}`: a uniformly shuffled
/// order, then each forward pair becomes an edge with probability
/// `edge_prob`.
pub fn random_dag(seed: u64, n: usize, edge_prob: f64) -> CausalGraph {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let nodes: Vec<VariableId> = (0..n).map(|i| v(&format!("N{i}"))).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen_bool(edge_prob) {
                edges.push((nodes[order[i]].clone(), nodes[order[j]].clone()));
            }
        }
    }
    CausalGraph::new(nodes, &edges, &BTreeSet::new()).expect("generated DAG")
}

/// A synthetic model with designated treatment and outcome.
pub struct SynthScm {
    pub scm: Scm<f64>,
    pub treatment: VariableId,
    pub outcome: VariableId,
}

/// How the exogenous distribution of [`random_scm`] is shaped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExoFlavor {
    /// One independent noise term per equation.
    Independent,
    /// One noise term per equation, but their joint is an arbitrary
    /// correlated table.
    CorrelatedJoint,
    /// One noise term enters two equations (a latent common cause made
    /// visible as a shared exogenous parent).
    SharedParent,
}

/// A random discrete SCM with 3..=5 endogenous variables (domains of size
/// 2..=3) named `X, M0.., Y` in topological order.
///
/// Guarantees: the outcome has at least one endogenous parent besides the
/// treatment, so the default mediator set is nonempty, and the treatment
/// has a directed edge to the outcome with probability ~0.8.
pub fn random_scm(seed: u64, flavor: ExoFlavor) -> SynthScm {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let n = rng.gen_range(3..=5);
    let mut names: Vec<VariableId> = vec![v("X")];
    for i in 0..(n - 2) {
        names.push(v(&format!("M{i}")));
    }
    names.push(v("Y"));

    let sizes: Vec<usize> = (0..n).map(|_| rng.gen_range(2..=3)).collect();
    let labels: Vec<Vec<String>> = sizes.iter().map(|&s| ordinal_labels(s)).collect();

    // Declaration order is the topological order; edges only point forward.
    let mut parents: Vec<Vec<usize>> = vec![Vec::new(); n];
    for child in 1..n {
        for parent in 0..child {
            if rng.gen_bool(0.5) {
                parents[child].push(parent);
            }
        }
    }
    if rng.gen_bool(0.8) && !parents[n - 1].contains(&0) {
        parents[n - 1].push(0);
        parents[n - 1].sort_unstable();
    }
    if !parents[n - 1].iter().any(|&p| p != 0) {
        let mid = rng.gen_range(1..n - 1);
        parents[n - 1].push(mid);
        parents[n - 1].sort_unstable();
        parents[n - 1].dedup();
    }

    // Noise wiring per flavor.
    let exo_sizes: Vec<usize> = (0..n).map(|_| rng.gen_range(2..=3)).collect();
    let exo_names: Vec<VariableId> = (0..n).map(|i| v(&format!("U{i}"))).collect();
    let mut exo_parents: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let exogenous = match flavor {
        ExoFlavor::Independent | ExoFlavor::SharedParent => {
            if flavor == ExoFlavor::SharedParent && n >= 2 {
                // One noise term feeds two consecutive equations.
                let shared = rng.gen_range(0..n - 1);
                exo_parents[shared + 1].push(shared);
            }
            ExogenousSpec::Independent(
                (0..n)
                    .map(|i| {
                        (
                            exo_names[i].clone(),
                            DomainSpec::new(ordinal_labels(exo_sizes[i])).unwrap(),
                            positive_marginal(&mut rng, exo_sizes[i]),
                        )
                    })
                    .collect(),
            )
        }
        ExoFlavor::CorrelatedJoint => {
            let radix = Radix::new(exo_sizes.clone());
            let mut weights: Vec<f64> = (0..radix.len())
                .map(|_| {
                    if rng.gen_bool(0.2) {
                        0.0
                    } else {
                        rng.gen_range(0.05..1.0)
                    }
                })
                .collect();
            if weights.iter().all(|&w| w == 0.0) {
                weights[0] = 1.0;
            }
            let total: f64 = weights.iter().sum();
            let mut table = BTreeMap::new();
            let mut tuple = Vec::new();
            for (ix, w) in weights.iter().enumerate() {
                if *w == 0.0 {
                    continue;
                }
                radix.decode(ix, &mut tuple);
                let key: Vec<String> =
                    tuple.iter().map(|&val| val.to_string()).collect();
                table.insert(key.join(","), w / total);
            }
            ExogenousSpec::Joint {
                vars: (0..n)
                    .map(|i| {
                        (
                            exo_names[i].clone(),
                            DomainSpec::new(ordinal_labels(exo_sizes[i])).unwrap(),
                        )
                    })
                    .collect(),
                table,
            }
        }
    };

    let mut equations = Vec::new();
    for i in 0..n {
        let mut parent_labels: Vec<Vec<String>> =
            parents[i].iter().map(|&p| labels[p].clone()).collect();
        parent_labels.extend(exo_parents[i].iter().map(|&e| ordinal_labels(exo_sizes[e])));
        equations.push(EquationSpec {
            child: names[i].clone(),
            domain: DomainSpec::new(labels[i].clone()).unwrap(),
            observable: true,
            endo_parents: parents[i].iter().map(|&p| names[p].clone()).collect(),
            exo_parents: exo_parents[i].iter().map(|&e| exo_names[e].clone()).collect(),
            table: random_table(&mut rng, &parent_labels, &labels[i]),
        });
    }

    let scm = ScmBuilder {
        name: format!("synth_{seed}"),
        exogenous,
        equations,
    }
    .build()
    .expect("generated model");
    SynthScm {
        scm,
        treatment: v("X"),
        outcome: v("Y"),
    }
}

/// A Markovian model compatible with `graph`: every node of the graph
/// becomes an endogenous variable with the graph's parent sets, one fresh
/// binary noise term per equation, and strictly positive noise marginals.
/// d-separation in `graph` therefore implies conditional independence in
/// the model's endogenous joint.
pub fn compatible_markovian(seed: u64, graph: &CausalGraph) -> Scm<f64> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let nodes = graph.nodes().to_vec();
    let mut exo = Vec::new();
    let mut equations = Vec::new();
    for node in &nodes {
        let u_name = v(&format!("U_{}", node.as_str()));
        let p = rng.gen_range(0.2..0.8);
        exo.push((
            u_name.clone(),
            DomainSpec::new(ordinal_labels(2)).unwrap(),
            vec![p, 1.0 - p],
        ));
        let parents = graph.parents_of(node).expect("graph node");
        let mut parent_labels: Vec<Vec<String>> =
            parents.iter().map(|_| ordinal_labels(2)).collect();
        parent_labels.push(ordinal_labels(2));
        equations.push(EquationSpec {
            child: node.clone(),
            domain: DomainSpec::new(ordinal_labels(2)).unwrap(),
            observable: true,
            endo_parents: parents,
            exo_parents: vec![u_name],
            table: random_table(&mut rng, &parent_labels, &ordinal_labels(2)),
        });
    }
    ScmBuilder {
        name: format!("compat_{seed}"),
        exogenous: ExogenousSpec::Independent(exo),
        equations,
    }
    .build()
    .expect("compatible model")
}

/// A mediation model with verified identification premises.
pub struct MediationSynth {
    pub scm: Scm<f64>,
    pub treatment: VariableId,
    pub outcome: VariableId,
    /// Back-door adjustment set for the treatment/mediator relation
    /// (empty when the treatment is a root).
    pub adjustment: Vec<VariableId>,
}

/// A random Markovian mediation model.
///
/// Structure: an optional covariate layer `S0` feeding treatment and
/// mediators, a treatment `X` whose equation is a permutation of its noise
/// term for every parent value (so every treatment level has positive
/// probability in every stratum), one or two mediators `Z0, Z1` downstream
/// of `X`, and an outcome `Y` whose parents are `X` plus a nonempty subset
/// of the mediators — never the covariate. With `with_adjustment` false the
/// treatment is a root and the empty set is back-door admissible; with it
/// true the returned adjustment set is `{S0}`.
pub fn random_markovian_mediation(seed: u64, with_adjustment: bool) -> MediationSynth {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let x_size = rng.gen_range(2..=3);
    let mut exo = Vec::new();
    let mut equations = Vec::new();

    let s_var = if with_adjustment {
        let size = rng.gen_range(2..=3);
        let u = v("U_S0");
        exo.push((
            u.clone(),
            DomainSpec::new(ordinal_labels(size)).unwrap(),
            positive_marginal(&mut rng, size),
        ));
        let mut table = BTreeMap::new();
        for i in 0..size {
            table.insert(i.to_string(), i.to_string());
        }
        equations.push(EquationSpec {
            child: v("S0"),
            domain: DomainSpec::new(ordinal_labels(size)).unwrap(),
            observable: true,
            endo_parents: vec![],
            exo_parents: vec![u],
            table,
        });
        Some((v("S0"), size))
    } else {
        None
    };

    // Treatment: x = (u_X + parent offset) mod |domain|, a permutation of
    // the noise for each parent value.
    {
        let u = v("U_X");
        exo.push((
            u.clone(),
            DomainSpec::new(ordinal_labels(x_size)).unwrap(),
            positive_marginal(&mut rng, x_size),
        ));
        let (endo_parents, mut parent_labels): (Vec<VariableId>, Vec<Vec<String>>) =
            match &s_var {
                Some((s, s_size)) => (vec![s.clone()], vec![ordinal_labels(*s_size)]),
                None => (vec![], vec![]),
            };
        parent_labels.push(ordinal_labels(x_size));
        let radix = Radix::new(parent_labels.iter().map(|d| d.len()).collect());
        let mut table = BTreeMap::new();
        let mut tuple = Vec::new();
        for ix in 0..radix.len() {
            radix.decode(ix, &mut tuple);
            let key: Vec<&str> = tuple
                .iter()
                .enumerate()
                .map(|(pos, &val)| parent_labels[pos][val].as_str())
                .collect();
            let offset: usize = tuple[..tuple.len() - 1].iter().sum();
            let out = (tuple[tuple.len() - 1] + offset) % x_size;
            table.insert(key.join(","), out.to_string());
        }
        equations.push(EquationSpec {
            child: v("X"),
            domain: DomainSpec::new(ordinal_labels(x_size)).unwrap(),
            observable: true,
            endo_parents,
            exo_parents: vec![u],
            table,
        });
    }

    let mediator_count = rng.gen_range(1..=2);
    let mut mediators: Vec<(VariableId, usize)> = Vec::new();
    for m in 0..mediator_count {
        let name = v(&format!("Z{m}"));
        let size = rng.gen_range(2..=3);
        let u = v(&format!("U_Z{m}"));
        exo.push((
            u.clone(),
            DomainSpec::new(ordinal_labels(2)).unwrap(),
            positive_marginal(&mut rng, 2),
        ));
        let mut endo_parents = vec![(v("X"), x_size)];
        if let Some((s, s_size)) = &s_var {
            if rng.gen_bool(0.6) {
                endo_parents.push((s.clone(), *s_size));
            }
        }
        if m == 1 && rng.gen_bool(0.5) {
            endo_parents.push(mediators[0].clone());
        }
        let mut parent_labels: Vec<Vec<String>> = endo_parents
            .iter()
            .map(|(_, size)| ordinal_labels(*size))
            .collect();
        parent_labels.push(ordinal_labels(2));
        equations.push(EquationSpec {
            child: name.clone(),
            domain: DomainSpec::new(ordinal_labels(size)).unwrap(),
            observable: true,
            endo_parents: endo_parents.iter().map(|(p, _)| p.clone()).collect(),
            exo_parents: vec![u],
            table: random_table(&mut rng, &parent_labels, &ordinal_labels(size)),
        });
        mediators.push((name, size));
    }

    // Outcome: X plus a nonempty mediator subset; never the covariate.
    {
        let size = rng.gen_range(2..=3);
        let u = v("U_Y");
        exo.push((
            u.clone(),
            DomainSpec::new(ordinal_labels(2)).unwrap(),
            positive_marginal(&mut rng, 2),
        ));
        let mut endo_parents = vec![(v("X"), x_size)];
        let mut chosen: Vec<(VariableId, usize)> = mediators
            .iter()
            .filter(|_| rng.gen_bool(0.7))
            .cloned()
            .collect();
        if chosen.is_empty() {
            chosen.push(mediators[0].clone());
        }
        endo_parents.extend(chosen);
        let mut parent_labels: Vec<Vec<String>> = endo_parents
            .iter()
            .map(|(_, s)| ordinal_labels(*s))
            .collect();
        parent_labels.push(ordinal_labels(2));
        equations.push(EquationSpec {
            child: v("Y"),
            domain: DomainSpec::new(ordinal_labels(size)).unwrap(),
            observable: true,
            endo_parents: endo_parents.iter().map(|(p, _)| p.clone()).collect(),
            exo_parents: vec![u],
            table: random_table(&mut rng, &parent_labels, &ordinal_labels(size)),
        });
    }

    let scm = ScmBuilder {
        name: format!("mediation_{seed}"),
        exogenous: ExogenousSpec::Independent(exo),
        equations,
    }
    .build()
    .expect("generated mediation model");

    let adjustment = match s_var {
        Some((s, _)) => vec![s],
        None => vec![],
    };
    // The construction guarantees admissibility; make it loud if a change
    // ever breaks that.
    for z in scm.default_mediators(&v("X"), &v("Y")).unwrap() {
        debug_assert!(scm
            .graph()
            .backdoor_admissible(&v("X"), &z, &adjustment)
            .unwrap());
    }

    MediationSynth {
        scm,
        treatment: v("X"),
        outcome: v("Y"),
        adjustment,
    }
}

/// A table-encoded linear model: binary treatment, one or two mediators,
/// every structural function a small-integer linear combination of its
/// parents, domains sized to the exact achievable sums with matching
/// numeric codes. Total, natural direct, and natural indirect effects obey
/// the additive decomposition on such models.
pub fn random_linear(seed: u64) -> SynthScm {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let two_mediators = rng.gen_bool(0.5);

    // Values each variable can take, as integers.
    let x_values: Vec<i64> = vec![0, 1];
    let coeff = |rng: &mut ChaCha12Rng| rng.gen_range(1..=2) as i64;

    let a = coeff(&mut rng);
    let z0_values: Vec<i64> = achievable(&[(&x_values, a)]);

    let (z1_spec, z1_values) = if two_mediators {
        let d = coeff(&mut rng);
        let e = coeff(&mut rng);
        let values = achievable(&[(&x_values, d), (&z0_values, e)]);
        (Some((d, e)), values)
    } else {
        (None, Vec::new())
    };

    let b = coeff(&mut rng);
    let c0 = coeff(&mut rng);
    let y_terms: Vec<(&Vec<i64>, i64)> = if two_mediators {
        let c1 = coeff(&mut rng);
        vec![(&x_values, b), (&z0_values, c0), (&z1_values, c1)]
    } else {
        vec![(&x_values, b), (&z0_values, c0)]
    };
    let y_values = achievable(&y_terms);
    let y_coeffs: Vec<i64> = y_terms.iter().map(|(_, c)| *c).collect();

    let int_domain = |values: &[i64]| {
        let labels: Vec<String> = values.iter().map(|val| format!("v{val}")).collect();
        let codes: Vec<f64> = values.iter().map(|val| *val as f64).collect();
        DomainSpec::with_codes(labels, codes).unwrap()
    };
    let linear_table = |parent_values: &[&Vec<i64>], coeffs: &[i64]| {
        let radix = Radix::new(parent_values.iter().map(|vs| vs.len()).collect());
        let mut table = BTreeMap::new();
        let mut tuple = Vec::new();
        for ix in 0..radix.len() {
            radix.decode(ix, &mut tuple);
            let key: Vec<String> = tuple
                .iter()
                .enumerate()
                .map(|(pos, &val)| format!("v{}", parent_values[pos][val]))
                .collect();
            let out: i64 = tuple
                .iter()
                .enumerate()
                .map(|(pos, &val)| coeffs[pos] * parent_values[pos][val])
                .sum();
            table.insert(key.join(","), format!("v{out}"));
        }
        table
    };

    let mut equations = vec![
        EquationSpec {
            child: v("X"),
            domain: int_domain(&x_values),
            observable: true,
            endo_parents: vec![],
            exo_parents: vec![],
            table: [("".to_string(), "v0".to_string())].into_iter().collect(),
        },
        EquationSpec {
            child: v("Z0"),
            domain: int_domain(&z0_values),
            observable: true,
            endo_parents: vec![v("X")],
            exo_parents: vec![],
            table: linear_table(&[&x_values], &[a]),
        },
    ];
    if let Some((d, e)) = z1_spec {
        equations.push(EquationSpec {
            child: v("Z1"),
            domain: int_domain(&z1_values),
            observable: true,
            endo_parents: vec![v("X"), v("Z0")],
            exo_parents: vec![],
            table: linear_table(&[&x_values, &z0_values], &[d, e]),
        });
    }
    let y_parents: Vec<VariableId> = if two_mediators {
        vec![v("X"), v("Z0"), v("Z1")]
    } else {
        vec![v("X"), v("Z0")]
    };
    let y_parent_values: Vec<&Vec<i64>> = if two_mediators {
        vec![&x_values, &z0_values, &z1_values]
    } else {
        vec![&x_values, &z0_values]
    };
    equations.push(EquationSpec {
        child: v("Y"),
        domain: int_domain(&y_values),
        observable: true,
        endo_parents: y_parents,
        exo_parents: vec![],
        table: linear_table(&y_parent_values, &y_coeffs),
    });

    let scm = ScmBuilder {
        name: format!("linear_{seed}"),
        exogenous: ExogenousSpec::empty(),
        equations,
    }
    .build()
    .expect("generated linear model");
    SynthScm {
        scm,
        treatment: v("X"),
        outcome: v("Y"),
    }
}

/// All distinct sums `sum_i c_i * v_i` over the parent value grids.
fn achievable(terms: &[(&Vec<i64>, i64)]) -> Vec<i64> {
    let mut sums = vec![0i64];
    for (values, coeff) in terms {
        let mut next = BTreeSet::new();
        for base in &sums {
            for val in values.iter() {
                next.insert(base + coeff * val);
            }
        }
        sums = next.into_iter().collect();
    }
    sums
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_seed_deterministic() {
        let a = random_scm(7, ExoFlavor::CorrelatedJoint);
        let b = random_scm(7, ExoFlavor::CorrelatedJoint);
        let dist_a = a
            .scm
            .exact_distribution(&Default::default(), &[a.outcome.clone()])
            .unwrap();
        let dist_b = b
            .scm
            .exact_distribution(&Default::default(), &[b.outcome.clone()])
            .unwrap();
        assert_eq!(dist_a.assignments(), dist_b.assignments());
    }

    #[test]
    fn random_scm_has_usable_mediators() {
        for seed in 0..30 {
            for flavor in [
                ExoFlavor::Independent,
                ExoFlavor::CorrelatedJoint,
                ExoFlavor::SharedParent,
            ] {
                let s = random_scm(seed, flavor);
                let meds = s.scm.default_mediators(&s.treatment, &s.outcome).unwrap();
                assert!(!meds.is_empty(), "seed {seed} {flavor:?}");
            }
        }
    }

    #[test]
    fn mediation_models_have_positive_treatment_cells() {
        for seed in 0..20 {
            for with_adjustment in [false, true] {
                let m = random_markovian_mediation(seed, with_adjustment);
                assert!(m.scm.is_markovian());
                let x_domain = m.scm.domain_of(&m.treatment).unwrap().labels().to_vec();
                let dist = m
                    .scm
                    .exact_distribution(
                        &Default::default(),
                        &[m.treatment.clone()],
                    )
                    .unwrap();
                for label in x_domain {
                    let p = dist
                        .prob_of(&[(m.treatment.clone(), label.clone())].into_iter().collect())
                        .unwrap();
                    assert!(p > 0.0, "seed {seed}: P(X={label}) = 0");
                }
            }
        }
    }

    #[test]
    fn linear_models_decompose_additively() {
        use crate::effects::{nde_avg, nie_avg, te_avg, OutcomeTarget};
        for seed in 0..10 {
            let m = random_linear(seed);
            let target = OutcomeTarget::coded(m.outcome.clone());
            let te = te_avg(&m.scm, &m.treatment, "v1", "v0", &target).unwrap();
            let nde = nde_avg(&m.scm, &m.treatment, "v1", "v0", None, &target).unwrap();
            let nie = nie_avg(&m.scm, &m.treatment, "v1", "v0", None, &target).unwrap();
            assert!((te - (nde + nie)).abs() < 1e-9, "seed {seed}");
            assert!(te > 0.0, "effects are nonzero by construction");
        }
    }
}
