//! The effect-composition identities and path-surgery reductions on
//! randomly generated models, plus the distribution mass properties.

use pathwise::effects::{
    nde_avg, nde_unit, nie_avg, nie_unit, pse_avg, pse_unit, te_avg, te_unit, OutcomeTarget,
};
use pathwise::scm::{PathSubgraph, Regime};
use pathwise::synth::{self, ExoFlavor};
use pathwise::VariableId;

fn value_pairs(scm: &pathwise::Scm, x: &VariableId) -> Vec<(String, String)> {
    let labels = scm.domain_of(x).unwrap().labels().to_vec();
    let mut out = Vec::new();
    for a in &labels {
        for b in &labels {
            out.push((a.clone(), b.clone()));
        }
    }
    out
}

#[test]
fn composition_identities_hold_on_random_models() {
    let flavors = [
        ExoFlavor::Independent,
        ExoFlavor::CorrelatedJoint,
        ExoFlavor::SharedParent,
    ];
    for seed in 0..60u64 {
        let flavor = flavors[(seed % 3) as usize];
        let m = synth::random_scm(seed, flavor);
        let target = OutcomeTarget::coded(m.outcome.clone());
        for (x, x_ref) in value_pairs(&m.scm, &m.treatment) {
            let te = te_avg(&m.scm, &m.treatment, &x, &x_ref, &target).unwrap();
            let nie_f = nie_avg(&m.scm, &m.treatment, &x, &x_ref, None, &target).unwrap();
            let nde_r = nde_avg(&m.scm, &m.treatment, &x_ref, &x, None, &target).unwrap();
            let nde_f = nde_avg(&m.scm, &m.treatment, &x, &x_ref, None, &target).unwrap();
            let nie_r = nie_avg(&m.scm, &m.treatment, &x_ref, &x, None, &target).unwrap();
            assert!(
                (te - (nie_f - nde_r)).abs() < 1e-9,
                "seed {seed} ({x},{x_ref}): te={te} nie_f={nie_f} nde_r={nde_r}"
            );
            assert!(
                (te - (nde_f - nie_r)).abs() < 1e-9,
                "seed {seed} ({x},{x_ref}): te={te} nde_f={nde_f} nie_r={nie_r}"
            );
            // Total-effect reversal antisymmetry.
            let te_rev = te_avg(&m.scm, &m.treatment, &x_ref, &x, &target).unwrap();
            assert_eq!(te, -te_rev);
            if x == x_ref {
                assert_eq!(te, 0.0);
                assert_eq!(nde_f, 0.0);
                assert_eq!(nie_f, 0.0);
            }
        }
    }
}

#[test]
fn surgery_reductions_recover_natural_effects() {
    let flavors = [
        ExoFlavor::Independent,
        ExoFlavor::CorrelatedJoint,
        ExoFlavor::SharedParent,
    ];
    for seed in 0..45u64 {
        let flavor = flavors[(seed % 3) as usize];
        let m = synth::random_scm(seed.wrapping_add(1000), flavor);
        let target = OutcomeTarget::coded(m.outcome.clone());
        let endo_edges: Vec<(VariableId, VariableId)> = m
            .scm
            .graph()
            .edges()
            .into_iter()
            .filter(|(from, _)| m.scm.is_endogenous(from))
            .collect();
        let direct: PathSubgraph = PathSubgraph::new(
            endo_edges
                .iter()
                .filter(|(f, t)| f == &m.treatment && t == &m.outcome)
                .cloned(),
        );
        let indirect = PathSubgraph::new(
            endo_edges
                .iter()
                .filter(|(f, t)| !(f == &m.treatment && t == &m.outcome))
                .cloned(),
        );
        let everything = PathSubgraph::new(endo_edges.iter().cloned());

        let labels = m.scm.domain_of(&m.treatment).unwrap().labels().to_vec();
        let (x, x_ref) = (labels[1].clone(), labels[0].clone());

        let nde = nde_avg(&m.scm, &m.treatment, &x, &x_ref, None, &target).unwrap();
        let nie = nie_avg(&m.scm, &m.treatment, &x, &x_ref, None, &target).unwrap();
        let te = te_avg(&m.scm, &m.treatment, &x, &x_ref, &target).unwrap();

        let pse_direct = pse_avg(&m.scm, &direct, &m.treatment, &x, &x_ref, &target).unwrap();
        let pse_indirect =
            pse_avg(&m.scm, &indirect, &m.treatment, &x, &x_ref, &target).unwrap();
        let pse_all = pse_avg(&m.scm, &everything, &m.treatment, &x, &x_ref, &target).unwrap();
        assert!((pse_direct - nde).abs() < 1e-9, "seed {seed}: direct reduction");
        assert!((pse_indirect - nie).abs() < 1e-9, "seed {seed}: indirect reduction");
        assert!((pse_all - te).abs() < 1e-9, "seed {seed}: full-graph reduction");

        // Unit level as well.
        for (unit, _) in m.scm.enumerate_units() {
            let nde_u =
                nde_unit(&m.scm, &unit, &m.treatment, &x, &x_ref, None, &target).unwrap();
            let nie_u =
                nie_unit(&m.scm, &unit, &m.treatment, &x, &x_ref, None, &target).unwrap();
            let te_u = te_unit(&m.scm, &unit, &m.treatment, &x, &x_ref, &target).unwrap();
            let d = pse_unit(&m.scm, &unit, &direct, &m.treatment, &x, &x_ref, &target).unwrap();
            let i =
                pse_unit(&m.scm, &unit, &indirect, &m.treatment, &x, &x_ref, &target).unwrap();
            let a =
                pse_unit(&m.scm, &unit, &everything, &m.treatment, &x, &x_ref, &target).unwrap();
            assert!((d - nde_u).abs() < 1e-9);
            assert!((i - nie_u).abs() < 1e-9);
            assert!((a - te_u).abs() < 1e-9);
        }
    }
}

#[test]
fn averages_are_unit_expectations() {
    for seed in 0..12u64 {
        let m = synth::random_scm(seed.wrapping_add(7000), ExoFlavor::CorrelatedJoint);
        let target = OutcomeTarget::coded(m.outcome.clone());
        let labels = m.scm.domain_of(&m.treatment).unwrap().labels().to_vec();
        let (x, x_ref) = (labels[1].as_str(), labels[0].as_str());
        let mut nde_sum = 0.0;
        let mut nie_sum = 0.0;
        let mut te_sum = 0.0;
        for (unit, p) in m.scm.enumerate_units() {
            nde_sum +=
                p * nde_unit(&m.scm, &unit, &m.treatment, x, x_ref, None, &target).unwrap();
            nie_sum +=
                p * nie_unit(&m.scm, &unit, &m.treatment, x, x_ref, None, &target).unwrap();
            te_sum += p * te_unit(&m.scm, &unit, &m.treatment, x, x_ref, &target).unwrap();
        }
        assert!(
            (nde_sum - nde_avg(&m.scm, &m.treatment, x, x_ref, None, &target).unwrap()).abs()
                < 1e-12
        );
        assert!(
            (nie_sum - nie_avg(&m.scm, &m.treatment, x, x_ref, None, &target).unwrap()).abs()
                < 1e-12
        );
        assert!((te_sum - te_avg(&m.scm, &m.treatment, x, x_ref, &target).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn linear_models_are_additive() {
    for seed in 0..20u64 {
        let m = synth::random_linear(seed);
        let target = OutcomeTarget::coded(m.outcome.clone());
        let te = te_avg(&m.scm, &m.treatment, "v1", "v0", &target).unwrap();
        let nde = nde_avg(&m.scm, &m.treatment, "v1", "v0", None, &target).unwrap();
        let nie = nie_avg(&m.scm, &m.treatment, "v1", "v0", None, &target).unwrap();
        assert!((te - (nde + nie)).abs() < 1e-9, "seed {seed}");
    }
}

#[test]
fn exact_distributions_carry_unit_mass_under_every_regime() {
    for seed in 0..15u64 {
        let m = synth::random_scm(seed.wrapping_add(4000), ExoFlavor::Independent);
        let endo = m.scm.endogenous().to_vec();
        let mut regimes = vec![Regime::observational()];
        for var in &endo {
            let label = m.scm.domain_of(var).unwrap().labels()[0].clone();
            regimes.push(Regime::observational().fix(var.clone(), label));
        }
        for regime in regimes {
            let dist = m.scm.exact_distribution(&regime, &endo).unwrap();
            let mass = dist.total_mass();
            assert!((mass - 1.0).abs() < 1e-9, "seed {seed}: mass {mass}");
            for (_, p) in dist.support() {
                assert!(p >= 0.0);
            }
        }
    }
}

#[test]
fn surgery_on_full_graph_preserves_evaluation() {
    for seed in 0..10u64 {
        let m = synth::random_scm(seed.wrapping_add(9000), ExoFlavor::SharedParent);
        let endo_edges = m
            .scm
            .graph()
            .edges()
            .into_iter()
            .filter(|(from, _)| m.scm.is_endogenous(from));
        let g = PathSubgraph::new(endo_edges);
        let labels = m.scm.domain_of(&m.treatment).unwrap().labels().to_vec();
        let surgered = m
            .scm
            .surgery(&g, &m.treatment, &labels[1], &labels[0])
            .unwrap();
        let mut regimes = vec![Regime::observational()];
        for var in m.scm.endogenous() {
            let label = m.scm.domain_of(var).unwrap().labels()[0].clone();
            regimes.push(Regime::observational().fix(var.clone(), label));
        }
        for (unit, _) in m.scm.enumerate_units() {
            for regime in &regimes {
                assert_eq!(
                    surgered.evaluate(&unit, regime).unwrap(),
                    m.scm.evaluate(&unit, regime).unwrap()
                );
            }
        }
    }
}
