//! Identification formulas against ground-truth enumeration on random
//! models whose premises are verified graphically.

use pathwise::effects::{nde_avg, nie_avg, OutcomeTarget};
use pathwise::estimand::{
    crosscheck, nde_eq15, nde_eq17, nde_eq8, nie_eq26, nie_eq27, CovariateSpec,
    DistributionProvider, Formula, MediationQuery, PremiseStatus,
};
use pathwise::synth;

fn query_for(m: &synth::MediationSynth, x: &str, x_ref: &str) -> MediationQuery {
    MediationQuery::coded(m.treatment.clone(), x, x_ref, m.outcome.clone())
}

#[test]
fn observational_formulas_match_enumeration_on_markovian_models() {
    for seed in 0..50u64 {
        let with_adjustment = seed % 2 == 1;
        let m = synth::random_markovian_mediation(seed, with_adjustment);
        let provider = DistributionProvider::exact(&m.scm);
        let graph = m.scm.graph();
        let target = OutcomeTarget::coded(m.outcome.clone());
        let labels = m.scm.domain_of(&m.treatment).unwrap().labels().to_vec();
        for (x, x_ref) in [(&labels[1], &labels[0]), (&labels[0], &labels[1])] {
            let query = query_for(&m, x, x_ref);
            let truth = nde_avg(&m.scm, &m.treatment, x, x_ref, None, &target).unwrap();

            let eq15 = nde_eq15(&provider, &query, &m.adjustment, Some(graph)).unwrap();
            assert!(
                (eq15.value - truth).abs() < 1e-9,
                "seed {seed} eq15: {} vs {truth}",
                eq15.value
            );
            assert_eq!(eq15.premises, PremiseStatus::VerifiedByGraph);

            if !with_adjustment {
                // Treatment is a root: the unconfounded simplifications
                // apply, and the indirect formula as well.
                let eq17 = nde_eq17(&provider, &query, Some(graph)).unwrap();
                assert!((eq17.value - truth).abs() < 1e-9, "seed {seed} eq17");
                // The simplification is literally the adjusted formula with
                // an empty set.
                let eq15_empty = nde_eq15(&provider, &query, &[], Some(graph)).unwrap();
                assert_eq!(eq17.value, eq15_empty.value);

                let nie_truth =
                    nie_avg(&m.scm, &m.treatment, x, x_ref, None, &target).unwrap();
                let eq27 = nie_eq27(&provider, &query, Some(graph)).unwrap();
                assert!(
                    (eq27.value - nie_truth).abs() < 1e-9,
                    "seed {seed} eq27: {} vs {nie_truth}",
                    eq27.value
                );
            }
        }
    }
}

#[test]
fn experimental_formulas_match_enumeration() {
    for seed in 0..40u64 {
        let m = synth::random_markovian_mediation(seed.wrapping_add(500), seed % 2 == 0);
        let provider = DistributionProvider::exact(&m.scm);
        let graph = m.scm.graph();
        let target = OutcomeTarget::coded(m.outcome.clone());
        let labels = m.scm.domain_of(&m.treatment).unwrap().labels().to_vec();
        let (x, x_ref) = (labels[1].clone(), labels[0].clone());
        let query = query_for(&m, &x, &x_ref);

        // The outcome's parents are all cut in the doubly-mutilated graph,
        // so the empty covariate set satisfies the criterion here.
        let truth = nde_avg(&m.scm, &m.treatment, &x, &x_ref, None, &target).unwrap();
        let eq8 = nde_eq8(&provider, &query, &[], Some(graph)).unwrap();
        assert!((eq8.value - truth).abs() < 1e-9, "seed {seed} eq8");

        let nie_truth = nie_avg(&m.scm, &m.treatment, &x, &x_ref, None, &target).unwrap();
        let eq26 = nie_eq26(&provider, &query, &[], Some(graph)).unwrap();
        assert!((eq26.value - nie_truth).abs() < 1e-9, "seed {seed} eq26");
    }
}

#[test]
fn crosscheck_passes_where_premises_hold() {
    for seed in 0..20u64 {
        let m = synth::random_markovian_mediation(seed.wrapping_add(900), true);
        let query = query_for(
            &m,
            &m.scm.domain_of(&m.treatment).unwrap().labels()[1].clone(),
            &m.scm.domain_of(&m.treatment).unwrap().labels()[0].clone(),
        );
        let covariates = CovariateSpec {
            w: vec![],
            s: m.adjustment.clone(),
        };
        for formula in [Formula::Eq8, Formula::Eq15, Formula::Eq26] {
            let report = crosscheck(&m.scm, formula, &query, &covariates);
            assert!(
                report.criterion_satisfied,
                "seed {seed} {formula:?}: premises should hold"
            );
            assert!(report.pass, "seed {seed} {formula:?}: {report:?}");
        }
    }
}

#[test]
fn stratum_accounting_is_exhaustive_for_exact_sources() {
    for seed in 0..20u64 {
        let m = synth::random_markovian_mediation(seed.wrapping_add(1300), seed % 2 == 0);
        let provider = DistributionProvider::exact(&m.scm);
        let labels = m.scm.domain_of(&m.treatment).unwrap().labels().to_vec();
        let query = query_for(&m, &labels[1], &labels[0]);
        let results = vec![
            nde_eq8(&provider, &query, &[], None).unwrap(),
            nde_eq15(&provider, &query, &m.adjustment, None).unwrap(),
            nde_eq17(&provider, &query, None).unwrap(),
            nie_eq26(&provider, &query, &[], None).unwrap(),
            nie_eq27(&provider, &query, None).unwrap(),
        ];
        for result in results {
            let total = result.covered_mass + result.skipped_mass;
            assert!(
                (total - 1.0).abs() < 1e-9,
                "seed {seed} {:?}: covered {} + skipped {}",
                result.formula,
                result.covered_mass,
                result.skipped_mass
            );
            for note in &result.skipped_strata {
                assert_eq!(note.weight, 0.0, "skipped strata carry zero mass");
            }
        }
    }
}
