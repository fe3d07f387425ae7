//! Round-trip stability of the model document format.

use std::collections::BTreeMap;

use proptest::prelude::*;

use pathwise::graph::VariableId;
use pathwise::model::{canonical_document, parse_model};
use pathwise::scm::{DomainSpec, EquationSpec, ExogenousSpec, ScmBuilder};

#[test]
fn shipped_documents_are_canonical_fixed_points() {
    for path in [
        "../../fixtures/aspirin.json",
        "../../fixtures/linear.json",
        "../../fixtures/diamond.json",
        "../../fixtures/confounded_mediator.json",
        "../../fixtures/noisy_mediation.json",
    ] {
        let text = std::fs::read_to_string(path).unwrap();
        let doc = parse_model::<f64>(&text).unwrap();
        let printed = doc.canonical_text();
        let reparsed = parse_model::<f64>(&printed).unwrap();
        assert_eq!(doc.builder(), reparsed.builder(), "{path}");
        assert_eq!(printed, reparsed.canonical_text(), "{path}");
    }
}

fn v(name: &str) -> VariableId {
    VariableId::new(name).unwrap()
}

/// A random two-equation model: one exogenous coin, a root variable driven
/// by it, and a child with an optional non-default numeric coding.
fn arbitrary_builder() -> impl Strategy<Value = ScmBuilder<f64>> {
    (
        2..=3usize,
        2..=4usize,
        proptest::collection::vec(1..1000u32, 8),
        proptest::collection::vec(0.0..10.0f64, 4),
        any::<bool>(),
    )
        .prop_map(|(exo_size, b_size, picks, codes, with_codes)| {
            let exo_labels: Vec<String> = (0..exo_size).map(|i| format!("e{i}")).collect();
            let weights: Vec<f64> = (0..exo_size)
                .map(|i| f64::from(picks[i] % 97 + 1))
                .collect();
            let total: f64 = weights.iter().sum();
            let marginal: Vec<f64> = weights.iter().map(|w| w / total).collect();

            let a_labels = vec!["off".to_string(), "on".to_string()];
            let mut a_table = BTreeMap::new();
            for (i, label) in exo_labels.iter().enumerate() {
                let out = &a_labels[(picks[i % picks.len()] as usize) % 2];
                a_table.insert(label.clone(), out.clone());
            }

            let b_labels: Vec<String> = (0..b_size).map(|i| format!("b{i}")).collect();
            let b_domain = if with_codes {
                DomainSpec::with_codes(
                    b_labels.clone(),
                    (0..b_size).map(|i| codes[i % codes.len()]).collect(),
                )
                .unwrap()
            } else {
                DomainSpec::new(b_labels.clone()).unwrap()
            };
            let mut b_table = BTreeMap::new();
            for (i, label) in a_labels.iter().enumerate() {
                let out = &b_labels[(picks[(i + 3) % picks.len()] as usize) % b_size];
                b_table.insert(label.clone(), out.clone());
            }

            ScmBuilder {
                name: "generated".to_string(),
                exogenous: ExogenousSpec::Independent(vec![(
                    v("E"),
                    DomainSpec::new(exo_labels).unwrap(),
                    marginal,
                )]),
                equations: vec![
                    EquationSpec {
                        child: v("A"),
                        domain: DomainSpec::new(a_labels).unwrap(),
                        observable: true,
                        endo_parents: vec![],
                        exo_parents: vec![v("E")],
                        table: a_table,
                    },
                    EquationSpec {
                        child: v("B"),
                        domain: b_domain,
                        observable: false,
                        endo_parents: vec![v("A")],
                        exo_parents: vec![],
                        table: b_table,
                    },
                ],
            }
        })
}

proptest! {
    #[test]
    fn print_parse_round_trip(builder in arbitrary_builder()) {
        let printed = canonical_document(&builder);
        let parsed = parse_model::<f64>(&printed).unwrap();
        prop_assert_eq!(parsed.builder(), &builder);
        // Printing again is byte-identical.
        prop_assert_eq!(parsed.canonical_text(), printed);
    }
}
