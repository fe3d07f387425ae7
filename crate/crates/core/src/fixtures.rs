//! Built-in example models, mirrored by the JSON documents under
//! `fixtures/` at the repository root.
//!
//! These are small enough to reason about by hand and are used throughout
//! the test suites:
//!
//! - [`aspirin`] — the treatment/aspirin story: the patient takes aspirin
//!   iff treated and the treatment works only when aspirin is present, so
//!   the natural direct effect vanishes while the controlled one does not.
//! - [`linear`] — a deterministic linear chain `z = x`, `y = x + 2z`.
//! - [`diamond`] — the four-variable path-surgery example
//!   (`X→Z, X→W, Z→W, Z→Y, W→Y`).
//! - [`confounded_mediator`] — `W` confounds mediator and outcome, so
//!   covariate-free experimental identification is badly biased.
//! - [`noisy_mediation`] — a stochastic mediation triangle for estimator
//!   consistency checks.

use std::collections::BTreeMap;

use crate::graph::VariableId;
use crate::scm::{DomainSpec, EquationSpec, ExogenousSpec, Scm, ScmBuilder};

fn v(name: &str) -> VariableId {
    VariableId::new(name).expect("fixture variable name")
}

fn binary() -> DomainSpec<f64> {
    DomainSpec::new(vec!["0".into(), "1".into()]).expect("fixture domain")
}

fn table(entries: &[(&str, &str)]) -> BTreeMap<String, String> {
    entries
        .iter()
        .map(|(k, out)| (k.to_string(), out.to_string()))
        .collect()
}

fn equation(
    child: &str,
    domain: DomainSpec<f64>,
    endo_parents: &[&str],
    exo_parents: &[&str],
    entries: &[(&str, &str)],
) -> EquationSpec<f64> {
    EquationSpec {
        child: v(child),
        domain,
        observable: true,
        endo_parents: endo_parents.iter().map(|p| v(p)).collect(),
        exo_parents: exo_parents.iter().map(|p| v(p)).collect(),
        table: table(entries),
    }
}

pub(crate) fn aspirin_builder() -> ScmBuilder<f64> {
    ScmBuilder {
        name: "aspirin".to_string(),
        exogenous: ExogenousSpec::empty(),
        equations: vec![
            equation("X", binary(), &[], &[], &[("", "0")]),
            equation("Z", binary(), &["X"], &[], &[("0", "0"), ("1", "1")]),
            equation(
                "Y",
                binary(),
                &["X", "Z"],
                &[],
                &[("0,0", "0"), ("0,1", "0"), ("1,0", "0"), ("1,1", "1")],
            ),
        ],
    }
}

/// Treatment/aspirin story: `z = x`, `y = x AND z`, untreated by default.
pub fn aspirin() -> Scm<f64> {
    aspirin_builder().build().expect("aspirin fixture")
}

pub(crate) fn linear_builder() -> ScmBuilder<f64> {
    let y_domain =
        DomainSpec::new(vec!["0".into(), "1".into(), "2".into(), "3".into()]).expect("domain");
    ScmBuilder {
        name: "linear".to_string(),
        exogenous: ExogenousSpec::empty(),
        equations: vec![
            equation("X", binary(), &[], &[], &[("", "0")]),
            equation("Z", binary(), &["X"], &[], &[("0", "0"), ("1", "1")]),
            equation(
                "Y",
                y_domain,
                &["X", "Z"],
                &[],
                &[("0,0", "0"), ("0,1", "2"), ("1,0", "1"), ("1,1", "3")],
            ),
        ],
    }
}

/// Deterministic linear chain: `z = x`, `y = x + 2z`.
pub fn linear() -> Scm<f64> {
    linear_builder().build().expect("linear fixture")
}

pub(crate) fn diamond_builder() -> ScmBuilder<f64> {
    let y_domain =
        DomainSpec::new(vec!["0".into(), "1".into(), "2".into(), "3".into()]).expect("domain");
    ScmBuilder {
        name: "diamond".to_string(),
        exogenous: ExogenousSpec::empty(),
        equations: vec![
            equation("X", binary(), &[], &[], &[("", "0")]),
            equation("Z", binary(), &["X"], &[], &[("0", "0"), ("1", "1")]),
            equation(
                "W",
                binary(),
                &["Z", "X"],
                &[],
                &[("0,0", "0"), ("0,1", "1"), ("1,0", "1"), ("1,1", "1")],
            ),
            equation(
                "Y",
                y_domain,
                &["Z", "W"],
                &[],
                &[("0,0", "0"), ("0,1", "2"), ("1,0", "1"), ("1,1", "3")],
            ),
        ],
    }
}

/// Path-surgery example: `z = x`, `w = z OR x`, `y = z + 2w`.
pub fn diamond() -> Scm<f64> {
    diamond_builder().build().expect("diamond fixture")
}

pub(crate) fn confounded_mediator_builder() -> ScmBuilder<f64> {
    ScmBuilder {
        name: "confounded_mediator".to_string(),
        exogenous: ExogenousSpec::Independent(vec![
            (v("U_X"), binary(), vec![0.5, 0.5]),
            (v("U_W"), binary(), vec![0.5, 0.5]),
        ]),
        equations: vec![
            equation("X", binary(), &[], &["U_X"], &[("0", "0"), ("1", "1")]),
            equation("W", binary(), &[], &["U_W"], &[("0", "0"), ("1", "1")]),
            equation(
                "Z",
                binary(),
                &["X", "W"],
                &[],
                &[("0,0", "0"), ("0,1", "1"), ("1,0", "1"), ("1,1", "0")],
            ),
            equation(
                "Y",
                binary(),
                &["X", "Z", "W"],
                &[],
                &[
                    ("0,0,0", "0"),
                    ("0,0,1", "0"),
                    ("0,1,0", "0"),
                    ("0,1,1", "1"),
                    ("1,0,0", "0"),
                    ("1,0,1", "1"),
                    ("1,1,0", "1"),
                    ("1,1,1", "1"),
                ],
            ),
        ],
    }
}

/// W confounds both the mediator and the outcome: `z = x XOR w` and
/// `y = (x OR z)` when `w = 1`, `(x AND z)` otherwise. Conditioning on W
/// satisfies the experimental criterion; ignoring it biases the
/// covariate-free formula by 0.5.
pub fn confounded_mediator() -> Scm<f64> {
    confounded_mediator_builder()
        .build()
        .expect("confounded mediator fixture")
}

pub(crate) fn noisy_mediation_builder() -> ScmBuilder<f64> {
    ScmBuilder {
        name: "noisy_mediation".to_string(),
        exogenous: ExogenousSpec::Independent(vec![
            (v("U_X"), binary(), vec![0.5, 0.5]),
            (v("U_Z"), binary(), vec![0.8, 0.2]),
            (v("U_Y"), binary(), vec![0.7, 0.3]),
        ]),
        equations: vec![
            equation("X", binary(), &[], &["U_X"], &[("0", "0"), ("1", "1")]),
            equation(
                "Z",
                binary(),
                &["X"],
                &["U_Z"],
                &[("0,0", "0"), ("0,1", "1"), ("1,0", "1"), ("1,1", "0")],
            ),
            equation(
                "Y",
                binary(),
                &["X", "Z"],
                &["U_Y"],
                &[
                    ("0,0,0", "0"),
                    ("0,0,1", "0"),
                    ("0,1,0", "1"),
                    ("0,1,1", "0"),
                    ("1,0,0", "0"),
                    ("1,0,1", "1"),
                    ("1,1,0", "1"),
                    ("1,1,1", "1"),
                ],
            ),
        ],
    }
}

/// Stochastic mediation triangle: `z = x XOR u_z` with P(u_z = 1) = 0.2,
/// and `y = x` when `u_y = 1` (probability 0.3), else `z`.
pub fn noisy_mediation() -> Scm<f64> {
    noisy_mediation_builder()
        .build()
        .expect("noisy mediation fixture")
}

/// All shipped fixtures, for batteries that sweep everything.
pub fn all() -> Vec<Scm<f64>> {
    vec![
        aspirin(),
        linear(),
        diamond(),
        confounded_mediator(),
        noisy_mediation(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_model;

    #[test]
    fn shipped_documents_match_builders() {
        let cases: Vec<(&str, ScmBuilder<f64>)> = vec![
            (
                include_str!("../../../fixtures/aspirin.json"),
                aspirin_builder(),
            ),
            (
                include_str!("../../../fixtures/linear.json"),
                linear_builder(),
            ),
            (
                include_str!("../../../fixtures/diamond.json"),
                diamond_builder(),
            ),
            (
                include_str!("../../../fixtures/confounded_mediator.json"),
                confounded_mediator_builder(),
            ),
            (
                include_str!("../../../fixtures/noisy_mediation.json"),
                noisy_mediation_builder(),
            ),
        ];
        for (text, builder) in cases {
            let doc = parse_model::<f64>(text).unwrap();
            assert_eq!(doc.builder(), &builder, "{}", builder.name);
        }
    }
}
