//! Command-line front end: model files in, deterministic reports out.
//!
//! Subcommands: `effects` (ground-truth effect queries), `identify`
//! (graphical criteria and witness search), `estimate` (identification
//! formulas on exact or sampled data), `sample` (seeded dataset files),
//! and `check` (the estimand-vs-ground-truth battery).
//!
//! Exit codes: 0 on success, 1 on any validation error (bad flags, bad
//! model, bad data), 2 when a criterion or estimand check fails.

mod battery;
mod output;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use pathwise::effects::{self, EffectKind, EffectQuery, OutcomeTarget};
use pathwise::estimand::{
    self, DistributionProvider, EstimandError, Formula, MediationQuery, Smoothing,
};
use pathwise::graph::{
    BarConvention, ConditionEntry, ConditionReport, Corollary1Mutilations, CovariateQuad,
    GraphError, MutilationSpec, SearchMode, VariableId, Witness,
};
use pathwise::model::parse_model;
use pathwise::scm::{Assignment, Dataset, PathSubgraph, RegimeDecl, ScmError};
use pathwise::Scm;

use output::{Format, Report};

#[derive(Parser)]
#[command(name = "pathwise", version, about = "Counterfactual mediation analysis over discrete structural causal models", disable_help_subcommand = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute an effect by ground-truth enumeration.
    Effects(EffectsArgs),
    /// Check a graphical identification criterion or search for witnesses.
    Identify(IdentifyArgs),
    /// Evaluate an identification formula on exact or sampled data.
    Estimate(EstimateArgs),
    /// Draw a seeded dataset and write it with its regime sidecar.
    Sample(SampleArgs),
    /// Run the estimand-vs-ground-truth battery over a model.
    Check(CheckArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Text,
    Machine,
}

#[derive(Args)]
struct EffectsArgs {
    /// Model document path.
    #[arg(long)]
    model: PathBuf,
    /// Effect kind: cde, nde, nie, te, or pse.
    #[arg(long)]
    kind: String,
    /// Treatment variable.
    #[arg(long = "X")]
    treatment: String,
    /// Treated value.
    #[arg(long = "x")]
    x: String,
    /// Reference value.
    #[arg(long = "xref")]
    x_ref: String,
    /// Outcome variable.
    #[arg(long = "Y")]
    outcome: String,
    /// Mediator set override (comma-separated); defaults to the outcome's
    /// parents excluding the treatment.
    #[arg(long = "Z", value_delimiter = ',')]
    mediators: Option<Vec<String>>,
    /// Mediator setting for controlled effects, e.g. Z=1,W=0.
    #[arg(long = "z-setting")]
    z_setting: Option<String>,
    /// Path subgraph for pse, e.g. X->Z,Z->Y.
    #[arg(long)]
    edges: Option<String>,
    /// Exogenous assignment for a unit-level query, e.g. U_X=1,U_W=0.
    #[arg(long)]
    unit: Option<String>,
    /// Report the probability of this outcome label instead of the numeric
    /// coding.
    #[arg(long)]
    indicator: Option<String>,
    #[arg(long, value_enum, default_value = "text")]
    format: FormatArg,
}

#[derive(Args)]
struct IdentifyArgs {
    #[arg(long)]
    model: PathBuf,
    /// Criterion: theorem1 (experimental) or corollary1 (nonexperimental).
    #[arg(long)]
    mode: String,
    #[arg(long = "X")]
    treatment: String,
    /// Mediator set (comma-separated).
    #[arg(long = "Z", value_delimiter = ',')]
    mediators: Vec<String>,
    #[arg(long = "Y")]
    outcome: String,
    /// Covariates for the experimental criterion.
    #[arg(long = "W", value_delimiter = ',')]
    covariates: Option<Vec<String>>,
    /// The four covariate sets of the nonexperimental criterion.
    #[arg(long = "W0", value_delimiter = ',')]
    w0: Option<Vec<String>>,
    #[arg(long = "W1", value_delimiter = ',')]
    w1: Option<Vec<String>>,
    #[arg(long = "W2", value_delimiter = ',')]
    w2: Option<Vec<String>>,
    #[arg(long = "W3", value_delimiter = ',')]
    w3: Option<Vec<String>>,
    /// Search for the smallest covariate sets instead of checking given ones.
    #[arg(long = "witness-search")]
    witness_search: bool,
    /// Reading of the barred subscripts: printed or backdoor.
    #[arg(long, default_value = "printed")]
    convention: String,
    #[arg(long, value_enum, default_value = "text")]
    format: FormatArg,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    model: PathBuf,
    /// Identification formula: eq8, eq15, eq17, eq26, or eq27.
    #[arg(long)]
    formula: String,
    /// Distribution source: exact or dataset.
    #[arg(long)]
    provider: String,
    /// Dataset files (comma-separated); each needs a .regime sidecar.
    #[arg(long, value_delimiter = ',')]
    data: Option<Vec<PathBuf>>,
    #[arg(long = "X")]
    treatment: String,
    #[arg(long = "x")]
    x: String,
    #[arg(long = "xref")]
    x_ref: String,
    #[arg(long = "Y")]
    outcome: String,
    #[arg(long = "Z", value_delimiter = ',')]
    mediators: Option<Vec<String>>,
    /// Covariate set for the experimental formulas.
    #[arg(long = "W", value_delimiter = ',')]
    covariates: Option<Vec<String>>,
    /// Back-door adjustment set for eq15.
    #[arg(long = "S", value_delimiter = ',')]
    adjustment: Option<Vec<String>>,
    #[arg(long)]
    indicator: Option<String>,
    /// Skip the graphical premise checks; the result is labeled
    /// "unverified premises".
    #[arg(long = "assume-premises")]
    assume_premises: bool,
    /// Empirical cell smoothing: none or add-one.
    #[arg(long, default_value = "none")]
    smoothing: String,
    #[arg(long, value_enum, default_value = "text")]
    format: FormatArg,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    model: PathBuf,
    /// Number of rows.
    #[arg(long)]
    n: usize,
    #[arg(long)]
    seed: u64,
    /// Sampling regime: observational, do:VAR=value[,...], or
    /// randomized:VAR[,...].
    #[arg(long, default_value = "observational")]
    regime: String,
    /// Output path; the regime sidecar is written next to it.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    format: FormatArg,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    format: FormatArg,
}

/// Failures that map to exit codes.
enum CliError {
    /// Bad input of any sort: exit 1.
    Validation(String),
    /// A criterion or estimand check failed: exit 2.
    Failure(String),
}

impl CliError {
    fn validation(err: impl std::fmt::Display) -> CliError {
        CliError::Validation(err.to_string())
    }
}

impl From<ScmError> for CliError {
    fn from(err: ScmError) -> Self {
        CliError::Validation(err.to_string())
    }
}

impl From<effects::EffectError> for CliError {
    fn from(err: effects::EffectError) -> Self {
        CliError::Validation(err.to_string())
    }
}

impl From<GraphError> for CliError {
    fn from(err: GraphError) -> Self {
        match err {
            // Violated criterion preconditions are criterion failures.
            GraphError::DescendantInSet { .. } => CliError::Failure(err.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<EstimandError> for CliError {
    fn from(err: EstimandError) -> Self {
        match err {
            EstimandError::CriterionViolated(_) | EstimandError::MissingRegime(_) => {
                CliError::Failure(err.to_string())
            }
            EstimandError::Graph(g) => g.into(),
            other => CliError::Validation(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests are successes; everything else is
            // input validation.
            if err.use_stderr() {
                eprint!("{err}");
                return ExitCode::from(1);
            }
            print!("{err}");
            return ExitCode::SUCCESS;
        }
    };
    let outcome = match cli.command {
        Command::Effects(args) => cmd_effects(args),
        Command::Identify(args) => cmd_identify(args),
        Command::Estimate(args) => cmd_estimate(args),
        Command::Sample(args) => cmd_sample(args),
        Command::Check(args) => cmd_check(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Failure(msg)) => {
            eprintln!("failed: {msg}");
            ExitCode::from(2)
        }
    }
}

fn load_model(path: &Path) -> Result<Scm, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let doc = parse_model::<f64>(&text)
        .map_err(|e| CliError::Validation(format!("{}:{e}", path.display())))?;
    Ok(doc.into_scm())
}

fn var(name: &str) -> Result<VariableId, CliError> {
    VariableId::new(name).map_err(CliError::validation)
}

fn var_list(names: &[String]) -> Result<Vec<VariableId>, CliError> {
    names
        .iter()
        .filter(|n| !n.is_empty())
        .map(|n| var(n))
        .collect()
}

/// Parses `A=1,B=0` (an empty string is the empty assignment).
fn parse_assignment(text: &str) -> Result<Assignment, CliError> {
    let mut out = Assignment::new();
    for pair in text.split(',').filter(|p| !p.is_empty()) {
        let (name, value) = pair
            .split_once('=')
            .ok_or_else(|| CliError::Validation(format!("expected NAME=value, found {pair:?}")))?;
        out.insert(var(name)?, value.to_string());
    }
    Ok(out)
}

/// Parses `A->B,C->D`.
fn parse_edges(text: &str) -> Result<PathSubgraph, CliError> {
    let mut edges = Vec::new();
    for pair in text.split(',').filter(|p| !p.is_empty()) {
        let (from, to) = pair
            .split_once("->")
            .ok_or_else(|| CliError::Validation(format!("expected FROM->TO, found {pair:?}")))?;
        edges.push((var(from)?, var(to)?));
    }
    Ok(PathSubgraph::new(edges))
}

fn outcome_target(name: &str, indicator: &Option<String>) -> Result<OutcomeTarget, CliError> {
    let variable = var(name)?;
    Ok(match indicator {
        Some(label) => OutcomeTarget::indicator(variable, label.clone()),
        None => OutcomeTarget::coded(variable),
    })
}

fn cmd_effects(args: EffectsArgs) -> Result<u8, CliError> {
    let scm = load_model(&args.model)?;
    let kind = match args.kind.as_str() {
        "cde" => EffectKind::Cde,
        "nde" => EffectKind::Nde,
        "nie" => EffectKind::Nie,
        "te" => EffectKind::Te,
        "pse" => EffectKind::Pse,
        other => {
            return Err(CliError::Validation(format!(
                "unknown effect kind {other:?} (expected cde, nde, nie, te, or pse)"
            )))
        }
    };
    let query = EffectQuery {
        kind,
        treatment: var(&args.treatment)?,
        x: args.x.clone(),
        x_ref: args.x_ref.clone(),
        outcome: outcome_target(&args.outcome, &args.indicator)?,
        mediators: match &args.mediators {
            Some(names) => Some(var_list(names)?),
            None => None,
        },
        setting: match &args.z_setting {
            Some(text) => Some(parse_assignment(text)?),
            None => None,
        },
        subgraph: match &args.edges {
            Some(text) => Some(parse_edges(text)?),
            None => None,
        },
        unit: match &args.unit {
            Some(text) => Some(parse_assignment(text)?),
            None => None,
        },
    };
    let report = effects::run_query(&scm, &query)?;
    Report::new("effects", Format::from(args.format))
        .emit(&report, &output::render_effects(scm.name(), &report));
    Ok(0)
}

fn parse_convention(text: &str) -> Result<BarConvention, CliError> {
    match text {
        "printed" => Ok(BarConvention::Printed),
        "backdoor" => Ok(BarConvention::BackdoorStyle),
        other => Err(CliError::Validation(format!(
            "unknown convention {other:?} (expected printed or backdoor)"
        ))),
    }
}

fn cmd_identify(args: IdentifyArgs) -> Result<u8, CliError> {
    let scm = load_model(&args.model)?;
    let graph = scm.graph();
    let treatment = var(&args.treatment)?;
    let outcome = var(&args.outcome)?;
    let mediators = var_list(&args.mediators)?;
    if mediators.is_empty() {
        return Err(CliError::Validation(
            "identify needs at least one mediator (--Z)".to_string(),
        ));
    }
    let convention = parse_convention(&args.convention)?;
    let format = Format::from(args.format);
    let report = Report::new("identify", format);

    if args.witness_search {
        let mode = match args.mode.as_str() {
            "theorem1" => SearchMode::Theorem1,
            "corollary1" => SearchMode::Corollary1(convention),
            other => {
                return Err(CliError::Validation(format!(
                    "unknown mode {other:?} (expected theorem1 or corollary1)"
                )))
            }
        };
        let observed = scm.observable_variables();
        let witness = graph.search_witnesses(&treatment, &mediators, &outcome, &observed, mode)?;
        return match witness {
            Some(witness) => {
                report.emit(&witness, &output::render_witness(&witness));
                Ok(0)
            }
            None => {
                report.emit(
                    &Option::<Witness>::None,
                    "witness: none (no covariate set satisfies the criterion)\n",
                );
                Ok(2)
            }
        };
    }

    let condition_report = match args.mode.as_str() {
        "theorem1" => {
            let covariates = match &args.covariates {
                Some(names) => var_list(names)?,
                None => Vec::new(),
            };
            let mut sources = vec![treatment.clone()];
            sources.extend(mediators.iter().cloned());
            let satisfied = graph.check_experimental_criterion(
                &treatment,
                &mediators,
                &outcome,
                &covariates,
            )?;
            let premise = format!(
                "{} _||_ {} | {}",
                outcome.as_str(),
                output::set_names(&mediators),
                output::set_names(&covariates),
            );
            ConditionReport {
                conditions: vec![ConditionEntry {
                    label: "experimental".to_string(),
                    mutilation: Some(MutilationSpec::outgoing(sources)),
                    premise,
                    satisfied,
                }],
                satisfied,
            }
        }
        "corollary1" => {
            let quad = CovariateQuad {
                w0: var_list(args.w0.as_deref().unwrap_or(&[]))?,
                w1: var_list(args.w1.as_deref().unwrap_or(&[]))?,
                w2: var_list(args.w2.as_deref().unwrap_or(&[]))?,
                w3: var_list(args.w3.as_deref().unwrap_or(&[]))?,
            };
            let muts = Corollary1Mutilations::with_convention(&treatment, &mediators, convention);
            graph.check_corollary1(&treatment, &mediators, &outcome, &quad, &muts)?
        }
        other => {
            return Err(CliError::Validation(format!(
                "unknown mode {other:?} (expected theorem1 or corollary1)"
            )))
        }
    };

    report.emit(
        &condition_report,
        &output::render_conditions(&condition_report),
    );
    Ok(if condition_report.satisfied { 0 } else { 2 })
}

fn parse_formula(text: &str) -> Result<Formula, CliError> {
    match text {
        "eq8" => Ok(Formula::Eq8),
        "eq15" => Ok(Formula::Eq15),
        "eq17" => Ok(Formula::Eq17),
        "eq26" => Ok(Formula::Eq26),
        "eq27" => Ok(Formula::Eq27),
        other => Err(CliError::Validation(format!(
            "unknown formula {other:?} (expected eq8, eq15, eq17, eq26, or eq27)"
        ))),
    }
}

fn read_datasets(scm: &Scm, paths: &[PathBuf]) -> Result<Vec<Dataset>, CliError> {
    let mut out = Vec::new();
    for path in paths {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        let sidecar = PathBuf::from(format!("{}.regime", path.display()));
        let regime_text = fs::read_to_string(&sidecar)
            .map_err(|e| CliError::Validation(format!("{}: {e}", sidecar.display())))?;
        let dataset = Dataset::read(scm, &text, &regime_text)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        out.push(dataset);
    }
    Ok(out)
}

fn cmd_estimate(args: EstimateArgs) -> Result<u8, CliError> {
    let scm = load_model(&args.model)?;
    let formula = parse_formula(&args.formula)?;
    let smoothing = match args.smoothing.as_str() {
        "none" => Smoothing::None,
        "add-one" => Smoothing::AddOne,
        other => {
            return Err(CliError::Validation(format!(
                "unknown smoothing {other:?} (expected none or add-one)"
            )))
        }
    };

    let query = MediationQuery {
        treatment: var(&args.treatment)?,
        x: args.x.clone(),
        x_ref: args.x_ref.clone(),
        outcome: outcome_target(&args.outcome, &args.indicator)?,
        mediators: match &args.mediators {
            Some(names) => Some(var_list(names)?),
            None => None,
        },
    };
    let covariates = match &args.covariates {
        Some(names) => var_list(names)?,
        None => Vec::new(),
    };
    let adjustment = match &args.adjustment {
        Some(names) => var_list(names)?,
        None => Vec::new(),
    };
    let graph = if args.assume_premises {
        None
    } else {
        Some(scm.graph())
    };

    let datasets;
    let provider = match args.provider.as_str() {
        "exact" => DistributionProvider::exact(&scm),
        "dataset" => {
            let paths = args.data.as_deref().unwrap_or(&[]);
            if paths.is_empty() {
                return Err(CliError::Validation(
                    "--provider dataset needs --data".to_string(),
                ));
            }
            datasets = read_datasets(&scm, paths)?;
            if formula.is_experimental() {
                DistributionProvider::experimental(&scm, &datasets)
            } else {
                if datasets.len() != 1 {
                    return Err(CliError::Validation(format!(
                        "{} expects exactly one observational dataset",
                        formula.name()
                    )));
                }
                DistributionProvider::observational(&scm, &datasets[0])
            }
        }
        other => {
            return Err(CliError::Validation(format!(
                "unknown provider {other:?} (expected exact or dataset)"
            )))
        }
    }
    .with_smoothing(smoothing);

    let result = match formula {
        Formula::Eq8 => estimand::nde_eq8(&provider, &query, &covariates, graph),
        Formula::Eq15 => estimand::nde_eq15(&provider, &query, &adjustment, graph),
        Formula::Eq17 => estimand::nde_eq17(&provider, &query, graph),
        Formula::Eq26 => estimand::nie_eq26(&provider, &query, &covariates, graph),
        Formula::Eq27 => estimand::nie_eq27(&provider, &query, graph),
    }?;

    Report::new("estimate", Format::from(args.format))
        .emit(&result, &output::render_estimand(scm.name(), &result));
    Ok(0)
}

fn cmd_sample(args: SampleArgs) -> Result<u8, CliError> {
    let scm = load_model(&args.model)?;
    let decl = RegimeDecl::parse(&args.regime).map_err(CliError::validation)?;
    let dataset = scm.sample(args.n, args.seed, &decl)?;
    fs::write(&args.out, dataset.to_text())
        .map_err(|e| CliError::Validation(format!("{}: {e}", args.out.display())))?;
    let sidecar = PathBuf::from(format!("{}.regime", args.out.display()));
    fs::write(&sidecar, dataset.regime_text())
        .map_err(|e| CliError::Validation(format!("{}: {e}", sidecar.display())))?;

    #[derive(serde::Serialize)]
    struct SampleSummary<'a> {
        model: &'a str,
        rows: usize,
        seed: u64,
        regime: String,
        data: String,
        sidecar: String,
    }
    let summary = SampleSummary {
        model: scm.name(),
        rows: args.n,
        seed: args.seed,
        regime: decl.to_decl_string(),
        data: args.out.display().to_string(),
        sidecar: sidecar.display().to_string(),
    };
    let text = format!(
        "sampled {} rows from {} (seed {}, regime {})\n  data: {}\n  sidecar: {}\n",
        summary.rows, summary.model, summary.seed, summary.regime, summary.data, summary.sidecar,
    );
    Report::new("sample", Format::from(args.format)).emit(&summary, &text);
    Ok(0)
}

fn cmd_check(args: CheckArgs) -> Result<u8, CliError> {
    let scm = load_model(&args.model)?;
    let battery = battery::run(&scm);
    Report::new("check", Format::from(args.format))
        .emit(&battery, &output::render_battery(scm.name(), &battery));
    Ok(if battery.failed == 0 { 0 } else { 2 })
}

/// Observable candidate pool minus the query variables.
fn candidate_pool(scm: &Scm, exclude: &[&VariableId]) -> BTreeSet<VariableId> {
    scm.observable_variables()
        .into_iter()
        .filter(|v| !exclude.contains(&v))
        .collect()
}
