//! The model document format.
//!
//! A model is a single JSON document with three top-level keys:
//!
//! ```json
//! {
//!   "name": "example",
//!   "exogenous": [
//!     {"name": "U", "domain": ["0", "1"], "marginal": [0.5, 0.5]}
//!   ],
//!   "variables": [
//!     {"name": "X", "domain": ["0", "1"], "observable": true,
//!      "parents": [], "exo_parents": ["U"],
//!      "table": {"0": "0", "1": "1"}}
//!   ]
//! }
//! ```
//!
//! `exogenous` is either a list of independent variables with explicit
//! marginals, or an object `{"variables": [...], "joint": {...}}` whose
//! joint table maps comma-joined label tuples to probabilities (missing
//! tuples are zero). Each `table` maps a comma-joined parent tuple —
//! endogenous parents first, then exogenous, in declared order — to an
//! output label; a variable with no parents uses the single key `""`.
//! Every domain may carry an optional `numeric_code` map from labels to
//! numbers (defaulting to ordinal positions). Unknown keys are rejected.
//!
//! Parsing tracks line/column spans, so both syntax and semantic errors
//! point into the source text. The parser is strict JSON with one
//! deliberate tightening: duplicate object keys are rejected.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::graph::VariableId;
use crate::scm::{DomainSpec, EquationSpec, ExogenousSpec, Scm, ScmBuilder};
use crate::Real;

mod json;

use json::{JsonValue, Spanned};

/// A position in the source document (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// A semantic problem, located in the source.
#[derive(Debug, Clone)]
pub struct LocatedError {
    pub span: Span,
    pub message: String,
}

impl fmt::Display for LocatedError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.span, self.message)
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("{span}: syntax error: {message}")]
    Syntax { span: Span, message: String },
    #[error("{}", format_semantic(.0))]
    Semantic(Vec<LocatedError>),
}

fn format_semantic(errors: &[LocatedError]) -> String {
    let lines: Vec<String> = errors.iter().map(|e| e.to_string()).collect();
    lines.join("\n")
}

/// A parsed and validated model document.
#[derive(Debug, Clone)]
pub struct ModelDocument<T: Real> {
    source: String,
    builder: ScmBuilder<T>,
    scm: Scm<T>,
}

impl<T: Real> ModelDocument<T> {
    pub fn scm(&self) -> &Scm<T> {
        &self.scm
    }

    pub fn into_scm(self) -> Scm<T> {
        self.scm
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn builder(&self) -> &ScmBuilder<T> {
        &self.builder
    }

    /// Renders the canonical form of the document: fixed key order, two-
    /// space indent, sorted tables. Parsing the output reproduces the same
    /// model.
    pub fn canonical_text(&self) -> String {
        canonical_document(&self.builder)
    }
}

/// Renders a model declaration in the canonical document form.
pub fn canonical_document<T: Real>(builder: &ScmBuilder<T>) -> String {
    print_canonical(builder)
}

/// Parses a model document, attaching line/column to every error.
pub fn parse_model<T: Real>(text: &str) -> Result<ModelDocument<T>, ModelError> {
    let root = json::parse(text).map_err(|e| ModelError::Syntax {
        span: e.span,
        message: e.message,
    })?;
    let mut cx = Extractor::new();
    let builder = cx.extract_document(&root)?;
    if !cx.errors.is_empty() {
        return Err(ModelError::Semantic(cx.errors));
    }
    // Structural checks passed; run the full model validation and map each
    // violation back to the span of the entity it names.
    let report = builder.validate();
    if !report.is_valid() {
        let errors = report
            .violations
            .into_iter()
            .map(|violation| LocatedError {
                span: cx
                    .spans
                    .get(&violation.location)
                    .copied()
                    .unwrap_or(root.span_for_error()),
                message: format!("{}: {}", violation.location, violation.message),
            })
            .collect();
        return Err(ModelError::Semantic(errors));
    }
    let scm = builder.clone().build().expect("validated");
    Ok(ModelDocument {
        source: text.to_string(),
        builder,
        scm,
    })
}

struct Extractor {
    errors: Vec<LocatedError>,
    /// Maps validation-report locations (variable names, section names) to
    /// source spans.
    spans: BTreeMap<String, Span>,
}

impl Extractor {
    fn new() -> Self {
        Extractor {
            errors: Vec::new(),
            spans: BTreeMap::new(),
        }
    }

    fn err(&mut self, span: Span, message: impl Into<String>) {
        self.errors.push(LocatedError {
            span,
            message: message.into(),
        });
    }

    fn extract_document<T: Real>(
        &mut self,
        root: &Spanned,
    ) -> Result<ScmBuilder<T>, ModelError> {
        let fields = self.object(root, "model document")?;
        let mut name = None;
        let mut exogenous = None;
        let mut variables = None;
        for (key, value) in fields {
            match key.text.as_str() {
                "name" => name = Some(self.string(value, "name")),
                "exogenous" => exogenous = Some(value),
                "variables" => variables = Some(value),
                other => {
                    self.err(key.span, format!("unknown key {other:?}"));
                }
            }
        }
        let name = match name {
            Some(Some(n)) => n,
            Some(None) => String::new(),
            None => {
                self.err(root.span_for_error(), "missing key \"name\"");
                String::new()
            }
        };
        self.spans.insert("graph".to_string(), root.span_for_error());
        let exo = match exogenous {
            Some(value) => self.extract_exogenous(value),
            None => {
                self.err(root.span_for_error(), "missing key \"exogenous\"");
                ExogenousSpec::empty()
            }
        };
        let equations = match variables {
            Some(value) => self.extract_variables(value),
            None => {
                self.err(root.span_for_error(), "missing key \"variables\"");
                Vec::new()
            }
        };
        Ok(ScmBuilder {
            name,
            exogenous: exo,
            equations,
        })
    }

    fn extract_exogenous<T: Real>(&mut self, value: &Spanned) -> ExogenousSpec<T> {
        self.spans
            .entry("exogenous".to_string())
            .or_insert(value.span_for_error());
        match &value.value {
            JsonValue::Array(entries) => {
                let mut list = Vec::new();
                for entry in entries {
                    if let Some(var) = self.extract_exo_entry(entry, true) {
                        list.push((var.0, var.1, var.2.unwrap_or_default()));
                    }
                }
                ExogenousSpec::Independent(list)
            }
            JsonValue::Object(_) => {
                let fields = match self.object(value, "exogenous") {
                    Ok(f) => f,
                    Err(_) => return ExogenousSpec::empty(),
                };
                let mut vars = Vec::new();
                let mut table = BTreeMap::new();
                for (key, field) in fields {
                    match key.text.as_str() {
                        "variables" => {
                            if let JsonValue::Array(entries) = &field.value {
                                for entry in entries {
                                    if let Some((var, domain, _)) =
                                        self.extract_exo_entry::<T>(entry, false)
                                    {
                                        vars.push((var, domain));
                                    }
                                }
                            } else {
                                self.err(field.span_for_error(), "\"variables\" must be a list");
                            }
                        }
                        "joint" => {
                            self.spans
                                .insert("exogenous.joint".to_string(), field.span_for_error());
                            if let JsonValue::Object(pairs) = &field.value {
                                for (k, v) in pairs {
                                    if let Some(p) = self.number::<T>(v, "probability") {
                                        table.insert(k.text.clone(), p);
                                    }
                                }
                            } else {
                                self.err(field.span_for_error(), "\"joint\" must be an object");
                            }
                        }
                        other => self.err(key.span, format!("unknown key {other:?}")),
                    }
                }
                ExogenousSpec::Joint { vars, table }
            }
            _ => {
                self.err(
                    value.span_for_error(),
                    "\"exogenous\" must be a list or an object with \"variables\" and \"joint\"",
                );
                ExogenousSpec::empty()
            }
        }
    }

    /// Parses one exogenous declaration; `with_marginal` selects the
    /// independent-list form.
    fn extract_exo_entry<T: Real>(
        &mut self,
        entry: &Spanned,
        with_marginal: bool,
    ) -> Option<(VariableId, DomainSpec<T>, Option<Vec<T>>)> {
        let fields = self.object(entry, "exogenous variable").ok()?;
        let mut name = None;
        let mut domain = None;
        let mut marginal = None;
        let mut numeric_code = None;
        for (key, value) in fields {
            match key.text.as_str() {
                "name" => name = self.string(value, "name").map(|n| (n, value.span_for_error())),
                "domain" => domain = self.string_list(value, "domain"),
                "marginal" if with_marginal => {
                    marginal = self.number_list::<T>(value, "marginal")
                }
                "numeric_code" => numeric_code = self.code_map::<T>(value),
                other => self.err(key.span, format!("unknown key {other:?}")),
            }
        }
        let (name, name_span) = match name {
            Some(n) => n,
            None => {
                self.err(entry.span_for_error(), "exogenous variable needs \"name\"");
                return None;
            }
        };
        let var = match VariableId::new(&name) {
            Ok(v) => v,
            Err(e) => {
                self.err(name_span, e.to_string());
                return None;
            }
        };
        self.record_name_span(&name, name_span);
        let labels = match domain {
            Some(d) => d,
            None => {
                self.err(entry.span_for_error(), format!("{name}: missing \"domain\""));
                return None;
            }
        };
        let domain = match self.build_domain(&labels, numeric_code, name_span) {
            Some(d) => d,
            None => return None,
        };
        if with_marginal && marginal.is_none() {
            self.err(
                entry.span_for_error(),
                format!("{name}: independent exogenous variables need \"marginal\""),
            );
            return None;
        }
        Some((var, domain, marginal))
    }

    fn extract_variables<T: Real>(&mut self, value: &Spanned) -> Vec<EquationSpec<T>> {
        let entries = match &value.value {
            JsonValue::Array(entries) => entries,
            _ => {
                self.err(value.span_for_error(), "\"variables\" must be a list");
                return Vec::new();
            }
        };
        let mut out = Vec::new();
        for entry in entries {
            let fields = match self.object(entry, "variable") {
                Ok(f) => f,
                Err(_) => continue,
            };
            let mut name = None;
            let mut domain = None;
            let mut observable = true;
            let mut parents = Vec::new();
            let mut exo_parents = Vec::new();
            let mut table = None;
            let mut numeric_code = None;
            for (key, field) in fields {
                match key.text.as_str() {
                    "name" => {
                        name = self
                            .string(field, "name")
                            .map(|n| (n, field.span_for_error()))
                    }
                    "domain" => domain = self.string_list(field, "domain"),
                    "observable" => match &field.value {
                        JsonValue::Bool(b) => observable = *b,
                        _ => self.err(field.span_for_error(), "\"observable\" must be a boolean"),
                    },
                    "parents" => {
                        parents = self.name_list(field).unwrap_or_default();
                    }
                    "exo_parents" => {
                        exo_parents = self.name_list(field).unwrap_or_default();
                    }
                    "table" => {
                        let mut t = BTreeMap::new();
                        match &field.value {
                            JsonValue::Object(pairs) => {
                                for (k, v) in pairs {
                                    if let Some(out_label) = self.string(v, "table output") {
                                        t.insert(k.text.clone(), out_label);
                                    }
                                }
                                table = Some(t);
                            }
                            _ => self.err(field.span_for_error(), "\"table\" must be an object"),
                        }
                    }
                    "numeric_code" => numeric_code = self.code_map::<T>(field),
                    other => self.err(key.span, format!("unknown key {other:?}")),
                }
            }
            let (name, name_span) = match name {
                Some(n) => n,
                None => {
                    self.err(entry.span_for_error(), "variable needs \"name\"");
                    continue;
                }
            };
            let child = match VariableId::new(&name) {
                Ok(v) => v,
                Err(e) => {
                    self.err(name_span, e.to_string());
                    continue;
                }
            };
            self.record_name_span(&name, name_span);
            let labels = match domain {
                Some(d) => d,
                None => {
                    self.err(name_span, format!("{name}: missing \"domain\""));
                    continue;
                }
            };
            let domain = match self.build_domain::<T>(&labels, numeric_code, name_span) {
                Some(d) => d,
                None => continue,
            };
            let table = match table {
                Some(t) => t,
                None => {
                    self.err(name_span, format!("{name}: missing \"table\""));
                    continue;
                }
            };
            let to_vars = |list: Vec<(String, Span)>, cx: &mut Self| {
                let mut out = Vec::new();
                for (n, span) in list {
                    match VariableId::new(&n) {
                        Ok(v) => out.push(v),
                        Err(e) => cx.err(span, e.to_string()),
                    }
                }
                out
            };
            out.push(EquationSpec {
                child,
                domain,
                observable,
                endo_parents: to_vars(parents.clone(), self),
                exo_parents: to_vars(exo_parents.clone(), self),
                table,
            });
        }
        out
    }

    fn record_name_span(&mut self, name: &str, span: Span) {
        if let Some(first) = self.spans.get(name) {
            self.err(
                span,
                format!("duplicate variable name {name:?} (first declared at {first})"),
            );
        } else {
            self.spans.insert(name.to_string(), span);
        }
    }

    fn build_domain<T: Real>(
        &mut self,
        labels: &[(String, Span)],
        numeric_code: Option<Vec<(String, T, Span)>>,
        at: Span,
    ) -> Option<DomainSpec<T>> {
        let plain: Vec<String> = labels.iter().map(|(l, _)| l.clone()).collect();
        let base = match DomainSpec::<T>::new(plain.clone()) {
            Ok(d) => d,
            Err(msg) => {
                self.err(at, msg);
                return None;
            }
        };
        match numeric_code {
            None => Some(base),
            Some(codes) => {
                let mut values: Vec<T> = (0..plain.len()).map(|i| T::of(i as f64)).collect();
                let mut ok = true;
                for (label, code, span) in codes {
                    match plain.iter().position(|l| l == &label) {
                        Some(ix) => values[ix] = code,
                        None => {
                            self.err(
                                span,
                                format!("numeric_code names {label:?}, not a domain value"),
                            );
                            ok = false;
                        }
                    }
                }
                if !ok {
                    return None;
                }
                match DomainSpec::with_codes(plain, values) {
                    Ok(d) => Some(d),
                    Err(msg) => {
                        self.err(at, msg);
                        None
                    }
                }
            }
        }
    }

    fn object<'j>(
        &mut self,
        value: &'j Spanned,
        what: &str,
    ) -> Result<&'j [(json::Key, Spanned)], ModelError> {
        match &value.value {
            JsonValue::Object(fields) => Ok(fields),
            _ => {
                self.err(value.span_for_error(), format!("{what} must be an object"));
                Err(ModelError::Semantic(std::mem::take(&mut self.errors)))
            }
        }
    }

    fn string(&mut self, value: &Spanned, what: &str) -> Option<String> {
        match &value.value {
            JsonValue::String(s) => Some(s.clone()),
            _ => {
                self.err(value.span_for_error(), format!("{what} must be a string"));
                None
            }
        }
    }

    fn string_list(&mut self, value: &Spanned, what: &str) -> Option<Vec<(String, Span)>> {
        match &value.value {
            JsonValue::Array(items) => {
                let mut out = Vec::new();
                for item in items {
                    match &item.value {
                        JsonValue::String(s) => out.push((s.clone(), item.span_for_error())),
                        _ => self.err(
                            item.span_for_error(),
                            format!("{what} entries must be strings"),
                        ),
                    }
                }
                Some(out)
            }
            _ => {
                self.err(value.span_for_error(), format!("\"{what}\" must be a list"));
                None
            }
        }
    }

    fn name_list(&mut self, value: &Spanned) -> Option<Vec<(String, Span)>> {
        self.string_list(value, "parent")
    }

    fn number<T: Real>(&mut self, value: &Spanned, what: &str) -> Option<T> {
        match &value.value {
            JsonValue::Number(n) => Some(T::of(*n)),
            _ => {
                self.err(value.span_for_error(), format!("{what} must be a number"));
                None
            }
        }
    }

    fn number_list<T: Real>(&mut self, value: &Spanned, what: &str) -> Option<Vec<T>> {
        match &value.value {
            JsonValue::Array(items) => {
                let mut out = Vec::new();
                for item in items {
                    out.extend(self.number::<T>(item, what));
                }
                Some(out)
            }
            _ => {
                self.err(value.span_for_error(), format!("\"{what}\" must be a list"));
                None
            }
        }
    }

    fn code_map<T: Real>(&mut self, value: &Spanned) -> Option<Vec<(String, T, Span)>> {
        match &value.value {
            JsonValue::Object(pairs) => {
                let mut out = Vec::new();
                for (k, v) in pairs {
                    if let Some(n) = self.number::<T>(v, "numeric code") {
                        out.push((k.text.clone(), n, k.span));
                    }
                }
                Some(out)
            }
            _ => {
                self.err(
                    value.span_for_error(),
                    "\"numeric_code\" must be an object",
                );
                None
            }
        }
    }
}

// ---- canonical printing ----

fn print_canonical<T: Real>(builder: &ScmBuilder<T>) -> String {
    let mut out = String::new();
    out.push_str("{\n");
    out.push_str(&format!("  \"name\": {},\n", json_string(&builder.name)));
    match &builder.exogenous {
        ExogenousSpec::Independent(list) => {
            out.push_str("  \"exogenous\": [");
            for (i, (var, domain, marginal)) in list.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str("\n    {");
                out.push_str(&format!("\"name\": {}, ", json_string(var.as_str())));
                out.push_str(&format!("\"domain\": {}, ", label_list(domain.labels())));
                out.push_str(&format!(
                    "\"marginal\": [{}]",
                    marginal
                        .iter()
                        .map(|p| format_number(*p))
                        .collect::<Vec<_>>()
                        .join(", ")
                ));
                if let Some(codes) = nondefault_codes(domain) {
                    out.push_str(&format!(", \"numeric_code\": {codes}"));
                }
                out.push('}');
            }
            if list.is_empty() {
                out.push_str("],\n");
            } else {
                out.push_str("\n  ],\n");
            }
        }
        ExogenousSpec::Joint { vars, table } => {
            out.push_str("  \"exogenous\": {\n    \"variables\": [");
            for (i, (var, domain)) in vars.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str("\n      {");
                out.push_str(&format!("\"name\": {}, ", json_string(var.as_str())));
                out.push_str(&format!("\"domain\": {}", label_list(domain.labels())));
                if let Some(codes) = nondefault_codes(domain) {
                    out.push_str(&format!(", \"numeric_code\": {codes}"));
                }
                out.push('}');
            }
            out.push_str("\n    ],\n    \"joint\": {");
            for (i, (key, p)) in table.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&format!(
                    "\n      {}: {}",
                    json_string(key),
                    format_number(*p)
                ));
            }
            out.push_str("\n    }\n  },\n");
        }
    }
    out.push_str("  \"variables\": [");
    for (i, eq) in builder.equations.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str("\n    {\n");
        out.push_str(&format!("      \"name\": {},\n", json_string(eq.child.as_str())));
        out.push_str(&format!(
            "      \"domain\": {},\n",
            label_list(eq.domain.labels())
        ));
        out.push_str(&format!("      \"observable\": {},\n", eq.observable));
        out.push_str(&format!(
            "      \"parents\": {},\n",
            name_list_json(&eq.endo_parents)
        ));
        out.push_str(&format!(
            "      \"exo_parents\": {},\n",
            name_list_json(&eq.exo_parents)
        ));
        out.push_str("      \"table\": {");
        for (j, (key, label)) in eq.table.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&format!(
                "\n        {}: {}",
                json_string(key),
                json_string(label)
            ));
        }
        out.push_str("\n      }");
        if let Some(codes) = nondefault_codes(&eq.domain) {
            out.push_str(&format!(",\n      \"numeric_code\": {codes}"));
        }
        out.push_str("\n    }");
    }
    out.push_str("\n  ]\n}\n");
    out
}

fn nondefault_codes<T: Real>(domain: &DomainSpec<T>) -> Option<String> {
    if domain.has_default_codes() {
        return None;
    }
    let parts: Vec<String> = domain
        .labels()
        .iter()
        .zip(domain.codes())
        .map(|(l, c)| format!("{}: {}", json_string(l), format_number(*c)))
        .collect();
    Some(format!("{{{}}}", parts.join(", ")))
}

fn format_number<T: Real>(value: T) -> String {
    // Shortest round-trip decimal; keeps probabilities exactly as written
    // for any value that itself came from a decimal literal.
    let v = value.to_f64().expect("finite");
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{v:.1}")
    } else {
        format!("{v}")
    }
}

fn label_list(labels: &[String]) -> String {
    let parts: Vec<String> = labels.iter().map(|l| json_string(l)).collect();
    format!("[{}]", parts.join(", "))
}

fn name_list_json(names: &[VariableId]) -> String {
    let parts: Vec<String> = names.iter().map(|n| json_string(n.as_str())).collect();
    format!("[{}]", parts.join(", "))
}

fn json_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    const LINEAR_DOC: &str = r#"{
  "name": "linear",
  "exogenous": [],
  "variables": [
    {"name": "X", "domain": ["0", "1"], "observable": true,
     "parents": [], "exo_parents": [], "table": {"": "0"}},
    {"name": "Z", "domain": ["0", "1"], "observable": true,
     "parents": ["X"], "exo_parents": [], "table": {"0": "0", "1": "1"}},
    {"name": "Y", "domain": ["0", "1", "2", "3"], "observable": true,
     "parents": ["X", "Z"], "exo_parents": [],
     "table": {"0,0": "0", "0,1": "2", "1,0": "1", "1,1": "3"}}
  ]
}"#;

    #[test]
    fn parses_linear_document() {
        let doc = parse_model::<f64>(LINEAR_DOC).unwrap();
        assert_eq!(doc.scm().name(), "linear");
        assert_eq!(doc.builder(), &fixtures::linear_builder());
    }

    #[test]
    fn canonical_round_trip() {
        let doc = parse_model::<f64>(LINEAR_DOC).unwrap();
        let printed = doc.canonical_text();
        let reparsed = parse_model::<f64>(&printed).unwrap();
        assert_eq!(doc.builder(), reparsed.builder());
        // The canonical form is a fixed point.
        assert_eq!(printed, reparsed.canonical_text());
    }

    #[test]
    fn syntax_error_carries_position() {
        let err = parse_model::<f64>("{\n  \"name\": \"x\",,\n}").unwrap_err();
        match err {
            ModelError::Syntax { span, .. } => {
                assert_eq!(span.line, 2);
                assert_eq!(span.col, 15);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_probability_mass_is_located() {
        let doc = r#"{
  "name": "broken",
  "exogenous": [
    {"name": "U", "domain": ["0", "1"], "marginal": [0.5, 0.4]}
  ],
  "variables": [
    {"name": "A", "domain": ["0", "1"], "parents": [], "exo_parents": ["U"],
     "table": {"0": "0", "1": "1"}}
  ]
}"#;
        let err = parse_model::<f64>(doc).unwrap_err();
        match err {
            ModelError::Semantic(errors) => {
                assert_eq!(errors.len(), 1);
                assert!(errors[0].message.contains("exogenous mass 0.9"), "{errors:?}");
                assert_eq!(errors[0].span.line, 4);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_names_report_both_occurrences() {
        let doc = r#"{
  "name": "dup",
  "exogenous": [],
  "variables": [
    {"name": "A", "domain": ["0"], "parents": [], "exo_parents": [], "table": {"": "0"}},
    {"name": "A", "domain": ["0"], "parents": [], "exo_parents": [], "table": {"": "0"}}
  ]
}"#;
        let err = parse_model::<f64>(doc).unwrap_err();
        match err {
            ModelError::Semantic(errors) => {
                let msg = &errors[0].message;
                assert!(msg.contains("duplicate variable name \"A\""), "{msg}");
                assert!(msg.contains("first declared at 5:"), "{msg}");
                assert_eq!(errors[0].span.line, 6);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        let doc = r#"{
  "name": "x",
  "exogenous": [],
  "variables": [],
  "extra": 1
}"#;
        let err = parse_model::<f64>(doc).unwrap_err();
        match err {
            ModelError::Semantic(errors) => {
                assert!(errors[0].message.contains("unknown key \"extra\""));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn joint_exogenous_form_parses() {
        let doc = r#"{
  "name": "corr",
  "exogenous": {
    "variables": [
      {"name": "U1", "domain": ["0", "1"]},
      {"name": "U2", "domain": ["0", "1"]}
    ],
    "joint": {"0,0": 0.5, "1,1": 0.5}
  },
  "variables": [
    {"name": "A", "domain": ["0", "1"], "parents": [], "exo_parents": ["U1"],
     "table": {"0": "0", "1": "1"}}
  ]
}"#;
        let parsed = parse_model::<f64>(doc).unwrap();
        assert!(!parsed.scm().is_markovian());
        let units: Vec<_> = parsed.scm().enumerate_units().collect();
        assert_eq!(units.len(), 2);
    }

    #[test]
    fn numeric_code_applies() {
        let doc = r#"{
  "name": "coded",
  "exogenous": [],
  "variables": [
    {"name": "A", "domain": ["low", "high"], "parents": [], "exo_parents": [],
     "table": {"": "high"}, "numeric_code": {"low": 0.0, "high": 2.5}}
  ]
}"#;
        let parsed = parse_model::<f64>(doc).unwrap();
        let v = VariableId::new("A").unwrap();
        let domain = parsed.scm().domain_of(&v).unwrap();
        assert_eq!(domain.code(1), 2.5);
        // Non-default codes survive the canonical printer.
        let reparsed = parse_model::<f64>(&parsed.canonical_text()).unwrap();
        assert_eq!(reparsed.scm().domain_of(&v).unwrap().code(1), 2.5);
    }
}
