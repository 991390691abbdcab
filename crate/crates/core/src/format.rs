//! TOML documents for scenarios, behaviors, quantum setups and inequalities.
//!
//! Every document carries a top-level `kind` (`scenario`, `behavior`,
//! `setup` or `inequality`). Scenarios are written as an `outputs` table,
//! one row per party giving the output count of each input. Floats are
//! emitted with 17 significant digits so that parse and emit round-trip
//! bit-exactly.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::functional::{BellFunctional, Provenance};
use crate::quantum::{BellSetup, CMatrix, MeasurementSet, QuantumState};
use crate::scenario::{Behavior, Scenario, DEFAULT_TOL};

#[derive(Debug, Clone, PartialEq)]
pub enum Document {
    Scenario(Scenario),
    Behavior(Behavior),
    Setup(BellSetup),
    Inequality(BellFunctional),
}

impl Document {
    pub fn kind(&self) -> &'static str {
        match self {
            Document::Scenario(_) => "scenario",
            Document::Behavior(_) => "behavior",
            Document::Setup(_) => "setup",
            Document::Inequality(_) => "inequality",
        }
    }
}

#[derive(Deserialize)]
struct Header {
    kind: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    #[allow(dead_code)]
    kind: String,
    outputs: Vec<Vec<usize>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BehaviorDoc {
    #[allow(dead_code)]
    kind: String,
    outputs: Vec<Vec<usize>>,
    probs: Vec<f64>,
    tol: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InequalityDoc {
    #[allow(dead_code)]
    kind: String,
    outputs: Vec<Vec<usize>>,
    coeffs: Vec<f64>,
    local_bound: f64,
    provenance: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SetupDoc {
    #[allow(dead_code)]
    kind: String,
    dims: [usize; 2],
    state: Vec<[f64; 2]>,
    alice: Vec<InputDoc>,
    bob: Vec<InputDoc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InputDoc {
    effects: Vec<Vec<[f64; 2]>>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn grammar<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| Error::Parse {
        line: e.span().map_or(1, |s| line_of(text, s.start)),
        message: e.message().trim().to_string(),
    })
}

fn in_field(field: &str) -> impl FnOnce(Error) -> Error + '_ {
    move |e| Error::InField {
        field: field.to_string(),
        source: Box::new(e),
    }
}

fn matrix(field: &str, d: usize, entries: &[[f64; 2]]) -> Result<CMatrix> {
    let data = entries.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
    CMatrix::from_vec(d, data).map_err(in_field(field))
}

fn measurements(party: &str, d: usize, inputs: &[InputDoc]) -> Result<MeasurementSet> {
    let settings = inputs
        .iter()
        .enumerate()
        .map(|(x, input)| {
            input
                .effects
                .iter()
                .enumerate()
                .map(|(a, e)| matrix(&format!("{party}[{x}].effects[{a}]"), d, e))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    MeasurementSet::new(d, settings).map_err(in_field(party))
}

/// Parses a document, detecting its kind from the `kind` field.
pub fn parse_document(text: &str) -> Result<Document> {
    let header: Header = grammar(text)?;
    match header.kind.as_str() {
        "scenario" => {
            let doc: ScenarioDoc = grammar(text)?;
            Ok(Document::Scenario(
                Scenario::new(doc.outputs).map_err(in_field("outputs"))?,
            ))
        }
        "behavior" => {
            let doc: BehaviorDoc = grammar(text)?;
            let scenario = Scenario::new(doc.outputs).map_err(in_field("outputs"))?;
            let tol = doc.tol.unwrap_or(DEFAULT_TOL);
            if !(0.0..1.0).contains(&tol) {
                return Err(in_field("tol")(Error::Precondition(format!(
                    "tolerance {tol} is outside [0, 1)"
                ))));
            }
            Ok(Document::Behavior(
                Behavior::new(scenario, doc.probs, tol).map_err(in_field("probs"))?,
            ))
        }
        "inequality" => {
            let doc: InequalityDoc = grammar(text)?;
            let scenario = Scenario::new(doc.outputs).map_err(in_field("outputs"))?;
            if doc.coeffs.len() != scenario.dim() {
                return Err(in_field("coeffs")(Error::WrongLength {
                    expected: scenario.dim(),
                    got: doc.coeffs.len(),
                }));
            }
            let mut f = BellFunctional::with_stored_bound(scenario, doc.coeffs, doc.local_bound)
                .map_err(in_field("local_bound"))?;
            if let Some(p) = doc.provenance {
                let p = Provenance::parse(&p).ok_or_else(|| {
                    in_field("provenance")(Error::UnknownName(p.clone()))
                })?;
                f = f.with_provenance(p);
            }
            Ok(Document::Inequality(f))
        }
        "setup" => {
            let doc: SetupDoc = grammar(text)?;
            let [da, db] = doc.dims;
            let rho = matrix("state", da * db, &doc.state)?;
            let state = QuantumState::new((da, db), rho).map_err(in_field("state"))?;
            let alice = measurements("alice", da, &doc.alice)?;
            let bob = measurements("bob", db, &doc.bob)?;
            Ok(Document::Setup(BellSetup::new(state, alice, bob).map_err(in_field("dims"))?))
        }
        other => Err(in_field("kind")(Error::UnknownName(other.to_string()))),
    }
}

pub fn read_document(path: &Path) -> Result<Document> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_document(&text)
}

/// 17 significant digits, valid as a TOML float.
pub fn float(v: f64) -> String {
    format!("{v:.16e}")
}

fn float_list(values: &[f64]) -> String {
    let items: Vec<String> = values.iter().map(|&v| format!("  {},\n", float(v))).collect();
    format!("[\n{}]", items.concat())
}

fn complex_list(values: &[Complex64]) -> String {
    let items: Vec<String> = values
        .iter()
        .map(|z| format!("  [{}, {}],\n", float(z.re), float(z.im)))
        .collect();
    format!("[\n{}]", items.concat())
}

fn outputs_line(scenario: &Scenario) -> String {
    let rows: Vec<String> = scenario
        .output_table()
        .iter()
        .map(|row| format!("[{}]", row.iter().map(usize::to_string).collect::<Vec<_>>().join(", ")))
        .collect();
    format!("outputs = [{}]\n", rows.join(", "))
}

pub fn emit_document(doc: &Document) -> String {
    let mut out = format!("kind = \"{}\"\n", doc.kind());
    match doc {
        Document::Scenario(s) => out.push_str(&outputs_line(s)),
        Document::Behavior(b) => {
            out.push_str(&outputs_line(b.scenario()));
            writeln!(out, "probs = {}", float_list(b.probs())).unwrap();
        }
        Document::Inequality(f) => {
            out.push_str(&outputs_line(f.scenario()));
            writeln!(out, "coeffs = {}", float_list(f.coeffs())).unwrap();
            writeln!(out, "local_bound = {}", float(f.local_bound())).unwrap();
            if let Some(p) = f.provenance() {
                writeln!(out, "provenance = \"{}\"", p.as_str()).unwrap();
            }
        }
        Document::Setup(s) => {
            let (da, db) = s.state().dims();
            writeln!(out, "dims = [{da}, {db}]").unwrap();
            writeln!(out, "state = {}", complex_list(s.state().rho().data())).unwrap();
            for (party, mset) in [("alice", s.alice()), ("bob", s.bob())] {
                for effects in mset.settings() {
                    writeln!(out, "\n[[{party}]]\neffects = [").unwrap();
                    for m in effects {
                        let body = complex_list(m.data()).replace('\n', "\n  ");
                        writeln!(out, "  {body},").unwrap();
                    }
                    out.push_str("]\n");
                }
            }
        }
    }
    out
}
