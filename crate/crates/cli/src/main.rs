//! `bellbox`: classify black-box behaviors, derive Bell inequalities and
//! simulate quantum setups from the command line.

mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use bellbox::analysis::{
    chsh_value, classify_with, derive_critical_inequality, efficiency_threshold, membership_with,
    visibility_threshold, Classification, Membership, MembershipOptions, NonlocalWitness,
    ThresholdResult,
};
use bellbox::facets::is_positivity;
use bellbox::format::{emit_document, read_document, Document};
use bellbox::quantum::{behavior_from_setup, named_setup, random_setup, BellSetup};
use bellbox::scenario::{named_behavior, no_signalling_defect, NoSignallingReport};
use bellbox::{
    enumerate_facets, Behavior, BellFunctional, DeterministicStrategy, Error, ErrorClass,
    FacetCaps, LocalModel, Result, Scenario,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use report::{num, nums, Report};

#[derive(Parser, Debug)]
#[command(name = "bellbox", version, about = "Local-polytope analysis of black-box Bell scenarios")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Args, Debug, Clone)]
struct Global {
    /// Decision tolerance for no-signalling and violation checks.
    #[arg(long, global = true, env = "BELLBOX_TOL", default_value_t = 1e-9)]
    tol: f64,
    /// Strategy cap for membership, vertex cap for facet enumeration.
    #[arg(long, global = true)]
    cap: Option<u64>,
    /// Seed for random setups.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Text,
    Structured,
}

/// Inputs are document paths, or `@name` for a catalog entry such as
/// `@pr_box`, `@singlet_chsh` or `@werner(0.5)`.
#[derive(Subcommand, Debug)]
enum Verb {
    /// Parse a document and check its invariants.
    Validate {
        input: String,
        /// Write the normalized document here.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Signalling, weakly nonlocal or local, with a witness.
    Classify { input: String },
    /// Local-polytope membership by linear programming.
    Membership { input: String },
    /// Derive a violated Bell inequality from an infeasibility certificate.
    DeriveInequality {
        input: String,
        /// Also write the inequality document here.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Enumerate all facets of the local polytope of a scenario.
    Facets { input: String },
    /// CHSH value of a (2,2,2) behavior.
    Chsh { input: String },
    /// Evaluate the behavior of a quantum setup.
    Quantum {
        /// Setup document or `@name`; omit with `--random`.
        input: Option<String>,
        /// Draw a random setup from `--seed`.
        #[arg(long)]
        random: bool,
        #[arg(long, value_delimiter = ',', default_values_t = [2, 2])]
        dims: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [2, 2])]
        inputs: Vec<usize>,
        /// Detector efficiency; adds a no-click outcome per input.
        #[arg(long)]
        efficiency: Option<f64>,
        /// Write the behavior document here.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Write the setup document here.
        #[arg(long)]
        setup_output: Option<PathBuf>,
    },
    /// Critical visibility or detector efficiency by bisection.
    Threshold {
        #[arg(value_enum)]
        parameter: Parameter,
        input: String,
        /// Noise behavior for visibility (default: uniform).
        #[arg(long)]
        noise: Option<String>,
        /// Bracket width (default 1e-6 for visibility, 1e-4 for efficiency).
        #[arg(long)]
        precision: Option<f64>,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Parameter {
    Visibility,
    Efficiency,
}

fn load(input: &str) -> Result<Document> {
    match input.strip_prefix('@') {
        Some(name) => match named_behavior(name, None) {
            Ok(b) => Ok(Document::Behavior(b)),
            Err(Error::UnknownName(_)) => Ok(Document::Setup(named_setup(name, None)?)),
            Err(e) => Err(e),
        },
        None => read_document(&PathBuf::from(input)),
    }
}

fn behavior_of(doc: Document) -> Result<Behavior> {
    match doc {
        Document::Behavior(b) => Ok(b),
        Document::Setup(s) => behavior_from_setup(&s),
        other => Err(Error::Precondition(format!(
            "expected a behavior or setup document, got a {} document",
            other.kind()
        ))),
    }
}

fn setup_of(doc: Document) -> Result<BellSetup> {
    match doc {
        Document::Setup(s) => Ok(s),
        other => Err(Error::Precondition(format!(
            "expected a setup document, got a {} document",
            other.kind()
        ))),
    }
}

fn scenario_of(doc: &Document) -> Scenario {
    match doc {
        Document::Scenario(s) => s.clone(),
        Document::Behavior(b) => b.scenario().clone(),
        Document::Setup(s) => s.scenario(),
        Document::Inequality(f) => f.scenario().clone(),
    }
}

fn write_document(path: &PathBuf, doc: &Document) -> Result<()> {
    std::fs::write(path, emit_document(doc)).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn scenario_json(s: &Scenario) -> Value {
    json!({ "outputs": s.output_table(), "dim": s.dim() })
}

fn functional_json(f: &BellFunctional) -> Value {
    json!({
        "coeffs": nums(f.coeffs()),
        "local_bound": num(f.local_bound()),
        "maximizer": f.maximizer(),
        "provenance": f.provenance().map(|p| p.as_str()),
    })
}

fn model_json(m: &LocalModel, behavior: &Behavior) -> Result<Value> {
    let strategies = m
        .weights()
        .iter()
        .map(|&(i, w)| {
            let s = DeterministicStrategy::from_index(m.scenario(), i)?;
            Ok(json!({ "index": i, "weight": num(w), "assignment": s.assignment() }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(json!({
        "strategies": strategies,
        "reproduction_error": num(m.behavior()?.max_abs_diff(behavior)),
    }))
}

fn witness_json(w: &NonlocalWitness) -> Value {
    json!({
        "inequality": functional_json(&w.functional),
        "value": num(w.value),
        "violation": num(w.violation),
        "refined_to_facet": w.refined,
    })
}

fn signalling_json(r: &NoSignallingReport) -> Value {
    json!({
        "max_defect": num(r.max_defect),
        "worst_party": r.worst_party,
        "worst_marginal": r.worst_marginal.as_ref().map(|m| json!({
            "party": m.party,
            "input": m.input,
            "output": m.output,
            "remote_inputs": [m.remote_inputs.0, m.remote_inputs.1],
        })),
    })
}

fn threshold_json(t: &ThresholdResult) -> Value {
    json!({
        "parameter": t.parameter,
        "critical": num(t.critical),
        "bracket": [num(t.bracket.0), num(t.bracket.1)],
        "iterations": t.iterations,
        "tolerance": num(t.tolerance),
    })
}

fn membership_opts(g: &Global) -> MembershipOptions {
    let mut opts = MembershipOptions {
        tol: g.tol,
        ..MembershipOptions::default()
    };
    if let Some(cap) = g.cap {
        opts.strategy_cap = cap as u128;
    }
    opts
}

fn run(cli: &Cli) -> Result<Report> {
    let g = &cli.global;
    if !(g.tol >= 0.0 && g.tol < 1.0) {
        return Err(Error::Precondition(format!("tolerance {} is outside [0, 1)", g.tol)));
    }
    match &cli.verb {
        Verb::Validate { input, output } => {
            let doc = load(input)?;
            let mut r = Report::new("validate");
            r.set("kind", doc.kind());
            r.set("scenario", scenario_json(&scenario_of(&doc)));
            match &doc {
                Document::Behavior(b) => {
                    r.set("no_signalling_defect", num(no_signalling_defect(b).max_defect));
                }
                Document::Setup(s) => {
                    let b = behavior_from_setup(s)?;
                    r.set("no_signalling_defect", num(no_signalling_defect(&b).max_defect));
                }
                Document::Inequality(f) => {
                    r.set("local_bound", num(f.local_bound()));
                }
                Document::Scenario(_) => {}
            }
            r.set("valid", true);
            if let Some(path) = output {
                write_document(path, &doc)?;
            }
            Ok(r)
        }
        Verb::Classify { input } => {
            let b = behavior_of(load(input)?)?;
            let c = classify_with(&b, &membership_opts(g))?;
            let mut r = Report::new("classify");
            r.set("verdict", c.verdict().as_str());
            r.set("tolerance", num(g.tol));
            let witness = match &c {
                Classification::Local(m) => model_json(m, &b)?,
                Classification::WeaklyNonlocal(w) => witness_json(w),
                Classification::Signalling(s) => signalling_json(s),
            };
            r.set("witness", witness);
            r.set("summary", c.summary());
            Ok(r)
        }
        Verb::Membership { input } => {
            let b = behavior_of(load(input)?)?;
            let m = membership_with(&b, &membership_opts(g))?;
            let mut r = Report::new("membership");
            r.set("tolerance", num(g.tol));
            match &m {
                Membership::Local(model) => {
                    r.set("result", "Local");
                    r.set("witness", model_json(model, &b)?);
                }
                Membership::Nonlocal(w) => {
                    r.set("result", "Nonlocal");
                    r.set("witness", witness_json(w));
                }
            }
            Ok(r)
        }
        Verb::DeriveInequality { input, output } => {
            let b = behavior_of(load(input)?)?;
            let w = derive_critical_inequality(&b, g.tol)?;
            let mut r = Report::new("derive-inequality");
            r.set("tolerance", num(g.tol));
            r.set("scenario", scenario_json(b.scenario()));
            r.set("inequality", functional_json(&w.functional));
            r.set("value", num(w.value));
            r.set("violation", num(w.violation));
            r.set("refined_to_facet", w.refined);
            if let Some(path) = output {
                write_document(path, &Document::Inequality(w.functional.clone()))?;
            }
            Ok(r)
        }
        Verb::Facets { input } => {
            let scenario = scenario_of(&load(input)?);
            let mut caps = FacetCaps::default();
            if let Some(cap) = g.cap {
                caps.max_vertices = cap as usize;
            }
            let facets = enumerate_facets(&scenario, caps)?;
            let mut list = Vec::new();
            let mut positivity = 0;
            for f in &facets {
                let pos = is_positivity(f)?;
                positivity += pos as usize;
                let mut v = functional_json(f);
                v["class"] = Value::from(if pos { "positivity" } else { "bell" });
                list.push(v);
            }
            let mut r = Report::new("facets");
            r.set("scenario", scenario_json(&scenario));
            r.set("count", facets.len());
            r.set("positivity", positivity);
            r.set("bell", facets.len() - positivity);
            r.set("facets", list);
            Ok(r)
        }
        Verb::Chsh { input } => {
            let b = behavior_of(load(input)?)?;
            let s = chsh_value(&b)?;
            let mut r = Report::new("chsh");
            r.set("value", num(s));
            r.set("local_bound", num(2.0));
            r.set("violates_local_bound", s.abs() > 2.0 + g.tol);
            Ok(r)
        }
        Verb::Quantum {
            input,
            random,
            dims,
            inputs,
            efficiency,
            output,
            setup_output,
        } => {
            let mut setup = match (input, random) {
                (Some(_), true) => {
                    return Err(Error::Precondition("give either an input or --random".into()))
                }
                (Some(i), false) => setup_of(load(i)?)?,
                (None, true) => {
                    if dims.len() != 2 || inputs.len() != 2 {
                        return Err(Error::Precondition(
                            "--dims and --inputs take two comma-separated values".into(),
                        ));
                    }
                    random_setup(g.seed, (dims[0], dims[1]), (inputs[0], inputs[1]))?
                }
                (None, false) => {
                    return Err(Error::Precondition("give a setup input or --random".into()))
                }
            };
            if let Some(eta) = efficiency {
                setup = setup.lifted(*eta)?;
            }
            let b = behavior_from_setup(&setup)?;
            let mut r = Report::new("quantum");
            if *random {
                r.set("seed", g.seed);
            }
            if let Some(eta) = efficiency {
                r.set("efficiency", num(*eta));
            }
            r.set("scenario", scenario_json(b.scenario()));
            r.set("probs", nums(b.probs()));
            r.set("no_signalling_defect", num(no_signalling_defect(&b).max_defect));
            if let Ok(s) = chsh_value(&b) {
                r.set("chsh", num(s));
            }
            if let Some(path) = output {
                write_document(path, &Document::Behavior(b.clone()))?;
            }
            if let Some(path) = setup_output {
                write_document(path, &Document::Setup(setup.clone()))?;
            }
            Ok(r)
        }
        Verb::Threshold {
            parameter,
            input,
            noise,
            precision,
        } => {
            let doc = load(input)?;
            let t = match parameter {
                Parameter::Visibility => {
                    let pure = behavior_of(doc)?;
                    let noise = match noise {
                        Some(n) => behavior_of(load(n)?)?,
                        None => named_behavior("uniform", Some(pure.scenario()))?,
                    };
                    visibility_threshold(&pure, &noise, precision.unwrap_or(1e-6))?
                }
                Parameter::Efficiency => {
                    if noise.is_some() {
                        return Err(Error::Precondition("--noise applies to visibility only".into()));
                    }
                    efficiency_threshold(&setup_of(doc)?, precision.unwrap_or(1e-4))?
                }
            };
            let mut r = Report::new("threshold");
            for (k, v) in threshold_json(&t).as_object().expect("object") {
                r.set(k, v.clone());
            }
            Ok(r)
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e.class() {
        ErrorClass::Validation => 2,
        ErrorClass::Limit => 3,
        ErrorClass::Precondition => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(r) => {
            let out = match cli.global.format {
                Format::Text => r.text(),
                Format::Structured => r.structured(),
            };
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let code = exit_code(&e);
            if cli.global.format == Format::Structured {
                let v = json!({
                    "error": e.to_string(),
                    "class": format!("{:?}", e.class()),
                    "exit_code": code,
                });
                println!("{}", serde_json::to_string_pretty(&v).expect("serializable"));
            }
            eprintln!("error: {e}");
            ExitCode::from(code)
        }
    }
}
