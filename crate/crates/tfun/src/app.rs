//! The `tfun` command line.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use num_traits::{Signed, ToPrimitive};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use tfun_core::behavior::{
    check_no_signalling, weak_signalling_probability, Behavior, TfDistribution,
};
use tfun_core::localpoly::{
    bell_expression, bell_terms, derive_symmetric_probabilities, local_membership,
    SymmetricSingletScenario, DEFAULT_ATOM_BUDGET,
};
use tfun_core::quantum::{self, SettingAngles, BELL_SIXTHS, DEFAULT_DENOMINATOR_BOUND};
use tfun_core::rational::{format_ratio, Rational};
use tfun_core::scenario::{
    anticorrelation_escape_check, chain_geometry, detect_backward_causality, detect_monte_carlo,
    BackwardCausalityWitness, ChainedScenario, EscapeVerdict, Relay,
};
use tfun_core::spacetime::{
    minimal_pigeonhole_n, pigeonhole_infeasible, BoostedConfiguration, DisjointnessProof,
    PigeonholeReport, DEFAULT_NULL_EPSILON, DEFAULT_PIGEONHOLE_LP_LIMIT,
};
use tfun_core::tf::{
    census, classify_signalling, enumerate_transfer_functions, format_tf, is_product_form,
    parse_tf, Budget, ExperimentShape, SignallingClass, TwoPartyClass,
};

use crate::error::CliError;
use crate::format::{self, BehaviorJson, DistributionJson, JointJson, SCHEMA};

/// Transfer functions, Bell polytopes and boosted Bell experiments.
#[derive(Debug, Parser)]
#[command(name = "tfun", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List or count the transfer functions of a shape.
    Enumerate(EnumerateArgs),
    /// Signalling class of one transfer function.
    Classify(ClassifyArgs),
    /// Behavior of a distribution over transfer functions.
    Mix(MixArgs),
    /// Which parties a behavior lets signal.
    CheckNs(BehaviorArgs),
    /// Is a behavior a mixture of product-form functions?
    Lp(LpArgs),
    /// Bell test of the symmetric three-setting scenario.
    Bell(BellArgs),
    /// Singlet-state behavior at given measurement angles.
    Quantum(QuantumArgs),
    /// Boosted experiment geometry.
    #[command(subcommand)]
    Spacetime(SpacetimeCommand),
    /// Minimal number of experiments forcing co-signalling.
    Pigeonhole(PigeonholeArgs),
    /// Backward-causality sweep over two chained experiments.
    Chain(ChainArgs),
    /// Can anticorrelated hidden variables avoid co-signalling?
    Escape(EscapeArgs),
    /// Chained-experiment commands.
    #[command(subcommand)]
    Scenario(ScenarioCommand),
}

#[derive(Debug, Subcommand)]
pub enum SpacetimeCommand {
    /// Events and cone relations of the 2N+1 boosted experiments.
    Config(ConfigArgs),
    /// Same as the top-level `pigeonhole`.
    Pigeonhole(PigeonholeArgs),
}

#[derive(Debug, Subcommand)]
pub enum ScenarioCommand {
    Chain(ChainArgs),
    Escape(EscapeArgs),
}

#[derive(Debug, Args)]
pub struct EnumerateArgs {
    /// Shape such as 2x2:2x2 (settings x outcomes per party).
    #[arg(long)]
    pub shape: String,
    /// Print only the count.
    #[arg(long)]
    pub count_only: bool,
    /// Print class sizes instead of the functions (two parties).
    #[arg(long, conflicts_with = "count_only")]
    pub census: bool,
    /// Largest enumeration allowed.
    #[arg(long, default_value_t = Budget::DEFAULT.0)]
    pub budget: u128,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub shape: String,
    /// Transfer function, e.g. "[+-,-+]" or "{0.0>++;0.1>+-;1.0>-+;1.1>--}".
    #[arg(long, allow_hyphen_values = true)]
    pub tf: String,
}

#[derive(Debug, Args)]
pub struct MixArgs {
    /// Distribution JSON (a `weights` or `witness` list).
    #[arg(long)]
    pub dist: PathBuf,
}

#[derive(Debug, Args)]
pub struct BehaviorArgs {
    /// Behavior JSON.
    #[arg(long)]
    pub behavior: PathBuf,
}

#[derive(Debug, Args)]
pub struct LpArgs {
    #[arg(long)]
    pub behavior: PathBuf,
    /// Largest number of deterministic atoms.
    #[arg(long, default_value_t = DEFAULT_ATOM_BUDGET.0)]
    pub budget: u128,
}

#[derive(Debug, Args)]
pub struct BellArgs {
    /// `exact-thirds` for (0, -pi/3, pi/3), or three comma-separated angles.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "behavior")]
    pub angles: Option<String>,
    /// Snap listed angles to multiples of pi/6 and compute exactly.
    #[arg(long)]
    pub exact_thirds: bool,
    /// Behavior JSON instead of quantum angles.
    #[arg(long)]
    pub behavior: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_DENOMINATOR_BOUND)]
    pub denominator_bound: u64,
    #[arg(long, default_value_t = DEFAULT_ATOM_BUDGET.0)]
    pub budget: u128,
}

#[derive(Debug, Args)]
pub struct QuantumArgs {
    /// Comma-separated angles in radians; `pi/3`, `-2pi/3` and the like are accepted.
    #[arg(long, allow_hyphen_values = true)]
    pub angles: String,
    /// Exact rationals for angles on the pi/6 grid with rational entries.
    #[arg(long)]
    pub exact_thirds: bool,
    #[arg(long, default_value_t = DEFAULT_DENOMINATOR_BOUND)]
    pub denominator_bound: u64,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub l: f64,
    #[arg(long, default_value_t = 0.5)]
    pub phi: f64,
    /// Proper delay before measurement, or `auto` for L sinh(phi) / 100.
    #[arg(long, default_value = "auto")]
    pub tau: String,
    /// Relative tolerance for null intervals.
    #[arg(long, default_value_t = DEFAULT_NULL_EPSILON)]
    pub epsilon: f64,
    /// `json` (events and relations) or `csv` (events only).
    #[arg(long, default_value = "json", value_parser = ["json", "csv"])]
    pub format: String,
    /// Also write the event table as CSV to this file.
    #[arg(long)]
    pub events_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PigeonholeArgs {
    /// Signalling probability, e.g. 1/4.
    #[arg(long)]
    pub p: String,
    /// Number of experiments; defaults to 2N+1 for the minimal N.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_PIGEONHOLE_LP_LIMIT)]
    pub lp_limit: usize,
}

#[derive(Debug, Args)]
pub struct ChainArgs {
    /// Distribution JSON of experiment 1.
    #[arg(long, required_unless_present = "joint")]
    pub exp1: Option<PathBuf>,
    /// Distribution JSON of experiment 2.
    #[arg(long, required_unless_present = "joint")]
    pub exp2: Option<PathBuf>,
    /// A outcome to A setting, e.g. "+:1,-:2" (settings from 1).
    #[arg(long, default_value = "+:1,-:2")]
    pub relay: String,
    /// Joint JSON over both experiments (replaces --exp1/--exp2).
    #[arg(long, conflicts_with_all = ["exp1", "exp2"])]
    pub joint: Option<PathBuf>,
    /// Also estimate the probability from this many sampled atom pairs.
    #[arg(long)]
    pub monte_carlo: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0)]
    pub l: f64,
    #[arg(long, default_value_t = 0.5)]
    pub phi: f64,
}

#[derive(Debug, Args)]
pub struct EscapeArgs {
    /// Number of experiments.
    #[arg(long)]
    pub m: usize,
    /// Signalling probability of each experiment.
    #[arg(long)]
    pub p: String,
    /// Joint JSON to audit instead of constructing one.
    #[arg(long)]
    pub joint: Option<PathBuf>,
    /// Shape of each experiment for the construction.
    #[arg(long, default_value = "2x2:2x2")]
    pub shape: String,
}

/// Result of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Output {
    pub code: u8,
    pub stdout: String,
    pub stderr: String,
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> Output
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => Output {
                    code: 0,
                    stdout: text,
                    stderr: String::new(),
                },
                _ => {
                    let err = CliError::Usage(text.trim_end().to_string());
                    Output {
                        code: err.exit_code(),
                        stdout: line(&err.to_json()),
                        stderr: text,
                    }
                }
            };
        }
    };
    match execute(&cli.command) {
        Ok(stdout) => Output {
            code: 0,
            stdout,
            stderr: String::new(),
        },
        Err(err) => Output {
            code: err.exit_code(),
            stdout: line(&err.to_json()),
            stderr: format!("error: {err}\n"),
        },
    }
}

fn line(v: &Value) -> String {
    let mut s = serde_json::to_string(v).expect("JSON values serialize");
    s.push('\n');
    s
}

/// Prepends `"schema": "1"` to an object.
fn document(body: Value) -> String {
    let mut out = serde_json::Map::new();
    out.insert("schema".into(), SCHEMA.into());
    if let Value::Object(fields) = body {
        for (k, v) in fields {
            if k != "schema" {
                out.insert(k, v);
            }
        }
    }
    line(&Value::Object(out))
}

fn to_value<T: serde::Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("JSON values serialize")
}

fn execute(command: &Command) -> Result<String, CliError> {
    match command {
        Command::Enumerate(a) => enumerate(a),
        Command::Classify(a) => classify(a),
        Command::Mix(a) => mix(a),
        Command::CheckNs(a) => check_ns(a),
        Command::Lp(a) => lp(a),
        Command::Bell(a) => bell(a),
        Command::Quantum(a) => quantum_cmd(a),
        Command::Spacetime(SpacetimeCommand::Config(a)) => config(a),
        Command::Spacetime(SpacetimeCommand::Pigeonhole(a)) | Command::Pigeonhole(a) => {
            pigeonhole(a)
        }
        Command::Chain(a) | Command::Scenario(ScenarioCommand::Chain(a)) => chain(a),
        Command::Escape(a) | Command::Scenario(ScenarioCommand::Escape(a)) => escape(a),
    }
}

fn class_json(c: &SignallingClass) -> Value {
    let pairs: Vec<[usize; 2]> = c.signalling_pairs().map(|(a, b)| [a, b]).collect();
    match c.two_party() {
        Some(k) => json!({"class": k.label(), "description": k.description(), "signals": pairs}),
        None => json!({"signals": pairs}),
    }
}

fn enumerate(a: &EnumerateArgs) -> Result<String, CliError> {
    let shape = format::shape(&a.shape)?;
    let budget = Budget(a.budget);
    if a.census {
        let c = census(&shape, budget)?;
        let mut sizes = serde_json::Map::new();
        for k in TwoPartyClass::ALL {
            sizes.insert(k.label().into(), json!(c.get(k) as u64));
        }
        return Ok(document(
            json!({"shape": shape.to_string(), "count": c.total() as u64, "census": sizes}),
        ));
    }
    let all = enumerate_transfer_functions(&shape, budget)?;
    if a.count_only {
        return Ok(document(
            json!({"shape": shape.to_string(), "count": all.count() as u64}),
        ));
    }
    let functions: Vec<Value> = all
        .map(|f| {
            let mut v = class_json(&classify_signalling(&f));
            v["tf"] = json!(format_tf(&f));
            v
        })
        .collect();
    Ok(document(
        json!({"shape": shape.to_string(), "count": functions.len(), "functions": functions}),
    ))
}

fn classify(a: &ClassifyArgs) -> Result<String, CliError> {
    let shape = format::shape(&a.shape)?;
    let f = parse_tf(&shape, &a.tf)?;
    let mut body = json!({"shape": shape.to_string(), "tf": format_tf(&f)});
    for (k, v) in class_json(&classify_signalling(&f))
        .as_object()
        .expect("object")
    {
        body[k] = v.clone();
    }
    body["product_form"] = json!(is_product_form(&f).is_some());
    Ok(document(body))
}

fn read_behavior(path: &std::path::Path) -> Result<Behavior, CliError> {
    format::behavior_from_json(&format::read_json::<BehaviorJson>(path)?)
}

fn read_distribution(path: &std::path::Path) -> Result<TfDistribution, CliError> {
    format::distribution_from_json(&format::read_json::<DistributionJson>(path)?)
}

fn mix(a: &MixArgs) -> Result<String, CliError> {
    let d = read_distribution(&a.dist)?;
    Ok(document(to_value(&format::behavior_to_json(&d.behavior()))))
}

fn check_ns(a: &BehaviorArgs) -> Result<String, CliError> {
    let b = read_behavior(&a.behavior)?;
    let c = check_no_signalling(&b);
    let mut body = json!({"shape": b.shape().to_string(), "no_signalling": c.is_null()});
    for (k, v) in class_json(&c).as_object().expect("object") {
        body[k] = v.clone();
    }
    Ok(document(body))
}

fn lp(a: &LpArgs) -> Result<String, CliError> {
    let b = read_behavior(&a.behavior)?;
    Ok(document(format::verdict_json(&local_membership(
        &b,
        Budget(a.budget),
    )?)))
}

/// Parses `1.5`, `pi`, `-pi/3`, `2pi/3`, `0.5*pi`.
pub fn parse_angle(text: &str) -> Result<f64, CliError> {
    let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || CliError::format(format!("`{text}` is not an angle"));
    let value = if let Some((coef, rest)) = t.split_once("pi") {
        let coef = coef.trim_end_matches('*');
        let c = match coef {
            "" | "+" => 1.0,
            "-" => -1.0,
            other => other.parse::<f64>().map_err(|_| bad())?,
        };
        let d = match rest {
            "" => 1.0,
            r => r
                .strip_prefix('/')
                .ok_or_else(bad)?
                .parse::<f64>()
                .map_err(|_| bad())?,
        };
        c * std::f64::consts::PI / d
    } else {
        t.parse::<f64>().map_err(|_| bad())?
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(bad())
    }
}

fn parse_angles(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',').map(parse_angle).collect()
}

const SNAP_TOLERANCE: f64 = 1e-9;

fn quantum_behavior(theta: &[f64], exact: bool, bound: u64) -> Result<Behavior, CliError> {
    if exact {
        let sixths = quantum::snap_to_sixths(theta, SNAP_TOLERANCE)?;
        Ok(quantum::singlet_behavior_exact(&sixths)?)
    } else {
        Ok(quantum::singlet_behavior(
            &SettingAngles::new(theta.to_vec())?,
            bound,
        )?)
    }
}

fn quantum_cmd(a: &QuantumArgs) -> Result<String, CliError> {
    let theta = parse_angles(&a.angles)?;
    let b = quantum_behavior(&theta, a.exact_thirds, a.denominator_bound)?;
    Ok(document(to_value(&format::behavior_to_json(&b))))
}

fn bell(a: &BellArgs) -> Result<String, CliError> {
    let mut body = serde_json::Map::new();
    let b = if let Some(path) = &a.behavior {
        read_behavior(path)?
    } else {
        let choice = a.angles.as_deref().unwrap_or("exact-thirds");
        if choice == "exact-thirds" {
            body.insert("angles".into(), json!(["0", "-pi/3", "pi/3"]));
            body.insert("mode".into(), json!("exact-thirds"));
            quantum::singlet_behavior_exact(&BELL_SIXTHS)?
        } else {
            let theta = parse_angles(choice)?;
            body.insert("angles".into(), json!(theta));
            body.insert(
                "mode".into(),
                json!(if a.exact_thirds {
                    "exact-thirds"
                } else {
                    "rationalized"
                }),
            );
            if !a.exact_thirds {
                body.insert("denominator_bound".into(), json!(a.denominator_bound));
            }
            quantum_behavior(&theta, a.exact_thirds, a.denominator_bound)?
        }
    };
    body.insert("behavior".into(), {
        let mut v = to_value(&format::behavior_to_json(&b));
        v.as_object_mut().expect("object").shift_remove("schema");
        v
    });
    if b.shape() == &ExperimentShape::bipartite_binary(3) {
        let scenario = SymmetricSingletScenario::new(3)?;
        match derive_symmetric_probabilities(&scenario, &b) {
            Ok(p) => {
                body.insert(
                    "symmetric".into(),
                    json!({
                        "P": p.values.iter().map(format_ratio).collect::<Vec<_>>(),
                        "bell_violation": p.is_bell_violation(),
                    }),
                );
            }
            Err(e) => {
                body.insert(
                    "symmetric".into(),
                    json!({"error": {"kind": e.name(), "message": e.to_string()}}),
                );
            }
        }
        let mut best: Option<(usize, Rational)> = None;
        for k in 1..=3 {
            let v = bell_expression(&b, k)?;
            if best.as_ref().is_none_or(|(_, w)| v < *w) {
                best = Some((k, v));
            }
        }
        let (k, value) = best.expect("three instances");
        let terms: Vec<Value> = bell_terms(k)?
            .into_iter()
            .map(|((x, y), c)| json!({"input": [x, y], "output": [0, 1], "c": format_ratio(&c)}))
            .collect();
        body.insert(
            "bell".into(),
            json!({
                "instance": k,
                "coeffs": terms,
                "threshold": "0/1",
                "violation": format_ratio(&value),
                "violated": value.is_negative(),
            }),
        );
    }
    let verdict = local_membership(&b, Budget(a.budget))?;
    for (k, v) in format::verdict_json(&verdict).as_object().expect("object") {
        if k != "shape" {
            body.insert(k.clone(), v.clone());
        }
    }
    Ok(document(Value::Object(body)))
}

fn config(a: &ConfigArgs) -> Result<String, CliError> {
    let tau =
        match a.tau.as_str() {
            "auto" => None,
            t => Some(t.parse::<f64>().map_err(|_| {
                CliError::format(format!("tau `{t}` is neither a number nor `auto`"))
            })?),
        };
    let c = BoostedConfiguration::generate(a.n, a.l, a.phi, tau)?;
    let csv = events_csv(&c)?;
    if let Some(path) = &a.events_csv {
        std::fs::write(path, &csv).map_err(|e| CliError::io(path, e))?;
    }
    if a.format == "csv" {
        return Ok(csv);
    }
    let events: Vec<Value> = c
        .experiments()
        .iter()
        .flat_map(|e| {
            [
                ("A", "preparation", e.a_preparation),
                ("A", "measurement", e.a_measurement),
                ("B", "preparation", e.b_preparation),
                ("B", "measurement", e.b_measurement),
            ]
            .map(|(side, kind, ev)| json!({"k": e.k, "side": side, "event": kind, "t": ev.t, "x": ev.x, "y": ev.y, "z": ev.z}))
        })
        .collect();
    let relations: Vec<Value> = c
        .all_relations(a.epsilon)?
        .iter()
        .map(|r| {
            json!({
                "j": r.j,
                "k": r.k,
                "a_preparations": r.a_preparations.label(),
                "a_measurements": r.a_measurements.label(),
                "a_relay": r.a_relay.label(),
                "b_preparations": r.b_preparations.label(),
                "b_measurements": r.b_measurements.label(),
                "b_backward": r.b_backward.label(),
                "ordered": r.is_ordered(),
                "chain": r.carries_chain(),
            })
        })
        .collect();
    Ok(document(json!({
        "n": c.n(),
        "l": c.l(),
        "phi": c.phi(),
        "tau": c.tau(),
        "sides_spacelike": c.sides_spacelike(a.epsilon)?,
        "events": events,
        "relations": relations,
    })))
}

fn events_csv(c: &BoostedConfiguration) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| CliError::format(e.to_string());
    w.write_record(["k", "side", "event", "t", "x", "y", "z"])
        .map_err(fail)?;
    for e in c.experiments() {
        for (side, kind, ev) in [
            ("A", "preparation", e.a_preparation),
            ("A", "measurement", e.a_measurement),
            ("B", "preparation", e.b_preparation),
            ("B", "measurement", e.b_measurement),
        ] {
            w.write_record([
                e.k.to_string(),
                side.into(),
                kind.into(),
                ev.t.to_string(),
                ev.x.to_string(),
                ev.y.to_string(),
                ev.z.to_string(),
            ])
            .map_err(fail)?;
        }
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::format(e.to_string()))
}

fn cell_members(cell: u32, m: usize) -> Vec<usize> {
    (0..m).filter(|i| cell >> i & 1 == 1).collect()
}

fn pigeonhole_lp_json(r: &PigeonholeReport) -> Value {
    match &r.proof {
        DisjointnessProof::Witness(cells) => json!({
            "verdict": "feasible",
            "witness": cells
                .iter()
                .map(|(cell, w)| json!({"cell": cell_members(*cell, r.m), "w": format_ratio(w)}))
                .collect::<Vec<_>>(),
        }),
        DisjointnessProof::Farkas(y) => {
            let m = r.m;
            let mut pairs = Vec::new();
            let mut row = m + 1;
            for i in 0..m {
                for j in i + 1..m {
                    if !num_traits::Zero::is_zero(&y[row]) {
                        pairs.push(json!({"i": i, "j": j, "y": format_ratio(&y[row])}));
                    }
                    row += 1;
                }
            }
            json!({
                "verdict": "infeasible",
                "farkas": {
                    "marginals": y[..m].iter().map(format_ratio).collect::<Vec<_>>(),
                    "normalization": format_ratio(&y[m]),
                    "pairs": pairs,
                },
            })
        }
    }
}

fn pigeonhole(a: &PigeonholeArgs) -> Result<String, CliError> {
    let p = format::rational(&a.p)?;
    let n = minimal_pigeonhole_n(&p)?;
    let m = match a.m {
        Some(m) => m,
        None => usize::try_from(2 * n + 1).map_err(|_| CliError::format("N too large"))?,
    };
    let r = pigeonhole_infeasible(&p, m, a.lp_limit)?;
    Ok(document(json!({
        "p": format_ratio(&p),
        "N": n,
        "M": m,
        "union_bound": format_ratio(&r.union_bound),
        "infeasible": r.infeasible(),
        "union_bound_infeasible": r.union_bound_infeasible,
        "paths_agree": r.paths_agree(),
        "lp": pigeonhole_lp_json(&r),
    })))
}

/// `"+:1,-:2"`: outcome (`+`, `-`, or a number from 1) to setting (from 1).
pub fn parse_relay(text: &str) -> Result<Relay, CliError> {
    let bad = |part: &str| {
        CliError::Usage(format!(
            "relay entry `{part}` is not OUTCOME:SETTING (e.g. +:1)"
        ))
    };
    let mut pairs = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (o, s) = part.split_once(':').ok_or_else(|| bad(part))?;
        let outcome = match o.trim() {
            "+" => 0,
            "-" => 1,
            n => n
                .parse::<usize>()
                .ok()
                .and_then(|n| n.checked_sub(1))
                .ok_or_else(|| bad(part))?,
        };
        let setting = s
            .trim()
            .parse::<usize>()
            .ok()
            .and_then(|n| n.checked_sub(1))
            .ok_or_else(|| bad(part))?;
        pairs.push((outcome, setting));
    }
    Ok(Relay::new(pairs))
}

fn outcome_label(outputs: usize, j: usize) -> String {
    if outputs == 2 {
        ["+", "-"][j].to_string()
    } else {
        (j + 1).to_string()
    }
}

fn witness_json(w: &BackwardCausalityWitness) -> Value {
    let a_out = w.f1.shape().parties()[0].outputs;
    let b_out = w.f2.shape().parties()[1].outputs;
    json!({
        "f1": format_tf(&w.f1),
        "f2": format_tf(&w.f2),
        "w": format_ratio(&w.weight),
        "a1_setting": w.a1_setting + 1,
        "b2_setting": w.b2_setting + 1,
        "b1_settings": [w.b1_settings.0 + 1, w.b1_settings.1 + 1],
        "a1_outcomes": [outcome_label(a_out, w.runs.0.a1_outcome), outcome_label(a_out, w.runs.1.a1_outcome)],
        "a2_settings": [w.runs.0.a2_setting + 1, w.runs.1.a2_setting + 1],
        "b2_outcomes": [outcome_label(b_out, w.runs.0.b2_outcome), outcome_label(b_out, w.runs.1.b2_outcome)],
    })
}

fn chain(a: &ChainArgs) -> Result<String, CliError> {
    let relay = parse_relay(&a.relay)?;
    let s = match &a.joint {
        Some(path) => {
            let joint = format::joint_from_json(&format::read_json::<JointJson>(path)?)?;
            ChainedScenario::correlated(joint, relay.clone())?
        }
        None => {
            let (e1, e2) = match (&a.exp1, &a.exp2) {
                (Some(e1), Some(e2)) => (e1, e2),
                _ => {
                    return Err(CliError::Usage(
                        "--exp1 and --exp2 are required without --joint".into(),
                    ))
                }
            };
            ChainedScenario::new(
                read_distribution(e1)?,
                read_distribution(e2)?,
                relay.clone(),
            )?
        }
    };
    let d = detect_backward_causality(&s);
    let config = BoostedConfiguration::generate(1, a.l, a.phi, None)?;
    let mut body = json!({
        "joint": s.joint().is_some(),
        "relay": relay.pairs().map(|(o, k)| json!({"outcome": o + 1, "setting": k + 1})).collect::<Vec<_>>(),
        "signalling": {
            "exp1_b_to_a": format_ratio(&weak_signalling_probability(s.exp1(), 1, 0)),
            "exp2_a_to_b": format_ratio(&weak_signalling_probability(s.exp2(), 0, 1)),
        },
        "pairs_examined": d.pairs_examined,
        "probability": format_ratio(&d.probability),
        "witnesses": d.witnesses.iter().map(witness_json).collect::<Vec<_>>(),
        "geometry": {
            "experiments": [0, 1],
            "l": config.l(),
            "phi": config.phi(),
            "tau": config.tau(),
            "chain": chain_geometry(&config, 0, 1, DEFAULT_NULL_EPSILON)?,
        },
    });
    if let Some(samples) = a.monte_carlo {
        let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
        let est = detect_monte_carlo(&s, samples, &mut rng);
        body["monte_carlo"] = json!({
            "probabilistic": true,
            "seed": a.seed,
            "samples": est.samples,
            "hits": est.hits,
            "estimate": est.estimate(),
            "exact": d.probability.to_f64(),
        });
    }
    Ok(document(body))
}

fn escape(a: &EscapeArgs) -> Result<String, CliError> {
    let p = format::rational(&a.p)?;
    let shape = format::shape(&a.shape)?;
    let joint = match &a.joint {
        Some(path) => Some(format::joint_from_json(&format::read_json::<JointJson>(
            path,
        )?)?),
        None => None,
    };
    let v = anticorrelation_escape_check(&p, a.m, &shape, joint.as_ref())?;
    let mut body = json!({"M": a.m, "p": format_ratio(&p), "verdict": v.label()});
    match &v {
        EscapeVerdict::Impossible {
            union_bound,
            report,
        } => {
            body["union_bound"] = json!(format_ratio(union_bound));
            body["lp"] = report.as_ref().map_or(Value::Null, pigeonhole_lp_json);
        }
        EscapeVerdict::Achieved => {
            body["co_signalling"] = json!([]);
        }
        EscapeVerdict::CoSignalling(pairs) => {
            body["co_signalling"] = pairs
                .iter()
                .map(|(j, k, w)| json!({"j": j, "k": k, "p": format_ratio(w)}))
                .collect();
        }
        EscapeVerdict::Possible(joint) => {
            let mut doc = to_value(&format::joint_to_json(joint));
            doc.as_object_mut().expect("object").shift_remove("schema");
            body["joint"] = doc;
        }
    }
    Ok(document(body))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn angles() {
        assert_eq!(parse_angle("0").unwrap(), 0.0);
        assert_eq!(parse_angle("-pi/3").unwrap(), -PI / 3.0);
        assert_eq!(parse_angle("2pi/3").unwrap(), 2.0 * PI / 3.0);
        assert_eq!(parse_angle("0.5*pi").unwrap(), PI / 2.0);
        assert_eq!(parse_angle(" pi ").unwrap(), PI);
        assert!(parse_angle("pi/").is_err());
        assert!(parse_angle("inf").is_err());
        assert!(parse_angle("tau").is_err());
    }

    #[test]
    fn relays() {
        let r = parse_relay("+:1,-:2").unwrap();
        assert_eq!(r, Relay::identity(2));
        let r = parse_relay("3:1, 1:2").unwrap();
        assert_eq!(r.get(2), Some(0));
        assert_eq!(r.get(0), Some(1));
        assert!(parse_relay("+1").is_err());
        assert!(parse_relay("+:0").is_err());
    }

    #[test]
    fn help_is_not_an_error() {
        let out = run(["tfun", "bell", "--help"]);
        assert_eq!(out.code, 0);
        assert!(out.stdout.contains("--angles"));
    }
}
