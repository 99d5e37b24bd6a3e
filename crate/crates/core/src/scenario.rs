//! Chained Bell experiments.
//!
//! Experiment 1's A outcome is relayed classically to experiment 2's A
//! setting. If experiment 1 carries a weak signal from B to A and
//! experiment 2 one from A to B, the B setting of experiment 1 can change
//! the B outcome of experiment 2; placed on a [`BoostedConfiguration`] that
//! outcome lies in the past light cone of the setting.
//!
//! Party 0 is A and party 1 is B throughout. Settings and outcomes are
//! 0-based here; text forms elsewhere may number settings from 1.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use thiserror::Error;

use crate::behavior::{BehaviorError, TfDistribution};
use crate::rational::{format_ratio, sum, Rational};
use crate::spacetime::{
    disjoint_construction, pigeonhole_infeasible, union_bound, BoostedConfiguration,
    PigeonholeReport, SpacetimeError, DEFAULT_PIGEONHOLE_LP_LIMIT,
};
use crate::tf::{classify_signalling, format_tf, ExperimentShape, TfError, TransferFunction};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("relay has no setting for outcome {outcome} of A in experiment 1")]
    RelayUndefined { outcome: usize },
    #[error("relay sends outcome {outcome} to setting {setting}, but A in experiment 2 has {settings} settings")]
    RelayOutOfRange {
        outcome: usize,
        setting: usize,
        settings: usize,
    },
    #[error("experiments must have two parties, found {0}")]
    NotBipartite(usize),
    #[error("experiment {experiment} signals with probability {found}, expected {expected}")]
    MarginalMismatch {
        experiment: usize,
        found: String,
        expected: String,
    },
    #[error("invalid joint distribution: {0}")]
    InvalidJoint(String),
    #[error("shape {0} admits no signalling transfer function")]
    NoSignallingFunction(String),
    #[error(transparent)]
    Tf(#[from] TfError),
    #[error(transparent)]
    Behavior(#[from] BehaviorError),
    #[error(transparent)]
    Spacetime(#[from] SpacetimeError),
}

impl ScenarioError {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioError::RelayUndefined { .. } => "RelayUndefined",
            ScenarioError::RelayOutOfRange { .. } => "RelayOutOfRange",
            ScenarioError::NotBipartite(_) => "NotBipartite",
            ScenarioError::MarginalMismatch { .. } => "MarginalMismatch",
            ScenarioError::InvalidJoint(_) => "InvalidJoint",
            ScenarioError::NoSignallingFunction(_) => "NoSignallingFunction",
            ScenarioError::Tf(e) => e.name(),
            ScenarioError::Behavior(e) => e.name(),
            ScenarioError::Spacetime(e) => e.name(),
        }
    }
}

/// Deterministic map from A's outcome in one experiment to A's setting in
/// the next.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Relay(BTreeMap<usize, usize>);

impl Relay {
    pub fn new(pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        Relay(pairs.into_iter().collect())
    }

    /// Outcome `j` to setting `j`.
    pub fn identity(outcomes: usize) -> Self {
        Relay::new((0..outcomes).map(|j| (j, j)))
    }

    pub fn get(&self, outcome: usize) -> Option<usize> {
        self.0.get(&outcome).copied()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.0.iter().map(|(&a, &b)| (a, b))
    }

    fn check(&self, outcomes: usize, settings: usize) -> Result<(), ScenarioError> {
        for outcome in 0..outcomes {
            let setting = self
                .get(outcome)
                .ok_or(ScenarioError::RelayUndefined { outcome })?;
            if setting >= settings {
                return Err(ScenarioError::RelayOutOfRange {
                    outcome,
                    setting,
                    settings,
                });
            }
        }
        Ok(())
    }
}

/// Distribution over tuples of transfer functions, one per experiment.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct JointDistribution {
    shapes: Vec<ExperimentShape>,
    weights: BTreeMap<Vec<TransferFunction>, Rational>,
}

impl JointDistribution {
    pub fn new(
        shapes: Vec<ExperimentShape>,
        atoms: impl IntoIterator<Item = (Vec<TransferFunction>, Rational)>,
    ) -> Result<Self, ScenarioError> {
        let mut weights: BTreeMap<Vec<TransferFunction>, Rational> = BTreeMap::new();
        for (fs, w) in atoms {
            if fs.len() != shapes.len() {
                return Err(ScenarioError::InvalidJoint(format!(
                    "tuple of {} functions for {} experiments",
                    fs.len(),
                    shapes.len()
                )));
            }
            for (f, shape) in fs.iter().zip(&shapes) {
                if f.shape() != shape {
                    return Err(TfError::ShapeMismatch {
                        expected: shape.to_string(),
                        found: f.shape().to_string(),
                    }
                    .into());
                }
            }
            if w.is_negative() {
                return Err(ScenarioError::InvalidJoint(format!(
                    "negative weight {}",
                    format_ratio(&w)
                )));
            }
            *weights.entry(fs).or_insert_with(Rational::zero) += w;
        }
        weights.retain(|_, w| !w.is_zero());
        let total = sum(weights.values());
        if !total.is_one() {
            return Err(ScenarioError::InvalidJoint(format!(
                "weights sum to {}",
                format_ratio(&total)
            )));
        }
        Ok(JointDistribution { shapes, weights })
    }

    /// Independent experiments.
    pub fn product(parts: &[TfDistribution]) -> Self {
        let mut weights: BTreeMap<Vec<TransferFunction>, Rational> = BTreeMap::new();
        weights.insert(Vec::new(), Rational::one());
        for d in parts {
            let mut next = BTreeMap::new();
            for (fs, w) in &weights {
                for (f, v) in d.atoms() {
                    let mut t = fs.clone();
                    t.push(f.clone());
                    next.insert(t, w * v);
                }
            }
            weights = next;
        }
        JointDistribution {
            shapes: parts.iter().map(|d| d.shape().clone()).collect(),
            weights,
        }
    }

    pub fn shapes(&self) -> &[ExperimentShape] {
        &self.shapes
    }

    pub fn experiments(&self) -> usize {
        self.shapes.len()
    }

    pub fn atoms(&self) -> impl Iterator<Item = (&[TransferFunction], &Rational)> {
        self.weights.iter().map(|(fs, w)| (fs.as_slice(), w))
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Distribution of experiment `i` alone.
    pub fn marginal(&self, i: usize) -> Result<TfDistribution, ScenarioError> {
        let shape = self.shapes.get(i).ok_or_else(|| self.no_experiment(i))?;
        Ok(TfDistribution::new(
            shape.clone(),
            self.weights
                .iter()
                .map(|(fs, w)| (fs[i].clone(), w.clone())),
        )?)
    }

    /// Joint distribution of experiments `i` and `j`, in that order.
    pub fn pair(&self, i: usize, j: usize) -> Result<JointDistribution, ScenarioError> {
        for k in [i, j] {
            if k >= self.shapes.len() {
                return Err(self.no_experiment(k));
            }
        }
        JointDistribution::new(
            alloc::vec![self.shapes[i].clone(), self.shapes[j].clone()],
            self.weights
                .iter()
                .map(|(fs, w)| (alloc::vec![fs[i].clone(), fs[j].clone()], w.clone())),
        )
    }

    /// Total weight of tuples whose experiments `i` and `j` both hold a
    /// signalling function.
    pub fn co_signalling(&self, i: usize, j: usize) -> Rational {
        self.weights
            .iter()
            .filter(|(fs, _)| is_signalling(&fs[i]) && is_signalling(&fs[j]))
            .fold(Rational::zero(), |acc, (_, w)| acc + w)
    }

    fn no_experiment(&self, i: usize) -> ScenarioError {
        ScenarioError::InvalidJoint(format!("no experiment {i} among {}", self.shapes.len()))
    }
}

fn is_signalling(f: &TransferFunction) -> bool {
    !classify_signalling(f).is_null()
}

/// Total weight of the signalling atoms of `d`.
pub fn signalling_probability(d: &TfDistribution) -> Rational {
    d.atoms()
        .filter(|(f, _)| is_signalling(f))
        .fold(Rational::zero(), |acc, (_, w)| acc + w)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainedScenario {
    exp1: TfDistribution,
    exp2: TfDistribution,
    relay: Relay,
    joint: Option<JointDistribution>,
}

impl ChainedScenario {
    /// Independent experiments.
    pub fn new(
        exp1: TfDistribution,
        exp2: TfDistribution,
        relay: Relay,
    ) -> Result<Self, ScenarioError> {
        for d in [&exp1, &exp2] {
            let parties = d.shape().party_count();
            if parties != 2 {
                return Err(ScenarioError::NotBipartite(parties));
            }
        }
        relay.check(
            exp1.shape().parties()[0].outputs,
            exp2.shape().parties()[0].inputs,
        )?;
        Ok(ChainedScenario {
            exp1,
            exp2,
            relay,
            joint: None,
        })
    }

    /// Experiments with correlated hidden variables; the marginals are taken
    /// from `joint`.
    pub fn correlated(joint: JointDistribution, relay: Relay) -> Result<Self, ScenarioError> {
        if joint.experiments() != 2 {
            return Err(ScenarioError::InvalidJoint(format!(
                "a chain needs 2 experiments, found {}",
                joint.experiments()
            )));
        }
        let mut s = ChainedScenario::new(joint.marginal(0)?, joint.marginal(1)?, relay)?;
        s.joint = Some(joint);
        Ok(s)
    }

    pub fn exp1(&self) -> &TfDistribution {
        &self.exp1
    }

    pub fn exp2(&self) -> &TfDistribution {
        &self.exp2
    }

    pub fn relay(&self) -> &Relay {
        &self.relay
    }

    pub fn joint(&self) -> Option<&JointDistribution> {
        self.joint.as_ref()
    }

    /// Atom pairs with positive weight, canonical order.
    pub fn atom_pairs(&self) -> Vec<(TransferFunction, TransferFunction, Rational)> {
        match &self.joint {
            Some(j) => j
                .atoms()
                .map(|(fs, w)| (fs[0].clone(), fs[1].clone(), w.clone()))
                .collect(),
            None => self
                .exp1
                .atoms()
                .flat_map(|(f1, w1)| {
                    self.exp2
                        .atoms()
                        .map(move |(f2, w2)| (f1.clone(), f2.clone(), w1 * w2))
                })
                .collect(),
        }
    }

    /// Runs the chain for fixed atoms and settings; returns A's outcome in
    /// experiment 1, A's setting in experiment 2 and B's outcome in
    /// experiment 2.
    pub fn run(
        &self,
        f1: &TransferFunction,
        f2: &TransferFunction,
        settings: ChainSettings,
    ) -> ChainRun {
        chain_run(&self.relay, f1, f2, settings)
    }
}

/// The free settings of one chained run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ChainSettings {
    pub a1: usize,
    pub b1: usize,
    pub b2: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ChainRun {
    pub a1_outcome: usize,
    pub a2_setting: usize,
    pub b2_outcome: usize,
}

fn chain_run(
    relay: &Relay,
    f1: &TransferFunction,
    f2: &TransferFunction,
    s: ChainSettings,
) -> ChainRun {
    let i1 = f1
        .shape()
        .encode_input(&[s.a1, s.b1])
        .expect("setting in range");
    let a1_outcome = f1.party_output(i1, 0);
    let a2_setting = relay
        .get(a1_outcome)
        .expect("relay checked on construction");
    let i2 = f2
        .shape()
        .encode_input(&[a2_setting, s.b2])
        .expect("relay checked on construction");
    ChainRun {
        a1_outcome,
        a2_setting,
        b2_outcome: f2.party_output(i2, 1),
    }
}

/// Two chained runs that differ only in B's setting in experiment 1 and
/// end with different B outcomes in experiment 2.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct BackwardCausalityWitness {
    pub f1: TransferFunction,
    pub f2: TransferFunction,
    /// Weight of the atom pair.
    pub weight: Rational,
    /// A's setting in experiment 1.
    pub a1_setting: usize,
    /// B's setting in experiment 2.
    pub b2_setting: usize,
    /// The two B settings in experiment 1.
    pub b1_settings: (usize, usize),
    pub runs: (ChainRun, ChainRun),
}

impl BackwardCausalityWitness {
    /// Re-evaluates both runs through `relay`.
    pub fn verify(&self, relay: &Relay) -> bool {
        let run = |b1| {
            chain_run(
                relay,
                &self.f1,
                &self.f2,
                ChainSettings {
                    a1: self.a1_setting,
                    b1,
                    b2: self.b2_setting,
                },
            )
        };
        let (r0, r1) = (run(self.b1_settings.0), run(self.b1_settings.1));
        self.b1_settings.0 != self.b1_settings.1
            && (r0, r1) == self.runs
            && r0.b2_outcome != r1.b2_outcome
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Detection {
    /// Sorted witnesses.
    pub witnesses: Vec<BackwardCausalityWitness>,
    /// Weight of atom pairs with at least one witness.
    pub probability: Rational,
    /// Atom pairs examined.
    pub pairs_examined: usize,
}

fn witnesses_in_context(
    relay: &Relay,
    f1: &TransferFunction,
    f2: &TransferFunction,
    weight: &Rational,
    a1: usize,
    b2: usize,
) -> Vec<BackwardCausalityWitness> {
    let b_settings = f1.shape().parties()[1].inputs;
    let runs: Vec<ChainRun> = (0..b_settings)
        .map(|b1| chain_run(relay, f1, f2, ChainSettings { a1, b1, b2 }))
        .collect();
    let mut out = Vec::new();
    for x in 0..b_settings {
        for y in x + 1..b_settings {
            if runs[x].b2_outcome != runs[y].b2_outcome {
                out.push(BackwardCausalityWitness {
                    f1: f1.clone(),
                    f2: f2.clone(),
                    weight: weight.clone(),
                    a1_setting: a1,
                    b2_setting: b2,
                    b1_settings: (x, y),
                    runs: (runs[x], runs[y]),
                });
            }
        }
    }
    out
}

fn pair_witnesses(
    relay: &Relay,
    f1: &TransferFunction,
    f2: &TransferFunction,
    w: &Rational,
) -> Vec<BackwardCausalityWitness> {
    let first = witnesses_in_context(relay, f1, f2, w, 0, 0);
    if !first.is_empty() {
        return first;
    }
    let a_settings = f1.shape().parties()[0].inputs;
    let b_settings = f2.shape().parties()[1].inputs;
    for a1 in 0..a_settings {
        for b2 in 0..b_settings {
            if (a1, b2) == (0, 0) {
                continue;
            }
            let found = witnesses_in_context(relay, f1, f2, w, a1, b2);
            if !found.is_empty() {
                return found;
            }
        }
    }
    Vec::new()
}

/// Sweeps B's setting in experiment 1 for every atom pair of positive
/// weight.
///
/// Settings held fixed default to 0; a pair with no witness there is
/// searched over every other choice of A's setting in experiment 1 and B's
/// setting in experiment 2, and the first choice with a witness is reported.
pub fn detect_backward_causality(s: &ChainedScenario) -> Detection {
    let pairs = s.atom_pairs();
    let mut witnesses = Vec::new();
    let mut probability = Rational::zero();
    for (f1, f2, w) in &pairs {
        let found = pair_witnesses(&s.relay, f1, f2, w);
        if !found.is_empty() {
            probability += w;
            witnesses.extend(found);
        }
    }
    witnesses.sort();
    Detection {
        witnesses,
        probability,
        pairs_examined: pairs.len(),
    }
}

/// Sampled estimate of the witnessing probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    pub samples: u64,
    pub hits: u64,
}

impl MonteCarloEstimate {
    pub fn estimate(&self) -> f64 {
        if self.samples == 0 {
            0.0
        } else {
            self.hits as f64 / self.samples as f64
        }
    }
}

/// Draws atom pairs by weight and counts those with a witness.
pub fn detect_monte_carlo<R: Rng + ?Sized>(
    s: &ChainedScenario,
    samples: u64,
    rng: &mut R,
) -> MonteCarloEstimate {
    let pairs = s.atom_pairs();
    let mut cumulative = Vec::with_capacity(pairs.len());
    let mut acc = 0.0;
    for (_, _, w) in &pairs {
        acc += w.to_f64().unwrap_or(0.0);
        cumulative.push(acc);
    }
    let mut hit_cache: BTreeMap<usize, bool> = BTreeMap::new();
    let mut hits = 0;
    for _ in 0..samples {
        let u: f64 = rng.gen::<f64>() * acc;
        let idx = cumulative.partition_point(|&c| c <= u).min(pairs.len() - 1);
        let hit = *hit_cache.entry(idx).or_insert_with(|| {
            let (f1, f2, w) = &pairs[idx];
            !pair_witnesses(&s.relay, f1, f2, w).is_empty()
        });
        if hit {
            hits += 1;
        }
    }
    MonteCarloEstimate { samples, hits }
}

/// Detection for experiment `j` chained into experiment `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairDetection {
    pub first: usize,
    pub second: usize,
    pub detection: Detection,
}

/// Chains every pair `j < k` of a joint distribution, `j` first.
pub fn detect_in_joint(
    joint: &JointDistribution,
    relay: &Relay,
) -> Result<Vec<PairDetection>, ScenarioError> {
    let m = joint.experiments();
    let mut out = Vec::new();
    for j in 0..m {
        for k in j + 1..m {
            let s = ChainedScenario::correlated(joint.pair(j, k)?, relay.clone())?;
            out.push(PairDetection {
                first: j,
                second: k,
                detection: detect_backward_causality(&s),
            });
        }
    }
    Ok(out)
}

/// Whether experiment `j` chained into experiment `k > j` of `config` puts
/// the relay inside A's forward cone and B's outcome in experiment `k`
/// inside the backward cone of B's setting in experiment `j`.
pub fn chain_geometry(
    config: &BoostedConfiguration,
    j: i64,
    k: i64,
    epsilon: f64,
) -> Result<bool, ScenarioError> {
    Ok(config.relations(j, k, epsilon)?.carries_chain())
}

/// Verdict of [`anticorrelation_escape_check`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EscapeVerdict {
    /// No joint distribution keeps the signalling functions apart. The
    /// linear program report is present when `m` is within its limit.
    Impossible {
        union_bound: Rational,
        report: Option<PigeonholeReport>,
    },
    /// The given joint distribution never has two signalling functions
    /// together.
    Achieved,
    /// The given joint distribution has signalling functions together;
    /// `(j, k, probability)` for each such pair.
    CoSignalling(Vec<(usize, usize, Rational)>),
    /// A joint distribution with pairwise disjoint signalling, constructed.
    Possible(JointDistribution),
}

impl EscapeVerdict {
    pub fn label(&self) -> &'static str {
        match self {
            EscapeVerdict::Impossible { .. } => "impossible",
            EscapeVerdict::Achieved => "achieved",
            EscapeVerdict::CoSignalling(_) => "co-signalling",
            EscapeVerdict::Possible(_) => "possible",
        }
    }
}

/// A transfer function in which each party's outcome copies the other's
/// setting, and the constant function.
fn escape_atoms(
    shape: &ExperimentShape,
) -> Result<(TransferFunction, TransferFunction), ScenarioError> {
    let parties = shape.parties();
    if parties.len() != 2 {
        return Err(ScenarioError::NotBipartite(parties.len()));
    }
    let (a, b) = (parties[0], parties[1]);
    if a.inputs < 2 || b.inputs < 2 || a.outputs < 2 || b.outputs < 2 {
        return Err(ScenarioError::NoSignallingFunction(shape.to_string()));
    }
    let swap = TransferFunction::from_fn(shape.clone(), |s| {
        alloc::vec![s[1].min(a.outputs - 1), s[0].min(b.outputs - 1)]
    })?;
    Ok((swap, TransferFunction::constant(shape.clone())))
}

/// Can `m` experiments, each holding a signalling function with
/// probability `p`, avoid ever holding two together?
///
/// With `joint` the marginals are audited and the joint is checked; without
/// it a disjoint construction on `shape` is returned when one exists.
pub fn anticorrelation_escape_check(
    p: &Rational,
    m: usize,
    shape: &ExperimentShape,
    joint: Option<&JointDistribution>,
) -> Result<EscapeVerdict, ScenarioError> {
    let (total, infeasible) = union_bound(p, m)?;
    if let Some(joint) = joint {
        if joint.experiments() != m {
            return Err(ScenarioError::InvalidJoint(format!(
                "{} experiments given, {m} expected",
                joint.experiments()
            )));
        }
        for i in 0..m {
            let found = signalling_probability(&joint.marginal(i)?);
            if &found != p {
                return Err(ScenarioError::MarginalMismatch {
                    experiment: i,
                    found: format_ratio(&found),
                    expected: format_ratio(p),
                });
            }
        }
    }
    if infeasible {
        let report = if m <= DEFAULT_PIGEONHOLE_LP_LIMIT {
            Some(pigeonhole_infeasible(p, m, DEFAULT_PIGEONHOLE_LP_LIMIT)?)
        } else {
            None
        };
        return Ok(EscapeVerdict::Impossible {
            union_bound: total,
            report,
        });
    }
    if let Some(joint) = joint {
        let mut together = Vec::new();
        for j in 0..m {
            for k in j + 1..m {
                let w = joint.co_signalling(j, k);
                if !w.is_zero() {
                    together.push((j, k, w));
                }
            }
        }
        return Ok(if together.is_empty() {
            EscapeVerdict::Achieved
        } else {
            EscapeVerdict::CoSignalling(together)
        });
    }
    let (signal, null) = escape_atoms(shape)?;
    let cells = disjoint_construction(p, m)?.expect("union bound checked above");
    let atoms = cells.into_iter().map(|(cell, w)| {
        let tuple = (0..m)
            .map(|i| {
                if cell >> i & 1 == 1 {
                    signal.clone()
                } else {
                    null.clone()
                }
            })
            .collect();
        (tuple, w)
    });
    Ok(EscapeVerdict::Possible(JointDistribution::new(
        alloc::vec![shape.clone(); m],
        atoms,
    )?))
}

/// Text form of an atom tuple, e.g. `([+-,+-], [++,++])`.
pub fn format_tuple(fs: &[TransferFunction]) -> String {
    let parts: Vec<String> = fs.iter().map(format_tf).collect();
    format!("({})", parts.join(", "))
}
