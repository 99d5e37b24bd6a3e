//! Experiment shapes and transfer functions.
//!
//! A transfer function maps every joint input (one setting per party) to a
//! joint output (one outcome per party). Tables are dense and indexed by the
//! mixed-radix encoding of the joint input, first party most significant, so
//! the numeric order of indices is the lexicographic order of the tuples.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TfError {
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("{what} count {count} exceeds the budget {budget}")]
    BudgetExceeded {
        what: &'static str,
        count: String,
        budget: u128,
    },
    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },
    #[error("invalid transfer function table: {0}")]
    InvalidTable(String),
    #[error("cannot parse transfer function `{text}`: {reason}")]
    Notation { text: String, reason: String },
}

impl TfError {
    pub fn name(&self) -> &'static str {
        match self {
            TfError::InvalidShape(_) => "InvalidShape",
            TfError::BudgetExceeded { .. } => "BudgetExceeded",
            TfError::ShapeMismatch { .. } => "ShapeMismatch",
            TfError::InvalidTable(_) => "InvalidTable",
            TfError::Notation { .. } => "Notation",
        }
    }

    pub(crate) fn mismatch(expected: &ExperimentShape, found: &ExperimentShape) -> Self {
        TfError::ShapeMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}

/// Upper bound on how many objects an exhaustive enumeration may produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Budget(pub u128);

impl Budget {
    pub const DEFAULT: Budget = Budget(10_000_000);

    pub(crate) fn admit(self, what: &'static str, count: Option<u128>) -> Result<u128, TfError> {
        match count {
            Some(c) if c <= self.0 => Ok(c),
            other => Err(TfError::BudgetExceeded {
                what,
                count: other.map_or_else(|| "> 2^128".to_string(), |c| c.to_string()),
                budget: self.0,
            }),
        }
    }
}

impl Default for Budget {
    fn default() -> Self {
        Budget::DEFAULT
    }
}

/// One party: how many settings it can choose and how many outcomes it can see.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PartySpec {
    pub inputs: usize,
    pub outputs: usize,
}

impl PartySpec {
    pub const fn new(inputs: usize, outputs: usize) -> Self {
        PartySpec { inputs, outputs }
    }
}

/// The parties of an experiment, in order.
///
/// Text form is `SxO:SxO:...`, settings by outcomes per party, e.g. `2x2:2x2`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExperimentShape {
    parties: Vec<PartySpec>,
    joint_inputs: usize,
    joint_outputs: usize,
}

impl ExperimentShape {
    pub fn new(parties: Vec<PartySpec>) -> Result<Self, TfError> {
        if parties.is_empty() {
            return Err(TfError::InvalidShape(
                "at least one party is required".into(),
            ));
        }
        if let Some(p) = parties.iter().find(|p| p.inputs == 0 || p.outputs == 0) {
            return Err(TfError::InvalidShape(alloc::format!(
                "party {}x{} needs at least one setting and one outcome",
                p.inputs,
                p.outputs
            )));
        }
        let product = |f: fn(&PartySpec) -> usize| {
            parties
                .iter()
                .try_fold(1usize, |acc, p| acc.checked_mul(f(p)))
                .ok_or_else(|| TfError::InvalidShape("joint space does not fit in memory".into()))
        };
        let joint_inputs = product(|p| p.inputs)?;
        let joint_outputs = product(|p| p.outputs)?;
        Ok(ExperimentShape {
            parties,
            joint_inputs,
            joint_outputs,
        })
    }

    /// `parties` copies of the same party.
    pub fn uniform(parties: usize, inputs: usize, outputs: usize) -> Result<Self, TfError> {
        Self::new(vec![PartySpec::new(inputs, outputs); parties])
    }

    /// Two parties with two outcomes each and `settings` settings each.
    pub fn bipartite_binary(settings: usize) -> Self {
        Self::uniform(2, settings, 2).expect("valid bipartite shape")
    }

    pub fn parties(&self) -> &[PartySpec] {
        &self.parties
    }

    pub fn party_count(&self) -> usize {
        self.parties.len()
    }

    pub fn joint_inputs(&self) -> usize {
        self.joint_inputs
    }

    pub fn joint_outputs(&self) -> usize {
        self.joint_outputs
    }

    pub fn encode_input(&self, settings: &[usize]) -> Option<usize> {
        encode(self.parties.iter().map(|p| p.inputs), settings)
    }

    pub fn encode_output(&self, outcomes: &[usize]) -> Option<usize> {
        encode(self.parties.iter().map(|p| p.outputs), outcomes)
    }

    pub fn decode_input(&self, index: usize) -> Vec<usize> {
        decode(
            self.parties.iter().map(|p| p.inputs),
            self.parties.len(),
            index,
        )
    }

    pub fn decode_output(&self, index: usize) -> Vec<usize> {
        decode(
            self.parties.iter().map(|p| p.outputs),
            self.parties.len(),
            index,
        )
    }

    /// Component of `party` in the joint input with the given index.
    pub fn input_component(&self, index: usize, party: usize) -> usize {
        component(self.parties.iter().map(|p| p.inputs), index, party)
    }

    pub fn output_component(&self, index: usize, party: usize) -> usize {
        component(self.parties.iter().map(|p| p.outputs), index, party)
    }

    /// Joint input index with `party`'s setting replaced by `setting`.
    pub fn with_input_component(&self, index: usize, party: usize, setting: usize) -> usize {
        let stride: usize = self.parties[party + 1..].iter().map(|p| p.inputs).product();
        let current = (index / stride) % self.parties[party].inputs;
        index - current * stride + setting * stride
    }

    /// Whether every party has exactly two outcomes (`+`/`-` notation applies).
    pub fn is_binary(&self) -> bool {
        self.parties.iter().all(|p| p.outputs == 2)
    }
}

fn encode(radices: impl Iterator<Item = usize>, digits: &[usize]) -> Option<usize> {
    let mut index = 0usize;
    let mut n = 0;
    for (radix, &d) in radices.zip(digits) {
        if d >= radix {
            return None;
        }
        index = index * radix + d;
        n += 1;
    }
    (n == digits.len()).then_some(index)
}

fn decode(
    radices: impl DoubleEndedIterator<Item = usize>,
    len: usize,
    mut index: usize,
) -> Vec<usize> {
    let mut out = vec![0; len];
    for (slot, radix) in out.iter_mut().rev().zip(radices.rev()) {
        *slot = index % radix;
        index /= radix;
    }
    out
}

fn component(radices: impl DoubleEndedIterator<Item = usize>, index: usize, party: usize) -> usize {
    let radices: Vec<usize> = radices.collect();
    let stride: usize = radices[party + 1..].iter().product();
    (index / stride) % radices[party]
}

impl fmt::Display for ExperimentShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, p) in self.parties.iter().enumerate() {
            if n > 0 {
                f.write_str(":")?;
            }
            write!(f, "{}x{}", p.inputs, p.outputs)?;
        }
        Ok(())
    }
}

impl FromStr for ExperimentShape {
    type Err = TfError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || TfError::InvalidShape(alloc::format!("`{s}` is not of the form SxO:SxO"));
        let parties = s
            .trim()
            .split(':')
            .map(|party| {
                let (i, o) = party.trim().split_once(['x', 'X']).ok_or_else(bad)?;
                Ok(PartySpec::new(
                    i.trim().parse().map_err(|_| bad())?,
                    o.trim().parse().map_err(|_| bad())?,
                ))
            })
            .collect::<Result<Vec<_>, TfError>>()?;
        ExperimentShape::new(parties)
    }
}

/// Deterministic map from joint inputs to joint outputs.
///
/// Ordering is by shape, then lexicographically by table, which is the
/// enumeration order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TransferFunction {
    shape: ExperimentShape,
    table: Vec<usize>,
}

impl TransferFunction {
    /// `table[i]` is the joint output index for joint input index `i`.
    pub fn new(shape: ExperimentShape, table: Vec<usize>) -> Result<Self, TfError> {
        if table.len() != shape.joint_inputs() {
            return Err(TfError::InvalidTable(alloc::format!(
                "expected {} entries, found {}",
                shape.joint_inputs(),
                table.len()
            )));
        }
        if let Some(bad) = table.iter().find(|&&j| j >= shape.joint_outputs()) {
            return Err(TfError::InvalidTable(alloc::format!(
                "output index {bad} out of range for shape {shape}"
            )));
        }
        Ok(TransferFunction { shape, table })
    }

    /// Builds a function from a closure over input and output tuples.
    pub fn from_fn(
        shape: ExperimentShape,
        mut f: impl FnMut(&[usize]) -> Vec<usize>,
    ) -> Result<Self, TfError> {
        let table = (0..shape.joint_inputs())
            .map(|i| {
                let out = f(&shape.decode_input(i));
                shape.encode_output(&out).ok_or_else(|| {
                    TfError::InvalidTable(alloc::format!("invalid output tuple {out:?}"))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(shape, table)
    }

    /// Product-form function from per-party tables `factors[party][setting]`.
    pub fn from_factors(shape: ExperimentShape, factors: &[Vec<usize>]) -> Result<Self, TfError> {
        if factors.len() != shape.party_count()
            || factors
                .iter()
                .zip(shape.parties())
                .any(|(t, p)| t.len() != p.inputs || t.iter().any(|&o| o >= p.outputs))
        {
            return Err(TfError::InvalidTable(
                "factor tables do not fit the shape".into(),
            ));
        }
        Self::from_fn(shape, |inputs| {
            inputs.iter().zip(factors).map(|(&i, t)| t[i]).collect()
        })
    }

    /// The constant function with every party reporting outcome 0.
    pub fn constant(shape: ExperimentShape) -> Self {
        let table = vec![0; shape.joint_inputs()];
        TransferFunction { shape, table }
    }

    pub fn shape(&self) -> &ExperimentShape {
        &self.shape
    }

    pub fn table(&self) -> &[usize] {
        &self.table
    }

    /// Joint output index for joint input index `input`.
    pub fn output_index(&self, input: usize) -> usize {
        self.table[input]
    }

    pub fn eval(&self, settings: &[usize]) -> Option<Vec<usize>> {
        let i = self.shape.encode_input(settings)?;
        Some(self.shape.decode_output(self.table[i]))
    }

    /// Outcome of `party` when the joint input has index `input`.
    pub fn party_output(&self, input: usize, party: usize) -> usize {
        self.shape.output_component(self.table[input], party)
    }
}

/// Every transfer function of `shape`, in canonical order.
///
/// The count is `|J|^|I|`; enumerations above `budget` are refused.
pub fn enumerate_transfer_functions(
    shape: &ExperimentShape,
    budget: Budget,
) -> Result<TransferFunctions, TfError> {
    let count = (shape.joint_outputs() as u128).checked_pow(shape.joint_inputs() as u32);
    let count = if shape.joint_inputs() > u32::MAX as usize {
        None
    } else {
        count
    };
    let remaining = budget.admit("transfer function", count)?;
    Ok(TransferFunctions {
        shape: shape.clone(),
        next: Some(vec![0; shape.joint_inputs()]),
        remaining,
    })
}

/// Odometer over dense tables; the last input varies fastest.
#[derive(Debug, Clone)]
pub struct TransferFunctions {
    shape: ExperimentShape,
    next: Option<Vec<usize>>,
    remaining: u128,
}

impl Iterator for TransferFunctions {
    type Item = TransferFunction;

    fn next(&mut self) -> Option<TransferFunction> {
        let table = self.next.take()?;
        let mut succ = table.clone();
        let radix = self.shape.joint_outputs();
        let mut carry = true;
        for digit in succ.iter_mut().rev() {
            *digit += 1;
            if *digit < radix {
                carry = false;
                break;
            }
            *digit = 0;
        }
        if !carry {
            self.next = Some(succ);
        }
        self.remaining -= 1;
        Some(TransferFunction {
            shape: self.shape.clone(),
            table,
        })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = usize::try_from(self.remaining).unwrap_or(usize::MAX);
        (n, usize::try_from(self.remaining).ok())
    }
}

/// Which ordered party pairs carry a signal.
///
/// `signals(x, y)` is true when the outcome of party `y` depends on the
/// setting of party `x` for some choice of the other settings.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SignallingClass {
    parties: usize,
    flags: Vec<bool>,
}

impl SignallingClass {
    pub fn none(parties: usize) -> Self {
        SignallingClass {
            parties,
            flags: vec![false; parties * parties],
        }
    }

    pub fn parties(&self) -> usize {
        self.parties
    }

    pub fn signals(&self, from: usize, to: usize) -> bool {
        self.flags[from * self.parties + to]
    }

    pub(crate) fn set(&mut self, from: usize, to: usize) {
        self.flags[from * self.parties + to] = true;
    }

    pub fn is_null(&self) -> bool {
        !self.flags.iter().any(|&f| f)
    }

    /// Ordered pairs `(from, to)` that signal.
    pub fn signalling_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.parties)
            .flat_map(move |x| (0..self.parties).map(move |y| (x, y)))
            .filter(|&(x, y)| x != y && self.signals(x, y))
    }

    /// The four-way classification of a two-party function.
    pub fn two_party(&self) -> Option<TwoPartyClass> {
        (self.parties == 2).then(|| match (self.signals(0, 1), self.signals(1, 0)) {
            (false, false) => TwoPartyClass::NoSignal,
            (true, false) => TwoPartyClass::AToB,
            (false, true) => TwoPartyClass::BToA,
            (true, true) => TwoPartyClass::Both,
        })
    }
}

/// Signalling classes of a two-party function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TwoPartyClass {
    /// Null: no signal between A and B (3a).
    NoSignal,
    /// Signal from A to B only (3b).
    AToB,
    /// Signal from B to A only (3c).
    BToA,
    /// Signals both ways (3d).
    Both,
}

impl TwoPartyClass {
    pub const ALL: [TwoPartyClass; 4] = [
        TwoPartyClass::NoSignal,
        TwoPartyClass::AToB,
        TwoPartyClass::BToA,
        TwoPartyClass::Both,
    ];

    pub fn label(self) -> &'static str {
        match self {
            TwoPartyClass::NoSignal => "3a",
            TwoPartyClass::AToB => "3b",
            TwoPartyClass::BToA => "3c",
            TwoPartyClass::Both => "3d",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            TwoPartyClass::NoSignal => "No signals between A and B",
            TwoPartyClass::AToB => "Signal from A to B only",
            TwoPartyClass::BToA => "Signal from B to A only",
            TwoPartyClass::Both => "Signals both ways",
        }
    }
}

/// Exact signalling analysis: scans every pair of joint inputs that differ
/// in a single party's setting.
pub fn classify_signalling(f: &TransferFunction) -> SignallingClass {
    let shape = f.shape();
    let n = shape.party_count();
    let mut class = SignallingClass::none(n);
    for x in 0..n {
        let settings = shape.parties()[x].inputs;
        for i in 0..shape.joint_inputs() {
            if shape.input_component(i, x) != 0 {
                continue;
            }
            for s in 1..settings {
                let i2 = shape.with_input_component(i, x, s);
                for y in (0..n).filter(|&y| y != x) {
                    if f.party_output(i, y) != f.party_output(i2, y) {
                        class.set(x, y);
                    }
                }
            }
        }
    }
    class
}

/// Per-party factor tables when each party's outcome depends only on its own
/// setting; `None` otherwise.
pub fn is_product_form(f: &TransferFunction) -> Option<Vec<Vec<usize>>> {
    if !classify_signalling(f).is_null() {
        return None;
    }
    Some(product_factors_unchecked(f))
}

fn product_factors_unchecked(f: &TransferFunction) -> Vec<Vec<usize>> {
    let shape = f.shape();
    shape
        .parties()
        .iter()
        .enumerate()
        .map(|(party, spec)| {
            (0..spec.inputs)
                .map(|s| f.party_output(shape.with_input_component(0, party, s), party))
                .collect()
        })
        .collect()
}

/// Number of product-form (local deterministic) functions:
/// the product over parties of `outputs^inputs`. `None` on overflow.
pub fn count_local_deterministic(shape: &ExperimentShape) -> Option<u128> {
    shape.parties().iter().try_fold(1u128, |acc, p| {
        let per = (p.outputs as u128).checked_pow(u32::try_from(p.inputs).ok()?)?;
        acc.checked_mul(per)
    })
}

/// All product-form functions, first party's factor table most significant.
pub fn local_deterministic_functions(
    shape: &ExperimentShape,
    budget: Budget,
) -> Result<Vec<TransferFunction>, TfError> {
    budget.admit(
        "local deterministic function",
        count_local_deterministic(shape),
    )?;
    // Each party's factor tables in lexicographic order.
    let per_party: Vec<Vec<Vec<usize>>> = shape
        .parties()
        .iter()
        .map(|p| {
            let mut tables = Vec::new();
            let mut t = vec![0; p.inputs];
            loop {
                tables.push(t.clone());
                let mut pos = p.inputs;
                loop {
                    if pos == 0 {
                        return tables;
                    }
                    pos -= 1;
                    t[pos] += 1;
                    if t[pos] < p.outputs {
                        break;
                    }
                    t[pos] = 0;
                }
            }
        })
        .collect();
    let mut out = Vec::new();
    let mut choice = vec![0usize; per_party.len()];
    loop {
        let factors: Vec<Vec<usize>> = choice
            .iter()
            .zip(&per_party)
            .map(|(&c, tables)| tables[c].clone())
            .collect();
        out.push(TransferFunction::from_factors(shape.clone(), &factors)?);
        let mut pos = choice.len();
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            choice[pos] += 1;
            if choice[pos] < per_party[pos].len() {
                break;
            }
            choice[pos] = 0;
        }
    }
}

/// Class sizes over the full enumeration of a two-party shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Census {
    pub no_signal: u128,
    pub a_to_b: u128,
    pub b_to_a: u128,
    pub both: u128,
}

impl Census {
    pub fn total(&self) -> u128 {
        self.no_signal + self.a_to_b + self.b_to_a + self.both
    }

    pub fn get(&self, class: TwoPartyClass) -> u128 {
        match class {
            TwoPartyClass::NoSignal => self.no_signal,
            TwoPartyClass::AToB => self.a_to_b,
            TwoPartyClass::BToA => self.b_to_a,
            TwoPartyClass::Both => self.both,
        }
    }
}

pub fn census(shape: &ExperimentShape, budget: Budget) -> Result<Census, TfError> {
    if shape.party_count() != 2 {
        return Err(TfError::InvalidShape(
            "census needs exactly two parties".into(),
        ));
    }
    let mut c = Census::default();
    for f in enumerate_transfer_functions(shape, budget)? {
        match classify_signalling(&f).two_party().expect("two parties") {
            TwoPartyClass::NoSignal => c.no_signal += 1,
            TwoPartyClass::AToB => c.a_to_b += 1,
            TwoPartyClass::BToA => c.b_to_a += 1,
            TwoPartyClass::Both => c.both += 1,
        }
    }
    Ok(c)
}

// Text notation.
//
// Outcome symbols: `+`/`-` for two-outcome parties (+ is outcome 0), a
// decimal digit for parties with at most ten outcomes, `{n}` otherwise.
// Product-form functions print as `[+-,+-]`: per party, outcomes in setting
// order. Anything else prints as a dense table `{0.0>++;0.1>+-;...}` with
// zero-based settings joined by `.` on the left and output symbols on the
// right, in canonical input order.

fn outcome_symbol(out: &mut String, outputs: usize, outcome: usize) {
    use core::fmt::Write;
    match outputs {
        2 => out.push(if outcome == 0 { '+' } else { '-' }),
        o if o <= 10 => out.push(char::from(b'0' + outcome as u8)),
        _ => {
            let _ = write!(out, "{{{outcome}}}");
        }
    }
}

/// Canonical text form of `f`.
pub fn format_tf(f: &TransferFunction) -> String {
    use core::fmt::Write;
    let shape = f.shape();
    let mut s = String::new();
    match is_product_form(f) {
        Some(factors) => {
            s.push('[');
            for (n, (table, p)) in factors.iter().zip(shape.parties()).enumerate() {
                if n > 0 {
                    s.push(',');
                }
                for &o in table {
                    outcome_symbol(&mut s, p.outputs, o);
                }
            }
            s.push(']');
        }
        None => {
            s.push('{');
            for i in 0..shape.joint_inputs() {
                if i > 0 {
                    s.push(';');
                }
                for (n, setting) in shape.decode_input(i).into_iter().enumerate() {
                    if n > 0 {
                        s.push('.');
                    }
                    let _ = write!(s, "{setting}");
                }
                s.push('>');
                for (o, p) in shape
                    .decode_output(f.output_index(i))
                    .into_iter()
                    .zip(shape.parties())
                {
                    outcome_symbol(&mut s, p.outputs, o);
                }
            }
            s.push('}');
        }
    }
    s
}

fn parse_symbols(text: &str, parties: &[usize]) -> Result<Vec<usize>, String> {
    let mut chars = text.chars().peekable();
    let mut out = Vec::new();
    for &outputs in parties {
        let value = match chars.next() {
            Some('+') if outputs == 2 => 0,
            Some('-') if outputs == 2 => 1,
            Some(c @ '0'..='9') if (2..=10).contains(&outputs) || outputs == 1 => {
                (c as u8 - b'0') as usize
            }
            Some('{') => {
                let mut digits = String::new();
                loop {
                    match chars.next() {
                        Some('}') => break,
                        Some(d) if d.is_ascii_digit() => digits.push(d),
                        _ => return Err("unterminated `{n}` outcome".into()),
                    }
                }
                digits
                    .parse()
                    .map_err(|_| String::from("bad `{n}` outcome"))?
            }
            Some(c) => return Err(alloc::format!("unexpected outcome symbol `{c}`")),
            None => return Err("missing outcome symbol".into()),
        };
        if value >= outputs {
            return Err(alloc::format!("outcome {value} out of range"));
        }
        out.push(value);
    }
    if chars.next().is_some() {
        return Err("trailing outcome symbols".into());
    }
    Ok(out)
}

/// Parses either text form produced by [`format_tf`].
pub fn parse_tf(shape: &ExperimentShape, text: &str) -> Result<TransferFunction, TfError> {
    let err = |reason: String| TfError::Notation {
        text: text.into(),
        reason,
    };
    let t = text.trim();
    if let Some(body) = t.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
        let parts: Vec<&str> = body.split(',').collect();
        if parts.len() != shape.party_count() {
            return Err(err(alloc::format!(
                "expected {} party tables, found {}",
                shape.party_count(),
                parts.len()
            )));
        }
        let factors = parts
            .iter()
            .zip(shape.parties())
            .map(|(part, p)| parse_symbols(part.trim(), &vec![p.outputs; p.inputs]))
            .collect::<Result<Vec<_>, _>>()
            .map_err(err)?;
        return TransferFunction::from_factors(shape.clone(), &factors);
    }
    if let Some(body) = t.strip_prefix('{').and_then(|r| r.strip_suffix('}')) {
        let mut table = vec![None; shape.joint_inputs()];
        let outputs: Vec<usize> = shape.parties().iter().map(|p| p.outputs).collect();
        for entry in body.split(';').filter(|e| !e.trim().is_empty()) {
            let (lhs, rhs) = entry
                .split_once('>')
                .ok_or_else(|| err(alloc::format!("entry `{entry}` lacks `>`")))?;
            let settings = lhs
                .split('.')
                .map(|s| s.trim().parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| err(alloc::format!("bad settings `{lhs}`")))?;
            let i = shape
                .encode_input(&settings)
                .ok_or_else(|| err(alloc::format!("settings `{lhs}` out of range")))?;
            let outs = parse_symbols(rhs.trim(), &outputs).map_err(err)?;
            let j = shape.encode_output(&outs).expect("validated outcomes");
            if table[i].replace(j).is_some() {
                return Err(err(alloc::format!("settings `{lhs}` listed twice")));
            }
        }
        let table = table
            .into_iter()
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| err("table does not cover every joint input".into()))?;
        return TransferFunction::new(shape.clone(), table);
    }
    Err(err("expected `[..]` or `{..}`".into()))
}

impl fmt::Display for TransferFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_tf(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binary2() -> ExperimentShape {
        ExperimentShape::bipartite_binary(2)
    }

    #[test]
    fn shape_text_round_trip() {
        let s: ExperimentShape = "2x2:3x4".parse().unwrap();
        assert_eq!(s.joint_inputs(), 6);
        assert_eq!(s.joint_outputs(), 8);
        assert_eq!(s.to_string(), "2x2:3x4");
        assert!("2x0".parse::<ExperimentShape>().is_err());
        assert!("".parse::<ExperimentShape>().is_err());
        assert!("2y2".parse::<ExperimentShape>().is_err());
    }

    #[test]
    fn index_encoding_is_lexicographic() {
        let s: ExperimentShape = "2x2:3x2".parse().unwrap();
        let tuples: Vec<Vec<usize>> = (0..s.joint_inputs()).map(|i| s.decode_input(i)).collect();
        assert_eq!(tuples[0], [0, 0]);
        assert_eq!(tuples[1], [0, 1]);
        assert_eq!(tuples[3], [1, 0]);
        for (i, t) in tuples.iter().enumerate() {
            assert_eq!(s.encode_input(t), Some(i));
            assert_eq!(s.input_component(i, 1), t[1]);
            assert_eq!(
                s.with_input_component(i, 1, 2),
                s.encode_input(&[t[0], 2]).unwrap()
            );
        }
        assert_eq!(s.encode_input(&[2, 0]), None);
    }

    #[test]
    fn enumeration_counts() {
        let one = ExperimentShape::uniform(1, 1, 2).unwrap();
        assert_eq!(
            enumerate_transfer_functions(&one, Budget::DEFAULT)
                .unwrap()
                .count(),
            2
        );
        assert_eq!(
            enumerate_transfer_functions(&binary2(), Budget::DEFAULT)
                .unwrap()
                .count(),
            256
        );
        let trivial = ExperimentShape::uniform(2, 1, 1).unwrap();
        let all: Vec<_> = enumerate_transfer_functions(&trivial, Budget::DEFAULT)
            .unwrap()
            .collect();
        assert_eq!(all, vec![TransferFunction::constant(trivial)]);
    }

    #[test]
    fn enumeration_is_sorted_and_distinct() {
        let all: Vec<_> = enumerate_transfer_functions(&binary2(), Budget::DEFAULT)
            .unwrap()
            .collect();
        assert!(all.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn budget_is_enforced() {
        let big = ExperimentShape::bipartite_binary(3);
        // 4^9 = 262144
        assert!(matches!(
            enumerate_transfer_functions(&big, Budget(262_143)),
            Err(TfError::BudgetExceeded { .. })
        ));
        assert!(enumerate_transfer_functions(&big, Budget(262_144)).is_ok());
        let huge = ExperimentShape::uniform(3, 4, 4).unwrap();
        assert!(enumerate_transfer_functions(&huge, Budget::DEFAULT).is_err());
    }

    #[test]
    fn copier_signals_a_to_b_only() {
        let f = TransferFunction::from_fn(binary2(), |i| vec![0, i[0]]).unwrap();
        let c = classify_signalling(&f);
        assert_eq!(c.two_party(), Some(TwoPartyClass::AToB));
        assert_eq!(
            c.two_party().unwrap().description(),
            "Signal from A to B only"
        );
        assert!(is_product_form(&f).is_none());
        assert_eq!(c.signalling_pairs().collect::<Vec<_>>(), [(0, 1)]);
    }

    #[test]
    fn constant_is_null() {
        let f = TransferFunction::constant(binary2());
        assert!(classify_signalling(&f).is_null());
        assert_eq!(
            classify_signalling(&f).two_party(),
            Some(TwoPartyClass::NoSignal)
        );
    }

    #[test]
    fn census_on_binary_pair() {
        let c = census(&binary2(), Budget::DEFAULT).unwrap();
        assert_eq!((c.no_signal, c.a_to_b, c.b_to_a, c.both), (16, 48, 48, 144));
        assert_eq!(c.total(), 256);
    }

    #[test]
    fn product_form_notation() {
        let f = parse_tf(&binary2(), "[+-,+-]").unwrap();
        assert_eq!(is_product_form(&f), Some(vec![vec![0, 1], vec![0, 1]]));
        assert_eq!(format_tf(&f), "[+-,+-]");
        assert_eq!(f.eval(&[1, 0]), Some(vec![1, 0]));
    }

    #[test]
    fn dense_notation_round_trip() {
        let f = TransferFunction::from_fn(binary2(), |i| vec![i[1], i[0]]).unwrap();
        let text = format_tf(&f);
        assert_eq!(text, "{0.0>++;0.1>-+;1.0>+-;1.1>--}");
        assert_eq!(parse_tf(&binary2(), &text).unwrap(), f);
    }

    #[test]
    fn dense_notation_accepts_product_functions() {
        let f = parse_tf(&binary2(), "{0.0>++;0.1>+-;1.0>-+;1.1>--}").unwrap();
        assert_eq!(format_tf(&f), "[+-,+-]");
    }

    #[test]
    fn notation_rejects_garbage() {
        let s = binary2();
        for bad in [
            "[+-]",
            "[+-,+]",
            "[+x,+-]",
            "{0.0>++}",
            "{0.0>++;0.0>++;0.1>++;1.0>++;1.1>++}",
            "+-",
        ] {
            assert!(parse_tf(&s, bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn wide_outcome_notation() {
        let s: ExperimentShape = "1x12:2x3".parse().unwrap();
        let f = TransferFunction::from_factors(s.clone(), &[vec![11], vec![2, 0]]).unwrap();
        assert_eq!(format_tf(&f), "[{11},20]");
        assert_eq!(parse_tf(&s, "[{11},20]").unwrap(), f);
    }

    #[test]
    fn local_deterministic_counts() {
        assert_eq!(count_local_deterministic(&binary2()), Some(16));
        assert_eq!(
            count_local_deterministic(&ExperimentShape::bipartite_binary(3)),
            Some(64)
        );
        assert_eq!(
            count_local_deterministic(&ExperimentShape::uniform(1, 1, 1).unwrap()),
            Some(1)
        );
        let atoms = local_deterministic_functions(&binary2(), Budget::DEFAULT).unwrap();
        assert_eq!(atoms.len(), 16);
        assert!(atoms.iter().all(|f| is_product_form(f).is_some()));
    }
}
