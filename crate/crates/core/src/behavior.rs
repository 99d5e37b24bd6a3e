//! Conditional probability tables and mixtures of transfer functions.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::rational::{format_ratio, Rational};
use crate::tf::{classify_signalling, ExperimentShape, SignallingClass, TfError, TransferFunction};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BehaviorError {
    #[error(transparent)]
    Tf(#[from] TfError),
    #[error("table has {found} entries, shape needs {expected}")]
    TableSize { expected: usize, found: usize },
    #[error("negative probability {value} at input {input:?}, output {output:?}")]
    NegativeProbability {
        input: Vec<usize>,
        output: Vec<usize>,
        value: String,
    },
    #[error("probabilities for input {input:?} sum to {sum}, not 1")]
    NotNormalized { input: Vec<usize>, sum: String },
    #[error("negative weight {weight} on {tf}")]
    NegativeWeight { tf: String, weight: String },
    #[error("weights sum to {0}, not 1")]
    WeightsNotNormalized(String),
    #[error("mixing coefficient {0} is outside [0, 1]")]
    BadCoefficient(String),
}

impl BehaviorError {
    pub fn name(&self) -> &'static str {
        match self {
            BehaviorError::Tf(e) => e.name(),
            BehaviorError::TableSize { .. } => "TableSize",
            BehaviorError::NegativeProbability { .. } => "NegativeProbability",
            BehaviorError::NotNormalized { .. } => "NotNormalized",
            BehaviorError::NegativeWeight { .. } => "NegativeWeight",
            BehaviorError::WeightsNotNormalized(_) => "WeightsNotNormalized",
            BehaviorError::BadCoefficient(_) => "BadCoefficient",
        }
    }
}

/// `Pr(j|i)` for every joint input `i` and joint output `j`, exact.
///
/// Entry `(i, j)` lives at `i * |J| + j`. Every row is non-negative and sums
/// to exactly one.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Behavior {
    shape: ExperimentShape,
    table: Vec<Rational>,
}

impl Behavior {
    pub fn new(shape: ExperimentShape, table: Vec<Rational>) -> Result<Self, BehaviorError> {
        let (ni, nj) = (shape.joint_inputs(), shape.joint_outputs());
        if table.len() != ni * nj {
            return Err(BehaviorError::TableSize {
                expected: ni * nj,
                found: table.len(),
            });
        }
        for i in 0..ni {
            let row = &table[i * nj..(i + 1) * nj];
            if let Some((j, p)) = row.iter().enumerate().find(|(_, p)| p.is_negative()) {
                return Err(BehaviorError::NegativeProbability {
                    input: shape.decode_input(i),
                    output: shape.decode_output(j),
                    value: format_ratio(p),
                });
            }
            let sum = crate::rational::sum(row);
            if !sum.is_one() {
                return Err(BehaviorError::NotNormalized {
                    input: shape.decode_input(i),
                    sum: format_ratio(&sum),
                });
            }
        }
        Ok(Behavior { shape, table })
    }

    /// Builds a behavior from `p(input_tuple, output_tuple)`.
    pub fn from_fn(
        shape: ExperimentShape,
        mut p: impl FnMut(&[usize], &[usize]) -> Rational,
    ) -> Result<Self, BehaviorError> {
        let mut table = Vec::with_capacity(shape.joint_inputs() * shape.joint_outputs());
        for i in 0..shape.joint_inputs() {
            let input = shape.decode_input(i);
            for j in 0..shape.joint_outputs() {
                table.push(p(&input, &shape.decode_output(j)));
            }
        }
        Self::new(shape, table)
    }

    /// The deterministic behavior of a single transfer function.
    pub fn deterministic(f: &TransferFunction) -> Self {
        TfDistribution::point_mass(f.clone()).behavior()
    }

    pub fn shape(&self) -> &ExperimentShape {
        &self.shape
    }

    /// Dense table, row-major by joint input.
    pub fn table(&self) -> &[Rational] {
        &self.table
    }

    /// `Pr(j|i)` by joint indices.
    pub fn prob(&self, input: usize, output: usize) -> &Rational {
        &self.table[input * self.shape.joint_outputs() + output]
    }

    /// `Pr(j|i)` by tuples; `None` when a tuple is out of range.
    pub fn prob_of(&self, input: &[usize], output: &[usize]) -> Option<&Rational> {
        let i = self.shape.encode_input(input)?;
        let j = self.shape.encode_output(output)?;
        Some(self.prob(i, j))
    }

    /// Marginal distribution of `party`'s outcome for joint input `input`.
    pub fn marginal(&self, input: usize, party: usize) -> Vec<Rational> {
        let mut m = vec![Rational::zero(); self.shape.parties()[party].outputs];
        for j in 0..self.shape.joint_outputs() {
            m[self.shape.output_component(j, party)] += self.prob(input, j);
        }
        m
    }

    /// Nonzero entries as `(input index, output index, probability)`.
    pub fn support(&self) -> impl Iterator<Item = (usize, usize, &Rational)> + '_ {
        let nj = self.shape.joint_outputs();
        self.table
            .iter()
            .enumerate()
            .filter(|(_, p)| !p.is_zero())
            .map(move |(k, p)| (k / nj, k % nj, p))
    }

    /// `lambda * self + (1 - lambda) * other`.
    pub fn mix(&self, other: &Behavior, lambda: &Rational) -> Result<Behavior, BehaviorError> {
        check_coefficient(lambda)?;
        if self.shape != other.shape {
            return Err(TfError::mismatch(&self.shape, &other.shape).into());
        }
        let mu = Rational::one() - lambda;
        let table = self
            .table
            .iter()
            .zip(&other.table)
            .map(|(a, b)| lambda * a + &mu * b)
            .collect();
        Ok(Behavior {
            shape: self.shape.clone(),
            table,
        })
    }
}

fn check_coefficient(lambda: &Rational) -> Result<(), BehaviorError> {
    if lambda.is_negative() || lambda > &Rational::one() {
        return Err(BehaviorError::BadCoefficient(format_ratio(lambda)));
    }
    Ok(())
}

/// Probability distribution over transfer functions of one shape.
///
/// Atoms are keyed by the function itself (equivalently by its canonical text
/// form), so two descriptions of the same function merge. Zero weights are
/// dropped; the remaining weights are positive and sum to one.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TfDistribution {
    shape: ExperimentShape,
    weights: BTreeMap<TransferFunction, Rational>,
}

impl TfDistribution {
    pub fn new(
        shape: ExperimentShape,
        atoms: impl IntoIterator<Item = (TransferFunction, Rational)>,
    ) -> Result<Self, BehaviorError> {
        let mut weights: BTreeMap<TransferFunction, Rational> = BTreeMap::new();
        for (f, w) in atoms {
            if f.shape() != &shape {
                return Err(TfError::mismatch(&shape, f.shape()).into());
            }
            if w.is_negative() {
                return Err(BehaviorError::NegativeWeight {
                    tf: f.to_string(),
                    weight: format_ratio(&w),
                });
            }
            *weights.entry(f).or_insert_with(Rational::zero) += w;
        }
        weights.retain(|_, w| !w.is_zero());
        let total = crate::rational::sum(weights.values());
        if !total.is_one() {
            return Err(BehaviorError::WeightsNotNormalized(format_ratio(&total)));
        }
        Ok(TfDistribution { shape, weights })
    }

    pub fn point_mass(f: TransferFunction) -> Self {
        let shape = f.shape().clone();
        let mut weights = BTreeMap::new();
        weights.insert(f, Rational::one());
        TfDistribution { shape, weights }
    }

    /// Equal weight on each distinct function in `fs`.
    pub fn uniform(shape: ExperimentShape, fs: &[TransferFunction]) -> Result<Self, BehaviorError> {
        let w = Rational::new(1.into(), fs.len().max(1).into());
        Self::new(shape, fs.iter().cloned().map(|f| (f, w.clone())))
    }

    pub fn shape(&self) -> &ExperimentShape {
        &self.shape
    }

    /// Atoms in canonical order with their positive weights.
    pub fn atoms(&self) -> impl Iterator<Item = (&TransferFunction, &Rational)> {
        self.weights.iter()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weight(&self, f: &TransferFunction) -> Rational {
        self.weights.get(f).cloned().unwrap_or_else(Rational::zero)
    }

    /// `lambda * self + (1 - lambda) * other`.
    pub fn mix(&self, other: &TfDistribution, lambda: &Rational) -> Result<Self, BehaviorError> {
        check_coefficient(lambda)?;
        let mu = Rational::one() - lambda;
        let atoms = self
            .weights
            .iter()
            .map(|(f, w)| (f.clone(), w * lambda))
            .chain(other.weights.iter().map(|(f, w)| (f.clone(), w * &mu)));
        Self::new(self.shape.clone(), atoms)
    }

    /// `Pr(j|i) = sum_F Pr(F) [F(i) = j]`.
    pub fn behavior(&self) -> Behavior {
        let nj = self.shape.joint_outputs();
        let mut table = vec![Rational::zero(); self.shape.joint_inputs() * nj];
        for (f, w) in &self.weights {
            for (i, &j) in f.table().iter().enumerate() {
                table[i * nj + j] += w;
            }
        }
        Behavior {
            shape: self.shape.clone(),
            table,
        }
    }
}

pub fn behavior_from_distribution(d: &TfDistribution) -> Behavior {
    d.behavior()
}

/// Behavior-level signalling: `signals(x, y)` is true when some change of
/// party `x`'s setting, other settings fixed, changes the marginal
/// distribution of party `y`'s outcome.
pub fn check_no_signalling(b: &Behavior) -> SignallingClass {
    let shape = b.shape();
    let n = shape.party_count();
    let mut class = SignallingClass::none(n);
    for x in 0..n {
        for i in (0..shape.joint_inputs()).filter(|&i| shape.input_component(i, x) == 0) {
            for s in 1..shape.parties()[x].inputs {
                let i2 = shape.with_input_component(i, x, s);
                for y in 0..n {
                    if y != x && !class.signals(x, y) && b.marginal(i, y) != b.marginal(i2, y) {
                        class.set(x, y);
                    }
                }
            }
        }
    }
    class
}

/// Total weight of atoms in which `from` signals to `to`.
pub fn weak_signalling_probability(d: &TfDistribution, from: usize, to: usize) -> Rational {
    d.atoms()
        .filter(|(f, _)| classify_signalling(f).signals(from, to))
        .fold(Rational::zero(), |acc, (_, w)| acc + w)
}
