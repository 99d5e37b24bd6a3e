//! The local-deterministic polytope.
//!
//! A behavior is local when it is a mixture of product-form transfer
//! functions. [`local_membership`] decides this exactly and returns either
//! the mixture or a Bell-type inequality the behavior violates.
//!
//! The symmetric singlet constructions with two and three settings per side
//! are solved in closed form by [`derive_symmetric_probabilities`]; the
//! three-setting case yields the Bell expression of [`bell_expression`].

use alloc::string::String;
use alloc::vec::Vec;
use alloc::{format, vec};

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::behavior::{Behavior, BehaviorError, TfDistribution};
use crate::lp::{self, Feasibility, LinearSystem};
use crate::rational::{format_ratio, int, ratio, Rational};
use crate::tf::{
    count_local_deterministic, local_deterministic_functions, parse_tf, Budget, ExperimentShape,
    TfError, TransferFunction,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LocalPolyError {
    #[error(transparent)]
    Tf(#[from] TfError),
    #[error(transparent)]
    Behavior(#[from] BehaviorError),
    #[error("symmetry violated at {entry}: {detail}")]
    SymmetryViolated { entry: String, detail: String },
    #[error("Bell instance must be 1, 2 or 3, got {0}")]
    BadInstance(usize),
    #[error("the symmetric scenario has 2 or 3 settings, got {0}")]
    BadScenario(usize),
}

impl LocalPolyError {
    pub fn name(&self) -> &'static str {
        match self {
            LocalPolyError::Tf(e) => e.name(),
            LocalPolyError::Behavior(e) => e.name(),
            LocalPolyError::SymmetryViolated { .. } => "SymmetryViolated",
            LocalPolyError::BadInstance(_) => "BadInstance",
            LocalPolyError::BadScenario(_) => "BadScenario",
        }
    }
}

/// Default cap on the number of local deterministic atoms fed to the LP.
pub const DEFAULT_ATOM_BUDGET: Budget = Budget(100_000);

/// A linear functional on behaviors, `<c, b> = sum c(i, j) Pr(j|i)`, with
/// `<c, b_det> >= threshold` for every local deterministic behavior.
///
/// `violation = <c, b> - threshold` for the behavior it was derived from.
/// Coefficients are scaled so the largest absolute value is 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BellCertificate {
    shape: ExperimentShape,
    coefficients: Vec<Rational>,
    threshold: Rational,
    violation: Rational,
}

impl BellCertificate {
    pub fn new(
        shape: ExperimentShape,
        coefficients: Vec<Rational>,
        threshold: Rational,
        violation: Rational,
    ) -> Result<Self, BehaviorError> {
        let expected = shape.joint_inputs() * shape.joint_outputs();
        if coefficients.len() != expected {
            return Err(BehaviorError::TableSize {
                expected,
                found: coefficients.len(),
            });
        }
        Ok(BellCertificate {
            shape,
            coefficients,
            threshold,
            violation,
        })
    }

    pub fn shape(&self) -> &ExperimentShape {
        &self.shape
    }

    /// `c(i, j)` at `i * |J| + j`.
    pub fn coefficients(&self) -> &[Rational] {
        &self.coefficients
    }

    pub fn threshold(&self) -> &Rational {
        &self.threshold
    }

    pub fn violation(&self) -> &Rational {
        &self.violation
    }

    pub fn evaluate(&self, b: &Behavior) -> Rational {
        b.table()
            .iter()
            .zip(&self.coefficients)
            .filter(|(p, _)| !p.is_zero())
            .fold(Rational::zero(), |acc, (p, c)| acc + p * c)
    }

    /// `<c, b>` for the deterministic behavior of `f`.
    pub fn evaluate_deterministic(&self, f: &TransferFunction) -> Rational {
        let nj = self.shape.joint_outputs();
        f.table()
            .iter()
            .enumerate()
            .fold(Rational::zero(), |acc, (i, &j)| {
                acc + &self.coefficients[i * nj + j]
            })
    }

    /// Checks the bound on every local deterministic behavior.
    pub fn holds_on_local_points(&self, budget: Budget) -> Result<bool, TfError> {
        Ok(local_deterministic_functions(&self.shape, budget)?
            .iter()
            .all(|f| self.evaluate_deterministic(f) >= self.threshold))
    }

    /// Whether `b` violates the inequality.
    pub fn separates(&self, b: &Behavior) -> bool {
        b.shape() == &self.shape && self.evaluate(b) < self.threshold
    }
}

/// Result of a membership test.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpVerdict {
    /// A mixture of product-form functions reproducing the behavior exactly.
    Feasible(TfDistribution),
    /// A violated Bell-type inequality.
    Infeasible(BellCertificate),
}

impl LpVerdict {
    pub fn is_feasible(&self) -> bool {
        matches!(self, LpVerdict::Feasible(_))
    }
}

/// Decides whether `b` is a mixture of product-form transfer functions.
///
/// Variables are the weights of the local deterministic atoms; one equality
/// per `(i, j)` entry plus total weight one.
pub fn local_membership(b: &Behavior, budget: Budget) -> Result<LpVerdict, LocalPolyError> {
    let shape = b.shape();
    budget.admit("local deterministic atom", count_local_deterministic(shape))?;
    let atoms = local_deterministic_functions(shape, budget)?;
    let nj = shape.joint_outputs();
    let entries = shape.joint_inputs() * nj;

    let mut rhs: Vec<Rational> = b.table().to_vec();
    rhs.push(Rational::one());
    let mut system = LinearSystem::new(rhs);
    for f in &atoms {
        let mut col: Vec<(usize, i64)> = f
            .table()
            .iter()
            .enumerate()
            .map(|(i, &j)| (i * nj + j, 1))
            .collect();
        col.push((entries, 1));
        system.push_column(col);
    }

    match lp::solve(&system) {
        Feasibility::Feasible(x) => {
            let witness = TfDistribution::new(shape.clone(), atoms.into_iter().zip(x))?;
            Ok(LpVerdict::Feasible(witness))
        }
        Feasibility::Infeasible(y) => {
            // y^T A <= 0 and y^T b > 0. With c = -y on the entries and the
            // normalisation row moved to the right: <c, b_det> >= y_norm.
            let mut coefficients: Vec<Rational> = y[..entries].iter().map(|v| -v).collect();
            let mut threshold = y[entries].clone();
            let scale = coefficients
                .iter()
                .map(Signed::abs)
                .max()
                .filter(|m| !m.is_zero())
                .expect("a Farkas vector has a nonzero entry coefficient");
            for c in coefficients.iter_mut() {
                *c /= &scale;
            }
            threshold /= &scale;
            let mut cert = BellCertificate {
                shape: shape.clone(),
                coefficients,
                threshold,
                violation: Rational::zero(),
            };
            cert.violation = cert.evaluate(b) - &cert.threshold;
            debug_assert!(cert.violation.is_negative());
            Ok(LpVerdict::Infeasible(cert))
        }
    }
}

/// Perfect correlation unless both settings are 1, then perfect
/// anti-correlation; uniform marginals.
pub fn pr_box() -> Behavior {
    Behavior::from_fn(ExperimentShape::bipartite_binary(2), |i, j| {
        if (j[0] ^ j[1]) == (i[0] & i[1]) {
            ratio(1, 2)
        } else {
            Rational::zero()
        }
    })
    .expect("valid PR box")
}

/// Singlet-type scenario with two or three measurement angles shared by A
/// and B.
///
/// Angles at A and B are measured from opposite zeros, so equal settings
/// always give equal signs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymmetricSingletScenario {
    settings: usize,
    reversed_zero: bool,
}

impl SymmetricSingletScenario {
    pub fn new(settings: usize) -> Result<Self, LocalPolyError> {
        if !(2..=3).contains(&settings) {
            return Err(LocalPolyError::BadScenario(settings));
        }
        Ok(SymmetricSingletScenario {
            settings,
            reversed_zero: true,
        })
    }

    pub fn settings(&self) -> usize {
        self.settings
    }

    /// Always true: B's zero points opposite to A's.
    pub fn reversed_zero(&self) -> bool {
        self.reversed_zero
    }

    pub fn shape(&self) -> ExperimentShape {
        ExperimentShape::bipartite_binary(self.settings)
    }

    /// The atom pairs carrying each independent probability, in order
    /// `P_1, P_2` (two settings) or `P_0 .. P_3` (three settings). Each pair
    /// is a sign string and its reversal, identical at A and B.
    pub fn atom_pairs(&self) -> Vec<[TransferFunction; 2]> {
        let patterns: &[&str] = if self.settings == 2 {
            &["++", "+-"]
        } else {
            &["+++", "-++", "+-+", "++-"]
        };
        let shape = self.shape();
        patterns
            .iter()
            .map(|p| {
                let flip: String = p
                    .chars()
                    .map(|c| if c == '+' { '-' } else { '+' })
                    .collect();
                [
                    parse_tf(&shape, &format!("[{p},{p}]")).expect("valid pattern"),
                    parse_tf(&shape, &format!("[{flip},{flip}]")).expect("valid pattern"),
                ]
            })
            .collect()
    }

    /// The distribution putting `values[k]` on both atoms of pair `k`.
    pub fn distribution(&self, values: &[Rational]) -> Result<TfDistribution, LocalPolyError> {
        let pairs = self.atom_pairs();
        if values.len() != pairs.len() {
            return Err(LocalPolyError::BadScenario(values.len()));
        }
        let atoms = pairs
            .into_iter()
            .zip(values)
            .flat_map(|([a, b], w)| [(a, w.clone()), (b, w.clone())]);
        Ok(TfDistribution::new(self.shape(), atoms)?)
    }
}

/// Independent probabilities of the symmetric scenario recovered from a
/// behavior: `[P_1, P_2]` or `[P_0, P_1, P_2, P_3]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymmetricProbabilities {
    pub settings: usize,
    pub values: Vec<Rational>,
}

impl SymmetricProbabilities {
    /// A negative value means no local mixture reproduces the behavior.
    pub fn is_bell_violation(&self) -> bool {
        self.values.iter().any(Signed::is_negative)
    }
}

const PLUS: usize = 0;
const MINUS: usize = 1;

fn pr(b: &Behavior, signs: (usize, usize), settings: (usize, usize)) -> &Rational {
    b.prob_of(&[settings.0, settings.1], &[signs.0, signs.1])
        .expect("indices checked against shape")
}

fn sign_label(s: usize) -> char {
    if s == PLUS {
        '+'
    } else {
        '-'
    }
}

fn entry_label(signs: (usize, usize), settings: (usize, usize)) -> String {
    format!(
        "Pr({}{}/{}{})",
        sign_label(signs.0),
        sign_label(signs.1),
        settings.0 + 1,
        settings.1 + 1
    )
}

fn check_symmetry(b: &Behavior, n: usize) -> Result<(), LocalPolyError> {
    let violated = |signs, settings, detail: &str| LocalPolyError::SymmetryViolated {
        entry: entry_label(signs, settings),
        detail: format!("{detail} (value {})", format_ratio(pr(b, signs, settings))),
    };
    for a in 0..n {
        for s in [(PLUS, MINUS), (MINUS, PLUS)] {
            if !pr(b, s, (a, a)).is_zero() {
                return Err(violated(s, (a, a), "equal settings must give equal signs"));
            }
        }
        for c in 0..n {
            for (s, r) in [
                ((PLUS, PLUS), (MINUS, MINUS)),
                ((PLUS, MINUS), (MINUS, PLUS)),
            ] {
                if pr(b, s, (a, c)) != pr(b, r, (a, c)) {
                    return Err(violated(
                        s,
                        (a, c),
                        "reversing every sign must not change the probability",
                    ));
                }
                if pr(b, s, (a, c)) != pr(b, (s.1, s.0), (c, a)) {
                    return Err(violated(
                        s,
                        (a, c),
                        "exchanging A and B must not change the probability",
                    ));
                }
            }
        }
    }
    Ok(())
}

fn check_shape(b: &Behavior, n: usize) -> Result<(), LocalPolyError> {
    let expected = ExperimentShape::bipartite_binary(n);
    if b.shape() != &expected {
        return Err(TfError::mismatch(&expected, b.shape()).into());
    }
    Ok(())
}

/// Solves the symmetric scenario for its independent probabilities.
///
/// Two settings: `P_1 = Pr(++/12)`, `P_2 = Pr(+-/12)`. Three settings:
///
/// ```text
/// 2 P_0 = Pr(++/23) + Pr(++/31) + Pr(++/12) - 1/2
/// 2 P_1 = Pr(+-/31) + Pr(+-/12) - Pr(+-/23)      and cyclic in 1, 2, 3
/// ```
///
/// The behavior must give equal signs at equal settings and be invariant
/// under reversing all signs and under exchanging A with B.
pub fn derive_symmetric_probabilities(
    scenario: &SymmetricSingletScenario,
    b: &Behavior,
) -> Result<SymmetricProbabilities, LocalPolyError> {
    let n = scenario.settings();
    check_shape(b, n)?;
    check_symmetry(b, n)?;
    let values = if n == 2 {
        vec![
            pr(b, (PLUS, PLUS), (0, 1)).clone(),
            pr(b, (PLUS, MINUS), (0, 1)).clone(),
        ]
    } else {
        let same = |x, y| pr(b, (PLUS, PLUS), (x, y));
        let two_p0 = same(1, 2) + same(2, 0) + same(0, 1) - ratio(1, 2);
        let mut values = vec![two_p0 / int(2)];
        for k in 1..=3 {
            values.push(bell_expression(b, k)? / int(2));
        }
        values
    };
    Ok(SymmetricProbabilities {
        settings: n,
        values,
    })
}

/// Cyclic instance `k` of `Pr(+-/k+2,k) + Pr(+-/k,k+1) - Pr(+-/k+1,k+2)`,
/// settings numbered 1 to 3. For `k = 1`:
/// `Pr(+-/31) + Pr(+-/12) - Pr(+-/23)`. Local behaviors of the symmetric
/// scenario keep it non-negative.
pub fn bell_expression(b: &Behavior, instance: usize) -> Result<Rational, LocalPolyError> {
    check_shape(b, 3)?;
    Ok(bell_terms(instance)?
        .into_iter()
        .fold(Rational::zero(), |acc, (settings, c)| {
            acc + c * pr(b, (PLUS, MINUS), settings)
        }))
}

/// Settings `(x, y)` of one `Pr(+-/x y)` term and its coefficient.
pub type BellTerm = ((usize, usize), Rational);

/// Coefficients of [`bell_expression`] on `Pr(+-/x y)`, zero-based settings.
pub fn bell_terms(instance: usize) -> Result<Vec<BellTerm>, LocalPolyError> {
    if !(1..=3).contains(&instance) {
        return Err(LocalPolyError::BadInstance(instance));
    }
    let k = instance - 1;
    let (k1, k2) = ((k + 1) % 3, (k + 2) % 3);
    Ok(vec![
        ((k2, k), int(1)),
        ((k, k1), int(1)),
        ((k1, k2), int(-1)),
    ])
}

/// `4 Pr(+-/i_A i_B) - 1`: the product expectation in the same-origin angle
/// convention, where opposite signs here are equal signs there.
/// Settings are zero-based.
pub fn expectation_from_behavior(
    b: &Behavior,
    settings: (usize, usize),
) -> Result<Rational, LocalPolyError> {
    let shape = b.shape();
    if shape.party_count() != 2 || !shape.is_binary() {
        return Err(TfError::ShapeMismatch {
            expected: "two parties with two outcomes each".into(),
            found: format!("{shape}"),
        }
        .into());
    }
    let p = b
        .prob_of(&[settings.0, settings.1], &[PLUS, MINUS])
        .ok_or_else(|| TfError::InvalidShape(format!("settings {settings:?} out of range")))?;
    Ok(int(4) * p - Rational::one())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three() -> SymmetricSingletScenario {
        SymmetricSingletScenario::new(3).unwrap()
    }

    #[test]
    fn scenario_sizes() {
        assert!(SymmetricSingletScenario::new(4).is_err());
        assert!(SymmetricSingletScenario::new(2).unwrap().reversed_zero());
        assert_eq!(three().atom_pairs().len(), 4);
        assert_eq!(
            crate::tf::format_tf(&three().atom_pairs()[1][1]),
            "[+--,+--]",
        );
    }

    #[test]
    fn two_setting_mixture_has_half_at_equal_settings() {
        let s2 = SymmetricSingletScenario::new(2).unwrap();
        let d = s2.distribution(&[ratio(1, 6), ratio(1, 3)]).unwrap();
        let b = d.behavior();
        assert_eq!(pr(&b, (PLUS, PLUS), (0, 0)), &ratio(1, 2));
        assert_eq!(pr(&b, (MINUS, MINUS), (0, 0)), &ratio(1, 2));
        let p = derive_symmetric_probabilities(&s2, &b).unwrap();
        assert_eq!(p.values, [ratio(1, 6), ratio(1, 3)]);
    }

    #[test]
    fn p0_from_quarter_same_sign_entries() {
        // Pr(++/23) = Pr(++/31) = Pr(++/12) = 1/4 gives 2 P_0 = 1/4.
        let d = three().distribution(&vec![ratio(1, 8); 4]).unwrap();
        let b = d.behavior();
        assert_eq!(pr(&b, (PLUS, PLUS), (1, 2)), &ratio(1, 4));
        assert_eq!(pr(&b, (PLUS, PLUS), (1, 2)), &(ratio(1, 8) + ratio(1, 8)));
        let p = derive_symmetric_probabilities(&three(), &b).unwrap();
        assert_eq!(p.values, vec![ratio(1, 8); 4]);
        assert!(!p.is_bell_violation());
    }

    #[test]
    fn symmetry_violations_name_the_entry() {
        let err = derive_symmetric_probabilities(&three(), &pr_box_3()).unwrap_err();
        assert!(
            matches!(err, LocalPolyError::SymmetryViolated { ref entry, .. } if entry.starts_with("Pr("))
        );
        let err = derive_symmetric_probabilities(&three(), &pr_box()).unwrap_err();
        assert_eq!(err.name(), "ShapeMismatch");
    }

    fn pr_box_3() -> Behavior {
        Behavior::from_fn(ExperimentShape::bipartite_binary(3), |i, j| {
            if (j[0] ^ j[1]) == usize::from(i[0] == 2 && i[1] == 2) {
                ratio(1, 2)
            } else {
                Rational::zero()
            }
        })
        .unwrap()
    }

    #[test]
    fn perfect_correlation_has_zero_bell_value() {
        let b = Behavior::from_fn(ExperimentShape::bipartite_binary(3), |_, j| {
            if j[0] == j[1] {
                ratio(1, 2)
            } else {
                Rational::zero()
            }
        })
        .unwrap();
        for k in 1..=3 {
            assert!(bell_expression(&b, k).unwrap().is_zero());
        }
        assert!(matches!(
            bell_expression(&b, 0),
            Err(LocalPolyError::BadInstance(0))
        ));
        assert!(matches!(
            bell_expression(&b, 4),
            Err(LocalPolyError::BadInstance(4))
        ));
    }

    #[test]
    fn expectation_values() {
        let b = Behavior::from_fn(ExperimentShape::bipartite_binary(3), |i, j| {
            if i[0] == i[1] {
                if j[0] == j[1] {
                    ratio(1, 2)
                } else {
                    Rational::zero()
                }
            } else {
                ratio(1, 4)
            }
        })
        .unwrap();
        assert_eq!(expectation_from_behavior(&b, (0, 0)).unwrap(), int(-1));
        assert_eq!(expectation_from_behavior(&b, (0, 1)).unwrap(), int(0));
        let anti = Behavior::from_fn(ExperimentShape::bipartite_binary(2), |_, j| {
            if j[0] != j[1] {
                ratio(1, 2)
            } else {
                Rational::zero()
            }
        })
        .unwrap();
        assert_eq!(expectation_from_behavior(&anti, (1, 0)).unwrap(), int(1));
        assert!(expectation_from_behavior(&anti, (2, 0)).is_err());
    }

    #[test]
    fn pr_box_is_not_local() {
        match local_membership(&pr_box(), DEFAULT_ATOM_BUDGET).unwrap() {
            LpVerdict::Infeasible(cert) => {
                assert!(cert.violation().is_negative());
                assert!(cert.holds_on_local_points(DEFAULT_ATOM_BUDGET).unwrap());
                assert!(cert.separates(&pr_box()));
                assert!(cert
                    .coefficients()
                    .iter()
                    .map(Signed::abs)
                    .max()
                    .unwrap()
                    .is_one());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn mixtures_of_atoms_are_local() {
        let d = three()
            .distribution(&[ratio(1, 8), ratio(1, 16), ratio(3, 16), ratio(1, 8)])
            .unwrap();
        match local_membership(&d.behavior(), DEFAULT_ATOM_BUDGET).unwrap() {
            LpVerdict::Feasible(w) => assert_eq!(w.behavior(), d.behavior()),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn atom_budget_is_enforced() {
        assert!(matches!(
            local_membership(&pr_box(), Budget(15)),
            Err(LocalPolyError::Tf(TfError::BudgetExceeded { .. }))
        ));
    }

    #[test]
    fn bell_terms_hold_on_symmetric_local_pairs() {
        let scenario = SymmetricSingletScenario::new(3).unwrap();
        for [a, b] in scenario.atom_pairs() {
            let d = TfDistribution::new(scenario.shape(), [(a, ratio(1, 2)), (b, ratio(1, 2))])
                .unwrap();
            for k in 1..=3 {
                assert!(!bell_expression(&d.behavior(), k).unwrap().is_negative());
            }
        }
        assert_eq!(bell_terms(1).unwrap()[2], ((1, 2), int(-1)));
    }
}
