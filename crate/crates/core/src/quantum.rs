//! Singlet-state oracle.
//!
//! Two spin-1/2 particles in the singlet state are measured along directions
//! in the x-z plane. A measures at `theta[i_A]`, B at `theta[i_B]` counted
//! from the opposite zero, so equal settings always give equal signs. The
//! probabilities come from an explicit four-component state vector and
//! rotated projectors; [`closed_form`] is the independent cross-check.
//!
//! Outcome 0 is `+` (spin along the field), outcome 1 is `-`.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::behavior::{Behavior, BehaviorError};
use crate::rational::{ratio, rationalize, Rational, RationalError};
use crate::tf::ExperimentShape;

/// Default bound on denominators when rationalizing probabilities.
pub const DEFAULT_DENOMINATOR_BOUND: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantumError {
    #[error("at least one measurement angle is required")]
    NoAngles,
    #[error("angle {0} is not finite")]
    NonFinite(f64),
    #[error("angle {0} is not a multiple of pi/6")]
    OffGrid(f64),
    #[error("angle difference of {0} sixths of pi has an irrational squared sine")]
    NotExact(i64),
    #[error(transparent)]
    Rational(#[from] RationalError),
    #[error(transparent)]
    Behavior(#[from] BehaviorError),
}

impl QuantumError {
    pub fn name(&self) -> &'static str {
        match self {
            QuantumError::NoAngles => "NoAngles",
            QuantumError::NonFinite(_) => "NonFinite",
            QuantumError::OffGrid(_) => "OffGrid",
            QuantumError::NotExact(_) => "NotExact",
            QuantumError::Rational(_) => "Rational",
            QuantumError::Behavior(e) => e.name(),
        }
    }
}

/// Measurement angle of each setting, in radians, shared by A and B.
#[derive(Debug, Clone, PartialEq)]
pub struct SettingAngles(Vec<f64>);

impl SettingAngles {
    pub fn new(theta: Vec<f64>) -> Result<Self, QuantumError> {
        if theta.is_empty() {
            return Err(QuantumError::NoAngles);
        }
        if let Some(&bad) = theta.iter().find(|t| !t.is_finite()) {
            return Err(QuantumError::NonFinite(bad));
        }
        Ok(SettingAngles(theta))
    }

    pub fn theta(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The two-party, two-outcome shape with one setting per angle.
    pub fn shape(&self) -> ExperimentShape {
        ExperimentShape::bipartite_binary(self.len())
    }
}

type Ket2 = [Complex64; 2];
type Ket4 = [Complex64; 4];
type Op2 = [[Complex64; 2]; 2];

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// `(|01> - |10>) / sqrt 2` in the basis `|00>, |01>, |10>, |11>`.
pub fn singlet_state() -> Ket4 {
    [c(0.0), c(FRAC_1_SQRT_2), c(-FRAC_1_SQRT_2), c(0.0)]
}

/// Spin-1/2 rotation by `theta` about the y axis.
fn rotation(theta: f64) -> Op2 {
    let (s, co) = (libm::sin(theta / 2.0), libm::cos(theta / 2.0));
    [[c(co), c(-s)], [c(s), c(co)]]
}

fn apply(op: &Op2, v: &Ket2) -> Ket2 {
    [
        op[0][0] * v[0] + op[0][1] * v[1],
        op[1][0] * v[0] + op[1][1] * v[1],
    ]
}

/// Projector onto spin `outcome` (0 = along, 1 = against) for a field at
/// angle `theta`.
fn projector(theta: f64, outcome: usize) -> Op2 {
    let basis: Ket2 = if outcome == 0 {
        [Complex64::one(), Complex64::zero()]
    } else {
        [Complex64::zero(), Complex64::one()]
    };
    let v = apply(&rotation(theta), &basis);
    let mut p = [[Complex64::zero(); 2]; 2];
    for (r, row) in p.iter_mut().enumerate() {
        for (k, entry) in row.iter_mut().enumerate() {
            *entry = v[r] * v[k].conj();
        }
    }
    p
}

fn kron(a: &Op2, b: &Op2) -> [[Complex64; 4]; 4] {
    let mut out = [[Complex64::zero(); 4]; 4];
    for (r, row) in out.iter_mut().enumerate() {
        for (k, entry) in row.iter_mut().enumerate() {
            *entry = a[r / 2][k / 2] * b[r % 2][k % 2];
        }
    }
    out
}

fn expectation(op: &[[Complex64; 4]; 4], psi: &Ket4) -> f64 {
    let mut acc = Complex64::zero();
    for r in 0..4 {
        let mut row = Complex64::zero();
        for k in 0..4 {
            row += op[r][k] * psi[k];
        }
        acc += psi[r].conj() * row;
    }
    acc.re
}

/// `[Pr(++), Pr(+-), Pr(-+), Pr(--)]` for A at `theta_a` and B at `theta_b`
/// (B's angle counted from the reversed zero), from the state vector.
pub fn joint_probabilities(theta_a: f64, theta_b: f64) -> [f64; 4] {
    let psi = singlet_state();
    let mut out = [0.0; 4];
    for (k, slot) in out.iter_mut().enumerate() {
        let op = kron(&projector(theta_a, k / 2), &projector(theta_b + PI, k % 2));
        *slot = expectation(&op, &psi);
    }
    out
}

/// `[Pr(++), Pr(+-), Pr(-+), Pr(--)]` from `cos^2(delta/2)/2` and
/// `sin^2(delta/2)/2`, `delta = theta_a - theta_b`.
pub fn closed_form(delta: f64) -> [f64; 4] {
    let same = libm::cos(delta / 2.0).powi(2) / 2.0;
    let opposite = libm::sin(delta / 2.0).powi(2) / 2.0;
    [same, opposite, opposite, same]
}

/// Floating-point table, rows by joint input `(i_A, i_B)`.
pub fn singlet_probabilities(angles: &SettingAngles) -> Vec<[f64; 4]> {
    let t = angles.theta();
    t.iter()
        .flat_map(|&a| t.iter().map(move |&b| joint_probabilities(a, b)))
        .collect()
}

/// Row from the probability `opposite` of unequal signs, split evenly so the
/// marginals are exactly uniform.
fn symmetric_row(opposite: &Rational) -> [Rational; 4] {
    let half = ratio(1, 2);
    let same = (Rational::one() - opposite) * &half;
    let opp = opposite * &half;
    [same.clone(), opp.clone(), opp, same]
}

fn behavior_from_rows(
    shape: ExperimentShape,
    rows: Vec<[Rational; 4]>,
) -> Result<Behavior, QuantumError> {
    Ok(Behavior::new(shape, rows.into_iter().flatten().collect())?)
}

/// Rational singlet behavior.
///
/// The probability of unequal signs is taken from the state-vector
/// computation and replaced by its best rational approximation with
/// denominator at most `max_den`; the four entries of each row are then
/// built from it, so rows sum to one and marginals are exactly 1/2. The
/// result describes the approximated behavior, exact when the squared sines
/// are rationals with small denominators.
pub fn singlet_behavior(angles: &SettingAngles, max_den: u64) -> Result<Behavior, QuantumError> {
    let rows = singlet_probabilities(angles)
        .into_iter()
        .map(|p| {
            let opposite = (p[1] + p[2]).clamp(0.0, 1.0);
            Ok(symmetric_row(&rationalize(opposite, max_den)?))
        })
        .collect::<Result<Vec<_>, QuantumError>>()?;
    behavior_from_rows(angles.shape(), rows)
}

/// Angles given as whole multiples of pi/6.
///
/// Differences that are multiples of pi/3 or pi/2 have rational squared
/// half-angle sines and give an exact behavior.
pub fn singlet_behavior_exact(sixths: &[i64]) -> Result<Behavior, QuantumError> {
    if sixths.is_empty() {
        return Err(QuantumError::NoAngles);
    }
    let mut rows = Vec::with_capacity(sixths.len() * sixths.len());
    for &a in sixths {
        for &b in sixths {
            rows.push(symmetric_row(&sin_sq_half_sixths(a - b)?));
        }
    }
    behavior_from_rows(ExperimentShape::bipartite_binary(sixths.len()), rows)
}

/// `sin^2(m pi / 12)`, the squared sine of half of `m` sixths of pi.
pub fn sin_sq_half_sixths(m: i64) -> Result<Rational, QuantumError> {
    Ok(match m.rem_euclid(12) {
        0 => ratio(0, 1),
        2 | 10 => ratio(1, 4),
        3 | 9 => ratio(1, 2),
        4 | 8 => ratio(3, 4),
        6 => ratio(1, 1),
        _ => return Err(QuantumError::NotExact(m)),
    })
}

/// Rounds each angle to the nearest multiple of pi/6 and requires it to lie
/// within `tolerance` radians of it.
pub fn snap_to_sixths(theta: &[f64], tolerance: f64) -> Result<Vec<i64>, QuantumError> {
    theta
        .iter()
        .map(|&t| {
            if !t.is_finite() {
                return Err(QuantumError::NonFinite(t));
            }
            let k = libm::round(t / (PI / 6.0));
            if libm::fabs(t - k * PI / 6.0) > tolerance {
                return Err(QuantumError::OffGrid(t));
            }
            Ok(k as i64)
        })
        .collect()
}

/// Angles `(0, -pi/3, +pi/3)` in sixths of pi.
pub const BELL_SIXTHS: [i64; 3] = [0, -2, 2];
