//! Minkowski geometry and the pigeonhole count.
//!
//! Units have `c = 1` and the metric signature is `(+,-,-,-)`. Event
//! coordinates are floats; the pigeonhole feasibility question is exact.
//!
//! Each experiment `k` of a [`BoostedConfiguration`] is at rest in the frame
//! boosted by rapidity `k phi`. In that frame its A side sits at `x = -L` and
//! its B side at `x = +L`; preparation happens at proper time 0 and
//! measurement at proper time `tau`. In the standard frame the A-side
//! preparations `(L sinh k phi, -L cosh k phi)` move forward in time as `k`
//! grows and the B-side preparations `(-L sinh k phi, L cosh k phi)` move
//! backward.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::lp::{self, Feasibility, LinearSystem};
use crate::rational::{format_ratio, Rational};

/// Relative tolerance for treating an interval as null.
pub const DEFAULT_NULL_EPSILON: f64 = 1e-9;

/// Largest number of experiments the pigeonhole linear program accepts by
/// default.
pub const DEFAULT_PIGEONHOLE_LP_LIMIT: usize = 15;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpacetimeError {
    #[error("coordinate {0} is not finite")]
    NonFinite(f64),
    #[error("interval is null within tolerance (s^2 = {interval})")]
    NullInterval { interval: f64 },
    #[error("{name} out of range: {detail}")]
    ParameterOutOfRange { name: &'static str, detail: String },
    #[error("signalling probability {0} must lie in (0, 1]")]
    Undefined(String),
    #[error("{m} experiments exceed the linear program limit of {limit}")]
    BudgetExceeded { m: usize, limit: usize },
}

impl SpacetimeError {
    pub fn name(&self) -> &'static str {
        match self {
            SpacetimeError::NonFinite(_) => "NonFinite",
            SpacetimeError::NullInterval { .. } => "NullInterval",
            SpacetimeError::ParameterOutOfRange { .. } => "ParameterOutOfRange",
            SpacetimeError::Undefined(_) => "Undefined",
            SpacetimeError::BudgetExceeded { .. } => "BudgetExceeded",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Event {
    pub fn new(t: f64, x: f64, y: f64, z: f64) -> Result<Self, SpacetimeError> {
        if let Some(&bad) = [t, x, y, z].iter().find(|c| !c.is_finite()) {
            return Err(SpacetimeError::NonFinite(bad));
        }
        Ok(Event { t, x, y, z })
    }

    /// Event on the t-x plane.
    pub fn tx(t: f64, x: f64) -> Result<Self, SpacetimeError> {
        Event::new(t, x, 0.0, 0.0)
    }

    /// `(dt)^2 - |dr|^2` from `self` to `other`.
    pub fn interval_to(&self, other: &Event) -> f64 {
        let (dt, dx, dy, dz) = (
            other.t - self.t,
            other.x - self.x,
            other.y - self.y,
            other.z - self.z,
        );
        dt * dt - (dx * dx + dy * dy + dz * dz)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IntervalClass {
    /// `b` lies inside the forward light cone of `a`.
    TimelikeFuture,
    /// `b` lies inside the backward light cone of `a`.
    TimelikePast,
    Spacelike,
}

impl IntervalClass {
    pub fn label(self) -> &'static str {
        match self {
            IntervalClass::TimelikeFuture => "timelike-future",
            IntervalClass::TimelikePast => "timelike-past",
            IntervalClass::Spacelike => "spacelike",
        }
    }
}

/// Classifies the interval from `a` to `b`, rejecting intervals with
/// `|s^2| <= epsilon * ((dt)^2 + |dr|^2)`.
pub fn classify_interval_with(
    a: &Event,
    b: &Event,
    epsilon: f64,
) -> Result<IntervalClass, SpacetimeError> {
    let s2 = a.interval_to(b);
    let dt = b.t - a.t;
    let scale = 2.0 * dt * dt - s2;
    if s2.abs() <= epsilon * scale {
        return Err(SpacetimeError::NullInterval { interval: s2 });
    }
    Ok(if s2 < 0.0 {
        IntervalClass::Spacelike
    } else if dt > 0.0 {
        IntervalClass::TimelikeFuture
    } else {
        IntervalClass::TimelikePast
    })
}

pub fn classify_interval(a: &Event, b: &Event) -> Result<IntervalClass, SpacetimeError> {
    classify_interval_with(a, b, DEFAULT_NULL_EPSILON)
}

/// Boost along x: `t' = t cosh r - x sinh r`, `x' = x cosh r - t sinh r`.
pub fn boost(e: &Event, rapidity: f64) -> Event {
    let (ch, sh) = (libm::cosh(rapidity), libm::sinh(rapidity));
    Event {
        t: e.t * ch - e.x * sh,
        x: e.x * ch - e.t * sh,
        y: e.y,
        z: e.z,
    }
}

/// Events of one experiment in the standard frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentEvents {
    pub k: i64,
    pub a_preparation: Event,
    pub a_measurement: Event,
    pub b_preparation: Event,
    pub b_measurement: Event,
}

/// Cone relations from experiment `j` to experiment `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairRelations {
    pub j: i64,
    pub k: i64,
    /// `A_k`'s preparation seen from `A_j`'s preparation.
    pub a_preparations: IntervalClass,
    /// `A_k`'s measurement seen from `A_j`'s measurement.
    pub a_measurements: IntervalClass,
    /// `A_k`'s preparation seen from `A_j`'s measurement.
    pub a_relay: IntervalClass,
    /// `B_k`'s preparation seen from `B_j`'s preparation.
    pub b_preparations: IntervalClass,
    /// `B_k`'s measurement seen from `B_j`'s measurement.
    pub b_measurements: IntervalClass,
    /// `B_j`'s preparation seen from `B_k`'s measurement.
    pub b_backward: IntervalClass,
}

impl PairRelations {
    /// For `j < k`: the A side of `j` is in the past of the A side of `k`
    /// and the B side of `j` is in the future of the B side of `k`, for
    /// preparations and for measurements.
    pub fn is_ordered(&self) -> bool {
        use IntervalClass::*;
        self.a_preparations == TimelikeFuture
            && self.a_measurements == TimelikeFuture
            && self.b_preparations == TimelikePast
            && self.b_measurements == TimelikePast
    }

    /// Ordered, and in addition `A_j`'s outcome can reach `A_k`'s
    /// preparation while `B_k`'s outcome lies in the past of `B_j`'s
    /// preparation. Needs `tau` well below `L sinh phi`.
    pub fn carries_chain(&self) -> bool {
        self.is_ordered()
            && self.a_relay == IntervalClass::TimelikeFuture
            && self.b_backward == IntervalClass::TimelikeFuture
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoostedConfiguration {
    n: usize,
    l: f64,
    phi: f64,
    tau: f64,
    experiments: Vec<ExperimentEvents>,
}

impl BoostedConfiguration {
    /// `2n + 1` experiments with `tau` defaulting to `L sinh(phi) / 100`.
    /// `tau` must stay below both `L sinh(phi)` and `L`.
    pub fn generate(n: usize, l: f64, phi: f64, tau: Option<f64>) -> Result<Self, SpacetimeError> {
        let out_of_range =
            |name, detail: String| SpacetimeError::ParameterOutOfRange { name, detail };
        if n == 0 {
            return Err(out_of_range("n", "need at least one boosted pair".into()));
        }
        if !(l.is_finite() && l > 0.0) {
            return Err(out_of_range("l", format!("{l} is not a positive length")));
        }
        if !(phi.is_finite() && phi > 0.0) {
            return Err(out_of_range(
                "phi",
                format!("{phi} is not a positive rapidity"),
            ));
        }
        let default = l * libm::sinh(phi) / 100.0;
        let tau = tau.unwrap_or(default);
        let limit = l * libm::sinh(phi).min(1.0);
        if !(tau.is_finite() && tau > 0.0 && tau < limit) {
            return Err(out_of_range(
                "tau",
                format!("{tau} not in (0, min(L sinh phi, L) = {limit})"),
            ));
        }
        let n_signed = n as i64;
        let experiments = (-n_signed..=n_signed)
            .map(|k| {
                let r = k as f64 * phi;
                let at = |t, x| {
                    boost(
                        &Event {
                            t,
                            x,
                            y: 0.0,
                            z: 0.0,
                        },
                        r,
                    )
                };
                ExperimentEvents {
                    k,
                    a_preparation: at(0.0, -l),
                    a_measurement: at(tau, -l),
                    b_preparation: at(0.0, l),
                    b_measurement: at(tau, l),
                }
            })
            .collect();
        Ok(BoostedConfiguration {
            n,
            l,
            phi,
            tau,
            experiments,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Experiments in order `k = -n..=n`.
    pub fn experiments(&self) -> &[ExperimentEvents] {
        &self.experiments
    }

    pub fn experiment(&self, k: i64) -> Option<&ExperimentEvents> {
        let idx = k.checked_add(self.n as i64)?;
        self.experiments.get(usize::try_from(idx).ok()?)
    }

    pub fn relations(&self, j: i64, k: i64, epsilon: f64) -> Result<PairRelations, SpacetimeError> {
        let missing = |k: i64| SpacetimeError::ParameterOutOfRange {
            name: "k",
            detail: format!("{k} outside -{n}..={n}", n = self.n),
        };
        let ej = self.experiment(j).ok_or_else(|| missing(j))?;
        let ek = self.experiment(k).ok_or_else(|| missing(k))?;
        let c = |a: &Event, b: &Event| classify_interval_with(a, b, epsilon);
        Ok(PairRelations {
            j,
            k,
            a_preparations: c(&ej.a_preparation, &ek.a_preparation)?,
            a_measurements: c(&ej.a_measurement, &ek.a_measurement)?,
            a_relay: c(&ej.a_measurement, &ek.a_preparation)?,
            b_preparations: c(&ej.b_preparation, &ek.b_preparation)?,
            b_measurements: c(&ej.b_measurement, &ek.b_measurement)?,
            b_backward: c(&ek.b_measurement, &ej.b_preparation)?,
        })
    }

    /// Relations for every pair `j < k`.
    pub fn all_relations(&self, epsilon: f64) -> Result<Vec<PairRelations>, SpacetimeError> {
        let n = self.n as i64;
        let mut out = Vec::new();
        for j in -n..=n {
            for k in j + 1..=n {
                out.push(self.relations(j, k, epsilon)?);
            }
        }
        Ok(out)
    }

    /// A and B sides of every experiment are spacelike separated, for both
    /// preparations and measurements.
    pub fn sides_spacelike(&self, epsilon: f64) -> Result<bool, SpacetimeError> {
        for e in &self.experiments {
            for (a, b) in [
                (&e.a_preparation, &e.b_preparation),
                (&e.a_measurement, &e.b_measurement),
                (&e.a_preparation, &e.b_measurement),
                (&e.a_measurement, &e.b_preparation),
            ] {
                if classify_interval_with(a, b, epsilon)? != IntervalClass::Spacelike {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

fn check_probability(p: &Rational) -> Result<(), SpacetimeError> {
    if !p.is_positive() || p > &Rational::one() {
        return Err(SpacetimeError::Undefined(format_ratio(p)));
    }
    Ok(())
}

/// Least `N >= 1` with `p > 1/(2N+1)`.
pub fn minimal_pigeonhole_n(p: &Rational) -> Result<u64, SpacetimeError> {
    check_probability(p)?;
    let half_gap: BigInt = ((p.recip() - Rational::one()) / Rational::from_integer(2.into()))
        .floor()
        .to_integer();
    let n = half_gap + BigInt::one();
    n.to_u64()
        .ok_or_else(|| SpacetimeError::Undefined(format_ratio(p)))
}

/// Joint outcome of the `M` signalling indicators, bit `i` set when
/// experiment `i` signals.
pub type Cell = u32;

/// How the linear program answered.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DisjointnessProof {
    /// Cells and their weights reproducing every marginal with no cell
    /// containing two signalling events.
    Witness(Vec<(Cell, Rational)>),
    /// Farkas multipliers: one per marginal row, then the normalization
    /// row, then one per pair `i < j` in lexicographic order.
    Farkas(Vec<Rational>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PigeonholeReport {
    pub p: Rational,
    pub m: usize,
    /// `M p`.
    pub union_bound: Rational,
    /// `M p > 1`.
    pub union_bound_infeasible: bool,
    pub proof: DisjointnessProof,
}

impl PigeonholeReport {
    /// No joint distribution keeps the signalling events pairwise disjoint.
    pub fn infeasible(&self) -> bool {
        matches!(self.proof, DisjointnessProof::Farkas(_))
    }

    pub fn paths_agree(&self) -> bool {
        self.infeasible() == self.union_bound_infeasible
    }
}

/// Union-bound arithmetic alone.
pub fn union_bound(p: &Rational, m: usize) -> Result<(Rational, bool), SpacetimeError> {
    check_probability(p)?;
    let total = p * Rational::from_integer(BigInt::from(m));
    let infeasible = total > Rational::one();
    Ok((total, infeasible))
}

/// One cell per experiment with mass `p`, the rest on "nobody signals".
pub fn disjoint_construction(
    p: &Rational,
    m: usize,
) -> Result<Option<Vec<(Cell, Rational)>>, SpacetimeError> {
    let (total, infeasible) = union_bound(p, m)?;
    if infeasible {
        return Ok(None);
    }
    let mut cells = Vec::with_capacity(m + 1);
    let rest = Rational::one() - total;
    if !rest.is_zero() {
        cells.push((0, rest));
    }
    cells.extend((0..m).map(|i| (1 << i, p.clone())));
    Ok(Some(cells))
}

/// The joint-indicator system: marginals, normalization, pairwise disjointness.
pub fn pigeonhole_system(p: &Rational, m: usize) -> LinearSystem {
    let pairs = m * m.saturating_sub(1) / 2;
    let mut rhs = vec![p.clone(); m];
    rhs.push(Rational::one());
    rhs.extend(core::iter::repeat_n(Rational::zero(), pairs));
    let mut system = LinearSystem::new(rhs);
    for cell in 0..(1u64 << m) {
        let mut col: Vec<(usize, i64)> = (0..m)
            .filter(|i| cell >> i & 1 == 1)
            .map(|i| (i, 1))
            .collect();
        col.push((m, 1));
        let mut row = m + 1;
        for i in 0..m {
            for j in i + 1..m {
                if cell >> i & 1 == 1 && cell >> j & 1 == 1 {
                    col.push((row, 1));
                }
                row += 1;
            }
        }
        system.push_column(col);
    }
    system
}

/// Decides whether `m` signalling events of probability `p` each can be
/// pairwise disjoint, by union bound and by an exact linear program over
/// the `2^m` joint indicator cells.
pub fn pigeonhole_infeasible(
    p: &Rational,
    m: usize,
    lp_limit: usize,
) -> Result<PigeonholeReport, SpacetimeError> {
    let (total, union_infeasible) = union_bound(p, m)?;
    if m == 0 || m > lp_limit || m >= Cell::BITS as usize {
        return Err(SpacetimeError::BudgetExceeded { m, limit: lp_limit });
    }
    let system = pigeonhole_system(p, m);
    let proof = match lp::solve(&system) {
        Feasibility::Feasible(x) => DisjointnessProof::Witness(
            x.into_iter()
                .enumerate()
                .filter(|(_, w)| !w.is_zero())
                .map(|(cell, w)| (cell as Cell, w))
                .collect(),
        ),
        Feasibility::Infeasible(y) => DisjointnessProof::Farkas(y),
    };
    Ok(PigeonholeReport {
        p: p.clone(),
        m,
        union_bound: total,
        union_bound_infeasible: union_infeasible,
        proof,
    })
}

/// `2N + 1` for [`minimal_pigeonhole_n`].
pub fn pigeonhole_experiments(p: &Rational) -> Result<usize, SpacetimeError> {
    let n = minimal_pigeonhole_n(p)?;
    usize::try_from(n)
        .ok()
        .and_then(|n| n.checked_mul(2))
        .and_then(|n| n.checked_add(1))
        .ok_or_else(|| SpacetimeError::Undefined(format_ratio(p)))
}

/// Whether `cells` is a valid disjoint witness for `m` events of mass `p`.
pub fn verify_disjoint_witness(p: &Rational, m: usize, cells: &[(Cell, Rational)]) -> bool {
    let mut marginals = vec![Rational::zero(); m];
    let mut total = Rational::zero();
    for (cell, w) in cells {
        if w.is_negative() || cell.count_ones() > 1 || (*cell as u64) >> m != 0 {
            return false;
        }
        total += w;
        for (i, slot) in marginals.iter_mut().enumerate() {
            if cell >> i & 1 == 1 {
                *slot += w;
            }
        }
    }
    total.is_one() && marginals.iter().all(|x| x == p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn ev(t: f64, x: f64) -> Event {
        Event::tx(t, x).unwrap()
    }

    #[test]
    fn interval_examples() {
        let o = ev(0.0, 0.0);
        assert_eq!(
            classify_interval(&o, &ev(1.0, 0.0)),
            Ok(IntervalClass::TimelikeFuture)
        );
        assert_eq!(
            classify_interval(&o, &ev(-1.0, 0.0)),
            Ok(IntervalClass::TimelikePast)
        );
        assert_eq!(
            classify_interval(&o, &ev(0.0, 1.0)),
            Ok(IntervalClass::Spacelike)
        );
        assert!(matches!(
            classify_interval(&o, &ev(1.0, 1.0)),
            Err(SpacetimeError::NullInterval { .. })
        ));
        assert!(matches!(
            classify_interval(&o, &o),
            Err(SpacetimeError::NullInterval { .. })
        ));
    }

    #[test]
    fn boost_examples() {
        let l = 2.0;
        let phi = 0.5;
        let e = boost(&ev(0.0, l), phi);
        assert!((e.t + l * libm::sinh(phi)).abs() < 1e-12);
        assert!((e.x - l * libm::cosh(phi)).abs() < 1e-12);
        let f = ev(0.3, -1.7);
        assert_eq!(boost(&f, 0.0), f);
    }

    #[test]
    fn central_experiment_sits_at_plus_minus_l() {
        let c = BoostedConfiguration::generate(2, 1.5, 0.4, None).unwrap();
        let e = c.experiment(0).unwrap();
        assert_eq!(e.a_preparation, ev(0.0, -1.5));
        assert_eq!(e.b_preparation, ev(0.0, 1.5));
        assert_eq!(c.experiments().len(), 5);
        assert!((c.tau() - 1.5 * libm::sinh(0.4) / 100.0).abs() < 1e-15);
    }

    #[test]
    fn neighbouring_experiments_chain() {
        let c = BoostedConfiguration::generate(1, 1.0, 0.5, Some(0.005)).unwrap();
        let r = c.relations(0, 1, DEFAULT_NULL_EPSILON).unwrap();
        assert_eq!(r.a_measurements, IntervalClass::TimelikeFuture);
        assert_eq!(r.b_measurements, IntervalClass::TimelikePast);
        assert!(r.carries_chain());
        assert!(c.sides_spacelike(DEFAULT_NULL_EPSILON).unwrap());
    }

    #[test]
    fn every_pair_chains() {
        let c = BoostedConfiguration::generate(3, 1.0, 0.5, Some(0.001)).unwrap();
        let all = c.all_relations(DEFAULT_NULL_EPSILON).unwrap();
        assert_eq!(all.len(), 21);
        assert!(all.iter().all(PairRelations::carries_chain));
    }

    #[test]
    fn configuration_parameters_are_checked() {
        let err = |r: Result<BoostedConfiguration, SpacetimeError>| r.unwrap_err().name();
        assert_eq!(
            err(BoostedConfiguration::generate(0, 1.0, 0.5, None)),
            "ParameterOutOfRange"
        );
        assert_eq!(
            err(BoostedConfiguration::generate(1, -1.0, 0.5, None)),
            "ParameterOutOfRange"
        );
        assert_eq!(
            err(BoostedConfiguration::generate(1, 1.0, 0.0, None)),
            "ParameterOutOfRange"
        );
        assert_eq!(
            err(BoostedConfiguration::generate(1, 1.0, 0.5, Some(1.0))),
            "ParameterOutOfRange"
        );
    }

    #[test]
    fn minimal_n_examples() {
        assert_eq!(minimal_pigeonhole_n(&ratio(1, 4)), Ok(2));
        assert_eq!(minimal_pigeonhole_n(&ratio(1, 1)), Ok(1));
        assert_eq!(minimal_pigeonhole_n(&ratio(1, 5)), Ok(3));
        assert_eq!(minimal_pigeonhole_n(&ratio(1, 3)), Ok(2));
        assert!(minimal_pigeonhole_n(&ratio(0, 1)).is_err());
        assert!(minimal_pigeonhole_n(&ratio(3, 2)).is_err());
    }

    #[test]
    fn pigeonhole_examples() {
        let r = pigeonhole_infeasible(&ratio(1, 4), 5, DEFAULT_PIGEONHOLE_LP_LIMIT).unwrap();
        assert_eq!(r.union_bound, ratio(5, 4));
        assert!(r.infeasible() && r.paths_agree());
        if let DisjointnessProof::Farkas(y) = &r.proof {
            assert!(pigeonhole_system(&r.p, 5).is_farkas_certificate(y));
        }

        let r = pigeonhole_infeasible(&ratio(1, 5), 5, DEFAULT_PIGEONHOLE_LP_LIMIT).unwrap();
        assert!(!r.infeasible() && r.paths_agree());
        match &r.proof {
            DisjointnessProof::Witness(cells) => assert!(verify_disjoint_witness(&r.p, 5, cells)),
            other => panic!("{other:?}"),
        }

        let r = pigeonhole_infeasible(&ratio(1, 2), 2, DEFAULT_PIGEONHOLE_LP_LIMIT).unwrap();
        assert!(!r.infeasible());
        assert!(matches!(
            pigeonhole_infeasible(&ratio(1, 2), 16, DEFAULT_PIGEONHOLE_LP_LIMIT),
            Err(SpacetimeError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn construction_is_disjoint() {
        let cells = disjoint_construction(&ratio(1, 5), 5).unwrap().unwrap();
        assert!(verify_disjoint_witness(&ratio(1, 5), 5, &cells));
        assert_eq!(cells.len(), 5);
        assert!(disjoint_construction(&ratio(1, 4), 5).unwrap().is_none());
    }
}
