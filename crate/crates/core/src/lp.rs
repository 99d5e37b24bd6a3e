//! Exact feasibility of `A x = b, x >= 0`.
//!
//! Phase-1 simplex over rationals with Bland's rule, preceded by a presolve
//! that drops rows `sum a_j x_j = 0` whose coefficients share one sign (they
//! force every variable they touch to zero). Every answer carries a proof:
//!
//! - feasible: a non-negative `x` with `A x = b`;
//! - infeasible: a Farkas vector `y` with `y^T A <= 0` column-wise and
//!   `y^T b > 0`, which no non-negative `x` can satisfy.
//!
//! The constraint matrix has small integer coefficients (all systems built
//! in this crate are 0/1 incidence matrices); only the right-hand side and
//! the tableau are rational.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::rational::Rational;

/// Column-sparse system `A x = b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearSystem {
    rows: usize,
    columns: Vec<Vec<(usize, i64)>>,
    rhs: Vec<Rational>,
}

impl LinearSystem {
    pub fn new(rhs: Vec<Rational>) -> Self {
        LinearSystem {
            rows: rhs.len(),
            columns: Vec::new(),
            rhs,
        }
    }

    /// Appends a column given as `(row, coefficient)` pairs; returns its index.
    pub fn push_column(&mut self, mut entries: Vec<(usize, i64)>) -> usize {
        entries.retain(|&(_, a)| a != 0);
        entries.sort_unstable();
        entries.dedup_by(|b, a| {
            if a.0 == b.0 {
                a.1 += b.1;
                true
            } else {
                false
            }
        });
        debug_assert!(entries.iter().all(|&(r, _)| r < self.rows));
        self.columns.push(entries);
        self.columns.len() - 1
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, j: usize) -> &[(usize, i64)] {
        &self.columns[j]
    }

    pub fn rhs(&self) -> &[Rational] {
        &self.rhs
    }

    /// `A x = b` and `x >= 0`, exactly.
    pub fn is_solution(&self, x: &[Rational]) -> bool {
        if x.len() != self.cols() || x.iter().any(Signed::is_negative) {
            return false;
        }
        let mut ax = vec![Rational::zero(); self.rows];
        for (col, xj) in self.columns.iter().zip(x) {
            if xj.is_zero() {
                continue;
            }
            for &(r, a) in col {
                ax[r] += xj * Rational::from_integer(BigInt::from(a));
            }
        }
        ax == self.rhs
    }

    /// `y^T A_j <= 0` for every column and `y^T b > 0`.
    pub fn is_farkas_certificate(&self, y: &[Rational]) -> bool {
        if y.len() != self.rows {
            return false;
        }
        let yb = y
            .iter()
            .zip(&self.rhs)
            .fold(Rational::zero(), |acc, (a, b)| acc + a * b);
        yb.is_positive() && (0..self.cols()).all(|j| !self.column_dot(j, y).is_positive())
    }

    fn column_dot(&self, j: usize, y: &[Rational]) -> Rational {
        self.columns[j]
            .iter()
            .fold(Rational::zero(), |acc, &(r, a)| {
                acc + &y[r] * Rational::from_integer(a.into())
            })
    }
}

/// Outcome of [`solve`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Feasibility {
    /// A solution, one value per column.
    Feasible(Vec<Rational>),
    /// A Farkas vector, one multiplier per row.
    Infeasible(Vec<Rational>),
}

/// Decides `A x = b, x >= 0`.
pub fn solve(system: &LinearSystem) -> Feasibility {
    let pre = presolve(system);
    let kept_rows: Vec<usize> = (0..system.rows)
        .filter(|&r| pre.row_removed[r].is_none())
        .collect();
    let kept_cols: Vec<usize> = (0..system.cols())
        .filter(|&j| !pre.col_removed[j])
        .collect();
    let mut row_pos = vec![usize::MAX; system.rows];
    for (k, &r) in kept_rows.iter().enumerate() {
        row_pos[r] = k;
    }
    let dense: Vec<Vec<Rational>> = kept_rows
        .iter()
        .map(|_| vec![Rational::zero(); kept_cols.len()])
        .collect();
    let mut dense = dense;
    for (c, &j) in kept_cols.iter().enumerate() {
        for &(r, a) in &system.columns[j] {
            if row_pos[r] != usize::MAX {
                dense[row_pos[r]][c] = Rational::from_integer(a.into());
            }
        }
    }
    let b: Vec<Rational> = kept_rows.iter().map(|&r| system.rhs[r].clone()).collect();
    match phase_one(dense, b, kept_cols.len()) {
        Ok(x_kept) => {
            let mut x = vec![Rational::zero(); system.cols()];
            for (c, &j) in kept_cols.iter().enumerate() {
                x[j] = x_kept[c].clone();
            }
            Feasibility::Feasible(x)
        }
        Err(y_kept) => {
            let mut y = vec![Rational::zero(); system.rows];
            for (k, &r) in kept_rows.iter().enumerate() {
                y[r] = y_kept[k].clone();
            }
            lift_certificate(system, &pre, &mut y);
            Feasibility::Infeasible(y)
        }
    }
}

struct Presolve {
    /// For removed rows: the orientation that made every live coefficient
    /// non-negative, plus the columns that row removed.
    row_removed: Vec<Option<(i64, Vec<usize>)>>,
    col_removed: Vec<bool>,
    order: Vec<usize>,
}

fn presolve(system: &LinearSystem) -> Presolve {
    let mut by_row: Vec<Vec<(usize, i64)>> = vec![Vec::new(); system.rows];
    for (j, col) in system.columns.iter().enumerate() {
        for &(r, a) in col {
            by_row[r].push((j, a));
        }
    }
    let mut pre = Presolve {
        row_removed: vec![None; system.rows],
        col_removed: vec![false; system.cols()],
        order: Vec::new(),
    };
    let mut changed = true;
    while changed {
        changed = false;
        for (r, row) in by_row.iter().enumerate() {
            if pre.row_removed[r].is_some() || !system.rhs[r].is_zero() {
                continue;
            }
            let live = || row.iter().filter(|&&(j, _)| !pre.col_removed[j]);
            let sign = if live().all(|&(_, a)| a >= 0) {
                1
            } else if live().all(|&(_, a)| a <= 0) {
                -1
            } else {
                continue;
            };
            let cols: Vec<usize> = live().map(|&(j, _)| j).collect();
            for &j in &cols {
                pre.col_removed[j] = true;
            }
            pre.row_removed[r] = Some((sign, cols));
            pre.order.push(r);
            changed = true;
        }
    }
    pre
}

/// Assigns multipliers to presolved rows, last removed first, so that the
/// columns each row eliminated also satisfy `y^T A_j <= 0`. Their right-hand
/// sides are zero, so `y^T b` is unchanged.
fn lift_certificate(system: &LinearSystem, pre: &Presolve, y: &mut [Rational]) {
    for &r in pre.order.iter().rev() {
        let (sign, cols) = pre.row_removed[r].as_ref().expect("removed row");
        let mut k = Rational::zero();
        for &j in cols {
            let a = system.columns[j]
                .iter()
                .find(|&&(row, _)| row == r)
                .map(|&(_, a)| a * sign)
                .expect("column touches its row");
            let v = system.column_dot(j, y);
            if v.is_positive() {
                let need = v / Rational::from_integer(a.into());
                if need > k {
                    k = need;
                }
            }
        }
        y[r] = -k * Rational::from_integer((*sign).into());
    }
}

/// Phase-1 simplex on a dense system. `Ok(x)` or `Err(y)` as in [`solve`].
fn phase_one(
    mut a: Vec<Vec<Rational>>,
    mut b: Vec<Rational>,
    n: usize,
) -> Result<Vec<Rational>, Vec<Rational>> {
    let m = b.len();
    // Orient rows so the artificial basis starts feasible.
    let mut flipped = vec![false; m];
    for i in 0..m {
        if b[i].is_negative() {
            flipped[i] = true;
            b[i] = -&b[i];
            for v in a[i].iter_mut() {
                *v = -&*v;
            }
        }
    }
    for (i, row) in a.iter_mut().enumerate() {
        row.extend((0..m).map(|k| {
            if k == i {
                Rational::one()
            } else {
                Rational::zero()
            }
        }));
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    let mut reduced: Vec<Rational> = (0..n + m)
        .map(|j| {
            if j < n {
                -a.iter().fold(Rational::zero(), |acc, row| acc + &row[j])
            } else {
                Rational::zero()
            }
        })
        .collect();
    let mut objective = crate::rational::sum(&b);

    while let Some(enter) = reduced.iter().position(Signed::is_negative) {
        // Ratio test; ties go to the smallest basic index (Bland).
        let mut leave: Option<(usize, Rational)> = None;
        for i in 0..m {
            if !a[i][enter].is_positive() {
                continue;
            }
            let ratio = &b[i] / &a[i][enter];
            let better = match &leave {
                None => true,
                Some((l, best)) => ratio < *best || (ratio == *best && basis[i] < basis[*l]),
            };
            if better {
                leave = Some((i, ratio));
            }
        }
        let (p, _) = leave.expect("phase-1 objective is bounded below");
        pivot(&mut a, &mut b, &mut reduced, &mut objective, p, enter);
        basis[p] = enter;
    }

    if objective.is_zero() {
        let mut x = vec![Rational::zero(); n];
        for (i, &j) in basis.iter().enumerate() {
            if j < n {
                x[j] = b[i].clone();
            }
        }
        Ok(x)
    } else {
        Err((0..m)
            .map(|i| {
                let yi = Rational::one() - &reduced[n + i];
                if flipped[i] {
                    -yi
                } else {
                    yi
                }
            })
            .collect())
    }
}

fn pivot(
    a: &mut [Vec<Rational>],
    b: &mut [Rational],
    reduced: &mut [Rational],
    objective: &mut Rational,
    p: usize,
    e: usize,
) {
    let inv = a[p][e].recip();
    for v in a[p].iter_mut() {
        if !v.is_zero() {
            *v *= &inv;
        }
    }
    b[p] *= &inv;
    let support: Vec<usize> = (0..a[p].len()).filter(|&j| !a[p][j].is_zero()).collect();
    let (before, rest) = a.split_at_mut(p);
    let (prow, after) = rest.split_first_mut().expect("pivot row");
    let (b_before, b_rest) = b.split_at_mut(p);
    let (bp, b_after) = b_rest.split_first_mut().expect("pivot rhs");
    for (row, rhs) in before
        .iter_mut()
        .zip(b_before)
        .chain(after.iter_mut().zip(b_after))
    {
        if row[e].is_zero() {
            continue;
        }
        let f = row[e].clone();
        for &j in &support {
            row[j] -= &f * &prow[j];
        }
        *rhs -= &f * &*bp;
    }
    if !reduced[e].is_zero() {
        let f = reduced[e].clone();
        for &j in &support {
            reduced[j] -= &f * &prow[j];
        }
        *objective += &f * &*bp;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn system(rows: &[&[i64]], rhs: &[Rational]) -> LinearSystem {
        let mut s = LinearSystem::new(rhs.to_vec());
        let cols = rows[0].len();
        for j in 0..cols {
            s.push_column(
                rows.iter()
                    .enumerate()
                    .map(|(r, row)| (r, row[j]))
                    .collect(),
            );
        }
        s
    }

    #[test]
    fn finds_a_solution() {
        let s = system(&[&[1, 1, 0], &[0, 1, 1]], &[ratio(1, 2), ratio(3, 4)]);
        match solve(&s) {
            Feasibility::Feasible(x) => assert!(s.is_solution(&x)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn certifies_infeasibility() {
        // x0 + x1 = 1 and x0 + x1 = 2.
        let s = system(&[&[1, 1], &[1, 1]], &[int(1), int(2)]);
        match solve(&s) {
            Feasibility::Infeasible(y) => assert!(s.is_farkas_certificate(&y)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn negative_rhs_rows_are_oriented() {
        let s = system(&[&[-1, 0], &[0, 1]], &[ratio(-1, 3), int(1)]);
        assert!(matches!(solve(&s), Feasibility::Feasible(x) if s.is_solution(&x)));
        let bad = system(&[&[1, 0], &[0, 1]], &[ratio(-1, 3), int(1)]);
        assert!(matches!(solve(&bad), Feasibility::Infeasible(y) if bad.is_farkas_certificate(&y)));
    }

    #[test]
    fn every_row_presolved() {
        let s = system(&[&[1, 2]], &[int(0)]);
        assert_eq!(solve(&s), Feasibility::Feasible(vec![int(0), int(0)]));
    }

    #[test]
    fn presolved_rows_get_lifted_multipliers() {
        // x2 is forced to zero by row 2; rows 0-1 then need x0 = 1 and x0 = 2
        // unless x2 helps, which it cannot.
        let s = system(
            &[&[1, 0, 1], &[1, 0, 3], &[0, 0, 1]],
            &[int(1), int(2), int(0)],
        );
        match solve(&s) {
            Feasibility::Infeasible(y) => assert!(s.is_farkas_certificate(&y)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_rows() {
        let empty = LinearSystem::new(vec![int(0)]);
        assert!(matches!(solve(&empty), Feasibility::Feasible(x) if x.is_empty()));
        let nonzero = LinearSystem::new(vec![int(1)]);
        assert!(
            matches!(solve(&nonzero), Feasibility::Infeasible(y) if nonzero.is_farkas_certificate(&y))
        );
    }

    #[test]
    fn degenerate_problem_terminates() {
        // Klee-Minty style degeneracy: many ties in the ratio test.
        let s = system(
            &[
                &[1, 1, 1, 0, 0],
                &[1, 0, 0, 1, 0],
                &[0, 1, 0, 0, 1],
                &[1, 1, 0, 0, 0],
            ],
            &[int(1), int(0), int(0), int(0)],
        );
        assert!(matches!(solve(&s), Feasibility::Feasible(x) if s.is_solution(&x)));
    }

    proptest::proptest! {
        #[test]
        fn every_verdict_carries_a_valid_proof(
            cols in proptest::collection::vec(proptest::collection::vec(-1i64..=2, 4), 1..7),
            rhs in proptest::collection::vec(-3i64..=3, 4),
        ) {
            let mut s = LinearSystem::new(rhs.iter().map(|&v| ratio(v, 2)).collect());
            for c in &cols {
                s.push_column(c.iter().enumerate().map(|(r, &a)| (r, a)).collect());
            }
            match solve(&s) {
                Feasibility::Feasible(x) => proptest::prop_assert!(s.is_solution(&x)),
                Feasibility::Infeasible(y) => proptest::prop_assert!(s.is_farkas_certificate(&y)),
            }
        }
    }
}
