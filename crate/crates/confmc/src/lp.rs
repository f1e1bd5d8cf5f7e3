//! Exact rational linear programming: a dense two-phase simplex with
//! Bland's rule. Solutions are exact vertices; there is no tolerance
//! anywhere. This is the backend seam used by the backward-reachability
//! pullbacks and by the built-in certificate solver.

use num::{One, Signed, Zero};
use thiserror::Error;

use crate::rat::Rat;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LpError {
    #[error("constraint arity {0} does not match variable count {1}")]
    BadArity(usize, usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

/// `coeffs · x  cmp  rhs`.
#[derive(Clone, Debug)]
pub struct Constraint {
    pub coeffs: Vec<Rat>,
    pub cmp: Cmp,
    pub rhs: Rat,
}

/// Minimize `objective · x` subject to constraints and per-variable bounds
/// (`None` means unbounded on that side).
#[derive(Clone, Debug)]
pub struct LinearProgram {
    pub n_vars: usize,
    pub objective: Vec<Rat>,
    pub constraints: Vec<Constraint>,
    pub lower: Vec<Option<Rat>>,
    pub upper: Vec<Option<Rat>>,
}

impl LinearProgram {
    /// A program over `n` variables with zero objective and no bounds.
    pub fn new(n_vars: usize) -> Self {
        LinearProgram {
            n_vars,
            objective: vec![Rat::zero(); n_vars],
            constraints: Vec::new(),
            lower: vec![None; n_vars],
            upper: vec![None; n_vars],
        }
    }

    pub fn with_unit_box(n_vars: usize) -> Self {
        let mut lp = Self::new(n_vars);
        lp.lower = vec![Some(Rat::zero()); n_vars];
        lp.upper = vec![Some(Rat::one()); n_vars];
        lp
    }

    pub fn push(&mut self, coeffs: Vec<Rat>, cmp: Cmp, rhs: Rat) {
        self.constraints.push(Constraint { coeffs, cmp, rhs });
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LpOutcome {
    Optimal { x: Vec<Rat>, objective: Rat },
    Infeasible,
    Unbounded,
}

/// Backend seam: an implementation must return exactly feasible solutions.
pub trait LpBackend {
    fn solve_min(&self, lp: &LinearProgram) -> Result<LpOutcome, LpError>;
}

/// The in-process exact backend.
#[derive(Clone, Copy, Debug, Default)]
pub struct ExactSimplex;

impl LpBackend for ExactSimplex {
    fn solve_min(&self, lp: &LinearProgram) -> Result<LpOutcome, LpError> {
        solve_min(lp)
    }
}

/// Standard-form tableau: min c·y s.t. Ay = b, y >= 0, b >= 0.
struct Tableau {
    /// m rows of n+1 entries (the last entry is the rhs).
    rows: Vec<Vec<Rat>>,
    /// Reduced-cost row of n+1 entries (last entry is -objective value).
    cost: Vec<Rat>,
    basis: Vec<usize>,
    n_cols: usize,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let inv = {
            let p = &self.rows[row][col];
            assert!(!p.is_zero(), "pivot on zero entry");
            Rat::one() / p.clone()
        };
        for v in self.rows[row].iter_mut() {
            *v *= inv.clone();
        }
        let pivot_row = self.rows[row].clone();
        for (r, data) in self.rows.iter_mut().enumerate() {
            if r == row || data[col].is_zero() {
                continue;
            }
            let factor = data[col].clone();
            for (v, p) in data.iter_mut().zip(&pivot_row) {
                *v -= factor.clone() * p;
            }
        }
        if !self.cost[col].is_zero() {
            let factor = self.cost[col].clone();
            for (v, p) in self.cost.iter_mut().zip(&pivot_row) {
                *v -= factor.clone() * p;
            }
        }
        self.basis[row] = col;
    }

    /// Bland's rule: entering column is the lowest index with negative
    /// reduced cost; leaving row is the ratio-test minimum, ties broken by
    /// the lowest basis index. Returns false when optimal, or None-like
    /// unbounded signal via Err(()).
    fn iterate(&mut self, banned: &[bool]) -> Result<bool, ()> {
        let entering = (0..self.n_cols)
            .find(|&j| !banned[j] && self.cost[j].is_negative());
        let Some(col) = entering else {
            return Ok(false);
        };
        let mut leaving: Option<(usize, Rat)> = None;
        for r in 0..self.rows.len() {
            let a = &self.rows[r][col];
            if a.is_positive() {
                let ratio = self.rows[r][self.n_cols].clone() / a.clone();
                let better = match &leaving {
                    None => true,
                    Some((best_r, best)) => {
                        ratio < *best || (ratio == *best && self.basis[r] < self.basis[*best_r])
                    }
                };
                if better {
                    leaving = Some((r, ratio));
                }
            }
        }
        match leaving {
            Some((row, _)) => {
                self.pivot(row, col);
                Ok(true)
            }
            None => Err(()),
        }
    }

    fn run(&mut self, banned: &[bool]) -> Result<(), ()> {
        while self.iterate(banned)? {}
        Ok(())
    }
}

/// Solves the program exactly. Free variables are split into differences of
/// nonnegative parts; finite bounds become substitutions and rows.
pub fn solve_min(lp: &LinearProgram) -> Result<LpOutcome, LpError> {
    let n = lp.n_vars;
    for c in &lp.constraints {
        if c.coeffs.len() != n {
            return Err(LpError::BadArity(c.coeffs.len(), n));
        }
    }
    if lp.objective.len() != n {
        return Err(LpError::BadArity(lp.objective.len(), n));
    }

    // Each original variable maps to a shifted nonnegative column (when a
    // finite lower bound exists) or to a pair of columns (free).
    enum VarMap {
        Shifted { col: usize, shift: Rat },
        Split { pos: usize, neg: usize },
    }
    let mut maps: Vec<VarMap> = Vec::with_capacity(n);
    let mut n_cols = 0usize;
    for i in 0..n {
        match &lp.lower[i] {
            Some(l) => {
                maps.push(VarMap::Shifted {
                    col: n_cols,
                    shift: l.clone(),
                });
                n_cols += 1;
            }
            None => {
                maps.push(VarMap::Split {
                    pos: n_cols,
                    neg: n_cols + 1,
                });
                n_cols += 2;
            }
        }
    }

    // Collect rows in standard form over the mapped columns.
    struct Row {
        coeffs: Vec<Rat>,
        cmp: Cmp,
        rhs: Rat,
    }
    let mut rows: Vec<Row> = Vec::new();
    let mut add_row = |coeffs_orig: &[Rat], cmp: Cmp, rhs: Rat, maps: &[VarMap]| {
        let mut coeffs = vec![Rat::zero(); n_cols];
        let mut rhs = rhs;
        for (i, a) in coeffs_orig.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            match &maps[i] {
                VarMap::Shifted { col, shift } => {
                    coeffs[*col] = a.clone();
                    rhs -= a.clone() * shift.clone();
                }
                VarMap::Split { pos, neg } => {
                    coeffs[*pos] = a.clone();
                    coeffs[*neg] = -a.clone();
                }
            }
        }
        rows.push(Row { coeffs, cmp, rhs });
    };

    for c in &lp.constraints {
        add_row(&c.coeffs, c.cmp, c.rhs.clone(), &maps);
    }
    for i in 0..n {
        if let Some(u) = &lp.upper[i] {
            let mut unit = vec![Rat::zero(); n];
            unit[i] = Rat::one();
            add_row(&unit, Cmp::Le, u.clone(), &maps);
        }
    }

    // Slacks and artificials; normalize rhs to be nonnegative first.
    let m = rows.len();
    let mut slack_cols = 0usize;
    for row in rows.iter_mut() {
        if row.rhs.is_negative() {
            for v in row.coeffs.iter_mut() {
                *v = -v.clone();
            }
            row.rhs = -row.rhs.clone();
            row.cmp = match row.cmp {
                Cmp::Le => Cmp::Ge,
                Cmp::Ge => Cmp::Le,
                Cmp::Eq => Cmp::Eq,
            };
        }
        if !matches!(row.cmp, Cmp::Eq) {
            slack_cols += 1;
        }
    }

    let total_cols = n_cols + slack_cols + m;
    let mut tableau_rows: Vec<Vec<Rat>> = Vec::with_capacity(m);
    let mut basis: Vec<usize> = Vec::with_capacity(m);
    let mut artificial: Vec<bool> = vec![false; total_cols];
    let mut next_slack = n_cols;

    for (r, row) in rows.iter().enumerate() {
        let mut data = vec![Rat::zero(); total_cols + 1];
        data[..n_cols].clone_from_slice(&row.coeffs);
        data[total_cols] = row.rhs.clone();
        let mut basic: Option<usize> = None;
        match row.cmp {
            Cmp::Le => {
                data[next_slack] = Rat::one();
                basic = Some(next_slack);
                next_slack += 1;
            }
            Cmp::Ge => {
                data[next_slack] = -Rat::one();
                next_slack += 1;
            }
            Cmp::Eq => {}
        }
        let art_col = n_cols + slack_cols + r;
        if basic.is_none() {
            data[art_col] = Rat::one();
            artificial[art_col] = true;
            basic = Some(art_col);
        }
        basis.push(basic.expect("every row got a basic column"));
        tableau_rows.push(data);
    }

    // Phase 1: minimize the sum of artificials.
    let mut cost = vec![Rat::zero(); total_cols + 1];
    for (j, is_art) in artificial.iter().enumerate() {
        if *is_art {
            cost[j] = Rat::one();
        }
    }
    let mut t = Tableau {
        rows: tableau_rows,
        cost,
        basis,
        n_cols: total_cols,
    };
    // Price out the initial artificial basis.
    for r in 0..m {
        let b = t.basis[r];
        if artificial[b] {
            let row = t.rows[r].clone();
            for (v, p) in t.cost.iter_mut().zip(&row) {
                *v -= p.clone();
            }
        }
    }
    let banned = vec![false; total_cols];
    t.run(&banned)
        .expect("phase-1 objective is bounded below by zero");
    let phase1 = -t.cost[total_cols].clone();
    if phase1.is_positive() {
        return Ok(LpOutcome::Infeasible);
    }

    // Drive any artificial still in the basis out (its value is zero).
    for r in 0..m {
        if artificial[t.basis[r]] {
            let pivot_col = (0..n_cols + slack_cols).find(|&j| !t.rows[r][j].is_zero());
            if let Some(col) = pivot_col {
                t.pivot(r, col);
            }
        }
    }

    // Phase 2: the real objective over the mapped columns (shift constants
    // do not affect the argmin and the reported objective is recomputed
    // from the original program below).
    let mut cost = vec![Rat::zero(); total_cols + 1];
    for (c, map) in lp.objective.iter().zip(&maps) {
        if c.is_zero() {
            continue;
        }
        match map {
            VarMap::Shifted { col, .. } => {
                cost[*col] = c.clone();
            }
            VarMap::Split { pos, neg } => {
                cost[*pos] = c.clone();
                cost[*neg] = -c.clone();
            }
        }
    }
    t.cost = cost;
    for r in 0..m {
        let b = t.basis[r];
        if !t.cost[b].is_zero() {
            let factor = t.cost[b].clone();
            let row = t.rows[r].clone();
            for (v, p) in t.cost.iter_mut().zip(&row) {
                *v -= factor.clone() * p;
            }
        }
    }
    let mut banned = vec![false; total_cols];
    for (j, is_art) in artificial.iter().enumerate() {
        banned[j] = *is_art;
    }
    if t.run(&banned).is_err() {
        return Ok(LpOutcome::Unbounded);
    }

    // Read the solution back through the variable maps.
    let mut col_values = vec![Rat::zero(); total_cols];
    for r in 0..m {
        col_values[t.basis[r]] = t.rows[r][total_cols].clone();
    }
    let mut x = Vec::with_capacity(n);
    for map in &maps {
        match map {
            VarMap::Shifted { col, shift } => x.push(col_values[*col].clone() + shift.clone()),
            VarMap::Split { pos, neg } => {
                x.push(col_values[*pos].clone() - col_values[*neg].clone())
            }
        }
    }
    let objective = lp
        .objective
        .iter()
        .zip(&x)
        .map(|(c, v)| c.clone() * v)
        .sum::<Rat>();
    Ok(LpOutcome::Optimal { x, objective })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rat, rat_int};

    #[test]
    fn minimizes_over_the_unit_box() {
        let mut lp = LinearProgram::with_unit_box(2);
        lp.objective = vec![rat_int(1), rat_int(1)];
        lp.push(vec![rat_int(1), rat_int(1)], Cmp::Ge, rat(1, 2));
        match solve_min(&lp).unwrap() {
            LpOutcome::Optimal { objective, x } => {
                assert_eq!(objective, rat(1, 2));
                let sum: Rat = x.iter().cloned().sum();
                assert_eq!(sum, rat(1, 2));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn detects_infeasible() {
        let mut lp = LinearProgram::with_unit_box(1);
        lp.push(vec![rat_int(1)], Cmp::Ge, rat_int(2));
        assert_eq!(solve_min(&lp).unwrap(), LpOutcome::Infeasible);
    }

    #[test]
    fn detects_unbounded() {
        let mut lp = LinearProgram::new(1);
        lp.objective = vec![rat_int(-1)];
        lp.lower[0] = Some(Rat::zero());
        assert_eq!(solve_min(&lp).unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn equality_constraints_and_free_variables() {
        // min x0 subject to x0 + x1 = 1, x1 <= 3/4, x1 free otherwise.
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![rat_int(1), rat_int(0)];
        lp.push(vec![rat_int(1), rat_int(1)], Cmp::Eq, rat_int(1));
        lp.push(vec![rat_int(0), rat_int(1)], Cmp::Le, rat(3, 4));
        match solve_min(&lp).unwrap() {
            LpOutcome::Optimal { x, objective } => {
                assert_eq!(objective, rat(1, 4));
                assert_eq!(x[0], rat(1, 4));
                assert_eq!(x[1], rat(3, 4));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn negative_rhs_rows_are_handled() {
        // x >= -1 written as -x <= 1 with x in [-2, 0] via free split.
        let mut lp = LinearProgram::new(1);
        lp.objective = vec![rat_int(1)];
        lp.push(vec![rat_int(-1)], Cmp::Le, rat_int(1));
        lp.push(vec![rat_int(1)], Cmp::Le, rat_int(0));
        match solve_min(&lp).unwrap() {
            LpOutcome::Optimal { x, objective } => {
                assert_eq!(x[0], rat_int(-1));
                assert_eq!(objective, rat_int(-1));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn pullback_lp_from_the_toy_model() {
        // min 1·y subject to M_b^T y >= (0, 0, 9/10), 1·y <= 1, y in [0,1]^3.
        // Columns of M_b^T are the rows of M_b.
        let mut lp = LinearProgram::with_unit_box(3);
        lp.objective = vec![rat_int(1), rat_int(1), rat_int(1)];
        lp.push(vec![rat_int(0), rat_int(0), rat_int(0)], Cmp::Ge, rat_int(0));
        lp.push(vec![rat(1, 10), rat_int(1), rat_int(0)], Cmp::Ge, rat_int(0));
        lp.push(vec![rat(9, 10), rat_int(0), rat_int(1)], Cmp::Ge, rat(9, 10));
        lp.push(vec![rat_int(1), rat_int(1), rat_int(1)], Cmp::Le, rat_int(1));
        match solve_min(&lp).unwrap() {
            LpOutcome::Optimal { x, objective } => {
                assert_eq!(objective, rat(9, 10));
                assert_eq!(x, vec![rat_int(0), rat_int(0), rat(9, 10)]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
