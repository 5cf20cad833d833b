//! Small dense linear programming by the two-phase primal simplex
//! method. Built for the discretized oracle: a few hundred variables,
//! a few hundred constraints, exactness over speed. Dantzig pricing
//! with a Bland fallback guards against cycling on degenerate bases.

use crate::error::{Result, SolverError};
use crate::scalar::{lit, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

/// maximize objective . x  subject to  rows, x >= 0.
#[derive(Clone, Debug)]
pub struct LinearProgram<F: Real> {
    pub objective: Vec<F>,
    pub rows: Vec<(Vec<F>, Relation, F)>,
}

#[derive(Clone, Debug)]
pub enum LpOutcome<F: Real> {
    Optimal { x: Vec<F>, value: F },
    Infeasible,
    Unbounded,
}

struct Tableau<F: Real> {
    // rows[i] holds the m constraint rows over all columns; the last
    // column is the right-hand side.
    rows: Vec<Vec<F>>,
    basis: Vec<usize>,
    ncols: usize,
}

impl<F: Real> Tableau<F> {
    fn pivot(&mut self, row: usize, col: usize) {
        let piv = self.rows[row][col];
        let inv = F::one() / piv;
        for v in self.rows[row].iter_mut() {
            *v = *v * inv;
        }
        let pivot_row = self.rows[row].clone();
        for (i, r) in self.rows.iter_mut().enumerate() {
            if i == row {
                continue;
            }
            let factor = r[col];
            if factor != F::zero() {
                for (v, &p) in r.iter_mut().zip(&pivot_row) {
                    *v = *v - factor * p;
                }
            }
        }
        self.basis[row] = col;
    }

    /// Ratio test: the leaving row for an entering column, None if the
    /// column is unbounded.
    fn leaving(&self, col: usize, tol: F) -> Option<usize> {
        let rhs_col = self.ncols;
        let mut best: Option<(usize, F)> = None;
        for (i, r) in self.rows.iter().enumerate() {
            let a = r[col];
            if a > tol {
                let ratio = r[rhs_col] / a;
                let better = match best {
                    None => true,
                    // Bland-style tie break on the basis index keeps the
                    // method finite under degeneracy.
                    Some((bi, br)) => {
                        ratio < br - tol || (ratio < br + tol && self.basis[i] < self.basis[bi])
                    }
                };
                if better {
                    best = Some((i, ratio));
                }
            }
        }
        best.map(|(i, _)| i)
    }
}

/// Run the simplex iterations on a reduced-cost row `cost` (to be
/// minimized: entering columns have cost < -tol). `allowed` masks the
/// columns eligible to enter. Returns false if an unbounded ray was hit.
fn iterate<F: Real>(
    tab: &mut Tableau<F>,
    cost: &mut [F],
    allowed: &dyn Fn(usize) -> bool,
    tol: F,
) -> Result<bool> {
    let max_iters = 50 * (tab.rows.len() + tab.ncols);
    for iter in 0..max_iters {
        // Dantzig: most negative reduced cost; switch to Bland (lowest
        // index) late in the run to guarantee termination.
        let bland = iter > max_iters / 2;
        let mut entering: Option<usize> = None;
        let mut best_cost = -tol;
        for (j, &cj) in cost.iter().enumerate().take(tab.ncols) {
            if !allowed(j) || cj >= -tol {
                continue;
            }
            if bland {
                entering = Some(j);
                break;
            }
            if cj < best_cost {
                best_cost = cj;
                entering = Some(j);
            }
        }
        let Some(col) = entering else {
            return Ok(true);
        };
        let Some(row) = tab.leaving(col, tol) else {
            return Ok(false);
        };
        tab.pivot(row, col);
        // Update the reduced-cost row against the new unit column.
        let factor = cost[col];
        if factor != F::zero() {
            let pivot_row = tab.rows[row].clone();
            for (c, &p) in cost.iter_mut().zip(&pivot_row) {
                *c = *c - factor * p;
            }
        }
    }
    Err(SolverError::Malformed(
        "simplex iteration limit exceeded".into(),
    ))
}

fn reduced_costs<F: Real>(tab: &Tableau<F>, obj: &[F]) -> Vec<F> {
    // cost_j = obj_j - sum_i obj_{basis_i} * tab[i][j], extended over the
    // rhs column so the objective value rides along.
    let mut cost = vec![F::zero(); tab.ncols + 1];
    for (j, c) in cost.iter_mut().enumerate().take(obj.len()) {
        *c = obj[j];
    }
    for (i, &b) in tab.basis.iter().enumerate() {
        let cb = if b < obj.len() { obj[b] } else { F::zero() };
        if cb != F::zero() {
            for (c, &v) in cost.iter_mut().zip(&tab.rows[i]) {
                *c = *c - cb * v;
            }
        }
    }
    cost
}

/// Solve the program by the two-phase simplex method.
pub fn solve<F: Real>(lp: &LinearProgram<F>) -> Result<LpOutcome<F>> {
    let n = lp.objective.len();
    let m = lp.rows.len();
    for (row, _, _) in &lp.rows {
        if row.len() != n {
            return Err(SolverError::Malformed(format!(
                "constraint row has {} coefficients, objective has {}",
                row.len(),
                n
            )));
        }
    }
    let tol = lit::<F>(1e-9);

    // Count auxiliary columns: slack/surplus for inequalities, artificial
    // for equalities and >= rows (after sign-normalizing b >= 0).
    let mut n_slack = 0usize;
    let mut n_art = 0usize;
    let mut normed: Vec<(Vec<F>, Relation, F)> = Vec::with_capacity(m);
    for (row, rel, b) in &lp.rows {
        let (mut row, mut rel, mut b) = (row.clone(), *rel, *b);
        if b < F::zero() {
            for v in &mut row {
                *v = -*v;
            }
            b = -b;
            rel = match rel {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
        match rel {
            Relation::Le => n_slack += 1,
            Relation::Ge => {
                n_slack += 1;
                n_art += 1;
            }
            Relation::Eq => n_art += 1,
        }
        normed.push((row, rel, b));
    }
    let ncols = n + n_slack + n_art;
    let mut rows: Vec<Vec<F>> = Vec::with_capacity(m);
    let mut basis = vec![0usize; m];
    let mut slack_at = n;
    let mut art_at = n + n_slack;
    let art_start = n + n_slack;
    for (i, (coef, rel, b)) in normed.iter().enumerate() {
        let mut r = vec![F::zero(); ncols + 1];
        r[..n].copy_from_slice(coef);
        r[ncols] = *b;
        match rel {
            Relation::Le => {
                r[slack_at] = F::one();
                basis[i] = slack_at;
                slack_at += 1;
            }
            Relation::Ge => {
                r[slack_at] = -F::one();
                slack_at += 1;
                r[art_at] = F::one();
                basis[i] = art_at;
                art_at += 1;
            }
            Relation::Eq => {
                r[art_at] = F::one();
                basis[i] = art_at;
                art_at += 1;
            }
        }
        rows.push(r);
    }
    let mut tab = Tableau { rows, basis, ncols };

    // Phase 1: minimize the sum of artificials.
    if n_art > 0 {
        let mut phase1_obj = vec![F::zero(); ncols];
        for c in phase1_obj.iter_mut().skip(art_start) {
            *c = F::one();
        }
        let mut cost = reduced_costs(&tab, &phase1_obj);
        let finished = iterate(&mut tab, &mut cost, &|_| true, tol)?;
        if !finished {
            return Err(SolverError::Malformed(
                "phase-1 objective unbounded below".into(),
            ));
        }
        // Residual infeasibility is the phase-1 objective value, which
        // is -cost[rhs].
        if -cost[ncols] > lit::<F>(1e-7) {
            return Ok(LpOutcome::Infeasible);
        }
        // Pivot any artificial still in the basis out on a structural or
        // slack column; a fully zero row is redundant and harmless.
        for i in 0..m {
            if tab.basis[i] >= art_start {
                if let Some(col) = (0..art_start).find(|&j| tab.rows[i][j].abs() > tol) {
                    tab.pivot(i, col);
                }
            }
        }
    }

    // Phase 2: maximize the real objective = minimize its negation,
    // with artificial columns barred from entering.
    let phase2_obj: Vec<F> = lp
        .objective
        .iter()
        .map(|&c| -c)
        .chain(std::iter::repeat(F::zero()))
        .take(ncols)
        .collect();
    let mut cost = reduced_costs(&tab, &phase2_obj);
    let finished = iterate(&mut tab, &mut cost, &|j| j < art_start, tol)?;
    if !finished {
        return Ok(LpOutcome::Unbounded);
    }

    let mut x = vec![F::zero(); n];
    for (i, &b) in tab.basis.iter().enumerate() {
        if b < n {
            x[b] = tab.rows[i][ncols].max(F::zero());
        }
    }
    let value = lp
        .objective
        .iter()
        .zip(&x)
        .map(|(&c, &xi)| c * xi)
        .sum::<F>();
    Ok(LpOutcome::Optimal { x, value })
}
