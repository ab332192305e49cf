//! Dense two-phase primal simplex for small linear programs.
//!
//! Problems are stated as `minimize c^T x` subject to linear rows with
//! relation `<=`, `>=` or `=`, and `x >= 0`. Pricing is Dantzig's
//! most-negative reduced cost; after a run of degenerate pivots the solver
//! switches to Bland's rule until the objective strictly improves, which
//! rules out cycling.

use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub terms: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// `minimize objective^T x` subject to `constraints`, `x >= 0`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinearProgram {
    num_vars: usize,
    objective: Vec<f64>,
    constraints: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            objective: vec![0.0; num_vars],
            constraints: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn set_objective(&mut self, var: usize, coeff: f64) {
        self.objective[var] = coeff;
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn add_constraint(&mut self, terms: Vec<(usize, f64)>, relation: Relation, rhs: f64) {
        debug_assert!(terms.iter().all(|&(v, _)| v < self.num_vars));
        self.constraints.push(Constraint {
            terms,
            relation,
            rhs,
        });
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self.constraints.iter().map(|c| {
            let lhs: f64 = c.terms.iter().map(|&(v, a)| a * x[v]).sum();
            match c.relation {
                Relation::Le => (lhs - c.rhs).max(0.0),
                Relation::Ge => (c.rhs - lhs).max(0.0),
                Relation::Eq => (lhs - c.rhs).abs(),
            }
        });
        let bounds = x.iter().map(|&v| (-v).max(0.0));
        rows.chain(bounds).fold(0.0, f64::max)
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PivotRule {
    /// Bland's smallest-index rule throughout.
    Bland,
    /// Most negative reduced cost, with a Bland fallback on degenerate stalls.
    Dantzig,
}

#[derive(Clone, Copy, Debug)]
pub struct SimplexOptions {
    pub rule: PivotRule,
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Consecutive degenerate pivots tolerated before switching to Bland's rule.
    pub stall_limit: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            rule: PivotRule::Dantzig,
            tolerance: 1e-9,
            max_iterations: 1_000_000,
            stall_limit: 50,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub objective: f64,
    pub x: Vec<f64>,
    /// One multiplier per constraint, in the orientation the constraint was given.
    pub duals: Vec<f64>,
    pub dual_objective: f64,
    /// `objective - dual_objective`; zero at an exact optimum.
    pub duality_gap: f64,
    /// Most negative reduced cost at termination (`>= -tolerance` when optimal).
    pub min_reduced_cost: f64,
    pub primal_violation: f64,
    pub iterations: usize,
}

struct Tableau {
    rows: usize,
    width: usize,
    data: Vec<f64>,
    obj: Vec<f64>,
    basis: Vec<usize>,
    allowed: Vec<bool>,
    iterations: usize,
}

const PAR_THRESHOLD: usize = 1 << 17;

impl Tableau {
    fn rhs(&self, r: usize) -> f64 {
        self.data[r * self.width + self.width - 1]
    }

    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width + c]
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width;
        let p = self.data[pr * w + pc];
        for v in &mut self.data[pr * w..(pr + 1) * w] {
            *v /= p;
        }
        self.data[pr * w + pc] = 1.0;
        let prow: Vec<f64> = self.data[pr * w..(pr + 1) * w].to_vec();
        let eliminate = |(r, row): (usize, &mut [f64])| {
            if r == pr {
                return;
            }
            let f = row[pc];
            if f == 0.0 {
                return;
            }
            for (v, &pv) in row.iter_mut().zip(&prow) {
                *v -= f * pv;
            }
            row[pc] = 0.0;
        };
        if self.data.len() >= PAR_THRESHOLD {
            self.data.par_chunks_mut(w).enumerate().for_each(eliminate);
        } else {
            self.data.chunks_mut(w).enumerate().for_each(eliminate);
        }
        let f = self.obj[pc];
        if f != 0.0 {
            for (v, &pv) in self.obj.iter_mut().zip(&prow) {
                *v -= f * pv;
            }
            self.obj[pc] = 0.0;
        }
        self.basis[pr] = pc;
        self.iterations += 1;
    }

    /// Runs primal simplex on the current objective row until optimal.
    fn optimize(&mut self, opts: &SimplexOptions) -> Result<()> {
        let tol = opts.tolerance;
        let rhs_col = self.width - 1;
        let mut bland = opts.rule == PivotRule::Bland;
        let mut degenerate_run = 0usize;
        loop {
            if self.iterations >= opts.max_iterations {
                return Err(Error::IterationLimit(opts.max_iterations));
            }
            let candidates = (0..rhs_col).filter(|&c| self.allowed[c] && self.obj[c] < -tol);
            let entering = if bland {
                candidates.into_iter().next()
            } else {
                candidates.min_by(|&a, &b| self.obj[a].total_cmp(&self.obj[b]))
            };
            let Some(pc) = entering else {
                return Ok(());
            };

            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.at(r, pc);
                if a <= tol {
                    continue;
                }
                let ratio = self.rhs(r).max(0.0) / a;
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((lr, lratio)) => {
                        let better = if ratio < lratio - 1e-12 {
                            true
                        } else if ratio <= lratio + 1e-12 {
                            if bland {
                                self.basis[r] < self.basis[lr]
                            } else {
                                a > self.at(lr, pc)
                            }
                        } else {
                            false
                        };
                        if better {
                            Some((r, ratio))
                        } else {
                            Some((lr, lratio))
                        }
                    }
                };
            }
            let Some((pr, ratio)) = leave else {
                return Err(Error::Unbounded);
            };
            if ratio <= 1e-12 {
                degenerate_run += 1;
                if degenerate_run > opts.stall_limit {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
                bland = opts.rule == PivotRule::Bland;
            }
            self.pivot(pr, pc);
        }
    }

    fn set_objective(&mut self, costs: &[f64]) {
        let w = self.width;
        self.obj = costs.to_vec();
        self.obj.push(0.0);
        for r in 0..self.rows {
            let cb = costs[self.basis[r]];
            if cb != 0.0 {
                for c in 0..w {
                    self.obj[c] -= cb * self.data[r * w + c];
                }
            }
        }
    }
}

/// Solves a linear program with the two-phase method.
pub fn solve(lp: &LinearProgram, opts: &SimplexOptions) -> Result<LpSolution> {
    let n = lp.num_vars;
    let m = lp.constraints.len();
    let tol = opts.tolerance;

    // Orient rows so every right-hand side is non-negative.
    let mut sign = vec![1.0; m];
    let mut relations = Vec::with_capacity(m);
    for (i, c) in lp.constraints.iter().enumerate() {
        let mut rel = c.relation;
        if c.rhs < 0.0 {
            sign[i] = -1.0;
            rel = match rel {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
        relations.push(rel);
    }

    let n_aux = relations.iter().filter(|r| **r != Relation::Eq).count();
    let n_art = relations.iter().filter(|r| **r != Relation::Le).count();
    let ncols = n + n_aux + n_art;
    let width = ncols + 1;
    let mut data = vec![0.0; m * width];
    let mut basis = vec![0; m];
    let mut identity_col = vec![0; m];
    let mut allowed = vec![true; ncols];
    let (mut aux, mut art) = (n, n + n_aux);
    for (i, c) in lp.constraints.iter().enumerate() {
        let row = &mut data[i * width..(i + 1) * width];
        for &(v, a) in &c.terms {
            row[v] += sign[i] * a;
        }
        row[ncols] = sign[i] * c.rhs;
        match relations[i] {
            Relation::Le => {
                row[aux] = 1.0;
                identity_col[i] = aux;
                aux += 1;
            }
            Relation::Ge => {
                row[aux] = -1.0;
                aux += 1;
                row[art] = 1.0;
                identity_col[i] = art;
                art += 1;
            }
            Relation::Eq => {
                row[art] = 1.0;
                identity_col[i] = art;
                art += 1;
            }
        }
        basis[i] = identity_col[i];
    }

    let mut tab = Tableau {
        rows: m,
        width,
        data,
        obj: Vec::new(),
        basis,
        allowed: allowed.clone(),
        iterations: 0,
    };

    if n_art > 0 {
        let mut phase1 = vec![0.0; ncols];
        for c in &mut phase1[n + n_aux..] {
            *c = 1.0;
        }
        tab.set_objective(&phase1);
        tab.optimize(opts)?;
        if -tab.obj[ncols] > tol.max(1e-9) {
            return Err(Error::Infeasible);
        }
        // Drive zero-level artificials out of the basis where possible.
        for r in 0..m {
            if tab.basis[r] >= n + n_aux {
                if let Some(c) = (0..n + n_aux).find(|&c| tab.at(r, c).abs() > 1e-9) {
                    tab.pivot(r, c);
                }
            }
        }
        for a in &mut allowed[n + n_aux..] {
            *a = false;
        }
        tab.allowed = allowed;
    }

    let mut costs = lp.objective.clone();
    costs.resize(ncols, 0.0);
    tab.set_objective(&costs);
    tab.optimize(opts)?;

    let mut x = vec![0.0; n];
    for r in 0..m {
        if tab.basis[r] < n {
            x[tab.basis[r]] = tab.rhs(r).max(0.0);
        }
    }
    let duals: Vec<f64> = (0..m).map(|i| -tab.obj[identity_col[i]] * sign[i]).collect();
    let dual_objective: f64 = lp
        .constraints
        .iter()
        .zip(&duals)
        .map(|(c, y)| c.rhs * y)
        .sum();
    let objective = lp.objective_value(&x);
    let min_reduced_cost = (0..ncols)
        .filter(|&c| tab.allowed[c])
        .map(|c| tab.obj[c])
        .fold(0.0, f64::min);
    Ok(LpSolution {
        objective,
        primal_violation: lp.max_violation(&x),
        x,
        duals,
        dual_objective,
        duality_gap: objective - dual_objective,
        min_reduced_cost,
        iterations: tab.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_epigraph() {
        let mut lp = LinearProgram::new(1);
        lp.set_objective(0, 1.0);
        lp.add_constraint(vec![(0, 1.0)], Relation::Ge, 0.5);
        lp.add_constraint(vec![(0, 1.0)], Relation::Ge, 0.3);
        let sol = solve(&lp, &SimplexOptions::default()).unwrap();
        assert!((sol.objective - 0.5).abs() < 1e-12);
        assert!(sol.duality_gap.abs() < 1e-12);
    }

    #[test]
    fn textbook_maximization() {
        // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18 -> 36 at (2, 6).
        let mut lp = LinearProgram::new(2);
        lp.set_objective(0, -3.0);
        lp.set_objective(1, -5.0);
        lp.add_constraint(vec![(0, 1.0)], Relation::Le, 4.0);
        lp.add_constraint(vec![(1, 2.0)], Relation::Le, 12.0);
        lp.add_constraint(vec![(0, 3.0), (1, 2.0)], Relation::Le, 18.0);
        for rule in [PivotRule::Bland, PivotRule::Dantzig] {
            let sol = solve(
                &lp,
                &SimplexOptions {
                    rule,
                    ..Default::default()
                },
            )
            .unwrap();
            assert!((sol.objective + 36.0).abs() < 1e-9);
            assert!((sol.x[0] - 2.0).abs() < 1e-9 && (sol.x[1] - 6.0).abs() < 1e-9);
            assert!(sol.duality_gap.abs() < 1e-9);
            assert!(sol.min_reduced_cost >= -1e-9);
        }
    }

    #[test]
    fn equality_and_negative_rhs() {
        // min x + 2y s.t. x + y = 1, -x <= -0.25 -> x = 1, y = 0.
        let mut lp = LinearProgram::new(2);
        lp.set_objective(0, 1.0);
        lp.set_objective(1, 2.0);
        lp.add_constraint(vec![(0, 1.0), (1, 1.0)], Relation::Eq, 1.0);
        lp.add_constraint(vec![(0, -1.0)], Relation::Le, -0.25);
        let sol = solve(&lp, &SimplexOptions::default()).unwrap();
        assert!((sol.objective - 1.0).abs() < 1e-12);
        assert!(sol.primal_violation < 1e-12);
        assert!(sol.duality_gap.abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(1);
        lp.add_constraint(vec![(0, 1.0)], Relation::Le, 1.0);
        lp.add_constraint(vec![(0, 1.0)], Relation::Ge, 2.0);
        assert_eq!(solve(&lp, &SimplexOptions::default()), Err(Error::Infeasible));

        let mut lp = LinearProgram::new(2);
        lp.set_objective(0, -1.0);
        lp.add_constraint(vec![(0, 1.0), (1, -1.0)], Relation::Le, 1.0);
        assert_eq!(solve(&lp, &SimplexOptions::default()), Err(Error::Unbounded));
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::new(2);
        lp.set_objective(0, 1.0);
        lp.add_constraint(vec![(0, 1.0), (1, 1.0)], Relation::Eq, 1.0);
        lp.add_constraint(vec![(0, 2.0), (1, 2.0)], Relation::Eq, 2.0);
        let sol = solve(&lp, &SimplexOptions::default()).unwrap();
        assert!(sol.objective.abs() < 1e-12);
        assert!((sol.x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_cycling_example() {
        // Beale's example cycles under naive Dantzig pricing with lowest-index ties.
        let mut lp = LinearProgram::new(4);
        for (v, c) in [(0, -0.75), (1, 150.0), (2, -0.02), (3, 6.0)] {
            lp.set_objective(v, c);
        }
        lp.add_constraint(
            vec![(0, 0.25), (1, -60.0), (2, -0.04), (3, 9.0)],
            Relation::Le,
            0.0,
        );
        lp.add_constraint(
            vec![(0, 0.5), (1, -90.0), (2, -0.02), (3, 3.0)],
            Relation::Le,
            0.0,
        );
        lp.add_constraint(vec![(2, 1.0)], Relation::Le, 1.0);
        let sol = solve(
            &lp,
            &SimplexOptions {
                stall_limit: 2,
                ..Default::default()
            },
        )
        .unwrap();
        assert!((sol.objective + 0.05).abs() < 1e-9);
    }
}
