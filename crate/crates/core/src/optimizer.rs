//! Rate-leakage trade-off optimization.
//!
//! Minimizing `log2 sum_q max_m P(q|m)(z)` subject to `D(z) <= D_target` and
//! `z` in the simplex is solved as the linear program
//!
//! ```text
//! minimize   sum_q t_q
//! subject to t_q >= P(q|m)(z)   for all q, m
//!            D(z) <= D_target,  sum_s z_s = 1,  z >= 0
//! ```
//!
//! whose optimum `v*` gives the leakage `log2 v*`.
//!
//! Before solving, the LP is reduced by symmetries of the query table: a
//! simultaneous permutation of query rows, or of query columns together with
//! file labels, that maps the table onto itself. Each candidate is checked
//! exactly against the table and dropped if it fails. Averaging any optimum
//! over the accepted group gives an optimum that is constant on strategy
//! orbits, so one variable per strategy orbit and one epigraph variable per
//! query orbit suffice.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::leakage::{ConditionalQueryTable, Leakage, LeakageModel, LinearForm};
use crate::lp::{self, LinearProgram, LpSolution, Relation, SimplexOptions};
use crate::scheme::{SchemeInstance, SchemeKind};

/// Default number of download-cost targets in a sweep.
pub const DEFAULT_GRID: usize = 60;

/// Upper bound on the number of simplex-grid points the brute-force oracle visits.
pub const MAX_GRID_POINTS: u128 = 50_000_000;

/// Slack allowed on the leakage objective when re-optimizing for download cost.
const SECOND_STAGE_SLACK: f64 = 1e-11;

/// A permutation of strategies, queries and file labels that maps the
/// conditional query table onto itself.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TableSymmetry {
    pub strategies: Vec<usize>,
    pub queries: Vec<usize>,
    pub files: Vec<usize>,
}

impl TableSymmetry {
    /// Exact check: `P(g q | g m)` has coefficient `c` on `z_{g s}` whenever
    /// `P(q | m)` has coefficient `c` on `z_s`, and answer lengths agree.
    pub fn preserves(&self, table: &ConditionalQueryTable) -> bool {
        (0..table.len()).all(|qi| {
            let gq = self.queries[qi];
            table.length(gq) == table.length(qi)
                && (1..=table.files()).all(|m| {
                    let src = table.conditional(qi, m);
                    let dst = table.conditional(gq, self.files[m - 1] + 1);
                    src.constant() == dst.constant()
                        && src.terms().count() == dst.terms().count()
                        && src
                            .terms()
                            .all(|(s, c)| dst.coefficient(self.strategies[s]) == c)
                })
        })
    }
}

fn is_permutation(p: &[usize]) -> bool {
    let mut seen = vec![false; p.len()];
    p.iter().all(|&v| v < p.len() && !std::mem::replace(&mut seen[v], true))
}

fn transposition(len: usize, a: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..len).collect();
    p.swap(a, a + 1);
    p
}

/// Tries adjacent row transpositions and adjacent column transpositions
/// (relabeling files alongside) and keeps those that are table symmetries.
pub fn detect_symmetries(scheme: &SchemeInstance, table: &ConditionalQueryTable) -> Vec<TableSymmetry> {
    let k = scheme.params().k;
    let files = scheme.files();
    let identity = |len: usize| (0..len).collect::<Vec<usize>>();
    let mut candidates = Vec::new();
    for i in 0..k.saturating_sub(1) {
        candidates.push((transposition(k, i), identity(files)));
    }
    for c in 0..files.saturating_sub(1) {
        candidates.push((identity(k), transposition(files, c)));
    }

    let members = scheme.alphabet().members();
    candidates
        .into_iter()
        .filter_map(|(rows, cols)| {
            // Guess the strategy action from the j = 1 encoder, then verify on the table.
            let target_file = cols[0] + 1;
            let lookup: HashMap<_, usize> = members
                .iter()
                .enumerate()
                .map(|(si, s)| (scheme.raw_query(target_file, s, 1), si))
                .collect();
            let strategies = members
                .iter()
                .map(|s| {
                    let image = scheme.raw_query(1, s, 1).permuted(&rows, &cols);
                    lookup.get(&image).copied()
                })
                .collect::<Option<Vec<_>>>()?;
            if !is_permutation(&strategies) {
                return None;
            }
            let queries = table
                .queries()
                .iter()
                .map(|q| table.query_index(&q.permuted(&rows, &cols)))
                .collect::<Option<Vec<_>>>()?;
            let sym = TableSymmetry {
                strategies,
                queries,
                files: cols,
            };
            sym.preserves(table).then_some(sym)
        })
        .collect()
}

fn orbits(len: usize, perms: impl Iterator<Item = Vec<usize>> + Clone) -> (Vec<usize>, usize) {
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut parent: Vec<usize> = (0..len).collect();
    for p in perms {
        for (a, &b) in p.iter().enumerate() {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
    }
    let mut label = vec![usize::MAX; len];
    let mut orbit_of = vec![0; len];
    let mut count = 0;
    for x in 0..len {
        let root = find(&mut parent, x);
        if label[root] == usize::MAX {
            label[root] = count;
            count += 1;
        }
        orbit_of[x] = label[root];
    }
    (orbit_of, count)
}

/// The (possibly symmetry-reduced) optimization data of one scheme.
#[derive(Clone, Debug)]
pub struct TradeoffModel {
    kind: SchemeKind,
    files: usize,
    servers: usize,
    dimension: usize,
    file_symbols: usize,
    table: ConditionalQueryTable,
    cost: LinearForm,
    symmetries: usize,
    strategy_orbit: Vec<usize>,
    strategy_orbit_sizes: Vec<usize>,
    /// `(representative query, orbit size)` per query orbit.
    query_orbits: Vec<(usize, usize)>,
    /// Epigraph rows `P(q_rep | m)` over strategy-orbit variables, indexed `[orbit][m-1]`.
    rows: Vec<Vec<Vec<(usize, f64)>>>,
    orbit_cost: Vec<f64>,
    cost_constant: f64,
    cost_min: f64,
    cost_max: f64,
}

impl TradeoffModel {
    /// Builds the model; `reduce` enables symmetry reduction.
    pub fn new(scheme: &SchemeInstance, leakage: &LeakageModel, reduce: bool) -> Result<Self> {
        if let Some(j) = leakage.first_unequal_server() {
            return Err(Error::NotTimeShared(j));
        }
        let table = leakage.table(1).clone();
        let syms = if reduce {
            detect_symmetries(scheme, &table)
        } else {
            Vec::new()
        };
        let (strategy_orbit, n_sorb) = orbits(
            table.strategies(),
            syms.iter().map(|g| g.strategies.clone()),
        );
        let (query_orbit, n_qorb) = orbits(table.len(), syms.iter().map(|g| g.queries.clone()));

        let mut strategy_orbit_sizes = vec![0; n_sorb];
        for &o in &strategy_orbit {
            strategy_orbit_sizes[o] += 1;
        }
        let mut query_orbits: Vec<(usize, usize)> = vec![(usize::MAX, 0); n_qorb];
        for (qi, &o) in query_orbit.iter().enumerate() {
            query_orbits[o].0 = query_orbits[o].0.min(qi);
            query_orbits[o].1 += 1;
        }

        let files = table.files();
        let rows = query_orbits
            .iter()
            .map(|&(qi, _)| {
                (1..=files)
                    .map(|m| {
                        let mut acc: HashMap<usize, f64> = HashMap::new();
                        for (s, c) in table.conditional(qi, m).terms() {
                            *acc.entry(strategy_orbit[s]).or_insert(0.0) += ratio_f64(c);
                        }
                        let mut terms: Vec<(usize, f64)> = acc.into_iter().collect();
                        terms.sort_by_key(|&(o, _)| o);
                        terms
                    })
                    .collect()
            })
            .collect();

        let cost = leakage.cost_form().clone();
        let per_strategy: Vec<f64> = (0..table.strategies())
            .map(|s| ratio_f64(cost.coefficient(s)))
            .collect();
        let mut orbit_cost = vec![0.0; n_sorb];
        for (s, &c) in per_strategy.iter().enumerate() {
            orbit_cost[strategy_orbit[s]] += c;
        }
        let cost_constant = ratio_f64(cost.constant());
        let cost_min = cost_constant + per_strategy.iter().copied().fold(f64::INFINITY, f64::min);
        let cost_max = cost_constant + per_strategy.iter().copied().fold(f64::NEG_INFINITY, f64::max);

        Ok(Self {
            kind: scheme.kind(),
            files,
            servers: scheme.servers(),
            dimension: scheme.dimension(),
            file_symbols: leakage.file_symbols(),
            table,
            cost,
            symmetries: syms.len(),
            strategy_orbit,
            strategy_orbit_sizes,
            query_orbits,
            rows,
            orbit_cost,
            cost_constant,
            cost_min,
            cost_max,
        })
    }

    pub fn kind(&self) -> SchemeKind {
        self.kind
    }

    pub fn files(&self) -> usize {
        self.files
    }

    pub fn servers(&self) -> usize {
        self.servers
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn table(&self) -> &ConditionalQueryTable {
        &self.table
    }

    pub fn cost_form(&self) -> &LinearForm {
        &self.cost
    }

    /// Number of accepted symmetry generators.
    pub fn symmetry_generators(&self) -> usize {
        self.symmetries
    }

    pub fn strategy_orbits(&self) -> usize {
        self.strategy_orbit_sizes.len()
    }

    pub fn query_orbits(&self) -> usize {
        self.query_orbits.len()
    }

    /// Smallest and largest download cost over all PMFs.
    pub fn cost_range(&self) -> (f64, f64) {
        (self.cost_min, self.cost_max)
    }

    /// `n` uniformly spaced targets from the minimum to the maximum download cost.
    pub fn default_grid(&self, n: usize) -> Vec<f64> {
        let (lo, hi) = self.cost_range();
        if n <= 1 || hi - lo < 1e-12 {
            return vec![lo];
        }
        (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect()
    }

    pub fn rate_at(&self, cost: f64) -> Result<f64> {
        crate::leakage::wpir_rate(self.file_symbols, 1, cost)
    }

    /// Expands orbit weights to a full PMF over strategies, clamped and renormalized.
    fn expand(&self, w: &[f64]) -> Vec<f64> {
        let mut z: Vec<f64> = self
            .strategy_orbit
            .iter()
            .map(|&o| w[o].max(0.0))
            .collect();
        let total: f64 = z.iter().sum();
        for v in &mut z {
            *v /= total;
        }
        z
    }
}

fn ratio_f64(r: crate::leakage::Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// The epigraph LP for one download-cost target.
#[derive(Clone, Debug)]
pub struct LpProblem {
    pub lp: LinearProgram,
    pub d_target: f64,
    strategy_vars: usize,
}

/// Builds the epigraph LP for `D(z) <= d_target`.
pub fn reformulate(model: &TradeoffModel, d_target: f64) -> Result<LpProblem> {
    if d_target < model.cost_min - 1e-9 {
        return Err(Error::Infeasible);
    }
    let nw = model.strategy_orbits();
    let nt = model.query_orbits();
    let mut lp = LinearProgram::new(nw + nt);
    for (o, &(_, size)) in model.query_orbits.iter().enumerate() {
        lp.set_objective(nw + o, size as f64);
    }
    for (o, per_m) in model.rows.iter().enumerate() {
        for terms in per_m {
            let mut row = terms.clone();
            row.push((nw + o, -1.0));
            lp.add_constraint(row, Relation::Le, 0.0);
        }
    }
    lp.add_constraint(
        model.orbit_cost.iter().copied().enumerate().collect(),
        Relation::Le,
        d_target - model.cost_constant,
    );
    lp.add_constraint(
        model
            .strategy_orbit_sizes
            .iter()
            .map(|&s| s as f64)
            .enumerate()
            .collect(),
        Relation::Eq,
        1.0,
    );
    Ok(LpProblem {
        lp,
        d_target,
        strategy_vars: nw,
    })
}

/// Optimal value of an epigraph LP plus the optimizing orbit weights.
#[derive(Clone, Debug)]
pub struct LpOutcome {
    pub value: f64,
    pub weights: Vec<f64>,
    pub epigraph: Vec<f64>,
    pub solution: LpSolution,
}

pub fn solve_lp(problem: &LpProblem, opts: &SimplexOptions) -> Result<LpOutcome> {
    let solution = lp::solve(&problem.lp, opts)?;
    Ok(LpOutcome {
        value: solution.objective,
        weights: solution.x[..problem.strategy_vars].to_vec(),
        epigraph: solution.x[problem.strategy_vars..].to_vec(),
        solution,
    })
}

/// One point of the rate-leakage trade-off curve.
#[derive(Clone, Debug, Serialize)]
pub struct TradeoffPoint {
    pub d_target: f64,
    pub d_achieved: f64,
    pub leakage_bits: f64,
    pub leakage_normalized: f64,
    pub rate: f64,
    /// Optimal LP value `sum_q max_m P(q|m)`.
    pub lp_value: f64,
    pub duality_gap: f64,
    pub z: Vec<f64>,
}

impl TradeoffModel {
    /// Minimal leakage under `D(z) <= d_target`; among minimizers, the
    /// smallest download cost is reported.
    pub fn solve_target(&self, d_target: f64, opts: &SimplexOptions) -> Result<TradeoffPoint> {
        let problem = reformulate(self, d_target)?;
        let first = solve_lp(&problem, opts)?;
        let mut z = self.expand(&first.weights);
        let mut gap = first.solution.duality_gap;
        let mut cost = self.cost.eval(&z);

        if cost < d_target - 1e-9 {
            // Constraint is slack: pick the cheapest PMF with the same leakage.
            let mut second = problem.lp.clone();
            for v in 0..problem.strategy_vars {
                second.set_objective(v, self.orbit_cost[v]);
            }
            for v in problem.strategy_vars..second.num_vars() {
                second.set_objective(v, 0.0);
            }
            let cap: Vec<(usize, f64)> = self
                .query_orbits
                .iter()
                .enumerate()
                .map(|(o, &(_, size))| (problem.strategy_vars + o, size as f64))
                .collect();
            second.add_constraint(cap, Relation::Le, first.value + SECOND_STAGE_SLACK);
            if let Ok(sol) = lp::solve(&second, opts) {
                let z2 = self.expand(&sol.x[..problem.strategy_vars]);
                let c2 = self.cost.eval(&z2);
                if c2 < cost {
                    z = z2;
                    cost = c2;
                    gap = gap.abs().max(sol.duality_gap.abs());
                }
            }
        }

        let leak = Leakage::from_sum_of_maxima(self.table.sum_of_maxima(&z), self.files);
        Ok(TradeoffPoint {
            d_target,
            d_achieved: cost,
            leakage_bits: leak.bits,
            leakage_normalized: leak.normalized,
            rate: self.rate_at(cost)?,
            lp_value: first.value,
            duality_gap: gap,
            z,
        })
    }

    /// Solves every target independently (in parallel), preserving order.
    pub fn solve_targets(&self, grid: &[f64], opts: &SimplexOptions) -> Vec<Result<TradeoffPoint>> {
        grid.par_iter().map(|&d| self.solve_target(d, opts)).collect()
    }
}

/// Result of a sweep: the curve plus the targets that were infeasible.
#[derive(Clone, Debug)]
pub struct Sweep {
    pub points: Vec<TradeoffPoint>,
    pub infeasible: Vec<f64>,
}

/// Solves each target, drops duplicate `(leakage, rate)` points and sorts by rate.
pub fn sweep_tradeoff(model: &TradeoffModel, grid: &[f64], opts: &SimplexOptions) -> Result<Sweep> {
    summarize(grid, model.solve_targets(grid, opts))
}

/// Builds a [`Sweep`] from per-target results of [`TradeoffModel::solve_targets`].
pub fn summarize(grid: &[f64], results: Vec<Result<TradeoffPoint>>) -> Result<Sweep> {
    let mut points = Vec::new();
    let mut infeasible = Vec::new();
    for (d, res) in grid.iter().zip(results) {
        match res {
            Ok(p) => points.push(p),
            Err(Error::Infeasible) => infeasible.push(*d),
            Err(e) => return Err(e),
        }
    }
    if points.is_empty() {
        return Err(Error::AllInfeasible);
    }
    points.sort_by(|a, b| {
        a.rate
            .total_cmp(&b.rate)
            .then(a.leakage_bits.total_cmp(&b.leakage_bits))
    });
    points.dedup_by(|b, a| {
        (a.rate - b.rate).abs() < 1e-10 && (a.leakage_bits - b.leakage_bits).abs() < 1e-10
    });
    Ok(Sweep { points, infeasible })
}

/// Column names of the trade-off CSV.
pub const TRADEOFF_HEADER: &str = "scheme,M,N,K,D_target,D_achieved,leakage_bits,leakage_normalized,rate";

/// Writes trade-off points as CSV rows under [`TRADEOFF_HEADER`].
pub fn write_tradeoff_csv<W: std::io::Write>(model: &TradeoffModel, points: &[TradeoffPoint], mut out: W) -> Result<()> {
    writeln!(out, "{TRADEOFF_HEADER}")?;
    for p in points {
        writeln!(
            out,
            "{},{},{},{},{:.10},{:.10},{:.10},{:.10},{:.10}",
            model.kind(),
            model.files(),
            model.servers(),
            model.dimension(),
            p.d_target,
            p.d_achieved,
            p.leakage_bits,
            p.leakage_normalized,
            p.rate
        )?;
    }
    Ok(())
}

/// Exhaustive search over the barycentric grid `{ z : z_s in {0, 1/R, ..., 1} }`.
///
/// Every grid point is a feasible PMF, so the grid minimum can never be
/// below the true optimum; it approaches it as the grid refines.
#[derive(Clone, Debug)]
pub struct SimplexGrid {
    /// `(D(z), sum_q max_m P(q|m)(z))` per grid point.
    points: Vec<(f64, f64)>,
    files: usize,
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

impl SimplexGrid {
    pub fn new(table: &ConditionalQueryTable, cost: &LinearForm, step: f64) -> Result<Self> {
        let resolution = (1.0 / step).round() as usize;
        if resolution == 0 {
            return Err(Error::InvalidParams(format!("grid step {step} is too coarse")));
        }
        let dims = table.strategies();
        let count = binomial((resolution + dims - 1) as u128, (dims - 1) as u128);
        if count > MAX_GRID_POINTS {
            return Err(Error::TooLarge {
                what: "simplex grid",
                needed: count,
                limit: MAX_GRID_POINTS,
            });
        }
        let rows: Vec<Vec<Vec<(usize, f64)>>> = (0..table.len())
            .map(|qi| {
                (1..=table.files())
                    .map(|m| {
                        table
                            .conditional(qi, m)
                            .terms()
                            .map(|(s, c)| (s, ratio_f64(c)))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let cost_coeffs: Vec<f64> = (0..dims).map(|s| ratio_f64(cost.coefficient(s))).collect();
        let cost_constant = ratio_f64(cost.constant());

        let mut points = Vec::with_capacity(count as usize);
        let mut counts = vec![0usize; dims];
        let mut z = vec![0.0; dims];
        let eval = |z: &[f64]| -> (f64, f64) {
            let d = cost_constant + cost_coeffs.iter().zip(z).map(|(c, v)| c * v).sum::<f64>();
            let v: f64 = rows
                .iter()
                .map(|per_m| {
                    per_m
                        .iter()
                        .map(|terms| terms.iter().map(|&(s, c)| c * z[s]).sum::<f64>())
                        .fold(0.0, f64::max)
                })
                .sum();
            (d, v)
        };
        compositions(resolution, &mut counts, 0, &mut |counts| {
            for (zi, &c) in z.iter_mut().zip(counts) {
                *zi = c as f64 / resolution as f64;
            }
            points.push(eval(&z));
        });
        Ok(Self {
            points,
            files: table.files(),
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Smallest leakage (bits) among grid points with `D(z) <= d_target`.
    pub fn min_leakage(&self, d_target: f64) -> Option<f64> {
        self.points
            .iter()
            .filter(|(d, _)| *d <= d_target + 1e-12)
            .map(|&(_, v)| v)
            .min_by(f64::total_cmp)
            .map(|v| Leakage::from_sum_of_maxima(v, self.files).bits)
    }
}

fn compositions(remaining: usize, counts: &mut [usize], pos: usize, visit: &mut impl FnMut(&[usize])) {
    if pos == counts.len() - 1 {
        counts[pos] = remaining;
        visit(counts);
        return;
    }
    for c in (0..=remaining).rev() {
        counts[pos] = c;
        compositions(remaining - c, counts, pos + 1, visit);
    }
}

/// Brute-force minimum leakage over a simplex grid with the given step.
/// Returns `None` when no grid point meets the cost target.
pub fn brute_force_min_leakage(
    table: &ConditionalQueryTable,
    cost: &LinearForm,
    d_target: f64,
    step: f64,
) -> Result<Option<f64>> {
    Ok(SimplexGrid::new(table, cost, step)?.min_leakage(d_target))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(kind: SchemeKind, m: usize, n: usize, k: usize, reduce: bool) -> TradeoffModel {
        let sch = SchemeInstance::new(kind, m, n, k).unwrap();
        let lm = LeakageModel::build(&sch).unwrap();
        TradeoffModel::new(&sch, &lm, reduce).unwrap()
    }

    #[test]
    fn compositions_count() {
        let mut n = 0;
        compositions(4, &mut [0; 3], 0, &mut |c| {
            assert_eq!(c.iter().sum::<usize>(), 4);
            n += 1;
        });
        assert_eq!(n, 15);
        assert_eq!(binomial(6, 2), 15);
    }

    #[test]
    fn ztsl_cost_range_and_extremes() {
        let m = model(SchemeKind::Ztsl, 2, 3, 2, true);
        assert_eq!(m.cost_range(), (3.0, 4.0));
        let opts = SimplexOptions::default();
        let free = m.solve_target(4.0, &opts).unwrap();
        assert!(free.leakage_bits.abs() < 1e-9);
        assert!((free.lp_value - 1.0).abs() < 1e-9);
        let tight = m.solve_target(3.0, &opts).unwrap();
        assert!(tight.z[0].abs() < 1e-12);
        assert!(reformulate(&m, 2.9).is_err());
    }

    #[test]
    fn olr_full_rate_point() {
        let m = model(SchemeKind::Olr, 2, 3, 2, true);
        let p = m.solve_target(2.0, &SimplexOptions::default()).unwrap();
        // D = 2 confines mass to z4, z6; the queries (2 1|1 2) and (1 2|2 1)
        // are shared by both files, so the sum of maxima drops to 5/3.
        assert!((p.lp_value - 5.0 / 3.0).abs() < 1e-9);
        assert!((p.leakage_bits - (5.0f64 / 3.0).log2()).abs() < 1e-9);
        let support: Vec<usize> = (0..6).filter(|&s| p.z[s] > 1e-12).collect();
        assert!(support.iter().all(|s| [3, 5].contains(s)));
        assert!((p.rate - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_file_has_zero_leakage() {
        let m = model(SchemeKind::Zyqt, 1, 3, 2, true);
        for d in m.default_grid(5) {
            let p = m.solve_target(d, &SimplexOptions::default()).unwrap();
            assert!((p.lp_value - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn symmetry_reduction_matches_full_lp() {
        for kind in SchemeKind::ALL {
            let full = model(kind, 3, 3, 2, false);
            let reduced = model(kind, 3, 3, 2, true);
            assert!(reduced.strategy_orbits() <= full.strategy_orbits());
            for d in full.default_grid(7) {
                let a = full.solve_target(d, &SimplexOptions::default()).unwrap();
                let b = reduced.solve_target(d, &SimplexOptions::default()).unwrap();
                assert!((a.lp_value - b.lp_value).abs() < 1e-9, "{kind} D={d}");
                assert!((a.d_achieved - b.d_achieved).abs() < 1e-9, "{kind} D={d}");
            }
        }
    }

    #[test]
    fn detected_symmetries_are_exact() {
        let sch = SchemeInstance::new(SchemeKind::Zyqt, 3, 3, 2).unwrap();
        let lm = LeakageModel::build(&sch).unwrap();
        let syms = detect_symmetries(&sch, lm.table(1));
        // One row swap and two adjacent column swaps.
        assert_eq!(syms.len(), 3);
        assert!(syms.iter().all(|g| g.preserves(lm.table(1))));
        // ZTSL rows carry staircase offsets, so row swaps are not symmetries.
        let sch = SchemeInstance::new(SchemeKind::Ztsl, 3, 3, 2).unwrap();
        let lm = LeakageModel::build(&sch).unwrap();
        let syms = detect_symmetries(&sch, lm.table(1));
        assert!(syms.iter().all(|g| g.files != vec![0, 1, 2] || g.strategies.iter().enumerate().all(|(a, &b)| a == b)));
    }

    #[test]
    fn sweep_dedups_and_sorts() {
        let m = model(SchemeKind::Ztsl, 2, 3, 2, true);
        let grid = m.default_grid(11);
        let sweep = sweep_tradeoff(&m, &grid, &SimplexOptions::default()).unwrap();
        assert!(sweep.points.windows(2).all(|w| w[0].rate <= w[1].rate));
        assert!(sweep.infeasible.is_empty());
        assert!(sweep.points.len() <= grid.len());
        assert_eq!(
            sweep_tradeoff(&m, &[1.0, 2.0], &SimplexOptions::default()).unwrap_err(),
            Error::AllInfeasible
        );
    }

    #[test]
    fn single_strategy_grid() {
        let sch = SchemeInstance::new(SchemeKind::Ztsl, 1, 3, 2).unwrap();
        let lm = LeakageModel::build(&sch).unwrap();
        let grid = SimplexGrid::new(lm.table(1), lm.cost_form(), 0.1).unwrap();
        assert_eq!(grid.len(), 1);
        assert_eq!(grid.min_leakage(1e9), Some(0.0));
    }
}
