//! Conditional query distributions, maximal leakage, and download cost as
//! exact linear functions of the strategy PMF `z`.
//!
//! All coefficients are exact rationals. Floats enter only when a form is
//! evaluated at a numeric PMF.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::Write;

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scheme::{answer_length, QueryMatrix, SchemeInstance};

pub type Rational = Ratio<i64>;

/// Upper bound on `|S| * N * M` query evaluations per table.
pub const MAX_TABLE_WORK: u128 = 50_000_000;

/// `constant + sum_s coeff_s * z_s` with exact rational coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct LinearForm {
    constant: Rational,
    coeffs: BTreeMap<usize, Rational>,
}

impl LinearForm {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constant_form(c: Rational) -> Self {
        Self {
            constant: c,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn from_terms(constant: Rational, terms: impl IntoIterator<Item = (usize, Rational)>) -> Self {
        let mut f = Self::constant_form(constant);
        for (s, c) in terms {
            f.add_term(s, c);
        }
        f
    }

    pub fn add_term(&mut self, s: usize, c: Rational) {
        let e = self.coeffs.entry(s).or_insert_with(Rational::zero);
        *e += c;
        if e.is_zero() {
            self.coeffs.remove(&s);
        }
    }

    pub fn add_constant(&mut self, c: Rational) {
        self.constant += c;
    }

    pub fn add_scaled(&mut self, other: &LinearForm, scale: Rational) {
        self.constant += other.constant * scale;
        for (&s, &c) in &other.coeffs {
            self.add_term(s, c * scale);
        }
    }

    pub fn constant(&self) -> Rational {
        self.constant
    }

    pub fn coefficient(&self, s: usize) -> Rational {
        self.coeffs.get(&s).copied().unwrap_or_else(Rational::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (usize, Rational)> + '_ {
        self.coeffs.iter().map(|(&s, &c)| (s, c))
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        self.constant.to_f64().unwrap_or(0.0)
            + self
                .coeffs
                .iter()
                .map(|(&s, c)| c.to_f64().unwrap_or(0.0) * z[s])
                .sum::<f64>()
    }

    pub fn eval_exact(&self, z: &[Rational]) -> Rational {
        self.coeffs
            .iter()
            .fold(self.constant, |acc, (&s, &c)| acc + c * z[s])
    }

    /// Substitutes `sum_s z_s = 1`: moves a shared coefficient into the constant.
    ///
    /// `D(z) = 3 + z_1` and `D(z) = 3(z_1+z_2+z_3) + z_1` are the same
    /// function on the simplex; this returns the representative whose
    /// smallest coefficient over `0..strategies` is zero.
    pub fn on_simplex(&self, strategies: usize) -> LinearForm {
        let min = (0..strategies)
            .map(|s| self.coefficient(s))
            .min()
            .unwrap_or_else(Rational::zero);
        let mut out = LinearForm::constant_form(self.constant + min);
        for s in 0..strategies {
            out.add_term(s, self.coefficient(s) - min);
        }
        out
    }
}

impl fmt::Display for LinearForm {
    /// Strategy indices are printed 1-based: `3 + z1`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if !self.constant.is_zero() || self.coeffs.is_empty() {
            parts.push(self.constant.to_string());
        }
        for (&s, c) in &self.coeffs {
            if *c == Rational::from_integer(1) {
                parts.push(format!("z{}", s + 1));
            } else {
                parts.push(format!("{c}*z{}", s + 1));
            }
        }
        f.write_str(&parts.join(" + "))
    }
}

/// `P_{Q_j|M}(q|m)` for one server as linear forms in `z`, plus answer lengths.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConditionalQueryTable {
    server: usize,
    files: usize,
    strategies: usize,
    queries: Vec<QueryMatrix>,
    lengths: Vec<usize>,
    /// `cond[q][m - 1]`.
    cond: Vec<Vec<LinearForm>>,
    index: HashMap<QueryMatrix, usize>,
}

/// Tabulates the time-shared query distribution seen by server `j`.
///
/// Every `(m, s, t)` contributes weight `z_s / N` to the query it produces at
/// server `j`. Queries are listed in lexicographic order of their entries.
pub fn build_query_table(scheme: &SchemeInstance, j: usize) -> Result<ConditionalQueryTable> {
    let servers = scheme.servers();
    if j == 0 || j > servers {
        return Err(Error::OutOfRange {
            what: "server index",
            value: j,
            lo: 1,
            hi: servers,
        });
    }
    let strategies = scheme.alphabet().len();
    let files = scheme.files();
    let work = strategies as u128 * servers as u128 * files as u128;
    if work > MAX_TABLE_WORK {
        return Err(Error::TooLarge {
            what: "query table",
            needed: work,
            limit: MAX_TABLE_WORK,
        });
    }

    let mut index: HashMap<QueryMatrix, usize> = HashMap::new();
    let mut counts: Vec<Vec<BTreeMap<usize, i64>>> = Vec::new();
    for m in 1..=files {
        for (si, s) in scheme.alphabet().members().iter().enumerate() {
            for t in 1..=servers {
                let q = scheme.raw_time_shared_query(m, s, t, j);
                let next = index.len();
                let qi = *index.entry(q).or_insert(next);
                if qi == counts.len() {
                    counts.push(vec![BTreeMap::new(); files]);
                }
                *counts[qi][m - 1].entry(si).or_insert(0) += 1;
            }
        }
    }

    let mut order: Vec<(QueryMatrix, usize)> = index.into_iter().collect();
    order.sort();
    let params = scheme.params();
    let denom = servers as i64;
    let mut queries = Vec::with_capacity(order.len());
    let mut lengths = Vec::with_capacity(order.len());
    let mut cond = Vec::with_capacity(order.len());
    let mut index = HashMap::with_capacity(order.len());
    for (pos, (q, old)) in order.into_iter().enumerate() {
        lengths.push(answer_length(&q, &params));
        cond.push(
            counts[old]
                .iter()
                .map(|per_s| {
                    LinearForm::from_terms(
                        Rational::zero(),
                        per_s.iter().map(|(&s, &c)| (s, Rational::new(c, denom))),
                    )
                })
                .collect(),
        );
        index.insert(q.clone(), pos);
        queries.push(q);
    }
    Ok(ConditionalQueryTable {
        server: j,
        files,
        strategies,
        queries,
        lengths,
        cond,
        index,
    })
}

impl ConditionalQueryTable {
    pub fn server(&self) -> usize {
        self.server
    }

    pub fn files(&self) -> usize {
        self.files
    }

    pub fn strategies(&self) -> usize {
        self.strategies
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    pub fn queries(&self) -> &[QueryMatrix] {
        &self.queries
    }

    pub fn query_index(&self, q: &QueryMatrix) -> Option<usize> {
        self.index.get(q).copied()
    }

    pub fn length(&self, qi: usize) -> usize {
        self.lengths[qi]
    }

    /// `P(q | m)` with `m` 1-based.
    pub fn conditional(&self, qi: usize, m: usize) -> &LinearForm {
        &self.cond[qi][m - 1]
    }

    /// `P_{Q_j}(q)` under a uniform requested-file prior.
    pub fn marginal(&self, qi: usize) -> LinearForm {
        let mut f = LinearForm::new();
        for form in &self.cond[qi] {
            f.add_scaled(form, Rational::new(1, self.files as i64));
        }
        f
    }

    /// True iff, for every `m`, the conditional probabilities sum to one
    /// identically in `z` (each strategy's coefficients sum to one).
    pub fn is_normalized(&self) -> bool {
        (1..=self.files).all(|m| {
            let mut total = LinearForm::new();
            for qi in 0..self.len() {
                total.add_scaled(self.conditional(qi, m), Rational::from_integer(1));
            }
            total.constant().is_zero()
                && (0..self.strategies).all(|s| total.coefficient(s) == Rational::from_integer(1))
        })
    }

    /// Same queries, lengths and conditional forms (server index ignored).
    pub fn same_distribution(&self, other: &ConditionalQueryTable) -> bool {
        self.queries == other.queries && self.lengths == other.lengths && self.cond == other.cond
    }

    /// `sum_q max_m P(q|m)` at `z`.
    pub fn sum_of_maxima(&self, z: &[f64]) -> f64 {
        self.cond
            .iter()
            .map(|row| row.iter().map(|f| f.eval(z)).fold(0.0, f64::max))
            .sum()
    }

    pub fn sum_of_maxima_exact(&self, z: &[Rational]) -> Rational {
        self.cond
            .iter()
            .map(|row| {
                row.iter()
                    .map(|f| f.eval_exact(z))
                    .max()
                    .unwrap_or_else(Rational::zero)
            })
            .sum()
    }

    /// CSV audit dump: one row per `(query, m)`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "server,query,m,coefficients,length")?;
        for (qi, q) in self.queries.iter().enumerate() {
            for m in 1..=self.files {
                let coeffs: Vec<String> = self
                    .conditional(qi, m)
                    .terms()
                    .map(|(s, c)| format!("z{}={}", s + 1, c))
                    .collect();
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    self.server,
                    q,
                    m,
                    coeffs.join(";"),
                    self.lengths[qi]
                )?;
            }
        }
        Ok(())
    }
}

/// Maximal leakage in bits and normalized by `log2 M`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Leakage {
    pub bits: f64,
    pub normalized: f64,
}

impl Leakage {
    pub fn from_sum_of_maxima(sum: f64, files: usize) -> Self {
        let bits = sum.log2().max(0.0);
        let normalized = if files > 1 { bits / (files as f64).log2() } else { 0.0 };
        Self { bits, normalized }
    }
}

pub fn validate_pmf(z: &[f64], strategies: usize) -> Result<()> {
    if z.len() != strategies {
        return Err(Error::InvalidPmf(format!(
            "{} entries for {strategies} strategies",
            z.len()
        )));
    }
    if let Some(bad) = z.iter().find(|v| !v.is_finite() || **v < -1e-12) {
        return Err(Error::InvalidPmf(format!("entry {bad} is not a probability")));
    }
    let total: f64 = z.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidPmf(format!("entries sum to {total}")));
    }
    Ok(())
}

/// `log2 sum_q max_m P(q|m)` at `z`.
pub fn maxl(table: &ConditionalQueryTable, z: &[f64]) -> Result<Leakage> {
    validate_pmf(z, table.strategies)?;
    Ok(Leakage::from_sum_of_maxima(table.sum_of_maxima(z), table.files))
}

/// Exact `D(z) = sum_j sum_q l_j(q) P_{Q_j}(q)` over a full set of server tables.
pub fn download_cost_form(tables: &[ConditionalQueryTable]) -> LinearForm {
    let mut d = LinearForm::new();
    for table in tables {
        for qi in 0..table.len() {
            let len = table.length(qi) as i64;
            if len > 0 {
                d.add_scaled(&table.marginal(qi), Rational::from_integer(len));
            }
        }
    }
    d
}

/// `lambda * K / D`.
pub fn wpir_rate(lambda: usize, dimension: usize, cost: f64) -> Result<f64> {
    if !(cost > 0.0) {
        return Err(Error::NonPositiveCost(cost));
    }
    Ok((lambda * dimension) as f64 / cost)
}

/// Every server's table plus the download-cost form of one scheme.
#[derive(Clone, Debug)]
pub struct LeakageModel {
    files: usize,
    lambda_k: usize,
    tables: Vec<ConditionalQueryTable>,
    cost: LinearForm,
}

impl LeakageModel {
    pub fn build(scheme: &SchemeInstance) -> Result<Self> {
        let tables = (1..=scheme.servers())
            .into_par_iter()
            .map(|j| build_query_table(scheme, j))
            .collect::<Result<Vec<_>>>()?;
        let cost = download_cost_form(&tables);
        Ok(Self {
            files: scheme.files(),
            lambda_k: scheme.params().lambda * scheme.dimension(),
            tables,
            cost,
        })
    }

    pub fn files(&self) -> usize {
        self.files
    }

    pub fn strategies(&self) -> usize {
        self.tables[0].strategies
    }

    /// Information content of one file, `lambda * K` symbols.
    pub fn file_symbols(&self) -> usize {
        self.lambda_k
    }

    pub fn tables(&self) -> &[ConditionalQueryTable] {
        &self.tables
    }

    pub fn table(&self, j: usize) -> &ConditionalQueryTable {
        &self.tables[j - 1]
    }

    pub fn cost_form(&self) -> &LinearForm {
        &self.cost
    }

    pub fn download_cost(&self, z: &[f64]) -> Result<f64> {
        validate_pmf(z, self.strategies())?;
        Ok(self.cost.eval(z))
    }

    pub fn rate(&self, z: &[f64]) -> Result<f64> {
        wpir_rate(self.lambda_k, 1, self.download_cost(z)?)
    }

    pub fn per_server_maxl(&self, z: &[f64]) -> Result<Vec<Leakage>> {
        self.tables.iter().map(|t| maxl(t, z)).collect()
    }

    /// `max_j ML(M; Q_j)`.
    pub fn overall_maxl(&self, z: &[f64]) -> Result<Leakage> {
        let per = self.per_server_maxl(z)?;
        Ok(per
            .into_iter()
            .fold(Leakage { bits: 0.0, normalized: 0.0 }, |a, b| {
                if b.bits > a.bits {
                    b
                } else {
                    a
                }
            }))
    }

    /// First server whose distribution differs from server 1, if any.
    pub fn first_unequal_server(&self) -> Option<usize> {
        self.tables
            .iter()
            .position(|t| !t.same_distribution(&self.tables[0]))
            .map(|p| p + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheme::SchemeKind;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn qm(rows: &[&[u8]]) -> QueryMatrix {
        QueryMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn linear_form_display_and_eval() {
        let f = LinearForm::from_terms(r(3, 1), [(0, r(1, 1)), (2, r(1, 3))]);
        assert_eq!(f.to_string(), "3 + z1 + 1/3*z3");
        assert!((f.eval(&[0.5, 0.0, 0.5]) - (3.5 + 1.0 / 6.0)).abs() < 1e-15);
        assert_eq!(f.eval_exact(&[r(1, 2), r(0, 1), r(1, 2)]), r(11, 3) + r(0, 1));
    }

    #[test]
    fn simplex_representative() {
        let f = LinearForm::from_terms(r(0, 1), [(0, r(4, 1)), (1, r(3, 1)), (2, r(3, 1))]);
        assert_eq!(f.on_simplex(3), LinearForm::from_terms(r(3, 1), [(0, r(1, 1))]));
    }

    #[test]
    fn ztsl_first_column() {
        let sch = SchemeInstance::new(SchemeKind::Ztsl, 2, 3, 2).unwrap();
        let t = build_query_table(&sch, 2).unwrap();
        assert_eq!(t.len(), 9);
        let qi = t.query_index(&qm(&[&[0, 0], &[1, 1]])).unwrap();
        let z1 = LinearForm::from_terms(r(0, 1), [(0, r(1, 3))]);
        assert_eq!(t.conditional(qi, 1), &z1);
        assert_eq!(t.conditional(qi, 2), &z1);
        assert_eq!(t.length(qi), 1);
        assert!(t.is_normalized());
    }

    #[test]
    fn olr_reference_column() {
        let sch = SchemeInstance::new(SchemeKind::Olr, 2, 3, 2).unwrap();
        let t = build_query_table(&sch, 1).unwrap();
        assert_eq!(t.len(), 18);
        let qi = t.query_index(&qm(&[&[2, 1], &[1, 2]])).unwrap();
        assert_eq!(t.conditional(qi, 1), &LinearForm::from_terms(r(0, 1), [(3, r(1, 3))]));
        assert_eq!(t.conditional(qi, 2), &LinearForm::from_terms(r(0, 1), [(5, r(1, 3))]));
        assert_eq!(t.length(qi), 0);
    }

    #[test]
    fn ztsl_leakage_values() {
        let sch = SchemeInstance::new(SchemeKind::Ztsl, 2, 3, 2).unwrap();
        let t = build_query_table(&sch, 1).unwrap();
        let u = maxl(&t, &[1.0 / 3.0; 3]).unwrap();
        assert!(u.bits.abs() < 1e-12);
        let point = maxl(&t, &[1.0, 0.0, 0.0]).unwrap();
        assert!((point.bits - (5.0f64 / 3.0).log2()).abs() < 1e-12);
        assert!((point.normalized - point.bits).abs() < 1e-15);
        assert!(maxl(&t, &[0.5, 0.5]).is_err());
        assert!(maxl(&t, &[0.5, 0.6, -0.1]).is_err());
        assert!(maxl(&t, &[0.5, 0.4, 0.0]).is_err());
    }

    #[test]
    fn single_file_never_leaks() {
        let sch = SchemeInstance::new(SchemeKind::Zyqt, 1, 3, 2).unwrap();
        let t = build_query_table(&sch, 1).unwrap();
        let mut z = vec![0.0; t.strategies()];
        z[0] = 1.0;
        assert_eq!(maxl(&t, &z).unwrap().bits, 0.0);
    }

    #[test]
    fn rate_formula() {
        assert_eq!(wpir_rate(1, 2, 2.0).unwrap(), 1.0);
        assert!((wpir_rate(1, 2, 10.0 / 3.0).unwrap() - 0.6).abs() < 1e-15);
        assert_eq!(wpir_rate(2, 3, 6.0).unwrap(), 1.0);
        assert!(wpir_rate(1, 2, 0.0).is_err());
        assert!(wpir_rate(1, 2, -1.0).is_err());
    }

    #[test]
    fn csv_dump_shape() {
        let sch = SchemeInstance::new(SchemeKind::Ztsl, 2, 3, 2).unwrap();
        let t = build_query_table(&sch, 1).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 18);
        assert!(text.contains("1,0 0|1 1,1,z1=1/3,1"));
    }
}
