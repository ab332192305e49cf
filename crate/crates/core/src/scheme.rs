//! Strategy alphabets, query encoders, and the answer function.
//!
//! Three scheme families share one answer function and differ only in how the
//! user's private strategy is turned into per-server query matrices:
//!
//! * ZYQT: one distinct-entry selector per file; the desired file's selector
//!   is cyclically shifted by `j - 1` at server `j`.
//! * ZTSL: a single length-M vector with zero sum mod n; rows are the vector
//!   plus the staircase offsets `0..k-1`.
//! * OLR: M-1 selectors; the desired file's column is implied so that all
//!   columns sum to `(j - 1)` mod n.
//!
//! Every query is a `k x M` matrix of row indices into the stored blocks.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Fe;
use crate::storage::{effective_params, EffectiveParams, ServerColumn};

/// Alphabets above this size are refused.
pub const MAX_ALPHABET: u128 = 5_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeKind {
    Zyqt,
    Ztsl,
    Olr,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 3] = [SchemeKind::Zyqt, SchemeKind::Ztsl, SchemeKind::Olr];

    /// Wire identifier used in query frames.
    pub fn code(self) -> u8 {
        match self {
            SchemeKind::Zyqt => 1,
            SchemeKind::Ztsl => 2,
            SchemeKind::Olr => 3,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            1 => Ok(SchemeKind::Zyqt),
            2 => Ok(SchemeKind::Ztsl),
            3 => Ok(SchemeKind::Olr),
            other => Err(Error::Protocol(format!("unknown scheme code {other}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Zyqt => "zyqt",
            SchemeKind::Ztsl => "ztsl",
            SchemeKind::Olr => "olr",
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "zyqt" => Ok(SchemeKind::Zyqt),
            "ztsl" => Ok(SchemeKind::Ztsl),
            "olr" => Ok(SchemeKind::Olr),
            other => Err(Error::InvalidParams(format!("unknown scheme {other:?}"))),
        }
    }
}

/// A column of `k` pairwise-distinct values in `[0, n-1]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PermSelector(pub Vec<u8>);

impl PermSelector {
    pub fn entries(&self) -> &[u8] {
        &self.0
    }
}

fn all_distinct(v: &[u8]) -> bool {
    v.iter().enumerate().all(|(i, a)| !v[..i].contains(a))
}

/// All ordered selections of `k` distinct values from `[0, n-1]`, lexicographic.
pub fn enumerate_pnk(n: usize, k: usize) -> Result<Vec<PermSelector>> {
    if k == 0 || k > n || n > u8::MAX as usize {
        return Err(Error::InvalidParams(format!(
            "need 1 <= k <= n <= 255, got n={n} k={k}"
        )));
    }
    Ok((0..k)
        .map(|_| 0..n as u8)
        .multi_cartesian_product()
        .filter(|v| all_distinct(v))
        .map(PermSelector)
        .collect())
}

/// One realization of the user's strategy, flattened.
///
/// Layout: ZYQT is a column-major `k x M` matrix, OLR a column-major
/// `k x (M-1)` matrix, ZTSL a length-M vector.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Strategy(pub Vec<u8>);

impl Strategy {
    pub fn entries(&self) -> &[u8] {
        &self.0
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.0.iter().join(","))
    }
}

#[derive(Clone, Debug)]
pub struct StrategyAlphabet {
    kind: SchemeKind,
    n: usize,
    k: usize,
    files: usize,
    members: Vec<Strategy>,
    index: HashMap<Strategy, usize>,
}

fn falling_factorial(n: usize, k: usize) -> u128 {
    (n - k + 1..=n).map(|v| v as u128).product()
}

/// Enumerates the strategy alphabet of a scheme in lexicographic order.
pub fn enumerate_strategies(kind: SchemeKind, n: usize, k: usize, files: usize) -> Result<StrategyAlphabet> {
    if files == 0 {
        return Err(Error::InvalidParams("need at least one file".into()));
    }
    let selectors = enumerate_pnk(n, k)?;
    let columns = match kind {
        SchemeKind::Zyqt => files,
        SchemeKind::Olr => files - 1,
        SchemeKind::Ztsl => 0,
    };
    let bound = match kind {
        SchemeKind::Ztsl => (n as u128).saturating_pow(files as u32 - 1),
        _ => falling_factorial(n, k).saturating_pow(columns as u32),
    };
    if bound > MAX_ALPHABET {
        return Err(Error::TooLarge {
            what: "strategy alphabet",
            needed: bound,
            limit: MAX_ALPHABET,
        });
    }

    let members: Vec<Strategy> = match kind {
        SchemeKind::Ztsl => (0..files)
            .map(|_| 0..n as u8)
            .multi_cartesian_product()
            .filter(|v| v.iter().map(|&x| x as usize).sum::<usize>() % n == 0)
            .map(Strategy)
            .collect(),
        SchemeKind::Zyqt | SchemeKind::Olr => {
            let tuples: Box<dyn Iterator<Item = Vec<&PermSelector>>> = if columns == 0 {
                Box::new(std::iter::once(Vec::new()))
            } else {
                Box::new((0..columns).map(|_| selectors.iter()).multi_cartesian_product())
            };
            tuples
                .filter(|cols| kind == SchemeKind::Zyqt || all_distinct(&implied_column(cols, n, k)))
                .map(|cols| Strategy(cols.iter().flat_map(|c| c.0.iter().copied()).collect()))
                .collect()
        }
    };
    if members.is_empty() {
        return Err(Error::InvalidParams(format!(
            "{kind} alphabet is empty for n={n} k={k} M={files}"
        )));
    }
    let index = members
        .iter()
        .enumerate()
        .map(|(i, s)| (s.clone(), i))
        .collect();
    Ok(StrategyAlphabet {
        kind,
        n,
        k,
        files,
        members,
        index,
    })
}

/// `(-sum of columns) mod n`, entrywise.
fn implied_column(cols: &[&PermSelector], n: usize, k: usize) -> Vec<u8> {
    (0..k)
        .map(|i| {
            let sum: usize = cols.iter().map(|c| c.0[i] as usize).sum();
            ((n - sum % n) % n) as u8
        })
        .collect()
}

impl StrategyAlphabet {
    pub fn kind(&self) -> SchemeKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[Strategy] {
        &self.members
    }

    pub fn get(&self, idx: usize) -> Option<&Strategy> {
        self.members.get(idx)
    }

    pub fn index_of(&self, s: &Strategy) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.n, self.k, self.files)
    }
}

/// A `k x M` matrix of row indices in `[0, n-1]`, stored row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QueryMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<u8>,
}

impl QueryMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<u8>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}x{cols} query",
                entries.len()
            )));
        }
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    /// Builds from nested rows, e.g. `[[2, 0], [0, 1]]`.
    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged query rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Entry at 0-based row `i` and 0-based column `c`.
    pub fn get(&self, i: usize, c: usize) -> u8 {
        self.entries[i * self.cols + c]
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<u8> {
        (0..self.rows).map(|i| self.get(i, c)).collect()
    }

    pub fn entries(&self) -> &[u8] {
        &self.entries
    }

    /// Applies a row permutation and a column permutation:
    /// row `i` moves to `row_perm[i]`, column `c` moves to `col_perm[c]`.
    pub fn permuted(&self, row_perm: &[usize], col_perm: &[usize]) -> QueryMatrix {
        let mut out = vec![0u8; self.entries.len()];
        for i in 0..self.rows {
            for c in 0..self.cols {
                out[row_perm[i] * self.cols + col_perm[c]] = self.get(i, c);
            }
        }
        QueryMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: out,
        }
    }
}

impl fmt::Display for QueryMatrix {
    /// Rows separated by `|`, entries by spaces: `2 0|0 1`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = (0..self.rows).map(|i| self.row(i).iter().join(" ")).collect();
        f.write_str(&rows.join("|"))
    }
}

impl FromStr for QueryMatrix {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let rows = s
            .split('|')
            .map(|r| {
                r.split_whitespace()
                    .map(|t| t.parse::<u8>().map_err(|_| Error::Parse(format!("bad query entry {t:?}"))))
                    .collect::<Result<Vec<u8>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(&rows)
    }
}

/// Number of sub-responses that touch at least one data row.
pub fn answer_length(q: &QueryMatrix, params: &EffectiveParams) -> usize {
    (0..q.rows())
        .filter(|&i| q.row(i).iter().any(|&r| params.is_data_row(r as usize)))
        .count()
}

/// Sub-responses of server `j` for query `q`.
///
/// Entry `i` is `Some(sum_m X^(m)_{q[i][m], j})` when row `i` references a
/// data row, and `None` when it references only dummy rows and is therefore
/// not transmitted.
pub fn answer(q: &QueryMatrix, column: &ServerColumn, params: &EffectiveParams) -> Result<Vec<Option<Fe>>> {
    if q.rows() != params.k || q.cols() != column.files() {
        return Err(Error::Dimension(format!(
            "query is {}x{}, server holds k={} rows for {} files",
            q.rows(),
            q.cols(),
            params.k,
            column.files()
        )));
    }
    if let Some(&bad) = q.entries().iter().find(|&&v| v as usize >= params.n) {
        return Err(Error::OutOfRange {
            what: "query entry",
            value: bad as usize,
            lo: 0,
            hi: params.n - 1,
        });
    }
    Ok((0..q.rows())
        .map(|i| {
            let row = q.row(i);
            if !row.iter().any(|&r| params.is_data_row(r as usize)) {
                return None;
            }
            let field = column.symbols()[0].field();
            Some(
                row.iter()
                    .enumerate()
                    .fold(field.zero(), |acc, (c, &r)| acc + column.symbol(c + 1, r as usize)),
            )
        })
        .collect())
}

/// An `(M, N, K)` scheme: kind, code parameters, and strategy alphabet.
#[derive(Clone, Debug)]
pub struct SchemeInstance {
    kind: SchemeKind,
    files: usize,
    servers: usize,
    dimension: usize,
    params: EffectiveParams,
    alphabet: StrategyAlphabet,
}

impl SchemeInstance {
    pub fn new(kind: SchemeKind, files: usize, servers: usize, dimension: usize) -> Result<Self> {
        let params = effective_params(servers, dimension)?;
        if servers > u8::MAX as usize {
            return Err(Error::InvalidParams("at most 255 servers".into()));
        }
        let alphabet = enumerate_strategies(kind, params.n, params.k, files)?;
        Ok(Self {
            kind,
            files,
            servers,
            dimension,
            params,
            alphabet,
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

    pub fn params(&self) -> EffectiveParams {
        self.params
    }

    pub fn alphabet(&self) -> &StrategyAlphabet {
        &self.alphabet
    }

    fn check_file(&self, m: usize) -> Result<()> {
        if m == 0 || m > self.files {
            return Err(Error::OutOfRange {
                what: "file index",
                value: m,
                lo: 1,
                hi: self.files,
            });
        }
        Ok(())
    }

    fn check_server(&self, j: usize) -> Result<()> {
        if j == 0 || j > self.servers {
            return Err(Error::OutOfRange {
                what: "server index",
                value: j,
                lo: 1,
                hi: self.servers,
            });
        }
        Ok(())
    }

    fn check_member(&self, kind: SchemeKind, s: &Strategy) -> Result<()> {
        if kind != self.kind || self.alphabet.index_of(s).is_none() {
            return Err(Error::UnknownStrategy(kind.to_string()));
        }
        Ok(())
    }

    pub fn query_zyqt(&self, m: usize, s: &Strategy, j: usize) -> Result<QueryMatrix> {
        self.check_file(m)?;
        self.check_server(j)?;
        self.check_member(SchemeKind::Zyqt, s)?;
        Ok(self.raw_query(m, s, j))
    }

    pub fn query_ztsl(&self, m: usize, s: &Strategy, j: usize) -> Result<QueryMatrix> {
        self.check_file(m)?;
        self.check_server(j)?;
        self.check_member(SchemeKind::Ztsl, s)?;
        Ok(self.raw_query(m, s, j))
    }

    pub fn query_olr(&self, m: usize, s: &Strategy, j: usize) -> Result<QueryMatrix> {
        self.check_file(m)?;
        self.check_server(j)?;
        self.check_member(SchemeKind::Olr, s)?;
        Ok(self.raw_query(m, s, j))
    }

    /// Base (not time-shared) query for file `m` at server `j`.
    pub fn query(&self, m: usize, s: &Strategy, j: usize) -> Result<QueryMatrix> {
        self.check_file(m)?;
        self.check_server(j)?;
        self.check_member(self.kind, s)?;
        Ok(self.raw_query(m, s, j))
    }

    /// Base query without validation; `m`, `j` are 1-based.
    pub(crate) fn raw_query(&self, m: usize, s: &Strategy, j: usize) -> QueryMatrix {
        let EffectiveParams { n, k, .. } = self.params;
        let cols = self.files;
        let shift = (j - 1) % n;
        let s = &s.0;
        let mut e = vec![0u8; k * cols];
        match self.kind {
            SchemeKind::Zyqt => {
                for c in 0..cols {
                    for i in 0..k {
                        let mut v = s[c * k + i] as usize;
                        if c == m - 1 {
                            v = (v + shift) % n;
                        }
                        e[i * cols + c] = v as u8;
                    }
                }
            }
            SchemeKind::Ztsl => {
                for i in 0..k {
                    for c in 0..cols {
                        let mut v = s[c] as usize + i;
                        if c == m - 1 {
                            v += shift;
                        }
                        e[i * cols + c] = (v % n) as u8;
                    }
                }
            }
            SchemeKind::Olr => {
                for i in 0..k {
                    let sum: usize = (0..cols - 1).map(|c| s[c * k + i] as usize).sum();
                    for c in 0..cols {
                        let v = match c.cmp(&(m - 1)) {
                            std::cmp::Ordering::Less => s[c * k + i] as usize,
                            std::cmp::Ordering::Equal => (shift + n - sum % n) % n,
                            std::cmp::Ordering::Greater => s[(c - 1) * k + i] as usize,
                        };
                        e[i * cols + c] = v as u8;
                    }
                }
            }
        }
        QueryMatrix {
            rows: k,
            cols,
            entries: e,
        }
    }

    /// `sigma^(t-1)(j)`: the base-scheme server whose encoder serves server `j` under shift `t`.
    pub fn shifted_server(&self, t: usize, j: usize) -> usize {
        (j - 1 + t - 1) % self.servers + 1
    }

    /// Time-shared query: server `j` receives the base query of server `sigma^(t-1)(j)`.
    pub fn time_shared_query(&self, m: usize, s: &Strategy, t: usize, j: usize) -> Result<QueryMatrix> {
        if t == 0 || t > self.servers {
            return Err(Error::OutOfRange {
                what: "time-sharing shift",
                value: t,
                lo: 1,
                hi: self.servers,
            });
        }
        self.check_server(j)?;
        self.query(m, s, self.shifted_server(t, j))
    }

    pub(crate) fn raw_time_shared_query(&self, m: usize, s: &Strategy, t: usize, j: usize) -> QueryMatrix {
        self.raw_query(m, s, self.shifted_server(t, j))
    }

    /// Structural retrievability precondition: every data row of file `m`
    /// referenced by the queries is referenced at no fewer than K servers.
    pub fn covers_desired_rows(&self, m: usize, s: &Strategy, t: usize) -> Result<bool> {
        let mut servers_per_row = vec![std::collections::BTreeSet::new(); self.params.lambda];
        for j in 1..=self.servers {
            let q = self.time_shared_query(m, s, t, j)?;
            for v in q.column(m - 1) {
                if self.params.is_data_row(v as usize) {
                    servers_per_row[v as usize].insert(j);
                }
            }
        }
        Ok(servers_per_row
            .iter()
            .all(|set| set.is_empty() || set.len() >= self.dimension))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::PrimeField;
    use crate::mds::make_rs_code;
    use crate::storage::{encode_storage, FileSet};

    fn q(rows: &[&[u8]]) -> QueryMatrix {
        QueryMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn pnk_small_cases() {
        let p = enumerate_pnk(3, 2).unwrap();
        let got: Vec<Vec<u8>> = p.into_iter().map(|s| s.0).collect();
        assert_eq!(
            got,
            vec![vec![0, 1], vec![0, 2], vec![1, 0], vec![1, 2], vec![2, 0], vec![2, 1]]
        );
        assert_eq!(enumerate_pnk(1, 1).unwrap(), vec![PermSelector(vec![0])]);
        assert_eq!(enumerate_pnk(5, 3).unwrap().len(), 60);
        assert!(enumerate_pnk(2, 3).is_err());
    }

    #[test]
    fn alphabet_sizes() {
        let ztsl = enumerate_strategies(SchemeKind::Ztsl, 3, 2, 2).unwrap();
        assert_eq!(
            ztsl.members(),
            &[Strategy(vec![0, 0]), Strategy(vec![1, 2]), Strategy(vec![2, 1])]
        );
        assert_eq!(enumerate_strategies(SchemeKind::Zyqt, 3, 2, 2).unwrap().len(), 36);
        assert_eq!(enumerate_strategies(SchemeKind::Olr, 3, 2, 2).unwrap().len(), 6);
        assert_eq!(enumerate_strategies(SchemeKind::Ztsl, 5, 3, 3).unwrap().len(), 25);
    }

    #[test]
    fn scheme_names_round_trip() {
        for kind in SchemeKind::ALL {
            assert_eq!(kind.name().parse::<SchemeKind>().unwrap(), kind);
            assert_eq!(SchemeKind::from_code(kind.code()).unwrap(), kind);
        }
        assert!("pir".parse::<SchemeKind>().is_err());
        assert!(SchemeKind::from_code(9).is_err());
    }

    #[test]
    fn zyqt_queries() {
        let sch = SchemeInstance::new(SchemeKind::Zyqt, 2, 3, 2).unwrap();
        let s = Strategy(vec![0, 1, 0, 2]);
        assert_eq!(sch.query_zyqt(1, &s, 1).unwrap(), q(&[&[0, 0], &[1, 2]]));
        assert_eq!(sch.query_zyqt(1, &s, 2).unwrap(), q(&[&[1, 0], &[2, 2]]));
        assert!(sch.query_zyqt(3, &s, 1).is_err());
        assert!(sch.query_zyqt(1, &s, 4).is_err());
        assert!(sch.query_ztsl(1, &s, 1).is_err());
    }

    #[test]
    fn zyqt_desired_column_cycles() {
        let sch = SchemeInstance::new(SchemeKind::Zyqt, 2, 3, 2).unwrap();
        for s in sch.alphabet().members() {
            for m in 1..=2 {
                let cols: std::collections::BTreeSet<Vec<u8>> = (1..=3)
                    .map(|j| sch.query(m, s, j).unwrap().column(m - 1))
                    .collect();
                assert_eq!(cols.len(), 3);
            }
        }
    }

    #[test]
    fn ztsl_queries() {
        let sch = SchemeInstance::new(SchemeKind::Ztsl, 2, 3, 2).unwrap();
        let s = Strategy(vec![0, 0]);
        assert_eq!(sch.query_ztsl(1, &s, 1).unwrap(), q(&[&[0, 0], &[1, 1]]));
        assert_eq!(sch.query_ztsl(2, &s, 3).unwrap(), q(&[&[0, 2], &[1, 0]]));
    }

    #[test]
    fn olr_queries() {
        let sch = SchemeInstance::new(SchemeKind::Olr, 2, 3, 2).unwrap();
        assert_eq!(
            sch.query_olr(1, &Strategy(vec![0, 1]), 1).unwrap(),
            q(&[&[0, 0], &[2, 1]])
        );
        assert_eq!(
            sch.query_olr(2, &Strategy(vec![0, 2]), 1).unwrap(),
            q(&[&[0, 0], &[2, 1]])
        );
    }

    #[test]
    fn answer_lengths() {
        let p = effective_params(3, 2).unwrap();
        assert_eq!(answer_length(&q(&[&[1, 1], &[2, 2]]), &p), 0);
        assert_eq!(answer_length(&q(&[&[2, 0], &[0, 1]]), &p), 2);
        assert_eq!(answer_length(&q(&[&[2, 1], &[1, 2]]), &p), 0);
    }

    #[test]
    fn answer_sub_responses() {
        let f = PrimeField::new(3).unwrap();
        let code = make_rs_code(3, 2, f).unwrap();
        let p = effective_params(3, 2).unwrap();
        let files = FileSet::random(f, 2, 1, 2, 99).unwrap();
        let st = encode_storage(&files, &code).unwrap();
        let query = q(&[&[2, 0], &[0, 1]]);
        for col in st.columns() {
            let a = answer(&query, col, &p).unwrap();
            assert_eq!(a, vec![Some(col.symbol(2, 0)), Some(col.symbol(1, 0))]);
            assert_eq!(a.iter().flatten().count(), answer_length(&query, &p));
        }
        let dummy = q(&[&[1, 2], &[2, 1]]);
        assert_eq!(answer(&dummy, &st.columns()[0], &p).unwrap(), vec![None, None]);
        assert!(answer(&q(&[&[0, 3], &[1, 1]]), &st.columns()[0], &p).is_err());
        assert!(answer(&q(&[&[0], &[1]]), &st.columns()[0], &p).is_err());
    }

    #[test]
    fn time_sharing_shifts() {
        let sch = SchemeInstance::new(SchemeKind::Ztsl, 2, 3, 2).unwrap();
        let s = Strategy(vec![1, 2]);
        for j in 1..=3 {
            assert_eq!(
                sch.time_shared_query(1, &s, 1, j).unwrap(),
                sch.query(1, &s, j).unwrap()
            );
        }
        assert_eq!(
            sch.time_shared_query(2, &s, 2, 3).unwrap(),
            sch.query(2, &s, 1).unwrap()
        );
        assert!(sch.time_shared_query(1, &s, 0, 1).is_err());
        assert!(sch.time_shared_query(1, &s, 4, 1).is_err());
    }

    #[test]
    fn query_text_form_round_trips() {
        let query = q(&[&[2, 0], &[0, 1]]);
        assert_eq!(query.to_string(), "2 0|0 1");
        assert_eq!("2 0|0 1".parse::<QueryMatrix>().unwrap(), query);
        assert!("2 0|1".parse::<QueryMatrix>().is_err());
    }
}
