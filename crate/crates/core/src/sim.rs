//! End-to-end retrieval: query generation, server answers over a transport,
//! generic linear decoding and retrievability checks.

use std::collections::BTreeMap;
use std::io::Write;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{solve_linear, Fe, FieldMatrix, PrimeField, SolveOutcome};
use crate::mds::{make_rs_code, MdsCode};
use crate::protocol::{AnswerFrame, InProcess, QueryFrame, Server, Transport};
use crate::scheme::{answer_length, QueryMatrix, SchemeInstance};
use crate::storage::{encode_storage, EffectiveParams, EncodedStorage, FileSet};

/// Upper bound on `|S| * N * M` for exhaustive verification.
pub const MAX_EXHAUSTIVE_RUNS: u128 = 2_000_000;

/// A scheme together with the files it serves and their encoded storage.
#[derive(Clone, Debug)]
pub struct Deployment {
    scheme: SchemeInstance,
    files: FileSet,
    storage: EncodedStorage,
}

impl Deployment {
    pub fn new(scheme: SchemeInstance, files: FileSet, code: &MdsCode) -> Result<Self> {
        if code.length() != scheme.servers() || code.dimension() != scheme.dimension() {
            return Err(Error::InvalidParams(format!(
                "code is [{}, {}], scheme needs [{}, {}]",
                code.length(),
                code.dimension(),
                scheme.servers(),
                scheme.dimension()
            )));
        }
        if files.count() != scheme.files() {
            return Err(Error::InvalidParams(format!(
                "{} files supplied, scheme serves {}",
                files.count(),
                scheme.files()
            )));
        }
        let storage = encode_storage(&files, code)?;
        Ok(Self {
            scheme,
            files,
            storage,
        })
    }

    /// Uniformly random files over `field` (default: smallest prime `>= N`)
    /// stored with a systematic Reed-Solomon code.
    pub fn random(scheme: SchemeInstance, field: Option<PrimeField>, seed: u64) -> Result<Self> {
        let field = field.unwrap_or_else(|| PrimeField::smallest_at_least(scheme.servers()));
        let code = make_rs_code(scheme.servers(), scheme.dimension(), field)?;
        let p = scheme.params();
        let files = FileSet::random(field, scheme.files(), p.lambda, scheme.dimension(), seed)?;
        Self::new(scheme, files, &code)
    }

    pub fn scheme(&self) -> &SchemeInstance {
        &self.scheme
    }

    pub fn files(&self) -> &FileSet {
        &self.files
    }

    pub fn storage(&self) -> &EncodedStorage {
        &self.storage
    }

    pub fn field(&self) -> PrimeField {
        self.storage.code().field()
    }

    pub fn servers(&self) -> Vec<Server> {
        Server::cluster(&self.storage, self.scheme.kind())
    }

    pub fn in_process(&self) -> InProcess {
        InProcess::new(self.servers())
    }
}

/// Record of one retrieval.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RetrievalTranscript {
    pub file: usize,
    /// 0-based index into the strategy alphabet.
    pub strategy: usize,
    pub shift: usize,
    pub queries: Vec<QueryMatrix>,
    /// Transmitted symbols per server, in server order.
    pub answers: Vec<Vec<u32>>,
    pub downloaded: usize,
    pub decoded: Option<Vec<Vec<u32>>>,
    pub success: bool,
    pub error: Option<String>,
}

/// Recovers file `m` from the sub-responses of every server.
///
/// Unknowns are all `M * lambda * K` message symbols. Each transmitted
/// sub-response of server `j` contributes the equation
/// `sum_{m'} <row q[i][m'] of W^(m'), column j of G> = value`, with dummy rows
/// contributing nothing. Undesired files may stay undetermined; every symbol
/// of file `m` must be pinned down.
pub fn decode(
    queries: &[QueryMatrix],
    answers: &[Vec<Option<Fe>>],
    code: &MdsCode,
    params: &EffectiveParams,
    m: usize,
) -> Result<FieldMatrix> {
    if queries.len() != code.length() || answers.len() != code.length() {
        return Err(Error::Dimension(format!(
            "{} queries and {} answers for {} servers",
            queries.len(),
            answers.len(),
            code.length()
        )));
    }
    let files = queries[0].cols();
    if m == 0 || m > files {
        return Err(Error::OutOfRange {
            what: "file index",
            value: m,
            lo: 1,
            hi: files,
        });
    }
    let field = code.field();
    let g = code.generator();
    let (lambda, dim) = (params.lambda, code.dimension());
    let unknowns = files * lambda * dim;
    let var = |file: usize, row: usize, c: usize| (file * lambda + row) * dim + c;

    let mut rows: Vec<Vec<Fe>> = Vec::new();
    let mut rhs = Vec::new();
    for (j, (q, a)) in queries.iter().zip(answers).enumerate() {
        if a.len() != q.rows() {
            return Err(Error::Dimension(format!(
                "server {} answered {} sub-responses for a {}-row query",
                j + 1,
                a.len(),
                q.rows()
            )));
        }
        for (i, value) in a.iter().enumerate() {
            let Some(value) = value else { continue };
            let mut eq = vec![field.zero(); unknowns];
            for (f, &r) in q.row(i).iter().enumerate() {
                if params.is_data_row(r as usize) {
                    for c in 0..dim {
                        let v = var(f, r as usize, c);
                        eq[v] = eq[v] + g.get(c, j);
                    }
                }
            }
            rows.push(eq);
            rhs.push(*value);
        }
    }
    let desired = (m - 1) * lambda * dim..m * lambda * dim;
    if rows.is_empty() {
        return Err(Error::Unrecoverable {
            undetermined: desired.len(),
        });
    }
    let flat: Vec<Fe> = rows.into_iter().flatten().collect();
    let a = FieldMatrix::from_elems(rhs.len(), unknowns, &flat)?;
    match solve_linear(&a, &rhs)? {
        SolveOutcome::Inconsistent => Err(Error::InconsistentAnswers),
        SolveOutcome::Consistent(sol) => {
            let undetermined = desired.clone().filter(|&v| !sol.determined[v]).count();
            if undetermined > 0 {
                return Err(Error::Unrecoverable { undetermined });
            }
            FieldMatrix::from_elems(lambda, dim, &sol.particular[desired])
        }
    }
}

fn matrix_values(m: &FieldMatrix) -> Vec<Vec<u32>> {
    (0..m.rows())
        .map(|r| m.row(r).iter().map(Fe::value).collect())
        .collect()
}

/// Retrieves file `m` with strategy index `s` (0-based) and shift `t` over
/// the in-process transport.
pub fn run_retrieval(dep: &Deployment, m: usize, s: usize, t: usize) -> Result<RetrievalTranscript> {
    run_retrieval_with(dep, &mut dep.in_process(), m, s, t)
}

pub fn run_retrieval_with(
    dep: &Deployment,
    transport: &mut dyn Transport,
    m: usize,
    s: usize,
    t: usize,
) -> Result<RetrievalTranscript> {
    let scheme = &dep.scheme;
    let strategy = scheme.alphabet().get(s).ok_or(Error::OutOfRange {
        what: "strategy index",
        value: s,
        lo: 0,
        hi: scheme.alphabet().len() - 1,
    })?;
    let n_servers = scheme.servers();
    let queries = (1..=n_servers)
        .map(|j| scheme.time_shared_query(m, strategy, t, j))
        .collect::<Result<Vec<_>>>()?;
    let requests = queries
        .iter()
        .enumerate()
        .map(|(j, q)| QueryFrame::new(scheme.kind(), j + 1, q.clone()).encode())
        .collect::<Result<Vec<_>>>()?;
    let responses = transport.exchange(&requests)?;

    let params = scheme.params();
    let field = dep.field();
    let mut received: Vec<Option<Vec<Fe>>> = vec![None; n_servers];
    for r in &responses {
        let frame = AnswerFrame::decode(r, field)?;
        let slot = frame
            .server
            .checked_sub(1)
            .and_then(|i| received.get_mut(i))
            .ok_or_else(|| Error::Protocol(format!("answer from unknown server {}", frame.server)))?;
        if slot.replace(frame.symbols).is_some() {
            return Err(Error::Protocol(format!("duplicate answer from server {}", frame.server)));
        }
    }

    let mut answers = Vec::with_capacity(n_servers);
    let mut positioned = Vec::with_capacity(n_servers);
    for (j, (q, got)) in queries.iter().zip(received).enumerate() {
        let got = got.ok_or_else(|| Error::Protocol(format!("no answer from server {}", j + 1)))?;
        if got.len() != answer_length(q, &params) {
            return Err(Error::Protocol(format!(
                "server {} sent {} symbols, query asks for {}",
                j + 1,
                got.len(),
                answer_length(q, &params)
            )));
        }
        // Suppressed sub-responses are exactly the rows that reference only dummies.
        let mut it = got.iter().copied();
        let full: Vec<Option<Fe>> = (0..q.rows())
            .map(|i| {
                q.row(i)
                    .iter()
                    .any(|&r| params.is_data_row(r as usize))
                    .then(|| it.next())
                    .flatten()
            })
            .collect();
        answers.push(got.iter().map(Fe::value).collect::<Vec<_>>());
        positioned.push(full);
    }
    let downloaded = answers.iter().map(Vec::len).sum();

    let truth = dep.files.file(m)?;
    let (decoded, success, error) = match decode(&queries, &positioned, dep.storage.code(), &params, m) {
        Ok(w) => {
            let ok = &w == truth;
            let err = (!ok).then(|| "decoded file differs from the stored file".to_string());
            (Some(matrix_values(&w)), ok, err)
        }
        Err(e @ (Error::Unrecoverable { .. } | Error::InconsistentAnswers)) => (None, false, Some(e.to_string())),
        Err(e) => return Err(e),
    };
    Ok(RetrievalTranscript {
        file: m,
        strategy: s,
        shift: t,
        queries,
        answers,
        downloaded,
        decoded,
        success,
        error,
    })
}

/// Writes one JSON object per line.
pub fn write_jsonl<W: Write, T: Serialize>(records: &[T], mut out: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r).map_err(|e| Error::Io(e.to_string()))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VerifyMode {
    Exhaustive,
    Sampled { count: usize, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub runs: usize,
    pub failures: Vec<RetrievalTranscript>,
    pub total_downloaded: usize,
    pub min_downloaded: usize,
    pub max_downloaded: usize,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn mean_downloaded(&self) -> f64 {
        self.total_downloaded as f64 / self.runs.max(1) as f64
    }
}

/// Runs retrievals over every `(m, s, t)` or over a seeded sample of them.
pub fn verify_retrievability(dep: &Deployment, mode: VerifyMode) -> Result<VerifyReport> {
    let scheme = &dep.scheme;
    let (files, strategies, servers) = (scheme.files(), scheme.alphabet().len(), scheme.servers());
    let cases: Vec<(usize, usize, usize)> = match mode {
        VerifyMode::Exhaustive => {
            let total = (files * strategies * servers) as u128;
            if total > MAX_EXHAUSTIVE_RUNS {
                return Err(Error::TooLarge {
                    what: "exhaustive retrieval runs",
                    needed: total,
                    limit: MAX_EXHAUSTIVE_RUNS,
                });
            }
            let mut v = Vec::with_capacity(total as usize);
            for m in 1..=files {
                for s in 0..strategies {
                    for t in 1..=servers {
                        v.push((m, s, t));
                    }
                }
            }
            v
        }
        VerifyMode::Sampled { count, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..count)
                .map(|_| {
                    (
                        rng.random_range(1..=files),
                        rng.random_range(0..strategies),
                        rng.random_range(1..=servers),
                    )
                })
                .collect()
        }
    };
    let mut transport = dep.in_process();
    let mut report = VerifyReport {
        runs: 0,
        failures: Vec::new(),
        total_downloaded: 0,
        min_downloaded: usize::MAX,
        max_downloaded: 0,
    };
    for (m, s, t) in cases {
        let tr = run_retrieval_with(dep, &mut transport, m, s, t)?;
        report.runs += 1;
        report.total_downloaded += tr.downloaded;
        report.min_downloaded = report.min_downloaded.min(tr.downloaded);
        report.max_downloaded = report.max_downloaded.max(tr.downloaded);
        if !tr.success {
            report.failures.push(tr);
        }
    }
    if report.runs == 0 {
        report.min_downloaded = 0;
    }
    Ok(report)
}

/// Monte Carlo retrieval statistics under a strategy PMF.
#[derive(Clone, Debug, Serialize)]
pub struct SimulationReport {
    pub samples: usize,
    pub seed: u64,
    pub failures: usize,
    pub mean_downloaded: f64,
    /// Per server, how often each query was sent.
    pub query_counts: Vec<BTreeMap<QueryMatrix, u64>>,
}

/// One simulated retrieval, with the sampling seed that produced it.
#[derive(Clone, Debug, Serialize)]
pub struct SimulationRecord<'a> {
    pub sample: usize,
    pub seed: u64,
    pub transcript: &'a RetrievalTranscript,
}

/// Draws `m` uniformly (or fixes it), `s ~ z` and `t` uniformly, runs a full
/// retrieval per sample and tallies downloads and queries.
pub fn simulate(dep: &Deployment, z: &[f64], samples: usize, seed: u64, file: Option<usize>) -> Result<SimulationReport> {
    simulate_with(dep, &mut dep.in_process(), z, samples, seed, file, |_| Ok(()))
}

/// [`simulate`] over an arbitrary transport; `visit` sees every record.
pub fn simulate_with(
    dep: &Deployment,
    transport: &mut dyn Transport,
    z: &[f64],
    samples: usize,
    seed: u64,
    file: Option<usize>,
    mut visit: impl FnMut(&SimulationRecord<'_>) -> Result<()>,
) -> Result<SimulationReport> {
    let scheme = &dep.scheme;
    crate::leakage::validate_pmf(z, scheme.alphabet().len())?;
    if let Some(m) = file {
        if m == 0 || m > scheme.files() {
            return Err(Error::OutOfRange {
                what: "file index",
                value: m,
                lo: 1,
                hi: scheme.files(),
            });
        }
    }
    let pick = WeightedIndex::new(z).map_err(|e| Error::InvalidPmf(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![BTreeMap::new(); scheme.servers()];
    let mut failures = 0;
    let mut total = 0usize;
    for sample in 0..samples {
        let m = match file {
            Some(m) => m,
            None => rng.random_range(1..=scheme.files()),
        };
        let s = pick.sample(&mut rng);
        let t = rng.random_range(1..=scheme.servers());
        let tr = run_retrieval_with(dep, transport, m, s, t)?;
        visit(&SimulationRecord {
            sample,
            seed,
            transcript: &tr,
        })?;
        total += tr.downloaded;
        failures += usize::from(!tr.success);
        for (c, q) in counts.iter_mut().zip(tr.queries) {
            *c.entry(q).or_insert(0) += 1;
        }
    }
    Ok(SimulationReport {
        samples,
        seed,
        failures,
        mean_downloaded: total as f64 / samples.max(1) as f64,
        query_counts: counts,
    })
}
