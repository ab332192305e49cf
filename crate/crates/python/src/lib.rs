//! Python bindings: scheme construction, query tables, leakage and cost
//! evaluation, the trade-off optimizer and the retrieval simulator.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use mdswpir::leakage::{build_query_table, LeakageModel};
use mdswpir::lp::SimplexOptions;
use mdswpir::optimizer::{sweep_tradeoff, TradeoffModel, TradeoffPoint};
use mdswpir::scheme::{SchemeInstance, SchemeKind};
use mdswpir::sim::{simulate, verify_retrievability, Deployment, VerifyMode};
use mdswpir::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Infeasible
        | Error::Unbounded
        | Error::IterationLimit(_)
        | Error::Protocol(_)
        | Error::Unrecoverable { .. }
        | Error::InconsistentAnswers
        | Error::Io(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn point_dict<'py>(py: Python<'py>, p: &TradeoffPoint) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("d_target", p.d_target)?;
    d.set_item("d_achieved", p.d_achieved)?;
    d.set_item("leakage_bits", p.leakage_bits)?;
    d.set_item("leakage_normalized", p.leakage_normalized)?;
    d.set_item("rate", p.rate)?;
    d.set_item("lp_value", p.lp_value)?;
    d.set_item("z", p.z.clone())?;
    Ok(d)
}

/// A weakly-private retrieval scheme over `files` files stored on `servers`
/// servers with an `[servers, dim]` MDS code.
#[pyclass(module = "mdswpir_py", frozen)]
struct Scheme {
    inner: SchemeInstance,
    model: LeakageModel,
}

#[pymethods]
impl Scheme {
    #[new]
    fn new(kind: &str, files: usize, servers: usize, dim: usize) -> PyResult<Self> {
        let kind: SchemeKind = kind.parse().map_err(py_err)?;
        let inner = SchemeInstance::new(kind, files, servers, dim).map_err(py_err)?;
        let model = LeakageModel::build(&inner).map_err(py_err)?;
        Ok(Self { inner, model })
    }

    #[getter]
    fn kind(&self) -> String {
        self.inner.kind().to_string()
    }

    fn __len__(&self) -> usize {
        self.inner.alphabet().len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Scheme('{}', files={}, servers={}, dim={})",
            self.inner.kind(),
            self.inner.files(),
            self.inner.servers(),
            self.inner.dimension()
        )
    }

    /// Strategy alphabet in lexicographic order.
    fn strategies(&self) -> Vec<Vec<usize>> {
        self.inner.alphabet().members().iter().map(|s| s.0.iter().map(|&v| v as usize).collect()).collect()
    }

    /// Rows `(query, m, {strategy: "p/q"}, length)` of server `server`'s table.
    #[pyo3(signature = (server = 1))]
    fn table(&self, server: usize) -> PyResult<Vec<(String, usize, Vec<(usize, String)>, usize)>> {
        let t = build_query_table(&self.inner, server).map_err(py_err)?;
        let mut rows = Vec::with_capacity(t.len() * t.files());
        for (qi, q) in t.queries().iter().enumerate() {
            for m in 1..=t.files() {
                let coeffs = t.conditional(qi, m).terms().map(|(s, c)| (s, c.to_string())).collect();
                rows.push((q.to_string(), m, coeffs, t.length(qi)));
            }
        }
        Ok(rows)
    }

    /// Expected download cost on the simplex, e.g. `3 + z1`.
    fn cost_form(&self) -> String {
        self.model.cost_form().on_simplex(self.inner.alphabet().len()).to_string()
    }

    fn download_cost(&self, z: Vec<f64>) -> PyResult<f64> {
        self.model.download_cost(&z).map_err(py_err)
    }

    fn rate(&self, z: Vec<f64>) -> PyResult<f64> {
        self.model.rate(&z).map_err(py_err)
    }

    /// Maximal leakage `(bits, normalized)` under strategy PMF `z`.
    fn maxl(&self, z: Vec<f64>) -> PyResult<(f64, f64)> {
        let l = self.model.overall_maxl(&z).map_err(py_err)?;
        Ok((l.bits, l.normalized))
    }

    /// Minimal leakage subject to `D(z) <= d_target`.
    #[pyo3(signature = (d_target, symmetry = true))]
    fn optimize<'py>(&self, py: Python<'py>, d_target: f64, symmetry: bool) -> PyResult<Bound<'py, PyDict>> {
        let model = TradeoffModel::new(&self.inner, &self.model, symmetry).map_err(py_err)?;
        let p = py
            .detach(|| model.solve_target(d_target, &SimplexOptions::default()))
            .map_err(py_err)?;
        point_dict(py, &p)
    }

    /// Trade-off curve over `grid` evenly spaced cost targets, sorted by rate.
    #[pyo3(signature = (grid = mdswpir::optimizer::DEFAULT_GRID, symmetry = true))]
    fn tradeoff<'py>(&self, py: Python<'py>, grid: usize, symmetry: bool) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let model = TradeoffModel::new(&self.inner, &self.model, symmetry).map_err(py_err)?;
        let targets = model.default_grid(grid);
        let sweep = py
            .detach(|| sweep_tradeoff(&model, &targets, &SimplexOptions::default()))
            .map_err(py_err)?;
        sweep.points.iter().map(|p| point_dict(py, p)).collect()
    }

    /// Runs retrievals on random files; exhaustive unless `samples` is given.
    #[pyo3(signature = (samples = None, seed = 1))]
    fn verify<'py>(&self, py: Python<'py>, samples: Option<usize>, seed: u64) -> PyResult<Bound<'py, PyDict>> {
        let dep = Deployment::random(self.inner.clone(), None, seed).map_err(py_err)?;
        let mode = match samples {
            Some(count) => VerifyMode::Sampled { count, seed },
            None => VerifyMode::Exhaustive,
        };
        let r = py.detach(|| verify_retrievability(&dep, mode)).map_err(py_err)?;
        let d = PyDict::new(py);
        d.set_item("runs", r.runs)?;
        d.set_item("failures", r.failures.len())?;
        d.set_item("passed", r.passed())?;
        d.set_item("mean_downloaded", r.mean_downloaded())?;
        Ok(d)
    }

    /// Sampled retrievals with `s ~ z`; returns summary statistics.
    #[pyo3(signature = (z, samples = 1000, seed = 1))]
    fn simulate<'py>(&self, py: Python<'py>, z: Vec<f64>, samples: usize, seed: u64) -> PyResult<Bound<'py, PyDict>> {
        let dep = Deployment::random(self.inner.clone(), None, seed).map_err(py_err)?;
        let r = py.detach(|| simulate(&dep, &z, samples, seed, None)).map_err(py_err)?;
        let d = PyDict::new(py);
        d.set_item("samples", r.samples)?;
        d.set_item("failures", r.failures)?;
        d.set_item("mean_downloaded", r.mean_downloaded)?;
        Ok(d)
    }
}

#[pymodule]
fn mdswpir_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Scheme>()?;
    m.add("SCHEMES", SchemeKind::ALL.iter().map(|k| k.to_string()).collect::<Vec<_>>())?;
    Ok(())
}
