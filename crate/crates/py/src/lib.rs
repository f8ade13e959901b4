//! Python bindings: cell configuration, the environment, schedulers,
//! evaluation, training and the self-test suite.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::sync::Mutex;

use ofdmarl_core::agent::{apply_age_cap, micki_mu, Variant};
use ofdmarl_core::baselines::knapsack::{self, Item};
use ofdmarl_core::baselines::Scheduler as CoreScheduler;
use ofdmarl_core::env::{self as core_env, EnvState, Observation};
use ofdmarl_core::harness::{self, EnvSplit, EvalReport, TrainOptions};
use ofdmarl_core::rng::derive_seed as core_derive_seed;
use ofdmarl_core::selftest::{self, Check, SelftestOptions};
use ofdmarl_core::Error;
use pyo3::create_exception;
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

create_exception!(ofdmarl, NumericError, PyRuntimeError, "A value went NaN or infinite.");

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::Action(_) | Error::Shape(_) => PyValueError::new_err(e.to_string()),
        Error::Numeric(_) => NumericError::new_err(e.to_string()),
        Error::Io(_) => PyOSError::new_err(e.to_string()),
        Error::Contract(_) | Error::Checkpoint(_) => PyRuntimeError::new_err(e.to_string()),
    }
}

fn parse_variant(v: Option<&str>) -> PyResult<Option<Variant>> {
    v.map(|s| s.parse().map_err(py_err)).transpose()
}

/// Cell layout, channel and traffic parameters.
#[pyclass(name = "CellConfig", from_py_object)]
#[derive(Clone)]
struct PyCellConfig {
    inner: core_env::CellConfig,
}

#[pymethods]
impl PyCellConfig {
    /// `preset` is "paper" (32 UEs, 25 PRBs) or "smoke" (8 UEs, 6 PRBs).
    #[new]
    #[pyo3(signature = (preset = "paper"))]
    fn new(preset: &str) -> PyResult<Self> {
        let inner = match preset {
            "paper" => core_env::CellConfig::paper(),
            "smoke" => core_env::CellConfig::smoke(),
            other => {
                return Err(PyValueError::new_err(format!(
                    "unknown preset '{other}' (expected paper or smoke)"
                )))
            }
        };
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        core_env::CellConfig::from_toml_str(text)
            .map(|inner| Self { inner })
            .map_err(py_err)
    }

    fn to_toml(&self) -> String {
        self.inner.to_toml_string()
    }

    #[getter]
    fn num_ues(&self) -> usize {
        self.inner.num_ues
    }

    #[getter]
    fn num_prbs(&self) -> usize {
        self.inner.num_prbs
    }

    #[getter]
    fn buffer_len(&self) -> usize {
        self.inner.buffer_len
    }

    fn __repr__(&self) -> String {
        format!(
            "CellConfig(num_ues={}, num_prbs={}, buffer_len={})",
            self.inner.num_ues, self.inner.num_prbs, self.inner.buffer_len
        )
    }
}

/// Everything a training run depends on besides the master seed.
#[pyclass(name = "RunConfig", from_py_object)]
#[derive(Clone)]
struct PyRunConfig {
    inner: harness::RunConfig,
}

#[pymethods]
impl PyRunConfig {
    #[new]
    #[pyo3(signature = (preset = "smoke", variant = None))]
    fn new(preset: &str, variant: Option<&str>) -> PyResult<Self> {
        let mut inner = harness::RunConfig::preset(preset).map_err(py_err)?;
        if let Some(v) = parse_variant(variant)? {
            inner = inner.with_variant(v);
        }
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        harness::RunConfig::from_toml_str(text)
            .map(|inner| Self { inner })
            .map_err(py_err)
    }

    fn to_toml(&self) -> String {
        self.inner.to_toml_string()
    }

    #[getter]
    fn cell(&self) -> PyCellConfig {
        PyCellConfig {
            inner: self.inner.cell.clone(),
        }
    }

    #[getter]
    fn episodes(&self) -> u64 {
        self.inner.schedule.episodes
    }

    #[setter]
    fn set_episodes(&mut self, v: u64) {
        self.inner.schedule.episodes = v;
    }

    #[getter]
    fn episode_steps(&self) -> u64 {
        self.inner.schedule.episode_steps
    }

    #[setter]
    fn set_episode_steps(&mut self, v: u64) {
        self.inner.schedule.episode_steps = v;
    }

    #[getter]
    fn eval_every(&self) -> u64 {
        self.inner.schedule.eval_every
    }

    #[setter]
    fn set_eval_every(&mut self, v: u64) {
        self.inner.schedule.eval_every = v;
    }

    #[getter]
    fn eval_seeds(&self) -> usize {
        self.inner.schedule.eval_seeds
    }

    #[setter]
    fn set_eval_seeds(&mut self, v: usize) {
        self.inner.schedule.eval_seeds = v;
    }
}

fn observation_dict<'py>(py: Python<'py>, obs: &Observation) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("tti", obs.tti)?;
    d.set_item("prb_cursor", obs.prb_cursor)?;
    d.set_item("num_prbs", obs.num_prbs)?;
    d.set_item("buffer_len", obs.buffer_len)?;
    let ues = PyList::empty(py);
    for ue in &obs.ues {
        let u = PyDict::new(py);
        u.set_item("qi", ue.qi)?;
        u.set_item("cqi", ue.cqi)?;
        u.set_item("cqi_mean", ue.cqi_mean)?;
        u.set_item("tbs_bits", ue.tbs_bits)?;
        u.set_item("avg_throughput", ue.avg_throughput)?;
        let packets: Vec<(u32, u32)> = ue.packets.iter().map(|p| (p.size, p.age)).collect();
        u.set_item("packets", packets)?;
        ues.append(u)?;
    }
    d.set_item("ues", ues)?;
    Ok(d)
}

/// One downlink cell. PRBs are allocated one at a time; the TTI closes
/// after the last PRB and yields the reward.
#[pyclass(name = "Env")]
struct PyEnv {
    inner: EnvState,
}

#[pymethods]
impl PyEnv {
    #[new]
    fn new(cell: &PyCellConfig, seed: u64) -> PyResult<Self> {
        EnvState::new(cell.inner.clone(), seed)
            .map(|inner| Self { inner })
            .map_err(py_err)
    }

    fn observe<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        observation_dict(py, &self.inner.observe())
    }

    /// Gives the current PRB to UE `ue`. Returns `(bits, reward)`, where
    /// `reward` is None unless this allocation closed the TTI.
    fn allocate(&mut self, ue: usize) -> PyResult<(u64, Option<f64>)> {
        let a = self.inner.allocate_prb(ue).map_err(py_err)?;
        Ok((a.bits, a.reward))
    }

    /// Allocates the remaining PRBs of the TTI in order; returns the reward.
    fn run_tti(&mut self, ues: Vec<usize>) -> PyResult<f64> {
        let remaining = self.inner.config().num_prbs - self.inner.prb_cursor();
        if ues.len() != remaining {
            return Err(PyValueError::new_err(format!(
                "{remaining} PRBs remain in this TTI, got {} actions",
                ues.len()
            )));
        }
        let mut reward = 0.0;
        for ue in ues {
            if let Some(r) = self.inner.allocate_prb(ue).map_err(py_err)?.reward {
                reward = r;
            }
        }
        Ok(reward)
    }

    #[getter]
    fn tti(&self) -> u64 {
        self.inner.tti()
    }

    #[getter]
    fn prb_cursor(&self) -> usize {
        self.inner.prb_cursor()
    }

    #[getter]
    fn num_ues(&self) -> usize {
        self.inner.num_ues()
    }

    #[getter]
    fn total_dropped(&self) -> u64 {
        self.inner.total_dropped()
    }

    /// UE positions in meters.
    fn positions(&self) -> Vec<(f64, f64)> {
        self.inner
            .ues
            .iter()
            .map(|u| (u.position[0], u.position[1]))
            .collect()
    }
}

/// A scheduler by name: rrit, pfca, knapsack, random or dqn:<checkpoint>.
#[pyclass(name = "Scheduler")]
struct PyScheduler {
    name: String,
    inner: Mutex<Box<dyn CoreScheduler>>,
}

#[pymethods]
impl PyScheduler {
    #[new]
    #[pyo3(signature = (agent, cell, seed = 0))]
    fn new(agent: &str, cell: &PyCellConfig, seed: u64) -> PyResult<Self> {
        let spec = harness::parse_agent(agent, &cell.inner).map_err(py_err)?;
        let inner = spec.build(&cell.inner, seed).map_err(py_err)?;
        Ok(Self {
            name: spec.name(),
            inner: Mutex::new(inner),
        })
    }

    #[getter]
    fn name(&self) -> &str {
        &self.name
    }

    /// UE chosen for the PRB under the cursor of `env`.
    fn select(&self, env: &PyEnv) -> usize {
        let obs = env.inner.observe();
        self.inner.lock().expect("scheduler lock").select(&obs)
    }
}

fn report_dict<'py>(py: Python<'py>, r: &EvalReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    let s = &r.summary;
    d.set_item("agent", &r.agent)?;
    d.set_item("seeds", r.seeds.clone())?;
    d.set_item("env_means", r.env_means.clone())?;
    d.set_item("mean", s.mean)?;
    d.set_item("median", s.median)?;
    d.set_item("q1", s.q1)?;
    d.set_item("q3", s.q3)?;
    d.set_item("min", s.min)?;
    d.set_item("max", s.max)?;
    Ok(d)
}

/// Mean per-TTI reward of `agent` on each environment seed.
#[pyfunction]
#[pyo3(signature = (agent, cell, seeds, steps, jobs = 1))]
fn evaluate<'py>(
    py: Python<'py>,
    agent: &str,
    cell: &PyCellConfig,
    seeds: Vec<u64>,
    steps: u64,
    jobs: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let spec = harness::parse_agent(agent, &cell.inner).map_err(py_err)?;
    let cell = cell.inner.clone();
    let report = py
        .detach(|| harness::run_eval(&spec, &cell, &seeds, steps, jobs))
        .map_err(py_err)?;
    report_dict(py, &report)
}

/// Trains a DQN agent. With `out_dir`, logs and checkpoints are written
/// there. Returns the evaluation curve.
#[pyfunction]
#[pyo3(signature = (config, seed, out_dir = None, jobs = 1))]
fn train<'py>(
    py: Python<'py>,
    config: &PyRunConfig,
    seed: u64,
    out_dir: Option<PathBuf>,
    jobs: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let config = config.inner.clone();
    let outcome = py
        .detach(|| {
            let s = &config.schedule;
            let split = EnvSplit::derive(seed, s.eval_seeds, s.test_seeds)?;
            let opts = TrainOptions {
                out_dir,
                jobs,
                keep_records: false,
                progress: false,
            };
            harness::run_training(&config, &split, seed, &opts)
        })
        .map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("steps", outcome.agent.steps())?;
    let evals = PyList::empty(py);
    for e in &outcome.evals {
        let row = report_dict(py, &e.report)?;
        row.set_item("episode", e.episode)?;
        row.set_item("step", e.step)?;
        row.set_item("checkpoint", e.checkpoint.clone())?;
        evals.append(row)?;
    }
    d.set_item("evals", evals)?;
    d.set_item("best_episode", outcome.best.as_ref().map(|(e, _)| *e))?;
    Ok(d)
}

fn check_tuple(c: Check) -> (String, bool, String) {
    (c.name, c.passed, c.detail)
}

/// The invariant suite as `(name, passed, detail)` tuples.
#[pyfunction]
#[pyo3(signature = (seed = 0, fault_gradient = false))]
fn run_selftest(py: Python<'_>, seed: u64, fault_gradient: bool) -> PyResult<Vec<(String, bool, String)>> {
    let checks = py
        .detach(|| selftest::run_selftest(SelftestOptions { seed, fault_gradient }))
        .map_err(py_err)?;
    Ok(checks.into_iter().map(check_tuple).collect())
}

/// Finite-difference check of the composed network on random instances.
#[pyfunction]
#[pyo3(signature = (instances = 100, seed = 0, fault = false))]
fn gradient_check(py: Python<'_>, instances: usize, seed: u64, fault: bool) -> PyResult<(String, bool, String)> {
    py.detach(|| selftest::gradient_check(instances, seed, fault))
        .map(check_tuple)
        .map_err(py_err)
}

/// 0/1 knapsack over integer weights: `(best value, selected flags)`.
#[pyfunction]
fn solve_knapsack(weights: Vec<u64>, values: Vec<f64>, capacity: u64) -> PyResult<(f64, Vec<bool>)> {
    if weights.len() != values.len() {
        return Err(PyValueError::new_err("weights and values differ in length"));
    }
    if values.iter().any(|v| !(*v >= 0.0)) {
        return Err(PyValueError::new_err("values must be non-negative"));
    }
    let items: Vec<Item> = weights
        .into_iter()
        .zip(values)
        .map(|(weight, value)| Item { weight, value })
        .collect();
    let s = knapsack::solve(&items, capacity);
    Ok((s.value, s.selected))
}

#[pyfunction(name = "apply_age_cap")]
fn py_apply_age_cap(age: u32, pdb: u32) -> u32 {
    apply_age_cap(age, pdb)
}

#[pyfunction(name = "micki_mu")]
fn py_micki_mu(mu0: f64, rho: f64, episode: u64) -> f64 {
    micki_mu(mu0, rho, episode)
}

#[pyfunction(name = "derive_seed")]
fn py_derive_seed(parent: u64, label: &str) -> u64 {
    core_derive_seed(parent, label)
}

#[pymodule]
fn ofdmarl(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("NumericError", m.py().get_type::<NumericError>())?;
    m.add_class::<PyCellConfig>()?;
    m.add_class::<PyRunConfig>()?;
    m.add_class::<PyEnv>()?;
    m.add_class::<PyScheduler>()?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(run_selftest, m)?)?;
    m.add_function(wrap_pyfunction!(gradient_check, m)?)?;
    m.add_function(wrap_pyfunction!(solve_knapsack, m)?)?;
    m.add_function(wrap_pyfunction!(py_apply_age_cap, m)?)?;
    m.add_function(wrap_pyfunction!(py_micki_mu, m)?)?;
    m.add_function(wrap_pyfunction!(py_derive_seed, m)?)?;
    Ok(())
}
