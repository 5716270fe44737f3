//! Python bindings: configuration, simulation stepping, ensemble runs and
//! the fuzzy decision primitives.

use std::path::PathBuf;

use cca_traffic::analysis::{cross_covariance, fundamental_diagram, MetricsSample, MetricsSeries};
use cca_traffic::fuzzy::{combine as combine_outputs, gwaf as gwaf_formula, MembershipFunction};
use cca_traffic::output::emit_outputs;
use cca_traffic::{ExperimentConfig, ObstaclePlacement};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn py_err(e: cca_traffic::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn sample_dict<'py>(py: Python<'py>, s: &MetricsSample) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("t", s.t)?;
    d.set_item("N", s.n)?;
    d.set_item("D", s.d)?;
    d.set_item("v_av", s.v_av)?;
    d.set_item("q", s.q)?;
    d.set_item("throughput10", s.throughput10)?;
    d.set_item("latency", s.latency)?;
    d.set_item("empty", s.empty)?;
    Ok(d)
}

/// Experiment parameters.
#[pyclass(name = "ExperimentConfig", from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: ExperimentConfig,
}

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (emission_rate = 1.0, lanes = 3, road_length = 5000.0, iterations = 1000, repetitions = 100, long_fraction = 0.0, influence_radius = 10.0, obstacle = "none", seed = 0, noise = true))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        emission_rate: f64,
        lanes: usize,
        road_length: f64,
        iterations: u64,
        repetitions: u64,
        long_fraction: f64,
        influence_radius: f64,
        obstacle: &str,
        seed: u64,
        noise: bool,
    ) -> PyResult<Self> {
        let obstacle: ObstaclePlacement = obstacle.parse().map_err(py_err)?;
        let inner = ExperimentConfig {
            emission_rate,
            lanes,
            road_length,
            iterations,
            repetitions,
            long_fraction,
            influence_radius,
            obstacle,
            seed,
            noise,
            ..Default::default()
        };
        inner.validate().map_err(py_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        ExperimentConfig::from_toml(text).map(|inner| Self { inner }).map_err(py_err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        ExperimentConfig::load(&path).map(|inner| Self { inner }).map_err(py_err)
    }

    fn to_toml(&self) -> PyResult<String> {
        self.inner.to_toml().map_err(py_err)
    }

    #[getter]
    fn emission_rate(&self) -> f64 {
        self.inner.emission_rate
    }

    #[getter]
    fn lanes(&self) -> usize {
        self.inner.lanes
    }

    #[getter]
    fn road_length(&self) -> f64 {
        self.inner.road_length
    }

    #[getter]
    fn iterations(&self) -> u64 {
        self.inner.iterations
    }

    #[getter]
    fn repetitions(&self) -> u64 {
        self.inner.repetitions
    }

    #[getter]
    fn long_fraction(&self) -> f64 {
        self.inner.long_fraction
    }

    #[getter]
    fn influence_radius(&self) -> f64 {
        self.inner.influence_radius
    }

    #[getter]
    fn obstacle(&self) -> &'static str {
        self.inner.obstacle.name()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    fn __repr__(&self) -> String {
        format!(
            "ExperimentConfig(emission_rate={}, lanes={}, road_length={}, iterations={}, repetitions={}, long_fraction={}, influence_radius={}, obstacle='{}', seed={})",
            self.inner.emission_rate,
            self.inner.lanes,
            self.inner.road_length,
            self.inner.iterations,
            self.inner.repetitions,
            self.inner.long_fraction,
            self.inner.influence_radius,
            self.inner.obstacle.name(),
            self.inner.seed,
        )
    }
}

/// One repetition advanced a second at a time.
#[pyclass(name = "Simulation", unsendable)]
struct PySimulation {
    inner: cca_traffic::Simulation,
}

#[pymethods]
impl PySimulation {
    #[new]
    #[pyo3(signature = (config, repetition = 0))]
    fn new(config: &PyConfig, repetition: u64) -> PyResult<Self> {
        cca_traffic::Simulation::new(&config.inner, repetition).map(|inner| Self { inner }).map_err(py_err)
    }

    /// Advances one second; returns the ids of vehicles that left the road.
    fn step(&mut self) -> PyResult<Vec<u64>> {
        Ok(self.inner.step().map_err(py_err)?.iter().map(|e| e.vid).collect())
    }

    /// Advances one second and returns the macroscopic sample.
    fn step_and_sample<'py>(&mut self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let s = self.inner.step_and_sample().map_err(py_err)?;
        sample_dict(py, &s)
    }

    #[getter]
    fn time(&self) -> u64 {
        self.inner.time()
    }

    /// `(emitted, dropped, processed)` counters.
    #[getter]
    fn tally(&self) -> (u64, u64, u64) {
        let t = self.inner.tally();
        (t.emitted, t.dropped, t.processed)
    }

    /// `(lane, vid, kind, x, v, s)` for every cell, obstacles included.
    fn vehicles(&self) -> Vec<(usize, u64, String, f64, f64, f64)> {
        self.inner
            .road()
            .lanes()
            .iter()
            .enumerate()
            .flat_map(|(i, lane)| lane.iter().map(move |c| (i, c.vid, c.kind.id.clone(), c.x, c.v, c.s)))
            .collect()
    }

    fn traffic_count(&self) -> usize {
        self.inner.road().traffic_count()
    }
}

/// Runs every repetition; returns one list of sample dicts per repetition.
/// Writes the CSV and SVG outputs when `out` is given.
#[pyfunction]
#[pyo3(signature = (config, threads = 0, out = None))]
fn run<'py>(
    py: Python<'py>,
    config: &PyConfig,
    threads: usize,
    out: Option<PathBuf>,
) -> PyResult<Vec<Vec<Bound<'py, PyDict>>>> {
    let cfg = config.inner.clone();
    let results = py.detach(|| cca_traffic::run(&cfg, threads)).map_err(py_err)?;
    if let Some(dir) = out {
        emit_outputs(&dir, &cfg, &results).map_err(py_err)?;
    }
    results
        .iter()
        .map(|r| r.series.samples.iter().map(|s| sample_dict(py, s)).collect())
        .collect()
}

/// Ensemble cross-covariance between flow and density: `[(t, cc)]`.
#[pyfunction]
fn cc_series(series: Vec<Vec<(u64, f64, f64)>>) -> Vec<(u64, f64)> {
    let ensemble = to_ensemble(&series);
    cross_covariance(&ensemble).into_iter().map(|p| (p.t, p.cc)).collect()
}

/// Binned fundamental diagram: `[(center, count, mean_q, mean_cc)]`.
#[pyfunction]
#[pyo3(signature = (series, lanes, bin_width = 0.005))]
fn diagram(series: Vec<Vec<(u64, f64, f64)>>, lanes: usize, bin_width: f64) -> Vec<(f64, u64, f64, Option<f64>)> {
    let ensemble = to_ensemble(&series);
    let cc = cross_covariance(&ensemble);
    fundamental_diagram(&ensemble, &cc, bin_width, lanes)
        .into_iter()
        .map(|b| (b.center, b.count, b.mean_q, b.mean_cc))
        .collect()
}

fn to_ensemble(series: &[Vec<(u64, f64, f64)>]) -> Vec<MetricsSeries> {
    series
        .iter()
        .map(|rep| MetricsSeries {
            samples: rep
                .iter()
                .map(|&(t, d, q)| MetricsSample {
                    t,
                    n: 0,
                    d,
                    v_av: 0.0,
                    q,
                    throughput10: 0,
                    latency: 0.0,
                    empty: 0,
                })
                .collect(),
        })
        .collect()
}

/// Degree of a triangular membership function at `x`.
#[pyfunction]
fn triangular(left: f64, peak: f64, right: f64, x: f64) -> PyResult<f64> {
    let f = MembershipFunction::triangular(left, peak, right).map_err(py_err)?;
    Ok(f.degree_at(x))
}

/// Generalized weighted average over `(weight, preimage points)` pairs.
#[pyfunction]
fn gwaf(fired: Vec<(f64, Vec<f64>)>) -> f64 {
    gwaf_formula(fired.iter().map(|(w, p)| (*w, p.as_slice())))
}

/// Final acceleration from the two module outputs.
#[pyfunction]
fn combine(a1: f64, a2: f64) -> f64 {
    combine_outputs(a1, a2)
}

#[pymodule]
#[pyo3(name = "cca_traffic")]
fn init(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_class::<PySimulation>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(cc_series, m)?)?;
    m.add_function(wrap_pyfunction!(diagram, m)?)?;
    m.add_function(wrap_pyfunction!(triangular, m)?)?;
    m.add_function(wrap_pyfunction!(gwaf, m)?)?;
    m.add_function(wrap_pyfunction!(combine, m)?)?;
    Ok(())
}
