use std::collections::BTreeMap;

use kinematics_core::ce::{ConditionalSpec, ConstraintSetSpec, LinearSpec};
use kinematics_core::jb::{self, GridSpec};
use kinematics_core::second_order::PriorSpec;
use kinematics_core::{self as core, CeOptions, Event, McConfig, OutcomeSpace, Partition, SecondOrderPrior};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn json_to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

#[pyclass(name = "Distribution", module = "kinematics", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyDistribution {
    inner: core::FiniteDistribution,
}

#[pymethods]
impl PyDistribution {
    #[new]
    fn new(labels: Vec<String>, probs: Vec<f64>) -> PyResult<Self> {
        let space = OutcomeSpace::new(labels).map_err(err)?;
        Ok(Self { inner: core::FiniteDistribution::new(space, probs).map_err(err)? })
    }

    /// Normalizes nonnegative weights.
    #[staticmethod]
    fn from_weights(labels: Vec<String>, weights: Vec<f64>) -> PyResult<Self> {
        let space = OutcomeSpace::new(labels).map_err(err)?;
        Ok(Self { inner: core::FiniteDistribution::from_weights(space, weights).map_err(err)? })
    }

    #[staticmethod]
    fn uniform(labels: Vec<String>) -> PyResult<Self> {
        let space = OutcomeSpace::new(labels).map_err(err)?;
        Ok(Self { inner: core::FiniteDistribution::uniform(space) })
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.inner.space().labels().to_vec()
    }

    #[getter]
    fn probs(&self) -> Vec<f64> {
        self.inner.probs().to_vec()
    }

    fn prob(&self, label: &str) -> PyResult<f64> {
        self.inner.prob_of(label).map_err(err)
    }

    /// Probability of a set of labels.
    fn event_prob(&self, event: Vec<String>) -> PyResult<f64> {
        let e = Event::from_labels(self.inner.space(), &event).map_err(err)?;
        core::event_probability(&self.inner, &e).map_err(err)
    }

    fn to_dict(&self) -> BTreeMap<String, f64> {
        self.inner.space().labels().iter().cloned().zip(self.inner.probs().iter().copied()).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.space().len()
    }

    fn __repr__(&self) -> String {
        let items: Vec<String> = self
            .inner
            .space()
            .labels()
            .iter()
            .zip(self.inner.probs())
            .map(|(l, p)| format!("{l}={p}"))
            .collect();
        format!("Distribution({})", items.join(", "))
    }
}

#[pyclass(name = "MessageBand", module = "kinematics", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
struct PyMessageBand {
    inner: core::MessageBand,
}

#[pymethods]
impl PyMessageBand {
    #[new]
    #[pyo3(signature = (q, epsilon = core::MessageBand::DEFAULT_EPSILON))]
    fn new(q: f64, epsilon: f64) -> PyResult<Self> {
        Ok(Self { inner: core::MessageBand::new(q, epsilon).map_err(err)? })
    }

    #[getter]
    fn q(&self) -> f64 {
        self.inner.q()
    }

    #[getter]
    fn epsilon(&self) -> f64 {
        self.inner.epsilon()
    }

    #[getter]
    fn lo(&self) -> f64 {
        self.inner.lo()
    }

    #[getter]
    fn hi(&self) -> f64 {
        self.inner.hi()
    }

    #[getter]
    fn midpoint(&self) -> f64 {
        self.inner.midpoint()
    }

    fn __repr__(&self) -> String {
        format!("MessageBand(q={}, epsilon={})", self.inner.q(), self.inner.epsilon())
    }
}

#[pyclass(name = "CeSolution", module = "kinematics", frozen, get_all)]
struct PyCeSolution {
    posterior: PyDistribution,
    multipliers: Vec<f64>,
    kl_value: f64,
    iterations: usize,
    residual: f64,
}

#[pyfunction]
fn condition(p: &PyDistribution, event: Vec<String>) -> PyResult<PyDistribution> {
    let e = Event::from_labels(p.inner.space(), &event).map_err(err)?;
    Ok(PyDistribution { inner: core::condition(&p.inner, &e).map_err(err)? })
}

#[pyfunction]
fn jeffrey_update(p: &PyDistribution, partition: Vec<Vec<String>>, weights: Vec<f64>) -> PyResult<PyDistribution> {
    let part = Partition::from_labels(p.inner.space(), &partition).map_err(err)?;
    Ok(PyDistribution { inner: core::jeffrey_update(&p.inner, &part, &weights).map_err(err)? })
}

/// `KL(q || p)`.
#[pyfunction]
fn kl_divergence(q: &PyDistribution, p: &PyDistribution) -> PyResult<f64> {
    core::kl_divergence(&q.inner, &p.inner).map_err(err)
}

/// `conditional` holds `(A, B, target)` triples meaning `Pr(A | B) = target`;
/// `linear` holds `(coeffs_by_label, rhs)` pairs.
#[pyfunction]
#[pyo3(signature = (prior, conditional = Vec::new(), linear = Vec::new(), tol = 1e-10, max_iter = 200))]
fn ce_update(
    py: Python<'_>,
    prior: &PyDistribution,
    conditional: Vec<(Vec<String>, Vec<String>, f64)>,
    linear: Vec<(BTreeMap<String, f64>, f64)>,
    tol: f64,
    max_iter: usize,
) -> PyResult<PyCeSolution> {
    let spec = ConstraintSetSpec {
        conditional: conditional.into_iter().map(|(a, b, target)| ConditionalSpec { a, b, target }).collect(),
        linear: linear.into_iter().map(|(coeffs, rhs)| LinearSpec { coeffs, rhs }).collect(),
    };
    let set = spec.resolve(prior.inner.space()).map_err(err)?;
    let sol = py
        .detach(|| core::ce_update(&prior.inner, &set, CeOptions { tol, max_iter }))
        .map_err(err)?;
    Ok(PyCeSolution {
        posterior: PyDistribution { inner: sol.posterior },
        multipliers: sol.multipliers,
        kl_value: sol.kl_value,
        iterations: sol.iterations,
        residual: sol.residual,
    })
}

/// Closed-form Blue after the CE update of the Judy Benjamin prior.
#[pyfunction]
fn jb_ce_blue(target: f64) -> f64 {
    core::jb_ce_blue(target)
}

#[pyfunction]
fn cdf_cond_red(q: f64) -> f64 {
    core::cdf_cond_red(q)
}

#[pyfunction]
fn cdf_blue(p: f64) -> f64 {
    core::cdf_blue(p)
}

#[pyfunction]
fn joint_cdf(q: f64, p: f64) -> f64 {
    core::joint_cdf(q, p)
}

#[pyfunction]
fn density_blue(p: f64) -> f64 {
    core::density_blue(p)
}

#[pyfunction]
fn expected_blue_given_message(band: &PyMessageBand) -> f64 {
    core::expected_blue_given_message(&band.inner)
}

#[pyfunction]
fn exact_posterior_quadrants(band: &PyMessageBand) -> PyDistribution {
    PyDistribution { inner: core::exact_posterior_quadrants(&band.inner) }
}

fn prior_from(variant: &str, alpha: Option<Vec<f64>>) -> PyResult<SecondOrderPrior> {
    SecondOrderPrior::try_from(PriorSpec { variant: variant.to_owned(), alpha }).map_err(err)
}

/// Rejection Monte Carlo estimate of the posterior quadrant expectations.
/// Returns `{"R1": {"mean", "stderr", "n_total", "n_accepted"}, ...}` plus "Blue".
#[pyfunction]
#[pyo3(signature = (band, prior = "uniform", alpha = None, samples = 1_000_000, seed = 42, chunks = 8))]
fn mc_posterior_quadrants<'py>(
    py: Python<'py>,
    band: &PyMessageBand,
    prior: &str,
    alpha: Option<Vec<f64>>,
    samples: u64,
    seed: u64,
    chunks: u32,
) -> PyResult<Bound<'py, PyAny>> {
    let prior = prior_from(prior, alpha)?;
    let cfg = McConfig::new(samples, seed, chunks).map_err(err)?;
    let band = band.inner;
    let est = py.detach(|| core::mc_posterior_quadrants(&prior, &band, &cfg)).map_err(err)?;
    json_to_py(py, &est)
}

/// Two-sided KS distance of `samples` against `cdf`, a callable or one of
/// "blue" / "cond_red".
#[pyfunction]
fn ks_statistic(samples: Vec<f64>, cdf: &Bound<'_, PyAny>) -> PyResult<f64> {
    if let Ok(name) = cdf.extract::<String>() {
        let f: fn(f64) -> f64 = match name.as_str() {
            "blue" => core::cdf_blue,
            "cond_red" => core::cdf_cond_red,
            other => return Err(PyValueError::new_err(format!("unknown cdf `{other}`"))),
        };
        return core::ks_statistic(&samples, f).map_err(err);
    }
    // Evaluate the callable up front; the statistic itself is pure.
    let mut values = Vec::with_capacity(samples.len());
    for &x in &samples {
        values.push(cdf.call1((x,))?.extract::<f64>()?);
    }
    let lookup: BTreeMap<u64, f64> = samples.iter().map(|x| x.to_bits()).zip(values).collect();
    core::ks_statistic(&samples, |x| lookup[&x.to_bits()]).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (prior = "uniform", alpha = None, samples = 1_000_000, seed = 42, chunks = 8, grid = 20))]
fn independence_check(
    py: Python<'_>,
    prior: &str,
    alpha: Option<Vec<f64>>,
    samples: u64,
    seed: u64,
    chunks: u32,
    grid: usize,
) -> PyResult<f64> {
    let prior = prior_from(prior, alpha)?;
    let cfg = McConfig::new(samples, seed, chunks).map_err(err)?;
    py.detach(|| core::independence_check(&prior, &cfg, grid)).map_err(err)
}

/// CE and hierarchical answers over `grid` ("START:STEP:END") as a list of dicts.
#[pyfunction]
#[pyo3(signature = (grid = "0:0.05:1", epsilon = core::MessageBand::DEFAULT_EPSILON))]
fn sweep<'py>(py: Python<'py>, grid: &str, epsilon: f64) -> PyResult<Bound<'py, PyAny>> {
    let points = GridSpec::parse(grid).and_then(|g| g.points()).map_err(err)?;
    let rows = jb::sweep(&points, epsilon, CeOptions::default()).map_err(err)?;
    json_to_py(py, &rows)
}

#[pyfunction]
#[pyo3(signature = (epsilon = core::MessageBand::DEFAULT_EPSILON))]
fn contrast<'py>(py: Python<'py>, epsilon: f64) -> PyResult<Bound<'py, PyAny>> {
    json_to_py(py, &jb::contrast(epsilon).map_err(err)?)
}

#[pymodule]
fn kinematics(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDistribution>()?;
    m.add_class::<PyMessageBand>()?;
    m.add_class::<PyCeSolution>()?;
    m.add_function(wrap_pyfunction!(condition, m)?)?;
    m.add_function(wrap_pyfunction!(jeffrey_update, m)?)?;
    m.add_function(wrap_pyfunction!(kl_divergence, m)?)?;
    m.add_function(wrap_pyfunction!(ce_update, m)?)?;
    m.add_function(wrap_pyfunction!(jb_ce_blue, m)?)?;
    m.add_function(wrap_pyfunction!(cdf_cond_red, m)?)?;
    m.add_function(wrap_pyfunction!(cdf_blue, m)?)?;
    m.add_function(wrap_pyfunction!(joint_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(density_blue, m)?)?;
    m.add_function(wrap_pyfunction!(expected_blue_given_message, m)?)?;
    m.add_function(wrap_pyfunction!(exact_posterior_quadrants, m)?)?;
    m.add_function(wrap_pyfunction!(mc_posterior_quadrants, m)?)?;
    m.add_function(wrap_pyfunction!(ks_statistic, m)?)?;
    m.add_function(wrap_pyfunction!(independence_check, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(contrast, m)?)?;
    Ok(())
}
