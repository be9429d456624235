//! Python bindings: belief algebra, Dirichlet learning and scenario runs.

use std::path::PathBuf;

use hems_core::cli::{load_rows, resolve_config, write_outputs, CommonArgs};
use hems_core::inference::{self as inf, Categorical, ConditionalTable, DirichletTable, Policy};
use hems_core::orchestrator::run_simulation;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Normalized probability vector.
#[pyclass(name = "Categorical", frozen, from_py_object, module = "hems_py")]
#[derive(Clone)]
struct PyCategorical(Categorical);

#[pymethods]
impl PyCategorical {
    #[new]
    fn new(probs: Vec<f64>) -> PyResult<Self> {
        Categorical::new(probs).map(Self).map_err(value_err)
    }

    #[staticmethod]
    fn uniform(n: usize) -> Self {
        Self(Categorical::uniform(n))
    }

    #[staticmethod]
    fn delta(n: usize, index: usize) -> PyResult<Self> {
        if index >= n {
            return Err(value_err(format!(
                "index {index} out of range for {n} states"
            )));
        }
        Ok(Self(Categorical::delta(n, index)))
    }

    #[staticmethod]
    fn softmax(logits: Vec<f64>) -> PyResult<Self> {
        Categorical::softmax(&logits).map(Self).map_err(value_err)
    }

    #[getter]
    fn probs(&self) -> Vec<f64> {
        self.0.probs().to_vec()
    }

    fn entropy(&self) -> f64 {
        self.0.entropy()
    }

    fn argmax(&self) -> usize {
        self.0.argmax()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("Categorical({:?})", self.0.probs())
    }
}

/// Conditional table `p(child | parents)`, child axis fastest.
#[pyclass(
    name = "ConditionalTable",
    frozen,
    skip_from_py_object,
    module = "hems_py"
)]
#[derive(Clone)]
struct PyConditionalTable(ConditionalTable);

#[pymethods]
impl PyConditionalTable {
    #[new]
    fn new(child: usize, parents: Vec<usize>, entries: Vec<f64>) -> PyResult<Self> {
        ConditionalTable::from_entries(child, parents, entries)
            .map(Self)
            .map_err(value_err)
    }

    #[staticmethod]
    fn identity(n: usize) -> Self {
        Self(ConditionalTable::identity(n))
    }

    #[getter]
    fn child_cardinality(&self) -> usize {
        self.0.child_cardinality()
    }

    #[getter]
    fn parent_cardinalities(&self) -> Vec<usize> {
        self.0.parent_cardinalities().to_vec()
    }

    fn slice(&self, parents: Vec<usize>) -> PyResult<Vec<f64>> {
        self.check_parents(&parents)?;
        Ok(self.0.slice(&parents).to_vec())
    }

    /// `sum over parents of p(child | parents) * prod q_i(parent_i)`.
    fn marginalize(&self, parent_probs: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
        let refs: Vec<&[f64]> = parent_probs.iter().map(Vec::as_slice).collect();
        self.0.marginalize(&refs).map_err(value_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "ConditionalTable(child={}, parents={:?})",
            self.0.child_cardinality(),
            self.0.parent_cardinalities()
        )
    }
}

impl PyConditionalTable {
    fn check_parents(&self, parents: &[usize]) -> PyResult<()> {
        let cards = self.0.parent_cardinalities();
        if parents.len() != cards.len() || parents.iter().zip(cards).any(|(p, c)| p >= c) {
            return Err(value_err(format!(
                "parent index {parents:?} outside {cards:?}"
            )));
        }
        Ok(())
    }
}

/// Dirichlet counts over a transition `(child | self, exogenous..., action)`.
#[pyclass(name = "DirichletTable", module = "hems_py")]
struct PyDirichletTable(Option<DirichletTable>);

impl PyDirichletTable {
    fn inner(&self) -> &DirichletTable {
        self.0.as_ref().expect("counts present between calls")
    }
}

#[pymethods]
impl PyDirichletTable {
    #[new]
    #[pyo3(signature = (child, parents, value = 1.0))]
    fn new(child: usize, parents: Vec<usize>, value: f64) -> PyResult<Self> {
        DirichletTable::uniform(child, parents, value)
            .map(|t| Self(Some(t)))
            .map_err(value_err)
    }

    #[getter]
    fn concentrations(&self) -> Vec<f64> {
        self.inner().concentrations().to_vec()
    }

    fn get(&self, child: usize, parents: Vec<usize>) -> PyResult<f64> {
        let t = self.inner();
        let cards = t.parent_cardinalities();
        if child >= t.child_cardinality()
            || parents.len() != cards.len()
            || parents.iter().zip(cards).any(|(p, c)| p >= c)
        {
            return Err(value_err("index out of range"));
        }
        Ok(t.get(child, &parents))
    }

    #[pyo3(signature = (prev_belief, post_belief, action, exogenous = Vec::new(), learning_rate = 1.0))]
    fn update(
        &mut self,
        prev_belief: &PyCategorical,
        post_belief: &PyCategorical,
        action: usize,
        exogenous: Vec<usize>,
        learning_rate: f64,
    ) -> PyResult<()> {
        let counts = self.inner().clone();
        let updated = inf::update_transition_counts(
            counts,
            &prev_belief.0,
            &post_belief.0,
            action,
            &exogenous,
            learning_rate,
        )
        .map_err(value_err)?;
        self.0 = Some(updated);
        Ok(())
    }

    fn normalized(&self) -> PyConditionalTable {
        PyConditionalTable(self.inner().normalized())
    }
}

#[pyfunction]
fn infer_states(
    prior: &PyCategorical,
    likelihood: &PyConditionalTable,
    observation: usize,
) -> PyResult<PyCategorical> {
    inf::infer_states(&prior.0, &likelihood.0, observation)
        .map(PyCategorical)
        .map_err(value_err)
}

#[pyfunction]
#[pyo3(signature = (belief, transition, action, exogenous = Vec::new()))]
fn predict_states(
    belief: &PyCategorical,
    transition: &PyConditionalTable,
    action: usize,
    exogenous: Vec<PyCategorical>,
) -> PyResult<PyCategorical> {
    let exo: Vec<Categorical> = exogenous.into_iter().map(|c| c.0).collect();
    inf::predict_states(&belief.0, &transition.0, action, &exo)
        .map(PyCategorical)
        .map_err(value_err)
}

#[pyfunction]
fn expected_observations(
    state: &PyCategorical,
    likelihood: &PyConditionalTable,
) -> PyResult<PyCategorical> {
    inf::expected_observations(&state.0, &likelihood.0)
        .map(PyCategorical)
        .map_err(value_err)
}

fn preferences(log_prefs: Vec<f64>) -> PyResult<inf::Preferences> {
    inf::Preferences::new(log_prefs).map_err(value_err)
}

/// KL divergence from predicted observations to the preference distribution.
#[pyfunction]
fn risk(predicted: &PyCategorical, log_prefs: Vec<f64>) -> PyResult<f64> {
    inf::risk(&predicted.0, &preferences(log_prefs)?).map_err(value_err)
}

#[pyfunction]
fn ambiguity(state: &PyCategorical, likelihood: &PyConditionalTable) -> PyResult<f64> {
    inf::ambiguity(&state.0, &likelihood.0).map_err(value_err)
}

#[pyfunction]
fn information_gain(state: &PyCategorical, likelihood: &PyConditionalTable) -> PyResult<f64> {
    let predicted = inf::expected_observations(&state.0, &likelihood.0).map_err(value_err)?;
    Ok(inf::information_gain(&state.0, &likelihood.0, &predicted))
}

#[pyfunction]
fn expected_utility(predicted: &PyCategorical, log_prefs: Vec<f64>) -> PyResult<f64> {
    Ok(inf::expected_utility(
        &predicted.0,
        &preferences(log_prefs)?,
    ))
}

#[pyfunction]
#[pyo3(signature = (g, precision = 1.0, prior = None))]
fn policy_posterior(
    g: Vec<f64>,
    precision: f64,
    prior: Option<&PyCategorical>,
) -> PyResult<PyCategorical> {
    let prior = prior.map_or_else(|| Categorical::uniform(g.len()), |p| p.0.clone());
    inf::policy_posterior(&g, &prior, precision)
        .map(PyCategorical)
        .map_err(value_err)
}

#[pyfunction]
fn enumerate_policies(actions: usize, horizon: usize) -> Vec<Vec<usize>> {
    inf::enumerate_policies(actions, horizon)
        .into_iter()
        .map(|p| p.actions().to_vec())
        .collect()
}

/// First action of the chosen policy; `sampled` draws from the posterior.
#[pyfunction]
#[pyo3(signature = (posterior, policies, sampled = false, seed = 0))]
fn select_action(
    posterior: &PyCategorical,
    policies: Vec<Vec<usize>>,
    sampled: bool,
    seed: u64,
) -> PyResult<usize> {
    let policies: Vec<Policy> = policies.into_iter().map(Policy::new).collect();
    let mode = if sampled {
        inf::SelectionMode::Sampled
    } else {
        inf::SelectionMode::Deterministic
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    inf::select_action(&posterior.0, &policies, mode, &mut rng).map_err(value_err)
}

fn json_to_py<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

/// Runs a scenario config; writes outputs when `out` is given and returns
/// the metrics as a dict.
#[pyfunction]
#[pyo3(signature = (config, out = None, days = None, horizon = None, learn = false, seed = None))]
fn run_scenario<'py>(
    py: Python<'py>,
    config: PathBuf,
    out: Option<PathBuf>,
    days: Option<usize>,
    horizon: Option<usize>,
    learn: bool,
    seed: Option<u64>,
) -> PyResult<Bound<'py, PyAny>> {
    let write = out.is_some();
    let args = CommonArgs {
        config,
        out,
        days,
        horizon,
        learn,
        seed,
    };
    let metrics = py
        .detach(|| {
            let config = resolve_config(&args)?;
            let rows = load_rows(&config.input)?;
            let result = run_simulation(&config, &rows)?;
            if write {
                write_outputs(&config.output_dir, &result.trace, &result.metrics)?;
            }
            serde_json::to_string(&result.metrics).map_err(|e| hems_core::cli::CliError::Output {
                path: "metrics".into(),
                message: e.to_string(),
            })
        })
        .map_err(value_err)?;
    json_to_py(py, &metrics)
}

/// Parses and validates a scenario config, returning the resolved settings.
#[pyfunction]
fn load_config<'py>(py: Python<'py>, path: PathBuf) -> PyResult<Bound<'py, PyAny>> {
    let config = hems_core::config::load_config(&path).map_err(value_err)?;
    json_to_py(py, &serde_json::to_string(&config).map_err(value_err)?)
}

#[pymodule]
fn hems_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCategorical>()?;
    m.add_class::<PyConditionalTable>()?;
    m.add_class::<PyDirichletTable>()?;
    m.add_function(wrap_pyfunction!(infer_states, m)?)?;
    m.add_function(wrap_pyfunction!(predict_states, m)?)?;
    m.add_function(wrap_pyfunction!(expected_observations, m)?)?;
    m.add_function(wrap_pyfunction!(risk, m)?)?;
    m.add_function(wrap_pyfunction!(ambiguity, m)?)?;
    m.add_function(wrap_pyfunction!(information_gain, m)?)?;
    m.add_function(wrap_pyfunction!(expected_utility, m)?)?;
    m.add_function(wrap_pyfunction!(policy_posterior, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate_policies, m)?)?;
    m.add_function(wrap_pyfunction!(select_action, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(load_config, m)?)?;
    Ok(())
}
