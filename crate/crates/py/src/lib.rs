//! Python bindings. States, platforms and actions cross the boundary as the
//! same canonical JSON the command-line tool reads and writes.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use droidsec::io::{self, IoError};
use droidsec::{genfuzz, propsuite, queries, traces, AndroidState, AppId, PermId};

fn value_error(e: IoError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// An immutable snapshot of the permission state.
#[pyclass(name = "State", module = "droidsec_py", frozen)]
struct PyState {
    inner: AndroidState,
}

#[pymethods]
impl PyState {
    /// The state with nothing installed.
    #[staticmethod]
    fn empty() -> Self {
        PyState {
            inner: AndroidState::empty(),
        }
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyState {
            inner: io::parse_state(text).map_err(value_error)?,
        })
    }

    fn to_json(&self) -> String {
        io::emit_state(&self.inner)
    }

    /// sha256 of the canonical JSON.
    fn digest(&self) -> String {
        io::state_digest(&self.inner)
    }

    fn installed_apps(&self) -> Vec<String> {
        self.inner.installed_apps.iter().map(|a| a.to_string()).collect()
    }

    fn running(&self) -> Vec<(u64, String)> {
        queries::get_running_components(&self.inner)
            .map(|(ic, c)| (ic.0, c.to_string()))
            .collect()
    }

    fn __eq__(&self, other: &PyState) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("State(apps={}, digest={})", self.inner.installed_apps.len(), &self.digest()[..12])
    }
}

/// Built-in permissions and system calls.
#[pyclass(name = "Platform", module = "droidsec_py", frozen)]
struct PyPlatform {
    inner: droidsec::Platform,
}

#[pymethods]
impl PyPlatform {
    /// The stock platform used by the CLI and the generators.
    #[staticmethod]
    fn sample() -> Self {
        PyPlatform {
            inner: droidsec::Platform::sample(),
        }
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(PyPlatform { inner })
    }

    fn to_json(&self) -> String {
        io::to_canonical(&self.inner)
    }

    fn builtin_permissions(&self) -> Vec<String> {
        self.inner.builtin_perms.iter().map(|p| p.id.to_string()).collect()
    }
}

fn platform_or_sample(platform: Option<&PyPlatform>) -> droidsec::Platform {
    platform.map_or_else(droidsec::Platform::sample, |p| p.inner.clone())
}

/// Executes one action, given as JSON. Returns the response name and the
/// successor state.
#[pyfunction]
#[pyo3(signature = (state, action, platform = None))]
fn step(state: &PyState, action: &str, platform: Option<&PyPlatform>) -> PyResult<(String, PyState)> {
    let a = io::parse_action(action).map_err(value_error)?;
    let r = droidsec::step(&state.inner, &a, &platform_or_sample(platform));
    Ok((r.resp.to_string(), PyState { inner: r.st }))
}

/// Violated validity clauses as (code, message) pairs; empty when valid.
#[pyfunction]
#[pyo3(signature = (state, platform = None))]
fn check_validity(state: &PyState, platform: Option<&PyPlatform>) -> Vec<(String, String)> {
    droidsec::check_validity(&state.inner, &platform_or_sample(platform))
        .messages
        .into_iter()
        .map(|(c, m)| (c.code().to_string(), m))
        .collect()
}

/// Whether `app` holds permission `perm`. Unknown permissions are not held.
#[pyfunction]
#[pyo3(signature = (state, app, perm, platform = None))]
fn app_has_permission(state: &PyState, app: &str, perm: &str, platform: Option<&PyPlatform>) -> bool {
    queries::app_has_permission_id(
        &AppId::from(app),
        &PermId::from(perm),
        &state.inner,
        &platform_or_sample(platform),
    )
}

/// Replays a trace file's text. Returns (responses, final state); the
/// initial state must be inline or absent.
#[pyfunction]
fn run_trace(trace_json: &str) -> PyResult<(Vec<String>, PyState)> {
    let file = io::parse_trace(trace_json).map_err(value_error)?;
    let initial = file.initial_state(std::path::Path::new(".")).map_err(value_error)?;
    let report = traces::run_trace(
        &traces::Trace {
            initial: initial.clone(),
            actions: file.actions.clone(),
        },
        &file.platform,
    )
    .map_err(|r| PyValueError::new_err(format!("invalid initial state:\n{r}")))?;
    let last = traces::last_state(&report, &initial);
    Ok((
        report.responses().iter().map(|r| r.to_string()).collect(),
        PyState { inner: last },
    ))
}

/// A deterministic random valid state.
#[pyfunction]
#[pyo3(signature = (seed, size, platform = None))]
fn gen_valid_state(seed: u64, size: usize, platform: Option<&PyPlatform>) -> PyState {
    PyState {
        inner: genfuzz::gen_valid_state(seed, size, &platform_or_sample(platform)),
    }
}

/// Runs the named property checks (all when `only` is None). Returns
/// (name, cases, failures) per property.
#[pyfunction]
#[pyo3(signature = (only = None, cases = 100, seed = 0))]
fn run_props(only: Option<&str>, cases: usize, seed: u64) -> PyResult<Vec<(String, usize, usize)>> {
    let outcomes = propsuite::run_props(only, cases, seed, &droidsec::Platform::sample()).map_err(PyValueError::new_err)?;
    Ok(outcomes.into_iter().map(|o| (o.name.to_string(), o.cases, o.failures)).collect())
}

#[pymodule]
fn droidsec_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyState>()?;
    m.add_class::<PyPlatform>()?;
    m.add_function(wrap_pyfunction!(step, m)?)?;
    m.add_function(wrap_pyfunction!(check_validity, m)?)?;
    m.add_function(wrap_pyfunction!(app_has_permission, m)?)?;
    m.add_function(wrap_pyfunction!(run_trace, m)?)?;
    m.add_function(wrap_pyfunction!(gen_valid_state, m)?)?;
    m.add_function(wrap_pyfunction!(run_props, m)?)?;
    m.add("PROPERTY_NAMES", propsuite::PROPERTY_NAMES.to_vec())?;
    Ok(())
}
