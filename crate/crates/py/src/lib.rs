//! Python bindings: scenario runs, reports, and a few state and phase-space
//! helpers. Dense matrices cross the boundary as nested lists.

use std::collections::BTreeMap;
use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use iontrap::hamiltonians::{coupling_constant as coupling, IonParams, LevelEnergies};
use iontrap::hilbert::{self, DensityOperator, HybridSpace, ModeLabel, ModeSpace, StateVector};
use iontrap::measurement;
use iontrap::output::write_report;
use iontrap::phasespace::{self, GridSpec, WignerGrid};
use iontrap::scenarios::{self, ScenarioConfig, ScenarioName, ScenarioReport};
use iontrap::C64;

fn value_error(e: iontrap::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

type GridTuple = (Vec<f64>, Vec<f64>, Vec<Vec<f64>>);

fn grid_tuple(w: &WignerGrid) -> GridTuple {
    let rows = (0..w.values.nrows())
        .map(|i| w.values.row(i).iter().copied().collect())
        .collect();
    (w.re_axis.clone(), w.im_axis.clone(), rows)
}

fn mode(dim: usize) -> PyResult<ModeSpace> {
    ModeSpace::new(dim, ModeLabel::X).map_err(value_error)
}

/// Single-mode density operator from a square nested list.
pub fn density_from_rows(rows: Vec<Vec<C64>>) -> PyResult<DensityOperator> {
    let dim = rows.len();
    if dim == 0 || rows.iter().any(|r| r.len() != dim) {
        return Err(PyValueError::new_err(
            "density matrix must be a non-empty square list of rows",
        ));
    }
    let matrix = DMatrix::from_fn(dim, dim, |i, j| rows[i][j]);
    DensityOperator::new(HybridSpace::single_mode(mode(dim)?), matrix).map_err(value_error)
}

fn pure_density(amplitudes: Vec<C64>) -> PyResult<DensityOperator> {
    let space = HybridSpace::single_mode(mode(amplitudes.len())?);
    let psi = StateVector::new(space, DVector::from_vec(amplitudes)).map_err(value_error)?;
    Ok(DensityOperator::from_pure(&psi))
}

/// Scenario configuration: defaults plus overrides.
#[pyclass(name = "Config", from_py_object)]
#[derive(Clone)]
pub struct PyConfig {
    inner: ScenarioConfig,
}

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (name, overrides = None))]
    fn new(name: &str, overrides: Option<BTreeMap<String, String>>) -> PyResult<Self> {
        let parsed: ScenarioName = name.parse().map_err(value_error)?;
        let mut inner = ScenarioConfig::new(parsed);
        for (k, v) in overrides.unwrap_or_default() {
            inner.set(&k, &v).map_err(value_error)?;
        }
        Ok(Self { inner })
    }

    #[getter]
    fn name(&self) -> &'static str {
        self.inner.name().as_str()
    }

    fn set(&mut self, key: &str, value: &str) -> PyResult<()> {
        self.inner.set(key, value).map_err(value_error)
    }

    fn get(&self, key: &str) -> PyResult<String> {
        self.inner.get(key).map(str::to_string).map_err(value_error)
    }

    fn entries(&self) -> Vec<(String, String)> {
        self.inner
            .entries()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    fn __repr__(&self) -> String {
        let body: Vec<String> = self.inner.entries().map(|(k, v)| format!("{k}={v}")).collect();
        format!("Config({}: {})", self.inner.name(), body.join(", "))
    }
}

/// Checks, scalars, series and grids from one scenario run.
#[pyclass(name = "Report")]
pub struct PyReport {
    inner: ScenarioReport,
}

#[pymethods]
impl PyReport {
    #[getter]
    fn scenario(&self) -> &'static str {
        self.inner.config.name().as_str()
    }

    #[getter]
    fn all_pass(&self) -> bool {
        self.inner.all_pass()
    }

    /// `(name, value, relation, threshold, pass)` per check.
    #[getter]
    fn checks(&self) -> Vec<(String, f64, &'static str, f64, bool)> {
        self.inner
            .checks
            .iter()
            .map(|c| (c.name.clone(), c.value, c.relation.symbol(), c.threshold, c.pass))
            .collect()
    }

    #[getter]
    fn scalars(&self) -> BTreeMap<String, f64> {
        self.inner.scalars.iter().map(|(k, v)| (k.clone(), *v)).collect()
    }

    #[getter]
    fn warnings(&self) -> Vec<String> {
        self.inner.warnings.clone()
    }

    fn table_names(&self) -> Vec<String> {
        self.inner.tables.iter().map(|t| t.name.clone()).collect()
    }

    /// Column name to values.
    fn table(&self, name: &str) -> PyResult<BTreeMap<String, Vec<f64>>> {
        let t = self
            .inner
            .table(name)
            .ok_or_else(|| PyValueError::new_err(format!("no table `{name}`")))?;
        Ok(t.columns.iter().map(|c| (c.name.clone(), c.values.clone())).collect())
    }

    fn grid_names(&self) -> Vec<String> {
        self.inner.grids.iter().map(|(n, _)| n.clone()).collect()
    }

    /// `(re_axis, im_axis, rows)` with `rows[i][j] = W(re[i] + i im[j])`.
    fn grid(&self, name: &str) -> PyResult<GridTuple> {
        let g = self
            .inner
            .grid(name)
            .ok_or_else(|| PyValueError::new_err(format!("no grid `{name}`")))?;
        Ok(grid_tuple(g))
    }

    /// Writes artifacts and manifest into `dir`; returns the manifest path.
    #[pyo3(signature = (dir, json = false))]
    fn write(&self, dir: PathBuf, json: bool) -> PyResult<String> {
        std::fs::create_dir_all(&dir).map_err(|e| PyValueError::new_err(format!("{}: {e}", dir.display())))?;
        let bundle = write_report(&self.inner, &dir, json).map_err(value_error)?;
        Ok(bundle.manifest_path().display().to_string())
    }

    fn __repr__(&self) -> String {
        format!("Report({}, all_pass={})", self.scenario(), self.all_pass())
    }
}

#[pyfunction]
fn scenario_names() -> Vec<&'static str> {
    ScenarioName::ALL.iter().map(|n| n.as_str()).collect()
}

/// `(key, default, help)` for every parameter of a scenario.
#[pyfunction]
fn scenario_params(name: &str) -> PyResult<Vec<(&'static str, &'static str, &'static str)>> {
    let parsed: ScenarioName = name.parse().map_err(value_error)?;
    Ok(parsed.params().iter().map(|p| (p.key, p.default, p.help)).collect())
}

#[pyfunction]
#[pyo3(signature = (name, overrides = None))]
fn run(name: &str, overrides: Option<BTreeMap<String, String>>) -> PyResult<PyReport> {
    run_config(&PyConfig::new(name, overrides)?)
}

#[pyfunction]
fn run_config(config: &PyConfig) -> PyResult<PyReport> {
    let inner = scenarios::run(&config.inner).map_err(value_error)?;
    Ok(PyReport { inner })
}

/// Magnitude of the effective Raman coupling.
#[pyfunction]
fn coupling_constant(epsilon: f64, rabi_x: f64, rabi_y: f64, delta: f64, m: u32, n: u32) -> PyResult<f64> {
    let params = IonParams {
        nu_x: 1.0,
        nu_y: 1.0,
        rabi_x,
        rabi_y,
        epsilon,
        delta,
        m,
        n,
        energies: LevelEnergies { a: 0.0, b: 0.0, c: 0.0 },
    };
    params.validate().map_err(value_error)?;
    Ok(coupling(&params).magnitude)
}

/// `(t_rx, t_ry)`.
#[pyfunction]
fn revival_estimate(beta: f64, gamma: f64, lam: f64) -> PyResult<(f64, f64)> {
    let r = phasespace::revival_estimate(beta, gamma, lam).map_err(value_error)?;
    Ok((r.t_rx, r.t_ry))
}

#[pyfunction]
fn coherent_state(alpha: C64, dim: usize) -> PyResult<Vec<C64>> {
    let psi = hilbert::coherent_state(&mode(dim)?, alpha).map_err(value_error)?;
    Ok(psi.amplitudes().iter().copied().collect())
}

#[pyfunction]
fn fock_state(n: usize, dim: usize) -> PyResult<Vec<C64>> {
    let psi = hilbert::fock_state(&mode(dim)?, n).map_err(value_error)?;
    Ok(psi.amplitudes().iter().copied().collect())
}

#[pyfunction]
fn purity(rho: Vec<Vec<C64>>) -> PyResult<f64> {
    Ok(measurement::purity(&density_from_rows(rho)?))
}

/// Wigner function of a single-mode density matrix on a square grid.
#[pyfunction]
#[pyo3(signature = (rho, half_extent = 4.0, points = 101))]
fn wigner(rho: Vec<Vec<C64>>, half_extent: f64, points: usize) -> PyResult<GridTuple> {
    let w =
        phasespace::wigner(&density_from_rows(rho)?, &GridSpec::square(half_extent, points)).map_err(value_error)?;
    Ok(grid_tuple(&w))
}

/// Wigner function of a pure single-mode state.
#[pyfunction]
#[pyo3(signature = (amplitudes, half_extent = 4.0, points = 101))]
fn wigner_pure(amplitudes: Vec<C64>, half_extent: f64, points: usize) -> PyResult<GridTuple> {
    let w =
        phasespace::wigner(&pure_density(amplitudes)?, &GridSpec::square(half_extent, points)).map_err(value_error)?;
    Ok(grid_tuple(&w))
}

/// `(min, negative_volume)` of the Wigner function of a pure state.
#[pyfunction]
#[pyo3(signature = (amplitudes, half_extent = 4.0, points = 101))]
fn negativity(amplitudes: Vec<C64>, half_extent: f64, points: usize) -> PyResult<(f64, f64)> {
    let w =
        phasespace::wigner(&pure_density(amplitudes)?, &GridSpec::square(half_extent, points)).map_err(value_error)?;
    Ok(phasespace::negativity(&w))
}

#[pymodule]
fn pyiontrap(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(scenario_names, m)?)?;
    m.add_function(wrap_pyfunction!(scenario_params, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    m.add_function(wrap_pyfunction!(coupling_constant, m)?)?;
    m.add_function(wrap_pyfunction!(revival_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(coherent_state, m)?)?;
    m.add_function(wrap_pyfunction!(fock_state, m)?)?;
    m.add_function(wrap_pyfunction!(purity, m)?)?;
    m.add_function(wrap_pyfunction!(wigner, m)?)?;
    m.add_function(wrap_pyfunction!(wigner_pure, m)?)?;
    m.add_function(wrap_pyfunction!(negativity, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
