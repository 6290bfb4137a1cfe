//! Python bindings: the oblivious RAM and map, the probability
//! calculator, and the shortest-path application.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyBytes;

fn err(e: horam::Error) -> PyErr {
    match e {
        horam::Error::Param(_) | horam::Error::Init(_) | horam::Error::Parse { .. } => {
            PyValueError::new_err(e.to_string())
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

/// Logical memory with a hidden access pattern.
#[pyclass]
struct Oram {
    inner: horam::oram::Oram,
}

#[pymethods]
impl Oram {
    #[new]
    #[pyo3(signature = (capacity, value_width=16, seed=0))]
    fn new(capacity: u64, value_width: usize, seed: u64) -> PyResult<Self> {
        let mut config = horam::oram::OramConfig::new(capacity, value_width);
        config.seed = seed;
        Ok(Oram { inner: horam::oram::Oram::init(config, &[]).map_err(err)? })
    }

    fn read<'py>(&mut self, py: Python<'py>, addr: u64) -> PyResult<Bound<'py, PyBytes>> {
        let v = self.inner.read(addr).map_err(err)?;
        Ok(PyBytes::new(py, &v))
    }

    fn write(&mut self, addr: u64, value: &[u8]) -> PyResult<()> {
        self.inner.write(addr, value).map_err(err)?;
        Ok(())
    }

    fn capacity(&self) -> u64 {
        self.inner.capacity()
    }

    fn snapshot<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &self.inner.snapshot())
    }

    #[staticmethod]
    fn restore(data: &[u8]) -> PyResult<Self> {
        Ok(Oram { inner: horam::oram::Oram::restore(data).map_err(err)? })
    }
}

/// Oblivious key-value map over arbitrary 64-bit keys.
#[pyclass]
struct OMap {
    inner: horam::oram::Oram,
}

#[pymethods]
impl OMap {
    #[new]
    #[pyo3(signature = (capacity, value_width=16, seed=0))]
    fn new(capacity: u64, value_width: usize, seed: u64) -> PyResult<Self> {
        let mut config = horam::oram::OramConfig::new(capacity, value_width);
        config.seed = seed;
        Ok(OMap { inner: horam::oram::Oram::new_map(config).map_err(err)? })
    }

    fn get<'py>(&mut self, py: Python<'py>, key: u64) -> PyResult<Option<Bound<'py, PyBytes>>> {
        Ok(self.inner.map_get(key).map_err(err)?.map(|v| PyBytes::new(py, &v)))
    }

    fn put(&mut self, key: u64, value: &[u8]) -> PyResult<()> {
        self.inner.map_put(key, value).map_err(err)
    }
}

/// Minimal bucket capacity meeting the overflow target 2^delta_log2.
#[pyfunction]
fn tight_bucket_size(n: u64, m: u64, delta_log2: i32) -> u64 {
    horam::probcalc::tight_bucket_size(n, m, horam::probcalc::LogProb::pow2(delta_log2))
}

/// log2 of the Cuckoo construction-failure bound.
#[pyfunction]
fn cuckoo_fail_log2(n: u64, k: u32, m: u64) -> f64 {
    horam::probcalc::cuckoo_fail_prob(n, k, m).log2
}

/// Smallest hash count in [3, 8] meeting the failure target.
#[pyfunction]
fn min_hash_count(n: u64, delta_log2: i32) -> PyResult<u32> {
    horam::probcalc::min_hash_count(n, horam::probcalc::LogProb::pow2(delta_log2)).map_err(err)
}

/// Oblivious single-source shortest paths; `None` marks unreachable.
#[pyfunction]
#[pyo3(signature = (graph_text, source, seed=0))]
fn sssp(graph_text: &str, source: usize, seed: u64) -> PyResult<Vec<Option<u64>>> {
    let g = horam::sssp::Graph::parse(graph_text).map_err(err)?;
    let d = horam::sssp::oblivious_sssp(&g, source, seed).map_err(err)?;
    Ok(d.into_iter()
        .map(|x| if x == horam::sssp::INFINITY { None } else { Some(x) })
        .collect())
}

#[pymodule]
fn horam_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Oram>()?;
    m.add_class::<OMap>()?;
    m.add_function(wrap_pyfunction!(tight_bucket_size, m)?)?;
    m.add_function(wrap_pyfunction!(cuckoo_fail_log2, m)?)?;
    m.add_function(wrap_pyfunction!(min_hash_count, m)?)?;
    m.add_function(wrap_pyfunction!(sssp, m)?)?;
    Ok(())
}
