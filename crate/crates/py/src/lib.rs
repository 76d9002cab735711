//! Python bindings: `kgsc.compile(rules, ontology)` returns a `Compilation` with the
//! emitters, interpreter and oracle hanging off it.

use kgsc_core::backend::{emit_pseudocode, emit_solidity, PseudoOptions, SolidityOptions};
use kgsc_core::interp::{execute_contract, generate_fixture, oracle_check, Fixture};
use kgsc_core::ir::{deserialize, serialize, validate as validate_ir};
use kgsc_core::logic::LogicOptions;
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

create_exception!(kgsc, KgscError, PyValueError, "Compilation, validation or runtime failure; the message starts with the error code.");

fn err(e: kgsc_core::Error) -> PyErr {
    KgscError::new_err(e.to_string())
}

#[pyclass(frozen, module = "kgsc")]
struct Compilation {
    inner: kgsc_core::compile::Compilation,
}

#[pymethods]
impl Compilation {
    /// Number of rules, equal to the number of rule graphs.
    #[getter]
    fn rule_count(&self) -> usize {
        self.inner.graphs.len()
    }

    fn bridge_json(&self) -> String {
        serialize(&self.inner.program)
    }

    /// `listing=True` drops event emission and request types, as in the reference listings.
    #[pyo3(signature = (listing = false))]
    fn pseudocode(&self, listing: bool) -> String {
        let opts = if listing { PseudoOptions::default() } else { PseudoOptions::full() };
        emit_pseudocode(&self.inner.program, opts)
    }

    /// Returns `(source, manifest_json)`.
    #[pyo3(signature = (contract_name = "Contract1"))]
    fn solidity(&self, contract_name: &str) -> PyResult<(String, String)> {
        let out = emit_solidity(&self.inner.program, &SolidityOptions { contract_name: contract_name.into() })
            .map_err(err)?;
        let manifest = serde_json::to_string(&out.manifest).expect("manifest serializes");
        Ok((out.source, manifest))
    }

    fn dot(&self) -> String {
        self.inner.graphs.iter().map(|g| g.to_dot()).collect()
    }

    /// Runs the program on a fixture; returns the transcript as JSON lines.
    fn execute(&self, fixture_json: &str) -> PyResult<String> {
        let fx = Fixture::from_json(fixture_json).map_err(err)?;
        Ok(execute_contract(&self.inner.program, &fx).map_err(err)?.to_json_lines())
    }

    /// Runs the program and the naive evaluator; returns `(matched, report, transcript)`.
    fn oracle_check(&self, fixture_json: &str) -> PyResult<(bool, String, String)> {
        let fx = Fixture::from_json(fixture_json).map_err(err)?;
        let (t, _, cmp) = oracle_check(&self.inner, &fx).map_err(err)?;
        Ok((cmp.is_match(), cmp.report(), t.to_json_lines()))
    }

    fn generate_fixture(&self, seed: u64) -> PyResult<String> {
        Ok(generate_fixture(&self.inner, seed).map_err(err)?.to_json())
    }
}

#[pyfunction]
#[pyo3(signature = (rules, ontology, requests = true))]
fn compile(rules: &str, ontology: &str, requests: bool) -> PyResult<Compilation> {
    let inner = kgsc_core::compile::compile(rules, ontology, LogicOptions { requests }).map_err(err)?;
    Ok(Compilation { inner })
}

/// The bundled insurance rules and ontology, compiled.
#[pyfunction]
fn running_example() -> PyResult<Compilation> {
    use kgsc_core::examples::{INSURANCE_ONTOLOGY, INSURANCE_RULES};
    compile(INSURANCE_RULES, INSURANCE_ONTOLOGY, true)
}

/// Diagnostics for a bridge IR document; empty when it is valid.
#[pyfunction]
fn validate(bridge_json: &str) -> PyResult<Vec<String>> {
    let p = deserialize(bridge_json).map_err(err)?;
    Ok(validate_ir(&p).iter().map(|d| d.to_string()).collect())
}

/// Runs a serialized bridge program on a fixture without the rules at hand.
#[pyfunction]
fn execute(bridge_json: &str, fixture_json: &str) -> PyResult<String> {
    let p = deserialize(bridge_json).map_err(err)?;
    let fx = Fixture::from_json(fixture_json).map_err(err)?;
    Ok(execute_contract(&p, &fx).map_err(err)?.to_json_lines())
}

#[pymodule]
fn kgsc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("KgscError", m.py().get_type::<KgscError>())?;
    m.add_class::<Compilation>()?;
    m.add_function(wrap_pyfunction!(compile, m)?)?;
    m.add_function(wrap_pyfunction!(running_example, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(execute, m)?)?;
    Ok(())
}
