use std::sync::Arc;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use coclass_frame::frame::{self, GroupElt};
use coclass_frame::liering::{jacobi_exponent as lambda_of, jacobi_work_prec};
use coclass_frame::suites::{self, SuiteConfig};
use coclass_frame::{CycElt, Error, GammaCoeffs, LieElt, LieRingSpec, PrimeContext, Valuation};

fn err(e: Error) -> PyErr {
    if e.is_resource_limit() {
        PyRuntimeError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn gamma(p: u64, i: u32, coeffs: &[i64], work_prec: Option<u32>) -> PyResult<GammaCoeffs> {
    let ctx = PrimeContext::new(p, work_prec.unwrap_or(jacobi_work_prec(p, i))).map_err(err)?;
    GammaCoeffs::from_ints(&ctx, i, coeffs).map_err(err)
}

fn valuation_pair(v: Valuation) -> (u32, bool) {
    (v.bound(), v.is_exact())
}

/// Jacobi exponent `(value, exact)` of `L_i(γ)`.
#[pyfunction]
#[pyo3(signature = (p, i, coeffs, work_prec=None))]
fn jacobi_exponent(p: u64, i: u32, coeffs: Vec<i64>, work_prec: Option<u32>) -> PyResult<(u32, bool)> {
    let g = gamma(p, i, &coeffs, work_prec)?;
    Ok(valuation_pair(lambda_of(&g, i).map_err(err)?))
}

#[pyfunction]
fn in_hhat(p: u64, i: u32, coeffs: Vec<i64>) -> PyResult<bool> {
    let g = gamma(p, i, &coeffs, None)?;
    coclass_frame::in_hhat(&g, i).map_err(err)
}

/// Frame tree as a JSON string.
#[pyfunction]
#[pyo3(signature = (p, i, m_max, coeff_mod=1, budget=10_000_000))]
fn enumerate_frame(p: u64, i: u32, m_max: u32, coeff_mod: u32, budget: u128) -> PyResult<String> {
    let ctx = PrimeContext::new(p, jacobi_work_prec(p, i).max(m_max + 2 * (p as u32 - 1))).map_err(err)?;
    Ok(frame::enumerate_frame(&ctx, i, m_max, coeff_mod, budget).map_err(err)?.to_json_string())
}

/// Frame tree in DOT format.
#[pyfunction]
#[pyo3(signature = (p, i, m_max, coeff_mod=1, budget=10_000_000))]
fn frame_dot(p: u64, i: u32, m_max: u32, coeff_mod: u32, budget: u128) -> PyResult<String> {
    let ctx = PrimeContext::new(p, jacobi_work_prec(p, i).max(m_max + 2 * (p as u32 - 1))).map_err(err)?;
    Ok(frame::enumerate_frame(&ctx, i, m_max, coeff_mod, budget).map_err(err)?.to_dot())
}

/// Verification suites; JSON list of results.
#[pyfunction]
#[pyo3(signature = (p, seed=1, samples=200))]
fn verify(py: Python<'_>, p: u64, seed: u64, samples: usize) -> PyResult<String> {
    let cfg = SuiteConfig { primes: vec![p], seed, samples, ..SuiteConfig::default() };
    let results = py.detach(|| suites::run_all(&cfg)).map_err(err)?;
    serde_json::to_string(&results).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pyclass(name = "LieElement", frozen, eq, hash, skip_from_py_object)]
#[derive(Clone, PartialEq, Eq, Hash)]
struct PyLieElement(LieElt);

#[pymethods]
impl PyLieElement {
    /// κ-adic digits of the cofactor `y` with `x = κ^i y`.
    fn digits(&self) -> Vec<u64> {
        self.0.cofactor().digits().to_vec()
    }

    /// `(value, exact)` of the κ-valuation of `x`.
    fn valuation(&self) -> (u32, bool) {
        valuation_pair(self.0.valuation())
    }

    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    fn bracket(&self, other: &PyLieElement) -> PyResult<PyLieElement> {
        Ok(PyLieElement(self.0.bracket(&other.0).map_err(err)?))
    }

    fn __add__(&self, other: &PyLieElement) -> PyResult<PyLieElement> {
        Ok(PyLieElement(self.0.add(&other.0).map_err(err)?))
    }

    fn __sub__(&self, other: &PyLieElement) -> PyResult<PyLieElement> {
        Ok(PyLieElement(self.0.sub(&other.0).map_err(err)?))
    }

    fn __neg__(&self) -> PyLieElement {
        PyLieElement(self.0.neg())
    }

    fn __mul__(&self, n: i64) -> PyLieElement {
        PyLieElement(self.0.scale(n))
    }

    fn __repr__(&self) -> String {
        format!("LieElement({:?})", self.0.cofactor().digits())
    }
}

/// The Lie ring `L_{i,m}(γ)`; `m` defaults to the Jacobi exponent.
#[pyclass(name = "LieRing", frozen)]
struct PyLieRing(Arc<LieRingSpec>);

#[pymethods]
impl PyLieRing {
    #[new]
    #[pyo3(signature = (p, i, coeffs, m=None, work_prec=None))]
    fn new(p: u64, i: u32, coeffs: Vec<i64>, m: Option<u32>, work_prec: Option<u32>) -> PyResult<Self> {
        let g = gamma(p, i, &coeffs, work_prec)?;
        let lam = lambda_of(&g, i).map_err(err)?;
        let spec = LieRingSpec::with_lambda(&g, m.unwrap_or(lam.bound()), lam).map_err(err)?;
        Ok(PyLieRing(spec))
    }

    #[getter]
    fn p(&self) -> u64 {
        self.0.p()
    }

    #[getter]
    fn i(&self) -> u32 {
        self.0.i()
    }

    #[getter]
    fn m(&self) -> u32 {
        self.0.m()
    }

    /// `(value, exact)` of the Jacobi exponent.
    #[getter]
    fn jacobi(&self) -> (u32, bool) {
        valuation_pair(self.0.lambda())
    }

    /// Lower central series exponents and class.
    fn lcs(&self) -> PyResult<(Vec<u32>, u32)> {
        let prof = self.0.lcs_profile().map_err(err)?;
        Ok((prof.exponents, prof.class))
    }

    fn basis(&self) -> Vec<PyLieElement> {
        self.0.basis().into_iter().map(PyLieElement).collect()
    }

    fn zero(&self) -> PyLieElement {
        PyLieElement(self.0.zero())
    }

    /// The element `κ^i · Σ d_j κ^j`.
    fn element(&self, digits: Vec<i64>) -> PyResult<PyLieElement> {
        let ctx = self.0.ctx();
        let d: Vec<i128> = digits.iter().map(|&x| x as i128).collect();
        let y = CycElt::from_digits(ctx, &d, ctx.work_prec()).map_err(err)?;
        Ok(PyLieElement(self.0.from_cofactor(&y).map_err(err)?))
    }
}

#[pyclass(name = "GroupElement", frozen, eq, hash, skip_from_py_object)]
#[derive(Clone, PartialEq, Eq, Hash)]
struct PyGroupElement(GroupElt);

#[pymethods]
impl PyGroupElement {
    #[getter]
    fn g(&self) -> PyLieElement {
        PyLieElement(self.0.g.clone())
    }

    #[getter]
    fn t(&self) -> u64 {
        self.0.t
    }

    fn __repr__(&self) -> String {
        format!("GroupElement({:?}, theta^{})", self.0.g.cofactor().digits(), self.0.t)
    }
}

/// The group `S_{i,m}(γ) = 𝔾(L) ⋊ ⟨θ⟩`.
#[pyclass(name = "FrameGroup", frozen)]
struct PyFrameGroup(frame::FrameGroup);

#[pymethods]
impl PyFrameGroup {
    #[new]
    fn new(ring: &PyLieRing) -> PyResult<Self> {
        Ok(PyFrameGroup(frame::FrameGroup::new(&ring.0).map_err(err)?))
    }

    #[getter]
    fn order_exp(&self) -> u32 {
        self.0.order_exp()
    }

    #[getter]
    fn classification(&self) -> String {
        self.0.classification().to_string()
    }

    /// `(exponents, class, maximal_class)` of the lower central series.
    fn lcs(&self) -> PyResult<(Vec<u32>, u32, bool)> {
        let l = self.0.s_group_lcs().map_err(err)?;
        Ok((l.exponents, l.class, l.maximal_class))
    }

    fn identity(&self) -> PyGroupElement {
        PyGroupElement(self.0.identity())
    }

    fn theta(&self) -> PyGroupElement {
        PyGroupElement(self.0.theta_gen())
    }

    #[pyo3(signature = (g, t=0))]
    fn element(&self, g: &PyLieElement, t: i64) -> PyResult<PyGroupElement> {
        Ok(PyGroupElement(self.0.elt(g.0.clone(), t).map_err(err)?))
    }

    fn multiply(&self, x: &PyGroupElement, y: &PyGroupElement) -> PyResult<PyGroupElement> {
        Ok(PyGroupElement(self.0.s_multiply(&x.0, &y.0).map_err(err)?))
    }

    fn inverse(&self, x: &PyGroupElement) -> PyGroupElement {
        PyGroupElement(self.0.s_inverse(&x.0))
    }

    fn commutator(&self, x: &PyGroupElement, y: &PyGroupElement) -> PyResult<PyGroupElement> {
        Ok(PyGroupElement(self.0.s_commutator(&x.0, &y.0).map_err(err)?))
    }

    fn power(&self, x: &PyGroupElement, n: u64) -> PyResult<PyGroupElement> {
        Ok(PyGroupElement(self.0.s_power(&x.0, n).map_err(err)?))
    }
}

#[pymodule]
fn coclass(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyLieRing>()?;
    m.add_class::<PyLieElement>()?;
    m.add_class::<PyFrameGroup>()?;
    m.add_class::<PyGroupElement>()?;
    m.add_function(wrap_pyfunction!(jacobi_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(in_hhat, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate_frame, m)?)?;
    m.add_function(wrap_pyfunction!(frame_dot, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
