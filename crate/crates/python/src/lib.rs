//! Python bindings: `import diffscope`.

use std::str::FromStr;

use diffscope_core::analyzer;
use diffscope_core::diff::{self as core_diff, AlgorithmId, Edit, NormalizationFlags};
use diffscope_core::patch::{build_hunks, render_side_by_side, render_unified, DEFAULT_CONTEXT};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict, PyList};

/// File contents given as `bytes` or `str`.
#[derive(FromPyObject)]
enum Content {
    Bytes(Vec<u8>),
    Text(String),
}

impl Content {
    fn bytes(&self) -> &[u8] {
        match self {
            Content::Bytes(b) => b,
            Content::Text(s) => s.as_bytes(),
        }
    }
}

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn algorithm(name: &str) -> PyResult<AlgorithmId> {
    AlgorithmId::from_str(name).map_err(err)
}

fn flags(ignore_whitespace: bool, ignore_blank_lines: bool) -> NormalizationFlags {
    NormalizationFlags {
        ignore_whitespace,
        ignore_blank_lines,
    }
}

/// A file split into lines.
#[pyclass(frozen, module = "diffscope")]
struct Sequence {
    inner: core_diff::Sequence,
}

#[pymethods]
impl Sequence {
    /// Raw lines without terminators.
    fn lines<'py>(&self, py: Python<'py>) -> Vec<Bound<'py, PyBytes>> {
        self.inner.tokens().iter().map(|t| PyBytes::new(py, t.raw())).collect()
    }

    /// Comparison keys, after whitespace normalization.
    fn keys<'py>(&self, py: Python<'py>) -> Vec<Bound<'py, PyBytes>> {
        self.inner.tokens().iter().map(|t| PyBytes::new(py, t.key())).collect()
    }

    #[getter]
    fn missing_trailing_newline(&self) -> bool {
        self.inner.missing_trailing_newline()
    }

    fn to_bytes<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &self.inner.to_bytes())
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Sequence(<{} lines>)", self.inner.len())
    }
}

type Record<'py> = (&'static str, Option<usize>, Option<usize>, Bound<'py, PyBytes>);

/// Edit script produced by `diff`.
#[pyclass(frozen, module = "diffscope")]
struct EditScript {
    inner: core_diff::EditScript,
    old: core_diff::Sequence,
    algorithm: AlgorithmId,
}

#[pymethods]
impl EditScript {
    #[getter]
    fn algorithm(&self) -> &'static str {
        self.algorithm.name()
    }

    #[getter]
    fn inserts(&self) -> usize {
        self.inner.inserts()
    }

    #[getter]
    fn deletes(&self) -> usize {
        self.inner.deletes()
    }

    #[getter]
    fn old_len(&self) -> usize {
        self.inner.old_len
    }

    #[getter]
    fn new_len(&self) -> usize {
        self.inner.new_len
    }

    fn is_identity(&self) -> bool {
        self.inner.is_identity()
    }

    /// `(op, old_pos, new_pos, line)` tuples; `op` is `"="`, `"-"` or `"+"`,
    /// positions are 1-based or `None`.
    fn records<'py>(&self, py: Python<'py>) -> Vec<Record<'py>> {
        self.inner
            .records
            .iter()
            .map(|r| {
                let op = match r {
                    Edit::Equal { .. } => "=",
                    Edit::Delete { .. } => "-",
                    Edit::Insert { .. } => "+",
                };
                (op, r.old_pos(), r.new_pos(), PyBytes::new(py, r.line().raw()))
            })
            .collect()
    }

    #[pyo3(signature = (context = DEFAULT_CONTEXT, old_path = "a", new_path = "b"))]
    fn unified<'py>(&self, py: Python<'py>, context: usize, old_path: &str, new_path: &str) -> Bound<'py, PyBytes> {
        let hunks = build_hunks(&self.inner, context);
        if hunks.is_empty() {
            return PyBytes::new(py, b"");
        }
        PyBytes::new(py, &render_unified(&hunks, old_path, new_path))
    }

    /// Rebuilds the new file from the old one.
    fn apply<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyBytes>> {
        let rebuilt = core_diff::apply_script(&self.old, &self.inner).map_err(err)?;
        Ok(PyBytes::new(py, &rebuilt.to_bytes()))
    }

    fn __len__(&self) -> usize {
        self.inner.records.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "EditScript(algorithm={:?}, inserts={}, deletes={})",
            self.algorithm.name(),
            self.inner.inserts(),
            self.inner.deletes()
        )
    }
}

#[pyfunction]
#[pyo3(signature = (content, ignore_whitespace = false, ignore_blank_lines = false))]
fn split_lines(content: Content, ignore_whitespace: bool, ignore_blank_lines: bool) -> Sequence {
    Sequence {
        inner: core_diff::split_lines(content.bytes(), flags(ignore_whitespace, ignore_blank_lines)),
    }
}

#[pyfunction]
#[pyo3(signature = (old, new, algorithm = "myers", ignore_whitespace = false, ignore_blank_lines = false))]
fn diff(
    old: Content,
    new: Content,
    algorithm: &str,
    ignore_whitespace: bool,
    ignore_blank_lines: bool,
) -> PyResult<EditScript> {
    let alg = self::algorithm(algorithm)?;
    let f = flags(ignore_whitespace, ignore_blank_lines);
    let old = core_diff::split_lines(old.bytes(), f);
    let new = core_diff::split_lines(new.bytes(), f);
    Ok(EditScript {
        inner: core_diff::diff(&old, &new, alg),
        old,
        algorithm: alg,
    })
}

fn side<'py>(py: Python<'py>, s: &analyzer::FileSide) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("nla", s.metrics.nla)?;
    d.set_item("nld", s.metrics.nld)?;
    let locs = |set: &std::collections::BTreeSet<analyzer::Location>| -> PyResult<Bound<'py, PyList>> {
        PyList::new(py, set.iter().map(|(p, k)| (*p, PyBytes::new(py, k))))
    };
    d.set_item("added", locs(&s.locations.added)?)?;
    d.set_item("deleted", locs(&s.locations.deleted)?)?;
    Ok(d)
}

/// Runs two algorithms on one file pair and reports whether their churn
/// metrics and change locations agree.
#[pyfunction]
#[pyo3(signature = (old, new, algorithms = ("myers", "histogram"), ignore_whitespace = false,
                    ignore_blank_lines = false, side_by_side = false, width = 40))]
#[allow(clippy::too_many_arguments)]
fn compare<'py>(
    py: Python<'py>,
    old: Content,
    new: Content,
    algorithms: (&str, &str),
    ignore_whitespace: bool,
    ignore_blank_lines: bool,
    side_by_side: bool,
    width: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let (a, b) = (algorithm(algorithms.0)?, algorithm(algorithms.1)?);
    let f = flags(ignore_whitespace, ignore_blank_lines);
    let old = core_diff::split_lines(old.bytes(), f);
    let new = core_diff::split_lines(new.bytes(), f);
    let (sa, sb) = (core_diff::diff(&old, &new, a), core_diff::diff(&old, &new, b));
    let v = analyzer::compare_file(&sa, &sb, "").map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("algorithms", (a.name(), b.name()))?;
    d.set_item("metrics_equal", v.metrics_equal)?;
    d.set_item("locations_equal", v.locations_equal)?;
    d.set_item("a", side(py, &v.a)?)?;
    d.set_item("b", side(py, &v.b)?)?;
    if side_by_side {
        d.set_item("side_by_side", render_side_by_side(&sa, &sb, width).map_err(err)?)?;
    }
    Ok(d)
}

/// Length of the longest common subsequence of the two files' lines, by
/// dynamic programming. Refuses inputs above a million table cells.
#[pyfunction]
#[pyo3(signature = (old, new, ignore_whitespace = false))]
fn lcs_length(old: Content, new: Content, ignore_whitespace: bool) -> PyResult<usize> {
    let f = flags(ignore_whitespace, false);
    let old = core_diff::split_lines(old.bytes(), f);
    let new = core_diff::split_lines(new.bytes(), f);
    core_diff::lcs_length_oracle(&old, &new).map_err(err)
}

#[pyfunction]
fn algorithms() -> Vec<&'static str> {
    AlgorithmId::ALL.iter().map(|a| a.name()).collect()
}

#[pymodule]
fn diffscope(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Sequence>()?;
    m.add_class::<EditScript>()?;
    m.add_function(wrap_pyfunction!(split_lines, m)?)?;
    m.add_function(wrap_pyfunction!(diff, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add_function(wrap_pyfunction!(lcs_length, m)?)?;
    m.add_function(wrap_pyfunction!(algorithms, m)?)?;
    Ok(())
}
