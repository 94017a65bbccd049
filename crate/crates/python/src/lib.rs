//! Python bindings: graphs, the walk kernel, the SVM, AUC, metamorphic
//! testing campaigns and the evaluation protocol.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use mrkernel::cfg::{default_similarity_table, emit_graph_file, parse_graph_file};
use mrkernel::corpus::{build_bundled_corpus, bundled_cfgs};
use mrkernel::eval::{self, ExperimentConfig};
use mrkernel::kernel::{self, KernelParams, DEFAULT_MAX_LEN};
use mrkernel::matrix::Matrix;
use mrkernel::minilang::{compile, parse_source, Interpreter, Value};
use mrkernel::mt::{mini_subjects, run_campaigns, MetamorphicRelation, MtConfig, Subject};
use mrkernel::svm::{self, SvmParams, DEFAULT_MAX_PASSES, DEFAULT_TOLERANCE};

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A control-flow graph.
#[pyclass(name = "Cfg", frozen, from_py_object)]
#[derive(Clone)]
struct PyCfg(mrkernel::cfg::Cfg);

#[pymethods]
impl PyCfg {
    /// Parses a graph file.
    #[staticmethod]
    fn from_dot(text: &str) -> PyResult<Self> {
        parse_graph_file(text).map(PyCfg).map_err(err)
    }

    fn to_dot(&self) -> String {
        emit_graph_file(&self.0)
    }

    #[getter]
    fn name(&self) -> String {
        self.0.name().to_string()
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.0.labels().iter().map(|l| l.to_string()).collect()
    }

    #[getter]
    fn edges(&self) -> Vec<(usize, usize)> {
        self.0.edges().to_vec()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("Cfg({:?}, {} nodes, {} edges)", self.0.name(), self.0.len(), self.0.edges().len())
    }
}

fn params(lam: f64, max_len: usize, normalize: bool) -> PyResult<KernelParams> {
    KernelParams::new(lam, max_len, normalize).map_err(err)
}

/// Compiles mini-language source into one graph per function.
#[pyfunction]
fn compile_source(source: &str) -> PyResult<Vec<PyCfg>> {
    let program = parse_source(source).map_err(err)?;
    Ok(compile(&program).functions().iter().map(|f| PyCfg(f.to_cfg())).collect())
}

/// Graphs of the bundled corpus, sorted by name.
#[pyfunction]
fn bundled_graphs() -> Vec<PyCfg> {
    bundled_cfgs().into_iter().map(PyCfg).collect()
}

/// Bundled corpus labels as `{category: [+1/-1 per function]}` plus the names.
#[pyfunction]
fn bundled_labels() -> (Vec<String>, std::collections::BTreeMap<String, Vec<i8>>) {
    let ds = build_bundled_corpus();
    let labels = mrkernel::mt::Category::ALL
        .iter()
        .map(|c| (c.to_string(), ds.labels(*c).to_vec()))
        .collect();
    (ds.names().to_vec(), labels)
}

/// Random walk kernel value of two graphs under the default similarity table.
#[pyfunction]
#[pyo3(signature = (a, b, lam = 0.9, max_len = DEFAULT_MAX_LEN, normalize = false))]
fn walk_kernel(a: &PyCfg, b: &PyCfg, lam: f64, max_len: usize, normalize: bool) -> PyResult<f64> {
    let p = params(lam, max_len, normalize)?;
    Ok(kernel::kernel(&a.0, &b.0, &default_similarity_table(), &p))
}

/// Gram matrix of a list of graphs.
#[pyclass(name = "GramMatrix", frozen)]
struct PyGram(kernel::GramMatrix);

#[pymethods]
impl PyGram {
    #[new]
    #[pyo3(signature = (graphs, lam = 0.9, max_len = DEFAULT_MAX_LEN, normalize = false))]
    fn new(graphs: Vec<PyCfg>, lam: f64, max_len: usize, normalize: bool) -> PyResult<Self> {
        let p = params(lam, max_len, normalize)?;
        let cfgs: Vec<_> = graphs.into_iter().map(|g| g.0).collect();
        kernel::gram(&cfgs, &default_similarity_table(), &p).map(PyGram).map_err(err)
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        kernel::GramMatrix::from_text(text).map(PyGram).map_err(err)
    }

    fn to_text(&self) -> String {
        self.0.to_text()
    }

    #[getter]
    fn names(&self) -> Vec<String> {
        self.0.names().to_vec()
    }

    fn to_list(&self) -> Vec<Vec<f64>> {
        (0..self.0.len()).map(|i| self.0.row(i).to_vec()).collect()
    }

    fn eigen_range(&self) -> (f64, f64) {
        self.0.eigen_range()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

/// A trained precomputed-kernel SVM.
#[pyclass(name = "SvmModel", frozen)]
struct PySvm(svm::SvmModel);

#[pymethods]
impl PySvm {
    /// Trains on a square kernel matrix and +1/-1 labels.
    #[staticmethod]
    #[pyo3(signature = (gram, labels, c = 1.0, tolerance = DEFAULT_TOLERANCE))]
    fn train(gram: Vec<Vec<f64>>, labels: Vec<i8>, c: f64, tolerance: f64) -> PyResult<Self> {
        let p = SvmParams::new(c, tolerance, DEFAULT_MAX_PASSES).map_err(err)?;
        svm::train(&gram, &labels, &p).map(PySvm).map_err(err)
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        svm::SvmModel::from_text(text).map(PySvm).map_err(err)
    }

    fn to_text(&self) -> String {
        self.0.to_text()
    }

    /// Decision values of rows holding kernel values against every training instance.
    fn decision_values(&self, rows: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
        self.0.decision_values(&rows).map_err(err)
    }

    fn predict(&self, rows: Vec<Vec<f64>>) -> PyResult<Vec<i8>> {
        Ok(svm::predict(&self.decision_values(rows)?))
    }

    #[getter]
    fn bias(&self) -> f64 {
        self.0.bias()
    }

    #[getter]
    fn alphas(&self) -> Vec<f64> {
        self.0.alphas()
    }
}

/// Area under the ROC curve of positive and negative scores.
#[pyfunction]
fn auc(pos: Vec<f64>, neg: Vec<f64>) -> PyResult<f64> {
    eval::auc(&pos, &neg).map_err(err)
}

#[derive(FromPyObject)]
enum ArgIn {
    Bool(bool),
    Int(i64),
    Real(f64),
    Matrix(Vec<Vec<f64>>),
}

#[derive(IntoPyObject)]
enum ValueOut {
    Int(i64),
    Real(f64),
    Bool(bool),
    Matrix(Vec<Vec<f64>>),
}

fn to_matrix(rows: &[Vec<f64>]) -> PyResult<Matrix> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(err("matrix rows differ in length"));
    }
    Matrix::new(rows.len(), cols, rows.concat()).map_err(err)
}

/// Runs function `name` of a mini-language program.
#[pyfunction]
fn run_function(source: &str, name: &str, args: Vec<ArgIn>) -> PyResult<ValueOut> {
    let program = compile(&parse_source(source).map_err(err)?);
    let values = args
        .iter()
        .map(|a| {
            Ok(match a {
                ArgIn::Bool(b) => Value::Bool(*b),
                ArgIn::Int(v) => Value::Int(*v),
                ArgIn::Real(v) => Value::Real(*v),
                ArgIn::Matrix(rows) => Value::Matrix(to_matrix(rows)?),
            })
        })
        .collect::<PyResult<Vec<_>>>()?;
    Ok(match Interpreter::new(&program).call(name, values).map_err(err)? {
        Value::Int(v) => ValueOut::Int(v),
        Value::Real(v) => ValueOut::Real(v),
        Value::Bool(b) => ValueOut::Bool(b),
        Value::Matrix(m) => ValueOut::Matrix(m.data().chunks(m.cols().max(1)).map(<[f64]>::to_vec).collect()),
    })
}

/// Runs every relation against each function of a program and returns
/// `(function, category, positive)` rows.
#[pyfunction]
#[pyo3(signature = (source, seed = 0, trials = None))]
fn mt_labels(source: &str, seed: u64, trials: Option<usize>) -> PyResult<Vec<(String, String, bool)>> {
    let program = parse_source(source).map_err(err)?;
    let subjects = mini_subjects(&program).map_err(err)?;
    let refs: Vec<&dyn Subject> = subjects.iter().map(|s| s as &dyn Subject).collect();
    let mut config = MtConfig::default();
    if let Some(t) = trials {
        config.trials = t;
    }
    let results = run_campaigns(&refs, &MetamorphicRelation::ALL, &config, seed).map_err(err)?;
    Ok(results
        .into_iter()
        .flat_map(|r| {
            let name = r.subject;
            r.labels.into_iter().map(move |(c, l)| (name.clone(), c.to_string(), l))
        })
        .collect())
}

/// Runs the repeated train/validation/test protocol on the bundled corpus
/// and returns the report as a dict.
#[pyfunction]
#[pyo3(signature = (repetitions = 10, base_seed = 0))]
fn evaluate_bundled(py: Python<'_>, repetitions: usize, base_seed: u64) -> PyResult<Py<PyAny>> {
    let config = ExperimentConfig {
        repetitions,
        base_seed,
        ..ExperimentConfig::default()
    };
    let ds = build_bundled_corpus();
    let report = py
        .detach(|| eval::run_experiment(&ds, &default_similarity_table(), &config))
        .map_err(err)?;
    let json = py.import("json")?.call_method1("loads", (report.to_json(),))?;
    Ok(json.unbind())
}

#[pymodule]
#[pyo3(name = "mrkernel")]
fn mrkernel_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCfg>()?;
    m.add_class::<PyGram>()?;
    m.add_class::<PySvm>()?;
    m.add_function(wrap_pyfunction!(compile_source, m)?)?;
    m.add_function(wrap_pyfunction!(bundled_graphs, m)?)?;
    m.add_function(wrap_pyfunction!(bundled_labels, m)?)?;
    m.add_function(wrap_pyfunction!(walk_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(auc, m)?)?;
    m.add_function(wrap_pyfunction!(run_function, m)?)?;
    m.add_function(wrap_pyfunction!(mt_labels, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_bundled, m)?)?;
    Ok(())
}
