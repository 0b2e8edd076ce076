//! Storage, ingestion, and elementary queries on sparse directed/bipartite
//! weighted graphs.
//!
//! Adjacency data is held in compressed sparse row form with a companion
//! column-oriented view built once at construction, so products with the
//! matrix and with its transpose are both cheap. Graphs are immutable after
//! construction and safe to share across threads.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum side length for operations that materialize a dense n×n product.
pub const DENSE_CAP: usize = 5000;

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphKind {
    /// Rows and columns index the same node set (senders and receivers).
    Directed,
    /// Rows and columns index disjoint node sets.
    Bipartite,
}

impl std::fmt::Display for GraphKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GraphKind::Directed => write!(f, "directed"),
            GraphKind::Bipartite => write!(f, "bipartite"),
        }
    }
}

/// Sparse real matrix in CSR form with a CSC companion view.
///
/// Values may be any finite nonzero reals; graph-specific positivity is
/// enforced by [`SparseGraph`]. Exact zeros are dropped at construction and
/// duplicate coordinates are summed.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    csc_values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from (row, column, value) triplets; duplicates are summed and
    /// entries that are (or sum to) exactly zero are dropped.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::InvalidArgument(
                "matrix dimensions must be positive".into(),
            ));
        }
        let mut sorted: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for &(i, j, v) in triplets {
            if i >= n_rows || j >= n_cols {
                return Err(Error::InvalidArgument(format!(
                    "triplet ({i}, {j}) outside a {n_rows}x{n_cols} matrix"
                )));
            }
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "non-finite value at ({i}, {j})"
                )));
            }
            sorted.push((i, j, v));
        }
        sorted.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));

        let mut row_ptr = vec![0usize; n_rows + 1];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut iter = sorted.into_iter().peekable();
        while let Some((i, j, mut v)) = iter.next() {
            while let Some(&(i2, j2, v2)) = iter.peek() {
                if i2 == i && j2 == j {
                    v += v2;
                    iter.next();
                } else {
                    break;
                }
            }
            if v != 0.0 {
                row_ptr[i + 1] += 1;
                col_idx.push(j);
                values.push(v);
            }
        }
        for i in 0..n_rows {
            row_ptr[i + 1] += row_ptr[i];
        }

        let mut m = SparseMatrix {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
            col_ptr: Vec::new(),
            row_idx: Vec::new(),
            csc_values: Vec::new(),
        };
        m.build_csc();
        Ok(m)
    }

    fn build_csc(&mut self) {
        let nnz = self.values.len();
        let mut col_ptr = vec![0usize; self.n_cols + 1];
        for &j in &self.col_idx {
            col_ptr[j + 1] += 1;
        }
        for j in 0..self.n_cols {
            col_ptr[j + 1] += col_ptr[j];
        }
        let mut row_idx = vec![0usize; nnz];
        let mut csc_values = vec![0.0f64; nnz];
        let mut cursor = col_ptr.clone();
        for i in 0..self.n_rows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                let slot = cursor[j];
                row_idx[slot] = i;
                csc_values[slot] = self.values[k];
                cursor[j] += 1;
            }
        }
        self.col_ptr = col_ptr;
        self.row_idx = row_idx;
        self.csc_values = csc_values;
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    /// Iterates stored entries as (row, column, value) in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_rows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    /// Row sums.
    pub fn row_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_rows];
        for i in 0..self.n_rows {
            out[i] = self.values[self.row_ptr[i]..self.row_ptr[i + 1]].iter().sum();
        }
        out
    }

    /// Column sums.
    pub fn col_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_cols];
        for j in 0..self.n_cols {
            out[j] = self.csc_values[self.col_ptr[j]..self.col_ptr[j + 1]].iter().sum();
        }
        out
    }

    /// y = A·x.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n_cols);
        assert_eq!(y.len(), self.n_rows);
        for i in 0..self.n_rows {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[i] = acc;
        }
    }

    /// y = Aᵀ·x, served from the column view.
    pub fn matvec_t(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n_rows);
        assert_eq!(y.len(), self.n_cols);
        for j in 0..self.n_cols {
            let mut acc = 0.0;
            for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                acc += self.csc_values[k] * x[self.row_idx[k]];
            }
            y[j] = acc;
        }
    }

    /// Applies A to a block of vectors stored as rows: out[r,·] = A·v[r,·].
    pub fn mul_rowblock(&self, v: &Array2<f64>) -> Array2<f64> {
        assert_eq!(v.ncols(), self.n_cols);
        let w = v.nrows();
        let mut out = Array2::zeros((w, self.n_rows));
        for r in 0..w {
            let src = v.row(r);
            let src = src.as_slice().expect("row-major block");
            let mut dst = out.row_mut(r);
            let dst = dst.as_slice_mut().expect("row-major block");
            self.matvec(src, dst);
        }
        out
    }

    /// Applies Aᵀ to a block of vectors stored as rows.
    pub fn t_mul_rowblock(&self, v: &Array2<f64>) -> Array2<f64> {
        assert_eq!(v.ncols(), self.n_rows);
        let w = v.nrows();
        let mut out = Array2::zeros((w, self.n_cols));
        for r in 0..w {
            let src = v.row(r);
            let src = src.as_slice().expect("row-major block");
            let mut dst = out.row_mut(r);
            let dst = dst.as_slice_mut().expect("row-major block");
            self.matvec_t(src, dst);
        }
        out
    }

    /// Rebuilds values in place through `f(row, col, value)`, preserving the
    /// sparsity pattern; both views are remapped consistently.
    pub fn map_values(&self, f: impl Fn(usize, usize, f64) -> f64) -> SparseMatrix {
        let mut out = self.clone();
        for i in 0..self.n_rows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                out.values[k] = f(i, self.col_idx[k], self.values[k]);
            }
        }
        for j in 0..self.n_cols {
            for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                out.csc_values[k] = f(self.row_idx[k], j, self.csc_values[k]);
            }
        }
        out
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.n_rows, self.n_cols));
        for (i, j, v) in self.iter() {
            out[(i, j)] = v;
        }
        out
    }
}

/// Sparse directed or bipartite weighted graph.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseGraph {
    matrix: SparseMatrix,
    kind: GraphKind,
}

impl SparseGraph {
    /// Builds a graph from triplets. Weights must be positive; exact zeros
    /// are dropped, negative or non-finite weights are rejected. Duplicate
    /// edges are summed.
    pub fn from_triplets(
        kind: GraphKind,
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        if kind == GraphKind::Directed && n_rows != n_cols {
            return Err(Error::InvalidArgument(format!(
                "directed graph requires a square adjacency, got {n_rows}x{n_cols}"
            )));
        }
        for &(i, j, v) in triplets {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "edge ({i}, {j}) has invalid weight {v}; weights must be positive"
                )));
            }
        }
        let matrix = SparseMatrix::from_triplets(n_rows, n_cols, triplets)?;
        Ok(SparseGraph { matrix, kind })
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    pub fn n_rows(&self) -> usize {
        self.matrix.n_rows()
    }

    pub fn n_cols(&self) -> usize {
        self.matrix.n_cols()
    }

    pub fn nnz(&self) -> usize {
        self.matrix.nnz()
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    /// Weighted out-degrees O_ii = Σ_k A_ik.
    pub fn out_degrees(&self) -> Vec<f64> {
        self.matrix.row_sums()
    }

    /// Weighted in-degrees P_jj = Σ_k A_kj.
    pub fn in_degrees(&self) -> Vec<f64> {
        self.matrix.col_sums()
    }

    pub fn total_weight(&self) -> f64 {
        self.matrix.values.iter().sum()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.matrix.iter()
    }

    /// AᵀA: entry (j₁, j₂) counts (by weight product) the nodes that point at
    /// both j₁ and j₂.
    pub fn common_parents(&self) -> Result<Array2<f64>> {
        let n = self.n_cols();
        if n > DENSE_CAP {
            return Err(Error::SizeCap(format!(
                "common_parents would allocate a {n}x{n} dense matrix (cap {DENSE_CAP})"
            )));
        }
        let mut out = Array2::zeros((n, n));
        for i in 0..self.n_rows() {
            let (cols, vals) = self.matrix.row(i);
            for (a, &j1) in cols.iter().enumerate() {
                for (b, &j2) in cols.iter().enumerate() {
                    out[(j1, j2)] += vals[a] * vals[b];
                }
            }
        }
        Ok(out)
    }

    /// AAᵀ: entry (i₁, i₂) counts (by weight product) the nodes that both i₁
    /// and i₂ point at.
    pub fn common_offspring(&self) -> Result<Array2<f64>> {
        let n = self.n_rows();
        if n > DENSE_CAP {
            return Err(Error::SizeCap(format!(
                "common_offspring would allocate a {n}x{n} dense matrix (cap {DENSE_CAP})"
            )));
        }
        let mut out = Array2::zeros((n, n));
        for j in 0..self.n_cols() {
            let span = self.matrix.col_ptr[j]..self.matrix.col_ptr[j + 1];
            let rows = &self.matrix.row_idx[span.clone()];
            let vals = &self.matrix.csc_values[span];
            for (a, &i1) in rows.iter().enumerate() {
                for (b, &i2) in rows.iter().enumerate() {
                    out[(i1, i2)] += vals[a] * vals[b];
                }
            }
        }
        Ok(out)
    }
}

/// Controls edge-list parsing.
#[derive(Clone, Debug)]
pub struct LoadOptions {
    /// `None` splits on any whitespace run; `Some(c)` splits on exactly `c`.
    pub delimiter: Option<char>,
    /// Expect a third weight field on every line.
    pub weighted: bool,
    pub kind: GraphKind,
    /// Declared node counts, allowing isolated trailing nodes beyond those
    /// named in the file. `None` sizes the graph by the labels seen.
    pub declared_rows: Option<usize>,
    pub declared_cols: Option<usize>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            delimiter: None,
            weighted: false,
            kind: GraphKind::Directed,
            declared_rows: None,
            declared_cols: None,
        }
    }
}

/// A graph together with the label maps recovered at ingestion.
///
/// For directed graphs the two label vectors are identical; for bipartite
/// graphs they name the disjoint row and column node sets.
#[derive(Clone, Debug)]
pub struct LoadedGraph {
    pub graph: SparseGraph,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
}

struct Interner {
    map: HashMap<String, usize>,
    labels: Vec<String>,
}

impl Interner {
    fn new() -> Self {
        Interner {
            map: HashMap::new(),
            labels: Vec::new(),
        }
    }

    fn intern(&mut self, label: &str) -> usize {
        if let Some(&idx) = self.map.get(label) {
            return idx;
        }
        let idx = self.labels.len();
        self.map.insert(label.to_string(), idx);
        self.labels.push(label.to_string());
        idx
    }
}

/// Parses edge-list text: one edge per line as `src dst` or `src dst weight`,
/// `#`-prefixed comment lines and blank lines ignored, labels mapped to dense
/// indices in first-appearance order.
pub fn parse_edge_list(text: &str, origin: &str, opts: &LoadOptions) -> Result<LoadedGraph> {
    let parse_err = |line: usize, message: String| Error::Parse {
        origin: origin.to_string(),
        line,
        message,
    };

    let mut rows = Interner::new();
    let mut cols = Interner::new();
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        if raw.starts_with('#') || raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = match opts.delimiter {
            None => raw.split_whitespace().collect(),
            Some(c) => raw.split(c).map(str::trim).collect(),
        };
        let expected = if opts.weighted { 3 } else { 2 };
        if fields.len() != expected {
            return Err(parse_err(
                line_no,
                format!("expected {expected} fields, found {}", fields.len()),
            ));
        }
        if fields.iter().any(|f| f.is_empty()) {
            return Err(parse_err(line_no, "empty field".into()));
        }
        let weight = if opts.weighted {
            let w: f64 = fields[2]
                .parse()
                .map_err(|_| parse_err(line_no, format!("non-numeric weight {:?}", fields[2])))?;
            if !w.is_finite() || w <= 0.0 {
                return Err(parse_err(line_no, format!("weight {w} is not positive")));
            }
            w
        } else {
            1.0
        };
        let (i, j) = match opts.kind {
            GraphKind::Directed => (rows.intern(fields[0]), rows.intern(fields[1])),
            GraphKind::Bipartite => (rows.intern(fields[0]), cols.intern(fields[1])),
        };
        triplets.push((i, j, weight));
    }

    if triplets.is_empty() {
        return Err(Error::EmptyGraph(format!("{origin} contains no edges")));
    }

    let (mut row_labels, mut col_labels) = match opts.kind {
        GraphKind::Directed => (rows.labels.clone(), rows.labels),
        GraphKind::Bipartite => (rows.labels, cols.labels),
    };
    let n_rows = pad_labels(&mut row_labels, opts.declared_rows, "rows")?;
    let n_cols = match opts.kind {
        GraphKind::Directed => {
            if opts.declared_cols.is_some() && opts.declared_cols != opts.declared_rows {
                return Err(Error::InvalidArgument(
                    "directed graphs take a single declared node count".into(),
                ));
            }
            col_labels = row_labels.clone();
            n_rows
        }
        GraphKind::Bipartite => pad_labels(&mut col_labels, opts.declared_cols, "columns")?,
    };

    let graph = SparseGraph::from_triplets(opts.kind, n_rows, n_cols, &triplets)?;
    Ok(LoadedGraph {
        graph,
        row_labels,
        col_labels,
    })
}

fn pad_labels(labels: &mut Vec<String>, declared: Option<usize>, side: &str) -> Result<usize> {
    match declared {
        None => Ok(labels.len()),
        Some(n) if n < labels.len() => Err(Error::InvalidArgument(format!(
            "declared {side} count {n} is smaller than the {} labels present",
            labels.len()
        ))),
        Some(n) => {
            while labels.len() < n {
                labels.push(labels.len().to_string());
            }
            Ok(n)
        }
    }
}

/// Loads an edge list from a file. See [`parse_edge_list`].
pub fn load_edge_list(path: &Path, opts: &LoadOptions) -> Result<LoadedGraph> {
    let text = fs::read_to_string(path).map_err(|e| {
        std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))
    })?;
    parse_edge_list(&text, &path.display().to_string(), opts)
}

/// Serializes a graph back to edge-list text (tab-delimited, weighted), the
/// inverse of ingestion up to comment lines and duplicate merging.
pub fn to_edge_list_text(g: &LoadedGraph) -> String {
    let mut out = String::new();
    for (i, j, v) in g.graph.edges() {
        writeln!(out, "{}\t{}\t{}", g.row_labels[i], g.col_labels[j], v).unwrap();
    }
    out
}

pub fn write_edge_list(g: &LoadedGraph, path: &Path) -> Result<()> {
    fs::write(path, to_edge_list_text(g))?;
    Ok(())
}

/// Two-column label map "index<TAB>label".
pub fn label_map_text(labels: &[String]) -> String {
    let mut out = String::new();
    for (i, label) in labels.iter().enumerate() {
        writeln!(out, "{i}\t{label}").unwrap();
    }
    out
}

pub fn write_label_map(labels: &[String], path: &Path) -> Result<()> {
    fs::write(path, label_map_text(labels))?;
    Ok(())
}
