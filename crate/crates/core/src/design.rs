//! Column-oriented design matrices.
//!
//! Every solver reads its design through [`Columns`], so a dense matrix, a
//! row subset of one, and the streamed interaction expansion are
//! interchangeable.

/// Read-only column access to an `n × p` design.
pub trait Columns: Sync {
    fn n_rows(&self) -> usize;

    fn n_cols(&self) -> usize;

    /// Column `j`. Stored designs return a borrow of their own storage;
    /// computed ones fill `scratch` and return it.
    fn column<'a>(&'a self, j: usize, scratch: &'a mut Vec<f64>) -> &'a [f64];

    /// Column `j` restricted to `rows`, written into `out`.
    fn column_rows(&self, j: usize, rows: &[usize], out: &mut Vec<f64>) {
        let mut scratch = Vec::new();
        let col = self.column(j, &mut scratch);
        out.clear();
        out.extend(rows.iter().map(|&i| col[i]));
    }

    /// True when fetching a column costs more than a slice borrow.
    fn is_streamed(&self) -> bool {
        false
    }
}

/// Dense column-major `n × p` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    n: usize,
    p: usize,
    data: Vec<f64>,
}

impl DesignMatrix {
    pub fn zeros(n: usize, p: usize) -> Self {
        Self {
            n,
            p,
            data: vec![0.0; n * p],
        }
    }

    /// Builds from row vectors. All rows must share one length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        let mut m = Self::zeros(n, p);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), p, "ragged rows");
            for (j, &v) in row.iter().enumerate() {
                m.data[j * n + i] = v;
            }
        }
        m
    }

    pub fn from_columns(cols: Vec<Vec<f64>>) -> Self {
        let p = cols.len();
        let n = cols.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n * p);
        for c in cols {
            assert_eq!(c.len(), n, "ragged columns");
            data.extend(c);
        }
        Self { n, p, data }
    }

    /// Copies any column source into dense storage.
    pub fn materialize<C: Columns + ?Sized>(src: &C) -> Self {
        let (n, p) = (src.n_rows(), src.n_cols());
        let mut data = Vec::with_capacity(n * p);
        let mut scratch = Vec::new();
        for j in 0..p {
            data.extend_from_slice(src.column(j, &mut scratch));
        }
        Self { n, p, data }
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.n..(j + 1) * self.n]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.n..(j + 1) * self.n]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.n + i]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.p).map(|j| self.get(i, j)).collect()
    }

    pub fn nrows(&self) -> usize {
        self.n
    }

    pub fn ncols(&self) -> usize {
        self.p
    }
}

impl Columns for DesignMatrix {
    fn n_rows(&self) -> usize {
        self.n
    }

    fn n_cols(&self) -> usize {
        self.p
    }

    fn column<'a>(&'a self, j: usize, _scratch: &'a mut Vec<f64>) -> &'a [f64] {
        self.col(j)
    }

    fn column_rows(&self, j: usize, rows: &[usize], out: &mut Vec<f64>) {
        let col = self.col(j);
        out.clear();
        out.extend(rows.iter().map(|&i| col[i]));
    }
}

/// A view of selected rows of another design, in the given order.
pub struct RowSubset<'a, C: ?Sized> {
    inner: &'a C,
    rows: Vec<usize>,
}

impl<'a, C: Columns + ?Sized> RowSubset<'a, C> {
    pub fn new(inner: &'a C, rows: Vec<usize>) -> Self {
        debug_assert!(rows.iter().all(|&i| i < inner.n_rows()));
        Self { inner, rows }
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }
}

impl<C: Columns + ?Sized> Columns for RowSubset<'_, C> {
    fn n_rows(&self) -> usize {
        self.rows.len()
    }

    fn n_cols(&self) -> usize {
        self.inner.n_cols()
    }

    fn column<'a>(&'a self, j: usize, scratch: &'a mut Vec<f64>) -> &'a [f64] {
        self.inner.column_rows(j, &self.rows, scratch);
        scratch
    }

    fn is_streamed(&self) -> bool {
        true
    }
}

/// Gathers `rows` of `y`.
pub fn subset(y: &[f64], rows: &[usize]) -> Vec<f64> {
    rows.iter().map(|&i| y[i]).collect()
}
