//! Second-order interaction expansion, streamed column by column.
//!
//! Expanded ordering for `p0` standardized base columns:
//! `0..p0` the base columns, `p0..2·p0` their squares (square of base `j` at
//! `p0 + j`), then cross products `(a, b)` with `a < b` in lexicographic
//! order. Each expanded column is the elementwise product of standardized
//! base columns, re-standardized with training statistics. Nothing but the
//! base matrix and two per-column statistics vectors is ever stored.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::schema::{Category, FeatureDescriptor};
use super::standardize::{is_constant, mean_std};
use crate::design::{Columns, DesignMatrix};

/// Number of expanded columns for `p0` base columns.
pub const fn expanded_len(p0: usize) -> usize {
    2 * p0 + p0 * p0.saturating_sub(1) / 2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Term {
    Linear(usize),
    Square(usize),
    Cross(usize, usize),
}

impl Term {
    pub fn parents(self) -> (usize, usize) {
        match self {
            Term::Linear(a) => (a, a),
            Term::Square(a) => (a, a),
            Term::Cross(a, b) => (a, b),
        }
    }

    /// Unstandardized value from a standardized base row.
    #[inline]
    pub fn raw_value(self, z: &[f64]) -> f64 {
        match self {
            Term::Linear(a) => z[a],
            Term::Square(a) => z[a] * z[a],
            Term::Cross(a, b) => z[a] * z[b],
        }
    }
}

/// Number of cross pairs whose first element is below `a`.
#[inline]
fn pairs_before(a: usize, p0: usize) -> usize {
    a * (2 * p0 - a - 1) / 2
}

/// Decodes an expanded index.
pub fn term_of(j: usize, p0: usize) -> Term {
    assert!(j < expanded_len(p0), "expanded index {j} out of range");
    if j < p0 {
        return Term::Linear(j);
    }
    if j < 2 * p0 {
        return Term::Square(j - p0);
    }
    let c = j - 2 * p0;
    // largest a with pairs_before(a) <= c
    let (mut lo, mut hi) = (0usize, p0 - 1);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if pairs_before(mid, p0) <= c {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let a = lo;
    Term::Cross(a, a + 1 + (c - pairs_before(a, p0)))
}

/// Inverse of [`term_of`].
pub fn index_of(term: Term, p0: usize) -> usize {
    match term {
        Term::Linear(a) => a,
        Term::Square(a) => p0 + a,
        Term::Cross(a, b) => {
            assert!(a < b && b < p0);
            2 * p0 + pairs_before(a, p0) + (b - a - 1)
        }
    }
}

#[inline]
pub fn restandardize(raw: f64, mu: f64, sigma: f64) -> f64 {
    if sigma > 0.0 {
        (raw - mu) / sigma
    } else {
        0.0
    }
}

pub fn expanded_descriptor(j: usize, base_names: &[String]) -> FeatureDescriptor {
    let p0 = base_names.len();
    let (name, category, parents) = match term_of(j, p0) {
        Term::Linear(a) => (base_names[a].clone(), None, None),
        Term::Square(a) => (
            format!("sq({})", base_names[a]),
            Some(Category::Square),
            Some([a, a]),
        ),
        Term::Cross(a, b) => (
            format!("{}*{}", base_names[a], base_names[b]),
            Some(Category::Interaction),
            Some([a, b]),
        ),
    };
    FeatureDescriptor {
        index: j,
        name,
        // linear terms keep whatever category the caller assigns
        category: category.unwrap_or(Category::PollutantHourly),
        parents,
    }
}

/// Streamed design over the full interaction expansion of a base matrix.
#[derive(Debug, Clone)]
pub struct ExpandedDesign {
    base: DesignMatrix,
    base_names: Vec<String>,
    base_categories: Vec<Category>,
    /// Training mean and standard deviation of each expanded column before
    /// re-standardization. `sigma == 0` marks a constant column, which the
    /// accessor yields as zeros.
    mu: Vec<f64>,
    sigma: Vec<f64>,
}

impl ExpandedDesign {
    /// Expands a standardized training base matrix, computing the
    /// re-standardization statistics from its rows.
    pub fn new(base: DesignMatrix, base_schema: &[FeatureDescriptor]) -> Self {
        assert_eq!(base.ncols(), base_schema.len(), "schema/base width mismatch");
        let p0 = base.ncols();
        let p = expanded_len(p0);
        let stats: Vec<(f64, f64)> = (0..p)
            .into_par_iter()
            .with_min_len(256)
            .map_init(Vec::new, |buf, j| {
                raw_column(&base, term_of(j, p0), None, buf);
                let (m, s) = mean_std(buf);
                if is_constant(m, s) {
                    (m, 0.0)
                } else {
                    (m, s)
                }
            })
            .collect();
        let (mu, sigma) = stats.into_iter().unzip();
        Self {
            base,
            base_names: base_schema.iter().map(|d| d.name.clone()).collect(),
            base_categories: base_schema.iter().map(|d| d.category).collect(),
            mu,
            sigma,
        }
    }

    /// Same expansion over different rows (e.g. test data standardized with
    /// training parameters), reusing this design's statistics.
    pub fn with_base(&self, base: DesignMatrix) -> Self {
        assert_eq!(base.ncols(), self.base.ncols());
        Self {
            base,
            base_names: self.base_names.clone(),
            base_categories: self.base_categories.clone(),
            mu: self.mu.clone(),
            sigma: self.sigma.clone(),
        }
    }

    pub fn p0(&self) -> usize {
        self.base.ncols()
    }

    pub fn base(&self) -> &DesignMatrix {
        &self.base
    }

    pub fn term(&self, j: usize) -> Term {
        term_of(j, self.p0())
    }

    pub fn stats(&self, j: usize) -> (f64, f64) {
        (self.mu[j], self.sigma[j])
    }

    pub fn n_degenerate(&self) -> usize {
        self.sigma.iter().filter(|&&s| s == 0.0).count()
    }

    pub fn descriptor(&self, j: usize) -> FeatureDescriptor {
        let mut d = expanded_descriptor(j, &self.base_names);
        if let Term::Linear(a) = self.term(j) {
            d.category = self.base_categories[a];
        }
        d
    }

    pub fn descriptors(&self) -> impl Iterator<Item = FeatureDescriptor> + '_ {
        (0..self.n_cols()).map(|j| self.descriptor(j))
    }

    /// Column `j` before re-standardization, on `rows` (all rows if `None`).
    pub fn raw_column_into(&self, j: usize, rows: Option<&[usize]>, out: &mut Vec<f64>) {
        raw_column(&self.base, self.term(j), rows, out);
    }

    fn fill(&self, j: usize, rows: Option<&[usize]>, out: &mut Vec<f64>) {
        raw_column(&self.base, self.term(j), rows, out);
        let (mu, sigma) = (self.mu[j], self.sigma[j]);
        for v in out.iter_mut() {
            *v = restandardize(*v, mu, sigma);
        }
    }

    /// Rough bytes held by the streamed representation.
    pub fn resident_bytes(&self) -> usize {
        8 * (self.base.nrows() * self.base.ncols() + 2 * self.mu.len())
    }
}

fn raw_column(base: &DesignMatrix, term: Term, rows: Option<&[usize]>, out: &mut Vec<f64>) {
    out.clear();
    let (a, b) = term.parents();
    let (ca, cb) = (base.col(a), base.col(b));
    let linear = matches!(term, Term::Linear(_));
    let value = |i: usize| if linear { ca[i] } else { ca[i] * cb[i] };
    match rows {
        None => out.extend((0..base.nrows()).map(value)),
        Some(rows) => out.extend(rows.iter().map(|&i| value(i))),
    }
}

impl Columns for ExpandedDesign {
    fn n_rows(&self) -> usize {
        self.base.nrows()
    }

    fn n_cols(&self) -> usize {
        self.mu.len()
    }

    fn column<'a>(&'a self, j: usize, scratch: &'a mut Vec<f64>) -> &'a [f64] {
        self.fill(j, None, scratch);
        scratch
    }

    fn column_rows(&self, j: usize, rows: &[usize], out: &mut Vec<f64>) {
        self.fill(j, Some(rows), out);
    }

    fn is_streamed(&self) -> bool {
        true
    }
}
