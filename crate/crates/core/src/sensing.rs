//! Random projection ensembles and hard adaptation rules.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result};

pub type Matrix = DMatrix<f64>;

/// Sorted, duplicate-free set of sample indices sensed in one subframe.
///
/// Stands in for the 0/1 diagonal adaptation matrix.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SelectionSet(Vec<usize>);

impl SelectionSet {
    /// Canonicalises `indices` (ascending) and checks them against `n`.
    pub fn new(mut indices: Vec<usize>, n: usize) -> Result<Self> {
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::input("selection contains duplicate indices"));
        }
        if let Some(&last) = indices.last() {
            if last >= n {
                return Err(Error::input(format!(
                    "selected index {last} out of range for {n} samples"
                )));
            }
        }
        Ok(Self(indices))
    }

    pub fn full(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, idx: usize) -> bool {
        self.0.binary_search(&idx).is_ok()
    }

    pub fn is_subset_of(&self, other: &SelectionSet) -> bool {
        self.0.iter().all(|&i| other.contains(i))
    }
}

/// Haar-distributed `k x k` orthogonal matrix.
///
/// QR of a standard Gaussian matrix, with the columns of `Q` rescaled by the
/// signs of `diag(R)` so the law is exactly Haar.
pub fn haar_orthogonal<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Matrix {
    assert!(k >= 1, "haar_orthogonal needs k >= 1");
    let g = Matrix::from_fn(k, k, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for (j, mut col) in q.column_iter_mut().enumerate() {
        if r[(j, j)] < 0.0 {
            col.neg_mut();
        }
    }
    q
}

/// `k x n` matrix with i.i.d. `N(0, 1/k)` entries, filled column by column.
pub fn iid_gaussian<R: Rng + ?Sized>(k: usize, n: usize, rng: &mut R) -> Matrix {
    assert!(k >= 1 && n >= 1, "iid_gaussian needs positive dimensions");
    let sd = 1.0 / (k as f64).sqrt();
    Matrix::from_fn(k, n, |_, _| sd * rng.sample::<f64, _>(StandardNormal))
}

/// Places column `i` of `u` at the `i`-th smallest selected index of an
/// otherwise zero `k x n` matrix.
pub fn embed_columns(u: &Matrix, sel: &SelectionSet, n: usize) -> Result<Matrix> {
    if sel.len() != u.ncols() {
        return Err(Error::input(format!(
            "selection has {} indices but the basis has {} columns",
            sel.len(),
            u.ncols()
        )));
    }
    if sel.indices().last().is_some_and(|&j| j >= n) {
        return Err(Error::input("selected index exceeds the number of samples"));
    }
    let mut a = Matrix::zeros(u.nrows(), n);
    for (col, &j) in sel.indices().iter().enumerate() {
        a.set_column(j, &u.column(col));
    }
    Ok(a)
}

fn check_no_nan(distortions: &[f64]) -> Result<()> {
    match distortions.iter().position(|d| d.is_nan()) {
        Some(i) => Err(Error::input(format!("distortion at index {i} is NaN"))),
        None => Ok(()),
    }
}

/// Worst-case hard adaptation: the `k` samples with the largest distortion.
/// Ties go to the lower index.
pub fn adapt_topk(distortions: &[f64], k: usize) -> Result<SelectionSet> {
    check_no_nan(distortions)?;
    if k > distortions.len() {
        return Err(Error::input(format!(
            "cannot select {k} of {} samples",
            distortions.len()
        )));
    }
    let mut order: Vec<usize> = (0..distortions.len()).collect();
    // stable sort keeps ascending index order among equal distortions
    order.sort_by(|&a, &b| distortions[b].total_cmp(&distortions[a]));
    order.truncate(k);
    order.sort_unstable();
    Ok(SelectionSet(order))
}

/// Threshold adaptation: every sample with distortion `>= d_th`.
pub fn adapt_threshold(distortions: &[f64], d_th: f64) -> Result<SelectionSet> {
    if !(d_th > 0.0) {
        return Err(Error::input(format!(
            "threshold must be positive, got {d_th}"
        )));
    }
    check_no_nan(distortions)?;
    Ok(SelectionSet(
        distortions
            .iter()
            .enumerate()
            .filter(|(_, &d)| d >= d_th)
            .map(|(i, _)| i)
            .collect(),
    ))
}

/// Power-dB to linear: `10^(db / 10)`.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
