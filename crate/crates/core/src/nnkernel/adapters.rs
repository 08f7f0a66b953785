//! Shape adapters between layers: column concatenation and selection, and the
//! matrix-to-steps reshape feeding the recurrent branch.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Juxtaposes `N x M_i` matrices column-wise, in argument order.
pub fn concatenate(parts: &[&Tensor]) -> Result<Tensor> {
    let first = parts
        .first()
        .ok_or_else(|| Error::Shape("concatenate needs at least one part".into()))?;
    let n = first.rows();
    if parts.iter().any(|p| p.shape().len() != 2 || p.rows() != n) {
        return Err(Error::Shape(format!(
            "concatenate: parts disagree on zone count: {:?}",
            parts.iter().map(|p| p.shape().to_vec()).collect::<Vec<_>>()
        )));
    }
    let width: usize = parts.iter().map(|p| p.cols()).sum();
    let mut data = Vec::with_capacity(n * width);
    for r in 0..n {
        for p in parts {
            data.extend_from_slice(p.row(r));
        }
    }
    Tensor::from_vec(&[n, width], data)
}

/// Inverse of [`concatenate`].
pub fn split_columns(x: &Tensor, widths: &[usize]) -> Result<Vec<Tensor>> {
    if widths.iter().sum::<usize>() != x.cols() {
        return Err(Error::Shape(format!(
            "split widths {widths:?} do not cover {} columns",
            x.cols()
        )));
    }
    let n = x.rows();
    let mut out: Vec<Vec<f64>> = widths.iter().map(|w| Vec::with_capacity(n * w)).collect();
    for r in 0..n {
        let mut row = x.row(r);
        for (w, buf) in widths.iter().zip(out.iter_mut()) {
            buf.extend_from_slice(&row[..*w]);
            row = &row[*w..];
        }
    }
    widths
        .iter()
        .zip(out)
        .map(|(w, d)| Tensor::from_vec(&[n, *w], d))
        .collect()
}

/// Selects columns `cols` of an `N x F` matrix.
pub fn gather_columns(x: &Tensor, cols: &[usize]) -> Tensor {
    let n = x.rows();
    let mut data = Vec::with_capacity(n * cols.len());
    for r in 0..n {
        let row = x.row(r);
        data.extend(cols.iter().map(|&c| row[c]));
    }
    Tensor::from_vec(&[n, cols.len()], data).expect("gathered shape")
}

/// Adjoint of [`gather_columns`]: adds `grad` into columns `cols` of `into`.
pub fn scatter_columns(grad: &Tensor, cols: &[usize], into: &mut Tensor) {
    for r in 0..grad.rows() {
        let g = grad.row(r);
        let dst = into.row_mut(r);
        for (&c, v) in cols.iter().zip(g) {
            dst[c] += v;
        }
    }
}

/// `N x (B·b)` → `N x B x b`, for columns laid out variable-major with lag
/// `t-1` first. The step axis runs oldest first:
/// `out[p, v, s] = x[p, v·b + (b-1-s)]`.
pub fn reshape_to_steps(x: &Tensor, n_vars: usize, lookback: usize) -> Result<Tensor> {
    if x.cols() != n_vars * lookback || lookback == 0 {
        return Err(Error::Shape(format!(
            "reshape_to_steps: {} columns is not {n_vars} x {lookback}",
            x.cols()
        )));
    }
    let n = x.rows();
    let mut out = Tensor::zeros(&[n, n_vars, lookback]);
    for p in 0..n {
        let src = x.row(p);
        let dst = out.row_mut(p);
        for v in 0..n_vars {
            for s in 0..lookback {
                dst[v * lookback + s] = src[v * lookback + (lookback - 1 - s)];
            }
        }
    }
    Ok(out)
}

/// Inverse of [`reshape_to_steps`].
pub fn flatten_steps(x: &Tensor) -> Result<Tensor> {
    let &[n, n_vars, lookback] = x.shape() else {
        return Err(Error::Shape(format!(
            "flatten_steps: rank-3 input expected, got {:?}",
            x.shape()
        )));
    };
    let mut out = Tensor::zeros(&[n, n_vars * lookback]);
    for p in 0..n {
        let src = x.row(p);
        let dst = out.row_mut(p);
        for v in 0..n_vars {
            for s in 0..lookback {
                dst[v * lookback + (lookback - 1 - s)] = src[v * lookback + s];
            }
        }
    }
    Ok(out)
}

/// Builds an `N x B x b` step tensor where step `s` reads the columns
/// `step_cols[s]` (all of equal length `B`).
pub fn gather_steps(x: &Tensor, step_cols: &[Vec<usize>]) -> Tensor {
    let n = x.rows();
    let b = step_cols.len();
    let width = step_cols.first().map_or(0, Vec::len);
    let mut out = Tensor::zeros(&[n, width, b]);
    for p in 0..n {
        let src = x.row(p);
        let dst = out.row_mut(p);
        for (s, cols) in step_cols.iter().enumerate() {
            for (v, &c) in cols.iter().enumerate() {
                dst[v * b + s] = src[c];
            }
        }
    }
    out
}

/// Adjoint of [`gather_steps`].
pub fn scatter_steps(grad: &Tensor, step_cols: &[Vec<usize>], into: &mut Tensor) {
    let b = step_cols.len();
    for p in 0..grad.rows() {
        let g = grad.row(p);
        let dst = into.row_mut(p);
        for (s, cols) in step_cols.iter().enumerate() {
            for (v, &c) in cols.iter().enumerate() {
                dst[c] += g[v * b + s];
            }
        }
    }
}
