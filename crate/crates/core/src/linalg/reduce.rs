//! Element-wise sums over a batch index.
//!
//! Deterministic mode splits the batch into fixed chunks of [`CHUNK`] items,
//! sums each chunk left to right, then combines the chunk partials with a
//! pairwise tree. The tree depends only on the batch size, never on how
//! many workers computed the partials.

use rayon::prelude::*;

use super::batch::{MatBatch, VecBatch};
use super::exec::Exec;
use super::mat::{Mat, Vector};
use crate::error::{Error, Result};

pub const CHUNK: usize = 64;

fn add_into(acc: &mut [f64], x: &[f64]) {
    acc.iter_mut().zip(x).for_each(|(a, b)| *a += b);
}

fn chunk_sum(chunk: &[f64], item_len: usize) -> Vec<f64> {
    let mut acc = vec![0.0; item_len];
    for item in chunk.chunks(item_len) {
        add_into(&mut acc, item);
    }
    acc
}

fn tree_combine(mut parts: Vec<Vec<f64>>) -> Vec<f64> {
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(mut a) = it.next() {
            if let Some(b) = it.next() {
                add_into(&mut a, &b);
            }
            next.push(a);
        }
        parts = next;
    }
    parts.pop().unwrap_or_default()
}

/// Sum consecutive `item_len`-sized items of `data` element-wise.
pub fn reduce_items(exec: Exec, data: &[f64], item_len: usize) -> Result<Vec<f64>> {
    if item_len == 0 || data.is_empty() {
        return Err(Error::EmptyInput("reduction over an empty batch"));
    }
    if data.len() % item_len != 0 {
        return Err(Error::Shape(format!(
            "{} values do not split into items of {item_len}",
            data.len()
        )));
    }
    let span = CHUNK * item_len;
    let out = match (exec.parallel, exec.deterministic) {
        (false, _) => tree_combine(data.chunks(span).map(|c| chunk_sum(c, item_len)).collect()),
        (true, true) => tree_combine(
            data.par_chunks(span)
                .map(|c| chunk_sum(c, item_len))
                .collect(),
        ),
        (true, false) => data
            .par_chunks(item_len)
            .fold(|| vec![0.0; item_len], |mut acc, x| {
                add_into(&mut acc, x);
                acc
            })
            .reduce(|| vec![0.0; item_len], |mut a, b| {
                add_into(&mut a, &b);
                a
            }),
    };
    Ok(out)
}

pub fn reduce_mats(exec: Exec, batch: &MatBatch) -> Result<Mat> {
    let sum = reduce_items(exec, batch.as_slice(), batch.rows() * batch.cols())?;
    Ok(Mat::from_raw(batch.rows(), batch.cols(), sum))
}

pub fn reduce_vecs(exec: Exec, batch: &VecBatch) -> Result<Vector> {
    Ok(Vector::from_raw(reduce_items(exec, batch.as_slice(), batch.len())?))
}

pub fn reduce_scalars(exec: Exec, values: &[f64]) -> Result<f64> {
    Ok(reduce_items(exec, values, 1)?[0])
}
