use super::exec::Exec;
use super::mat::{Mat, Vector};
use super::small;
use crate::error::{Error, Result};

/// `batch` matrices of identical shape stored back to back, each row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct MatBatch {
    batch: usize,
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

/// `batch` vectors of identical length stored back to back.
#[derive(Clone, Debug, PartialEq)]
pub struct VecBatch {
    batch: usize,
    len: usize,
    data: Vec<f64>,
}

impl MatBatch {
    pub fn new(batch: usize, rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != batch * rows * cols {
            return Err(Error::Shape(format!(
                "{} values for {batch} items of {rows}x{cols}",
                data.len()
            )));
        }
        if !data.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("matrix batch"));
        }
        Ok(MatBatch {
            batch,
            rows,
            cols,
            data,
        })
    }

    pub(crate) fn from_raw(batch: usize, rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), batch * rows * cols);
        MatBatch {
            batch,
            rows,
            cols,
            data,
        }
    }

    pub fn zeros(batch: usize, rows: usize, cols: usize) -> Self {
        MatBatch::from_raw(batch, rows, cols, vec![0.0; batch * rows * cols])
    }

    /// Physically replicate `m` into every item (needed when the batch is an
    /// output buffer; inputs should use [`Operand::Broadcast`] instead).
    pub fn replicate(m: &Mat, batch: usize) -> Self {
        let mut data = Vec::with_capacity(batch * m.as_slice().len());
        for _ in 0..batch {
            data.extend_from_slice(m.as_slice());
        }
        MatBatch::from_raw(batch, m.rows(), m.cols(), data)
    }

    pub fn from_mats(items: &[Mat]) -> Result<Self> {
        let first = items.first().ok_or(Error::EmptyInput("matrix batch"))?;
        let (rows, cols) = (first.rows(), first.cols());
        if items.iter().any(|m| m.rows() != rows || m.cols() != cols) {
            return Err(Error::Shape("batch items differ in shape".into()));
        }
        let data = items.iter().flat_map(|m| m.as_slice().iter().copied()).collect();
        Ok(MatBatch::from_raw(items.len(), rows, cols, data))
    }

    /// View a vector batch as a batch of `len×1` column matrices.
    pub fn from_columns(v: &VecBatch) -> Self {
        MatBatch::from_raw(v.batch, v.len, 1, v.data.clone())
    }

    pub fn batch(&self) -> usize {
        self.batch
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn item_len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn item(&self, i: usize) -> &[f64] {
        let n = self.item_len();
        &self.data[i * n..(i + 1) * n]
    }

    pub fn item_mut(&mut self, i: usize) -> &mut [f64] {
        let n = self.item_len();
        &mut self.data[i * n..(i + 1) * n]
    }

    pub fn get(&self, i: usize) -> Mat {
        Mat::from_raw(self.rows, self.cols, self.item(i).to_vec())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Reorder items: item `k` of the result is item `order[k]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for &i in order {
            data.extend_from_slice(self.item(i));
        }
        MatBatch::from_raw(order.len(), self.rows, self.cols, data)
    }
}

impl VecBatch {
    pub fn new(batch: usize, len: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != batch * len {
            return Err(Error::Shape(format!(
                "{} values for {batch} vectors of length {len}",
                data.len()
            )));
        }
        if !data.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("vector batch"));
        }
        Ok(VecBatch { batch, len, data })
    }

    pub(crate) fn from_raw(batch: usize, len: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), batch * len);
        VecBatch { batch, len, data }
    }

    pub fn zeros(batch: usize, len: usize) -> Self {
        VecBatch::from_raw(batch, len, vec![0.0; batch * len])
    }

    pub fn replicate(v: &Vector, batch: usize) -> Self {
        let mut data = Vec::with_capacity(batch * v.len());
        for _ in 0..batch {
            data.extend_from_slice(v.as_slice());
        }
        VecBatch::from_raw(batch, v.len(), data)
    }

    pub fn from_vectors(items: &[Vector]) -> Result<Self> {
        let len = items.first().ok_or(Error::EmptyInput("vector batch"))?.len();
        if items.iter().any(|v| v.len() != len) {
            return Err(Error::Shape("batch vectors differ in length".into()));
        }
        let data = items.iter().flat_map(|v| v.iter().copied()).collect();
        Ok(VecBatch::from_raw(items.len(), len, data))
    }

    pub fn batch(&self) -> usize {
        self.batch
    }

    /// Length of each item.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.batch == 0
    }

    pub fn item(&self, i: usize) -> &[f64] {
        &self.data[i * self.len..(i + 1) * self.len]
    }

    pub fn item_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.len..(i + 1) * self.len]
    }

    pub fn get(&self, i: usize) -> Vector {
        Vector::from_raw(self.item(i).to_vec())
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.len.max(1)).take(self.batch)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn permuted(&self, order: &[usize]) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for &i in order {
            data.extend_from_slice(self.item(i));
        }
        VecBatch::from_raw(order.len(), self.len, data)
    }
}

/// A batched operand: either one matrix per item or a single matrix used
/// for every item without copying it.
#[derive(Clone, Copy, Debug)]
pub enum Operand<'a> {
    Batch(&'a MatBatch),
    Broadcast(&'a Mat),
}

impl<'a> Operand<'a> {
    fn shape(&self) -> (usize, usize) {
        match self {
            Operand::Batch(b) => (b.rows, b.cols),
            Operand::Broadcast(m) => (m.rows(), m.cols()),
        }
    }

    fn batch(&self) -> Option<usize> {
        match self {
            Operand::Batch(b) => Some(b.batch),
            Operand::Broadcast(_) => None,
        }
    }

    fn item(&self, i: usize) -> &'a [f64] {
        match *self {
            Operand::Batch(b) => b.item(i),
            Operand::Broadcast(m) => m.as_slice(),
        }
    }

    fn all_finite(&self) -> bool {
        match self {
            Operand::Batch(b) => b.data.iter().all(|x| x.is_finite()),
            Operand::Broadcast(m) => m.as_slice().iter().all(|x| x.is_finite()),
        }
    }
}

/// `C_i ← alpha·op(A_i)·op(B_i) + beta·C_i` for every batch index.
#[allow(clippy::too_many_arguments)]
pub fn gemm_batched(
    exec: Exec,
    a: Operand<'_>,
    trans_a: bool,
    b: Operand<'_>,
    trans_b: bool,
    alpha: f64,
    beta: f64,
    mut c: MatBatch,
) -> Result<MatBatch> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let (m, k) = if trans_a { (ac, ar) } else { (ar, ac) };
    let (k2, n) = if trans_b { (bc, br) } else { (br, bc) };
    if k != k2 || c.rows != m || c.cols != n {
        return Err(Error::Shape(format!(
            "op(A) {m}x{k}, op(B) {k2}x{n}, C {}x{}",
            c.rows, c.cols
        )));
    }
    for batch in [a.batch(), b.batch()].into_iter().flatten() {
        if batch != c.batch {
            return Err(Error::Shape(format!("batch {batch} vs output batch {}", c.batch)));
        }
    }
    if !a.all_finite() || !b.all_finite() || !alpha.is_finite() || !beta.is_finite() {
        return Err(Error::NonFinite("gemm operand"));
    }
    if beta != 0.0 && !c.data.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite("gemm accumulator"));
    }
    let item_len = c.item_len();
    exec.for_each_item(&mut c.data, item_len, |i, out| {
        small::gemm(a.item(i), (ar, ac), trans_a, b.item(i), (br, bc), trans_b, alpha, beta, out);
        Ok(())
    })?;
    Ok(c)
}

/// Invert every item. Failures carry the batch index of the offending item.
pub fn inverse_batched(exec: Exec, a: &MatBatch) -> Result<MatBatch> {
    if a.rows != a.cols {
        return Err(Error::Shape(format!("{}x{} items are not square", a.rows, a.cols)));
    }
    let n = a.rows;
    let mut out = MatBatch::zeros(a.batch, n, n);
    exec.for_each_item(&mut out.data, n * n, |i, dst| small::invert(a.item(i), n, dst))?;
    Ok(out)
}

/// Invert every item of an SPD batch, with the one-shot jitter retry of
/// [`small::spd_invert`].
pub fn spd_inverse_batched(exec: Exec, a: &MatBatch) -> Result<MatBatch> {
    if a.rows != a.cols {
        return Err(Error::Shape(format!("{}x{} items are not square", a.rows, a.cols)));
    }
    let n = a.rows;
    let mut out = MatBatch::zeros(a.batch, n, n);
    exec.for_each_item(&mut out.data, n * n, |i, dst| small::spd_invert(a.item(i), n, dst))?;
    Ok(out)
}

/// Lower Cholesky factor of every item (strict upper triangles are zero).
pub fn cholesky_batched(exec: Exec, a: &MatBatch) -> Result<MatBatch> {
    if a.rows != a.cols {
        return Err(Error::Shape(format!("{}x{} items are not square", a.rows, a.cols)));
    }
    let n = a.rows;
    let mut out = MatBatch::zeros(a.batch, n, n);
    exec.for_each_item(&mut out.data, n * n, |i, dst| small::cholesky(a.item(i), n, dst))?;
    Ok(out)
}
