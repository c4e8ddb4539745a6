use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum items per rayon task; the per-item work is a handful of flops.
const MIN_ITEMS_PER_TASK: usize = 256;

/// How batched kernels and reductions are executed.
///
/// `parallel` spreads batch items over the current rayon pool. With
/// `deterministic` set, reductions use a fixed tree so results are
/// bit-identical for every worker count (and identical to serial runs).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exec {
    pub parallel: bool,
    pub deterministic: bool,
}

impl Default for Exec {
    fn default() -> Self {
        Exec::PARALLEL
    }
}

impl Exec {
    pub const SERIAL: Exec = Exec {
        parallel: false,
        deterministic: true,
    };
    pub const PARALLEL: Exec = Exec {
        parallel: true,
        deterministic: true,
    };
    /// Parallel with order-varying reductions.
    pub const FAST: Exec = Exec {
        parallel: true,
        deterministic: false,
    };

    /// Run `f(i, item)` over consecutive `item_len`-sized chunks of `out`.
    /// On failure the error of the lowest failing index is returned.
    pub fn for_each_item<F>(&self, out: &mut [f64], item_len: usize, f: F) -> Result<()>
    where
        F: Fn(usize, &mut [f64]) -> Result<()> + Sync + Send,
    {
        if item_len == 0 {
            return Ok(());
        }
        if self.parallel {
            let failure = out
                .par_chunks_mut(item_len)
                .with_min_len(MIN_ITEMS_PER_TASK)
                .enumerate()
                .filter_map(|(i, item)| f(i, item).err().map(|e| (i, e)))
                .min_by_key(|(i, _)| *i);
            match failure {
                Some((i, e)) => Err(e.at_item(i)),
                None => Ok(()),
            }
        } else {
            for (i, item) in out.chunks_mut(item_len).enumerate() {
                f(i, item).map_err(|e| e.at_item(i))?;
            }
            Ok(())
        }
    }

    /// Like [`Exec::for_each_item`] but also hands each item a mutable
    /// companion element (used for per-item RNG streams).
    pub fn for_each_item_with<T, F>(
        &self,
        out: &mut [f64],
        item_len: usize,
        companions: &mut [T],
        f: F,
    ) -> Result<()>
    where
        T: Send,
        F: Fn(usize, &mut [f64], &mut T) -> Result<()> + Sync + Send,
    {
        if item_len == 0 {
            return Ok(());
        }
        if out.len() / item_len != companions.len() {
            return Err(Error::Shape(format!(
                "{} items but {} companions",
                out.len() / item_len,
                companions.len()
            )));
        }
        if self.parallel {
            let failure = out
                .par_chunks_mut(item_len)
                .zip(companions.par_iter_mut())
                .with_min_len(MIN_ITEMS_PER_TASK)
                .enumerate()
                .filter_map(|(i, (item, c))| f(i, item, c).err().map(|e| (i, e)))
                .min_by_key(|(i, _)| *i);
            match failure {
                Some((i, e)) => Err(e.at_item(i)),
                None => Ok(()),
            }
        } else {
            for (i, (item, c)) in out.chunks_mut(item_len).zip(companions.iter_mut()).enumerate() {
                f(i, item, c).map_err(|e| e.at_item(i))?;
            }
            Ok(())
        }
    }

    /// Evaluate `f(i)` for `i in 0..n`, collecting results in index order.
    pub fn map_indices<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        if self.parallel {
            (0..n).into_par_iter().with_min_len(MIN_ITEMS_PER_TASK).map(f).collect()
        } else {
            (0..n).map(f).collect()
        }
    }
}
