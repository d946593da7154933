//! Block matrices whose blocks are products of sparse factors, applied without
//! ever forming the products.

use std::sync::Arc;

use crate::error::Result;
use crate::sparse::{DenseVector, SparseMatrix};

/// One factor of a block product, indexing the owning matrix store.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Factor {
    Plain(usize),
    Transposed(usize),
}

#[derive(Debug, Clone)]
pub(crate) struct Block {
    pub row: usize,
    pub col: usize,
    pub weight: f64,
    pub chain: Vec<Factor>,
    /// Per-row multipliers applied on top of `weight` (row normalization).
    pub row_scale: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub(crate) struct BlockMatrix {
    offsets: Vec<usize>,
    matrices: Vec<Arc<SparseMatrix>>,
    blocks: Vec<Block>,
}

impl BlockMatrix {
    pub fn new(sizes: &[usize], matrices: Vec<Arc<SparseMatrix>>) -> Self {
        let mut offsets = Vec::with_capacity(sizes.len() + 1);
        offsets.push(0);
        for s in sizes {
            offsets.push(offsets.last().unwrap() + s);
        }
        Self {
            offsets,
            matrices,
            blocks: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn block_len(&self, k: usize) -> usize {
        self.offsets[k + 1] - self.offsets[k]
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn push(&mut self, block: Block) {
        self.blocks.push(block);
    }

    pub fn matrices(&self) -> &[Arc<SparseMatrix>] {
        &self.matrices
    }

    fn step_left(&self, factor: Factor, s: &[f64]) -> Result<DenseVector> {
        match factor {
            Factor::Plain(m) => self.matrices[m].left_multiply(s),
            Factor::Transposed(m) => self.matrices[m].right_multiply(s),
        }
    }

    fn step_right(&self, factor: Factor, x: &[f64]) -> Result<DenseVector> {
        match factor {
            Factor::Plain(m) => self.matrices[m].right_multiply(x),
            Factor::Transposed(m) => self.matrices[m].left_multiply(x),
        }
    }

    /// `B x` for the unweighted product chain `B`.
    pub fn chain_right(&self, chain: &[Factor], x: &[f64]) -> Result<DenseVector> {
        let mut cur = x.to_vec();
        for &factor in chain.iter().rev() {
            cur = self.step_right(factor, &cur)?;
        }
        Ok(cur)
    }

    /// `xᵀ B` for the unweighted product chain `B`.
    pub fn chain_left(&self, chain: &[Factor], x: &[f64]) -> Result<DenseVector> {
        let mut cur = x.to_vec();
        for &factor in chain {
            cur = self.step_left(factor, &cur)?;
        }
        Ok(cur)
    }

    /// Row sums of one block's unweighted, unscaled product.
    pub fn chain_row_sums(&self, block: &Block) -> Result<DenseVector> {
        let ones = vec![1.0; self.block_len(block.col)];
        self.chain_right(&block.chain, &ones)
    }

    /// `y = xᵀ A`, accumulating blocks in insertion order.
    ///
    /// Within a block row, chains without a row scaling share their common
    /// prefixes, so `F_iᵀ C F_j` for several `j` computes `F_i x` and
    /// `(F_i x)ᵀ C` once.
    pub fn left_mul(&self, x: &[f64]) -> Result<DenseVector> {
        let mut y = vec![0.0; self.dim()];
        let mut cached_row = usize::MAX;
        let mut cache: Vec<(Vec<Factor>, DenseVector)> = Vec::new();
        for block in &self.blocks {
            let seg = &x[self.offsets[block.row]..self.offsets[block.row + 1]];
            let product = match &block.row_scale {
                Some(scale) => {
                    let s: Vec<f64> = seg.iter().zip(scale).map(|(a, b)| a * b).collect();
                    self.chain_left(&block.chain, &s)?
                }
                None => {
                    if cached_row != block.row {
                        cache.clear();
                        cached_row = block.row;
                    }
                    self.prefix_left(&mut cache, &block.chain, seg)?
                }
            };
            let out = &mut y[self.offsets[block.col]..self.offsets[block.col + 1]];
            for (o, p) in out.iter_mut().zip(&product) {
                *o += block.weight * p;
            }
        }
        Ok(y)
    }

    fn prefix_left(
        &self,
        cache: &mut Vec<(Vec<Factor>, DenseVector)>,
        chain: &[Factor],
        seg: &[f64],
    ) -> Result<DenseVector> {
        let mut start = 0;
        let mut cur: Option<DenseVector> = None;
        for len in (1..=chain.len()).rev() {
            if let Some((_, v)) = cache.iter().find(|(p, _)| p.as_slice() == &chain[..len]) {
                start = len;
                cur = Some(v.clone());
                break;
            }
        }
        let mut cur = cur.unwrap_or_else(|| seg.to_vec());
        for len in start + 1..=chain.len() {
            cur = self.step_left(chain[len - 1], &cur)?;
            cache.push((chain[..len].to_vec(), cur.clone()));
        }
        Ok(cur)
    }

    /// `y = A x`.
    pub fn right_mul(&self, x: &[f64]) -> Result<DenseVector> {
        let mut y = vec![0.0; self.dim()];
        for block in &self.blocks {
            let seg = &x[self.offsets[block.col]..self.offsets[block.col + 1]];
            let product = self.chain_right(&block.chain, seg)?;
            let out = &mut y[self.offsets[block.row]..self.offsets[block.row + 1]];
            match &block.row_scale {
                Some(scale) => {
                    for ((o, p), s) in out.iter_mut().zip(&product).zip(scale) {
                        *o += block.weight * s * p;
                    }
                }
                None => {
                    for (o, p) in out.iter_mut().zip(&product) {
                        *o += block.weight * p;
                    }
                }
            }
        }
        Ok(y)
    }

    /// Extra heap held beyond the shared sparse factors.
    pub fn scaling_bytes(&self) -> usize {
        self.blocks
            .iter()
            .filter_map(|b| b.row_scale.as_ref())
            .map(|s| s.capacity() * std::mem::size_of::<f64>())
            .sum()
    }
}
