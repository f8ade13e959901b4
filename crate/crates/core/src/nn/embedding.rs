use rand::Rng;

use super::params::{ParamSet, Tensor};
use crate::{Error, Result};

/// `ceil(num_prbs^(1/4))`, computed exactly on integers.
pub fn embedding_dim(num_prbs: usize) -> usize {
    let mut n = 1usize;
    while n.pow(4) < num_prbs {
        n += 1;
    }
    n
}

/// Trainable lookup table, one row per PRB index.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    rows: usize,
    dim: usize,
    data: Vec<f64>,
}

impl EmbeddingTable {
    pub fn zeros(rows: usize, dim: usize) -> Self {
        Self {
            rows,
            dim,
            data: vec![0.0; rows * dim],
        }
    }

    /// Rows uniform in ±0.05, dimension `embedding_dim(rows)`.
    pub fn random<R: Rng + ?Sized>(rows: usize, rng: &mut R) -> Self {
        let dim = embedding_dim(rows);
        Self {
            rows,
            dim,
            data: (0..rows * dim).map(|_| rng.random_range(-0.05..=0.05)).collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lookup(&self, index: usize) -> Result<&[f64]> {
        if index >= self.rows {
            return Err(Error::Action(format!(
                "PRB index {index} out of range 0..{}",
                self.rows
            )));
        }
        Ok(&self.data[index * self.dim..(index + 1) * self.dim])
    }

    pub fn row_mut(&mut self, index: usize) -> Result<&mut [f64]> {
        if index >= self.rows {
            return Err(Error::Action(format!(
                "PRB index {index} out of range 0..{}",
                self.rows
            )));
        }
        Ok(&mut self.data[index * self.dim..(index + 1) * self.dim])
    }

    /// Adds `grad` into row `index` of a gradient table.
    pub fn accumulate(&mut self, index: usize, grad: &[f64]) -> Result<()> {
        let row = self.row_mut(index)?;
        for (r, g) in row.iter_mut().zip(grad) {
            *r += g;
        }
        Ok(())
    }

    pub(crate) fn named_tensor<'a>(&'a self, name: &str) -> Tensor<'a> {
        Tensor {
            name: name.to_string(),
            shape: vec![self.rows, self.dim],
            data: &self.data,
        }
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

impl ParamSet for EmbeddingTable {
    fn tensors(&self) -> Vec<Tensor<'_>> {
        vec![self.named_tensor("table")]
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        vec![&mut self.data]
    }

    fn zeros_like(&self) -> Self {
        Self::zeros(self.rows, self.dim)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn dims() {
        assert_eq!(embedding_dim(25), 3);
        assert_eq!(embedding_dim(16), 2);
        assert_eq!(embedding_dim(17), 3);
        assert_eq!(embedding_dim(6), 2);
        assert_eq!(embedding_dim(1), 1);
    }

    #[test]
    fn lookup_returns_row() {
        let t = EmbeddingTable::random(25, &mut stream(1, "e"));
        assert_eq!(t.dim(), 3);
        for i in 0..25 {
            assert_eq!(t.lookup(i).unwrap(), &t.tensors()[0].data[i * 3..i * 3 + 3]);
        }
        assert!(matches!(t.lookup(25), Err(Error::Action(_))));
    }

    #[test]
    fn accumulate_touches_one_row() {
        let mut g = EmbeddingTable::zeros(5, 2);
        g.accumulate(3, &[1.0, -2.0]).unwrap();
        let d = g.tensors()[0].data.to_vec();
        assert_eq!(d, vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, -2.0, 0.0, 0.0]);
    }
}
