/// Borrowed view of one named parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<'a> {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: &'a [f64],
}

/// A container of named tensors with a fixed visiting order.
///
/// Gradients are stored in a second instance of the same type, so optimizers
/// and checkers can walk parameters and gradients in lockstep.
pub trait ParamSet {
    fn tensors(&self) -> Vec<Tensor<'_>>;
    fn tensors_mut(&mut self) -> Vec<&mut [f64]>;

    /// An instance of the same shape with every entry zero.
    fn zeros_like(&self) -> Self
    where
        Self: Sized;

    fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.data.len()).sum()
    }
}
