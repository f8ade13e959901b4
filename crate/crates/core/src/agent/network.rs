//! The composed Q-network: one encoder per QoS class, a PRB embedding and
//! the main DQN, with UE shuffling wrapped around the main network.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::{CellConfig, NUM_QOS_CLASSES};
use crate::nn::{embedding_dim, Activation, EmbeddingTable, Mlp, MlpCache, ParamSet, Tensor};
use crate::rng::stream;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkDims {
    pub num_ues: usize,
    pub num_prbs: usize,
    pub buffer_len: usize,
    pub enn_hidden: Vec<usize>,
    pub enn_out: usize,
    pub main_hidden: Vec<usize>,
}

impl NetworkDims {
    /// Encoders 66 -> 16 -> 8 -> 3 (ReLU hidden, linear code) and main network 99 -> 79 -> 79 -> 32 at
    /// K = 32, L = 32, N_PRB = 25; other cells keep the hidden widths.
    pub fn for_cell(cell: &CellConfig) -> Self {
        Self {
            num_ues: cell.num_ues,
            num_prbs: cell.num_prbs,
            buffer_len: cell.buffer_len,
            enn_hidden: vec![16, 8],
            enn_out: 3,
            main_hidden: vec![79, 79],
        }
    }

    pub fn enn_input(&self) -> usize {
        2 + 2 * self.buffer_len
    }

    pub fn embedding_dim(&self) -> usize {
        embedding_dim(self.num_prbs)
    }

    pub fn main_input(&self) -> usize {
        self.num_ues * self.enn_out + self.embedding_dim()
    }

    pub fn enn_widths(&self) -> Vec<usize> {
        let mut w = vec![self.enn_input()];
        w.extend(&self.enn_hidden);
        w.push(self.enn_out);
        w
    }

    pub fn main_widths(&self) -> Vec<usize> {
        let mut w = vec![self.main_input()];
        w.extend(&self.main_hidden);
        w.push(self.num_ues);
        w
    }
}

/// Identity when `shuffle` is false, otherwise a uniform random permutation.
/// `perm[j]` is the UE whose encoding occupies input block `j`.
pub fn permutation<R: Rng + ?Sized>(k: usize, shuffle: bool, rng: &mut R) -> Vec<usize> {
    let mut p: Vec<usize> = (0..k).collect();
    if shuffle {
        p.shuffle(rng);
    }
    p
}

/// Learnable parameters of the agent.
#[derive(Clone, Debug, PartialEq)]
pub struct AgentParams {
    /// Encoder for QoS class `qi` lives at index `qi - 1`.
    pub enn: Vec<Mlp>,
    pub main: Mlp,
    pub embedding: EmbeddingTable,
}

/// Everything the backward pass needs from one forward pass.
#[derive(Clone, Debug)]
pub struct QForward {
    /// `q[k]` scores UE `k`, whatever the permutation.
    pub q: Vec<f64>,
    pub perm: Vec<usize>,
    pub prb: usize,
    qis: Vec<u8>,
    enn_caches: Vec<MlpCache>,
    main_cache: MlpCache,
}

impl AgentParams {
    /// Glorot-initialized encoders and main network, embedding rows in ±0.05.
    pub fn new(dims: &NetworkDims, seed: u64) -> Self {
        let mut rng = stream(seed, "agent-init");
        let enn = (0..NUM_QOS_CLASSES)
            .map(|_| Mlp::glorot(&dims.enn_widths(), Activation::Relu, Activation::Linear, &mut rng))
            .collect();
        let main = Mlp::glorot(&dims.main_widths(), Activation::Relu, Activation::Linear, &mut rng);
        let embedding = EmbeddingTable::random(dims.num_prbs, &mut rng);
        Self {
            enn,
            main,
            embedding,
        }
    }

    /// Assembles parameters, checking that the pieces fit together.
    pub fn from_parts(enn: Vec<Mlp>, main: Mlp, embedding: EmbeddingTable) -> Result<Self> {
        if enn.len() != NUM_QOS_CLASSES {
            return Err(Error::Shape(format!("need 4 encoders, got {}", enn.len())));
        }
        let out = enn[0].output_width();
        let inp = enn[0].input_width();
        if enn.iter().any(|e| e.output_width() != out || e.input_width() != inp) {
            return Err(Error::Shape("encoders disagree on widths".into()));
        }
        let k = main.output_width();
        if main.input_width() != k * out + embedding.dim() {
            return Err(Error::Shape(format!(
                "main network takes {} inputs, expected {} UEs x {} + {}",
                main.input_width(),
                k,
                out,
                embedding.dim()
            )));
        }
        Ok(Self {
            enn,
            main,
            embedding,
        })
    }

    pub fn num_ues(&self) -> usize {
        self.main.output_width()
    }

    /// The encoder shared by every UE of class `qi`.
    pub fn encoder(&self, qi: u8) -> &Mlp {
        &self.enn[usize::from(qi) - 1]
    }

    /// Compressed representation of one UE.
    pub fn encode_ue(&self, qi: u8, features: &[f64]) -> Result<Vec<f64>> {
        self.encoder(qi).predict(features)
    }

    /// `Q = P^-1 * DQN(P * x)`: encodes every UE, lays the encodings out in
    /// `perm` order, appends the PRB embedding and maps the outputs back so
    /// that `q[k]` belongs to UE `k`.
    pub fn forward(
        &self,
        features: &[Vec<f64>],
        qis: &[u8],
        prb: usize,
        perm: &[usize],
    ) -> Result<QForward> {
        let k = self.num_ues();
        if features.len() != k || qis.len() != k || perm.len() != k {
            return Err(Error::Shape(format!(
                "expected {k} UEs, got {} features / {} classes / {} permutation entries",
                features.len(),
                qis.len(),
                perm.len()
            )));
        }
        let mut seen = vec![false; k];
        for &p in perm {
            if p >= k || std::mem::replace(&mut seen[p], true) {
                return Err(Error::Shape("perm is not a permutation".into()));
            }
        }

        let mut codes = Vec::with_capacity(k);
        let mut enn_caches = Vec::with_capacity(k);
        for (x, &qi) in features.iter().zip(qis) {
            let (z, cache) = self.encoder(qi).forward(x)?;
            codes.push(z);
            enn_caches.push(cache);
        }
        let mut input = Vec::with_capacity(self.main.input_width());
        for &ue in perm {
            input.extend_from_slice(&codes[ue]);
        }
        input.extend_from_slice(self.embedding.lookup(prb)?);
        let (out, main_cache) = self.main.forward(&input)?;
        let mut q = vec![0.0; k];
        for (j, &ue) in perm.iter().enumerate() {
            q[ue] = out[j];
        }
        Ok(QForward {
            q,
            perm: perm.to_vec(),
            prb,
            qis: qis.to_vec(),
            enn_caches,
            main_cache,
        })
    }

    /// Accumulates the gradient of `dot(q, grad_q)` into `grads`.
    pub fn backward(&self, fwd: &QForward, grad_q: &[f64], grads: &mut AgentParams) -> Result<()> {
        let k = self.num_ues();
        if grad_q.len() != k {
            return Err(Error::Shape(format!(
                "grad_q has {} entries, expected {k}",
                grad_q.len()
            )));
        }
        let grad_out: Vec<f64> = fwd.perm.iter().map(|&ue| grad_q[ue]).collect();
        let grad_in = self
            .main
            .backward_into(&fwd.main_cache, &grad_out, &mut grads.main)?;
        let width = self.enn[0].output_width();
        for (j, &ue) in fwd.perm.iter().enumerate() {
            let g = &grad_in[j * width..(j + 1) * width];
            if g.iter().all(|&v| v == 0.0) {
                continue;
            }
            let slot = usize::from(fwd.qis[ue]) - 1;
            self.enn[slot].backward_into(&fwd.enn_caches[ue], g, &mut grads.enn[slot])?;
        }
        grads
            .embedding
            .accumulate(fwd.prb, &grad_in[k * width..])?;
        Ok(())
    }

    /// ReLU region signature of a forward pass, for finite-difference checks.
    pub fn relu_signature(&self, fwd: &QForward) -> u64 {
        let mut h = fwd.main_cache.relu_signature(self.main.layers());
        for (cache, &qi) in fwd.enn_caches.iter().zip(&fwd.qis) {
            h = h.rotate_left(7) ^ cache.relu_signature(self.encoder(qi).layers());
        }
        h
    }
}

impl ParamSet for AgentParams {
    fn tensors(&self) -> Vec<Tensor<'_>> {
        let mut out = Vec::new();
        for (i, e) in self.enn.iter().enumerate() {
            e.named_tensors(&format!("enn{}.", i + 1), &mut out);
        }
        self.main.named_tensors("main.", &mut out);
        out.push(self.embedding.named_tensor("embedding.table"));
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for e in &mut self.enn {
            e.push_tensors_mut(&mut out);
        }
        self.main.push_tensors_mut(&mut out);
        out.push(self.embedding.data_mut());
        out
    }

    fn zeros_like(&self) -> Self {
        Self {
            enn: self.enn.iter().map(ParamSet::zeros_like).collect(),
            main: self.main.zeros_like(),
            embedding: self.embedding.zeros_like(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Dense;

    #[test]
    fn paper_dimensions() {
        let dims = NetworkDims::for_cell(&CellConfig::paper());
        assert_eq!(dims.enn_widths(), vec![66, 16, 8, 3]);
        assert_eq!(dims.main_widths(), vec![99, 79, 79, 32]);
        assert_eq!(dims.embedding_dim(), 3);
        let p = AgentParams::new(&dims, 1);
        assert_eq!(p.enn.len(), 4);
        assert_eq!((p.embedding.rows(), p.embedding.dim()), (25, 3));
    }

    #[test]
    fn zero_encoder_gives_zero_code() {
        let dims = NetworkDims::for_cell(&CellConfig::smoke());
        let mut p = AgentParams::new(&dims, 2);
        p.enn[1] = p.enn[1].zeros_like();
        assert_eq!(p.encode_ue(2, &[0.7; 18]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn classes_share_one_encoder() {
        let dims = NetworkDims::for_cell(&CellConfig::paper());
        let p = AgentParams::new(&dims, 3);
        let cell = CellConfig::paper();
        for a in 0..32 {
            for b in 0..32 {
                let same = std::ptr::eq(p.encoder(cell.qi_of(a)), p.encoder(cell.qi_of(b)));
                assert_eq!(same, cell.qi_of(a) == cell.qi_of(b));
            }
        }
        let x: Vec<f64> = (0..66).map(|i| (i as f64 * 0.37).sin()).collect();
        assert_eq!(p.encode_ue(3, &x).unwrap(), p.encode_ue(3, &x).unwrap());
        assert_ne!(p.encode_ue(1, &x).unwrap(), p.encode_ue(2, &x).unwrap());
    }

    #[test]
    fn rejects_non_permutation() {
        let dims = NetworkDims::for_cell(&CellConfig::smoke());
        let p = AgentParams::new(&dims, 4);
        let feats = vec![vec![0.0; 18]; 8];
        let qis: Vec<u8> = (0..8).map(|k| (k % 4) as u8 + 1).collect();
        let perm = vec![0, 1, 2, 3, 4, 5, 6, 6];
        assert!(matches!(p.forward(&feats, &qis, 0, &perm), Err(Error::Shape(_))));
        let ok: Vec<usize> = (0..8).collect();
        assert!(matches!(p.forward(&feats, &qis, 6, &ok), Err(Error::Action(_))));
    }

    #[test]
    fn from_parts_checks_main_width() {
        let dims = NetworkDims::for_cell(&CellConfig::smoke());
        let p = AgentParams::new(&dims, 5);
        let wrong = Mlp::from_layers(vec![Dense::zeros(10, 8, Activation::Linear)]).unwrap();
        assert!(AgentParams::from_parts(p.enn.clone(), wrong, p.embedding.clone()).is_err());
        assert!(AgentParams::from_parts(p.enn.clone(), p.main.clone(), p.embedding.clone()).is_ok());
    }
}
