//! Agent checkpoints on top of the flat tensor format.
//!
//! Besides the network tensors (`enn{q}.layer{i}.weight`, `main.layer{i}.bias`,
//! `embedding.table`, ...) a checkpoint holds the optimizer step counter
//! (`optim.steps`), Adam moments (`optim.m.<name>`, `optim.v.<name>`) and
//! three JSON documents stored byte-per-value: `meta.dims`, `meta.train`
//! and `meta.optimizer`.

use std::collections::HashMap;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::config::TrainConfig;
use super::network::{AgentParams, NetworkDims};
use crate::nn::checkpoint::{self, OwnedTensor};
use crate::nn::{Optimizer, OptimizerConfig, ParamSet};
use crate::{Error, Result};

/// Everything restored from an agent checkpoint.
#[derive(Clone, Debug)]
pub struct AgentCheckpoint {
    pub dims: NetworkDims,
    pub train: TrainConfig,
    pub params: AgentParams,
    pub optimizer: Optimizer,
}

fn json_tensor<T: Serialize>(name: &str, value: &T) -> OwnedTensor {
    let bytes = serde_json::to_vec(value).expect("config types serialize");
    let data: Vec<f64> = bytes.into_iter().map(f64::from).collect();
    OwnedTensor::new(name, vec![data.len()], data)
}

fn parse_json<T: DeserializeOwned>(t: &OwnedTensor) -> Result<T> {
    let bytes: Vec<u8> = t.data.iter().map(|&v| v as u8).collect();
    serde_json::from_slice(&bytes)
        .map_err(|e| Error::Checkpoint(format!("bad {} document: {e}", t.name)))
}

pub fn to_tensors(
    dims: &NetworkDims,
    train: &TrainConfig,
    params: &AgentParams,
    optimizer: &Optimizer,
) -> Vec<OwnedTensor> {
    let mut out: Vec<OwnedTensor> = params
        .tensors()
        .into_iter()
        .map(|t| OwnedTensor::new(t.name, t.shape, t.data.to_vec()))
        .collect();
    let names: Vec<(String, Vec<usize>)> = out.iter().map(|t| (t.name.clone(), t.shape.clone())).collect();
    out.push(OwnedTensor::scalar("optim.steps", optimizer.steps() as f64));
    let (first, second) = optimizer.moments();
    for (prefix, moments) in [("optim.m.", first), ("optim.v.", second)] {
        for ((name, shape), m) in names.iter().zip(moments) {
            out.push(OwnedTensor::new(format!("{prefix}{name}"), shape.clone(), m.clone()));
        }
    }
    out.push(json_tensor("meta.dims", dims));
    out.push(json_tensor("meta.train", train));
    out.push(json_tensor("meta.optimizer", &optimizer.config));
    out
}

pub fn from_tensors(tensors: Vec<OwnedTensor>) -> Result<AgentCheckpoint> {
    let mut by_name: HashMap<String, OwnedTensor> =
        tensors.into_iter().map(|t| (t.name.clone(), t)).collect();
    let mut take = |name: &str| {
        by_name
            .remove(name)
            .ok_or_else(|| Error::Checkpoint(format!("missing tensor {name}")))
    };
    let dims: NetworkDims = parse_json(&take("meta.dims")?)?;
    let train: TrainConfig = parse_json(&take("meta.train")?)?;
    let opt_config: OptimizerConfig = parse_json(&take("meta.optimizer")?)?;

    let mut params = AgentParams::new(&dims, 0);
    let layout: Vec<(String, Vec<usize>)> = params
        .tensors()
        .into_iter()
        .map(|t| (t.name, t.shape))
        .collect();
    let mut fill = |name: &str, shape: &[usize], dst: &mut [f64]| -> Result<()> {
        let t = take(name)?;
        if t.shape != shape {
            return Err(Error::Checkpoint(format!(
                "tensor {name} has shape {:?}, expected {shape:?}",
                t.shape
            )));
        }
        dst.copy_from_slice(&t.data);
        Ok(())
    };
    for ((name, shape), dst) in layout.iter().zip(params.tensors_mut()) {
        fill(name, shape, dst)?;
    }

    let steps = take("optim.steps")?.data[0] as u64;
    let mut optimizer = Optimizer::new(opt_config)?;
    let first_moment = layout
        .first()
        .and_then(|(name, _)| take(&format!("optim.m.{name}")).ok());
    if let Some(m0) = first_moment {
        let mut first = vec![m0.data];
        for (name, _) in &layout[1..] {
            first.push(take(&format!("optim.m.{name}"))?.data);
        }
        let mut second = Vec::with_capacity(layout.len());
        for (name, _) in &layout {
            second.push(take(&format!("optim.v.{name}"))?.data);
        }
        optimizer.restore(steps, first, second);
    } else {
        optimizer.restore(steps, Vec::new(), Vec::new());
    }
    Ok(AgentCheckpoint {
        dims,
        train,
        params,
        optimizer,
    })
}

pub fn save(
    path: &Path,
    dims: &NetworkDims,
    train: &TrainConfig,
    params: &AgentParams,
    optimizer: &Optimizer,
) -> Result<()> {
    let owned = to_tensors(dims, train, params, optimizer);
    let views: Vec<_> = owned.iter().map(OwnedTensor::view).collect();
    checkpoint::save(path, &views)
}

pub fn load(path: &Path) -> Result<AgentCheckpoint> {
    from_tensors(checkpoint::load(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::CellConfig;

    #[test]
    fn round_trip_with_adam_moments() {
        let dims = NetworkDims::for_cell(&CellConfig::smoke());
        let params = AgentParams::new(&dims, 3);
        let mut opt = Optimizer::new(OptimizerConfig::default()).unwrap();
        let mut p = params.clone();
        let mut g = params.zeros_like();
        g.main.layers_mut()[0].bias[0] = 0.5;
        opt.step(&mut p, &g).unwrap();
        let train = TrainConfig::default();

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.ckpt");
        save(&path, &dims, &train, &p, &opt).unwrap();
        let back = load(&path).unwrap();
        assert_eq!(back.dims, dims);
        assert_eq!(back.train, train);
        assert_eq!(back.params, p);
        assert_eq!(back.optimizer, opt);
    }

    #[test]
    fn fresh_optimizer_round_trips() {
        let dims = NetworkDims::for_cell(&CellConfig::smoke());
        let params = AgentParams::new(&dims, 4);
        let opt = Optimizer::new(OptimizerConfig::default()).unwrap();
        let back = from_tensors(to_tensors(&dims, &TrainConfig::default(), &params, &opt)).unwrap();
        assert_eq!(back.params, params);
        assert_eq!(back.optimizer, opt);
    }

    #[test]
    fn missing_tensor_is_reported() {
        let dims = NetworkDims::for_cell(&CellConfig::smoke());
        let params = AgentParams::new(&dims, 4);
        let opt = Optimizer::new(OptimizerConfig::default()).unwrap();
        let mut t = to_tensors(&dims, &TrainConfig::default(), &params, &opt);
        t.retain(|t| t.name != "embedding.table");
        assert!(matches!(from_tensors(t), Err(Error::Checkpoint(_))));
    }
}
