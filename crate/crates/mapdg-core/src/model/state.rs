//! Run configuration, trainable state, and checkpoint serialization.

use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::adam::Adam;
use crate::model::mlp::{Linear, Mlp};
use crate::scalar::Scalar;

/// Prediction task driving head dimensions and metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    NodeClassification,
    LinkExistence,
    LinkDirection,
    LinkThreeClass,
}

impl Task {
    pub fn classes(&self, graph_classes: usize) -> usize {
        match self {
            Task::NodeClassification => graph_classes,
            Task::LinkExistence | Task::LinkDirection => 2,
            Task::LinkThreeClass => 3,
        }
    }

    pub fn is_link(&self) -> bool {
        !matches!(self, Task::NodeClassification)
    }
}

/// How per-pair potentials are produced during training.
///
/// `Map` and `MapPlusPlus` are the adaptive modes (weight-free and learned);
/// the rest pin a scalar potential for comparison runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Map,
    #[serde(alias = "map++")]
    MapPlusPlus,
    Fixed {
        q: f64,
    },
    EdgesBaseline {
        q_rel: f64,
    },
    RingBaseline {
        k: usize,
    },
    PerturbationBaseline {
        epsilon: f64,
    },
}

impl Strategy {
    pub fn is_adaptive(&self) -> bool {
        matches!(self, Strategy::Map | Strategy::MapPlusPlus)
    }
}

fn default_edge_hidden() -> usize {
    8
}
fn default_att_hidden() -> usize {
    16
}
fn default_patience() -> usize {
    50
}

/// Training hyperparameters. `strategy` also accepts the key `mode` and the
/// token `map++` in JSON configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Propagation depth K (at least 1).
    pub k: usize,
    pub epochs: usize,
    /// Re-encode period e (at least 1); adaptive strategies rebuild the
    /// potentials and the propagation stack every e epochs.
    pub re_encode_every: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub seed: u64,
    #[serde(alias = "mode")]
    pub strategy: Strategy,
    pub task: Task,
    #[serde(default = "default_edge_hidden")]
    pub edge_hidden: usize,
    #[serde(default = "default_att_hidden")]
    pub att_hidden: usize,
    /// Early-stopping patience in epochs without validation improvement.
    #[serde(default = "default_patience")]
    pub patience: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            k: 3,
            epochs: 200,
            re_encode_every: 20,
            lr: 1e-2,
            weight_decay: 5e-4,
            seed: 0,
            strategy: Strategy::Map,
            task: Task::NodeClassification,
            edge_hidden: default_edge_hidden(),
            att_hidden: default_att_hidden(),
            patience: default_patience(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if self.re_encode_every == 0 {
            return Err(Error::Config("re_encode_every must be at least 1".into()));
        }
        if !(self.lr > 0.0) {
            return Err(Error::Config("lr must be positive".into()));
        }
        if self.weight_decay < 0.0 {
            return Err(Error::Config("weight_decay must be non-negative".into()));
        }
        if self.edge_hidden == 0 || self.att_hidden == 0 {
            return Err(Error::Config("hidden sizes must be positive".into()));
        }
        if self.patience == 0 {
            return Err(Error::Config("patience must be positive".into()));
        }
        if let Strategy::Fixed { q } = self.strategy {
            if !(0.0..=0.25).contains(&q) {
                return Err(Error::Config(format!("fixed q = {q} outside [0, 0.25]")));
            }
        }
        Ok(())
    }
}

/// Width bookkeeping for the three trainable blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    pub k: usize,
    pub f: usize,
    pub classes: usize,
    /// Input width of the classification head: `2f` for node tasks, `4f`
    /// for pair tasks.
    pub emb_dim: usize,
    pub edge_hidden: usize,
    pub att_hidden: usize,
}

/// All trainable parameters plus their optimizer moments.
///
/// The edge scorer maps 2 pair statistics through `edge_hidden` tanh units
/// to one logit whose sigmoid, scaled by 1/4, is the learned potential; a
/// zero output layer therefore starts every potential at 0.125. The
/// attention scorer maps the concatenated propagation steps to one score
/// per step.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState<T> {
    pub edge_scorer: Mlp<T>,
    pub att_scorer: Mlp<T>,
    pub update: Linear<T>,
    pub opt_edge: Adam<T>,
    pub opt_att: Adam<T>,
    pub opt_update: Adam<T>,
    pub epoch: usize,
    pub dims: ModelDims,
}

impl<T: Scalar> ModelState<T> {
    pub fn init(dims: ModelDims, rng: &mut impl Rng) -> Self {
        let edge_scorer = Mlp::new(rng, 2, dims.edge_hidden, 1, true);
        let att_in = (dims.k + 1) * 2 * dims.f;
        let att_scorer = Mlp::new(rng, att_in, dims.att_hidden, dims.k + 1, false);
        let update = Linear::glorot(rng, dims.emb_dim, dims.classes);
        let opt_edge = Adam::for_tensors(&edge_scorer.tensors());
        let opt_att = Adam::for_tensors(&att_scorer.tensors());
        let opt_update = Adam::for_tensors(&update.tensors());
        Self { edge_scorer, att_scorer, update, opt_edge, opt_att, opt_update, epoch: 0, dims }
    }

    fn all_tensors(&self) -> Vec<&[T]> {
        let mut t = self.edge_scorer.tensors();
        t.extend(self.att_scorer.tensors());
        t.extend(self.update.tensors());
        t
    }

    fn all_tensors_mut(&mut self) -> Vec<&mut [T]> {
        let mut t = self.edge_scorer.tensors_mut();
        t.extend(self.att_scorer.tensors_mut());
        t.extend(self.update.tensors_mut());
        t
    }
}

const CKPT_MAGIC: [u8; 8] = *b"MDGCKPT1";

#[derive(Serialize, Deserialize)]
struct CheckpointHeader {
    config: TrainConfig,
    dims: ModelDims,
    epoch: usize,
    n_pairs: usize,
    tensor_lens: Vec<usize>,
}

/// Writes state, optimizer moments, and the active per-pair potentials.
pub fn save_checkpoint<T: Scalar>(
    path: &Path,
    config: &TrainConfig,
    state: &ModelState<T>,
    q_star: &[T],
) -> Result<()> {
    let tensors = state.all_tensors();
    let header = CheckpointHeader {
        config: config.clone(),
        dims: state.dims,
        epoch: state.epoch,
        n_pairs: q_star.len(),
        tensor_lens: tensors.iter().map(|t| t.len()).collect(),
    };
    let header_json = serde_json::to_vec(&header)?;
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    w.write_all(&CKPT_MAGIC)?;
    w.write_all(&(header_json.len() as u64).to_le_bytes())?;
    w.write_all(&header_json)?;
    let write_slice = |s: &[T], w: &mut dyn Write| -> Result<()> {
        for &v in s {
            w.write_all(&v.f64().to_le_bytes())?;
        }
        Ok(())
    };
    for t in &tensors {
        write_slice(t, &mut w)?;
    }
    for opt in [&state.opt_edge, &state.opt_att, &state.opt_update] {
        w.write_all(&opt.step_count().to_le_bytes())?;
        let (m, v) = opt.moments();
        for buf in m.iter().chain(v.iter()) {
            write_slice(buf, &mut w)?;
        }
    }
    write_slice(q_star, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Reads a checkpoint written by [`save_checkpoint`].
pub fn load_checkpoint<T: Scalar>(
    path: &Path,
) -> Result<(TrainConfig, ModelState<T>, Vec<T>)> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if magic != CKPT_MAGIC {
        return Err(Error::Parameter("not a checkpoint file".into()));
    }
    let mut len_buf = [0u8; 8];
    r.read_exact(&mut len_buf)?;
    let header_len = u64::from_le_bytes(len_buf) as usize;
    let mut header_json = vec![0u8; header_len];
    r.read_exact(&mut header_json)?;
    let header: CheckpointHeader = serde_json::from_slice(&header_json)?;

    let read_vec = |len: usize, r: &mut dyn Read| -> Result<Vec<T>> {
        let mut out = Vec::with_capacity(len);
        let mut buf = [0u8; 8];
        for _ in 0..len {
            r.read_exact(&mut buf)?;
            out.push(T::c(f64::from_le_bytes(buf)));
        }
        Ok(out)
    };

    // a throwaway rng: every tensor is overwritten below
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    use rand::SeedableRng;
    let mut state = ModelState::<T>::init(header.dims, &mut rng);
    state.epoch = header.epoch;
    {
        let expected: Vec<usize> = state.all_tensors().iter().map(|t| t.len()).collect();
        if expected != header.tensor_lens {
            return Err(Error::Shape("checkpoint tensor shapes disagree".into()));
        }
        let mut tensors = state.all_tensors_mut();
        for t in tensors.iter_mut() {
            let vals = read_vec(t.len(), &mut r)?;
            t.copy_from_slice(&vals);
        }
    }
    let group_lens: [Vec<usize>; 3] = [
        state.edge_scorer.tensors().iter().map(|t| t.len()).collect(),
        state.att_scorer.tensors().iter().map(|t| t.len()).collect(),
        state.update.tensors().iter().map(|t| t.len()).collect(),
    ];
    let mut opts = Vec::with_capacity(3);
    for lens in &group_lens {
        let mut t_buf = [0u8; 8];
        r.read_exact(&mut t_buf)?;
        let t = u64::from_le_bytes(t_buf);
        let mut m = Vec::new();
        for &l in lens {
            m.push(read_vec(l, &mut r)?);
        }
        let mut v = Vec::new();
        for &l in lens {
            v.push(read_vec(l, &mut r)?);
        }
        opts.push(Adam::restore(m, v, t));
    }
    state.opt_update = opts.pop().expect("three groups");
    state.opt_att = opts.pop().expect("three groups");
    state.opt_edge = opts.pop().expect("three groups");
    let q_star = read_vec(header.n_pairs, &mut r)?;
    Ok((header.config, state, q_star))
}
