//! Block weight container: shape validation, seeded initialization, and
//! the on-disk format (one flat SCIB payload plus a JSON tensor index).

use crate::error::{Result, SciError};
use crate::io::{load_scib, save_scib};
use crate::rng::SeededRng;
use ndarray::{Array2, Array5};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Learnable parameters of one block. Biases are plain vectors; the
/// 1x1x1 fusion and all projections are channel matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockWeights {
    pub c: usize,
    /// Dilated 3x3x3 kernels for dilations 1, 2, 4, each C -> C.
    pub msdb_kernels: [Array5<f32>; 3],
    pub msdb_biases: [Vec<f32>; 3],
    /// Fusion of the three concatenated paths, (C, 3C).
    pub msdb_fuse: Array2<f32>,
    pub msdb_fuse_bias: Vec<f32>,
    /// Spectral MLP, (hidden, C) then (C, hidden).
    pub feb_w1: Array2<f32>,
    pub feb_b1: Vec<f32>,
    pub feb_w2: Array2<f32>,
    pub feb_b2: Vec<f32>,
    pub scb_kernels: [Array5<f32>; 2],
    pub scb_biases: [Vec<f32>; 2],
    pub tsab_wq: Array2<f32>,
    pub tsab_wk: Array2<f32>,
    pub tsab_wv: Array2<f32>,
    pub tsab_wout: Array2<f32>,
    pub ffn_w1: Array2<f32>,
    pub ffn_b1: Vec<f32>,
    pub ffn_w2: Array2<f32>,
    pub ffn_b2: Vec<f32>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    dims: Vec<u32>,
    byte_offset: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct TensorIndex {
    tensors: Vec<TensorEntry>,
}

impl BlockWeights {
    /// All weights zero; the block built on these is the identity map.
    pub fn zeros(c: usize) -> Result<Self> {
        Self::zeros_with_hidden(c, c)
    }

    fn zeros_with_hidden(c: usize, hidden: usize) -> Result<Self> {
        if c == 0 || c % 2 != 0 {
            return Err(SciError::InvalidDims(format!(
                "channel count must be even and positive, got {c}"
            )));
        }
        let conv = || Array5::<f32>::zeros((c, c, 3, 3, 3));
        Ok(BlockWeights {
            c,
            msdb_kernels: [conv(), conv(), conv()],
            msdb_biases: [vec![0.0; c], vec![0.0; c], vec![0.0; c]],
            msdb_fuse: Array2::zeros((c, 3 * c)),
            msdb_fuse_bias: vec![0.0; c],
            feb_w1: Array2::zeros((hidden, c)),
            feb_b1: vec![0.0; hidden],
            feb_w2: Array2::zeros((c, hidden)),
            feb_b2: vec![0.0; c],
            scb_kernels: [conv(), conv()],
            scb_biases: [vec![0.0; c], vec![0.0; c]],
            tsab_wq: Array2::zeros((c, c)),
            tsab_wk: Array2::zeros((c, c)),
            tsab_wv: Array2::zeros((c, c)),
            tsab_wout: Array2::zeros((c, c)),
            ffn_w1: Array2::zeros((4 * c, c)),
            ffn_b1: vec![0.0; 4 * c],
            ffn_w2: Array2::zeros((c, 4 * c)),
            ffn_b2: vec![0.0; c],
        })
    }

    pub fn validate(&self) -> Result<()> {
        let c = self.c;
        if c == 0 || c % 2 != 0 {
            return Err(SciError::InvalidDims(format!(
                "channel count must be even and positive, got {c}"
            )));
        }
        let hidden = self.feb_w1.dim().0;
        let check = |name: &str, got: &[usize], want: &[usize]| -> Result<()> {
            if got != want {
                return Err(SciError::ShapeMismatch(format!(
                    "{name}: {got:?} wants {want:?}"
                )));
            }
            Ok(())
        };
        let conv_shape = [c, c, 3, 3, 3];
        check("msdb.d1.kernel", self.msdb_kernels[0].shape(), &conv_shape)?;
        check("msdb.d2.kernel", self.msdb_kernels[1].shape(), &conv_shape)?;
        check("msdb.d4.kernel", self.msdb_kernels[2].shape(), &conv_shape)?;
        check("msdb.fuse.kernel", self.msdb_fuse.shape(), &[c, 3 * c])?;
        check("feb.w1", self.feb_w1.shape(), &[hidden, c])?;
        check("feb.w2", self.feb_w2.shape(), &[c, hidden])?;
        check("scb.conv1.kernel", self.scb_kernels[0].shape(), &conv_shape)?;
        check("scb.conv2.kernel", self.scb_kernels[1].shape(), &conv_shape)?;
        check("tsab.wq", self.tsab_wq.shape(), &[c, c])?;
        check("tsab.wk", self.tsab_wk.shape(), &[c, c])?;
        check("tsab.wv", self.tsab_wv.shape(), &[c, c])?;
        check("tsab.wout", self.tsab_wout.shape(), &[c, c])?;
        check("ffn.w1", self.ffn_w1.shape(), &[4 * c, c])?;
        check("ffn.w2", self.ffn_w2.shape(), &[c, 4 * c])?;
        let biases = [
            (&self.msdb_biases[0], c),
            (&self.msdb_biases[1], c),
            (&self.msdb_biases[2], c),
            (&self.msdb_fuse_bias, c),
            (&self.feb_b1, hidden),
            (&self.feb_b2, c),
            (&self.scb_biases[0], c),
            (&self.scb_biases[1], c),
            (&self.ffn_b1, 4 * c),
            (&self.ffn_b2, c),
        ];
        for (b, want) in biases {
            if b.len() != want {
                return Err(SciError::ShapeMismatch(format!(
                    "bias length {} wants {want}",
                    b.len()
                )));
            }
        }
        for (name, ok) in self.tensor_views().map(|(n, v)| (n, v.iter().all(|f| f.is_finite()))) {
            if !ok {
                return Err(SciError::NonFinite(format!("weight tensor {name}")));
            }
        }
        Ok(())
    }

    /// Tensors in serialization order: (name, flattened values, dims).
    fn tensor_list(&self) -> Vec<(String, Vec<f32>, Vec<u32>)> {
        let mut out = Vec::new();
        let push5 = |out: &mut Vec<_>, name: &str, a: &Array5<f32>| {
            out.push((
                name.to_string(),
                a.iter().copied().collect::<Vec<f32>>(),
                a.shape().iter().map(|&d| d as u32).collect::<Vec<u32>>(),
            ));
        };
        let push2 = |out: &mut Vec<_>, name: &str, a: &Array2<f32>| {
            out.push((
                name.to_string(),
                a.iter().copied().collect::<Vec<f32>>(),
                a.shape().iter().map(|&d| d as u32).collect::<Vec<u32>>(),
            ));
        };
        let push1 = |out: &mut Vec<_>, name: &str, v: &[f32]| {
            out.push((name.to_string(), v.to_vec(), vec![v.len() as u32]));
        };
        push5(&mut out, "msdb.d1.kernel", &self.msdb_kernels[0]);
        push1(&mut out, "msdb.d1.bias", &self.msdb_biases[0]);
        push5(&mut out, "msdb.d2.kernel", &self.msdb_kernels[1]);
        push1(&mut out, "msdb.d2.bias", &self.msdb_biases[1]);
        push5(&mut out, "msdb.d4.kernel", &self.msdb_kernels[2]);
        push1(&mut out, "msdb.d4.bias", &self.msdb_biases[2]);
        push2(&mut out, "msdb.fuse.kernel", &self.msdb_fuse);
        push1(&mut out, "msdb.fuse.bias", &self.msdb_fuse_bias);
        push2(&mut out, "feb.w1", &self.feb_w1);
        push1(&mut out, "feb.b1", &self.feb_b1);
        push2(&mut out, "feb.w2", &self.feb_w2);
        push1(&mut out, "feb.b2", &self.feb_b2);
        push5(&mut out, "scb.conv1.kernel", &self.scb_kernels[0]);
        push1(&mut out, "scb.conv1.bias", &self.scb_biases[0]);
        push5(&mut out, "scb.conv2.kernel", &self.scb_kernels[1]);
        push1(&mut out, "scb.conv2.bias", &self.scb_biases[1]);
        push2(&mut out, "tsab.wq", &self.tsab_wq);
        push2(&mut out, "tsab.wk", &self.tsab_wk);
        push2(&mut out, "tsab.wv", &self.tsab_wv);
        push2(&mut out, "tsab.wout", &self.tsab_wout);
        push2(&mut out, "ffn.w1", &self.ffn_w1);
        push1(&mut out, "ffn.b1", &self.ffn_b1);
        push2(&mut out, "ffn.w2", &self.ffn_w2);
        push1(&mut out, "ffn.b2", &self.ffn_b2);
        out
    }

    fn tensor_views(&self) -> impl Iterator<Item = (String, Vec<f32>)> {
        self.tensor_list().into_iter().map(|(n, v, _)| (n, v))
    }
}

/// Index file lives next to the payload with ".json" appended.
pub fn index_path(weights_path: &Path) -> PathBuf {
    let mut os = weights_path.as_os_str().to_owned();
    os.push(".json");
    PathBuf::from(os)
}

/// Writes the flat payload and its tensor index.
pub fn save_weights(w: &BlockWeights, path: &Path) -> Result<()> {
    w.validate()?;
    let tensors = w.tensor_list();
    let mut payload = Vec::new();
    let mut index = TensorIndex {
        tensors: Vec::with_capacity(tensors.len()),
    };
    for (name, values, dims) in tensors {
        index.tensors.push(TensorEntry {
            name,
            dims,
            byte_offset: (payload.len() * 4) as u64,
        });
        payload.extend_from_slice(&values);
    }
    save_scib(path, &[payload.len() as u32], &payload)?;
    let json = serde_json::to_string_pretty(&index)?;
    std::fs::write(index_path(path), json).map_err(|e| SciError::io(&index_path(path), e))
}

fn take_tensor(
    path: &Path,
    payload: &[f32],
    index: &TensorIndex,
    name: &str,
    want_dims: &[usize],
) -> Result<Vec<f32>> {
    let entry = index
        .tensors
        .iter()
        .find(|t| t.name == name)
        .ok_or_else(|| SciError::MissingTensor(name.to_string()))?;
    let dims: Vec<usize> = entry.dims.iter().map(|&d| d as usize).collect();
    if dims != want_dims {
        return Err(SciError::ShapeMismatch(format!(
            "{name}: stored {dims:?} wants {want_dims:?}"
        )));
    }
    if entry.byte_offset % 4 != 0 {
        return Err(SciError::format(path, format!("{name}: misaligned offset")));
    }
    let start = (entry.byte_offset / 4) as usize;
    let count: usize = dims.iter().product();
    let end = start
        .checked_add(count)
        .filter(|&e| e <= payload.len())
        .ok_or_else(|| SciError::format(path, format!("{name}: payload overrun")))?;
    Ok(payload[start..end].to_vec())
}

/// Reads a weight file written by `save_weights`. The channel count is
/// recovered from the attention projection shape.
pub fn load_weights(path: &Path) -> Result<BlockWeights> {
    let (dims, payload) = load_scib(path)?;
    if dims.len() != 1 {
        return Err(SciError::format(
            path,
            format!("weight payload must be flat, found {} dims", dims.len()),
        ));
    }
    let idx_path = index_path(path);
    let json = std::fs::read_to_string(&idx_path).map_err(|e| SciError::io(&idx_path, e))?;
    let index: TensorIndex = serde_json::from_str(&json)?;
    let wq_entry = index
        .tensors
        .iter()
        .find(|t| t.name == "tsab.wq")
        .ok_or_else(|| SciError::MissingTensor("tsab.wq".into()))?;
    if wq_entry.dims.len() != 2 || wq_entry.dims[0] != wq_entry.dims[1] {
        return Err(SciError::format(path, "tsab.wq must be square"));
    }
    let c = wq_entry.dims[0] as usize;
    let w1_entry = index
        .tensors
        .iter()
        .find(|t| t.name == "feb.w1")
        .ok_or_else(|| SciError::MissingTensor("feb.w1".into()))?;
    if w1_entry.dims.len() != 2 {
        return Err(SciError::format(path, "feb.w1 must be a matrix"));
    }
    let hidden = w1_entry.dims[0] as usize;

    let conv = |name: &str| -> Result<Array5<f32>> {
        let v = take_tensor(path, &payload, &index, name, &[c, c, 3, 3, 3])?;
        Array5::from_shape_vec((c, c, 3, 3, 3), v).map_err(|e| SciError::format(path, e.to_string()))
    };
    let mat = |name: &str, rows: usize, cols: usize| -> Result<Array2<f32>> {
        let v = take_tensor(path, &payload, &index, name, &[rows, cols])?;
        Array2::from_shape_vec((rows, cols), v).map_err(|e| SciError::format(path, e.to_string()))
    };
    let vec1 = |name: &str, len: usize| take_tensor(path, &payload, &index, name, &[len]);

    let w = BlockWeights {
        c,
        msdb_kernels: [conv("msdb.d1.kernel")?, conv("msdb.d2.kernel")?, conv("msdb.d4.kernel")?],
        msdb_biases: [
            vec1("msdb.d1.bias", c)?,
            vec1("msdb.d2.bias", c)?,
            vec1("msdb.d4.bias", c)?,
        ],
        msdb_fuse: mat("msdb.fuse.kernel", c, 3 * c)?,
        msdb_fuse_bias: vec1("msdb.fuse.bias", c)?,
        feb_w1: mat("feb.w1", hidden, c)?,
        feb_b1: vec1("feb.b1", hidden)?,
        feb_w2: mat("feb.w2", c, hidden)?,
        feb_b2: vec1("feb.b2", c)?,
        scb_kernels: [conv("scb.conv1.kernel")?, conv("scb.conv2.kernel")?],
        scb_biases: [vec1("scb.conv1.bias", c)?, vec1("scb.conv2.bias", c)?],
        tsab_wq: mat("tsab.wq", c, c)?,
        tsab_wk: mat("tsab.wk", c, c)?,
        tsab_wv: mat("tsab.wv", c, c)?,
        tsab_wout: mat("tsab.wout", c, c)?,
        ffn_w1: mat("ffn.w1", 4 * c, c)?,
        ffn_b1: vec1("ffn.b1", 4 * c)?,
        ffn_w2: mat("ffn.w2", c, 4 * c)?,
        ffn_b2: vec1("ffn.b2", c)?,
    };
    w.validate()?;
    Ok(w)
}

/// Gaussian init with variance 1/fan_in per tensor, zero biases. Each
/// tensor draws from its own named stream so layouts stay stable.
pub fn seed_weights(seed: u64, c: usize, hidden_mult: usize) -> Result<BlockWeights> {
    if c == 0 || c % 2 != 0 {
        return Err(SciError::InvalidDims(format!(
            "channel count must be even and positive, got {c}"
        )));
    }
    if hidden_mult == 0 {
        return Err(SciError::InvalidParam("hidden_mult must be >= 1".into()));
    }
    let root = SeededRng::new(seed);
    let hidden = hidden_mult * c;
    let mut w = BlockWeights::zeros_with_hidden(c, hidden)?;

    let fill = |target: &mut [f32], name: &str, fan_in: usize| {
        let mut rng = root.child_named(name);
        let normal = Normal::new(0.0f32, (1.0 / fan_in as f32).sqrt()).unwrap();
        for v in target.iter_mut() {
            *v = normal.sample(&mut rng);
        }
    };

    let conv_fan = 27 * c;
    fill(w.msdb_kernels[0].as_slice_mut().unwrap(), "msdb.d1.kernel", conv_fan);
    fill(w.msdb_kernels[1].as_slice_mut().unwrap(), "msdb.d2.kernel", conv_fan);
    fill(w.msdb_kernels[2].as_slice_mut().unwrap(), "msdb.d4.kernel", conv_fan);
    fill(w.msdb_fuse.as_slice_mut().unwrap(), "msdb.fuse.kernel", 3 * c);
    fill(w.feb_w1.as_slice_mut().unwrap(), "feb.w1", c);
    fill(w.feb_w2.as_slice_mut().unwrap(), "feb.w2", hidden);
    fill(w.scb_kernels[0].as_slice_mut().unwrap(), "scb.conv1.kernel", conv_fan);
    fill(w.scb_kernels[1].as_slice_mut().unwrap(), "scb.conv2.kernel", conv_fan);
    fill(w.tsab_wq.as_slice_mut().unwrap(), "tsab.wq", c);
    fill(w.tsab_wk.as_slice_mut().unwrap(), "tsab.wk", c);
    fill(w.tsab_wv.as_slice_mut().unwrap(), "tsab.wv", c);
    fill(w.tsab_wout.as_slice_mut().unwrap(), "tsab.wout", c);
    fill(w.ffn_w1.as_slice_mut().unwrap(), "ffn.w1", c);
    fill(w.ffn_w2.as_slice_mut().unwrap(), "ffn.w2", 4 * c);
    Ok(w)
}
