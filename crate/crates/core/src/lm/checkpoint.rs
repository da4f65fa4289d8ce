//! Model checkpoint file format.
//!
//! Layout, little-endian throughout:
//!
//! ```text
//! magic   4 bytes  "DSLM"
//! version u32      currently 1
//! hlen    u64      byte length of the JSON header
//! header  hlen     {"tokens":[...],"min_freq":..,"hparams":{..}}
//! tensors repeated, in the fixed parameter order:
//!   nlen  u32      tensor name length
//!   name  nlen     e.g. "embedding", "lstm0.w", "proj.b"
//!   rows  u64
//!   cols  u64
//!   data  rows*cols f32 values
//! ```

use super::net::{LstmLayer, NetParams};
use super::tensor::Mat;
use super::{HyperParams, LanguageModel, LmError, Vocabulary};
use serde::{Deserialize, Serialize};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"DSLM";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    tokens: Vec<String>,
    min_freq: u32,
    hparams: HyperParams,
}

pub fn save_checkpoint(model: &LanguageModel, path: &Path) -> Result<(), LmError> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    let header = Header {
        tokens: model.vocab.tokens().to_vec(),
        min_freq: model.vocab.min_freq(),
        hparams: model.hparams.clone(),
    };
    let header_bytes =
        serde_json::to_vec(&header).map_err(|e| LmError::Checkpoint(e.to_string()))?;
    w.write_all(&(header_bytes.len() as u64).to_le_bytes())?;
    w.write_all(&header_bytes)?;
    for (name, tensor) in model.params.named_tensors() {
        w.write_all(&(name.len() as u32).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        w.write_all(&(tensor.rows as u64).to_le_bytes())?;
        w.write_all(&(tensor.cols as u64).to_le_bytes())?;
        for &v in &tensor.data {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_exact_vec<R: Read>(r: &mut R, len: usize) -> Result<Vec<u8>, LmError> {
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, LmError> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64, LmError> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn read_tensor<R: Read>(r: &mut R, expect_name: &str) -> Result<Mat<f32>, LmError> {
    let nlen = read_u32(r)? as usize;
    let name = String::from_utf8(read_exact_vec(r, nlen)?)
        .map_err(|e| LmError::Checkpoint(e.to_string()))?;
    if name != expect_name {
        return Err(LmError::Checkpoint(format!(
            "expected tensor {expect_name:?}, found {name:?}"
        )));
    }
    let rows = read_u64(r)? as usize;
    let cols = read_u64(r)? as usize;
    let raw = read_exact_vec(r, rows * cols * 4)?;
    let data = raw
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok(Mat { rows, cols, data })
}

pub fn load_checkpoint(path: &Path) -> Result<LanguageModel, LmError> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let magic = read_exact_vec(&mut r, 4)?;
    if magic != MAGIC {
        return Err(LmError::Checkpoint("bad magic".into()));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(LmError::Checkpoint(format!("unsupported version {version}")));
    }
    let hlen = read_u64(&mut r)? as usize;
    let header: Header = serde_json::from_slice(&read_exact_vec(&mut r, hlen)?)
        .map_err(|e| LmError::Checkpoint(e.to_string()))?;
    let vocab = Vocabulary::from_tokens(header.tokens, header.min_freq)?;

    let embedding = read_tensor(&mut r, "embedding")?;
    let mut layers = Vec::with_capacity(header.hparams.n_layers);
    for i in 0..header.hparams.n_layers {
        layers.push(LstmLayer {
            w: read_tensor(&mut r, &format!("lstm{i}.w"))?,
            u: read_tensor(&mut r, &format!("lstm{i}.u"))?,
            b: read_tensor(&mut r, &format!("lstm{i}.b"))?,
        });
    }
    let proj_w = read_tensor(&mut r, "proj.w")?;
    let proj_b = read_tensor(&mut r, "proj.b")?;

    if embedding.rows != vocab.size()
        || embedding.cols != header.hparams.embedding_size
        || proj_w.cols != vocab.size()
    {
        return Err(LmError::Checkpoint("tensor shapes disagree with header".into()));
    }
    Ok(LanguageModel::from_parts(
        vocab,
        header.hparams,
        NetParams { embedding, layers, proj_w, proj_b },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Corpus;
    use crate::url_model::PathSeq;

    #[test]
    fn round_trip() {
        let mut corpus = Corpus::new();
        corpus.insert("d", PathSeq::from_names(["a", "b"]).unwrap());
        corpus.insert("d", PathSeq::from_names(["c"]).unwrap());
        let vocab = super::super::build_vocabulary(&corpus, 1);
        let hparams = HyperParams {
            embedding_size: 6,
            n_layers: 2,
            min_freq: 1,
            ..HyperParams::default()
        };
        let model = LanguageModel::init(vocab, hparams);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.dslm");
        save_checkpoint(&model, &path).unwrap();
        let back = load_checkpoint(&path).unwrap();
        assert_eq!(model, back);
    }

    #[test]
    fn rejects_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.dslm");
        std::fs::write(&path, b"not a checkpoint").unwrap();
        assert!(matches!(
            load_checkpoint(&path),
            Err(LmError::Checkpoint(_))
        ));
    }
}
