//! Versioned binary checkpoint: config echo, parameter tensors as
//! little-endian `f64`, and the training log as embedded JSON.
//!
//! Layout: magic `MMCP` (4 bytes), version `u16` = 1, payload kind `u8`
//! (0 classifier, 1 regressor), config JSON (`u32` length + bytes), then
//! the parameter section, then the log JSON (`u32` length + bytes).

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::linalg::Matrix;
use super::train::{RegressionLog, TrainingLog};
use super::{BranchMode, BranchParams, Model, ModelConfig};
use crate::embeddings::{ByteReader, FeatureKind};
use crate::error::Error;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"MMCP";
pub const CHECKPOINT_VERSION: u16 = 1;

/// A saved training artifact.
#[derive(Debug, Clone, PartialEq)]
pub enum Checkpoint {
    Classifier {
        model: Model<f64>,
        log: TrainingLog,
    },
    Regressor {
        cfg: ModelConfig,
        kinds: Vec<FeatureKind>,
        params: BranchParams<f64>,
        log: RegressionLog,
    },
}

fn write_json<T: serde::Serialize>(buf: &mut Vec<u8>, value: &T) {
    let json = serde_json::to_vec(value).expect("serializable");
    buf.extend_from_slice(&(json.len() as u32).to_le_bytes());
    buf.extend_from_slice(&json);
}

fn write_matrix(buf: &mut Vec<u8>, m: &Matrix<f64>) {
    buf.extend_from_slice(&(m.rows() as u32).to_le_bytes());
    buf.extend_from_slice(&(m.cols() as u32).to_le_bytes());
    for v in m.as_slice() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
}

fn write_vector(buf: &mut Vec<u8>, v: &[f64]) {
    buf.extend_from_slice(&(v.len() as u32).to_le_bytes());
    for x in v {
        buf.extend_from_slice(&x.to_le_bytes());
    }
}

fn write_branch(buf: &mut Vec<u8>, p: &BranchParams<f64>) {
    write_matrix(buf, &p.w1);
    write_vector(buf, &p.b1);
    write_matrix(buf, &p.w2);
    write_vector(buf, &p.b2);
}

fn read_json<T: serde::de::DeserializeOwned>(r: &mut ByteReader) -> Result<T, Error> {
    let len = r.u32()? as usize;
    let bytes = r.take(len)?;
    serde_json::from_slice(bytes)
        .map_err(|e| Error::invalid("checkpoint", format!("embedded JSON: {e}")))
}

fn read_f64(r: &mut ByteReader) -> Result<f64, Error> {
    Ok(f64::from_le_bytes(r.take(8)?.try_into().unwrap()))
}

fn read_matrix(r: &mut ByteReader) -> Result<Matrix<f64>, Error> {
    let rows = r.u32()? as usize;
    let cols = r.u32()? as usize;
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        data.push(read_f64(r)?);
    }
    let mut m = Matrix::zeros(rows, cols);
    m.as_mut_slice().copy_from_slice(&data);
    Ok(m)
}

fn read_vector(r: &mut ByteReader) -> Result<Vec<f64>, Error> {
    let len = r.u32()? as usize;
    (0..len).map(|_| read_f64(r)).collect()
}

fn read_branch(r: &mut ByteReader) -> Result<BranchParams<f64>, Error> {
    Ok(BranchParams {
        w1: read_matrix(r)?,
        b1: read_vector(r)?,
        w2: read_matrix(r)?,
        b2: read_vector(r)?,
    })
}

pub fn save_checkpoint(ckpt: &Checkpoint, path: &Path) -> Result<(), Error> {
    let mut buf = Vec::new();
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    match ckpt {
        Checkpoint::Classifier { model, log } => {
            buf.push(0);
            write_json(&mut buf, &model.cfg);
            write_json(&mut buf, &model.mode);
            buf.push(model.visual.is_some() as u8);
            if let Some(p) = &model.visual {
                write_branch(&mut buf, p);
            }
            buf.push(model.textual.is_some() as u8);
            if let Some(p) = &model.textual {
                write_branch(&mut buf, p);
            }
            write_json(&mut buf, log);
        }
        Checkpoint::Regressor {
            cfg,
            kinds,
            params,
            log,
        } => {
            buf.push(1);
            write_json(&mut buf, cfg);
            write_json(&mut buf, kinds);
            write_branch(&mut buf, params);
            write_json(&mut buf, log);
        }
    }
    let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&buf).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, Error> {
    let mut data = Vec::new();
    File::open(path)
        .map_err(|e| Error::io(path, e))?
        .read_to_end(&mut data)
        .map_err(|e| Error::io(path, e))?;
    let mut r = ByteReader::new(&data, "checkpoint");
    if r.take(4)? != CHECKPOINT_MAGIC {
        return Err(Error::BadMagic { what: "checkpoint" });
    }
    let version = r.u16()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Version {
            what: "checkpoint",
            found: version,
        });
    }
    let kind = r.take(1)?[0];
    let ckpt = match kind {
        0 => {
            let cfg: ModelConfig = read_json(&mut r)?;
            let mode: BranchMode = read_json(&mut r)?;
            let visual = if r.take(1)?[0] == 1 {
                Some(read_branch(&mut r)?)
            } else {
                None
            };
            let textual = if r.take(1)?[0] == 1 {
                Some(read_branch(&mut r)?)
            } else {
                None
            };
            let log: TrainingLog = read_json(&mut r)?;
            Checkpoint::Classifier {
                model: Model {
                    cfg,
                    mode,
                    visual,
                    textual,
                },
                log,
            }
        }
        1 => {
            let cfg: ModelConfig = read_json(&mut r)?;
            let kinds: Vec<FeatureKind> = read_json(&mut r)?;
            let params = read_branch(&mut r)?;
            let log: RegressionLog = read_json(&mut r)?;
            Checkpoint::Regressor {
                cfg,
                kinds,
                params,
                log,
            }
        }
        other => {
            return Err(Error::invalid(
                "checkpoint",
                format!("unknown payload kind {other}"),
            ))
        }
    };
    if !r.at_end() {
        return Err(Error::invalid("checkpoint", "trailing bytes"));
    }
    Ok(ckpt)
}
