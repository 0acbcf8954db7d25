//! On-disk model format: one JSON header line followed by the raw model
//! payload.
//!
//! Layout: the first line is a JSON object (terminated by `\n`) describing
//! dimensions, hyperparameters, and seed; the rest of the file is
//! `k * num_docs` little-endian f64 values for theta (document-major
//! columns) followed by `vocab_size * k` values for phi (word-major rows).

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bp::TopicModel;
use crate::{Error, Result};

/// The JSON header preceding the binary payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelHeader {
    pub algo: String,
    pub k: usize,
    pub num_docs: usize,
    pub vocab_size: usize,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
}

/// Writes header and payload to `out`.
pub fn write_model<W: Write>(header: &ModelHeader, model: &TopicModel, mut out: W) -> Result<()> {
    if model.k != header.k
        || model.num_docs() != header.num_docs
        || model.vocab_size() != header.vocab_size
    {
        return Err(Error::Dimension("model does not match header".into()));
    }
    serde_json::to_writer(&mut out, header)?;
    out.write_all(b"\n")?;
    for &v in model.theta.iter().chain(model.phi.iter()) {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Reads a model written by [`write_model`].
pub fn read_model<R: Read>(reader: R) -> Result<(ModelHeader, TopicModel)> {
    let mut reader = BufReader::new(reader);
    let mut line = String::new();
    reader.read_line(&mut line)?;
    let header: ModelHeader =
        serde_json::from_str(line.trim_end()).map_err(|e| Error::ModelFormat(format!("bad header: {e}")))?;
    if header.k == 0 {
        return Err(Error::ModelFormat("k must be positive".into()));
    }
    let n_theta = header
        .k
        .checked_mul(header.num_docs)
        .ok_or_else(|| Error::ModelFormat("theta size overflow".into()))?;
    let n_phi = header
        .vocab_size
        .checked_mul(header.k)
        .ok_or_else(|| Error::ModelFormat("phi size overflow".into()))?;
    let mut payload = Vec::new();
    reader.read_to_end(&mut payload)?;
    if payload.len() != (n_theta + n_phi) * 8 {
        return Err(Error::ModelFormat(format!(
            "payload holds {} bytes, header implies {}",
            payload.len(),
            (n_theta + n_phi) * 8
        )));
    }
    let mut values = payload
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().unwrap()));
    let theta: Vec<f64> = values.by_ref().take(n_theta).collect();
    let phi: Vec<f64> = values.collect();
    let model = TopicModel { k: header.k, theta, phi };
    Ok((header, model))
}

/// Writes a model file atomically: payload goes to a temporary sibling that
/// is renamed into place only once fully written.
pub fn save_model_file(path: &Path, header: &ModelHeader, model: &TopicModel) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = std::io::BufWriter::new(std::fs::File::create(&tmp)?);
        write_model(header, model, &mut f)?;
        f.into_inner().map_err(|e| Error::Io(e.into_error()))?.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Loads a model file.
pub fn load_model_file(path: &Path) -> Result<(ModelHeader, TopicModel)> {
    read_model(std::fs::File::open(path)?)
}
