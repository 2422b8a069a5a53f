//! Versioned JSON checkpoints of counting-network parameters.
//!
//! Floats are written in shortest round-trip form, so a reload is bit-exact.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::ModelParams;

pub const CHECKPOINT_SCHEMA: &str = "rfsl-checkpoint/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub schema: String,
    pub params: ModelParams,
}

pub fn write_checkpoint<W: Write>(writer: W, params: &ModelParams) -> Result<()> {
    let doc = Checkpoint {
        schema: CHECKPOINT_SCHEMA.to_string(),
        params: params.clone(),
    };
    serde_json::to_writer(writer, &doc).map_err(|e| Error::parse("checkpoint", e))
}

pub fn read_checkpoint<R: Read>(reader: R) -> Result<ModelParams> {
    let value: serde_json::Value = serde_json::from_reader(reader).map_err(|e| Error::parse("checkpoint", e))?;
    let schema = value.get("schema").and_then(|s| s.as_str()).unwrap_or("");
    if schema != CHECKPOINT_SCHEMA {
        return Err(Error::SchemaMismatch {
            expected: CHECKPOINT_SCHEMA.to_string(),
            found: schema.to_string(),
        });
    }
    let doc: Checkpoint = serde_json::from_value(value).map_err(|e| Error::parse("checkpoint", e))?;
    doc.params.check_shapes()?;
    Ok(doc.params)
}

pub fn save_checkpoint(path: &Path, params: &ModelParams) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_checkpoint(&mut f, params)?;
    f.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<ModelParams> {
    read_checkpoint(std::io::BufReader::new(std::fs::File::open(path)?))
}
