use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::model::ChainInstance;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |error| HarnessError::Io {
        path: path.to_path_buf(),
        error,
    }
}

/// Writes through a temporary sibling and renames it into place.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let mut file = fs::File::create(&tmp).map_err(io_err(&tmp))?;
    file.write_all(bytes).map_err(io_err(&tmp))?;
    file.sync_all().map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|error| HarnessError::Json {
        path: path.to_path_buf(),
        error,
    })?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, HarnessError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    serde_json::from_slice(&bytes).map_err(|error| HarnessError::Json {
        path: path.to_path_buf(),
        error,
    })
}

pub fn write_instance(path: &Path, instance: &ChainInstance) -> Result<(), HarnessError> {
    write_json(path, instance)
}

/// Reads and validates an instance file.
pub fn read_instance(path: &Path) -> Result<ChainInstance, HarnessError> {
    let inst: ChainInstance = read_json(path)?;
    inst.validate()?;
    Ok(inst)
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), HarnessError> {
    let csv_err = |error| HarnessError::Csv {
        path: path.to_path_buf(),
        error,
    };
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row).map_err(csv_err)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| csv_err(e.into_error().into()))?;
    write_atomic(path, &bytes)
}

/// Wall-clock record kept next to a data file, so the data itself stays
/// reproducible byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub command: String,
    pub started_unix_s: f64,
    pub finished_unix_s: f64,
    pub elapsed_s: f64,
    pub threads: usize,
}

impl Timing {
    pub fn now() -> f64 {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs_f64())
            .unwrap_or(0.0)
    }
}

/// Writes `<data path>.timing.json`.
pub fn write_timing(data_path: &Path, timing: &Timing) -> Result<PathBuf, HarnessError> {
    let mut side = data_path.as_os_str().to_owned();
    side.push(".timing.json");
    let side = PathBuf::from(side);
    write_json(&side, timing)?;
    Ok(side)
}
