//! On-disk formats and external solver adapters.
//!
//! Pools, datasets, instances and seed registries are stored as a one-line
//! header followed by a JSON payload:
//!
//! ```text
//! basenode-<kind> <version> <sha256 of payload>
//! {...}
//! ```
//!
//! The checksum covers every payload byte, so truncation or editing is caught
//! on load. JSON floats are written in shortest round-trip form, which makes a
//! save/load cycle bit-exact.

mod external;
mod tsplib;

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::Instance;
use crate::subsample::{BaseNodeDistribution, Dataset, Purpose, SeedRegistry};
use crate::gen::DistributionSpec;

pub use external::{
    find_binary, rounding_bound, run_external, run_hgs, run_lkh, ExternalConfig, ExternalRun, ExternalSolver,
    HGS_ENV, LKH_ENV,
};
pub use tsplib::{export_tsplib, parse_tsplib, TsplibInstance, DEFAULT_SCALE};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileKind {
    Pool,
    Dataset,
    Instance,
    Registry,
}

impl FileKind {
    fn tag(self) -> &'static str {
        match self {
            FileKind::Pool => "basenode-pool",
            FileKind::Dataset => "basenode-dataset",
            FileKind::Instance => "basenode-instance",
            FileKind::Registry => "basenode-registry",
        }
    }
}

/// Hex sha256 digest.
pub fn checksum(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn encode<T: Serialize>(kind: FileKind, value: &T) -> Result<Vec<u8>> {
    let payload = serde_json::to_vec(value)?;
    let mut out = format!("{} {} {}\n", kind.tag(), FORMAT_VERSION, checksum(&payload)).into_bytes();
    out.extend_from_slice(&payload);
    Ok(out)
}

pub fn decode<T: DeserializeOwned>(kind: FileKind, bytes: &[u8], origin: &str) -> Result<T> {
    let split = bytes.iter().position(|&b| b == b'\n');
    let (header, payload) = match split {
        Some(i) => (&bytes[..i], &bytes[i + 1..]),
        None => return Err(Error::ChecksumMismatch(format!("{origin}: missing header line"))),
    };
    let header = std::str::from_utf8(header).map_err(|_| Error::ChecksumMismatch(format!("{origin}: unreadable header")))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let [tag, version, sum] = fields[..] else {
        return Err(Error::ChecksumMismatch(format!("{origin}: malformed header `{header}`")));
    };
    if tag != kind.tag() {
        return Err(Error::InvalidSpec(format!("{origin}: expected a `{}` file, found `{tag}`", kind.tag())));
    }
    if version != FORMAT_VERSION.to_string() {
        return Err(Error::VersionUnsupported { found: version.to_string(), expected: FORMAT_VERSION });
    }
    if checksum(payload) != sum {
        return Err(Error::ChecksumMismatch(origin.to_string()));
    }
    Ok(serde_json::from_slice(payload)?)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn save<T: Serialize>(kind: FileKind, path: &Path, value: &T) -> Result<()> {
    write_file(path, &encode(kind, value)?)
}

fn load<T: DeserializeOwned>(kind: FileKind, path: &Path) -> Result<T> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(kind, &bytes, &path.display().to_string())
}

pub fn save_base(path: &Path, base: &BaseNodeDistribution) -> Result<()> {
    save(FileKind::Pool, path, base)
}

pub fn load_base(path: &Path) -> Result<BaseNodeDistribution> {
    let base: BaseNodeDistribution = load(FileKind::Pool, path)?;
    base.validate()?;
    Ok(base)
}

pub fn save_dataset(path: &Path, dataset: &Dataset) -> Result<()> {
    save(FileKind::Dataset, path, dataset)
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let ds: Dataset = load(FileKind::Dataset, path)?;
    for inst in &ds.instances {
        inst.validate()?;
    }
    Ok(ds)
}

pub fn save_instance(path: &Path, instance: &Instance) -> Result<()> {
    save(FileKind::Instance, path, instance)
}

pub fn load_instance(path: &Path) -> Result<Instance> {
    let inst: Instance = load(FileKind::Instance, path)?;
    inst.validate()?;
    Ok(inst)
}

pub fn save_registry(path: &Path, registry: &SeedRegistry) -> Result<()> {
    save(FileKind::Registry, path, registry)
}

/// Loads a registry, or an empty one if `path` does not exist.
pub fn load_registry(path: &Path) -> Result<SeedRegistry> {
    if !path.exists() {
        return Ok(SeedRegistry::default());
    }
    load(FileKind::Registry, path)
}

/// Summary written next to a dataset file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub base_id: String,
    pub spec: DistributionSpec,
    pub n: usize,
    pub role: Purpose,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epoch: Option<u64>,
    pub length: usize,
    /// sha256 of each instance's JSON encoding, in dataset order.
    pub checksums: Vec<String>,
}

pub fn dataset_manifest(ds: &Dataset) -> Result<DatasetManifest> {
    let checksums = ds
        .instances
        .iter()
        .map(|inst| Ok(checksum(&serde_json::to_vec(inst)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(DatasetManifest {
        base_id: ds.base_id.clone(),
        spec: ds.spec.clone(),
        n: ds.n,
        role: ds.role,
        seed: ds.sample_seed,
        epoch: ds.epoch,
        length: ds.len(),
        checksums,
    })
}
