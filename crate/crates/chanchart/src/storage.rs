//! On-disk artifact formats.
//!
//! Binary files carry a four-byte magic, a format version, the run seed,
//! and the canonical config text, so any artifact can be traced back to
//! the exact run that produced it. All integers and floats are
//! little-endian. Checkpoints store parameters as raw f64 bits and round
//! trip bit-exactly.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::Path;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::hex_string;
use crate::csi_features::FeatureVector;
use crate::error::{Error, Result};
use crate::objectives::Method;

const DATASET_MAGIC: &[u8; 4] = b"CCDS";
const FEATURES_MAGIC: &[u8; 4] = b"CCFT";
const CHECKPOINT_MAGIC: &[u8; 4] = b"CCCK";
const FORMAT_VERSION: u32 = 1;

/// Dataset file header: enough to interpret every sample record without
/// consulting the config file that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetHeader {
    pub seed: u64,
    pub num_samples: u64,
    pub num_aps: u32,
    pub antennas_per_ap: u32,
    pub num_subcarriers: u32,
    pub config_text: String,
}

/// One stored channel measurement.
#[derive(Debug, Clone)]
pub struct DatasetSample {
    pub index: u64,
    pub position: [f64; 3],
    pub timestamp: f64,
    /// (num_aps * antennas_per_ap) x num_subcarriers, f32-quantized.
    pub tensor: Array2<Complex64>,
}

/// Streams samples to disk so the full dataset never has to sit in
/// memory during generation.
pub struct DatasetWriter {
    writer: BufWriter<File>,
    rows: usize,
    cols: usize,
    expected: u64,
    written: u64,
}

impl DatasetWriter {
    pub fn create(path: &Path, header: &DatasetHeader) -> Result<Self> {
        let mut writer = BufWriter::new(File::create(path)?);
        writer.write_all(DATASET_MAGIC)?;
        write_u32(&mut writer, FORMAT_VERSION)?;
        write_u64(&mut writer, header.seed)?;
        write_u64(&mut writer, header.num_samples)?;
        write_u32(&mut writer, header.num_aps)?;
        write_u32(&mut writer, header.antennas_per_ap)?;
        write_u32(&mut writer, header.num_subcarriers)?;
        write_string(&mut writer, &header.config_text)?;
        Ok(Self {
            writer,
            rows: (header.num_aps * header.antennas_per_ap) as usize,
            cols: header.num_subcarriers as usize,
            expected: header.num_samples,
            written: 0,
        })
    }

    pub fn write_sample(&mut self, sample: &DatasetSample) -> Result<()> {
        if sample.tensor.dim() != (self.rows, self.cols) {
            return Err(Error::Shape(format!(
                "sample {} tensor is {:?}, dataset stores {}x{}",
                sample.index,
                sample.tensor.dim(),
                self.rows,
                self.cols
            )));
        }
        write_u64(&mut self.writer, sample.index)?;
        for coord in sample.position {
            write_f64(&mut self.writer, coord)?;
        }
        write_f64(&mut self.writer, sample.timestamp)?;
        for value in sample.tensor.iter() {
            self.writer.write_all(&(value.re as f32).to_le_bytes())?;
            self.writer.write_all(&(value.im as f32).to_le_bytes())?;
        }
        self.written += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        if self.written != self.expected {
            return Err(Error::Data(format!(
                "dataset header promises {} samples but {} were written",
                self.expected, self.written
            )));
        }
        self.writer.flush()?;
        Ok(())
    }
}

pub fn read_dataset_header(path: &Path) -> Result<DatasetHeader> {
    let mut reader = BufReader::new(File::open(path)?);
    read_dataset_header_from(&mut reader)
}

pub fn read_dataset(path: &Path) -> Result<(DatasetHeader, Vec<DatasetSample>)> {
    let mut reader = BufReader::new(File::open(path)?);
    let header = read_dataset_header_from(&mut reader)?;
    let rows = (header.num_aps * header.antennas_per_ap) as usize;
    let cols = header.num_subcarriers as usize;
    let mut samples = Vec::with_capacity(header.num_samples as usize);
    for _ in 0..header.num_samples {
        let index = read_u64(&mut reader)?;
        let position = [
            read_f64(&mut reader)?,
            read_f64(&mut reader)?,
            read_f64(&mut reader)?,
        ];
        let timestamp = read_f64(&mut reader)?;
        let mut entries = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            let re = read_f32(&mut reader)? as f64;
            let im = read_f32(&mut reader)? as f64;
            entries.push(Complex64::new(re, im));
        }
        let tensor = Array2::from_shape_vec((rows, cols), entries)
            .expect("entry count matches rows * cols");
        samples.push(DatasetSample {
            index,
            position,
            timestamp,
            tensor,
        });
    }
    Ok((header, samples))
}

/// Ground-truth coordinates of one stored sample, without its tensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplePosition {
    pub index: u64,
    pub position: [f64; 3],
    pub timestamp: f64,
}

/// Reads only the per-sample positions and timestamps, seeking past the
/// channel tensors. Cheap even on datasets too large to load.
pub fn read_dataset_positions(path: &Path) -> Result<(DatasetHeader, Vec<SamplePosition>)> {
    let mut reader = BufReader::new(File::open(path)?);
    let header = read_dataset_header_from(&mut reader)?;
    let tensor_bytes = (header.num_aps * header.antennas_per_ap) as i64
        * header.num_subcarriers as i64
        * 2
        * 4;
    let mut samples = Vec::with_capacity(header.num_samples as usize);
    for _ in 0..header.num_samples {
        let index = read_u64(&mut reader)?;
        let position = [
            read_f64(&mut reader)?,
            read_f64(&mut reader)?,
            read_f64(&mut reader)?,
        ];
        let timestamp = read_f64(&mut reader)?;
        reader.seek(SeekFrom::Current(tensor_bytes))?;
        samples.push(SamplePosition {
            index,
            position,
            timestamp,
        });
    }
    Ok((header, samples))
}

fn read_dataset_header_from(reader: &mut impl Read) -> Result<DatasetHeader> {
    check_magic(reader, DATASET_MAGIC, "dataset")?;
    Ok(DatasetHeader {
        seed: read_u64(reader)?,
        num_samples: read_u64(reader)?,
        num_aps: read_u32(reader)?,
        antennas_per_ap: read_u32(reader)?,
        num_subcarriers: read_u32(reader)?,
        config_text: read_string(reader)?,
    })
}

/// Feature file header.
#[derive(Debug, Clone, PartialEq)]
pub struct FeaturesHeader {
    pub seed: u64,
    pub num_samples: u64,
    pub feature_dim: u32,
    pub num_aps: u32,
    pub config_text: String,
}

pub fn write_features(path: &Path, header: &FeaturesHeader, samples: &[FeatureVector]) -> Result<()> {
    if samples.len() as u64 != header.num_samples {
        return Err(Error::Data(format!(
            "feature header promises {} samples, got {}",
            header.num_samples,
            samples.len()
        )));
    }
    let mut writer = BufWriter::new(File::create(path)?);
    writer.write_all(FEATURES_MAGIC)?;
    write_u32(&mut writer, FORMAT_VERSION)?;
    write_u64(&mut writer, header.seed)?;
    write_u64(&mut writer, header.num_samples)?;
    write_u32(&mut writer, header.feature_dim)?;
    write_u32(&mut writer, header.num_aps)?;
    write_string(&mut writer, &header.config_text)?;
    for sample in samples {
        if sample.values.len() != header.feature_dim as usize
            || sample.ap_powers_db.len() != header.num_aps as usize
        {
            return Err(Error::Shape(format!(
                "feature sample {} has {} values and {} powers, header says {} and {}",
                sample.ue_index,
                sample.values.len(),
                sample.ap_powers_db.len(),
                header.feature_dim,
                header.num_aps
            )));
        }
        write_u64(&mut writer, sample.ue_index as u64)?;
        write_f64(&mut writer, sample.timestamp)?;
        for v in &sample.values {
            write_f64(&mut writer, *v)?;
        }
        for p in &sample.ap_powers_db {
            write_f64(&mut writer, *p)?;
        }
    }
    writer.flush()?;
    Ok(())
}

pub fn read_features(path: &Path) -> Result<(FeaturesHeader, Vec<FeatureVector>)> {
    let mut reader = BufReader::new(File::open(path)?);
    check_magic(&mut reader, FEATURES_MAGIC, "feature")?;
    let header = FeaturesHeader {
        seed: read_u64(&mut reader)?,
        num_samples: read_u64(&mut reader)?,
        feature_dim: read_u32(&mut reader)?,
        num_aps: read_u32(&mut reader)?,
        config_text: read_string(&mut reader)?,
    };
    let mut samples = Vec::with_capacity(header.num_samples as usize);
    for _ in 0..header.num_samples {
        let ue_index = read_u64(&mut reader)? as usize;
        let timestamp = read_f64(&mut reader)?;
        let mut values = Vec::with_capacity(header.feature_dim as usize);
        for _ in 0..header.feature_dim {
            values.push(read_f64(&mut reader)?);
        }
        let mut ap_powers_db = Vec::with_capacity(header.num_aps as usize);
        for _ in 0..header.num_aps {
            ap_powers_db.push(read_f64(&mut reader)?);
        }
        samples.push(FeatureVector {
            values,
            ap_powers_db,
            ue_index,
            timestamp,
        });
    }
    Ok((header, samples))
}

/// A trained network plus the provenance needed to refuse evaluating it
/// against the wrong data.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub method: Method,
    pub seed: u64,
    pub config_hash: String,
    pub layer_widths: Vec<usize>,
    pub flat_params: Vec<f64>,
}

pub fn write_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    let mut writer = BufWriter::new(File::create(path)?);
    writer.write_all(CHECKPOINT_MAGIC)?;
    write_u32(&mut writer, FORMAT_VERSION)?;
    write_u64(&mut writer, ckpt.seed)?;
    write_string(&mut writer, ckpt.method.name())?;
    write_string(&mut writer, &ckpt.config_hash)?;
    write_u32(&mut writer, ckpt.layer_widths.len() as u32)?;
    for w in &ckpt.layer_widths {
        write_u32(&mut writer, *w as u32)?;
    }
    write_u64(&mut writer, ckpt.flat_params.len() as u64)?;
    for p in &ckpt.flat_params {
        writer.write_all(&p.to_bits().to_le_bytes())?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let mut reader = BufReader::new(File::open(path)?);
    check_magic(&mut reader, CHECKPOINT_MAGIC, "checkpoint")?;
    let seed = read_u64(&mut reader)?;
    let method = Method::parse(&read_string(&mut reader)?)?;
    let config_hash = read_string(&mut reader)?;
    let num_layers = read_u32(&mut reader)? as usize;
    let mut layer_widths = Vec::with_capacity(num_layers);
    for _ in 0..num_layers {
        layer_widths.push(read_u32(&mut reader)? as usize);
    }
    let num_params = read_u64(&mut reader)? as usize;
    let mut flat_params = Vec::with_capacity(num_params);
    let mut buf = [0u8; 8];
    for _ in 0..num_params {
        reader.read_exact(&mut buf)?;
        flat_params.push(f64::from_bits(u64::from_le_bytes(buf)));
    }
    Ok(Checkpoint {
        method,
        seed,
        config_hash,
        layer_widths,
        flat_params,
    })
}

/// Index of every artifact a run produced, with content hashes so the
/// report step can detect stale or hand-edited files.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub config_hash: String,
    pub config_echo: String,
    pub seed: u64,
    pub artifacts: BTreeMap<String, ArtifactRecord>,
    /// Wall-clock seconds per pipeline step.
    pub timings_s: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactRecord {
    pub sha256: String,
    pub bytes: u64,
}

impl Manifest {
    pub fn new(config_hash: String, config_echo: String, seed: u64) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash,
            config_echo,
            seed,
            artifacts: BTreeMap::new(),
            timings_s: BTreeMap::new(),
        }
    }

    /// Hashes `root/name` and records it under `name`.
    pub fn record(&mut self, root: &Path, name: &str) -> Result<()> {
        let path = root.join(name);
        let (sha256, bytes) = file_sha256(&path)?;
        self.artifacts.insert(name.to_string(), ArtifactRecord { sha256, bytes });
        Ok(())
    }

    /// Checks that every recorded artifact still exists with the same
    /// content.
    pub fn verify(&self, root: &Path) -> Result<()> {
        for (name, record) in &self.artifacts {
            let path = root.join(name);
            let (sha256, bytes) = file_sha256(&path)
                .map_err(|e| Error::Data(format!("manifest artifact {name} unreadable: {e}")))?;
            if sha256 != record.sha256 || bytes != record.bytes {
                return Err(Error::Data(format!(
                    "artifact {name} no longer matches the manifest (expected {}, found {sha256})",
                    record.sha256
                )));
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Data(format!("cannot serialize manifest: {e}")))?;
        std::fs::write(path, json + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Data(format!("manifest {} is corrupt: {e}", path.display())))
    }
}

/// Loads, mutates, and saves the manifest at `root/manifest.json`,
/// starting fresh if none exists.
pub fn update_manifest(
    root: &Path,
    config_hash: &str,
    config_echo: &str,
    seed: u64,
    update: impl FnOnce(&mut Manifest) -> Result<()>,
) -> Result<()> {
    let path = root.join("manifest.json");
    let mut manifest = if path.exists() {
        let existing = Manifest::load(&path)?;
        if existing.config_hash != config_hash || existing.seed != seed {
            return Err(Error::Config(format!(
                "output directory {} belongs to a different run (config hash {} vs {})",
                root.display(),
                existing.config_hash,
                config_hash
            )));
        }
        existing
    } else {
        Manifest::new(config_hash.to_string(), config_echo.to_string(), seed)
    };
    update(&mut manifest)?;
    manifest.save(&path)
}

pub fn file_sha256(path: &Path) -> Result<(String, u64)> {
    let mut file = File::open(path)?;
    let mut hasher = Sha256::new();
    let bytes = std::io::copy(&mut file, &mut hasher)?;
    Ok((hex_string(&hasher.finalize()), bytes))
}

/// Writes a small CSV with a header row. Cells are written verbatim;
/// callers format numbers themselves so output stays deterministic.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut writer = BufWriter::new(File::create(path)?);
    writeln!(writer, "{}", header.join(","))?;
    for row in rows {
        writeln!(writer, "{}", row.join(","))?;
    }
    writer.flush()?;
    Ok(())
}

fn check_magic(reader: &mut impl Read, expected: &[u8; 4], kind: &str) -> Result<()> {
    let mut magic = [0u8; 4];
    reader.read_exact(&mut magic)?;
    if &magic != expected {
        return Err(Error::Data(format!(
            "not a {kind} file (magic {:?})",
            String::from_utf8_lossy(&magic)
        )));
    }
    let version = read_u32(reader)?;
    if version != FORMAT_VERSION {
        return Err(Error::Data(format!(
            "{kind} file has format version {version}, this build reads {FORMAT_VERSION}"
        )));
    }
    Ok(())
}

fn write_u32(w: &mut impl Write, v: u32) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn write_u64(w: &mut impl Write, v: u64) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn write_f64(w: &mut impl Write, v: f64) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn write_string(w: &mut impl Write, s: &str) -> std::io::Result<()> {
    write_u32(w, s.len() as u32)?;
    w.write_all(s.as_bytes())
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn read_f32(r: &mut impl Read) -> Result<f32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(f32::from_le_bytes(buf))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}

fn read_string(r: &mut impl Read) -> Result<String> {
    let len = read_u32(r)? as usize;
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Data(format!("corrupt string field: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn sample_tensor(scale: f64) -> Array2<Complex64> {
        array![
            [Complex64::new(scale, -0.25), Complex64::new(0.0, 1.5)],
            [Complex64::new(-2.0, scale), Complex64::new(0.125, 0.0)],
        ]
    }

    #[test]
    fn dataset_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("channels.ccds");
        let header = DatasetHeader {
            seed: 7,
            num_samples: 2,
            num_aps: 1,
            antennas_per_ap: 2,
            num_subcarriers: 2,
            config_text: "grid_cols = 2\n".into(),
        };
        let mut writer = DatasetWriter::create(&path, &header).unwrap();
        for (i, scale) in [(0u64, 1.0), (1, 3.5)] {
            writer
                .write_sample(&DatasetSample {
                    index: i,
                    position: [i as f64, 2.0, 1.5],
                    timestamp: 10.0 * i as f64,
                    tensor: sample_tensor(scale),
                })
                .unwrap();
        }
        writer.finish().unwrap();

        let (back_header, samples) = read_dataset(&path).unwrap();
        assert_eq!(back_header, header);
        assert_eq!(samples.len(), 2);
        assert_eq!(samples[1].position, [1.0, 2.0, 1.5]);
        assert_eq!(samples[1].timestamp, 10.0);
        // The chosen entries are exactly representable in f32, so the
        // round trip is lossless.
        assert_eq!(samples[0].tensor, sample_tensor(1.0));
        assert_eq!(samples[1].tensor, sample_tensor(3.5));
    }

    #[test]
    fn dataset_writer_enforces_count_and_shape() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("channels.ccds");
        let header = DatasetHeader {
            seed: 1,
            num_samples: 2,
            num_aps: 1,
            antennas_per_ap: 2,
            num_subcarriers: 2,
            config_text: String::new(),
        };
        let mut writer = DatasetWriter::create(&path, &header).unwrap();
        let bad = DatasetSample {
            index: 0,
            position: [0.0; 3],
            timestamp: 0.0,
            tensor: Array2::zeros((3, 2)),
        };
        assert!(matches!(writer.write_sample(&bad), Err(Error::Shape(_))));
        writer
            .write_sample(&DatasetSample {
                index: 0,
                position: [0.0; 3],
                timestamp: 0.0,
                tensor: sample_tensor(1.0),
            })
            .unwrap();
        assert!(matches!(writer.finish(), Err(Error::Data(_))));
    }

    #[test]
    fn wrong_magic_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.bin");
        std::fs::write(&path, b"JUNKxxxxxxxxxxxxxxxx").unwrap();
        assert!(matches!(read_dataset(&path), Err(Error::Data(_))));
        assert!(matches!(read_checkpoint(&path), Err(Error::Data(_))));
        assert!(matches!(read_features(&path), Err(Error::Data(_))));
    }

    #[test]
    fn features_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("features.ccft");
        let header = FeaturesHeader {
            seed: 3,
            num_samples: 2,
            feature_dim: 3,
            num_aps: 2,
            config_text: "x = 1\n".into(),
        };
        let samples = vec![
            FeatureVector {
                values: vec![0.1, 0.2, 0.3],
                ap_powers_db: vec![-3.0, -7.5],
                ue_index: 4,
                timestamp: 40.0,
            },
            FeatureVector {
                values: vec![0.5, 0.0, -0.25],
                ap_powers_db: vec![f64::NEG_INFINITY, 0.0],
                ue_index: 9,
                timestamp: 90.0,
            },
        ];
        write_features(&path, &header, &samples).unwrap();
        let (back_header, back) = read_features(&path).unwrap();
        assert_eq!(back_header, header);
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].values, samples[0].values);
        assert_eq!(back[1].ue_index, 9);
        // Negative infinity (a zero-power block) survives the round
        // trip.
        assert_eq!(back[1].ap_powers_db[0], f64::NEG_INFINITY);
    }

    #[test]
    fn checkpoint_round_trips_bit_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ccck");
        let ckpt = Checkpoint {
            method: Method::P2,
            seed: 11,
            config_hash: "abc123".into(),
            layer_widths: vec![64, 128, 2],
            flat_params: vec![0.1, -1.0e-300, f64::MIN_POSITIVE, 3.5, -0.0],
        };
        write_checkpoint(&path, &ckpt).unwrap();
        let back = read_checkpoint(&path).unwrap();
        assert_eq!(back.method, Method::P2);
        assert_eq!(back.layer_widths, ckpt.layer_widths);
        assert_eq!(back.config_hash, ckpt.config_hash);
        let bits: Vec<u64> = ckpt.flat_params.iter().map(|p| p.to_bits()).collect();
        let back_bits: Vec<u64> = back.flat_params.iter().map(|p| p.to_bits()).collect();
        assert_eq!(bits, back_bits);
    }

    #[test]
    fn manifest_detects_tampering() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.csv"), "n,x\n0,1\n").unwrap();
        let mut manifest = Manifest::new("hash".into(), String::new(), 1);
        manifest.record(dir.path(), "a.csv").unwrap();
        manifest.verify(dir.path()).unwrap();
        let path = dir.path().join("manifest.json");
        manifest.save(&path).unwrap();

        std::fs::write(dir.path().join("a.csv"), "n,x\n0,2\n").unwrap();
        let loaded = Manifest::load(&path).unwrap();
        assert!(matches!(loaded.verify(dir.path()), Err(Error::Data(_))));
    }

    #[test]
    fn update_manifest_refuses_mismatched_runs() {
        let dir = tempfile::tempdir().unwrap();
        update_manifest(dir.path(), "h1", "", 1, |_| Ok(())).unwrap();
        let err = update_manifest(dir.path(), "h2", "", 1, |_| Ok(())).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn position_reader_skips_tensors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("channels.ccds");
        let header = DatasetHeader {
            seed: 7,
            num_samples: 2,
            num_aps: 1,
            antennas_per_ap: 2,
            num_subcarriers: 2,
            config_text: String::new(),
        };
        let mut writer = DatasetWriter::create(&path, &header).unwrap();
        for i in 0..2u64 {
            writer
                .write_sample(&DatasetSample {
                    index: i,
                    position: [i as f64, -1.0, 1.5],
                    timestamp: 3.0 * i as f64,
                    tensor: sample_tensor(1.0),
                })
                .unwrap();
        }
        writer.finish().unwrap();
        let (back_header, positions) = read_dataset_positions(&path).unwrap();
        assert_eq!(back_header, header);
        assert_eq!(
            positions,
            vec![
                SamplePosition { index: 0, position: [0.0, -1.0, 1.5], timestamp: 0.0 },
                SamplePosition { index: 1, position: [1.0, -1.0, 1.5], timestamp: 3.0 },
            ]
        );
    }
}
