use crate::{Error, IqSegment, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

/// On-disk IQ sample encoding, always interleaved I,Q little-endian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IqFormat {
    /// Interleaved `int16` pairs, scaled by 1/32768.
    Sc16,
    /// Interleaved `float32` pairs.
    Cf32,
}

impl IqFormat {
    pub fn bytes_per_sample(self) -> u64 {
        match self {
            IqFormat::Sc16 => 4,
            IqFormat::Cf32 => 8,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            IqFormat::Sc16 => "sc16",
            IqFormat::Cf32 => "cf32",
        }
    }
}

impl std::str::FromStr for IqFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sc16" => Ok(IqFormat::Sc16),
            "cf32" => Ok(IqFormat::Cf32),
            other => Err(Error::Config(format!(
                "unknown IQ format {other:?}, expected \"sc16\" or \"cf32\""
            ))),
        }
    }
}

/// Capture metadata stored in the `<name>.json` sidecar next to the
/// sample file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaptureMeta {
    pub sample_rate_hz: f64,
    pub center_freq_hz: f64,
    pub format: IqFormat,
    pub start_time_unix: f64,
}

/// Sidecar path for a sample file: same name with a `.json` extension.
pub fn sidecar_path(iq_path: &Path) -> PathBuf {
    iq_path.with_extension("json")
}

const SC16_SCALE: f64 = 32768.0;

fn encode(samples: &[Complex64], format: IqFormat) -> Vec<u8> {
    let mut bytes = Vec::with_capacity(samples.len() * format.bytes_per_sample() as usize);
    match format {
        IqFormat::Sc16 => {
            for s in samples {
                for part in [s.re, s.im] {
                    let q = (part * SC16_SCALE).round().clamp(-32768.0, 32767.0) as i16;
                    bytes.extend_from_slice(&q.to_le_bytes());
                }
            }
        }
        IqFormat::Cf32 => {
            for s in samples {
                bytes.extend_from_slice(&(s.re as f32).to_le_bytes());
                bytes.extend_from_slice(&(s.im as f32).to_le_bytes());
            }
        }
    }
    bytes
}

fn decode(bytes: &[u8], format: IqFormat) -> Vec<Complex64> {
    match format {
        IqFormat::Sc16 => bytes
            .chunks_exact(4)
            .map(|c| {
                let re = i16::from_le_bytes([c[0], c[1]]) as f64 / SC16_SCALE;
                let im = i16::from_le_bytes([c[2], c[3]]) as f64 / SC16_SCALE;
                Complex64::new(re, im)
            })
            .collect(),
        IqFormat::Cf32 => bytes
            .chunks_exact(8)
            .map(|c| {
                let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64;
                let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]) as f64;
                Complex64::new(re, im)
            })
            .collect(),
    }
}

/// Writes samples and the JSON sidecar describing them.
pub fn write_iq(path: &Path, meta: &CaptureMeta, samples: &[Complex64]) -> Result<()> {
    let mut file = BufWriter::new(File::create(path)?);
    file.write_all(&encode(samples, meta.format))?;
    file.flush()?;
    let sidecar = serde_json::to_string_pretty(meta)
        .map_err(|e| Error::Data(format!("sidecar serialization failed: {e}")))?;
    std::fs::write(sidecar_path(path), sidecar)?;
    Ok(())
}

/// Appends samples to an existing capture file without touching the
/// sidecar.
pub fn append_iq(path: &Path, meta: &CaptureMeta, samples: &[Complex64]) -> Result<()> {
    let mut file = std::fs::OpenOptions::new().append(true).open(path)?;
    file.write_all(&encode(samples, meta.format))?;
    Ok(())
}

/// Streaming reader over an IQ capture file.
///
/// Only the requested sample windows are materialized, so arbitrarily
/// long captures can be processed with bounded memory.
#[derive(Debug)]
pub struct IqReader {
    file: File,
    meta: CaptureMeta,
    n_samples: u64,
}

impl IqReader {
    /// Opens a capture via its JSON sidecar.
    pub fn open(path: &Path) -> Result<Self> {
        let sidecar = sidecar_path(path);
        let text = std::fs::read_to_string(&sidecar).map_err(|e| {
            Error::Config(format!(
                "missing capture metadata {}: {e}",
                sidecar.display()
            ))
        })?;
        let meta: CaptureMeta = serde_json::from_str(&text)
            .map_err(|e| Error::Data(format!("bad sidecar {}: {e}", sidecar.display())))?;
        Self::open_with(path, meta)
    }

    /// Opens a capture with explicitly supplied metadata.
    pub fn open_with(path: &Path, meta: CaptureMeta) -> Result<Self> {
        let file = File::open(path)?;
        let bytes = file.metadata()?.len();
        let width = meta.format.bytes_per_sample();
        if bytes % width != 0 {
            return Err(Error::Data(format!(
                "{}: {bytes} bytes is not a multiple of the {width}-byte sample width",
                path.display()
            )));
        }
        Ok(IqReader {
            file,
            meta,
            n_samples: bytes / width,
        })
    }

    pub fn meta(&self) -> &CaptureMeta {
        &self.meta
    }

    /// Total samples in the file.
    pub fn len(&self) -> u64 {
        self.n_samples
    }

    pub fn is_empty(&self) -> bool {
        self.n_samples == 0
    }

    pub fn duration_s(&self) -> f64 {
        self.n_samples as f64 / self.meta.sample_rate_hz
    }

    /// Reads `count` samples starting at sample index `offset`.
    pub fn read_at(&mut self, offset: u64, count: usize) -> Result<Vec<Complex64>> {
        if offset + count as u64 > self.n_samples {
            return Err(Error::TooShort {
                needed: (offset + count as u64) as usize,
                have: self.n_samples as usize,
            });
        }
        let width = self.meta.format.bytes_per_sample();
        self.file.seek(SeekFrom::Start(offset * width))?;
        let mut bytes = vec![0u8; count * width as usize];
        self.file.read_exact(&mut bytes)?;
        Ok(decode(&bytes, self.meta.format))
    }

    /// Reads a window as a timestamped [`IqSegment`].
    pub fn segment_at(&mut self, offset: u64, count: usize) -> Result<IqSegment> {
        let samples = self.read_at(offset, count)?;
        Ok(IqSegment {
            samples,
            sample_rate_hz: self.meta.sample_rate_hz,
            center_freq_hz: self.meta.center_freq_hz,
            start_time_s: self.meta.start_time_unix + offset as f64 / self.meta.sample_rate_hz,
        })
    }
}

/// Reads a whole capture into memory; prefer [`IqReader`] for long files.
pub fn read_iq(path: &Path) -> Result<(CaptureMeta, Vec<Complex64>)> {
    let mut reader = IqReader::open(path)?;
    let n = reader.len() as usize;
    let samples = reader.read_at(0, n)?;
    Ok((reader.meta, samples))
}
