use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Direction, GridSpec, ImpulseResponse, AMBI_CHANNELS};
use crate::wav::{self, SampleFormat};
use crate::{Error, Result};

pub const MANIFEST_FILE_NAME: &str = "manifest.toml";

/// A complete set of 16-channel SIRs, one per (position, direction).
#[derive(Debug, Clone, PartialEq)]
pub struct SirSet {
    grid: GridSpec,
    sample_rate: u32,
    // position-major, direction-minor
    entries: Vec<ImpulseResponse>,
}

impl SirSet {
    /// Validates completeness, sample rates and channel counts.
    pub fn new(
        grid: GridSpec,
        sample_rate: u32,
        entries: BTreeMap<(usize, Direction), ImpulseResponse>,
    ) -> Result<Self> {
        grid.validate()?;
        let n = grid.position_count();
        if let Some(&(p, _)) = entries.keys().find(|(p, _)| *p >= n) {
            return Err(Error::PositionOutOfRange { index: p, bound: n });
        }
        let missing: Vec<(usize, Direction)> = (0..n)
            .flat_map(|p| Direction::ALL.into_iter().map(move |d| (p, d)))
            .filter(|key| !entries.contains_key(key))
            .collect();
        if !missing.is_empty() {
            return Err(Error::IncompleteSet { missing });
        }
        for ir in entries.values() {
            if ir.sample_rate() != sample_rate {
                return Err(Error::SampleRateMismatch {
                    expected: sample_rate,
                    found: ir.sample_rate(),
                });
            }
            if ir.num_channels() != AMBI_CHANNELS {
                return Err(Error::ChannelCount {
                    context: "SIR entry",
                    expected: AMBI_CHANNELS,
                    found: ir.num_channels(),
                });
            }
        }
        Ok(Self {
            grid,
            sample_rate,
            entries: entries.into_values().collect(),
        })
    }

    /// Builds a set from IRs listed position-major, direction-minor.
    pub fn from_ordered(grid: GridSpec, irs: Vec<ImpulseResponse>) -> Result<Self> {
        let sample_rate = irs
            .first()
            .map(ImpulseResponse::sample_rate)
            .ok_or_else(|| Error::IncompleteSet {
                missing: (0..grid.position_count())
                    .flat_map(|p| Direction::ALL.into_iter().map(move |d| (p, d)))
                    .collect(),
            })?;
        let map = irs
            .into_iter()
            .enumerate()
            .map(|(i, ir)| ((i / 4, Direction::ALL[i % 4]), ir))
            .collect();
        Self::new(grid, sample_rate, map)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn get(&self, p: usize, d: Direction) -> &ImpulseResponse {
        &self.entries[p * 4 + d.index()]
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, Direction, &ImpulseResponse)> {
        self.entries
            .iter()
            .enumerate()
            .map(|(i, ir)| (i / 4, Direction::ALL[i % 4], ir))
    }

    pub fn max_ir_len(&self) -> usize {
        self.entries.iter().map(ImpulseResponse::len).max().unwrap_or(0)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    sample_rate: u32,
    grid: GridSection,
    #[serde(default)]
    entry: Vec<EntryRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSection {
    rows: usize,
    cols: usize,
    spacing_m: f64,
    #[serde(default)]
    origin_x: f64,
    #[serde(default)]
    origin_z: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryRecord {
    position: usize,
    direction: Direction,
    file: String,
}

fn manifest_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Manifest {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Loads and validates the dataset described by the manifest at `path`.
/// Audio file paths are resolved relative to the manifest's directory.
pub fn load_sirset(path: impl AsRef<Path>) -> Result<SirSet> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let manifest: Manifest = toml::from_str(&text).map_err(|e| manifest_err(path, e.to_string()))?;
    let grid = GridSpec {
        rows: manifest.grid.rows,
        cols: manifest.grid.cols,
        spacing_m: manifest.grid.spacing_m,
        origin_x: manifest.grid.origin_x,
        origin_z: manifest.grid.origin_z,
    };
    grid.validate()?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut entries = BTreeMap::new();
    for rec in &manifest.entry {
        if rec.position >= grid.position_count() {
            return Err(Error::PositionOutOfRange {
                index: rec.position,
                bound: grid.position_count(),
            });
        }
        let key = (rec.position, rec.direction);
        if entries.contains_key(&key) {
            return Err(Error::DuplicateEntry(rec.position, rec.direction));
        }
        entries.insert(key, resolve(&base, &rec.file));
    }
    // Completeness is checked before touching any audio.
    let missing: Vec<_> = (0..grid.position_count())
        .flat_map(|p| Direction::ALL.into_iter().map(move |d| (p, d)))
        .filter(|k| !entries.contains_key(k))
        .collect();
    if !missing.is_empty() {
        return Err(Error::IncompleteSet { missing });
    }
    let mut irs = BTreeMap::new();
    for (key, file) in entries {
        let data = wav::read_wav(&file)?;
        if data.sample_rate != manifest.sample_rate {
            return Err(Error::SampleRateMismatch {
                expected: manifest.sample_rate,
                found: data.sample_rate,
            });
        }
        if data.channels.len() != AMBI_CHANNELS {
            return Err(Error::ChannelCount {
                context: "SIR entry",
                expected: AMBI_CHANNELS,
                found: data.channels.len(),
            });
        }
        irs.insert(key, ImpulseResponse::new(data.sample_rate, data.channels)?);
    }
    SirSet::new(grid, manifest.sample_rate, irs)
}

fn resolve(base: &Path, file: &str) -> PathBuf {
    let p = Path::new(file);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// File name used for entry `(p, d)` when a set is written out.
pub fn entry_file_name(p: usize, d: Direction) -> String {
    format!("sir_{p:03}_{d}.wav")
}

/// Writes one 32-bit float WAV per entry plus `manifest.toml` into `dir`
/// and returns the manifest path.
pub fn save_sirset(set: &SirSet, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut records = Vec::with_capacity(set.len());
    for (p, d, ir) in set.iter() {
        let name = entry_file_name(p, d);
        wav::write_wav(dir.join(&name), ir.sample_rate(), ir.channels(), SampleFormat::Float32)?;
        records.push(EntryRecord {
            position: p,
            direction: d,
            file: name,
        });
    }
    let path = dir.join(MANIFEST_FILE_NAME);
    write_manifest(&path, set.grid(), set.sample_rate(), records)?;
    Ok(path)
}

/// Writes a manifest that references already existing audio files.
pub fn write_manifest_for_files(
    path: impl AsRef<Path>,
    grid: &GridSpec,
    sample_rate: u32,
    files: &BTreeMap<(usize, Direction), String>,
) -> Result<()> {
    let records = files
        .iter()
        .map(|(&(position, direction), file)| EntryRecord {
            position,
            direction,
            file: file.clone(),
        })
        .collect();
    write_manifest(path.as_ref(), grid, sample_rate, records)
}

fn write_manifest(
    path: &Path,
    grid: &GridSpec,
    sample_rate: u32,
    entry: Vec<EntryRecord>,
) -> Result<()> {
    let manifest = Manifest {
        sample_rate,
        grid: GridSection {
            rows: grid.rows,
            cols: grid.cols,
            spacing_m: grid.spacing_m,
            origin_x: grid.origin_x,
            origin_z: grid.origin_z,
        },
        entry,
    };
    let text = toml::to_string(&manifest).map_err(|e| manifest_err(path, e.to_string()))?;
    fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ir(sr: u32, seed: usize) -> ImpulseResponse {
        let chans = (0..16)
            .map(|c| {
                (0..8)
                    .map(|i| (((seed * 31 + c * 7 + i * 3) % 17) as f32 / 17.0 - 0.5) as f64)
                    .collect()
            })
            .collect();
        ImpulseResponse::new(sr, chans).unwrap()
    }

    fn small_set(grid: GridSpec) -> SirSet {
        let irs = (0..grid.position_count() * 4).map(|i| ir(48_000, i)).collect();
        SirSet::from_ordered(grid, irs).unwrap()
    }

    #[test]
    fn round_trip_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let set = small_set(GridSpec::new(2, 3, 0.5).unwrap().with_origin(1.0, -2.0));
        let manifest = save_sirset(&set, dir.path()).unwrap();
        let text = fs::read_to_string(&manifest).unwrap();
        for key in ["sample_rate", "rows", "cols", "spacing_m", "origin_x", "origin_z", "[[entry]]"] {
            assert!(text.contains(key), "manifest lacks {key}:\n{text}");
        }
        assert_eq!(load_sirset(&manifest).unwrap(), set);
    }

    #[test]
    fn missing_entry_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let set = small_set(GridSpec::default());
        let manifest = save_sirset(&set, dir.path()).unwrap();
        let text = fs::read_to_string(&manifest).unwrap();
        let doc: Manifest = toml::from_str(&text).unwrap();
        let kept: Vec<EntryRecord> = doc
            .entry
            .into_iter()
            .filter(|e| !(e.position == 3 && e.direction == Direction::Left))
            .collect();
        write_manifest(&manifest, set.grid(), 48_000, kept).unwrap();
        let err = load_sirset(&manifest).unwrap_err();
        match &err {
            Error::IncompleteSet { missing } => assert_eq!(missing, &vec![(3, Direction::Left)]),
            other => panic!("unexpected {other:?}"),
        }
        assert!(err.to_string().contains("(3, left)"));
    }

    #[test]
    fn mixed_sample_rates_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let grid = GridSpec::new(1, 1, 1.0).unwrap();
        let set = small_set(grid);
        let manifest = save_sirset(&set, dir.path()).unwrap();
        let odd = ir(44_100, 9);
        wav::write_wav(
            dir.path().join(entry_file_name(0, Direction::Back)),
            44_100,
            odd.channels(),
            SampleFormat::Float32,
        )
        .unwrap();
        assert!(matches!(
            load_sirset(&manifest),
            Err(Error::SampleRateMismatch {
                expected: 48_000,
                found: 44_100
            })
        ));
    }

    #[test]
    fn wrong_channel_count_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let grid = GridSpec::new(1, 1, 1.0).unwrap();
        let manifest = save_sirset(&small_set(grid), dir.path()).unwrap();
        wav::write_wav(
            dir.path().join(entry_file_name(0, Direction::Front)),
            48_000,
            &vec![vec![0.0; 8]; 2],
            SampleFormat::Float32,
        )
        .unwrap();
        assert!(matches!(
            load_sirset(&manifest),
            Err(Error::ChannelCount { found: 2, .. })
        ));
    }

    #[test]
    fn in_memory_validation() {
        let grid = GridSpec::new(1, 1, 1.0).unwrap();
        let mut irs: Vec<_> = (0..4).map(|i| ir(48_000, i)).collect();
        irs[2] = ir(44_100, 2);
        assert!(matches!(
            SirSet::from_ordered(grid, irs),
            Err(Error::SampleRateMismatch { .. })
        ));
        assert!(SirSet::from_ordered(grid, (0..3).map(|i| ir(48_000, i)).collect()).is_err());
    }
}
