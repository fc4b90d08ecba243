//! JSON and JSON-lines files for maps, datasets, parameters, checkpoints,
//! scenarios and results.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use groundfuse_core::dataset::{AnnotatedPoint, Dataset};
use groundfuse_core::map::WorldMap;
use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{}: {source}", path.display())]
    Open { path: PathBuf, source: std::io::Error },
    #[error("{}{}: {message}", path.display(), line.map(|l| format!(":{l}")).unwrap_or_default())]
    Parse { path: PathBuf, line: Option<usize>, message: String },
    #[error("{}: {message}", path.display())]
    Invalid { path: PathBuf, message: String },
}

impl IoError {
    fn open(path: &Path, source: std::io::Error) -> Self {
        IoError::Open { path: path.into(), source }
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    let text = fs::read_to_string(path).map_err(|e| IoError::open(path, e))?;
    serde_json::from_str(&text).map_err(|e| IoError::Parse { path: path.into(), line: Some(e.line()), message: e.to_string() })
}

/// Pretty JSON with a trailing newline. Parent directories are created.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| IoError::Invalid { path: path.into(), message: e.to_string() })?;
    text.push('\n');
    write_text(path, &text)
}

pub fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| IoError::open(dir, e))?;
    }
    fs::write(path, text).map_err(|e| IoError::open(path, e))
}

/// One JSON value per non-blank line.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, IoError> {
    let file = fs::File::open(path).map_err(|e| IoError::open(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| IoError::open(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| IoError::Parse { path: path.into(), line: Some(i + 1), message: e.to_string() })?);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), IoError> {
    let mut buf = Vec::new();
    for item in items {
        serde_json::to_writer(&mut buf, item).map_err(|e| IoError::Invalid { path: path.into(), message: e.to_string() })?;
        buf.push(b'\n');
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| IoError::open(dir, e))?;
    }
    let mut f = fs::File::create(path).map_err(|e| IoError::open(path, e))?;
    f.write_all(&buf).map_err(|e| IoError::open(path, e))
}

fn check_map(path: &Path, map: WorldMap) -> Result<WorldMap, IoError> {
    map.validate().map_err(|e| IoError::Invalid { path: path.into(), message: format!("map {:?}: {e}", map.id) })?;
    Ok(map)
}

/// Maps from a file holding one map or an array of maps, or from every
/// `*.json` file of a directory in name order.
pub fn load_maps(path: &Path) -> Result<Vec<WorldMap>, IoError> {
    if path.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(path)
            .map_err(|e| IoError::open(path, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        let mut out = Vec::new();
        for f in files {
            out.extend(load_maps(&f)?);
        }
        return Ok(out);
    }
    let value: serde_json::Value = read_json(path)?;
    let maps: Vec<WorldMap> = if value.is_array() {
        serde_json::from_value(value)
    } else {
        serde_json::from_value(value).map(|m| vec![m])
    }
    .map_err(|e| IoError::Parse { path: path.into(), line: None, message: e.to_string() })?;
    maps.into_iter().map(|m| check_map(path, m)).collect()
}

/// Annotation records plus the maps they refer to. Every record must name
/// a known map and landmark.
pub fn load_dataset(points: &Path, maps: &Path) -> Result<Dataset, IoError> {
    let mut data = Dataset::new();
    for m in load_maps(maps)? {
        data.add_map(m);
    }
    data.points = read_jsonl::<AnnotatedPoint>(points)?;
    for (i, p) in data.points.iter().enumerate() {
        let known = data.maps.get(&p.map_id).is_some_and(|m| m.landmark(&p.landmark_id).is_some());
        if !known {
            return Err(IoError::Invalid {
                path: points.into(),
                message: format!("record {}: unknown map/landmark {}/{}", i + 1, p.map_id, p.landmark_id),
            });
        }
    }
    Ok(data)
}

/// Writes `maps.json` and `points.jsonl` under `dir`.
pub fn save_dataset(dir: &Path, data: &Dataset) -> Result<(), IoError> {
    let maps: Vec<&WorldMap> = data.maps.values().collect();
    write_json(&dir.join("maps.json"), &maps)?;
    write_jsonl(&dir.join("points.jsonl"), &data.points)
}
