//! File formats: JSONL point files, model files and the error type that
//! maps onto exit codes.

use std::fmt;
use std::fs;
use std::path::Path;

use lctree::mle::{EstimateJson, LogConcaveEstimate};
use lctree::refdensities::{KdeModel, ReferenceDensity};
use lctree::TreePoint;
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug)]
pub enum CliError {
    /// Nonexistence, failed preconditions and other library errors.
    Domain(String),
    /// Unreadable or malformed input, unwritable output.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Domain(_) => 1,
            CliError::Io(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Domain(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

impl From<lctree::Error> for CliError {
    fn from(e: lctree::Error) -> Self {
        CliError::Domain(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn parse_json<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> CliResult<T> {
    serde_json::from_str(text).map_err(|e| CliError::Io(format!("{what}: {e}")))
}

pub fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("serializable")
}

/// A single point, given inline as JSON or as a file holding it.
pub fn read_point(arg: &str) -> CliResult<TreePoint> {
    if arg.trim_start().starts_with('{') {
        parse_json(arg, "point")
    } else {
        let p = Path::new(arg);
        parse_json(&read_text(p)?, &p.display().to_string())
    }
}

/// Header record written as the first line of a sampled point file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SampleHeader {
    pub reference: ReferenceDensity,
    pub n: usize,
    pub seed: u64,
}

#[derive(Serialize)]
struct HeaderLine<'a> {
    header: &'a SampleHeader,
}

#[derive(Serialize)]
struct LabelledPoint<'a> {
    #[serde(flatten)]
    point: &'a TreePoint,
    label: usize,
}

/// Points read from a JSONL file, with mixture labels when every point
/// carries one.
#[derive(Clone, Debug, Default)]
pub struct PointFile {
    pub header: Option<SampleHeader>,
    pub points: Vec<TreePoint>,
    pub labels: Option<Vec<usize>>,
}

pub fn points_jsonl(header: &SampleHeader, points: &[TreePoint], labels: Option<&[usize]>) -> String {
    let mut out = to_json(&HeaderLine { header });
    out.push('\n');
    for (i, p) in points.iter().enumerate() {
        match labels {
            Some(l) => out.push_str(&to_json(&LabelledPoint { point: p, label: l[i] })),
            None => out.push_str(&to_json(p)),
        }
        out.push('\n');
    }
    out
}

pub fn parse_points(text: &str, what: &str) -> CliResult<PointFile> {
    let mut file = PointFile::default();
    let mut labels = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let at = || format!("{what}:{}", k + 1);
        let mut v: Value = parse_json(line, &at())?;
        if let Some(h) = v.get("header") {
            file.header = Some(serde_json::from_value(h.clone()).map_err(|e| CliError::Io(format!("{}: {e}", at())))?);
            continue;
        }
        if let Some(obj) = v.as_object_mut() {
            if let Some(l) = obj.remove("label") {
                labels.push(l.as_u64().ok_or_else(|| CliError::Io(format!("{}: label must be a non-negative integer", at())))? as usize);
            }
        }
        let p: TreePoint = serde_json::from_value(v).map_err(|e| CliError::Io(format!("{}: {e}", at())))?;
        file.points.push(p);
    }
    if file.points.is_empty() {
        return Err(CliError::Io(format!("{what}: no points")));
    }
    if !labels.is_empty() {
        if labels.len() != file.points.len() {
            return Err(CliError::Io(format!("{what}: only some points carry a label")));
        }
        file.labels = Some(labels);
    }
    Ok(file)
}

pub fn read_points(path: &Path) -> CliResult<PointFile> {
    parse_points(&read_text(path)?, &path.display().to_string())
}

/// Contents of `estimate.json` or `kde.json`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelFile {
    Lcmle(EstimateJson),
    Kde(KdeModel),
}

impl ModelFile {
    pub fn into_density(self) -> CliResult<Box<dyn lctree::integrate::Density<f64> + Send + Sync>> {
        Ok(match self {
            ModelFile::Lcmle(j) => Box::new(LogConcaveEstimate::try_from(j)?),
            ModelFile::Kde(k) => Box::new(k),
        })
    }
}

pub fn read_model(path: &Path) -> CliResult<ModelFile> {
    parse_json(&read_text(path)?, &path.display().to_string())
}
