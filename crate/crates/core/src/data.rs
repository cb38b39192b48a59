//! Trust-rating dataset files.
//!
//! A dataset is a JSON Lines file. The first line is a header naming the
//! format, its version and the capability dimension labels; every further
//! non-blank line is one trial record:
//!
//! ```text
//! {"format":"captrust-dataset","version":1,"dimensions":["sensing","processing"]}
//! {"participant":"p001","tasks":{"t1":[0.2,0.7],"t2":[0.5,0.5],"t3":[0.9,0.1],"t4":[0.4,0.6]},
//!  "observations":[{"task":"t1","outcome":1},{"task":"t2","outcome":0},{"task":"t3","outcome":1}],
//!  "prediction_task":"t4","trust_rating_raw":5}
//! ```
//!
//! (the record is a single line in the file). A record carries exactly one
//! of `trust_rating_raw`, a 1-7 Likert response mapped to `(r - 1) / 6`, or
//! `trust_rating`, already in `[0, 1]`. The loader rejects anything invalid
//! with the offending line number and never repairs data.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::capability::{CapabilityVector, Outcome, TrustParams};
use crate::error::TrustError;
use crate::fitting::{predict_trust, TrialRecord};
use crate::rng;

pub const FORMAT_NAME: &str = "captrust-dataset";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: parse error: {message}")]
    Parse { line: usize, message: String },
    #[error("line 1: unsupported dataset header: {0}")]
    Schema(String),
    #[error("line {line} (participant {participant:?}): {reason}")]
    Invalid {
        line: usize,
        participant: String,
        reason: String,
    },
    #[error(transparent)]
    Model(#[from] TrustError),
}

pub type Result<T> = std::result::Result<T, DatasetError>;

/// Maps a 1-7 Likert response onto `[0, 1]` as `(r - 1) / 6`.
pub fn likert_to_probability(raw: u8) -> Option<f64> {
    (1..=7).contains(&raw).then(|| f64::from(raw - 1) / 6.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetFile {
    pub version: u32,
    pub dimensions: Vec<String>,
    pub records: Vec<TrialRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    format: String,
    version: u32,
    dimensions: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct ObservationRow {
    task: String,
    outcome: u8,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordRow {
    participant: String,
    tasks: BTreeMap<String, Vec<f64>>,
    observations: Vec<ObservationRow>,
    prediction_task: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    trust_rating_raw: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    trust_rating: Option<f64>,
}

impl RecordRow {
    fn into_record(self, line: usize, dims: usize) -> Result<TrialRecord> {
        let invalid = |reason: String| DatasetError::Invalid {
            line,
            participant: self.participant.clone(),
            reason,
        };
        let mut tasks = BTreeMap::new();
        for (id, values) in &self.tasks {
            if values.len() != dims {
                return Err(invalid(format!(
                    "task {id:?} has {} requirement values, expected {dims}",
                    values.len()
                )));
            }
            let req = CapabilityVector::new(values.clone()).map_err(|e| invalid(format!("task {id:?}: {e}")))?;
            tasks.insert(id.clone(), req);
        }
        let rating = match (self.trust_rating_raw, self.trust_rating) {
            (Some(raw), None) => {
                likert_to_probability(raw).ok_or_else(|| invalid(format!("trust_rating_raw {raw} outside 1..=7")))?
            }
            (None, Some(r)) if (0.0..=1.0).contains(&r) => r,
            (None, Some(r)) => return Err(invalid(format!("trust_rating {r} outside [0, 1]"))),
            (Some(_), Some(_)) => return Err(invalid("both trust_rating_raw and trust_rating given".into())),
            (None, None) => return Err(invalid("missing trust_rating_raw or trust_rating".into())),
        };
        let observations = self
            .observations
            .iter()
            .map(|o| {
                Outcome::try_from(o.outcome)
                    .map(|outcome| (o.task.as_str(), outcome))
                    .map_err(&invalid)
            })
            .collect::<Result<Vec<_>>>()?;
        TrialRecord::new(
            self.participant.clone(),
            tasks,
            &observations,
            self.prediction_task.clone(),
            rating,
        )
        .map_err(|e| invalid(e.to_string()))
    }

    fn from_record(record: &TrialRecord) -> Self {
        Self {
            participant: record.participant.clone(),
            tasks: record
                .task_requirements
                .iter()
                .map(|(id, req)| (id.clone(), req.values().to_vec()))
                .collect(),
            observations: record
                .observations
                .iter()
                .map(|o| ObservationRow {
                    task: o.task.id.clone(),
                    outcome: o.outcome.into(),
                })
                .collect(),
            prediction_task: record.prediction_task.clone(),
            trust_rating_raw: None,
            trust_rating: Some(record.trust_rating),
        }
    }
}

impl DatasetFile {
    pub fn dim(&self) -> usize {
        self.dimensions.len()
    }

    /// Parses and validates dataset text.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header_line) = lines.next().ok_or_else(|| DatasetError::Schema("empty file".into()))?;
        let header: Header = serde_json::from_str(header_line).map_err(|e| DatasetError::Parse {
            line: 1,
            message: e.to_string(),
        })?;
        if header.format != FORMAT_NAME {
            return Err(DatasetError::Schema(format!(
                "format {:?}, expected {FORMAT_NAME:?}",
                header.format
            )));
        }
        if header.version != FORMAT_VERSION {
            return Err(DatasetError::Schema(format!(
                "version {}, expected {FORMAT_VERSION}",
                header.version
            )));
        }
        if header.dimensions.is_empty() {
            return Err(DatasetError::Schema("no dimension labels".into()));
        }
        let dims = header.dimensions.len();
        let mut seen = HashSet::new();
        let mut records = Vec::new();
        for (idx, line) in lines {
            let line_no = idx + 1;
            let row: RecordRow = serde_json::from_str(line).map_err(|e| DatasetError::Parse {
                line: line_no,
                message: e.to_string(),
            })?;
            if !seen.insert(row.participant.clone()) {
                return Err(DatasetError::Invalid {
                    line: line_no,
                    participant: row.participant,
                    reason: "duplicate participant id".into(),
                });
            }
            records.push(row.into_record(line_no, dims)?);
        }
        Ok(Self {
            version: header.version,
            dimensions: header.dimensions,
            records,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Serializes to the JSON Lines format. Ratings are written as
    /// `trust_rating` so they round-trip exactly.
    pub fn to_jsonl(&self) -> String {
        let header = Header {
            format: FORMAT_NAME.into(),
            version: self.version,
            dimensions: self.dimensions.clone(),
        };
        let mut out = serde_json::to_string(&header).expect("header serializes");
        out.push('\n');
        for r in &self.records {
            out.push_str(&serde_json::to_string(&RecordRow::from_record(r)).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_jsonl()).map_err(|source| DatasetError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<DatasetFile> {
    DatasetFile::load(path)
}

/// Rating perturbation applied by the synthetic generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RatingNoise {
    None,
    /// Additive Gaussian, truncated to `[0, 1]` by rejection.
    Gaussian {
        std: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub dimensions: Vec<String>,
    pub record_count: usize,
    pub observations_per_record: usize,
    pub noise: RatingNoise,
    pub bins_per_dim: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            dimensions: vec!["sensing".into(), "processing".into()],
            record_count: 200,
            observations_per_record: 3,
            noise: RatingNoise::None,
            bins_per_dim: crate::trust::DEFAULT_BINS_PER_DIM,
            seed: 0,
        }
    }
}

/// Draws from `N(mean, std)` restricted to `[0, 1]`.
fn truncated_normal<R: Rng>(rng: &mut R, mean: f64, std: f64) -> f64 {
    if std == 0.0 {
        return mean;
    }
    let normal = Normal::new(mean, std).expect("std is finite and non-negative");
    loop {
        let x = normal.sample(rng);
        if (0.0..=1.0).contains(&x) {
            return x;
        }
    }
}

/// Builds a dataset whose ratings come from the capability-trust model.
///
/// Each record gets `observations_per_record + 1` tasks with uniform random
/// requirements, a hidden uniform random capability point, and deterministic
/// outcomes (success iff every requirement is within the capability). The
/// last task is the prediction task and its rating is the model's trust,
/// optionally perturbed. Tasks and outcomes come from stream 0 of the seed
/// and noise from stream 1, so changing the noise keeps the tasks.
pub fn generate_synthetic_dataset(params: &TrustParams, config: &SyntheticConfig) -> Result<DatasetFile> {
    let n = config.dimensions.len();
    if n != params.dim() {
        return Err(TrustError::DimensionMismatch {
            expected: n,
            actual: params.dim(),
        }
        .into());
    }
    if config.record_count == 0 {
        return Err(TrustError::InvalidArgument("record_count must be >= 1".into()).into());
    }
    if let RatingNoise::Gaussian { std } = config.noise {
        if !(std.is_finite() && std >= 0.0) {
            return Err(TrustError::InvalidArgument(format!("noise std {std} must be finite and >= 0")).into());
        }
    }
    let mut task_rng = rng::stream(config.seed, 0);
    let mut noise_rng = rng::stream(config.seed, 1);
    let width = config.record_count.to_string().len().max(3);
    let mut records = Vec::with_capacity(config.record_count);
    for r in 0..config.record_count {
        let mut point = || -> Vec<f64> { (0..n).map(|_| task_rng.random::<f64>()).collect() };
        let capability = point();
        let mut tasks = BTreeMap::new();
        let mut observations = Vec::new();
        for k in 0..config.observations_per_record {
            let req = point();
            let ok = req.iter().zip(&capability).all(|(q, c)| q <= c);
            let id = format!("t{}", k + 1);
            tasks.insert(id.clone(), CapabilityVector::new(req)?);
            observations.push((id, Outcome::from_success(ok)));
        }
        let pred_id = format!("t{}", config.observations_per_record + 1);
        tasks.insert(pred_id.clone(), CapabilityVector::new(point())?);
        let obs_refs: Vec<(&str, Outcome)> = observations.iter().map(|(id, o)| (id.as_str(), *o)).collect();
        let mut record = TrialRecord::new(format!("s{r:0width$}"), tasks, &obs_refs, pred_id, 0.5)?;
        let clean = predict_trust(&record, params, config.bins_per_dim)?;
        record.trust_rating = match config.noise {
            RatingNoise::None => clean,
            RatingNoise::Gaussian { std } => truncated_normal(&mut noise_rng, clean, std),
        };
        records.push(record);
    }
    Ok(DatasetFile {
        version: FORMAT_VERSION,
        dimensions: config.dimensions.clone(),
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = r#"{"format":"captrust-dataset","version":1,"dimensions":["sensing","processing"]}"#;

    fn row(rating: &str, t1: &str) -> String {
        format!(
            r#"{{"participant":"p1","tasks":{{"t1":{t1},"t2":[0.5,0.5],"t3":[0.9,0.1],"t4":[0.4,0.6]}},"observations":[{{"task":"t1","outcome":1}},{{"task":"t2","outcome":0}},{{"task":"t3","outcome":1}}],"prediction_task":"t4",{rating}}}"#
        )
    }

    #[test]
    fn likert_mapping() {
        assert_eq!(likert_to_probability(7), Some(1.0));
        assert_eq!(likert_to_probability(4), Some(0.5));
        assert_eq!(likert_to_probability(1), Some(0.0));
        assert_eq!(likert_to_probability(0), None);
        assert_eq!(likert_to_probability(8), None);
        let mapped: Vec<f64> = (1..=7).map(|r| likert_to_probability(r).unwrap()).collect();
        assert!(mapped.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn load_maps_ratings() {
        let text = format!("{HEADER}\n{}\n", row(r#""trust_rating_raw":7"#, "[0.2,0.7]"));
        let d = DatasetFile::parse(&text).unwrap();
        assert_eq!(d.records[0].trust_rating, 1.0);
        assert_eq!(d.records[0].observations.len(), 3);
        assert_eq!(d.records[0].observations[2].time, 3);
        let text = format!("{HEADER}\n{}\n", row(r#""trust_rating_raw":4"#, "[0.2,0.7]"));
        assert_eq!(DatasetFile::parse(&text).unwrap().records[0].trust_rating, 0.5);
    }

    #[test]
    fn load_rejects_out_of_range_requirement() {
        let text = format!("{HEADER}\n\n{}\n", row(r#""trust_rating_raw":4"#, "[1.2,0.7]"));
        let err = DatasetFile::parse(&text).unwrap_err();
        match &err {
            DatasetError::Invalid { line, participant, .. } => {
                assert_eq!(*line, 3);
                assert_eq!(participant, "p1");
            }
            other => panic!("unexpected error {other}"),
        }
        assert!(err.to_string().contains("1.2"));
    }

    #[test]
    fn load_rejects_bad_rows() {
        let cases = [
            row(r#""trust_rating_raw":9"#, "[0.2,0.7]"),
            row(r#""trust_rating":1.5"#, "[0.2,0.7]"),
            row(r#""trust_rating":0.5,"trust_rating_raw":4"#, "[0.2,0.7]"),
            row(r#""note":1"#, "[0.2,0.7]"),
            row(r#""trust_rating":0.5"#, "[0.2]"),
            row(r#""trust_rating":0.5"#, "[0.2,0.7]").replace(r#""outcome":0"#, r#""outcome":3"#),
            row(r#""trust_rating":0.5"#, "[0.2,0.7]").replace(r#""prediction_task":"t4""#, r#""prediction_task":"t9""#),
        ];
        for c in cases {
            assert!(DatasetFile::parse(&format!("{HEADER}\n{c}\n")).is_err(), "accepted {c}");
        }
    }

    #[test]
    fn load_rejects_header_and_duplicates() {
        let r = row(r#""trust_rating":0.5"#, "[0.2,0.7]");
        let wrong_version = HEADER.replace("\"version\":1", "\"version\":2");
        assert!(matches!(
            DatasetFile::parse(&format!("{wrong_version}\n{r}\n")),
            Err(DatasetError::Schema(_))
        ));
        assert!(matches!(
            DatasetFile::parse(&format!("{HEADER}\n{r}\n{r}\n")),
            Err(DatasetError::Invalid { line: 3, .. })
        ));
        assert!(matches!(
            DatasetFile::parse("{not json"),
            Err(DatasetError::Parse { line: 1, .. })
        ));
        assert!(DatasetFile::parse("").is_err());
    }

    fn params() -> TrustParams {
        TrustParams::new(vec![8.0, 12.0], vec![1.0, 1.0]).unwrap()
    }

    #[test]
    fn synthetic_zero_noise_matches_model() {
        let cfg = SyntheticConfig {
            record_count: 50,
            seed: 5,
            ..Default::default()
        };
        let d = generate_synthetic_dataset(&params(), &cfg).unwrap();
        assert_eq!(d.records.len(), 50);
        for r in &d.records {
            assert_eq!(r.trust_rating, predict_trust(r, &params(), cfg.bins_per_dim).unwrap());
        }
    }

    #[test]
    fn synthetic_is_deterministic_and_roundtrips() {
        let cfg = SyntheticConfig {
            record_count: 30,
            seed: 9,
            noise: RatingNoise::Gaussian { std: 0.1 },
            ..Default::default()
        };
        let a = generate_synthetic_dataset(&params(), &cfg).unwrap();
        let b = generate_synthetic_dataset(&params(), &cfg).unwrap();
        assert_eq!(a.to_jsonl(), b.to_jsonl());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        a.save(&path).unwrap();
        assert_eq!(load_dataset(&path).unwrap(), a);
    }

    #[test]
    fn synthetic_noise_moment() {
        // Monte-Carlo check on the truncated perturbation: the half-normal
        // mean is 0.1 * sqrt(2/pi) = 0.0798 before truncation shrinks it.
        let clean = SyntheticConfig {
            record_count: 1000,
            seed: 21,
            ..Default::default()
        };
        let noisy = SyntheticConfig {
            noise: RatingNoise::Gaussian { std: 0.1 },
            ..clean.clone()
        };
        let a = generate_synthetic_dataset(&params(), &clean).unwrap();
        let b = generate_synthetic_dataset(&params(), &noisy).unwrap();
        let mean_abs = a
            .records
            .iter()
            .zip(&b.records)
            .map(|(x, y)| (x.trust_rating - y.trust_rating).abs())
            .sum::<f64>()
            / 1000.0;
        assert!((0.06..=0.10).contains(&mean_abs), "{mean_abs}");
        assert!(b.records.iter().all(|r| (0.0..=1.0).contains(&r.trust_rating)));
    }

    #[test]
    fn synthetic_rejects_bad_config() {
        let cfg = SyntheticConfig {
            record_count: 0,
            ..Default::default()
        };
        assert!(generate_synthetic_dataset(&params(), &cfg).is_err());
        let cfg = SyntheticConfig {
            dimensions: vec!["a".into()],
            ..Default::default()
        };
        assert!(generate_synthetic_dataset(&params(), &cfg).is_err());
    }
}
