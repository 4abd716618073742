//! JSON and CSV file formats.
//!
//! Files use one-based labels in the caller's original box order. Readers
//! reorder rows into the sorted order used by the library and writers
//! restore the caller's order.

use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};

use crate::decomp::StrategyDecomposition;
use crate::error::{GameError, Result};
use crate::game::{
    BoxDistribution, CongestionPolicy, GameConfig, PolicyKind, Profile, StrategyMatrix,
};

fn parse_err(what: &str, e: impl std::fmt::Display) -> GameError {
    GameError::Parse(format!("{what}: {e}"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyFile {
    pub kind: PolicyKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rewards: Option<Vec<f64>>,
}

/// `{"f": [...], "k": int, "T": int, "policy": {"kind": ..., "rewards": [...]}}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub f: Vec<f64>,
    pub k: usize,
    #[serde(rename = "T")]
    pub rounds: usize,
    pub policy: PolicyFile,
}

impl ConfigFile {
    pub fn into_config(self) -> Result<GameConfig> {
        if self.k == 0 {
            return Err(GameError::InvalidConfig("k must be at least 1".into()));
        }
        let f = BoxDistribution::new(self.f)?;
        let policy = CongestionPolicy::from_kind(self.policy.kind, self.k, self.policy.rewards)?;
        GameConfig::new(f, policy, self.rounds)
    }

    pub fn from_config(config: &GameConfig) -> Self {
        let policy = config.policy();
        Self {
            f: config.distribution().original_probs(),
            k: config.players(),
            rounds: config.rounds(),
            policy: PolicyFile {
                kind: policy.kind(),
                rewards: Some(policy.rewards().to_vec()),
            },
        }
    }
}

pub fn parse_config(text: &str) -> Result<GameConfig> {
    serde_json::from_str::<ConfigFile>(text)
        .map_err(|e| parse_err("game config", e))?
        .into_config()
}

pub fn config_to_json(config: &GameConfig) -> String {
    serde_json::to_string(&ConfigFile::from_config(config)).expect("config serializes")
}

/// `{"M": int, "T": int, "rows": [[...], ...]}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixFile {
    #[serde(rename = "M")]
    pub boxes: usize,
    #[serde(rename = "T")]
    pub rounds: usize,
    pub rows: Vec<Vec<f64>>,
}

impl MatrixFile {
    /// Matrix in the caller's row order.
    fn into_matrix(self) -> Result<StrategyMatrix> {
        if self.rows.len() != self.boxes {
            return Err(GameError::InvalidMatrix(format!(
                "M = {} but {} rows given",
                self.boxes,
                self.rows.len()
            )));
        }
        StrategyMatrix::from_rows(self.rounds, self.rows)
    }

    fn from_matrix(matrix: &StrategyMatrix) -> Self {
        Self {
            boxes: matrix.boxes(),
            rounds: matrix.rounds(),
            rows: matrix.to_rows(),
        }
    }
}

/// Reads a strategy in original labels and returns it in sorted order.
pub fn parse_matrix(text: &str, f: &BoxDistribution) -> Result<StrategyMatrix> {
    let file: MatrixFile =
        serde_json::from_str(text).map_err(|e| parse_err("strategy matrix", e))?;
    f.rows_to_sorted(&file.into_matrix()?)
}

pub fn matrix_to_json(matrix: &StrategyMatrix, f: &BoxDistribution) -> Result<String> {
    let file = MatrixFile::from_matrix(&f.rows_to_original(matrix)?);
    Ok(serde_json::to_string(&file).expect("matrix serializes"))
}

/// CSV with header `box,t1,...,tT` and one row per box label.
pub fn parse_matrix_csv(text: &str, f: &BoxDistribution) -> Result<StrategyMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| parse_err("strategy csv", e))?
        .clone();
    let rounds = header.len().saturating_sub(1);
    if header.get(0) != Some("box")
        || (1..=rounds).any(|t| header.get(t) != Some(format!("t{t}").as_str()))
    {
        return Err(GameError::Parse(format!(
            "strategy csv header must be box,t1,...,tT; got {}",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let m = f.len();
    let mut rows: Vec<Option<Vec<f64>>> = vec![None; m];
    for record in reader.records() {
        let record = record.map_err(|e| parse_err("strategy csv", e))?;
        let label: usize = record[0].parse().map_err(|e| parse_err("box label", e))?;
        if label == 0 || label > m {
            return Err(GameError::OutOfRange(format!(
                "box label {label} outside 1..={m}"
            )));
        }
        let row = record
            .iter()
            .skip(1)
            .map(|v| v.parse::<f64>().map_err(|e| parse_err("strategy entry", e)))
            .collect::<Result<Vec<_>>>()?;
        if rows[label - 1].replace(row).is_some() {
            return Err(GameError::InvalidMatrix(format!(
                "box {label} listed twice"
            )));
        }
    }
    let rows = rows
        .into_iter()
        .enumerate()
        .map(|(x, r)| r.ok_or_else(|| GameError::InvalidMatrix(format!("box {} missing", x + 1))))
        .collect::<Result<Vec<_>>>()?;
    f.rows_to_sorted(&StrategyMatrix::from_rows(rounds, rows)?)
}

pub fn matrix_to_csv(matrix: &StrategyMatrix, f: &BoxDistribution) -> Result<String> {
    let original = f.rows_to_original(matrix)?;
    let mut writer = csv::Writer::from_writer(Vec::new());
    let header: Vec<String> = std::iter::once("box".to_string())
        .chain((1..=matrix.rounds()).map(|t| format!("t{t}")))
        .collect();
    let io = |e: csv::Error| GameError::Parse(format!("writing csv: {e}"));
    writer.write_record(&header).map_err(io)?;
    for x in 0..original.boxes() {
        let record: Vec<String> = std::iter::once((x + 1).to_string())
            .chain(original.row(x).iter().map(f64::to_string))
            .collect();
        writer.write_record(&record).map_err(io)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| GameError::Parse(format!("writing csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// `{"players": [matrix, ...]}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileFile {
    pub players: Vec<MatrixFile>,
}

pub fn parse_profile(text: &str, f: &BoxDistribution) -> Result<Profile> {
    let file: ProfileFile = serde_json::from_str(text).map_err(|e| parse_err("profile", e))?;
    let players = file
        .players
        .into_iter()
        .map(|m| f.rows_to_sorted(&m.into_matrix()?))
        .collect::<Result<Vec<_>>>()?;
    Profile::new(players)
}

pub fn profile_to_json(profile: &Profile, f: &BoxDistribution) -> Result<String> {
    let players = profile
        .players()
        .iter()
        .map(|m| Ok(MatrixFile::from_matrix(&f.rows_to_original(m)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(serde_json::to_string(&ProfileFile { players }).expect("profile serializes"))
}

/// The box opened in each round, keyed by one-based round, in round order.
struct Visits<'a> {
    visits: &'a [Option<usize>],
    labels: &'a [usize],
}

impl Serialize for Visits<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.visits.iter().flatten().count()))?;
        for (t, x) in self.visits.iter().enumerate() {
            if let Some(x) = x {
                map.serialize_entry(&(t + 1).to_string(), &(self.labels[*x] + 1))?;
            }
        }
        map.end()
    }
}

#[derive(Serialize)]
struct TermFile<'a> {
    weight: f64,
    visits: Visits<'a>,
}

/// `[{"weight": w, "visits": {"1": x, ...}}, ...]`; idle rounds are omitted.
pub fn decomposition_to_json(d: &StrategyDecomposition, f: &BoxDistribution) -> Result<String> {
    if d.boxes() != f.len() {
        return Err(GameError::DimensionMismatch(format!(
            "decomposition has {} boxes, distribution has {}",
            d.boxes(),
            f.len()
        )));
    }
    let terms: Vec<TermFile> = d
        .terms()
        .iter()
        .map(|(w, p)| TermFile {
            weight: *w,
            visits: Visits {
                visits: p.visits(),
                labels: f.labels(),
            },
        })
        .collect();
    Ok(serde_json::to_string(&terms).expect("decomposition serializes"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomp::birkhoff_decompose;
    use crate::strategies::pure_strategy;

    const CONFIG: &str = r#"{"f":[0.2,0.5,0.3],"k":2,"T":2,"policy":{"kind":"sharing"}}"#;

    #[test]
    fn config_round_trip_keeps_labels() {
        let cfg = parse_config(CONFIG).unwrap();
        assert_eq!(cfg.distribution().probs(), &[0.5, 0.3, 0.2]);
        assert_eq!(cfg.players(), 2);
        let again = parse_config(&config_to_json(&cfg)).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(ConfigFile::from_config(&cfg).f, vec![0.2, 0.5, 0.3]);
    }

    #[test]
    fn config_rejections() {
        assert!(matches!(parse_config("{"), Err(GameError::Parse(_))));
        let table_short = r#"{"f":[1.0],"k":2,"T":1,"policy":{"kind":"table","rewards":[1.0]}}"#;
        assert!(matches!(
            parse_config(table_short),
            Err(GameError::InvalidPolicy(_))
        ));
        let zero_t = r#"{"f":[1.0],"k":1,"T":0,"policy":{"kind":"exclusive"}}"#;
        assert!(matches!(
            parse_config(zero_t),
            Err(GameError::InvalidConfig(_))
        ));
        let unknown = r#"{"f":[1.0],"k":1,"T":1,"policy":{"kind":"exclusive"},"x":1}"#;
        assert!(parse_config(unknown).is_err());
    }

    #[test]
    fn matrix_json_and_csv_translate_labels() {
        let cfg = parse_config(CONFIG).unwrap();
        let f = cfg.distribution();
        // caller label 2 is sorted box 0
        let text = r#"{"M":3,"T":2,"rows":[[0,0],[1,0],[0,1]]}"#;
        let m = parse_matrix(text, f).unwrap();
        assert_eq!(m, pure_strategy(&[0, 1], 3, 2).unwrap());
        assert_eq!(parse_matrix(&matrix_to_json(&m, f).unwrap(), f).unwrap(), m);
        let csv = matrix_to_csv(&m, f).unwrap();
        assert!(csv.starts_with("box,t1,t2\n1,0,0\n2,1,0\n"));
        assert_eq!(parse_matrix_csv(&csv, f).unwrap(), m);
        assert!(parse_matrix(r#"{"M":2,"T":2,"rows":[[0,0],[1,0],[0,1]]}"#, f).is_err());
        assert!(parse_matrix_csv("box,t2\n1,0\n2,0\n3,0\n", f).is_err());
        assert!(parse_matrix_csv("box,t1\n1,0\n2,0\n", f).is_err());
    }

    #[test]
    fn profile_round_trip() {
        let cfg = parse_config(CONFIG).unwrap();
        let f = cfg.distribution();
        let p = Profile::new(vec![
            pure_strategy(&[0], 3, 2).unwrap(),
            pure_strategy(&[2, 1], 3, 2).unwrap(),
        ])
        .unwrap();
        assert_eq!(
            parse_profile(&profile_to_json(&p, f).unwrap(), f).unwrap(),
            p
        );
    }

    #[test]
    fn decomposition_json_uses_labels() {
        let cfg = parse_config(CONFIG).unwrap();
        let f = cfg.distribution();
        let d = birkhoff_decompose(&pure_strategy(&[0, 2], 3, 2).unwrap()).unwrap();
        assert_eq!(
            decomposition_to_json(&d, f).unwrap(),
            r#"[{"weight":1.0,"visits":{"1":2,"2":1}}]"#
        );
    }
}
