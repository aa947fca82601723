//! Trajectory persistence: one JSON object per line. The first line echoes the
//! match configuration, each following line holds one round, and a trailer line
//! records the completion status. Actions and payoffs are written with 17
//! significant digits.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{EngineError, MatchConfig, Result};
use crate::agents::SocialSnapshot;
use crate::game::MarketOutcome;

pub const FORMAT_NAME: &str = "market-trust-trajectory";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoundRecord {
    pub round: usize,
    /// Actions after perturbation and clamping, as the market saw them.
    #[serde(with = "crate::lossless::vec")]
    pub actions: Vec<f64>,
    pub perturbed: Vec<bool>,
    pub outcome: MarketOutcome,
    /// `θ, γ` each agent reported for its own choice; `None` for agents that do
    /// not expose them.
    pub social: Vec<Option<SocialSnapshot>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rationales: Vec<Option<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case", deny_unknown_fields)]
pub enum MatchStatus {
    Running,
    Completed,
    Failed {
        round: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        agent: Option<usize>,
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog {
    pub config: MatchConfig,
    pub rounds: Vec<RoundRecord>,
    pub status: MatchStatus,
    /// Free-form description carried in the header, e.g. the scenario that produced the log.
    pub metadata: Option<serde_json::Value>,
}

impl TrajectoryLog {
    pub fn new(config: MatchConfig) -> Self {
        TrajectoryLog { config, rounds: Vec::new(), status: MatchStatus::Running, metadata: None }
    }

    pub fn is_complete(&self) -> bool {
        self.status == MatchStatus::Completed
    }

    pub fn round(&self, t: usize) -> Option<&RoundRecord> {
        self.rounds.get(t.checked_sub(1)?)
    }

    pub fn actions_of(&self, i: usize) -> Vec<f64> {
        self.rounds.iter().map(|r| r.actions[i]).collect()
    }

    pub fn welfare(&self) -> Vec<f64> {
        self.rounds.iter().map(|r| r.outcome.welfare()).collect()
    }

    pub fn theta_of(&self, i: usize) -> Vec<Option<f64>> {
        self.rounds.iter().map(|r| r.social[i].map(|s| s.theta)).collect()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    record: String,
    format: String,
    version: u32,
    config: MatchConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    metadata: Option<serde_json::Value>,
}

#[derive(Serialize)]
struct RoundLine<'a> {
    record: &'static str,
    #[serde(flatten)]
    round: &'a RoundRecord,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Trailer {
    record: String,
    rounds: usize,
    status: MatchStatus,
}

/// Serializes a log to the line-delimited trajectory format.
pub fn persist_string(log: &TrajectoryLog) -> Result<String> {
    let mut out = String::new();
    let header = Header {
        record: "header".into(),
        format: FORMAT_NAME.into(),
        version: FORMAT_VERSION,
        config: log.config.clone(),
        metadata: log.metadata.clone(),
    };
    out.push_str(&serde_json::to_string(&header)?);
    out.push('\n');
    for r in &log.rounds {
        out.push_str(&serde_json::to_string(&RoundLine { record: "round", round: r })?);
        out.push('\n');
    }
    let trailer = Trailer { record: "end".into(), rounds: log.rounds.len(), status: log.status.clone() };
    out.push_str(&serde_json::to_string(&trailer)?);
    out.push('\n');
    Ok(out)
}

pub fn persist(log: &TrajectoryLog, path: impl AsRef<Path>) -> Result<()> {
    let text = persist_string(log)?;
    let mut f = fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<TrajectoryLog> {
    load_str(&fs::read_to_string(path)?)
}

fn parse_line<T: DeserializeOwned>(line_no: usize, value: serde_json::Value) -> Result<T> {
    serde_path_to_error::deserialize(value).map_err(|e| EngineError::Parse {
        line: line_no,
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

/// Parses a trajectory file. A file without its trailer line is rejected.
pub fn load_str(text: &str) -> Result<TrajectoryLog> {
    let mut config = None;
    let mut metadata = None;
    let mut rounds: Vec<RoundRecord> = Vec::new();
    let mut status = None;
    for (k, line) in text.lines().enumerate() {
        let line_no = k + 1;
        if line.trim().is_empty() {
            continue;
        }
        if status.is_some() {
            return Err(EngineError::Parse { line: line_no, path: ".".into(), message: "content after trailer".into() });
        }
        let mut value: serde_json::Value = serde_json::from_str(line).map_err(|e| EngineError::Parse {
            line: line_no,
            path: ".".into(),
            message: e.to_string(),
        })?;
        let kind = value.get("record").and_then(|r| r.as_str()).map(str::to_owned);
        match (kind.as_deref(), config.is_some()) {
            (Some("header"), false) => {
                let header: Header = parse_line(line_no, value)?;
                if header.format != FORMAT_NAME || header.version != FORMAT_VERSION {
                    return Err(EngineError::Parse {
                        line: line_no,
                        path: "format".into(),
                        message: format!("unsupported format {} v{}", header.format, header.version),
                    });
                }
                config = Some(header.config);
                metadata = header.metadata;
            }
            (Some("round"), true) => {
                value.as_object_mut().map(|o| o.remove("record"));
                let record: RoundRecord = parse_line(line_no, value)?;
                let expected = rounds.len() + 1;
                if record.round != expected {
                    return Err(EngineError::Parse {
                        line: line_no,
                        path: "round".into(),
                        message: format!("expected round {expected}, found {}", record.round),
                    });
                }
                rounds.push(record);
            }
            (Some("end"), true) => {
                let trailer: Trailer = parse_line(line_no, value)?;
                if trailer.rounds != rounds.len() {
                    return Err(EngineError::Parse {
                        line: line_no,
                        path: "rounds".into(),
                        message: format!("trailer counts {} rounds, file holds {}", trailer.rounds, rounds.len()),
                    });
                }
                status = Some(trailer.status);
            }
            (other, _) => {
                return Err(EngineError::Parse {
                    line: line_no,
                    path: "record".into(),
                    message: format!("unexpected record type {other:?}"),
                });
            }
        }
    }
    let config = config.ok_or_else(|| EngineError::Truncated("missing header".into()))?;
    let status = status.ok_or_else(|| EngineError::Truncated(format!("no trailer after {} rounds", rounds.len())))?;
    Ok(TrajectoryLog { config, rounds, status, metadata })
}

/// Writes one CSV row per (round, agent), preceded by `# `-prefixed comment
/// lines carrying the match configuration and any extra metadata.
pub fn export_csv<W: Write>(log: &TrajectoryLog, metadata: &[(&str, String)], mut out: W) -> Result<()> {
    writeln!(out, "# config: {}", serde_json::to_string(&log.config)?)?;
    if let Some(m) = &log.metadata {
        writeln!(out, "# metadata: {}", serde_json::to_string(m)?)?;
    }
    for (key, value) in metadata {
        writeln!(out, "# {key}: {value}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["round", "agent", "action", "payoff", "theta", "gamma", "perturbed"])?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in &log.rounds {
        for (i, x) in r.actions.iter().enumerate() {
            let s = r.social[i];
            w.write_record([
                r.round.to_string(),
                i.to_string(),
                x.to_string(),
                r.outcome.payoffs[i].to_string(),
                opt(s.map(|s| s.theta)),
                opt(s.map(|s| s.gamma)),
                r.perturbed[i].to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::AgentSpec;
    use crate::engine::run_match;
    use crate::game::GameSpec;

    #[test]
    fn round_trip_and_truncation() {
        let config = MatchConfig::new(GameSpec::cournot(vec![15.0, 15.0]).unwrap(), 5, vec![AgentSpec::synthetic(); 2]);
        let log = run_match(&config).unwrap();
        let text = persist_string(&log).unwrap();
        assert_eq!(load_str(&text).unwrap(), log);
        assert!(text.lines().nth(1).unwrap().contains("5.0000000000000000e0"));
        let cut: String = text.lines().take(4).map(|l| format!("{l}\n")).collect();
        assert!(matches!(load_str(&cut), Err(EngineError::Truncated(_))));
    }

    #[test]
    fn parse_errors_name_line_and_field() {
        let config = MatchConfig::new(GameSpec::cournot(vec![15.0, 15.0]).unwrap(), 2, vec![AgentSpec::myopic(); 2]);
        let text = persist_string(&run_match(&config).unwrap()).unwrap();
        let broken = text.replacen("\"perturbed\":[false,false]", "\"perturbed\":[false,\"x\"]", 1);
        match load_str(&broken) {
            Err(EngineError::Parse { line, path, .. }) => {
                assert_eq!(line, 2);
                assert_eq!(path, "perturbed[1]");
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
