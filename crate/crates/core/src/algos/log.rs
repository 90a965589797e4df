use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    /// 1-based.
    pub episode: usize,
    #[serde(rename = "return")]
    pub episode_return: f64,
    pub length: usize,
    /// Mean of `beta exp(beta R)` over the episode; empty for risk-neutral runs.
    pub mean_exp_weight: Option<f64>,
    pub lr: f64,
    pub clamp_events: usize,
    pub diagnostic: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingLog {
    pub records: Vec<EpisodeRecord>,
}

impl TrainingLog {
    pub fn returns(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.episode_return).collect()
    }

    /// Mean return over the last `window` episodes (or all, if fewer).
    pub fn final_mean(&self, window: usize) -> f64 {
        let n = self.records.len();
        if n == 0 {
            return f64::NAN;
        }
        let tail = &self.records[n.saturating_sub(window)..];
        tail.iter().map(|r| r.episode_return).sum::<f64>() / tail.len() as f64
    }

    /// First episode at which the trailing `window` mean reaches `threshold`.
    pub fn episodes_to_threshold(&self, window: usize, threshold: f64) -> Option<usize> {
        let mut sum = 0.0;
        for (i, r) in self.records.iter().enumerate() {
            sum += r.episode_return;
            if i >= window {
                sum -= self.records[i - window].episode_return;
            }
            if i + 1 >= window && sum / window as f64 >= threshold {
                return Some(i + 1);
            }
        }
        None
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.records {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Usage(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Usage(e.to_string()))
    }

    pub fn to_jsonl_string(&self) -> Result<String> {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_file(path, self.to_csv_string()?.as_bytes())
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        write_file(path, self.to_jsonl_string()?.as_bytes())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let records = r.deserialize().collect::<std::result::Result<Vec<EpisodeRecord>, _>>()?;
        Ok(Self { records })
    }
}

/// Writes `bytes` to `path`, creating missing parent directories.
pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log_of(returns: &[f64]) -> TrainingLog {
        TrainingLog {
            records: returns
                .iter()
                .enumerate()
                .map(|(i, r)| EpisodeRecord {
                    episode: i + 1,
                    episode_return: *r,
                    length: 1,
                    mean_exp_weight: if i % 2 == 0 { Some(-0.5) } else { None },
                    lr: 0.1,
                    clamp_events: 0,
                    diagnostic: None,
                })
                .collect(),
        }
    }

    #[test]
    fn windows() {
        let log = log_of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(log.final_mean(2), 3.5);
        assert_eq!(log.final_mean(10), 2.5);
        assert_eq!(log.episodes_to_threshold(2, 2.5), Some(3));
        assert_eq!(log.episodes_to_threshold(2, 9.0), None);
    }

    #[test]
    fn csv_and_jsonl() {
        let log = log_of(&[1.5, 2.0]);
        let csv = log.to_csv_string().unwrap();
        assert!(csv.starts_with("episode,return,length,mean_exp_weight,lr,clamp_events,diagnostic\n"));
        assert!(csv.contains("2,2.0,1,,0.1,0,\n"));
        let json = log.to_jsonl_string().unwrap();
        assert_eq!(json.lines().count(), 2);
        assert!(json.contains("\"return\":1.5"));

        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("log.csv");
        log.write_csv(&p).unwrap();
        assert_eq!(TrainingLog::read_csv(&p).unwrap(), log);
    }
}
