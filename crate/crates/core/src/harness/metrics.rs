//! Per-step metric logs.

use std::io::{self, Write};

use crate::agents::StepRecord;
use crate::error::{Error, Result};

pub const METRICS_HEADER: &str = "step,episode,reward,reward_smooth,p_loss,train_loss,epsilon";

/// Prefix of the last line of a log whose run stopped early.
pub const TRUNCATION_MARKER: &str = "# truncated:";

/// Mean of the last `window` elements at each index, over fewer elements
/// at the head of the series.
pub fn moving_average(series: &[f64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    (0..series.len())
        .map(|i| {
            let lo = (i + 1).saturating_sub(window);
            let slice = &series[lo..=i];
            slice.iter().sum::<f64>() / slice.len() as f64
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsRow {
    pub step: u64,
    pub episode: u64,
    pub reward: f64,
    pub reward_smooth: f64,
    pub p_loss: Option<f64>,
    pub train_loss: Option<f64>,
    pub epsilon: Option<f64>,
}

impl MetricsRow {
    /// Rows for `records`, smoothing the reward column with `window`.
    pub fn from_records(records: &[StepRecord], window: usize) -> Vec<MetricsRow> {
        let rewards: Vec<f64> = records.iter().map(|r| r.reward).collect();
        records
            .iter()
            .zip(moving_average(&rewards, window))
            .map(|(r, smooth)| MetricsRow {
                step: r.step,
                episode: r.episode,
                reward: r.reward,
                reward_smooth: smooth,
                p_loss: r.p_loss,
                train_loss: r.train_loss,
                epsilon: r.epsilon,
            })
            .collect()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes the header, one line per row and, for a partial run, a final
/// marker line carrying the reason.
pub fn write_metrics<W: Write>(out: &mut W, rows: &[MetricsRow], truncated: Option<&str>) -> io::Result<()> {
    writeln!(out, "{METRICS_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.step,
            r.episode,
            r.reward,
            r.reward_smooth,
            opt(r.p_loss),
            opt(r.train_loss),
            opt(r.epsilon)
        )?;
    }
    if let Some(reason) = truncated {
        writeln!(out, "{TRUNCATION_MARKER} {}", reason.replace('\n', " "))?;
    }
    Ok(())
}

/// Reads a log written by [`write_metrics`]. Returns the rows and the
/// truncation reason, if any.
pub fn parse_metrics(text: &str) -> Result<(Vec<MetricsRow>, Option<String>)> {
    let bad = |line: usize, msg: &str| Error::Config(format!("metrics line {line}: {msg}"));
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == METRICS_HEADER => {}
        _ => return Err(bad(1, "missing header")),
    }
    let mut rows = Vec::new();
    let mut truncated = None;
    for (i, line) in lines {
        if let Some(reason) = line.strip_prefix(TRUNCATION_MARKER) {
            truncated = Some(reason.trim().to_string());
            continue;
        }
        if truncated.is_some() {
            return Err(bad(i + 1, "data after truncation marker"));
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(bad(i + 1, "expected 7 fields"));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(i + 1, "bad number"));
        let int = |s: &str| s.parse::<u64>().map_err(|_| bad(i + 1, "bad integer"));
        let opt = |s: &str| if s.is_empty() { Ok(None) } else { num(s).map(Some) };
        rows.push(MetricsRow {
            step: int(f[0])?,
            episode: int(f[1])?,
            reward: num(f[2])?,
            reward_smooth: num(f[3])?,
            p_loss: opt(f[4])?,
            train_loss: opt(f[5])?,
            epsilon: opt(f[6])?,
        });
    }
    Ok((rows, truncated))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moving_average_fixtures() {
        assert_eq!(moving_average(&[1.0, 2.0, 3.0], 2), vec![1.0, 1.5, 2.5]);
        let s = [0.3, -1.0, 7.5, 2.25];
        assert_eq!(moving_average(&s, 1), s.to_vec());
        assert_eq!(moving_average(&[4.0; 50], 7), vec![4.0; 50]);
        assert_eq!(moving_average(&[1.0, 3.0], 200), vec![1.0, 2.0]);
        assert!(moving_average(&[], 3).is_empty());
    }

    fn rec(step: u64, reward: f64, p_loss: Option<f64>) -> StepRecord {
        StepRecord {
            step,
            episode: step / 2,
            reward,
            sum_rate: reward,
            p_loss,
            train_loss: None,
            epsilon: Some(0.5),
        }
    }

    #[test]
    fn write_then_parse() {
        let records = [rec(0, 1.0, None), rec(1, 2.0, Some(0.125)), rec(2, 0.1 + 0.2, None)];
        let rows = MetricsRow::from_records(&records, 2);
        let mut buf = Vec::new();
        write_metrics(&mut buf, &rows, None).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(METRICS_HEADER));
        assert_eq!(text.lines().nth(2).unwrap(), "1,0,2,1.5,0.125,,0.5");
        let (back, trunc) = parse_metrics(&text).unwrap();
        assert_eq!(back, rows);
        assert_eq!(trunc, None);
    }

    #[test]
    fn truncation_marker() {
        let rows = MetricsRow::from_records(&[rec(0, 1.0, None)], 200);
        let mut buf = Vec::new();
        write_metrics(&mut buf, &rows, Some("non-finite value\nin loss")).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().last().unwrap(), "# truncated: non-finite value in loss");
        let (back, trunc) = parse_metrics(&text).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(trunc.as_deref(), Some("non-finite value in loss"));
    }
}
