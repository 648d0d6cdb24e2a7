use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::privacy::PrivacyResult;
use super::stats::{AggregateStats, Rate};
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "config_id,metric,estimate,ci_lo,ci_hi,trials";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub config_id: String,
    pub metric: String,
    pub estimate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub trials: u64,
}

/// Metric rows in a fixed order. Wall-clock timing is never included.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub rows: Vec<ReportRow>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::Config(format!("unknown format {s:?}"))),
        }
    }
}

impl Report {
    pub fn push_rate(&mut self, config_id: &str, metric: &str, r: &Rate) {
        self.push(config_id, metric, r.estimate, r.ci_lo, r.ci_hi, r.trials);
    }

    pub fn push(
        &mut self,
        config_id: &str,
        metric: &str,
        estimate: f64,
        ci_lo: f64,
        ci_hi: f64,
        trials: u64,
    ) {
        self.rows.push(ReportRow {
            config_id: config_id.to_string(),
            metric: metric.to_string(),
            estimate,
            ci_lo,
            ci_hi,
            trials,
        });
    }

    /// Point metrics carry a degenerate interval.
    pub fn push_point(&mut self, config_id: &str, metric: &str, value: f64, trials: u64) {
        self.push(config_id, metric, value, value, value, trials);
    }

    pub fn from_stats(s: &AggregateStats) -> Self {
        let id = s.config_id.as_str();
        let t = &s.tally;
        let mut rep = Report::default();
        rep.push_rate(id, "frr", &s.frr);
        rep.push_rate(id, "far", &s.far);
        rep.push_rate(id, "per_level_false_branch", &s.per_level_false_branch);
        rep.push_rate(
            id,
            "wrong_leaf",
            &Rate::new(t.legit_wrong_leaf, t.legit_trials),
        );
        rep.push_point(id, "mean_repeats", s.mean_repeats, t.legit_trials);
        rep.push_point(
            id,
            "reader_matvec_per_trial",
            s.per_trial(t.ops.reader_matvec),
            t.trials,
        );
        rep.push_point(
            id,
            "tag_matvec_per_trial",
            s.per_trial(t.ops.tag_matvec),
            t.trials,
        );
        rep.push_point(
            id,
            "comm_bits_per_trial",
            s.per_trial(t.ops.total_bits()),
            t.trials,
        );
        rep.push_point(
            id,
            "verifications_per_trial",
            s.per_trial(t.verifications),
            t.trials,
        );
        rep
    }

    pub fn from_privacy(config_id: &str, p: &PrivacyResult) -> Self {
        let mut rep = Report::default();
        rep.push(
            config_id,
            "advantage",
            p.advantage,
            p.ci_lo,
            p.ci_hi,
            p.correct.trials,
        );
        rep.push_rate(config_id, "correct_guess", &p.correct);
        rep
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            // `{}` on f64 prints the shortest round-tripping form.
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.config_id, r.metric, r.estimate, r.ci_lo, r.ci_hi, r.trials
            )
            .expect("writing to a String");
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report is serializable");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Encoding(e.to_string()))
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}

/// Writes the report to `dest`, or stdout when `None`.
pub fn emit_report(report: &Report, format: Format, dest: Option<&Path>) -> Result<()> {
    let text = report.render(format);
    match dest {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::stats::Tally;

    #[test]
    fn empty_report_is_header_only() {
        assert_eq!(Report::default().to_csv(), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn json_round_trip_is_exact() {
        let tally = Tally {
            trials: 7,
            legit_trials: 5,
            impostor_trials: 2,
            legit_rejects: 1,
            on_path_levels: 10,
            false_branch_events: 1,
            legit_attempts: 6,
            ..Default::default()
        };
        let rep = Report::from_stats(&AggregateStats::from_tally("x", tally, None));
        assert_eq!(Report::from_json(&rep.to_json()).unwrap(), rep);
        assert_eq!(rep.to_csv().lines().count(), rep.rows.len() + 1);
    }

    #[test]
    fn emits_to_file() {
        let dir = std::env::temp_dir().join(format!("hbtree-report-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("r.csv");
        let mut rep = Report::default();
        rep.push_point("a", "m", 0.1, 3);
        emit_report(&rep, Format::Csv, Some(&path)).unwrap();
        assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            "config_id,metric,estimate,ci_lo,ci_hi,trials\na,m,0.1,0.1,0.1,3\n"
        );
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn bad_destination_is_io_error() {
        let err = emit_report(
            &Report::default(),
            Format::Json,
            Some(Path::new("/nonexistent/dir/x")),
        );
        assert!(matches!(err, Err(Error::Io(_))));
    }
}
