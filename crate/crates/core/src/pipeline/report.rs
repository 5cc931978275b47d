//! Per-class recognition tallies and their text/CSV rendering.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// `round(100 * recognized / tested)` with halves rounded away from zero,
/// computed in integers.
pub fn recognition_rate(tested: usize, recognized: usize) -> Result<u32> {
    if tested == 0 {
        return Err(Error::InvalidArgument("no tested images".into()));
    }
    if recognized > tested {
        return Err(Error::InvalidArgument(format!(
            "recognized {recognized} exceeds tested {tested}"
        )));
    }
    let (t, r) = (tested as u128, recognized as u128);
    Ok(((200 * r + t) / (2 * t)) as u32)
}

fn round_half_away(x: f64) -> u32 {
    x.round() as u32
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassResult {
    pub class_id: u32,
    pub name: Option<String>,
    pub tested: usize,
    pub recognized: usize,
    pub rate_percent: u32,
}

impl ClassResult {
    pub fn label(&self) -> String {
        match &self.name {
            Some(n) => format!("Class {} ({n})", self.class_id),
            None => format!("Class {}", self.class_id),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecognitionReport {
    pub classes: Vec<ClassResult>,
    /// Unweighted mean of the exact per-class rates, in percent.
    pub mean_class_rate: f64,
    /// Total recognized over total tested, in percent.
    pub pooled_rate: f64,
}

impl RecognitionReport {
    /// Builds a report from `(class_id, name, tested, recognized)` tallies.
    pub fn from_counts(counts: Vec<(u32, Option<String>, usize, usize)>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::InvalidArgument("report has no tested classes".into()));
        }
        let classes = counts
            .into_iter()
            .map(|(class_id, name, tested, recognized)| {
                Ok(ClassResult {
                    class_id,
                    name,
                    tested,
                    recognized,
                    rate_percent: recognition_rate(tested, recognized)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mean_class_rate = classes
            .iter()
            .map(|c| 100.0 * c.recognized as f64 / c.tested as f64)
            .sum::<f64>()
            / classes.len() as f64;
        let tested: usize = classes.iter().map(|c| c.tested).sum();
        let recognized: usize = classes.iter().map(|c| c.recognized).sum();
        Ok(RecognitionReport {
            classes,
            mean_class_rate,
            pooled_rate: 100.0 * recognized as f64 / tested as f64,
        })
    }

    pub fn total_tested(&self) -> usize {
        self.classes.iter().map(|c| c.tested).sum()
    }

    pub fn total_recognized(&self) -> usize {
        self.classes.iter().map(|c| c.recognized).sum()
    }

    /// Headline average: the unweighted class mean as an integer percent.
    pub fn average_percent(&self) -> u32 {
        round_half_away(self.mean_class_rate)
    }

    pub fn render(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Text => self.render_text(),
            ReportFormat::Csv => self.render_csv(),
        }
    }

    pub fn render_text(&self) -> String {
        let rows: Vec<(String, usize, usize, u32)> = self
            .classes
            .iter()
            .map(|c| (c.label(), c.tested, c.recognized, c.rate_percent))
            .chain(std::iter::once((
                "Average".to_string(),
                self.total_tested(),
                self.total_recognized(),
                self.average_percent(),
            )))
            .collect();
        let label_w = rows.iter().map(|r| r.0.len()).max().unwrap_or(0).max("Class".len());
        let mut s = String::new();
        let _ = writeln!(s, "{:<label_w$}  {:>6}  {:>10}  {:>4}", "Class", "Tested", "Recognized", "Rate");
        for (label, tested, recognized, rate) in &rows {
            let _ = writeln!(s, "{label:<label_w$}  {tested:>6}  {recognized:>10}  {:>4}", format!("{rate}%"));
        }
        let _ = writeln!(
            s,
            "Pooled recognition rate: {:.2}% ({}/{})",
            self.pooled_rate,
            self.total_recognized(),
            self.total_tested()
        );
        s
    }

    pub fn render_csv(&self) -> String {
        let mut s = String::from("class,tested,recognized,rate_percent\n");
        for c in &self.classes {
            let _ = writeln!(s, "{},{},{},{}", c.class_id, c.tested, c.recognized, c.rate_percent);
        }
        let _ = writeln!(
            s,
            "average,{},{},{}",
            self.total_tested(),
            self.total_recognized(),
            self.average_percent()
        );
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(ReportFormat::Text),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::InvalidArgument(format!("unknown report format {other:?}"))),
        }
    }
}

pub fn emit_report(report: &RecognitionReport, format: ReportFormat, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, report.render(format)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_examples() {
        assert_eq!(recognition_rate(20, 17).unwrap(), 85);
        assert_eq!(recognition_rate(33, 33).unwrap(), 100);
        assert_eq!(recognition_rate(33, 32).unwrap(), 97);
        assert_eq!(recognition_rate(11, 8).unwrap(), 73);
        assert_eq!(recognition_rate(7, 0).unwrap(), 0);
        // exact halves round up
        assert_eq!(recognition_rate(8, 1).unwrap(), 13);
        assert_eq!(recognition_rate(200, 1).unwrap(), 1);
        assert!(recognition_rate(0, 0).is_err());
        assert!(recognition_rate(3, 4).is_err());
    }

    #[test]
    fn table_one_style_rows() {
        let r = RecognitionReport::from_counts(vec![
            (1, None, 33, 32),
            (2, None, 33, 30),
            (3, None, 22, 20),
        ])
        .unwrap();
        let rates: Vec<u32> = r.classes.iter().map(|c| c.rate_percent).collect();
        assert_eq!(rates, vec![97, 91, 91]);
        assert!((r.pooled_rate - 100.0 * 82.0 / 88.0).abs() < 1e-12);
    }

    #[test]
    fn csv_layout() {
        let r = RecognitionReport::from_counts(vec![(0, None, 10, 10), (1, Some("b".into()), 11, 10)]).unwrap();
        let csv = r.render_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], "class,tested,recognized,rate_percent");
        assert_eq!(lines[1], "0,10,10,100");
        assert_eq!(lines[2], "1,11,10,91");
        assert_eq!(lines[3], "average,21,20,95");
    }

    #[test]
    fn text_layout() {
        let r = RecognitionReport::from_counts(vec![(0, None, 4, 4), (1, Some("bob".into()), 4, 3)]).unwrap();
        let text = r.render_text();
        assert!(text.starts_with("Class"));
        assert!(text.contains("Class 1 (bob)"));
        assert!(text.contains(" 75%"));
        assert!(text.lines().any(|l| l.starts_with("Average") && l.ends_with("88%")));
    }

    #[test]
    fn all_correct_and_empty() {
        let r = RecognitionReport::from_counts(vec![(0, None, 5, 5), (1, None, 3, 3)]).unwrap();
        assert_eq!(r.average_percent(), 100);
        assert!(RecognitionReport::from_counts(vec![]).is_err());
    }

    #[test]
    fn emit_to_file() {
        let dir = tempfile::tempdir().unwrap();
        let r = RecognitionReport::from_counts(vec![(0, None, 2, 1)]).unwrap();
        emit_report(&r, ReportFormat::Csv, dir.path().join("r.csv")).unwrap();
        let back = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
        assert_eq!(back, r.render_csv());
        assert!(emit_report(&r, ReportFormat::Text, dir.path().join("x/y.txt")).is_err());
    }
}
