use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};

use super::spearman::{spearman, Correlation};
use super::AnalysisError;

/// Aggregates whose mean Δsup is at least this are flagged as strong transfer.
pub const DEFAULT_STRONG_THRESHOLD: f64 = -2.0;

/// Raw scores for one (task, language, transformation, setting) cell.
///
/// `bz`: zero-shot transfer to the derived language. `bs`: supervised
/// training on the derived language. `mz`: zero-shot from the original-only
/// model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub task: String,
    pub language: String,
    pub transform: String,
    #[serde(default)]
    pub setting: String,
    pub bz: Option<f64>,
    pub bs: Option<f64>,
    pub mz: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub record: ScoreRecord,
    pub dsup: f64,
    pub dmono: Option<f64>,
}

/// Unweighted mean over the languages of one (task, transform, setting).
#[derive(Clone, Debug, PartialEq)]
pub struct Aggregate {
    pub task: String,
    pub transform: String,
    pub setting: String,
    pub languages: usize,
    pub bz: f64,
    pub bs: f64,
    /// Present only when every row had it.
    pub mz: Option<f64>,
    pub dsup: f64,
    pub dmono: Option<f64>,
    pub strong: bool,
}

impl Aggregate {
    /// What alignment tables call this cell: the setting, or the
    /// transformation when no setting is given.
    pub fn key(&self) -> &str {
        if self.setting.is_empty() {
            &self.transform
        } else {
            &self.setting
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransferReport {
    pub rows: Vec<ReportRow>,
    /// In order of first appearance.
    pub aggregates: Vec<Aggregate>,
    pub threshold: f64,
}

impl TransferReport {
    pub fn tasks(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for a in &self.aggregates {
            if !out.contains(&a.task.as_str()) {
                out.push(&a.task);
            }
        }
        out
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    sum / n as f64
}

fn mean_opt(xs: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let all: Option<Vec<f64>> = xs.collect();
    all.map(|v| mean(v.into_iter()))
}

/// Δsup = BZ − BS and Δmono = MZ − BS per row, then per-cell means.
pub fn build_report(records: &[ScoreRecord], threshold: f64) -> Result<TransferReport, AnalysisError> {
    let mut rows = Vec::with_capacity(records.len());
    for (i, r) in records.iter().enumerate() {
        let need = |v: Option<f64>, operand: &'static str| {
            v.filter(|x| x.is_finite()).ok_or_else(|| AnalysisError::MissingOperand {
                row: i + 1,
                task: r.task.clone(),
                language: r.language.clone(),
                transform: r.transform.clone(),
                operand,
            })
        };
        let bz = need(r.bz, "bz")?;
        let bs = need(r.bs, "bs")?;
        if r.mz.is_some_and(|m| !m.is_finite()) {
            need(None, "a finite mz")?;
        }
        rows.push(ReportRow {
            record: r.clone(),
            dsup: bz - bs,
            dmono: r.mz.map(|m| m - bs),
        });
    }

    let mut groups: Vec<Vec<&ReportRow>> = Vec::new();
    let mut slot: HashMap<(&str, &str, &str), usize> = HashMap::new();
    for row in &rows {
        let r = &row.record;
        let key = (r.task.as_str(), r.transform.as_str(), r.setting.as_str());
        let idx = *slot.entry(key).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[idx].push(row);
    }
    let aggregates = groups
        .into_iter()
        .map(|g| {
            let first = &g[0].record;
            let dsup = mean(g.iter().map(|r| r.dsup));
            Aggregate {
                task: first.task.clone(),
                transform: first.transform.clone(),
                setting: first.setting.clone(),
                languages: g.len(),
                bz: mean(g.iter().map(|r| r.record.bz.unwrap())),
                bs: mean(g.iter().map(|r| r.record.bs.unwrap())),
                mz: mean_opt(g.iter().map(|r| r.record.mz)),
                dsup,
                dmono: mean_opt(g.iter().map(|r| r.dmono)),
                strong: dsup >= threshold,
            }
        })
        .collect();
    Ok(TransferReport {
        rows,
        aggregates,
        threshold,
    })
}

/// CSV with header `task,language,transform,setting,bz,bs,mz`. Empty score
/// fields are absent scores.
pub fn read_scores<R: Read>(reader: R) -> Result<Vec<ScoreRecord>, AnalysisError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    for need in ["task", "language", "transform", "bz", "bs", "mz"] {
        if !headers.iter().any(|h| h == need) {
            return Err(AnalysisError::Malformed {
                line: 1,
                reason: format!("missing column {need:?}"),
            });
        }
    }
    rdr.deserialize().map(|r| r.map_err(csv_error)).collect()
}

fn csv_error(e: csv::Error) -> AnalysisError {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => AnalysisError::Io(io),
        kind => AnalysisError::Malformed {
            line,
            reason: format!("{kind:?}"),
        },
    }
}

fn num(v: f64) -> String {
    v.to_string()
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn write_rows_csv<W: Write>(report: &TransferReport, w: W) -> Result<(), AnalysisError> {
    let mut out = csv::Writer::from_writer(w);
    let res: csv::Result<()> = (|| {
        out.write_record(["task", "language", "transform", "setting", "bz", "bs", "mz", "dsup", "dmono"])?;
        for row in &report.rows {
            let r = &row.record;
            out.write_record([
                r.task.clone(),
                r.language.clone(),
                r.transform.clone(),
                r.setting.clone(),
                opt(r.bz),
                opt(r.bs),
                opt(r.mz),
                num(row.dsup),
                opt(row.dmono),
            ])?;
        }
        out.flush()?;
        Ok(())
    })();
    res.map_err(csv_error)
}

pub fn write_summary_csv<W: Write>(report: &TransferReport, w: W) -> Result<(), AnalysisError> {
    let mut out = csv::Writer::from_writer(w);
    let res: csv::Result<()> = (|| {
        out.write_record([
            "task", "transform", "setting", "languages", "bz", "bs", "mz", "dsup", "dmono", "strong",
        ])?;
        for a in &report.aggregates {
            out.write_record([
                a.task.clone(),
                a.transform.clone(),
                a.setting.clone(),
                a.languages.to_string(),
                num(a.bz),
                num(a.bs),
                opt(a.mz),
                num(a.dsup),
                opt(a.dmono),
                a.strong.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    })();
    res.map_err(csv_error)
}

/// One decimal, with negative zero printed as `0.0`.
fn cell(v: f64) -> String {
    let s = format!("{v:.1}");
    if s == "-0.0" {
        "0.0".into()
    } else {
        s
    }
}

/// One row per transformation (or setting), three columns per task:
/// Δsup, Δmono, BZ. Strong-transfer Δsup cells carry a `*`.
pub fn write_markdown<W: Write>(report: &TransferReport, mut w: W) -> std::io::Result<()> {
    let tasks = report.tasks();
    let mut labels: Vec<&str> = Vec::new();
    let mut cells: HashMap<(&str, &str), &Aggregate> = HashMap::new();
    for a in &report.aggregates {
        if !labels.contains(&a.key()) {
            labels.push(a.key());
        }
        cells.insert((a.key(), a.task.as_str()), a);
    }

    let mut header = String::from("| Transformation |");
    let mut rule = String::from("|---|");
    for t in &tasks {
        header.push_str(&format!(" {t} Δsup | {t} Δmono | {t} BZ |"));
        rule.push_str("---:|---:|---:|");
    }
    writeln!(w, "{header}")?;
    writeln!(w, "{rule}")?;
    for label in labels {
        let mut line = format!("| {label} |");
        for t in &tasks {
            match cells.get(&(label, *t)) {
                Some(a) => {
                    let star = if a.strong { "*" } else { "" };
                    let dmono = a.dmono.map(cell).unwrap_or_else(|| "–".into());
                    line.push_str(&format!(" {}{star} | {dmono} | {} |", cell(a.dsup), cell(a.bz)));
                }
                None => line.push_str(" – | – | – |"),
            }
        }
        writeln!(w, "{line}")?;
    }
    w.flush()
}

/// `setting<TAB>alignment` per line; a first line whose value is not a
/// number is taken as a header.
pub fn read_alignments<R: BufRead>(reader: R) -> Result<Vec<(String, f64)>, AnalysisError> {
    let mut out: Vec<(String, f64)> = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let malformed = |reason: String| AnalysisError::Malformed { line: i + 1, reason };
        let (setting, value) = line
            .split_once('\t')
            .ok_or_else(|| malformed("expected setting<TAB>alignment".into()))?;
        let value = match value.trim().parse::<f64>() {
            Ok(v) if v.is_finite() => v,
            Err(_) if i == 0 => continue,
            _ => return Err(malformed(format!("invalid alignment {value:?}"))),
        };
        let setting = setting.trim().to_owned();
        if out.iter().any(|(s, _)| *s == setting) {
            return Err(malformed(format!("duplicate setting {setting:?}")));
        }
        out.push((setting, value));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TaskCorrelation {
    pub task: String,
    pub correlation: Correlation,
    /// (setting, alignment, Δsup), in report order.
    pub points: Vec<(String, f64, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Correlated {
    pub tasks: Vec<TaskCorrelation>,
    /// Tasks sharing fewer than three settings with the alignment table.
    pub skipped: Vec<String>,
}

/// Per task, Spearman correlation between alignment and mean Δsup over the
/// settings present in both.
pub fn correlate_report(report: &TransferReport, alignments: &[(String, f64)]) -> Result<Correlated, AnalysisError> {
    let lookup: BTreeMap<&str, f64> = alignments.iter().map(|(s, v)| (s.as_str(), *v)).collect();
    let mut tasks = Vec::new();
    let mut skipped = Vec::new();
    for task in report.tasks() {
        let mut points: Vec<(String, f64, f64)> = Vec::new();
        for a in report.aggregates.iter().filter(|a| a.task == task) {
            let Some(&al) = lookup.get(a.key()) else { continue };
            if points.iter().any(|(s, _, _)| s == a.key()) {
                return Err(AnalysisError::AmbiguousSetting {
                    task: task.to_owned(),
                    setting: a.key().to_owned(),
                });
            }
            points.push((a.key().to_owned(), al, a.dsup));
        }
        if points.len() < 3 {
            skipped.push(task.to_owned());
            continue;
        }
        let x: Vec<f64> = points.iter().map(|p| p.1).collect();
        let y: Vec<f64> = points.iter().map(|p| p.2).collect();
        tasks.push(TaskCorrelation {
            task: task.to_owned(),
            correlation: spearman(&x, &y)?,
            points,
        });
    }
    if tasks.is_empty() {
        return Err(AnalysisError::InsufficientOverlap);
    }
    Ok(Correlated { tasks, skipped })
}

/// `setting<TAB>alignment<TAB>dsup` for one task, with a header line.
pub fn write_scatter<W: Write>(task: &TaskCorrelation, mut w: W) -> std::io::Result<()> {
    writeln!(w, "setting\talignment\tdsup")?;
    for (s, a, d) in &task.points {
        writeln!(w, "{s}\t{a}\t{d}")?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(task: &str, lang: &str, transform: &str, bz: f64, bs: f64, mz: Option<f64>) -> ScoreRecord {
        ScoreRecord {
            task: task.into(),
            language: lang.into(),
            transform: transform.into(),
            setting: String::new(),
            bz: Some(bz),
            bs: Some(bs),
            mz,
        }
    }

    #[test]
    fn single_row_deltas() {
        let r = build_report(&[rec("xnli", "en", "translit", 69.3, 70.3, Some(33.6))], -2.0).unwrap();
        assert!((r.rows[0].dsup - -1.0).abs() < 1e-12);
        assert!((r.rows[0].dmono.unwrap() - -36.7).abs() < 1e-12);
        assert!(r.aggregates[0].strong);
    }

    #[test]
    fn equal_scores_give_zero() {
        let r = build_report(&[rec("ner", "fr", "inv", 1e6, 1e6, None)], -2.0).unwrap();
        assert_eq!(r.rows[0].dsup, 0.0);
        assert_eq!(r.rows[0].dmono, None);
    }

    #[test]
    fn mean_over_languages() {
        let recs: Vec<_> = [("en", -3.4), ("fr", -9.5), ("hi", -15.7), ("ar", -12.3)]
            .iter()
            .map(|(l, d)| rec("xnli", l, "inv", 50.0 + d, 50.0, None))
            .collect();
        let r = build_report(&recs, -2.0).unwrap();
        assert_eq!(r.aggregates.len(), 1);
        assert_eq!(r.aggregates[0].languages, 4);
        assert!((r.aggregates[0].dsup - -10.225).abs() < 1e-9);
        assert!(!r.aggregates[0].strong);
    }

    #[test]
    fn missing_operand_names_row() {
        let mut r = rec("pos", "hi", "perm", 1.0, 2.0, None);
        r.bs = None;
        match build_report(&[r], -2.0) {
            Err(AnalysisError::MissingOperand { row: 1, operand: "bs", .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn csv_round_trip() {
        let text = "task,language,transform,setting,bz,bs,mz\nxnli,en,translit,,69.3,70.3,33.6\nner,fr,inv,x, 1.5 ,2,\n";
        let recs = read_scores(text.as_bytes()).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[1].mz, None);
        assert_eq!(recs[1].bz, Some(1.5));
        assert_eq!(recs[1].setting, "x");
        assert!(read_scores("task,language\nx,y\n".as_bytes()).is_err());
        assert!(read_scores("task,language,transform,setting,bz,bs,mz\nx,y,z,,abc,1,1\n".as_bytes()).is_err());
    }

    #[test]
    fn markdown_layout() {
        let recs = vec![
            rec("XNLI", "en", "Inversion", 58.4, 68.6, Some(55.6)),
            rec("XNLI", "en", "Transliteration", 69.3, 70.3, Some(33.6)),
            rec("NER", "en", "Transliteration", 83.7, 85.6, None),
        ];
        let mut buf = Vec::new();
        write_markdown(&build_report(&recs, -2.0).unwrap(), &mut buf).unwrap();
        let md = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = md.lines().collect();
        assert_eq!(lines[0], "| Transformation | XNLI Δsup | XNLI Δmono | XNLI BZ | NER Δsup | NER Δmono | NER BZ |");
        assert_eq!(lines[2], "| Inversion | -10.2 | -13.0 | 58.4 | – | – | – |");
        assert_eq!(lines[3], "| Transliteration | -1.0* | -36.7 | 69.3 | -1.9* | – | 83.7 |");
    }

    #[test]
    fn negative_zero_prints_plainly() {
        assert_eq!(cell(-0.04), "0.0");
        assert_eq!(cell(-0.05001), "-0.1");
    }

    #[test]
    fn alignments_file() {
        let a = read_alignments("setting\talignment\npar\t90.0\nnp\t43\n".as_bytes()).unwrap();
        assert_eq!(a, [("par".to_string(), 90.0), ("np".to_string(), 43.0)]);
        assert!(read_alignments("a\t1\na\t2\n".as_bytes()).is_err());
        assert!(read_alignments("a\t1\nb\tx\n".as_bytes()).is_err());
    }

    fn settings_report(task: &str, pts: &[(&str, f64)]) -> Vec<ScoreRecord> {
        pts.iter()
            .map(|(s, d)| ScoreRecord {
                setting: (*s).into(),
                ..rec(task, "en", "syn", 50.0 + d, 50.0, None)
            })
            .collect()
    }

    #[test]
    fn correlation_and_overlap() {
        let mut recs = settings_report("xnli", &[("a", -1.0), ("b", -5.0), ("c", -20.0)]);
        recs.extend(settings_report("ner", &[("a", -1.0), ("z", -2.0)]));
        let report = build_report(&recs, -2.0).unwrap();
        let al = vec![("a".into(), 0.9), ("b".into(), 0.5), ("c".into(), 0.1)];
        let c = correlate_report(&report, &al).unwrap();
        assert_eq!(c.tasks.len(), 1);
        assert!((c.tasks[0].correlation.rho - 1.0).abs() < 1e-12);
        assert_eq!(c.skipped, ["ner"]);

        let mut buf = Vec::new();
        write_scatter(&c.tasks[0], &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("setting\talignment\tdsup\na\t0.9\t-1\n"));

        let one = vec![("a".into(), 0.9)];
        assert!(matches!(correlate_report(&report, &one), Err(AnalysisError::InsufficientOverlap)));
    }

    #[test]
    fn same_setting_under_two_transforms_is_ambiguous() {
        let mut recs = settings_report("xnli", &[("a", -1.0), ("b", -5.0), ("c", -20.0)]);
        recs.push(ScoreRecord {
            setting: "a".into(),
            ..rec("xnli", "en", "inv", 1.0, 2.0, None)
        });
        let report = build_report(&recs, -2.0).unwrap();
        let al = vec![("a".into(), 0.9), ("b".into(), 0.5), ("c".into(), 0.1)];
        assert!(matches!(
            correlate_report(&report, &al),
            Err(AnalysisError::AmbiguousSetting { .. })
        ));
    }

    proptest! {
        #[test]
        fn reconstruction_is_identity(bz in -100.0f64..100.0, dsup in -100.0f64..100.0) {
            let bs = bz - dsup;
            let r = build_report(&[rec("t", "l", "x", bz, bs, None)], -2.0).unwrap();
            prop_assert!((r.rows[0].dsup - dsup).abs() <= 1e-12);
        }
    }
}
