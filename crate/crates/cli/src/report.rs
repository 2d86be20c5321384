//! Versioned CSV reports.
//!
//! A sweep report starts with `# frameprobe-report v1 metric=<name>`,
//! followed by the header `kind,layer,learning_rate,head,dev_metric,
//! test_metric,best`, one `cell` row per trained (layer, learning rate)
//! and one `baseline` row whose `test_metric` holds the random baseline.
//!
//! An ablation report starts with `# frameprobe-ablation v1 metric=<name>
//! transform=<noise|pitch> layer=<n> head=<head>`, followed by
//! `kind,level,learning_rate,dev_metric,test_metric` with `level` rows and
//! a `baseline` row.
//!
//! Floats are written in Rust's shortest round-trip form, so parsing a
//! report gives back exactly the values that were written.

use std::path::Path;

use frameprobe::{Error, HeadKind, Result, SweepResult};

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricName {
    Accuracy,
    MeanAveragePrecision,
}

impl MetricName {
    pub fn as_str(self) -> &'static str {
        match self {
            MetricName::Accuracy => "accuracy",
            MetricName::MeanAveragePrecision => "mAP",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "accuracy" => Ok(MetricName::Accuracy),
            "mAP" => Ok(MetricName::MeanAveragePrecision),
            other => Err(Error::Format(format!("unknown metric {other:?}"))),
        }
    }

    pub fn for_task(kind: frameprobe::TaskKind) -> Self {
        match kind {
            frameprobe::TaskKind::SingleLabelClassification => MetricName::Accuracy,
            frameprobe::TaskKind::MultiLabelDetection => MetricName::MeanAveragePrecision,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportTable {
    pub metric: MetricName,
    pub rows: Vec<SweepResult>,
    /// Index into `rows` of the selected best cell.
    pub best: usize,
    pub baseline: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AblationRow {
    pub level: f64,
    pub learning_rate: f64,
    pub dev_metric: f64,
    pub test_metric: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    Noise,
    Pitch,
}

impl Transform {
    pub fn as_str(self) -> &'static str {
        match self {
            Transform::Noise => "noise",
            Transform::Pitch => "pitch",
        }
    }
}

impl std::str::FromStr for Transform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "noise" => Ok(Transform::Noise),
            "pitch" => Ok(Transform::Pitch),
            other => Err(Error::InvalidArgument(format!("unknown transform {other:?} (noise or pitch)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationTable {
    pub metric: MetricName,
    pub transform: Transform,
    pub layer: u32,
    pub head: HeadKind,
    pub rows: Vec<AblationRow>,
    pub baseline: f64,
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn parse_num(s: &str, what: &str) -> Result<f64> {
    s.parse()
        .map_err(|_| Error::Format(format!("bad {what} value {s:?}")))
}

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(format!("report CSV: {e}"))
}

fn finish(preamble: String, w: csv::Writer<Vec<u8>>) -> Result<String> {
    let body = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    Ok(preamble + &String::from_utf8(body).expect("ascii CSV"))
}

/// `(first line, remaining lines)`.
fn split_preamble(text: &str) -> Result<(&str, &str)> {
    text.split_once('\n')
        .ok_or_else(|| Error::Format("report is empty".into()))
}

/// Parses `key=value` pairs after the fixed leading words.
fn preamble_fields<'a>(line: &'a str, tag: &str) -> Result<Vec<(&'a str, &'a str)>> {
    let mut words = line.split_whitespace();
    if words.next() != Some("#") || words.next() != Some(tag) {
        return Err(Error::Format(format!("not a {tag} file")));
    }
    let version = words.next().unwrap_or("");
    if version != format!("v{REPORT_VERSION}") {
        return Err(Error::Version {
            found: version.trim_start_matches('v').parse().unwrap_or(0),
            expected: REPORT_VERSION,
        });
    }
    words
        .map(|w| w.split_once('=').ok_or_else(|| Error::Format(format!("bad preamble field {w:?}"))))
        .collect()
}

fn field<'a>(fields: &[(&str, &'a str)], key: &str) -> Result<&'a str> {
    fields
        .iter()
        .find(|(k, _)| *k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| Error::Format(format!("preamble lacks {key}")))
}

fn reader(body: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new().from_reader(body.as_bytes())
}

impl ReportTable {
    pub fn best_row(&self) -> &SweepResult {
        &self.rows[self.best]
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = writer();
        w.write_record(["kind", "layer", "learning_rate", "head", "dev_metric", "test_metric", "best"])
            .map_err(csv_err)?;
        for (i, r) in self.rows.iter().enumerate() {
            w.write_record([
                "cell".to_string(),
                r.layer.to_string(),
                num(r.learning_rate),
                r.head.to_string(),
                num(r.dev_metric),
                num(r.test_metric),
                u8::from(i == self.best).to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.write_record(["baseline", "", "", "", "", &num(self.baseline), "0"])
            .map_err(csv_err)?;
        finish(
            format!("# frameprobe-report v{REPORT_VERSION} metric={}\n", self.metric.as_str()),
            w,
        )
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let (first, body) = split_preamble(text)?;
        let fields = preamble_fields(first, "frameprobe-report")?;
        let metric = MetricName::parse(field(&fields, "metric")?)?;
        let mut rows = Vec::new();
        let mut best = Vec::new();
        let mut baseline = None;
        let mut rdr = reader(body);
        let header = rdr.headers().map_err(csv_err)?.clone();
        if header.iter().collect::<Vec<_>>() != ["kind", "layer", "learning_rate", "head", "dev_metric", "test_metric", "best"] {
            return Err(Error::Format("unexpected report columns".into()));
        }
        for rec in rdr.records() {
            let rec = rec.map_err(csv_err)?;
            match &rec[0] {
                "cell" => {
                    if &rec[6] == "1" {
                        best.push(rows.len());
                    }
                    rows.push(SweepResult {
                        layer: rec[1].parse().map_err(|_| Error::Format(format!("bad layer {:?}", &rec[1])))?,
                        learning_rate: parse_num(&rec[2], "learning_rate")?,
                        head: rec[3].parse()?,
                        dev_metric: parse_num(&rec[4], "dev_metric")?,
                        test_metric: parse_num(&rec[5], "test_metric")?,
                    });
                }
                "baseline" if baseline.is_none() => baseline = Some(parse_num(&rec[5], "baseline")?),
                other => return Err(Error::Format(format!("unexpected row kind {other:?}"))),
            }
        }
        if best.len() != 1 {
            return Err(Error::Format(format!("report flags {} best rows, expected exactly 1", best.len())));
        }
        Ok(Self {
            metric,
            rows,
            best: best[0],
            baseline: baseline.ok_or_else(|| Error::Format("report lacks a baseline row".into()))?,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()?).map_err(|e| Error::io_at(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path).map_err(|e| Error::io_at(path, e))?)
    }
}

impl AblationTable {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = writer();
        w.write_record(["kind", "level", "learning_rate", "dev_metric", "test_metric"])
            .map_err(csv_err)?;
        for r in &self.rows {
            w.write_record([
                "level".to_string(),
                num(r.level),
                num(r.learning_rate),
                num(r.dev_metric),
                num(r.test_metric),
            ])
            .map_err(csv_err)?;
        }
        w.write_record(["baseline", "", "", "", &num(self.baseline)])
            .map_err(csv_err)?;
        finish(
            format!(
                "# frameprobe-ablation v{REPORT_VERSION} metric={} transform={} layer={} head={}\n",
                self.metric.as_str(),
                self.transform.as_str(),
                self.layer,
                self.head
            ),
            w,
        )
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let (first, body) = split_preamble(text)?;
        let fields = preamble_fields(first, "frameprobe-ablation")?;
        let metric = MetricName::parse(field(&fields, "metric")?)?;
        let transform = field(&fields, "transform")?.parse()?;
        let layer = field(&fields, "layer")?
            .parse()
            .map_err(|_| Error::Format("bad layer in preamble".into()))?;
        let head = field(&fields, "head")?.parse()?;
        let mut rows = Vec::new();
        let mut baseline = None;
        let mut rdr = reader(body);
        for rec in rdr.records() {
            let rec = rec.map_err(csv_err)?;
            match &rec[0] {
                "level" => rows.push(AblationRow {
                    level: parse_num(&rec[1], "level")?,
                    learning_rate: parse_num(&rec[2], "learning_rate")?,
                    dev_metric: parse_num(&rec[3], "dev_metric")?,
                    test_metric: parse_num(&rec[4], "test_metric")?,
                }),
                "baseline" if baseline.is_none() => baseline = Some(parse_num(&rec[4], "baseline")?),
                other => return Err(Error::Format(format!("unexpected row kind {other:?}"))),
            }
        }
        Ok(Self {
            metric,
            transform,
            layer,
            head,
            rows,
            baseline: baseline.ok_or_else(|| Error::Format("report lacks a baseline row".into()))?,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()?).map_err(|e| Error::io_at(path, e))
    }
}

/// Either kind of report, recognised by its first line.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyReport {
    Sweep(ReportTable),
    Ablation(AblationTable),
}

impl AnyReport {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io_at(path, e))?;
        if text.starts_with("# frameprobe-ablation") {
            Ok(AnyReport::Ablation(AblationTable::from_csv(&text)?))
        } else {
            Ok(AnyReport::Sweep(ReportTable::from_csv(&text)?))
        }
    }
}
