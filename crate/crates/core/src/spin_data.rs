//! Spin streams: parsing, canonical serialization and chronological splits.
//!
//! Two on-disk formats are accepted:
//!
//! * plain: one base-10 pocket number per line (LF or CRLF, trailing newline optional);
//! * csv: header `index,pocket`, one row per spin. The index column is
//!   informational and ignored on read; it is written as `0, 1, 2, ...`.

use std::fmt::Write as _;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, POCKETS};

/// A pocket number on a European wheel, `0..=36`.
pub type Pocket = u8;

const MAX_POCKET: i64 = POCKETS as i64 - 1;

/// A chronological sequence of spin outcomes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpinSeries {
    outcomes: Vec<Pocket>,
    label: String,
}

impl SpinSeries {
    /// Builds a series, rejecting any outcome above 36.
    pub fn new(outcomes: Vec<Pocket>, label: impl Into<String>) -> Result<Self> {
        if let Some((i, &v)) = outcomes
            .iter()
            .enumerate()
            .find(|(_, &v)| v as usize >= POCKETS)
        {
            return Err(Error::Range {
                line: i + 1,
                value: i64::from(v),
            });
        }
        Ok(Self {
            outcomes,
            label: label.into(),
        })
    }

    pub(crate) fn from_valid(outcomes: Vec<Pocket>, label: impl Into<String>) -> Self {
        debug_assert!(outcomes.iter().all(|&p| (p as usize) < POCKETS));
        Self {
            outcomes,
            label: label.into(),
        }
    }

    pub fn outcomes(&self) -> &[Pocket] {
        &self.outcomes
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Contiguous sub-series `[start, end)`.
    pub fn slice(&self, start: usize, end: usize, label: impl Into<String>) -> Self {
        Self {
            outcomes: self.outcomes[start..end].to_vec(),
            label: label.into(),
        }
    }

    /// Appends another series in place, keeping this series' label.
    pub fn extend_from(&mut self, other: &SpinSeries) {
        self.outcomes.extend_from_slice(&other.outcomes);
    }

    pub fn to_plain(&self) -> String {
        let mut out = String::with_capacity(self.outcomes.len() * 3);
        for p in &self.outcomes {
            let _ = writeln!(out, "{p}");
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.outcomes.len() * 8 + 13);
        out.push_str("index,pocket\n");
        for (i, p) in self.outcomes.iter().enumerate() {
            let _ = writeln!(out, "{i},{p}");
        }
        out
    }

    pub fn serialize(&self, format: SpinFormat) -> String {
        match format {
            SpinFormat::Plain => self.to_plain(),
            SpinFormat::Csv => self.to_csv(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpinFormat {
    Plain,
    Csv,
}

impl SpinFormat {
    /// Guesses the format from the first non-blank line: a line that is not a
    /// bare integer is taken to be a CSV header.
    pub fn detect(raw: &str) -> Self {
        match raw.lines().map(str::trim).find(|l| !l.is_empty()) {
            Some(first) if first.contains(',') || first.parse::<i64>().is_err() => {
                SpinFormat::Csv
            }
            _ => SpinFormat::Plain,
        }
    }
}

impl FromStr for SpinFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "plain" | "txt" => Ok(SpinFormat::Plain),
            "csv" => Ok(SpinFormat::Csv),
            other => Err(format!("unknown spin format {other:?} (expected plain or csv)")),
        }
    }
}

fn parse_pocket(token: &str, line: usize) -> Result<Pocket> {
    let value: i64 = token.parse().map_err(|_| Error::Parse {
        line,
        token: token.to_string(),
    })?;
    if !(0..=MAX_POCKET).contains(&value) {
        return Err(Error::Range { line, value });
    }
    Ok(value as Pocket)
}

/// Parses a spin stream held in memory.
pub fn parse_spins(raw: &str, format: SpinFormat) -> Result<SpinSeries> {
    let outcomes = match format {
        SpinFormat::Plain => parse_plain(raw)?,
        SpinFormat::Csv => parse_csv(raw)?,
    };
    if outcomes.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(SpinSeries::from_valid(outcomes, ""))
}

/// Reads and parses a spin stream. `None` auto-detects the format.
pub fn read_spins<R: Read>(mut reader: R, format: Option<SpinFormat>) -> Result<SpinSeries> {
    let mut bytes = Vec::new();
    reader
        .read_to_end(&mut bytes)
        .map_err(|e| Error::Decode(e.to_string()))?;
    let raw = String::from_utf8(bytes).map_err(|e| Error::Decode(e.to_string()))?;
    let format = format.unwrap_or_else(|| SpinFormat::detect(&raw));
    parse_spins(&raw, format)
}

fn parse_plain(raw: &str) -> Result<Vec<Pocket>> {
    raw.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
        .map(|(line, token)| parse_pocket(token, line))
        .collect()
}

fn parse_csv(raw: &str) -> Result<Vec<Pocket>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(raw.as_bytes());

    let headers = reader.headers().map_err(|e| Error::Parse {
        line: 1,
        token: e.to_string(),
    })?;
    let column = headers
        .iter()
        .position(|h| h.eq_ignore_ascii_case("pocket"))
        .ok_or_else(|| Error::Parse {
            line: 1,
            token: headers.iter().collect::<Vec<_>>().join(","),
        })?;

    let mut outcomes = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            token: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let token = record.get(column).ok_or_else(|| Error::Parse {
            line,
            token: record.iter().collect::<Vec<_>>().join(","),
        })?;
        outcomes.push(parse_pocket(token, line)?);
    }
    Ok(outcomes)
}

/// An in-sample window followed by chronological out-of-sample segments.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataSplit {
    pub in_sample: SpinSeries,
    pub out_of_sample_segments: Vec<SpinSeries>,
    pub segment_lengths: Vec<usize>,
}

impl DataSplit {
    /// In-sample window size in force when each segment is tested under
    /// anchored walk-forward: the original in-sample length plus every
    /// earlier segment.
    pub fn anchored_window_sizes(&self) -> Vec<usize> {
        self.segment_lengths
            .iter()
            .scan(self.in_sample.len(), |acc, &len| {
                let current = *acc;
                *acc += len;
                Some(current)
            })
            .collect()
    }

    /// Concatenates every piece back into one series.
    pub fn flatten(&self) -> SpinSeries {
        let mut all = self.in_sample.clone();
        for seg in &self.out_of_sample_segments {
            all.extend_from(seg);
        }
        all
    }
}

/// Cuts `series` into an in-sample prefix and contiguous segments.
pub fn split(series: &SpinSeries, in_sample_len: usize, segment_lens: &[usize]) -> Result<DataSplit> {
    if in_sample_len == 0 || segment_lens.contains(&0) {
        return Err(Error::ZeroLengthSegment);
    }
    let expected = in_sample_len + segment_lens.iter().sum::<usize>();
    if expected != series.len() {
        return Err(Error::LengthMismatch {
            expected,
            actual: series.len(),
        });
    }

    let base = series.label();
    let in_sample = series.slice(0, in_sample_len, format!("{base}[in-sample]"));
    let mut start = in_sample_len;
    let out_of_sample_segments = segment_lens
        .iter()
        .enumerate()
        .map(|(k, &len)| {
            let seg = series.slice(start, start + len, format!("{base}[oos-{}]", k + 1));
            start += len;
            seg
        })
        .collect();

    Ok(DataSplit {
        in_sample,
        out_of_sample_segments,
        segment_lengths: segment_lens.to_vec(),
    })
}
