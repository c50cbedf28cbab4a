//! Daily interval-data ingestion.
//!
//! Three layouts are read: wide (one row per user-day with one column per
//! interval), long (one row per reading with a timestamp), and the Ausgrid
//! Solar Home layout (wide rows per consumption category). Days are grouped
//! per user in date order; `day_index` counts days since the user's first date.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{NaiveDate, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DayPattern, DistanceConfig};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MissingPolicy {
    /// Drop any day with missing readings and list it in the report.
    #[default]
    Reject,
    /// Fill interior gaps linearly and edge gaps with the nearest reading.
    Interpolate,
}

/// How Solar Home categories combine into one import series.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NetMode {
    /// `max(GC + CL - GG, 0)`.
    #[default]
    Net,
    /// `GC + CL`, generation ignored.
    LoadOnly,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CsvLayout {
    /// Header: user column, date column, then one column per interval.
    Wide,
    /// One reading per row; the timestamp marks the start of its interval.
    Long {
        timestamp_col: String,
        value_col: String,
    },
    SolarHome {
        mode: NetMode,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DailyCsvSchema {
    pub layout: CsvLayout,
    pub user_col: String,
    pub date_col: String,
    pub interval_minutes: u32,
    pub missing: MissingPolicy,
}

impl Default for DailyCsvSchema {
    fn default() -> Self {
        DailyCsvSchema {
            layout: CsvLayout::Wide,
            user_col: "user".into(),
            date_col: "date".into(),
            interval_minutes: 30,
            missing: MissingPolicy::Reject,
        }
    }
}

impl DailyCsvSchema {
    pub fn long() -> Self {
        DailyCsvSchema {
            layout: CsvLayout::Long {
                timestamp_col: "timestamp".into(),
                value_col: "value".into(),
            },
            ..Default::default()
        }
    }

    pub fn solar_home(mode: NetMode) -> Self {
        DailyCsvSchema {
            layout: CsvLayout::SolarHome { mode },
            user_col: "Customer".into(),
            date_col: "date".into(),
            ..Default::default()
        }
    }

    pub fn readings_per_day(&self) -> Result<usize> {
        let i = self.interval_minutes;
        if i == 0 || 1440 % i != 0 {
            return Err(Error::invalid(format!("interval of {i} minutes does not divide a day")));
        }
        Ok((1440 / i) as usize)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedDay {
    pub user: String,
    pub date: NaiveDate,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Ingested {
    pub users: BTreeMap<String, Vec<DayPattern>>,
    pub rejected: Vec<RejectedDay>,
}

impl Ingested {
    /// Writes the rejected-day report as CSV.
    pub fn write_report(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let to_err = |e: csv::Error| Error::invalid(format!("writing report: {e}"));
        w.write_record(["user", "date", "reason"]).map_err(to_err)?;
        for r in &self.rejected {
            w.write_record([r.user.as_str(), &r.date.to_string(), r.reason.as_str()])
                .map_err(to_err)?;
        }
        w.flush().map_err(|e| Error::invalid(format!("writing report: {e}")))?;
        Ok(())
    }
}

type Slots = Vec<Option<f64>>;

/// Accumulates readings per (user, date) before validation.
struct Days {
    m: usize,
    days: BTreeMap<(String, NaiveDate), Slots>,
    problems: BTreeMap<(String, NaiveDate), String>,
}

impl Days {
    fn new(m: usize) -> Self {
        Days {
            m,
            days: BTreeMap::new(),
            problems: BTreeMap::new(),
        }
    }

    fn slot(&mut self, user: &str, date: NaiveDate, k: usize, v: f64) {
        let key = (user.to_string(), date);
        let day = self.days.entry(key.clone()).or_insert_with(|| vec![None; self.m]);
        if day[k].replace(v).is_some() {
            self.problems
                .entry(key)
                .or_insert_with(|| format!("duplicate reading for interval {k}"));
        }
    }

    fn finish(self, schema: &DailyCsvSchema, prep: &DistanceConfig) -> Result<Ingested> {
        let mut out = Ingested::default();
        let mut first: BTreeMap<String, NaiveDate> = BTreeMap::new();
        for (user, date) in self.days.keys() {
            first.entry(user.clone()).or_insert(*date);
        }
        for ((user, date), slots) in self.days {
            let reject = |reason: String, out: &mut Ingested| {
                out.rejected.push(RejectedDay {
                    user: user.clone(),
                    date,
                    reason,
                })
            };
            if let Some(p) = self.problems.get(&(user.clone(), date)) {
                reject(p.clone(), &mut out);
                continue;
            }
            let present = slots.iter().filter(|s| s.is_some()).count();
            let values = if present == self.m {
                slots.into_iter().flatten().collect()
            } else if schema.missing == MissingPolicy::Interpolate && present > 0 {
                fill_gaps(&slots)
            } else {
                reject(format!("{present} of {} readings", self.m), &mut out);
                continue;
            };
            let index = (date - first[&user]).num_days() as u32;
            match prep.prepare(index, &values) {
                Ok(p) => out.users.entry(user.clone()).or_default().push(p),
                Err(e) => reject(e.to_string(), &mut out),
            }
        }
        Ok(out)
    }
}

fn fill_gaps(slots: &[Option<f64>]) -> Vec<f64> {
    let known: Vec<(usize, f64)> = slots
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|v| (i, v)))
        .collect();
    (0..slots.len())
        .map(|i| {
            if let Some(v) = slots[i] {
                return v;
            }
            let after = known.iter().position(|&(k, _)| k > i);
            match after {
                Some(0) => known[0].1,
                None => known[known.len() - 1].1,
                Some(a) => {
                    let (k0, v0) = known[a - 1];
                    let (k1, v1) = known[a];
                    v0 + (v1 - v0) * (i - k0) as f64 / (k1 - k0) as f64
                }
            }
        })
        .collect()
}

fn parse_date(s: &str) -> Option<NaiveDate> {
    let s = s.trim();
    ["%Y-%m-%d", "%d/%m/%Y", "%d-%b-%y", "%Y/%m/%d"]
        .iter()
        .find_map(|f| NaiveDate::parse_from_str(s, f).ok())
}

fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    [
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%d %H:%M",
        "%Y-%m-%dT%H:%M:%S",
        "%Y-%m-%dT%H:%M",
    ]
    .iter()
    .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
}

struct Source<'a> {
    path: &'a Path,
}

impl Source<'_> {
    fn malformed(&self, line: u64, message: impl Into<String>) -> Error {
        Error::Malformed {
            path: PathBuf::from(self.path),
            line,
            message: message.into(),
        }
    }

    fn column(&self, headers: &csv::StringRecord, name: &str) -> Result<usize> {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| self.malformed(1, format!("missing column {name:?}")))
    }

    fn value(&self, line: u64, cell: &str) -> Result<Option<f64>> {
        let cell = cell.trim();
        if cell.is_empty() {
            return Ok(None);
        }
        cell.parse::<f64>()
            .map(Some)
            .map_err(|_| self.malformed(line, format!("reading {cell:?} is not a number")))
    }
}

fn line_of(rec: &csv::StringRecord) -> u64 {
    rec.position().map_or(0, |p| p.line())
}

/// Reads per-user day patterns from `path`, preparing each day with `prep`
/// (slice and optional max-scaling).
pub fn load_daily_csv(path: impl AsRef<Path>, schema: &DailyCsvSchema, prep: &DistanceConfig) -> Result<Ingested> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    read_daily_csv(&text, path, schema, prep)
}

/// As [`load_daily_csv`], over in-memory text; `path` is used only in errors.
pub fn read_daily_csv(text: &str, path: &Path, schema: &DailyCsvSchema, prep: &DistanceConfig) -> Result<Ingested> {
    let m = schema.readings_per_day()?;
    let src = Source { path };
    let body = match schema.layout {
        // The Ausgrid files may open with a free-text banner line.
        CsvLayout::SolarHome { .. } => {
            let start = text
                .lines()
                .position(|l| l.trim_start().starts_with(schema.user_col.as_str()))
                .ok_or_else(|| src.malformed(1, format!("no header starting with {:?}", schema.user_col)))?;
            let offset: usize = text.lines().take(start).map(|l| l.len() + 1).sum();
            &text[offset.min(text.len())..]
        }
        _ => text,
    };
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes());
    let headers = reader.headers().map_err(|e| src.malformed(1, e.to_string()))?.clone();
    let mut days = Days::new(m);

    match &schema.layout {
        CsvLayout::Wide => {
            let user = src.column(&headers, &schema.user_col)?;
            let date = src.column(&headers, &schema.date_col)?;
            let value_cols: Vec<usize> = (0..headers.len()).filter(|&i| i != user && i != date).collect();
            if value_cols.len() != m {
                return Err(src.malformed(
                    1,
                    format!(
                        "{} value columns, expected {m} for {}-minute intervals",
                        value_cols.len(),
                        schema.interval_minutes
                    ),
                ));
            }
            for rec in reader.records() {
                let rec = rec.map_err(|e| src.malformed(e.position().map_or(0, |p| p.line()), e.to_string()))?;
                let line = line_of(&rec);
                let (u, d) = user_and_date(&src, &rec, user, date, line)?;
                for (k, &c) in value_cols.iter().enumerate() {
                    if let Some(v) = src.value(line, rec.get(c).unwrap_or(""))? {
                        days.slot(u, d, k, v);
                    }
                }
                days.days.entry((u.to_string(), d)).or_insert_with(|| vec![None; m]);
            }
        }
        CsvLayout::Long {
            timestamp_col,
            value_col,
        } => {
            let user = src.column(&headers, &schema.user_col)?;
            let ts = src.column(&headers, timestamp_col)?;
            let val = src.column(&headers, value_col)?;
            for rec in reader.records() {
                let rec = rec.map_err(|e| src.malformed(e.position().map_or(0, |p| p.line()), e.to_string()))?;
                let line = line_of(&rec);
                let u = rec
                    .get(user)
                    .filter(|s| !s.is_empty())
                    .ok_or_else(|| src.malformed(line, "missing user"))?;
                let raw_ts = rec.get(ts).unwrap_or("");
                let t =
                    parse_timestamp(raw_ts).ok_or_else(|| src.malformed(line, format!("bad timestamp {raw_ts:?}")))?;
                let minutes = t.hour() * 60 + t.minute();
                if minutes % schema.interval_minutes != 0 || t.second() != 0 {
                    return Err(src.malformed(line, format!("timestamp {raw_ts:?} is not on an interval boundary")));
                }
                let k = (minutes / schema.interval_minutes) as usize;
                match src.value(line, rec.get(val).unwrap_or(""))? {
                    Some(v) => days.slot(u, t.date(), k, v),
                    None => {
                        days.days
                            .entry((u.to_string(), t.date()))
                            .or_insert_with(|| vec![None; m]);
                    }
                }
            }
        }
        CsvLayout::SolarHome { mode } => {
            let user = src.column(&headers, &schema.user_col)?;
            let date = src.column(&headers, &schema.date_col)?;
            let category = src.column(&headers, "Consumption Category")?;
            let first_value = date + 1;
            if headers.len() < first_value + m {
                return Err(src.malformed(1, format!("expected {m} interval columns after {:?}", schema.date_col)));
            }
            // (user, date) -> category -> readings
            let mut parts: BTreeMap<(String, NaiveDate), BTreeMap<String, Slots>> = BTreeMap::new();
            for rec in reader.records() {
                let rec = rec.map_err(|e| src.malformed(e.position().map_or(0, |p| p.line()), e.to_string()))?;
                let line = line_of(&rec);
                let (u, d) = user_and_date(&src, &rec, user, date, line)?;
                let cat = rec.get(category).unwrap_or("").to_string();
                let mut slots = vec![None; m];
                for (k, slot) in slots.iter_mut().enumerate() {
                    *slot = src.value(line, rec.get(first_value + k).unwrap_or(""))?;
                }
                parts.entry((u.to_string(), d)).or_default().insert(cat, slots);
            }
            for ((u, d), cats) in parts {
                let Some(gc) = cats.get("GC") else {
                    days.problems.insert((u.clone(), d), "no GC row".into());
                    days.days.insert((u, d), vec![None; m]);
                    continue;
                };
                let gg = cats.get("GG");
                if *mode == NetMode::Net && gg.is_none() {
                    days.problems.insert((u.clone(), d), "no GG row".into());
                    days.days.insert((u, d), vec![None; m]);
                    continue;
                }
                let cl = cats.get("CL");
                let combined: Slots = (0..m)
                    .map(|k| {
                        let load = gc[k]? + cl.map_or(Some(0.0), |c| c[k])?;
                        match mode {
                            NetMode::LoadOnly => Some(load),
                            NetMode::Net => Some((load - gg?[k]?).max(0.0)),
                        }
                    })
                    .collect();
                days.days.insert((u, d), combined);
            }
        }
    }
    days.finish(schema, prep)
}

fn user_and_date<'r>(
    src: &Source<'_>,
    rec: &'r csv::StringRecord,
    user: usize,
    date: usize,
    line: u64,
) -> Result<(&'r str, NaiveDate)> {
    let u = rec
        .get(user)
        .filter(|s| !s.is_empty())
        .ok_or_else(|| src.malformed(line, "missing user"))?;
    let raw = rec.get(date).unwrap_or("");
    let d = parse_date(raw).ok_or_else(|| src.malformed(line, format!("bad date {raw:?}")))?;
    Ok((u, d))
}

/// Writes days in the wide layout; dates are `start + day_index`.
pub fn write_wide_csv(out: impl Write, users: &BTreeMap<String, Vec<DayPattern>>, start: NaiveDate) -> Result<()> {
    let to_err = |e: csv::Error| Error::invalid(format!("writing csv: {e}"));
    let mut w = csv::Writer::from_writer(out);
    let m = users.values().flatten().map(DayPattern::len).next().unwrap_or(0);
    let mut header = vec!["user".to_string(), "date".to_string()];
    header.extend((0..m).map(|k| format!("v{k}")));
    w.write_record(&header).map_err(to_err)?;
    for (user, days) in users {
        for d in days {
            let date = start + chrono::Days::new(u64::from(d.day_index));
            let mut row = vec![user.clone(), date.to_string()];
            row.extend(d.values.iter().map(|v| v.to_string()));
            w.write_record(&row).map_err(to_err)?;
        }
    }
    w.flush().map_err(|e| Error::invalid(format!("writing csv: {e}")))?;
    Ok(())
}
