//! Readers for the raw rating logs.
//!
//! * MovieLens 1M `ratings.dat`: `UserID::MovieID::Rating::Timestamp`
//! * Amazon ratings-only CSV: `item,user,rating,timestamp`

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::{DatasetError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RawInteraction {
    pub user_id: String,
    pub item_id: String,
    pub rating: f64,
    pub timestamp: Option<i64>,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| DatasetError::Io {
            path: path.to_path_buf(),
            source,
        })
}

pub fn parse_movielens(path: &Path) -> Result<Vec<RawInteraction>> {
    parse_movielens_reader(open(path)?)
}

pub fn parse_amazon(path: &Path) -> Result<Vec<RawInteraction>> {
    parse_amazon_reader(open(path)?)
}

pub fn parse_movielens_reader<R: BufRead>(reader: R) -> Result<Vec<RawInteraction>> {
    parse_records(reader, "::", |fields| {
        let [user, item, rating, ts] = fields else {
            return Err(format!("expected 4 '::'-separated fields, found {}", fields.len()));
        };
        Ok(RawInteraction {
            user_id: token(user, "user")?,
            item_id: token(item, "item")?,
            rating: number(rating, "rating")?,
            timestamp: Some(ts.trim().parse().map_err(|_| format!("bad timestamp {ts:?}"))?),
        })
    })
}

pub fn parse_amazon_reader<R: BufRead>(reader: R) -> Result<Vec<RawInteraction>> {
    parse_records(reader, ",", |fields| {
        let [item, user, rating, ts] = fields else {
            return Err(format!("expected 4 comma-separated fields, found {}", fields.len()));
        };
        Ok(RawInteraction {
            user_id: token(user, "user")?,
            item_id: token(item, "item")?,
            rating: number(rating, "rating")?,
            timestamp: Some(ts.trim().parse().map_err(|_| format!("bad timestamp {ts:?}"))?),
        })
    })
}

fn parse_records<R, F>(reader: R, sep: &str, mut record: F) -> Result<Vec<RawInteraction>>
where
    R: BufRead,
    F: FnMut(&[&str]) -> std::result::Result<RawInteraction, String>,
{
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line_no = n + 1;
        let line = line.map_err(|e| DatasetError::Parse {
            line: line_no,
            reason: e.to_string(),
        })?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(sep).collect();
        let rec = record(&fields).map_err(|reason| DatasetError::Parse {
            line: line_no,
            reason,
        })?;
        out.push(rec);
    }
    if out.is_empty() {
        return Err(DatasetError::Empty);
    }
    Ok(out)
}

fn token(s: &str, what: &str) -> std::result::Result<String, String> {
    let s = s.trim();
    if s.is_empty() {
        Err(format!("empty {what} id"))
    } else {
        Ok(s.to_string())
    }
}

fn number(s: &str, what: &str) -> std::result::Result<f64, String> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| format!("bad {what} {s:?}"))
}

/// Writes records in the MovieLens `::` layout.
pub fn write_movielens<W: Write>(mut w: W, records: &[RawInteraction]) -> std::io::Result<()> {
    for r in records {
        writeln!(
            w,
            "{}::{}::{}::{}",
            r.user_id,
            r.item_id,
            r.rating,
            r.timestamp.unwrap_or(0)
        )?;
    }
    Ok(())
}
