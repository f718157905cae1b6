//! Rating file schema.
//!
//! ```text
//! #range,1,10
//! img1,raw,2;4;6
//! img2,gauss,5.0,1.2
//! img3,hist,1:3;2:5;3:1
//! ```
//!
//! All data rows of one file share a kind. Other lines starting with `#` are
//! comments.

use std::io::{Read, Write};
use std::path::Path;

use super::{AnnotationPool, PoolSource, ScoreRange, SourceKind};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RatingTable {
    pub range: Option<ScoreRange>,
    pub pools: Vec<AnnotationPool>,
}

impl RatingTable {
    pub fn kind(&self) -> Option<SourceKind> {
        self.pools.first().map(AnnotationPool::source_kind)
    }
}

pub fn load_ratings_csv(path: impl AsRef<Path>) -> Result<RatingTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_ratings(file, &path.display().to_string())
}

/// Parses a rating table; `origin` is used in error messages.
pub fn read_ratings(reader: impl Read, origin: &str) -> Result<RatingTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut table = RatingTable::default();
    let mut kind: Option<SourceKind> = None;
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let err = |reason: String| Error::Parse {
            path: origin.to_string(),
            line,
            reason,
        };
        let first = record.get(0).unwrap_or("");
        if first.starts_with('#') {
            if first == "#range" {
                if record.len() != 3 {
                    return Err(err("expected `#range,min,max`".into()));
                }
                let min = parse_f64(&record[1]).map_err(&err)?;
                let max = parse_f64(&record[2]).map_err(&err)?;
                table.range = Some(ScoreRange::new(min, max).map_err(|e| err(e.to_string()))?);
            }
            continue;
        }
        if record.len() == 1 && first.is_empty() {
            continue;
        }
        if record.len() < 3 {
            return Err(err(format!("expected `id,kind,payload`, got {} fields", record.len())));
        }
        let row_kind: SourceKind = record[1].parse().map_err(|e: Error| err(e.to_string()))?;
        match kind {
            None => kind = Some(row_kind),
            Some(k) if k != row_kind => {
                return Err(err(format!(
                    "mixed schemas: row kind `{}` in a `{}` file",
                    row_kind.name(),
                    k.name()
                )))
            }
            _ => {}
        }
        let id = record[0].to_string();
        if id.is_empty() {
            return Err(err("empty sample id".into()));
        }
        let source = match row_kind {
            SourceKind::RawScores => {
                if record.len() != 3 {
                    return Err(err("raw rows take one `;`-joined payload field".into()));
                }
                let ratings = record[2]
                    .split(';')
                    .map(|s| parse_f64(s.trim()))
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(&err)?;
                PoolSource::RawScores(ratings)
            }
            SourceKind::MosPlusStd => {
                if record.len() != 4 {
                    return Err(err("gauss rows take `mos,std`".into()));
                }
                PoolSource::MosPlusStd {
                    mos: parse_f64(&record[2]).map_err(&err)?,
                    std: parse_f64(&record[3]).map_err(&err)?,
                }
            }
            SourceKind::EmpiricalDistribution => {
                if record.len() != 3 {
                    return Err(err("hist rows take one `;`-joined value:count field".into()));
                }
                let bins = record[2]
                    .split(';')
                    .map(|pair| {
                        let (v, c) = pair
                            .split_once(':')
                            .ok_or_else(|| format!("bad histogram entry `{pair}`"))?;
                        let c = c
                            .trim()
                            .parse::<u64>()
                            .map_err(|e| format!("bad count `{c}`: {e}"))?;
                        Ok((parse_f64(v.trim())?, c))
                    })
                    .collect::<std::result::Result<Vec<_>, String>>()
                    .map_err(&err)?;
                PoolSource::EmpiricalDistribution(bins)
            }
        };
        let pool = AnnotationPool { sample_id: id, source };
        pool.validate().map_err(|e| err(e.to_string()))?;
        table.pools.push(pool);
    }
    Ok(table)
}

fn parse_f64(s: &str) -> std::result::Result<f64, String> {
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| format!("bad number `{s}`"))
}

pub fn write_ratings(mut out: impl Write, table: &RatingTable) -> std::io::Result<()> {
    if let Some(r) = table.range {
        writeln!(out, "#range,{},{}", r.min, r.max)?;
    }
    for pool in &table.pools {
        let id = &pool.sample_id;
        match &pool.source {
            PoolSource::RawScores(r) => {
                let joined: Vec<String> = r.iter().map(f64::to_string).collect();
                writeln!(out, "{id},raw,{}", joined.join(";"))?;
            }
            PoolSource::MosPlusStd { mos, std } => writeln!(out, "{id},gauss,{mos},{std}")?,
            PoolSource::EmpiricalDistribution(h) => {
                let joined: Vec<String> = h.iter().map(|(v, c)| format!("{v}:{c}")).collect();
                writeln!(out, "{id},hist,{}", joined.join(";"))?;
            }
        }
    }
    Ok(())
}

pub fn write_ratings_csv(path: impl AsRef<Path>, table: &RatingTable) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    write_ratings(&mut w, table).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}
