use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

/// Parse one JSON object per non-blank line. `check` runs on every parsed
/// record and its error message is reported against that line.
pub(crate) fn read_records<T, F>(path: &Path, mut check: F) -> Result<Vec<T>>
where
    T: DeserializeOwned,
    F: FnMut(&T) -> std::result::Result<(), String>,
{
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: T =
            serde_json::from_str(&line).map_err(|e| Error::parse(path, line_no, e.to_string()))?;
        check(&rec).map_err(|m| Error::parse(path, line_no, m))?;
        out.push(rec);
    }
    Ok(out)
}

pub(crate) fn write_records<'a, T, I>(path: &Path, records: I) -> Result<usize>
where
    T: Serialize + 'a,
    I: IntoIterator<Item = &'a T>,
{
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut n = 0;
    for rec in records {
        serde_json::to_writer(&mut w, rec)
            .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        n += 1;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(n)
}
