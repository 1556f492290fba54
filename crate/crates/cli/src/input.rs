//! Reading vector files: one vector per line, comma or whitespace separated.
//! Blank lines and lines starting with `#` are ignored.

use jgcs::{Error, Result};

pub fn parse_vectors(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .map(|f| {
                let v: f64 = f.parse().map_err(|_| Error::Parse { line: i + 1, message: format!("not a number: {f:?}") })?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::Parse { line: i + 1, message: format!("non-finite value {f:?}") })
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        if row.is_empty() {
            return Err(Error::Parse { line: i + 1, message: "no values".into() });
        }
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("{} values, expected {} like the first vector", row.len(), first.len()),
                });
            }
        }
        rows.push(row);
    }
    if rows.len() < 2 {
        return Err(Error::Dimension(format!("need at least 2 vectors, found {}", rows.len())));
    }
    Ok(rows)
}
