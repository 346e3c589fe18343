use crate::error::{Error, Result};
use crate::series::Series;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnRef {
    Index(usize),
    Name(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvOptions {
    pub header: bool,
    pub delimiter: u8,
    /// All columns when `None`.
    pub columns: Option<Vec<ColumnRef>>,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self { header: true, delimiter: b',', columns: None }
    }
}

impl CsvOptions {
    /// Parses `0,2` or `price,volume` (names need a header).
    pub fn parse_columns(spec: &str) -> Vec<ColumnRef> {
        spec.split(',')
            .map(|c| c.trim())
            .filter(|c| !c.is_empty())
            .map(|c| match c.parse::<usize>() {
                Ok(i) => ColumnRef::Index(i),
                Err(_) => ColumnRef::Name(c.to_string()),
            })
            .collect()
    }
}

pub fn load_csv(path: impl AsRef<Path>, options: &CsvOptions) -> Result<Series> {
    let mut text = String::new();
    File::open(path.as_ref())?.read_to_string(&mut text)?;
    parse_csv(&text, options)
}

/// Numeric table from CSV text. Data rows are numbered from 1, after any header.
pub fn parse_csv(text: &str, options: &CsvOptions) -> Result<Series> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(options.header)
        .delimiter(options.delimiter)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let headers: Option<Vec<String>> = if options.header {
        let h = reader.headers().map_err(|e| Error::Csv(e.to_string()))?;
        Some(h.iter().map(str::to_string).collect())
    } else {
        None
    };

    let mut selected: Option<Vec<usize>> = match &options.columns {
        None => None,
        Some(cols) => Some(
            cols.iter()
                .map(|c| match c {
                    ColumnRef::Index(i) => Ok(*i),
                    ColumnRef::Name(name) => headers
                        .as_ref()
                        .and_then(|h| h.iter().position(|x| x == name))
                        .ok_or_else(|| Error::Csv(format!("no column named `{name}`"))),
                })
                .collect::<Result<_>>()?,
        ),
    };

    let mut values = Vec::new();
    let mut dim = 0;
    let mut rows = 0usize;
    for (idx, record) in reader.records().enumerate() {
        let row = idx + 1;
        let record = record.map_err(|e| Error::Csv(format!("row {row}: {e}")))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.iter().all(|c| c.is_empty()) {
            continue;
        }
        let cols = selected.get_or_insert_with(|| (0..record.len()).collect());
        if rows == 0 {
            dim = cols.len();
        }
        for &c in cols.iter() {
            let cell = record.get(c).ok_or_else(|| Error::CsvCell {
                row,
                line,
                column: c,
                message: format!("missing column (row has {} fields)", record.len()),
            })?;
            let value: f64 = cell.parse().map_err(|_| Error::CsvCell {
                row,
                line,
                column: c,
                message: if cell.is_empty() { "blank cell".to_string() } else { format!("`{cell}` is not a number") },
            })?;
            if !value.is_finite() {
                return Err(Error::CsvCell { row, line, column: c, message: format!("non-finite value `{cell}`") });
            }
            values.push(value);
        }
        rows += 1;
    }
    if rows == 0 || dim == 0 {
        return Err(Error::Csv("no data rows".into()));
    }
    Series::new(dim, values)
}

/// Writes `series` with a `x1,...,xd` header using shortest round-trip floats.
pub fn write_csv(path: impl AsRef<Path>, series: &Series) -> Result<()> {
    let mut out = BufWriter::new(File::create(path.as_ref())?);
    let header: Vec<String> = (1..=series.dim()).map(|i| format!("x{i}")).collect();
    writeln!(out, "{}", header.join(","))?;
    for row in series.rows() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    out.flush()?;
    Ok(())
}
