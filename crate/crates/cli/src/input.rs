//! CSV input: optional header row, numeric cells only.

use std::io::Read;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Option<Vec<String>>,
    pub rows: Vec<Vec<f64>>,
}

fn parse_cell(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Reads comma-separated numbers. The first row is a header unless every
/// cell in it is a finite number; any other non-numeric cell is an error.
pub fn parse_csv<R: Read>(reader: R, origin: &str) -> CliResult<Table> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(false).from_reader(reader);
    let mut header = None;
    let mut rows = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            CliError::data(origin, format!("line {line}: {e}"))
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(idx as u64 + 1);
        let parsed: Vec<Option<f64>> = record.iter().map(parse_cell).collect();
        if idx == 0 && parsed.iter().any(Option::is_none) {
            header = Some(record.iter().map(|c| c.trim().to_string()).collect());
            continue;
        }
        let mut row = Vec::with_capacity(parsed.len());
        for (col, (value, raw)) in parsed.into_iter().zip(record.iter()).enumerate() {
            match value {
                Some(v) => row.push(v),
                None => {
                    return Err(CliError::data(
                        origin,
                        format!("line {line}, column {}: '{}' is not a finite number", col + 1, raw.trim()),
                    ))
                }
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::data(origin, "no data rows"));
    }
    Ok(Table { header, rows })
}

pub fn read_csv(path: &Path) -> CliResult<Table> {
    let file = std::fs::File::open(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    parse_csv(std::io::BufReader::new(file), &path.display().to_string())
}

impl Table {
    pub fn ncols(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    /// Resolves a 1-based column number or a header name.
    fn column_index(&self, key: &str) -> Option<usize> {
        if let Ok(i) = key.parse::<usize>() {
            return (1..=self.ncols()).contains(&i).then(|| i - 1);
        }
        self.header.as_ref()?.iter().position(|h| h == key)
    }

    /// Keeps the rows whose column `COL` equals `VALUE` (spec `COL=VALUE`)
    /// and drops that column.
    pub fn subset(&self, spec: &str) -> CliResult<Table> {
        let (key, value) = spec
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("subset '{spec}' is not of the form COL=VALUE")))?;
        let col = self
            .column_index(key.trim())
            .ok_or_else(|| CliError::Usage(format!("subset column '{key}' not found")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("subset value '{value}' is not a number")))?;
        let drop = |v: &Vec<f64>| -> Vec<f64> {
            v.iter().enumerate().filter(|(j, _)| *j != col).map(|(_, x)| *x).collect()
        };
        let rows: Vec<Vec<f64>> = self.rows.iter().filter(|r| r[col] == value).map(drop).collect();
        if rows.is_empty() {
            return Err(CliError::Usage(format!("no rows have column {key} equal to {value}")));
        }
        let header = self
            .header
            .as_ref()
            .map(|h| h.iter().enumerate().filter(|(j, _)| *j != col).map(|(_, s)| s.clone()).collect());
        Ok(Table { header, rows })
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let (n, p) = (self.rows.len(), self.ncols());
        DMatrix::from_fn(n, p, |i, j| self.rows[i][j])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_is_detected() {
        let t = parse_csv("a,b\n1,2\n3,4\n".as_bytes(), "t").unwrap();
        assert_eq!(t.header, Some(vec!["a".into(), "b".into()]));
        assert_eq!(t.rows, vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
        let t = parse_csv("1,2\n3,4\n".as_bytes(), "t").unwrap();
        assert!(t.header.is_none());
        assert_eq!(t.rows.len(), 2);
    }

    #[test]
    fn bad_cell_reports_line() {
        let err = parse_csv("1,2\n3,x\n".as_bytes(), "t").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = parse_csv("a,b\n1,2\n3,\n".as_bytes(), "t").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        assert!(parse_csv("1,2\n3,NaN\n".as_bytes(), "t").is_err());
    }

    #[test]
    fn ragged_rows_are_errors() {
        assert!(parse_csv("1,2\n3,4,5\n".as_bytes(), "t").is_err());
    }

    #[test]
    fn subset_filters_and_drops() {
        let t = parse_csv("class,x,y\n1,0.5,1\n3,2,3\n3,4,5\n".as_bytes(), "t").unwrap();
        let s = t.subset("class=3").unwrap();
        assert_eq!(s.rows, vec![vec![2.0, 3.0], vec![4.0, 5.0]]);
        assert_eq!(t.subset("1=3").unwrap(), s);
        assert!(t.subset("class=7").is_err());
    }
}
