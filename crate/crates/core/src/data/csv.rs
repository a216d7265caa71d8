use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use super::GxEDataset;
use crate::error::{Error, Result};

#[derive(Clone, Copy, PartialEq)]
enum Role {
    Y,
    W,
    E,
    X,
}

fn parse_error(row: usize, column: &str, message: impl Into<String>) -> Error {
    Error::Parse {
        row,
        column: column.to_string(),
        message: message.into(),
    }
}

/// Header must read `y,w1..wq,e1..ek,x1..xp` in that order.
fn parse_header(header: &csv::StringRecord) -> Result<Vec<Role>> {
    let mut roles = Vec::with_capacity(header.len());
    let mut counts = [0usize; 3];
    for (i, raw) in header.iter().enumerate() {
        let name = raw.trim();
        if i == 0 {
            if name != "y" {
                return Err(parse_error(1, name, "first column must be y"));
            }
            roles.push(Role::Y);
            continue;
        }
        let (role, slot) = match name.chars().next() {
            Some('w') => (Role::W, 0),
            Some('e') => (Role::E, 1),
            Some('x') => (Role::X, 2),
            _ => return Err(parse_error(1, name, "expected a column named w<i>, e<i> or x<i>")),
        };
        if let Some(&prev) = roles.last() {
            if (prev as u8) > (role as u8) {
                return Err(parse_error(1, name, "columns must be ordered y, w*, e*, x*"));
            }
        }
        let index: usize = name[1..]
            .parse()
            .map_err(|_| parse_error(1, name, "column suffix must be an integer"))?;
        counts[slot] += 1;
        if index != counts[slot] {
            let prefix = &name[..1];
            return Err(parse_error(
                1,
                name,
                format!("expected column {prefix}{}", counts[slot]),
            ));
        }
        roles.push(role);
    }
    if roles.is_empty() {
        return Err(parse_error(1, "y", "missing column y"));
    }
    Ok(roles)
}

fn parse_cell(row: usize, column: &str, cell: &str) -> Result<f64> {
    let v: f64 = cell
        .trim()
        .parse()
        .map_err(|_| parse_error(row, column, format!("non-numeric value {cell:?}")))?;
    if !v.is_finite() {
        return Err(parse_error(row, column, format!("non-finite value {cell:?}")));
    }
    Ok(v)
}

/// Read a dataset; `u` is derived from the `x` and `e` columns.
///
/// Row numbers in errors count the header as row 1.
pub fn load_csv(path: impl AsRef<Path>) -> Result<GxEDataset> {
    let file = File::open(path.as_ref())?;
    read_dataset(file)
}

pub(crate) fn read_dataset<R: Read>(reader: R) -> Result<GxEDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.is_empty() || (header.len() == 1 && header[0].trim().is_empty()) {
        return Err(Error::NoData);
    }
    let roles = parse_header(&header)?;
    let names: Vec<String> = header.iter().map(|s| s.trim().to_string()).collect();
    let width = roles.len();
    let count = |r: Role| roles.iter().filter(|&&x| x == r).count();
    let (q, k, p) = (count(Role::W), count(Role::E), count(Role::X));

    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec?;
        if rec.len() != width {
            return Err(parse_error(
                line,
                names.get(rec.len().min(width - 1)).map_or("", String::as_str),
                format!("row has {} fields, header has {width}", rec.len()),
            ));
        }
        let mut vals = Vec::with_capacity(width);
        for (c, cell) in rec.iter().enumerate() {
            vals.push(parse_cell(line, &names[c], cell)?);
        }
        rows.push(vals);
    }
    if rows.is_empty() {
        return Err(Error::NoData);
    }
    let n = rows.len();
    let y = DVector::from_fn(n, |i, _| rows[i][0]);
    let w = DMatrix::from_fn(n, q, |i, c| rows[i][1 + c]);
    let e = DMatrix::from_fn(n, k, |i, c| rows[i][1 + q + c]);
    let x = DMatrix::from_fn(n, p, |i, c| rows[i][1 + q + k + c]);
    GxEDataset::new(y, w, e, x)
}

/// Write a dataset in the same layout `load_csv` reads.
pub fn write_csv(ds: &GxEDataset, path: impl AsRef<Path>) -> Result<()> {
    let file = File::create(path.as_ref())?;
    write_dataset(ds, file)
}

pub(crate) fn write_dataset<W: Write>(ds: &GxEDataset, out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    let mut header = vec!["y".to_string()];
    header.extend((1..=ds.q()).map(|i| format!("w{i}")));
    header.extend((1..=ds.k()).map(|i| format!("e{i}")));
    header.extend((1..=ds.p()).map(|i| format!("x{i}")));
    wtr.write_record(&header)?;
    let mut row = Vec::with_capacity(header.len());
    for i in 0..ds.n() {
        row.clear();
        row.push(ds.y()[i].to_string());
        row.extend(ds.w().row(i).iter().map(f64::to_string));
        row.extend(ds.e().row(i).iter().map(f64::to_string));
        row.extend(ds.x().row(i).iter().map(f64::to_string));
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Numeric matrix with a header row of arbitrary column names.
pub fn read_matrix_csv(path: impl AsRef<Path>) -> Result<(Vec<String>, DMatrix<f64>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path.as_ref())?;
    let names: Vec<String> = rdr.headers()?.iter().map(|s| s.trim().to_string()).collect();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec?;
        if rec.len() != names.len() {
            return Err(parse_error(
                line,
                "",
                format!("row has {} fields, header has {}", rec.len(), names.len()),
            ));
        }
        let vals = rec
            .iter()
            .enumerate()
            .map(|(c, cell)| parse_cell(line, &names[c], cell))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(vals);
    }
    if rows.is_empty() {
        return Err(Error::NoData);
    }
    let m = DMatrix::from_fn(rows.len(), names.len(), |i, c| rows[i][c]);
    Ok((names, m))
}

pub fn write_matrix_csv(names: &[String], m: &DMatrix<f64>, path: impl AsRef<Path>) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path.as_ref())?;
    wtr.write_record(names)?;
    for row in m.row_iter() {
        wtr.write_record(row.iter().map(f64::to_string))?;
    }
    wtr.flush()?;
    Ok(())
}
