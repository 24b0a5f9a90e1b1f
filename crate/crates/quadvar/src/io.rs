//! Field-file formats.
//!
//! Binary `GRIDFIELD` format:
//!
//! ```text
//! GRIDFIELD 1\n
//! <d> <n> <counts[0]> … <counts[d-1]> <origin[0]> … <origin[d-1]>\n
//! <row-major 8-byte little-endian IEEE-754 values>
//! ```
//!
//! A CSV alternative (`i0,…,i{d-1},value` with a header row) is accepted
//! for grids up to 10⁴ points; the resolution and origin travel in `# n=`
//! and `# origin=` comment lines after the header.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{GridField, GridSpec, IndexIter};
use crate::scalar::Scalar;

const MAGIC: &str = "GRIDFIELD 1";
/// Largest grid the CSV format accepts.
pub const CSV_POINT_LIMIT: usize = 10_000;

pub fn write_field<T: Scalar>(path: &Path, field: &GridField<T>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_field_to(&mut w, field)
}

pub fn write_field_to<T: Scalar>(w: &mut impl Write, field: &GridField<T>) -> Result<()> {
    let spec = field.spec();
    writeln!(w, "{MAGIC}")?;
    let counts = spec
        .counts()
        .iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join(" ");
    let origin = spec
        .origin()
        .iter()
        .map(|o| o.to_string())
        .collect::<Vec<_>>()
        .join(" ");
    writeln!(w, "{} {} {} {}", spec.dim(), spec.resolution(), counts, origin)?;
    for v in field.values() {
        let x = v.to_f64().ok_or_else(|| Error::FieldFile("value not representable".into()))?;
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_field<T: Scalar>(path: &Path) -> Result<GridField<T>> {
    let mut r = BufReader::new(File::open(path)?);
    read_field_from(&mut r)
}

pub fn read_field_from<T: Scalar>(r: &mut impl BufRead) -> Result<GridField<T>> {
    let mut line = String::new();
    r.read_line(&mut line)?;
    if line.trim_end() != MAGIC {
        return Err(Error::FieldFile(format!(
            "bad magic line {:?} (expected {MAGIC:?})",
            line.trim_end()
        )));
    }
    line.clear();
    r.read_line(&mut line)?;
    let nums: Vec<i64> = line
        .split_whitespace()
        .map(|t| t.parse::<i64>().map_err(|e| Error::FieldFile(format!("bad header token {t:?}: {e}"))))
        .collect::<Result<_>>()?;
    if nums.len() < 2 {
        return Err(Error::FieldFile("truncated header".into()));
    }
    let d = nums[0] as usize;
    if nums.len() != 2 + 2 * d {
        return Err(Error::FieldFile(format!(
            "header has {} fields, expected {} for d = {d}",
            nums.len(),
            2 + 2 * d
        )));
    }
    let n = u32::try_from(nums[1]).map_err(|_| Error::FieldFile("bad resolution".into()))?;
    let counts: Vec<usize> = nums[2..2 + d].iter().map(|&c| c as usize).collect();
    let origin: Vec<i64> = nums[2 + d..].to_vec();
    let spec = GridSpec::new(n, counts, origin)?;
    let total = spec.total_points();
    let mut bytes = vec![0u8; total * 8];
    r.read_exact(&mut bytes)
        .map_err(|e| Error::FieldFile(format!("value block truncated: {e}")))?;
    let values: Vec<T> = bytes
        .chunks_exact(8)
        .map(|c| {
            let x = f64::from_le_bytes(c.try_into().unwrap());
            T::from_f64(x).ok_or_else(|| Error::FieldFile("value not representable".into()))
        })
        .collect::<Result<_>>()?;
    GridField::new(spec, values)
}

pub fn write_field_csv<T: Scalar>(path: &Path, field: &GridField<T>) -> Result<()> {
    let spec = field.spec();
    if spec.total_points() > CSV_POINT_LIMIT {
        return Err(Error::FieldFile(format!(
            "CSV format limited to {CSV_POINT_LIMIT} points (grid has {})",
            spec.total_points()
        )));
    }
    let mut w = BufWriter::new(File::create(path)?);
    let header: Vec<String> = (0..spec.dim()).map(|k| format!("i{k}")).collect();
    writeln!(w, "{},value", header.join(","))?;
    writeln!(w, "# n={}", spec.resolution())?;
    writeln!(
        w,
        "# origin={}",
        spec.origin().iter().map(|o| o.to_string()).collect::<Vec<_>>().join(" ")
    )?;
    for (idx, v) in IndexIter::new(spec.counts()).zip(field.values()) {
        let coords: Vec<String> = idx.iter().map(|i| i.to_string()).collect();
        let x = v.to_f64().ok_or_else(|| Error::FieldFile("value not representable".into()))?;
        writeln!(w, "{},{:.17e}", coords.join(","), x)?;
    }
    Ok(())
}

pub fn read_field_csv<T: Scalar>(path: &Path) -> Result<GridField<T>> {
    let r = BufReader::new(File::open(path)?);
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::FieldFile("empty CSV".into()))??;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 2 || cols.last() != Some(&"value") {
        return Err(Error::FieldFile("CSV header must be i0,…,value".into()));
    }
    let d = cols.len() - 1;
    let mut n: Option<u32> = None;
    let mut origin = vec![0i64; d];
    let mut entries: Vec<(Vec<usize>, f64)> = Vec::new();
    for line in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(rest) = t.strip_prefix('#') {
            let rest = rest.trim();
            if let Some(v) = rest.strip_prefix("n=") {
                n = Some(v.trim().parse().map_err(|e| Error::FieldFile(format!("bad n: {e}")))?);
            } else if let Some(v) = rest.strip_prefix("origin=") {
                let parsed: Vec<i64> = v
                    .split_whitespace()
                    .map(|x| x.parse::<i64>().map_err(|e| Error::FieldFile(format!("bad origin: {e}"))))
                    .collect::<Result<_>>()?;
                if parsed.len() != d {
                    return Err(Error::FieldFile("origin dimension mismatch".into()));
                }
                origin = parsed;
            }
            continue;
        }
        let parts: Vec<&str> = t.split(',').collect();
        if parts.len() != d + 1 {
            return Err(Error::FieldFile(format!("row has {} fields, expected {}", parts.len(), d + 1)));
        }
        let idx: Vec<usize> = parts[..d]
            .iter()
            .map(|x| x.parse::<usize>().map_err(|e| Error::FieldFile(format!("bad index: {e}"))))
            .collect::<Result<_>>()?;
        let val: f64 = parts[d]
            .parse()
            .map_err(|e| Error::FieldFile(format!("bad value: {e}")))?;
        entries.push((idx, val));
    }
    let n = n.ok_or_else(|| Error::FieldFile("missing # n= line".into()))?;
    if entries.is_empty() {
        return Err(Error::FieldFile("no data rows".into()));
    }
    let counts: Vec<usize> = (0..d)
        .map(|k| entries.iter().map(|(i, _)| i[k]).max().unwrap() + 1)
        .collect();
    let spec = GridSpec::new(n, counts.clone(), origin)?;
    if entries.len() != spec.total_points() {
        return Err(Error::FieldFile(format!(
            "{} rows for a {} point grid",
            entries.len(),
            spec.total_points()
        )));
    }
    let strides = spec.strides();
    let mut values = vec![f64::NAN; spec.total_points()];
    for (idx, val) in entries {
        let lin: usize = strides.iter().zip(&idx).map(|(s, i)| s * i).sum();
        values[lin] = val;
    }
    let values: Vec<T> = values
        .into_iter()
        .map(|x| T::from_f64(x).ok_or_else(|| Error::FieldFile("value not representable".into())))
        .collect::<Result<_>>()?;
    GridField::new(spec, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_field() -> GridField<f64> {
        let spec = GridSpec::new(7, vec![3, 4], vec![-1, 2]).unwrap();
        let values: Vec<f64> = (0..12).map(|i| (i as f64).sin() * 1e3).collect();
        GridField::new(spec, values).unwrap()
    }

    #[test]
    fn binary_round_trip_is_exact() {
        let field = sample_field();
        let dir = std::env::temp_dir().join(format!("quadvar_io_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("f.gridfield");
        write_field(&path, &field).unwrap();
        let back: GridField<f64> = read_field(&path).unwrap();
        assert_eq!(back.spec(), field.spec());
        assert_eq!(back.values(), field.values());
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let field = sample_field();
        let dir = std::env::temp_dir().join(format!("quadvar_io_csv_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("f.csv");
        write_field_csv(&path, &field).unwrap();
        let back: GridField<f64> = read_field_csv(&path).unwrap();
        assert_eq!(back.spec(), field.spec());
        assert_eq!(back.values(), field.values());
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn bad_magic_is_rejected() {
        let mut data = b"GRIDFIELD 2\n1 1 1 0\n".to_vec();
        data.extend_from_slice(&1.0f64.to_le_bytes());
        let mut r = std::io::BufReader::new(&data[..]);
        assert!(matches!(
            read_field_from::<f64>(&mut r),
            Err(Error::FieldFile(_))
        ));
    }

    #[test]
    fn truncated_values_are_rejected() {
        let mut data = Vec::new();
        let field = sample_field();
        write_field_to(&mut data, &field).unwrap();
        data.truncate(data.len() - 4);
        let mut r = std::io::BufReader::new(&data[..]);
        assert!(read_field_from::<f64>(&mut r).is_err());
    }
}
