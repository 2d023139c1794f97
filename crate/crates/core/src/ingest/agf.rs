//! On-disk layouts for daily fields.
//!
//! CSV: a header line
//! `#AGF-CSV,v1,<n_lat>,<n_lon>,<lat_step>,<lon_step>,<lat_origin>,<lon_origin>,<year_first>,<year_last>`
//! followed by one `year,day,<value per node>` row per (year, day), missing
//! values written as `NA`.
//!
//! Binary (`AGF1`): the magic, then little-endian `u32 n_lat, u32 n_lon,
//! f64 lat_step, f64 lon_step, f64 lat_origin, f64 lon_origin, i32 year_first,
//! i32 year_last` and the `f32` payload in (year, day, node) order. Missing
//! values keep their sentinel bit pattern.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::field::{is_missing, DailyField, DAYS_PER_YEAR, MISSING};
use crate::error::{Error, Result};
use crate::grid::GridSpec;

pub const AGF_MAGIC: &[u8; 4] = b"AGF1";
pub const AGF_HEADER_LEN: usize = 4 + 2 * 4 + 4 * 8 + 2 * 4;
const CSV_TAG: &str = "#AGF-CSV";
const CSV_VERSION: &str = "v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldFormat {
    Csv,
    Bin,
}

impl FieldFormat {
    /// `.csv` selects CSV; anything else is binary.
    pub fn from_path(path: &Path) -> FieldFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => FieldFormat::Csv,
            _ => FieldFormat::Bin,
        }
    }
}

pub fn load_field(path: &Path, format: FieldFormat) -> Result<DailyField> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    match format {
        FieldFormat::Csv => read_csv(BufReader::new(file), &path.display().to_string()),
        FieldFormat::Bin => {
            let mut bytes = Vec::new();
            BufReader::new(file)
                .read_to_end(&mut bytes)
                .map_err(|e| Error::io(path, e))?;
            decode_bin(&bytes, &path.display().to_string())
        }
    }
}

pub fn store_field(field: &DailyField, path: &Path, format: FieldFormat) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let res = match format {
        FieldFormat::Csv => write_csv(field, &mut w),
        FieldFormat::Bin => w.write_all(&encode_bin(field)),
    };
    res.and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn encode_bin(field: &DailyField) -> Vec<u8> {
    let g = field.grid();
    let mut out = Vec::with_capacity(AGF_HEADER_LEN + 4 * field.values().len());
    out.extend_from_slice(AGF_MAGIC);
    out.extend_from_slice(&(g.n_lat as u32).to_le_bytes());
    out.extend_from_slice(&(g.n_lon as u32).to_le_bytes());
    for v in [g.lat_step, g.lon_step, g.lat_origin, g.lon_origin] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&field.year_first().to_le_bytes());
    out.extend_from_slice(&field.year_last().to_le_bytes());
    for v in field.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    loc: &'a str,
}

impl<'a> Cursor<'a> {
    fn take<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        let end = self.pos + N;
        let chunk = self.bytes.get(self.pos..end).ok_or_else(|| {
            Error::parse(
                format!("{} byte {}", self.loc, self.pos),
                format!("truncated header reading {what}"),
            )
        })?;
        self.pos = end;
        Ok(chunk.try_into().expect("length checked"))
    }
}

pub fn decode_bin(bytes: &[u8], loc: &str) -> Result<DailyField> {
    if bytes.len() < 4 || &bytes[..4] != AGF_MAGIC {
        return Err(Error::parse(format!("{loc} byte 0"), "bad magic"));
    }
    let mut c = Cursor { bytes, pos: 4, loc };
    let n_lat = u32::from_le_bytes(c.take("n_lat")?) as usize;
    let n_lon = u32::from_le_bytes(c.take("n_lon")?) as usize;
    let lat_step = f64::from_le_bytes(c.take("lat_step")?);
    let lon_step = f64::from_le_bytes(c.take("lon_step")?);
    let lat_origin = f64::from_le_bytes(c.take("lat_origin")?);
    let lon_origin = f64::from_le_bytes(c.take("lon_origin")?);
    let year_first = i32::from_le_bytes(c.take("year_first")?);
    let year_last = i32::from_le_bytes(c.take("year_last")?);
    let grid = GridSpec::new(n_lat, n_lon, lat_step, lon_step, lat_origin, lon_origin)
        .map_err(|e| Error::parse(format!("{loc} byte 4"), e.to_string()))?;
    if year_last < year_first {
        return Err(Error::parse(
            format!("{loc} byte 44"),
            format!("empty year range {year_first}..={year_last}"),
        ));
    }
    let n_years = (year_last as i64 - year_first as i64 + 1) as usize;
    let count = n_years * DAYS_PER_YEAR * grid.node_count();
    let payload = &bytes[AGF_HEADER_LEN..];
    if payload.len() != 4 * count {
        let what = if payload.len() < 4 * count {
            "truncated payload"
        } else {
            "trailing bytes after payload"
        };
        return Err(Error::parse(
            format!("{loc} byte {}", AGF_HEADER_LEN + payload.len().min(4 * count)),
            format!("{what}: {} bytes, expected {}", payload.len(), 4 * count),
        ));
    }
    let values = payload
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().expect("4-byte chunk")))
        .collect();
    DailyField::new(grid, year_first, year_last, values)
}

fn write_csv(field: &DailyField, w: &mut impl Write) -> std::io::Result<()> {
    let g = field.grid();
    writeln!(
        w,
        "{CSV_TAG},{CSV_VERSION},{},{},{},{},{},{},{},{}",
        g.n_lat,
        g.n_lon,
        g.lat_step,
        g.lon_step,
        g.lat_origin,
        g.lon_origin,
        field.year_first(),
        field.year_last()
    )?;
    let nc = g.node_count();
    let mut line = String::new();
    for (step, row) in field.values().chunks_exact(nc).enumerate() {
        use std::fmt::Write as _;
        line.clear();
        let year = field.year_first() + (step / DAYS_PER_YEAR) as i32;
        let _ = write!(line, "{year},{}", step % DAYS_PER_YEAR);
        for &v in row {
            if is_missing(v) {
                line.push_str(",NA");
            } else {
                let _ = write!(line, ",{v}");
            }
        }
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    Ok(())
}

fn read_csv(reader: impl BufRead, loc: &str) -> Result<DailyField> {
    let mut lines = reader.lines();
    let at = |line: usize| format!("{loc}:{line}");
    let header = match lines.next() {
        Some(l) => l.map_err(|e| Error::parse(at(1), e.to_string()))?,
        None => return Err(Error::parse(at(1), "empty file")),
    };
    let parts: Vec<&str> = header.trim_end().split(',').collect();
    if parts.len() != 10 || parts[0] != CSV_TAG || parts[1] != CSV_VERSION {
        return Err(Error::parse(
            at(1),
            "malformed header, expected `#AGF-CSV,v1,n_lat,n_lon,lat_step,lon_step,lat_origin,lon_origin,year_first,year_last`",
        ));
    }
    let num = |i: usize, name: &str| -> Result<f64> {
        parts[i]
            .parse::<f64>()
            .map_err(|_| Error::parse(at(1), format!("bad {name} {:?}", parts[i])))
    };
    let int = |i: usize, name: &str| -> Result<i64> {
        parts[i]
            .parse::<i64>()
            .map_err(|_| Error::parse(at(1), format!("bad {name} {:?}", parts[i])))
    };
    let n_lat = int(2, "n_lat")?;
    let n_lon = int(3, "n_lon")?;
    let year_first = int(8, "year_first")?;
    let year_last = int(9, "year_last")?;
    if n_lat < 1 || n_lon < 1 || year_last < year_first {
        return Err(Error::parse(at(1), "header declares an empty extent"));
    }
    let grid = GridSpec::new(
        n_lat as usize,
        n_lon as usize,
        num(4, "lat_step")?,
        num(5, "lon_step")?,
        num(6, "lat_origin")?,
        num(7, "lon_origin")?,
    )
    .map_err(|e| Error::parse(at(1), e.to_string()))?;
    let (year_first, year_last) = (year_first as i32, year_last as i32);
    let n_years = (year_last - year_first + 1) as usize;
    let nc = grid.node_count();
    let rows = n_years * DAYS_PER_YEAR;
    let mut values = Vec::with_capacity(rows * nc);

    let mut row = 0usize;
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let line = line.map_err(|e| Error::parse(at(lineno), e.to_string()))?;
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        if row == rows {
            return Err(Error::parse(
                at(lineno),
                format!("extent mismatch: more than the declared {rows} data rows"),
            ));
        }
        let mut cells = line.split(',');
        let want_year = year_first + (row / DAYS_PER_YEAR) as i32;
        let want_day = row % DAYS_PER_YEAR;
        let year = cells.next().and_then(|s| s.parse::<i32>().ok());
        let day = cells.next().and_then(|s| s.parse::<usize>().ok());
        if year != Some(want_year) || day != Some(want_day) {
            return Err(Error::parse(
                at(lineno),
                format!("expected row for year {want_year} day {want_day}"),
            ));
        }
        let before = values.len();
        for cell in cells {
            let v = if cell == "NA" {
                MISSING
            } else {
                cell.parse::<f32>()
                    .map_err(|_| Error::parse(at(lineno), format!("bad value {cell:?}")))?
            };
            values.push(v);
        }
        if values.len() - before != nc {
            return Err(Error::parse(
                at(lineno),
                format!("expected {nc} values, found {}", values.len() - before),
            ));
        }
        row += 1;
    }
    if row != rows {
        return Err(Error::parse(
            at(row + 2),
            format!("extent mismatch: {row} data rows, header declares {rows}"),
        ));
    }
    DailyField::new(grid, year_first, year_last, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn random_field(seed: u64, n_lat: usize, n_lon: usize, years: usize) -> DailyField {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let grid = GridSpec::regular(n_lat, n_lon).unwrap();
        let values = (0..years * 365 * grid.node_count())
            .map(|_| {
                if rng.random_bool(0.05) {
                    MISSING
                } else {
                    f32::from_bits(rng.random::<u32>() & 0x7F7F_FFFF) * if rng.random() { 1.0 } else { -1.0 }
                }
            })
            .collect();
        DailyField::new(grid, 1960, 1960 + years as i32 - 1, values).unwrap()
    }

    #[test]
    fn constant_field_csv_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.csv");
        let f = DailyField::filled(GridSpec::regular(1, 1).unwrap(), 1999..=1999, 3.5).unwrap();
        store_field(&f, &p, FieldFormat::Csv).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 366);
        assert_eq!(lines[0], "#AGF-CSV,v1,1,1,1,360,90,0,1999,1999");
        assert_eq!(lines[1], "1999,0,3.5");
        assert!(lines[1..].iter().all(|l| l.ends_with(",3.5")));
    }

    #[test]
    fn bin_size_follows_layout() {
        let f = random_field(1, 2, 3, 2);
        assert_eq!(encode_bin(&f).len(), AGF_HEADER_LEN + 4 * 2 * 365 * 6);
        assert_eq!(AGF_HEADER_LEN, 52);
    }

    #[test]
    fn csv_extent_mismatch_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.csv");
        let f = DailyField::filled(GridSpec::regular(1, 4).unwrap(), 2000..=2001, 1.0).unwrap();
        store_field(&f, &p, FieldFormat::Csv).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let truncated: Vec<_> = text.lines().take(1 + 729).collect();
        std::fs::write(&p, truncated.join("\n")).unwrap();
        let err = load_field(&p, FieldFormat::Csv).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
        assert!(err.to_string().contains("extent mismatch"), "{err}");
    }

    #[test]
    fn bad_magic_and_truncation() {
        let f = random_field(2, 1, 2, 1);
        let mut bytes = encode_bin(&f);
        assert!(decode_bin(&bytes[..bytes.len() - 3], "x")
            .unwrap_err()
            .to_string()
            .contains("truncated payload"));
        bytes[0] = b'X';
        assert!(decode_bin(&bytes, "x").unwrap_err().to_string().contains("bad magic"));
        assert!(decode_bin(b"AGF1\x01", "x").is_err());
    }

    #[test]
    fn malformed_csv_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.csv");
        std::fs::write(&p, "#AGF-CSV,v2,1,1,1,360,90,0,1999,1999\n").unwrap();
        assert!(load_field(&p, FieldFormat::Csv).is_err());
        std::fs::write(&p, "").unwrap();
        assert!(load_field(&p, FieldFormat::Csv).is_err());
    }

    #[test]
    fn cross_format_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let f = random_field(9, 2, 2, 2);
        let b = dir.path().join("f.agf");
        let c = dir.path().join("f.csv");
        store_field(&f, &b, FieldFormat::Bin).unwrap();
        let g = load_field(&b, FieldFormat::Bin).unwrap();
        store_field(&g, &c, FieldFormat::Csv).unwrap();
        let h = load_field(&c, FieldFormat::Csv).unwrap();
        assert_eq!(encode_bin(&f), encode_bin(&h));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn both_formats_round_trip(seed in any::<u64>(), n_lat in 1usize..3, n_lon in 1usize..4, years in 1usize..3) {
            let dir = tempfile::tempdir().unwrap();
            let f = random_field(seed, n_lat, n_lon, years);
            for (name, fmt) in [("f.agf", FieldFormat::Bin), ("f.csv", FieldFormat::Csv)] {
                let p = dir.path().join(name);
                store_field(&f, &p, fmt).unwrap();
                let first = std::fs::read(&p).unwrap();
                let g = load_field(&p, fmt).unwrap();
                prop_assert_eq!(encode_bin(&f), encode_bin(&g));
                store_field(&g, &p, fmt).unwrap();
                prop_assert_eq!(first, std::fs::read(&p).unwrap());
            }
        }
    }
}
