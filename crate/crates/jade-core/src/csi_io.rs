//! Snapshot file format: UTF-8 CSV with a two-line header.
//!
//! ```text
//! M,K_total,carrier_hz,spacing_hz
//! b_1,b_2,...,b_K          (active bin indices, strictly increasing)
//! re+imj,re+imj,...        (M rows of K complex entries)
//! ```
//!
//! Entries carry 10 significant digits; header floats use the shortest
//! representation that round-trips. Parsing is strict: it rejects
//! malformed numbers, non-finite values, ragged rows, and sizes beyond
//! fixed caps, so untrusted files fail cleanly.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::ArrayGeometry;
use crate::grid::SubcarrierGrid;
use crate::model::CsiMatrix;

pub const MAX_SENSORS: usize = 4096;
pub const MAX_TOTAL_BINS: usize = 1_048_576;
pub const MAX_ENTRIES: usize = 4_194_304;

/// Snapshot file contents before an array geometry is attached.
#[derive(Debug, Clone, PartialEq)]
pub struct CsiFileData {
    pub grid: SubcarrierGrid,
    pub data: DMatrix<Complex64>,
}

impl CsiFileData {
    pub fn n_sensors(&self) -> usize {
        self.data.nrows()
    }

    /// Attaches a geometry; its sensor count must match the file.
    pub fn into_csi_matrix(self, geometry: &ArrayGeometry) -> Result<CsiMatrix> {
        if geometry.n_sensors() != self.data.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "file has {} sensor rows, array has {} sensors",
                self.data.nrows(),
                geometry.n_sensors()
            )));
        }
        CsiMatrix::new(geometry.clone(), self.grid, self.data)
    }
}

fn entry_string(z: Complex64) -> String {
    format!("{:.9e}{:+.9e}j", z.re, z.im)
}

pub fn write_csi<W: Write>(csi: &CsiMatrix, mut out: W) -> std::io::Result<()> {
    let grid = csi.grid();
    writeln!(
        out,
        "{},{},{},{}",
        csi.n_sensors(),
        grid.total_bins(),
        grid.carrier_hz(),
        grid.spacing_hz()
    )?;
    let bins: Vec<String> = grid.active_bins().iter().map(|b| b.to_string()).collect();
    writeln!(out, "{}", bins.join(","))?;
    for row in csi.data().row_iter() {
        let cells: Vec<String> = row.iter().map(|&z| entry_string(z)).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}

pub fn write_csi_file(csi: &CsiMatrix, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_csi(csi, &mut buf)?;
    fs::write(path, buf).map_err(|source| Error::IoAt {
        path: path.to_owned(),
        source,
    })?;
    Ok(())
}

/// Parses one `re+imj` entry. The imaginary part must carry an explicit
/// sign and the whole token must end in `j`; both parts must be finite.
pub fn parse_complex(s: &str) -> std::result::Result<Complex64, String> {
    let body = s
        .strip_suffix('j')
        .ok_or_else(|| format!("'{s}': complex entry must end in 'j'"))?;
    // The split sign is the last +/- that does not follow an exponent
    // marker and is not the real part's leading sign.
    let bytes = body.as_bytes();
    let mut split = None;
    for (i, &b) in bytes.iter().enumerate().skip(1) {
        if (b == b'+' || b == b'-') && bytes[i - 1] != b'e' && bytes[i - 1] != b'E' {
            split = Some(i);
        }
    }
    let i = split.ok_or_else(|| format!("'{s}': missing signed imaginary part"))?;
    let re: f64 = body[..i]
        .parse()
        .map_err(|_| format!("'{}': bad real part", &body[..i]))?;
    let im: f64 = body[i..]
        .parse()
        .map_err(|_| format!("'{}': bad imaginary part", &body[i..]))?;
    if !re.is_finite() || !im.is_finite() {
        return Err(format!("'{s}': non-finite value"));
    }
    Ok(Complex64::new(re, im))
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::CsiParse {
        line,
        msg: msg.into(),
    }
}

/// Parses a full snapshot file. Line numbers in errors are 1-based.
pub fn parse_csi_str(text: &str) -> Result<CsiFileData> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let fields: Vec<&str> = header.split(',').collect();
    if fields.len() != 4 {
        return Err(parse_err(
            1,
            format!("expected M,K_total,carrier_hz,spacing_hz, got {} fields", fields.len()),
        ));
    }
    let m: usize = fields[0]
        .parse()
        .map_err(|_| parse_err(1, format!("'{}': bad sensor count", fields[0])))?;
    let total_bins: usize = fields[1]
        .parse()
        .map_err(|_| parse_err(1, format!("'{}': bad bin count", fields[1])))?;
    let carrier_hz: f64 = fields[2]
        .parse()
        .map_err(|_| parse_err(1, format!("'{}': bad carrier frequency", fields[2])))?;
    let spacing_hz: f64 = fields[3]
        .parse()
        .map_err(|_| parse_err(1, format!("'{}': bad subcarrier spacing", fields[3])))?;
    if m == 0 || m > MAX_SENSORS {
        return Err(parse_err(1, format!("sensor count {m} outside 1..={MAX_SENSORS}")));
    }
    if total_bins > MAX_TOTAL_BINS {
        return Err(parse_err(
            1,
            format!("bin count {total_bins} exceeds {MAX_TOTAL_BINS}"),
        ));
    }

    let bins_line = lines.next().ok_or_else(|| parse_err(2, "missing active bin list"))?;
    let bins = bins_line
        .split(',')
        .map(|t| {
            t.parse::<usize>()
                .map_err(|_| parse_err(2, format!("'{t}': bad bin index")))
        })
        .collect::<Result<Vec<usize>>>()?;
    let k = bins.len();
    if m.saturating_mul(k) > MAX_ENTRIES {
        return Err(parse_err(2, format!("{m}x{k} matrix exceeds {MAX_ENTRIES} entries")));
    }
    let grid = SubcarrierGrid::new(carrier_hz, spacing_hz, total_bins, bins)
        .map_err(|e| parse_err(2, e.to_string()))?;

    let mut data = DMatrix::zeros(m, k);
    for mi in 0..m {
        let line_no = 3 + mi;
        let row = lines
            .next()
            .ok_or_else(|| parse_err(line_no, format!("missing sensor row {} of {m}", mi + 1)))?;
        let cells: Vec<&str> = row.split(',').collect();
        if cells.len() != k {
            return Err(parse_err(
                line_no,
                format!("expected {k} entries, got {}", cells.len()),
            ));
        }
        for (ki, cell) in cells.iter().enumerate() {
            data[(mi, ki)] = parse_complex(cell).map_err(|msg| parse_err(line_no, msg))?;
        }
    }
    if let Some(extra) = lines.find(|l| !l.trim().is_empty()) {
        return Err(parse_err(
            3 + m,
            format!("unexpected trailing content '{extra}'"),
        ));
    }
    Ok(CsiFileData { grid, data })
}

pub fn read_csi_file(path: &Path) -> Result<CsiFileData> {
    let text = fs::read_to_string(path).map_err(|source| Error::IoAt {
        path: path.to_owned(),
        source,
    })?;
    parse_csi_str(&text)
}
