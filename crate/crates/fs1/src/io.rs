//! Matrix ingestion (PGM P2/P5 and CSV) and conversion of grayscale
//! images into 2D measures.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::Grid2D;
use crate::measure::{validate_measure, DiscreteMeasure};
use crate::problems::normalize_signal;

/// Supported matrix file formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    /// Netpbm grayscale: plain `P2` or binary `P5`, maxval up to 65535,
    /// `#` comments allowed in the header. Values are taken as stored.
    Pgm,
    /// Comma-separated decimal rows, `\n` or `\r\n` line endings.
    Csv,
}

/// Dense real matrix with image-row semantics: `rows` image rows of
/// `cols` values, stored column-major to match the measure layout.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl GridMatrix {
    /// Builds from row vectors (all the same length, at least one value).
    pub fn from_rows(row_data: &[Vec<f64>]) -> Result<Self> {
        let rows = row_data.len();
        if rows == 0 {
            return Err(Error::InvalidParameter("matrix needs at least one row"));
        }
        let cols = row_data[0].len();
        if cols == 0 {
            return Err(Error::InvalidParameter("matrix needs at least one column"));
        }
        for r in row_data {
            if r.len() != cols {
                return Err(Error::LengthMismatch {
                    expected: cols,
                    got: r.len(),
                });
            }
        }
        let mut data = vec![0.0; rows * cols];
        for (i, r) in row_data.iter().enumerate() {
            for (j, &v) in r.iter().enumerate() {
                data[j * rows + i] = v;
            }
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Value at image row `i`, column `j`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.rows + i]
    }

    /// Column-major flat view (columns contiguous).
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Nearest-neighbor resample: output cell `(i, j)` copies the input
    /// cell at `floor(i * rows / new_rows), floor(j * cols / new_cols)`.
    /// No filtering — a convenience for shrinking large images before
    /// solving, not a fidelity tool.
    pub fn resize_nearest(&self, new_rows: usize, new_cols: usize) -> Result<GridMatrix> {
        if new_rows == 0 || new_cols == 0 {
            return Err(Error::InvalidParameter("resize target must be nonempty"));
        }
        let mut data = vec![0.0; new_rows * new_cols];
        for j in 0..new_cols {
            let src_j = j * self.cols / new_cols;
            for i in 0..new_rows {
                let src_i = i * self.rows / new_rows;
                data[j * new_rows + i] = self.get(src_i, src_j);
            }
        }
        Ok(GridMatrix {
            rows: new_rows,
            cols: new_cols,
            data,
        })
    }
}

/// Reads a matrix file. The format is explicit, never sniffed.
pub fn load_matrix(path: &Path, format: MatrixFormat) -> Result<GridMatrix> {
    let bytes = fs::read(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    match format {
        MatrixFormat::Pgm => parse_pgm(&bytes, path),
        MatrixFormat::Csv => parse_csv(&bytes, path),
    }
}

/// Flattens the image column-major and normalizes it into a strictly
/// positive unit-mass measure on an `(h1, h2)`-spaced grid via the
/// squared-signal floor normalization.
pub fn image_to_measure(img: &GridMatrix, delta: f64, h1: f64, h2: f64) -> Result<DiscreteMeasure> {
    let grid = Grid2D::new(img.rows(), img.cols(), h1, h2)?;
    let weights = normalize_signal(img.data(), delta)?;
    validate_measure(weights, grid)
}

fn parse_err(path: &Path, msg: impl Into<String>) -> Error {
    Error::ParseError {
        path: path.display().to_string(),
        msg: msg.into(),
    }
}

fn parse_csv(bytes: &[u8], path: &Path) -> Result<GridMatrix> {
    let text = std::str::from_utf8(bytes).map_err(|_| parse_err(path, "file is not valid UTF-8"))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for field in line.split(',') {
            let field = field.trim();
            let value: f64 = field
                .parse()
                .map_err(|_| parse_err(path, format!("line {}: bad number {field:?}", lineno + 1)))?;
            row.push(value);
        }
        if let Some(first) = rows.first()
            && row.len() != first.len()
        {
            return Err(parse_err(
                path,
                format!(
                    "line {}: expected {} fields, found {}",
                    lineno + 1,
                    first.len(),
                    row.len()
                ),
            ));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_err(path, "no data rows"));
    }
    GridMatrix::from_rows(&rows)
}

/// Pulls whitespace-separated header tokens, treating `#` to
/// end-of-line as a comment, and reports the byte offset just past the
/// last consumed token.
struct HeaderTokens<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderTokens<'a> {
    fn next_token(&mut self) -> Option<&'a [u8]> {
        loop {
            match self.bytes.get(self.pos) {
                Some(b'#') => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                Some(c) if c.is_ascii_whitespace() => self.pos += 1,
                Some(_) => break,
                None => return None,
            }
        }
        let start = self.pos;
        while self.pos < self.bytes.len()
            && !self.bytes[self.pos].is_ascii_whitespace()
            && self.bytes[self.pos] != b'#'
        {
            self.pos += 1;
        }
        Some(&self.bytes[start..self.pos])
    }
}

fn parse_pgm(bytes: &[u8], path: &Path) -> Result<GridMatrix> {
    let mut tokens = HeaderTokens { bytes, pos: 0 };
    let magic = tokens
        .next_token()
        .ok_or_else(|| parse_err(path, "empty file"))?;
    let binary = match magic {
        b"P2" => false,
        b"P5" => true,
        other => {
            return Err(Error::UnsupportedFormat(format!(
                "magic {:?} (only P2/P5 grayscale supported)",
                String::from_utf8_lossy(other)
            )))
        }
    };
    let mut header_num = |name: &str| -> Result<usize> {
        let tok = tokens
            .next_token()
            .ok_or_else(|| parse_err(path, format!("missing {name}")))?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse::<usize>().ok())
            .ok_or_else(|| parse_err(path, format!("bad {name}")))
    };
    let width = header_num("width")?;
    let height = header_num("height")?;
    let maxval = header_num("maxval")?;
    if width == 0 || height == 0 {
        return Err(parse_err(path, "zero image dimension"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(parse_err(path, format!("maxval {maxval} out of range 1..=65535")));
    }
    let count = width
        .checked_mul(height)
        .ok_or_else(|| parse_err(path, "image dimensions overflow"))?;

    let mut data = vec![0.0; count]; // column-major, rows = height
    if binary {
        // Exactly one whitespace byte separates maxval from the raster.
        let mut pos = tokens.pos;
        match bytes.get(pos) {
            Some(c) if c.is_ascii_whitespace() => pos += 1,
            _ => return Err(parse_err(path, "missing separator before binary raster")),
        }
        let wide = maxval > 255;
        let per = if wide { 2 } else { 1 };
        let need = count * per;
        let raster = bytes
            .get(pos..pos + need)
            .ok_or_else(|| parse_err(path, format!("raster truncated: need {need} bytes")))?;
        for idx in 0..count {
            let v = if wide {
                u16::from_be_bytes([raster[2 * idx], raster[2 * idx + 1]]) as f64
            } else {
                raster[idx] as f64
            };
            let (i, j) = (idx / width, idx % width); // stored row-major
            data[j * height + i] = v;
        }
    } else {
        for idx in 0..count {
            let tok = tokens
                .next_token()
                .ok_or_else(|| parse_err(path, format!("raster truncated at sample {idx}")))?;
            let v = std::str::from_utf8(tok)
                .ok()
                .and_then(|s| s.parse::<u64>().ok())
                .ok_or_else(|| parse_err(path, format!("bad sample at index {idx}")))?;
            let (i, j) = (idx / width, idx % width);
            data[j * height + i] = v as f64;
        }
    }
    Ok(GridMatrix {
        rows: height,
        cols: width,
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(name: &str, contents: &[u8]) -> std::path::PathBuf {
        let mut path = std::env::temp_dir();
        path.push(format!("fs1-io-test-{}-{name}", std::process::id()));
        let mut f = fs::File::create(&path).unwrap();
        f.write_all(contents).unwrap();
        path
    }

    #[test]
    fn parse_plain_pgm() {
        let path = write_temp("p2.pgm", b"P2\n# checker\n2 2\n255\n0 255 255 0\n");
        let m = load_matrix(&path, MatrixFormat::Pgm).unwrap();
        fs::remove_file(&path).ok();
        assert_eq!((m.rows(), m.cols()), (2, 2));
        assert_eq!(m.get(0, 0), 0.0);
        assert_eq!(m.get(0, 1), 255.0);
        assert_eq!(m.get(1, 0), 255.0);
        assert_eq!(m.get(1, 1), 0.0);
    }

    #[test]
    fn parse_binary_pgm_8_and_16_bit() {
        let path = write_temp("p5-8.pgm", b"P5\n3 1\n255\n\x01\x02\x03");
        let m = load_matrix(&path, MatrixFormat::Pgm).unwrap();
        fs::remove_file(&path).ok();
        assert_eq!(m.rows(), 1);
        assert_eq!((m.get(0, 0), m.get(0, 1), m.get(0, 2)), (1.0, 2.0, 3.0));

        let path = write_temp("p5-16.pgm", b"P5\n1 1\n65535\n\x01\x00");
        let m = load_matrix(&path, MatrixFormat::Pgm).unwrap();
        fs::remove_file(&path).ok();
        assert_eq!(m.get(0, 0), 256.0, "16-bit samples are big-endian");
    }

    #[test]
    fn pgm_rejects_bad_magic_and_truncation() {
        let path = write_temp("p3.ppm", b"P3\n1 1\n255\n0 0 0\n");
        assert!(matches!(
            load_matrix(&path, MatrixFormat::Pgm),
            Err(Error::UnsupportedFormat(_))
        ));
        fs::remove_file(&path).ok();

        let path = write_temp("short.pgm", b"P2\n2 2\n255\n0 255\n");
        assert!(matches!(
            load_matrix(&path, MatrixFormat::Pgm),
            Err(Error::ParseError { .. })
        ));
        fs::remove_file(&path).ok();

        let path = write_temp("big-maxval.pgm", b"P2\n1 1\n70000\n0\n");
        assert!(matches!(
            load_matrix(&path, MatrixFormat::Pgm),
            Err(Error::ParseError { .. })
        ));
        fs::remove_file(&path).ok();
    }

    #[test]
    fn parse_csv_matrix() {
        let path = write_temp("ok.csv", b"1,2\n3,4\n");
        let m = load_matrix(&path, MatrixFormat::Csv).unwrap();
        fs::remove_file(&path).ok();
        assert_eq!((m.rows(), m.cols()), (2, 2));
        assert_eq!(m.get(0, 0), 1.0);
        assert_eq!(m.get(0, 1), 2.0);
        assert_eq!(m.get(1, 0), 3.0);
        assert_eq!(m.get(1, 1), 4.0);
    }

    #[test]
    fn csv_rejects_ragged_rows() {
        let path = write_temp("ragged.csv", b"1,2\n3\n");
        assert!(matches!(
            load_matrix(&path, MatrixFormat::Csv),
            Err(Error::ParseError { .. })
        ));
        fs::remove_file(&path).ok();
    }

    #[test]
    fn missing_file_is_io_error() {
        let path = std::path::Path::new("/nonexistent/fs1/matrix.csv");
        assert!(matches!(
            load_matrix(path, MatrixFormat::Csv),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn image_to_measure_uniform_image() {
        let img = GridMatrix::from_rows(&[vec![3.0, 3.0], vec![3.0, 3.0]]).unwrap();
        let m = image_to_measure(&img, 1e-7, 1.0, 1.0).unwrap();
        for &w in m.weights() {
            assert!((w - 0.25).abs() <= 1e-12);
        }
    }

    #[test]
    fn image_to_measure_single_bright_pixel() {
        let img = GridMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let delta = 1e-7;
        let m = image_to_measure(&img, delta, 1.0, 1.0).unwrap();
        let expect_max = (1.0 + delta) / (1.0 + 4.0 * delta);
        let max = m.weights().iter().fold(0.0f64, |a, &b| a.max(b));
        assert!((max - expect_max).abs() <= 1e-12);
        assert!((m.weights().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        assert!(m.is_strictly_positive());
    }

    #[test]
    fn resize_nearest_downsamples() {
        let img = GridMatrix::from_rows(&[
            vec![1.0, 1.0, 2.0, 2.0],
            vec![1.0, 1.0, 2.0, 2.0],
            vec![3.0, 3.0, 4.0, 4.0],
            vec![3.0, 3.0, 4.0, 4.0],
        ])
        .unwrap();
        let small = img.resize_nearest(2, 2).unwrap();
        assert_eq!(small.get(0, 0), 1.0);
        assert_eq!(small.get(0, 1), 2.0);
        assert_eq!(small.get(1, 0), 3.0);
        assert_eq!(small.get(1, 1), 4.0);
    }

    #[test]
    fn from_rows_column_major_layout() {
        let m = GridMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(m.data(), &[1.0, 3.0, 2.0, 4.0], "columns contiguous");
    }
}
