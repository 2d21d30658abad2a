//! Synthetic test images, PGM file I/O, and PSNR.
//!
//! The test images are rasterized with integer midpoint/Manhattan rules so
//! the same spec always produces the same pixels; the repository keeps
//! golden PGM copies to pin them down. Pixels live on a [0, 1] scale
//! internally (foreground 1, background 0 by default).

use std::path::Path;

use crate::error::{Error, Result};
use crate::regularizers::ImageGrid;

/// PSNR values are capped here so identical images report a finite number.
pub const PSNR_CAP_DB: f64 = 300.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestImageKind {
    /// One-pixel-wide rhombus outline; sparse in the pixel domain.
    Diamond,
    /// One-pixel-wide midpoint-circle outline; sparse overall but with
    /// much denser extreme columns.
    Circle,
    /// Filled circle plus filled square; piecewise constant, so sparse in
    /// the gradient rather than in pixels.
    GeometricCircleSquare,
}

impl std::str::FromStr for TestImageKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "diamond" => Ok(TestImageKind::Diamond),
            "circle" => Ok(TestImageKind::Circle),
            "geometric" | "geometric_circle_square" => Ok(TestImageKind::GeometricCircleSquare),
            other => Err(Error::config(format!("unknown test image {other:?}"))),
        }
    }
}

/// Parameters for a synthetic N×N test image.
///
/// Defaults (all derived from `size`): shapes centered at `size/2` with
/// radius `3·size/8`; the geometric figure places its filled circle at
/// `(size/3, size/3)` with radius `size/7` and its filled square on
/// `[9·size/16, 13·size/16)`. Foreground 1.0, background 0.0, stroke 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestImageSpec {
    pub kind: TestImageKind,
    pub size: usize,
    pub center: Option<(usize, usize)>,
    pub radius: Option<usize>,
    pub stroke: usize,
    pub foreground: f64,
    pub background: f64,
}

impl TestImageSpec {
    pub fn new(kind: TestImageKind, size: usize) -> Self {
        TestImageSpec {
            kind,
            size,
            center: None,
            radius: None,
            stroke: 1,
            foreground: 1.0,
            background: 0.0,
        }
    }
}

/// Rasterizes the spec into an image. Shapes that do not fit in the grid
/// are rejected.
pub fn generate_test_image(spec: &TestImageSpec) -> Result<ImageGrid> {
    let n = spec.size;
    if n < 8 {
        return Err(Error::config("test images need size >= 8"));
    }
    if spec.stroke == 0 {
        return Err(Error::config("stroke must be >= 1"));
    }
    let center = spec.center.unwrap_or((n / 2, n / 2));
    let mut img = ImageGrid::new(n, n, vec![spec.background; n * n])?;
    match spec.kind {
        TestImageKind::Diamond => {
            let r = spec.radius.unwrap_or(3 * n / 8);
            check_bounds(n, center, r)?;
            draw_diamond(&mut img, center, r, spec.stroke, spec.foreground);
        }
        TestImageKind::Circle => {
            let r = spec.radius.unwrap_or(3 * n / 8);
            check_bounds(n, center, r)?;
            for t in 0..spec.stroke.min(r) {
                draw_midpoint_circle(&mut img, center, r - t, spec.foreground);
            }
        }
        TestImageKind::GeometricCircleSquare => {
            let ccenter = spec.center.unwrap_or((n / 3, n / 3));
            let cr = spec.radius.unwrap_or(n / 7);
            check_bounds(n, ccenter, cr)?;
            fill_circle(&mut img, ccenter, cr, spec.foreground);
            let lo = 9 * n / 16;
            let hi = 13 * n / 16;
            for j in lo..hi {
                for k in lo..hi {
                    img.set(j, k, spec.foreground);
                }
            }
        }
    }
    Ok(img)
}

fn check_bounds(n: usize, center: (usize, usize), r: usize) -> Result<()> {
    let (cj, ck) = center;
    if cj < r || ck < r || cj + r >= n || ck + r >= n {
        return Err(Error::config(format!(
            "shape with center ({cj}, {ck}) and radius {r} does not fit in {n}x{n}"
        )));
    }
    Ok(())
}

fn draw_diamond(img: &mut ImageGrid, center: (usize, usize), r: usize, stroke: usize, fg: f64) {
    let n = img.rows() as i64;
    let (cj, ck) = (center.0 as i64, center.1 as i64);
    let r = r as i64;
    let stroke = stroke as i64;
    for j in 0..n {
        for k in 0..n {
            let d = (j - cj).abs() + (k - ck).abs();
            if d <= r && d > r - stroke {
                img.set(j as usize, k as usize, fg);
            }
        }
    }
}

fn draw_midpoint_circle(img: &mut ImageGrid, center: (usize, usize), r: usize, fg: f64) {
    let (cj, ck) = (center.0 as i64, center.1 as i64);
    let mut x = r as i64;
    let mut y = 0i64;
    let mut err = 1 - x;
    let mut plot = |j: i64, k: i64| {
        if j >= 0 && k >= 0 && (j as usize) < img.rows() && (k as usize) < img.cols() {
            img.set(j as usize, k as usize, fg);
        }
    };
    while y <= x {
        plot(cj + y, ck + x);
        plot(cj + y, ck - x);
        plot(cj - y, ck + x);
        plot(cj - y, ck - x);
        plot(cj + x, ck + y);
        plot(cj + x, ck - y);
        plot(cj - x, ck + y);
        plot(cj - x, ck - y);
        y += 1;
        if err < 0 {
            err += 2 * y + 1;
        } else {
            x -= 1;
            err += 2 * (y - x) + 1;
        }
    }
}

fn fill_circle(img: &mut ImageGrid, center: (usize, usize), r: usize, fg: f64) {
    let (cj, ck) = (center.0 as i64, center.1 as i64);
    let rr = (r * r) as i64;
    for j in 0..img.rows() as i64 {
        for k in 0..img.cols() as i64 {
            if (j - cj).pow(2) + (k - ck).pow(2) <= rr {
                img.set(j as usize, k as usize, fg);
            }
        }
    }
}

/// 10·log₁₀(peak²/MSE) in dB, capped at [`PSNR_CAP_DB`] for identical
/// images.
pub fn psnr(a: &ImageGrid, b: &ImageGrid, peak: f64) -> Result<f64> {
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(Error::dimension(format!(
            "psnr: {}x{} vs {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    if peak <= 0.0 {
        return Err(Error::config("psnr peak must be > 0"));
    }
    let n = (a.rows() * a.cols()) as f64;
    let mse: f64 = a
        .pixels()
        .iter()
        .zip(b.pixels())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / n;
    if mse == 0.0 {
        return Ok(PSNR_CAP_DB);
    }
    Ok((10.0 * (peak * peak / mse).log10()).min(PSNR_CAP_DB))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgmFormat {
    /// P2, ASCII samples.
    Ascii,
    /// P5, binary samples (two big-endian bytes when maxval > 255).
    Binary,
}

/// Writes an image as PGM. Pixels are clamped to [0, 1] and quantized to
/// `round(p · maxval)`.
pub fn write_pgm(
    img: &ImageGrid,
    path: impl AsRef<Path>,
    maxval: u16,
    format: PgmFormat,
) -> Result<()> {
    if maxval == 0 {
        return Err(Error::config("pgm maxval must be >= 1"));
    }
    let quant = |p: f64| -> u16 { (p.clamp(0.0, 1.0) * maxval as f64).round() as u16 };
    let mut bytes: Vec<u8> = Vec::new();
    let magic = match format {
        PgmFormat::Ascii => "P2",
        PgmFormat::Binary => "P5",
    };
    bytes.extend_from_slice(
        format!("{magic}\n{} {}\n{}\n", img.cols(), img.rows(), maxval).as_bytes(),
    );
    match format {
        PgmFormat::Ascii => {
            for j in 0..img.rows() {
                let row: Vec<String> = (0..img.cols())
                    .map(|k| quant(img.get(j, k)).to_string())
                    .collect();
                bytes.extend_from_slice(row.join(" ").as_bytes());
                bytes.push(b'\n');
            }
        }
        PgmFormat::Binary => {
            for j in 0..img.rows() {
                for k in 0..img.cols() {
                    let q = quant(img.get(j, k));
                    if maxval > 255 {
                        bytes.extend_from_slice(&q.to_be_bytes());
                    } else {
                        bytes.push(q as u8);
                    }
                }
            }
        }
    }
    std::fs::write(path, bytes)?;
    Ok(())
}

/// Reads a P2 or P5 PGM into a [0, 1]-scaled image.
pub fn read_pgm(path: impl AsRef<Path>) -> Result<ImageGrid> {
    let bytes = std::fs::read(&path)?;
    parse_pgm(&bytes)
}

pub fn parse_pgm(bytes: &[u8]) -> Result<ImageGrid> {
    let mut pos = 0usize;

    let next_token = |pos: &mut usize| -> Result<String> {
        // Skip whitespace and '#' comments.
        loop {
            while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            if *pos < bytes.len() && bytes[*pos] == b'#' {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
                continue;
            }
            break;
        }
        let start = *pos;
        while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if start == *pos {
            return Err(Error::format("unexpected end of PGM header"));
        }
        Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
    };

    let magic = next_token(&mut pos)?;
    if magic != "P2" && magic != "P5" {
        return Err(Error::format(format!("unsupported PGM magic {magic:?}")));
    }
    let width: usize = next_token(&mut pos)?
        .parse()
        .map_err(|_| Error::format("bad PGM width"))?;
    let height: usize = next_token(&mut pos)?
        .parse()
        .map_err(|_| Error::format("bad PGM height"))?;
    let maxval: u32 = next_token(&mut pos)?
        .parse()
        .map_err(|_| Error::format("bad PGM maxval"))?;
    if width == 0 || height == 0 {
        return Err(Error::format("PGM dimensions must be >= 1"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::format(format!("PGM maxval {maxval} out of range")));
    }

    let count = width * height;
    let mut samples: Vec<u32> = Vec::with_capacity(count);
    if magic == "P2" {
        for _ in 0..count {
            let v: u32 = next_token(&mut pos)?
                .parse()
                .map_err(|_| Error::format("bad PGM sample"))?;
            samples.push(v);
        }
    } else {
        // Exactly one whitespace byte separates the header from the raster.
        if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
            return Err(Error::format("missing separator before PGM raster"));
        }
        pos += 1;
        let per = if maxval > 255 { 2 } else { 1 };
        if bytes.len() < pos + count * per {
            return Err(Error::format("PGM raster truncated"));
        }
        for i in 0..count {
            let v = if per == 2 {
                u32::from(bytes[pos + 2 * i]) << 8 | u32::from(bytes[pos + 2 * i + 1])
            } else {
                u32::from(bytes[pos + i])
            };
            samples.push(v);
        }
    }
    if let Some(&bad) = samples.iter().find(|&&v| v > maxval) {
        return Err(Error::format(format!(
            "PGM sample {bad} exceeds maxval {maxval}"
        )));
    }
    let pixels: Vec<f64> = samples.iter().map(|&v| v as f64 / maxval as f64).collect();
    ImageGrid::new(height, width, pixels)
}

/// Fraction of pixels that differ from the background by more than `tol`.
pub fn nonzero_fraction(img: &ImageGrid, background: f64, tol: f64) -> f64 {
    let nz = img
        .pixels()
        .iter()
        .filter(|&&p| (p - background).abs() > tol)
        .count();
    nz as f64 / (img.rows() * img.cols()) as f64
}
