//! 1D and 2D transfer functions and their file formats.

use std::ops::{Add, AddAssign, Mul};
use std::path::Path;

use crate::{Error, Result};

/// Color and opacity, all channels nominally in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Rgba(pub [f64; 4]);

impl Rgba {
    pub const TRANSPARENT: Rgba = Rgba([0.0; 4]);

    pub const fn new(r: f64, g: f64, b: f64, a: f64) -> Self {
        Self([r, g, b, a])
    }

    pub const fn splat(v: f64) -> Self {
        Self([v; 4])
    }

    pub fn alpha(&self) -> f64 {
        self.0[3]
    }

    pub fn rgb_mean(&self) -> f64 {
        (self.0[0] + self.0[1] + self.0[2]) / 3.0
    }

    pub fn lerp(self, other: Rgba, t: f64) -> Rgba {
        Rgba(std::array::from_fn(|c| self.0[c] + t * (other.0[c] - self.0[c])))
    }

    pub fn max_abs_diff(&self, other: &Rgba) -> f64 {
        (0..4).map(|c| (self.0[c] - other.0[c]).abs()).fold(0.0, f64::max)
    }
}

impl Add for Rgba {
    type Output = Rgba;
    fn add(self, o: Rgba) -> Rgba {
        Rgba(std::array::from_fn(|c| self.0[c] + o.0[c]))
    }
}

impl AddAssign for Rgba {
    fn add_assign(&mut self, o: Rgba) {
        for c in 0..4 {
            self.0[c] += o.0[c];
        }
    }
}

impl Mul<f64> for Rgba {
    type Output = Rgba;
    fn mul(self, s: f64) -> Rgba {
        Rgba(self.0.map(|v| v * s))
    }
}

fn check_channels(c: &Rgba) -> Result<()> {
    if c.0.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::invalid(format!("channel outside [0, 1]: {:?}", c.0)));
    }
    Ok(())
}

/// Piecewise-linear map from intensity to RGBA, constant outside its
/// control points.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferFunction1D {
    xs: Vec<f64>,
    colors: Vec<Rgba>,
}

impl TransferFunction1D {
    pub fn new(points: Vec<(f64, Rgba)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("transfer function without control points"));
        }
        for (x, c) in &points {
            if !(0.0..=1.0).contains(x) {
                return Err(Error::invalid(format!("control point intensity {x} outside [0, 1]")));
            }
            check_channels(c)?;
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::invalid("control point intensities must increase strictly"));
        }
        let (xs, colors) = points.into_iter().unzip();
        Ok(Self { xs, colors })
    }

    pub fn constant(c: Rgba) -> Result<Self> {
        Self::new(vec![(0.0, c)])
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, Rgba)> + '_ {
        self.xs.iter().copied().zip(self.colors.iter().copied())
    }

    /// Index of the last control point at or below `x`, if any.
    #[inline]
    fn segment(&self, x: f64) -> Option<usize> {
        self.xs.partition_point(|&p| p <= x).checked_sub(1)
    }

    #[inline]
    pub fn eval(&self, x: f64) -> Rgba {
        let n = self.xs.len();
        match self.segment(x) {
            None => self.colors[0],
            Some(j) if j + 1 == n => self.colors[n - 1],
            Some(j) => {
                let t = (x - self.xs[j]) / (self.xs[j + 1] - self.xs[j]);
                self.colors[j].lerp(self.colors[j + 1], t)
            }
        }
    }

    /// Exact average of the TF over `[a, b]`; `TF(a)` when `a == b`.
    pub fn average(&self, a: f64, b: f64) -> Rgba {
        if !(b > a) {
            return self.eval(a);
        }
        let mut acc = Rgba::TRANSPARENT;
        let mut x = a;
        let mut fx = self.eval(a);
        // walk the control points strictly inside (a, b)
        let start = self.xs.partition_point(|&p| p <= a);
        for k in start..self.xs.len() {
            let p = self.xs[k];
            if p >= b {
                break;
            }
            let fp = self.colors[k];
            acc += (fx + fp) * (0.5 * (p - x));
            x = p;
            fx = fp;
        }
        let fb = self.eval(b);
        acc += (fx + fb) * (0.5 * (b - x));
        acc * (1.0 / (b - a))
    }

    /// Text form: one `intensity r g b a` line per control point, `#` starts
    /// a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut points = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::format(format!("line {}: {e}", n + 1)))?;
            if vals.len() != 5 {
                return Err(Error::format(format!(
                    "line {}: expected 5 values, found {}",
                    n + 1,
                    vals.len()
                )));
            }
            points.push((vals[0], Rgba::new(vals[1], vals[2], vals[3], vals[4])));
        }
        Self::new(points)
    }

    pub fn to_text(&self) -> String {
        self.points()
            .map(|(x, c)| format!("{x} {} {} {} {}\n", c.0[0], c.0[1], c.0[2], c.0[3]))
            .collect()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

/// RGBA table over intensity (rows, `[0, 1]`) and gradient magnitude
/// (columns, `[0, gmax]`), looked up bilinearly between nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferFunction2D {
    rows: usize,
    cols: usize,
    gmax: f64,
    table: Vec<Rgba>,
}

impl TransferFunction2D {
    pub fn new(rows: usize, cols: usize, gmax: f64, table: Vec<Rgba>) -> Result<Self> {
        if rows < 2 || cols < 2 {
            return Err(Error::invalid(format!("2D TF needs at least 2x2 nodes, got {rows}x{cols}")));
        }
        if !(gmax.is_finite() && gmax > 0.0) {
            return Err(Error::invalid(format!("gmax must be positive, got {gmax}")));
        }
        if table.len() != rows * cols {
            return Err(Error::invalid(format!(
                "2D TF table has {} entries, expected {}",
                table.len(),
                rows * cols
            )));
        }
        table.iter().try_for_each(check_channels)?;
        Ok(Self {
            rows,
            cols,
            gmax,
            table,
        })
    }

    /// Samples `f(intensity, gradient)` at the nodes.
    pub fn from_fn(rows: usize, cols: usize, gmax: f64, f: impl Fn(f64, f64) -> Rgba) -> Result<Self> {
        let mut table = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                let x = r as f64 / (rows.max(2) - 1) as f64;
                let y = gmax * c as f64 / (cols.max(2) - 1) as f64;
                table.push(f(x, y));
            }
        }
        Self::new(rows, cols, gmax, table)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn gmax(&self) -> f64 {
        self.gmax
    }

    pub fn table(&self) -> &[Rgba] {
        &self.table
    }

    /// Both coordinates are clamped into the table domain.
    #[inline]
    pub fn eval(&self, x: f64, y: f64) -> Rgba {
        let u = x.clamp(0.0, 1.0) * (self.rows - 1) as f64;
        let v = (y / self.gmax).clamp(0.0, 1.0) * (self.cols - 1) as f64;
        let r = (u.floor() as usize).min(self.rows - 2);
        let c = (v.floor() as usize).min(self.cols - 2);
        let (tu, tv) = (u - r as f64, v - c as f64);
        let at = |r: usize, c: usize| self.table[r * self.cols + c];
        let top = at(r, c).lerp(at(r, c + 1), tv);
        let bottom = at(r + 1, c).lerp(at(r + 1, c + 1), tv);
        top.lerp(bottom, tu)
    }

    /// Header line `rows cols gmax`, then row-major RGBA as little-endian f32.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = format!("{} {} {}\n", self.rows, self.cols, self.gmax).into_bytes();
        for c in &self.table {
            for v in c.0 {
                out.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let nl = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::format("2D TF header line missing"))?;
        let header = std::str::from_utf8(&bytes[..nl]).map_err(|_| Error::format("2D TF header is not text"))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::format(format!("2D TF header needs `rows cols gmax`, got {header:?}")));
        }
        let rows: usize = fields[0].parse().map_err(|_| Error::format("bad row count"))?;
        let cols: usize = fields[1].parse().map_err(|_| Error::format("bad column count"))?;
        let gmax: f64 = fields[2].parse().map_err(|_| Error::format("bad gmax"))?;
        let body = &bytes[nl + 1..];
        let expected = rows
            .checked_mul(cols)
            .and_then(|n| n.checked_mul(16))
            .ok_or_else(|| Error::format("2D TF dimensions overflow"))?;
        if body.len() != expected {
            return Err(Error::format(format!(
                "2D TF body has {} bytes, expected {expected}",
                body.len()
            )));
        }
        let table = body
            .chunks_exact(16)
            .map(|c| {
                Rgba(std::array::from_fn(|k| {
                    f32::from_le_bytes(c[4 * k..4 * k + 4].try_into().unwrap()) as f64
                }))
            })
            .collect();
        Self::new(rows, cols, gmax, table)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }
}
