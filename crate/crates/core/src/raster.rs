//! Dense regular grids of nonnegative integers.
//!
//! Axis 0 varies fastest in the flat value array. Cell `i` along an axis has
//! its center at `origin + (i + 0.5) * cell_size`.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::point::Point;

#[derive(Clone, Debug, PartialEq)]
pub struct Raster {
    origin: Point,
    cell_size: f64,
    shape: Vec<usize>,
    values: Vec<u32>,
}

impl Raster {
    pub fn zeros(origin: Point, cell_size: f64, shape: Vec<usize>) -> Result<Self> {
        if !(cell_size > 0.0 && cell_size.is_finite()) {
            return Err(Error::Parameter(format!(
                "cell size must be positive, got {cell_size}"
            )));
        }
        if shape.len() != origin.dim() || shape.iter().any(|&n| n == 0) {
            return Err(Error::Parameter(format!(
                "raster shape {shape:?} does not match a {}-d origin",
                origin.dim()
            )));
        }
        let n = shape.iter().product();
        Ok(Self {
            origin,
            cell_size,
            shape,
            values: vec![0; n],
        })
    }

    /// Grid of `resolution` cells per axis covering the cube of half-side
    /// `half_side` around `center`.
    pub fn covering(center: Point, half_side: f64, resolution: usize) -> Result<Self> {
        if resolution == 0 {
            return Err(Error::Parameter("resolution must be positive".into()));
        }
        let origin = center.map(|c| c - half_side);
        Self::zeros(
            origin,
            2.0 * half_side / resolution as f64,
            vec![resolution; center.dim()],
        )
    }

    /// An all-zero grid with the same geometry.
    pub fn like(&self) -> Self {
        Self {
            origin: self.origin,
            cell_size: self.cell_size,
            shape: self.shape.clone(),
            values: vec![0; self.values.len()],
        }
    }

    pub fn origin(&self) -> Point {
        self.origin
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [u32] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.iter().all(|&v| v == 0)
    }

    /// Multi-index of flat index `i`.
    pub fn unflatten(&self, mut i: usize) -> [usize; 3] {
        let mut out = [0; 3];
        for (a, &n) in self.shape.iter().enumerate() {
            out[a] = i % n;
            i /= n;
        }
        out
    }

    pub fn flatten(&self, idx: &[usize]) -> usize {
        let mut flat = 0;
        for a in (0..self.shape.len()).rev() {
            flat = flat * self.shape[a] + idx[a];
        }
        flat
    }

    pub fn cell_center(&self, flat: usize) -> Point {
        let idx = self.unflatten(flat);
        let mut p = self.origin;
        for a in 0..self.dim() {
            p.set(
                a,
                self.origin.get(a) + (idx[a] as f64 + 0.5) * self.cell_size,
            );
        }
        p
    }

    pub fn get(&self, idx: &[usize]) -> u32 {
        self.values[self.flatten(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: u32) {
        let f = self.flatten(idx);
        self.values[f] = v;
    }

    pub fn max_value(&self) -> u32 {
        self.values.iter().copied().max().unwrap_or(0)
    }

    pub fn count_nonzero(&self) -> usize {
        self.values.iter().filter(|&&v| v > 0).count()
    }

    /// Sets to 1 every cell whose center lies in the closed ball
    /// `B_radius(center)`.
    pub fn stamp_ball(&mut self, center: &Point, radius: f64) {
        let d = self.dim();
        let mut lo = [0usize; 3];
        let mut hi = [0usize; 3];
        for a in 0..d {
            let rel_lo = (center.get(a) - radius - self.origin.get(a)) / self.cell_size - 0.5;
            let rel_hi = (center.get(a) + radius - self.origin.get(a)) / self.cell_size - 0.5;
            let n = self.shape[a] as f64;
            if rel_hi < 0.0 || rel_lo > n - 1.0 {
                return;
            }
            lo[a] = rel_lo.ceil().max(0.0) as usize;
            hi[a] = (rel_hi.floor().min(n - 1.0)) as usize;
            if lo[a] > hi[a] {
                return;
            }
        }
        let r2 = radius * radius;
        let mut idx = lo;
        loop {
            let mut dist2 = 0.0;
            for a in 0..d {
                let c = self.origin.get(a) + (idx[a] as f64 + 0.5) * self.cell_size;
                dist2 += (c - center.get(a)) * (c - center.get(a));
            }
            if dist2 <= r2 {
                let f = self.flatten(&idx[..d]);
                self.values[f] = 1;
            }
            // odometer over the box
            let mut a = 0;
            loop {
                if a == d {
                    return;
                }
                if idx[a] < hi[a] {
                    idx[a] += 1;
                    break;
                }
                idx[a] = lo[a];
                a += 1;
            }
        }
    }

    /// Binary raster of cells whose value exceeds `tau`.
    pub fn threshold(&self, tau: u32) -> Raster {
        let mut out = self.like();
        for (o, &v) in out.values.iter_mut().zip(&self.values) {
            *o = u32::from(v > tau);
        }
        out
    }

    fn check_same_grid(&self, other: &Raster) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::Domain(format!(
                "raster shapes differ: {:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        Ok(())
    }

    /// Intersection over union of the nonzero cells. Two empty rasters have
    /// overlap 1.
    pub fn jaccard(&self, other: &Raster) -> Result<f64> {
        self.check_same_grid(other)?;
        let (mut inter, mut union) = (0usize, 0usize);
        for (&a, &b) in self.values.iter().zip(&other.values) {
            let (a, b) = (a > 0, b > 0);
            inter += usize::from(a && b);
            union += usize::from(a || b);
        }
        Ok(if union == 0 {
            1.0
        } else {
            inter as f64 / union as f64
        })
    }

    /// Whether every nonzero cell of `self` is nonzero in `other`.
    pub fn is_subset_of(&self, other: &Raster) -> Result<bool> {
        self.check_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .all(|(&a, &b)| a == 0 || b > 0))
    }

    fn neighbors_2d(&self, i: usize, eight: bool, out: &mut Vec<usize>) {
        out.clear();
        let (nx, ny) = (self.shape[0] as isize, self.shape[1] as isize);
        let (x, y) = ((i % nx as usize) as isize, (i / nx as usize) as isize);
        for dy in -1..=1isize {
            for dx in -1..=1isize {
                if (dx == 0 && dy == 0) || (!eight && dx != 0 && dy != 0) {
                    continue;
                }
                let (xx, yy) = (x + dx, y + dy);
                if xx >= 0 && yy >= 0 && xx < nx && yy < ny {
                    out.push((yy * nx + xx) as usize);
                }
            }
        }
    }

    /// Labels connected components of cells where `fg(value)` holds.
    /// Returns the label per cell (0 = background) and the component count.
    fn label_2d(&self, eight: bool, fg: impl Fn(u32) -> bool) -> (Vec<u32>, usize) {
        let mut labels = vec![0u32; self.values.len()];
        let mut count = 0;
        let mut queue = VecDeque::new();
        let mut nb = Vec::with_capacity(8);
        for start in 0..self.values.len() {
            if labels[start] != 0 || !fg(self.values[start]) {
                continue;
            }
            count += 1;
            labels[start] = count as u32;
            queue.push_back(start);
            while let Some(i) = queue.pop_front() {
                self.neighbors_2d(i, eight, &mut nb);
                for &j in &nb {
                    if labels[j] == 0 && fg(self.values[j]) {
                        labels[j] = count as u32;
                        queue.push_back(j);
                    }
                }
            }
        }
        (labels, count)
    }

    /// Number of 8-connected foreground components of a 2-d raster.
    pub fn components(&self) -> Result<usize> {
        self.require_2d()?;
        Ok(self.label_2d(true, |v| v > 0).1)
    }

    /// Number of holes of a 2-d raster: 4-connected background components
    /// that do not touch the grid border (dual to 8-connected foreground).
    pub fn holes(&self) -> Result<usize> {
        self.require_2d()?;
        let (labels, count) = self.label_2d(false, |v| v == 0);
        let mut touches = vec![false; count + 1];
        let (nx, ny) = (self.shape[0], self.shape[1]);
        for (i, &l) in labels.iter().enumerate() {
            let (x, y) = (i % nx, i / nx);
            if l > 0 && (x == 0 || y == 0 || x + 1 == nx || y + 1 == ny) {
                touches[l as usize] = true;
            }
        }
        Ok(touches[1..].iter().filter(|&&t| !t).count())
    }

    fn require_2d(&self) -> Result<()> {
        if self.dim() != 2 {
            return Err(Error::Domain(format!(
                "operation needs a 2-d raster, got {}-d",
                self.dim()
            )));
        }
        Ok(())
    }

    /// Plain-text portable anymap: `P1` when every value is 0/1, `P2`
    /// otherwise. Rows run from the top (largest y) down; a comment line
    /// carries the origin and cell size.
    pub fn to_pnm(&self) -> Result<String> {
        self.anymap(self.values.iter().all(|&v| v <= 1))
    }

    /// Always-grayscale (`P2`) variant of [`Raster::to_pnm`].
    pub fn to_pgm(&self) -> Result<String> {
        self.anymap(false)
    }

    pub fn write_pgm(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_pgm()?).map_err(|e| Error::io(path, e))
    }

    fn anymap(&self, binary: bool) -> Result<String> {
        self.require_2d()?;
        let (nx, ny) = (self.shape[0], self.shape[1]);
        let mut s = String::new();
        s.push_str(if binary { "P1\n" } else { "P2\n" });
        let _ = writeln!(
            s,
            "# origin {} {} cell_size {}",
            self.origin.x(),
            self.origin.y(),
            self.cell_size
        );
        let _ = writeln!(s, "{nx} {ny}");
        if !binary {
            let _ = writeln!(s, "{}", self.max_value().clamp(1, 65535));
        }
        for y in (0..ny).rev() {
            let row: Vec<String> = (0..nx)
                .map(|x| self.values[y * nx + x].min(65535).to_string())
                .collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        Ok(s)
    }

    pub fn write_pnm(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_pnm()?).map_err(|e| Error::io(path, e))
    }

    /// Parses the output of [`Raster::to_pnm`].
    pub fn from_pnm(text: &str, path: &Path) -> Result<Self> {
        let mut origin = None;
        let mut cell = None;
        let mut tokens: Vec<(usize, &str)> = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            if let Some(c) = line.trim_start().strip_prefix('#') {
                let w: Vec<&str> = c.split_whitespace().collect();
                if let ["origin", x, y, "cell_size", cs] = w[..] {
                    let f = |s: &str| {
                        s.parse::<f64>()
                            .map_err(|e| Error::parse(path, ln + 1, e.to_string()))
                    };
                    origin = Some(Point::new2(f(x)?, f(y)?));
                    cell = Some(f(cs)?);
                }
                continue;
            }
            tokens.extend(line.split_whitespace().map(|t| (ln + 1, t)));
        }
        let mut it = tokens.into_iter();
        let magic = it
            .next()
            .ok_or_else(|| Error::parse(path, 1, "empty file"))?;
        let binary = match magic.1 {
            "P1" => true,
            "P2" => false,
            m => {
                return Err(Error::parse(
                    path,
                    magic.0,
                    format!("unsupported magic {m}"),
                ))
            }
        };
        let mut num = |what: &str| -> Result<usize> {
            let (ln, t) = it
                .next()
                .ok_or_else(|| Error::parse(path, 0, format!("missing {what}")))?;
            t.parse::<usize>()
                .map_err(|e| Error::parse(path, ln, format!("bad {what} {t:?}: {e}")))
        };
        let nx = num("width")?;
        let ny = num("height")?;
        if !binary {
            num("maxval")?;
        }
        let mut r = Raster::zeros(
            origin.unwrap_or(Point::new2(0.0, 0.0)),
            cell.unwrap_or(1.0),
            vec![nx, ny],
        )?;
        for y in (0..ny).rev() {
            for x in 0..nx {
                r.values[y * nx + x] = num("pixel")? as u32;
            }
        }
        Ok(r)
    }
}
