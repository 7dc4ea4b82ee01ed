use std::fmt;
use std::ops::{Add, Mul, Sub};

/// Maximum supported spatial dimension.
pub const MAX_DIM: usize = 3;

/// A point in 2 or 3 dimensions.
///
/// Stored inline so that points are `Copy`; unused trailing coordinates are
/// kept at zero, which keeps derived equality meaningful.
#[derive(Clone, Copy, PartialEq)]
pub struct Point {
    coords: [f64; MAX_DIM],
    dim: u8,
}

impl Point {
    pub fn new2(x: f64, y: f64) -> Self {
        Self {
            coords: [x, y, 0.0],
            dim: 2,
        }
    }

    pub fn new3(x: f64, y: f64, z: f64) -> Self {
        Self {
            coords: [x, y, z],
            dim: 3,
        }
    }

    /// Builds a point from a slice of length 1..=3.
    ///
    /// Panics on an unsupported length; use [`Point::try_from_slice`] for
    /// untrusted input.
    pub fn from_slice(c: &[f64]) -> Self {
        Self::try_from_slice(c).expect("point dimension must be 1, 2 or 3")
    }

    pub fn try_from_slice(c: &[f64]) -> Option<Self> {
        if c.is_empty() || c.len() > MAX_DIM {
            return None;
        }
        let mut coords = [0.0; MAX_DIM];
        coords[..c.len()].copy_from_slice(c);
        Some(Self {
            coords,
            dim: c.len() as u8,
        })
    }

    pub fn zero(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim));
        Self {
            coords: [0.0; MAX_DIM],
            dim: dim as u8,
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn coords(&self) -> &[f64] {
        &self.coords[..self.dim as usize]
    }

    #[inline]
    pub fn x(&self) -> f64 {
        self.coords[0]
    }

    #[inline]
    pub fn y(&self) -> f64 {
        self.coords[1]
    }

    #[inline]
    pub fn get(&self, axis: usize) -> f64 {
        debug_assert!(axis < self.dim());
        self.coords[axis]
    }

    #[inline]
    pub fn set(&mut self, axis: usize, value: f64) {
        debug_assert!(axis < self.dim());
        self.coords[axis] = value;
    }

    pub fn is_finite(&self) -> bool {
        self.coords().iter().all(|c| c.is_finite())
    }

    #[inline]
    pub fn dot(&self, other: &Point) -> f64 {
        self.coords
            .iter()
            .zip(other.coords.iter())
            .map(|(a, b)| a * b)
            .sum()
    }

    #[inline]
    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// L-infinity norm.
    #[inline]
    pub fn norm_max(&self) -> f64 {
        self.coords().iter().fold(0.0f64, |m, c| m.max(c.abs()))
    }

    #[inline]
    pub fn dist(&self, other: &Point) -> f64 {
        (*self - *other).norm()
    }

    #[inline]
    pub fn dist_sq(&self, other: &Point) -> f64 {
        (*self - *other).norm_sq()
    }

    /// Linear interpolation `self + s * (other - self)`.
    #[inline]
    pub fn lerp(&self, other: &Point, s: f64) -> Point {
        *self + (*other - *self) * s
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Point {
        let mut out = *self;
        for c in out.coords[..self.dim()].iter_mut() {
            *c = f(*c);
        }
        out
    }
}

impl Add for Point {
    type Output = Point;

    #[inline]
    fn add(self, rhs: Point) -> Point {
        debug_assert_eq!(self.dim, rhs.dim);
        Point {
            coords: [
                self.coords[0] + rhs.coords[0],
                self.coords[1] + rhs.coords[1],
                self.coords[2] + rhs.coords[2],
            ],
            dim: self.dim,
        }
    }
}

impl Sub for Point {
    type Output = Point;

    #[inline]
    fn sub(self, rhs: Point) -> Point {
        debug_assert_eq!(self.dim, rhs.dim);
        Point {
            coords: [
                self.coords[0] - rhs.coords[0],
                self.coords[1] - rhs.coords[1],
                self.coords[2] - rhs.coords[2],
            ],
            dim: self.dim,
        }
    }
}

impl Mul<f64> for Point {
    type Output = Point;

    #[inline]
    fn mul(self, s: f64) -> Point {
        Point {
            coords: [self.coords[0] * s, self.coords[1] * s, self.coords[2] * s],
            dim: self.dim,
        }
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Point{:?}", self.coords())
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.coords().iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Distance from `p` to the closed segment `[a, b]`.
pub fn point_segment_distance(p: &Point, a: &Point, b: &Point) -> f64 {
    let ab = *b - *a;
    let len_sq = ab.norm_sq();
    if len_sq == 0.0 {
        return p.dist(a);
    }
    let s = ((*p - *a).dot(&ab) / len_sq).clamp(0.0, 1.0);
    p.dist(&a.lerp(b, s))
}
