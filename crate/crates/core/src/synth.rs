//! Seeded synthetic data: closed reference shapes with normal-direction
//! noise, and noisy vehicle trips over a street grid.
//!
//! All randomness comes from `ChaCha8Rng::seed_from_u64`, so output is
//! identical across platforms for a given seed.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::io::Write as _;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::counts::perturb::sample_normals;
use crate::error::{Error, Result};
use crate::point::Point;
use crate::trajectory::Trajectory;

/// Constant vehicle speed of [`grid_map_traces`], in units per second.
pub const TRIP_SPEED: f64 = 10.0;

/// Width of one noise pulse, as a fraction of a revolution.
pub const PULSE_WIDTH: f64 = 1.0 / 200.0;

pub const DEFAULT_PTS_PER_CYCLE: usize = 500;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ShapeSpec {
    Circle {
        radius: f64,
    },
    Ellipse {
        semi_major: f64,
        semi_minor: f64,
    },
    /// Lemniscate of Bernoulli reaching `x = ±a`.
    Lemniscate {
        a: f64,
    },
    /// Cassini oval with foci at `(±a, 0)` and distance product `b^2`,
    /// x-rescaled to `[-1, 1]`. Requires `a < b` so the curve is connected.
    Cassini {
        a: f64,
        b: f64,
    },
}

impl ShapeSpec {
    pub fn circle() -> Self {
        Self::Circle { radius: 1.0 }
    }

    pub fn ellipse() -> Self {
        Self::Ellipse {
            semi_major: 1.0,
            semi_minor: 0.5,
        }
    }

    pub fn lemniscate() -> Self {
        Self::Lemniscate { a: 1.0 }
    }

    /// The peanut-shaped oval.
    pub fn cassini() -> Self {
        Self::Cassini { a: 0.92, b: 1.0 }
    }

    /// The four standard shapes.
    pub fn all() -> [Self; 4] {
        [
            Self::circle(),
            Self::ellipse(),
            Self::lemniscate(),
            Self::cassini(),
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Circle { .. } => "circle",
            Self::Ellipse { .. } => "ellipse",
            Self::Lemniscate { .. } => "lemniscate",
            Self::Cassini { .. } => "cassini",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Circle { radius } => radius > 0.0,
            Self::Ellipse {
                semi_major,
                semi_minor,
            } => semi_major > 0.0 && semi_minor > 0.0,
            Self::Lemniscate { a } => a > 0.0,
            Self::Cassini { a, b } => a > 0.0 && b > a,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Parameter(format!(
                "invalid shape parameters {self:?}"
            )))
        }
    }

    /// Point at revolution fraction `u` in `[0, 1)`.
    pub fn point_at(&self, u: f64) -> Point {
        let th = TAU * u;
        match *self {
            Self::Circle { radius } => Point::new2(radius * th.cos(), radius * th.sin()),
            Self::Ellipse {
                semi_major,
                semi_minor,
            } => Point::new2(semi_major * th.cos(), semi_minor * th.sin()),
            Self::Lemniscate { a } => {
                let (s, c) = th.sin_cos();
                let q = 1.0 + s * s;
                Point::new2(a * c / q, a * s * c / q)
            }
            Self::Cassini { a, b } => {
                let (a2, b2) = (a * a, b * b);
                let s2 = (2.0 * th).sin();
                let r2 = a2 * (2.0 * th).cos() + (b2 * b2 - a2 * a2 * s2 * s2).sqrt();
                let r = r2.max(0.0).sqrt();
                let x_scale = 1.0 / (a2 + b2).sqrt();
                Point::new2(r * th.cos() * x_scale, r * th.sin())
            }
        }
    }

    /// Harmonic amplitude range used for this shape by default.
    pub fn default_harmonic_range(&self) -> (f64, f64) {
        match self {
            Self::Cassini { .. } => (0.05, 0.1),
            _ => (0.02, 0.07),
        }
    }
}

impl FromStr for ShapeSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "circle" => Ok(Self::circle()),
            "ellipse" => Ok(Self::ellipse()),
            "lemniscate" | "eight" => Ok(Self::lemniscate()),
            "cassini" | "peanut" => Ok(Self::cassini()),
            other => Err(Error::Parameter(format!("unknown shape {other:?}"))),
        }
    }
}

impl fmt::Display for ShapeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec {
    pub harmonic_amp_range: (f64, f64),
    pub pulse_count_range: (u32, u32),
    pub pulse_mag_range: (f64, f64),
    pub seed: u64,
}

impl NoiseSpec {
    /// Default noise for `shape`: 10 to 80 pulses of magnitude 0.1 to 0.5
    /// on top of a shape-dependent harmonic.
    pub fn for_shape(shape: &ShapeSpec, seed: u64) -> Self {
        Self {
            harmonic_amp_range: shape.default_harmonic_range(),
            pulse_count_range: (10, 80),
            pulse_mag_range: (0.1, 0.5),
            seed,
        }
    }

    pub fn none(seed: u64) -> Self {
        Self {
            harmonic_amp_range: (0.0, 0.0),
            pulse_count_range: (0, 0),
            pulse_mag_range: (0.0, 0.0),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (h0, h1) = self.harmonic_amp_range;
        let (c0, c1) = self.pulse_count_range;
        let (m0, m1) = self.pulse_mag_range;
        if !(0.0 <= h0 && h0 <= h1 && h1.is_finite())
            || c0 > c1
            || !(0.0 <= m0 && m0 <= m1 && m1.is_finite())
        {
            return Err(Error::Parameter(format!("invalid noise ranges {self:?}")));
        }
        Ok(())
    }

    /// Largest possible displacement from the reference curve.
    pub fn max_displacement(&self) -> f64 {
        self.harmonic_amp_range.1 + self.pulse_mag_range.1
    }
}

fn check_sampling(cycles: usize, pts_per_cycle: usize) -> Result<()> {
    if cycles == 0 {
        return Err(Error::Parameter("cycles must be positive".into()));
    }
    if pts_per_cycle < 16 {
        return Err(Error::Parameter(format!(
            "pts_per_cycle must be at least 16, got {pts_per_cycle}"
        )));
    }
    Ok(())
}

/// The noiseless shape traversed `cycles` times with `pts_per_cycle`
/// samples per revolution, at times `i / pts_per_cycle`. Every revolution
/// repeats the same sample points exactly.
pub fn reference_trajectory(
    shape: &ShapeSpec,
    cycles: usize,
    pts_per_cycle: usize,
) -> Result<Trajectory> {
    shape.validate()?;
    check_sampling(cycles, pts_per_cycle)?;
    let one: Vec<Point> = (0..pts_per_cycle)
        .map(|i| shape.point_at(i as f64 / pts_per_cycle as f64))
        .collect();
    let n = cycles * pts_per_cycle;
    let points = (0..n).map(|i| one[i % pts_per_cycle]).collect();
    let times = (0..n).map(|i| i as f64 / pts_per_cycle as f64).collect();
    Trajectory::new(format!("{}-ref", shape.name()), times, points)
}

/// Displacement profile along the normal, as a function of the
/// revolution parameter `u` in `[0, cycles)`.
struct NoiseProfile {
    amp: f64,
    freq: f64,
    phase: f64,
    /// `(center, signed magnitude)`, sorted by center.
    pulses: Vec<(f64, f64)>,
}

impl NoiseProfile {
    fn draw(noise: &NoiseSpec, cycles: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
        let (h0, h1) = noise.harmonic_amp_range;
        let amp = if h1 > h0 {
            rng.random_range(h0..=h1)
        } else {
            h0
        };
        let freq = rng.random_range(2..=9) as f64;
        let phase = rng.random_range(0.0..TAU);
        let (c0, c1) = noise.pulse_count_range;
        let n_pulses = rng.random_range(c0..=c1) as usize;
        let span = cycles as f64;
        // a pulse can only fit where its support does not overlap another
        let capacity = (span / PULSE_WIDTH) as usize / 2;
        let n_pulses = n_pulses.min(capacity);
        let (m0, m1) = noise.pulse_mag_range;
        let mut pulses: Vec<(f64, f64)> = Vec::with_capacity(n_pulses);
        while pulses.len() < n_pulses {
            let c = rng.random_range(0.0..span);
            let mag = if m1 > m0 {
                rng.random_range(m0..=m1)
            } else {
                m0
            };
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            if pulses.iter().all(|&(o, _)| (o - c).abs() >= PULSE_WIDTH) {
                pulses.push((c, sign * mag));
            }
        }
        pulses.sort_by(|x, y| x.0.total_cmp(&y.0));
        Self {
            amp,
            freq,
            phase,
            pulses,
        }
    }

    fn at(&self, u: f64) -> f64 {
        let mut d = self.amp * (TAU * self.freq * u + self.phase).sin();
        let half = PULSE_WIDTH / 2.0;
        let first = self.pulses.partition_point(|p| p.0 < u - half);
        for &(c, mag) in self.pulses[first..].iter().take_while(|p| p.0 <= u + half) {
            d += mag * 0.5 * (1.0 + (2.0 * PI * (u - c) / PULSE_WIDTH).cos());
        }
        d
    }
}

/// Reference trajectory displaced along the unit normal by a seeded
/// harmonic plus non-overlapping raised-cosine pulses of random sign.
pub fn noisy_sample(
    shape: &ShapeSpec,
    noise: &NoiseSpec,
    cycles: usize,
    pts_per_cycle: usize,
) -> Result<Trajectory> {
    noise.validate()?;
    let reference = reference_trajectory(shape, cycles, pts_per_cycle)?;
    let profile = NoiseProfile::draw(noise, cycles);
    let normals = sample_normals(reference.points());
    let points = reference
        .points()
        .iter()
        .zip(&normals)
        .zip(reference.times())
        .map(|((p, n), &u)| *p + *n * profile.at(u))
        .collect();
    Trajectory::new(
        format!("{}-s{}", shape.name(), noise.seed),
        reference.times().to_vec(),
        points,
    )
}

/// Simulated trips over a street grid with nodes at
/// `(i * spacing, j * spacing)`, `i < cols`, `j < rows`.
///
/// Each trip runs between two distinct random nodes along a random
/// monotone staircase route (a shortest path in the grid), at
/// [`TRIP_SPEED`], sampled every `sample_period` seconds plus the arrival,
/// with isotropic Gaussian noise of standard deviation `gps_sigma`. Routes
/// depend only on the seed, not on `gps_sigma`.
pub fn grid_map_traces(
    rows: usize,
    cols: usize,
    spacing: f64,
    trips: usize,
    gps_sigma: f64,
    sample_period: f64,
    seed: u64,
) -> Result<Vec<Trajectory>> {
    if rows < 2 || cols < 2 {
        return Err(Error::Parameter(format!(
            "grid needs at least 2 rows and columns, got {rows}x{cols}"
        )));
    }
    if !(spacing > 0.0 && sample_period > 0.0 && gps_sigma >= 0.0) {
        return Err(Error::Parameter(
            "spacing and sample_period must be positive, gps_sigma nonnegative".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // separate stream so that routes do not depend on the noise level
    let mut noise_rng = ChaCha8Rng::seed_from_u64(seed);
    noise_rng.set_stream(1);
    let normal = Normal::new(0.0, gps_sigma).map_err(|e| Error::Parameter(e.to_string()))?;
    let mut out = Vec::with_capacity(trips);
    for k in 0..trips {
        let (from, to) = loop {
            let a = (rng.random_range(0..cols), rng.random_range(0..rows));
            let b = (rng.random_range(0..cols), rng.random_range(0..rows));
            if a != b {
                break (a, b);
            }
        };
        let (dx, dy) = (
            to.0 as isize - from.0 as isize,
            to.1 as isize - from.1 as isize,
        );
        let mut steps: Vec<(isize, isize)> =
            std::iter::repeat_n((dx.signum(), 0), dx.unsigned_abs())
                .chain(std::iter::repeat_n((0, dy.signum()), dy.unsigned_abs()))
                .collect();
        steps.shuffle(&mut rng);
        let mut route = vec![Point::new2(
            from.0 as f64 * spacing,
            from.1 as f64 * spacing,
        )];
        let (mut x, mut y) = (from.0 as isize, from.1 as isize);
        for (sx, sy) in steps {
            x += sx;
            y += sy;
            route.push(Point::new2(x as f64 * spacing, y as f64 * spacing));
        }
        let length = spacing * route.len().saturating_sub(1) as f64;
        let step = TRIP_SPEED * sample_period;
        let mut arcs: Vec<f64> = (0..)
            .map(|i| i as f64 * step)
            .take_while(|&s| s < length)
            .collect();
        arcs.push(length);
        let mut times = Vec::with_capacity(arcs.len());
        let mut points = Vec::with_capacity(arcs.len());
        for s in arcs {
            let e = ((s / spacing) as usize).min(route.len() - 2);
            let frac = (s - e as f64 * spacing) / spacing;
            let p = route[e].lerp(&route[e + 1], frac);
            let p = if gps_sigma > 0.0 {
                Point::new2(
                    p.x() + normal.sample(&mut noise_rng),
                    p.y() + normal.sample(&mut noise_rng),
                )
            } else {
                p
            };
            times.push(s / TRIP_SPEED);
            points.push(p);
        }
        out.push(Trajectory::new(format!("trip{k}"), times, points)?);
    }
    Ok(out)
}

/// Writes `t,x,y[,z]` rows with a header line.
pub fn write_csv(traj: &Trajectory, path: &Path) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut w = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    let header = if traj.dim() == 3 { "t,x,y,z" } else { "t,x,y" };
    writeln!(w, "{header}").map_err(io)?;
    for (t, p) in traj.times().iter().zip(traj.points()) {
        write!(w, "{t}").map_err(io)?;
        for c in p.coords() {
            write!(w, ",{c}").map_err(io)?;
        }
        writeln!(w).map_err(io)?;
    }
    w.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_radius() {
        let t = reference_trajectory(&ShapeSpec::circle(), 1, 500).unwrap();
        for p in t.points() {
            assert!((p.norm() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn lemniscate_crosses_origin_twice() {
        let k = 500;
        let t = reference_trajectory(&ShapeSpec::lemniscate(), 1, k).unwrap();
        let step = t
            .points()
            .windows(2)
            .map(|w| w[0].dist(&w[1]))
            .fold(0.0, f64::max);
        let near: Vec<usize> = t
            .points()
            .iter()
            .enumerate()
            .filter(|(_, p)| p.norm() <= step)
            .map(|(i, _)| i)
            .collect();
        // two separate visits, a quarter revolution and three quarters in
        assert!(near.iter().any(|&i| i.abs_diff(k / 4) <= 1));
        assert!(near.iter().any(|&i| i.abs_diff(3 * k / 4) <= 1));
    }

    #[test]
    fn cassini_is_rescaled_peanut() {
        let s = ShapeSpec::cassini();
        let t = reference_trajectory(&s, 1, 2000).unwrap();
        let (lo, hi) = t.bounds();
        assert!((lo.x() + 1.0).abs() < 1e-12 && (hi.x() - 1.0).abs() < 1e-12);
        // waist at x = 0 is narrower than the lobes
        let waist = s.point_at(0.25).y();
        assert!(waist < hi.y());
        assert!(waist > 0.0);
        assert!(ShapeSpec::Cassini { a: 1.0, b: 1.0 }.validate().is_err());
    }

    #[test]
    fn length_and_repeat() {
        let t = reference_trajectory(&ShapeSpec::ellipse(), 100, 64).unwrap();
        assert_eq!(t.len(), 6400);
        assert_eq!(t.points()[3], t.points()[64 * 57 + 3]);
        assert!(reference_trajectory(&ShapeSpec::ellipse(), 1, 8).is_err());
        assert!("triangle".parse::<ShapeSpec>().is_err());
        assert_eq!("peanut".parse::<ShapeSpec>().unwrap(), ShapeSpec::cassini());
    }

    #[test]
    fn zero_noise_is_reference() {
        for s in ShapeSpec::all() {
            let r = reference_trajectory(&s, 3, 100).unwrap();
            let n = noisy_sample(&s, &NoiseSpec::none(5), 3, 100).unwrap();
            assert_eq!(r.points(), n.points());
        }
    }

    #[test]
    fn noise_bounded_and_deterministic() {
        for s in ShapeSpec::all() {
            let noise = NoiseSpec::for_shape(&s, 42);
            let a = noisy_sample(&s, &noise, 10, 500).unwrap();
            let b = noisy_sample(&s, &noise, 10, 500).unwrap();
            assert_eq!(a, b);
            let r = reference_trajectory(&s, 10, 500).unwrap();
            let max = a
                .points()
                .iter()
                .zip(r.points())
                .map(|(p, q)| p.dist(q))
                .fold(0.0, f64::max);
            assert!(max <= noise.max_displacement() + 1e-12, "{s}: {max}");
            assert!(max >= noise.harmonic_amp_range.0);
            let c = noisy_sample(&s, &NoiseSpec { seed: 43, ..noise }, 10, 500).unwrap();
            assert_ne!(a.points(), c.points());
        }
    }

    #[test]
    fn grid_trips_on_edges() {
        assert!(grid_map_traces(3, 3, 100.0, 0, 0.0, 1.0, 1)
            .unwrap()
            .is_empty());
        let trips = grid_map_traces(4, 5, 100.0, 30, 0.0, 1.0, 7).unwrap();
        assert_eq!(trips.len(), 30);
        for t in &trips {
            for p in t.points() {
                let on_v = (p.x() / 100.0).fract() == 0.0;
                let on_h = (p.y() / 100.0).fract() == 0.0;
                assert!(on_v || on_h, "{p:?}");
                assert!(p.x() >= 0.0 && p.x() <= 400.0 && p.y() >= 0.0 && p.y() <= 300.0);
            }
            // constant speed between consecutive samples
            for w in t.points().windows(2).zip(t.times().windows(2)) {
                let (p, tt) = w;
                assert!(p[0].dist(&p[1]) <= TRIP_SPEED * (tt[1] - tt[0]) + 1e-9);
            }
        }
        assert_eq!(
            trips,
            grid_map_traces(4, 5, 100.0, 30, 0.0, 1.0, 7).unwrap()
        );
        assert!(grid_map_traces(1, 5, 100.0, 3, 0.0, 1.0, 7).is_err());
    }

    #[test]
    fn gps_noise_rms() {
        let sigma = 4.0;
        let clean = grid_map_traces(6, 6, 200.0, 150, 0.0, 1.0, 99).unwrap();
        let noisy = grid_map_traces(6, 6, 200.0, 150, sigma, 1.0, 99).unwrap();
        let (mut sum, mut n) = (0.0, 0usize);
        for (c, d) in clean.iter().zip(&noisy) {
            assert_eq!(c.times(), d.times());
            for (p, q) in c.points().iter().zip(d.points()) {
                sum += p.dist_sq(q);
                n += 1;
            }
        }
        assert!(n >= 10_000, "{n}");
        let rms = (sum / n as f64).sqrt();
        let expect = sigma * 2f64.sqrt();
        assert!((rms - expect).abs() <= 0.1 * expect, "{rms} vs {expect}");
    }

    #[test]
    fn csv_export() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        let t = reference_trajectory(&ShapeSpec::circle(), 1, 16).unwrap();
        write_csv(&t, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,x,y"));
        assert_eq!(lines.next(), Some("0,1,0"));
        assert_eq!(text.lines().count(), 17);
    }
}
