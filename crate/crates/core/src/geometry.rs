//! Poisson point processes in a rectangular window and the distance laws
//! built on them.

use std::f64::consts::PI;
use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("cannot superpose point sets on different windows ({0:?} vs {1:?})")]
    WindowMismatch((f64, f64), (f64, f64)),
}

/// Node locations sampled in `[0, w] × [0, h]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    pub points: Vec<[f64; 2]>,
    /// Intensity the set was drawn from, not the empirical count.
    pub density: f64,
    pub window: (f64, f64),
    pub seed: u64,
}

impl PointSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn area(&self) -> f64 {
        self.window.0 * self.window.1
    }

    /// Count divided by window area.
    pub fn empirical_density(&self) -> f64 {
        self.len() as f64 / self.area()
    }

    /// Writes `x,y` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "x,y")?;
        for [x, y] in &self.points {
            writeln!(out, "{x:?},{y:?}")?;
        }
        Ok(())
    }

    /// Distance from a point to the nearest window edge.
    pub fn edge_distance(&self, p: [f64; 2]) -> f64 {
        p[0].min(self.window.0 - p[0]).min(p[1]).min(self.window.1 - p[1])
    }
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-realization seed: a stable hash of `(base, index)`.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    mix64(mix64(base) ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Homogeneous PPP of intensity `lambda` on the window.
pub fn sample_ppp(lambda: f64, window: (f64, f64), seed: u64) -> PointSet {
    let mut rng = rng_from_seed(seed);
    let points = sample_ppp_points(&mut rng, lambda, window);
    PointSet {
        points,
        density: lambda,
        window,
        seed,
    }
}

pub(crate) fn sample_ppp_points<R: Rng>(rng: &mut R, lambda: f64, window: (f64, f64)) -> Vec<[f64; 2]> {
    let mean = lambda * window.0 * window.1;
    let n = if mean > 0.0 {
        Poisson::new(mean).map(|d| d.sample(rng) as usize).unwrap_or(0)
    } else {
        0
    };
    (0..n)
        .map(|_| [rng.random::<f64>() * window.0, rng.random::<f64>() * window.1])
        .collect()
}

/// Union of two sets on the same window; densities add.
pub fn superpose(a: &PointSet, b: &PointSet) -> Result<PointSet, GeometryError> {
    if a.window != b.window {
        return Err(GeometryError::WindowMismatch(a.window, b.window));
    }
    let mut points = Vec::with_capacity(a.len() + b.len());
    points.extend_from_slice(&a.points);
    points.extend_from_slice(&b.points);
    Ok(PointSet {
        points,
        density: a.density + b.density,
        window: a.window,
        seed: derive_seed(a.seed, b.seed),
    })
}

/// Nearest-neighbour distance density of a PPP: `2πλr·exp(-λπr²)`.
pub fn nn_distance_pdf(r: f64, lambda: f64) -> f64 {
    2.0 * PI * lambda * r * (-lambda * PI * r * r).exp()
}

/// Mean of the nearest-neighbour law, `1/(2√λ)`.
pub fn rayleigh_mean_nn(lambda: f64) -> f64 {
    0.5 / lambda.sqrt()
}

/// The representative distance `1/(λπ)` that the closed-form model
/// substitutes for the nearest-neighbour distance.
pub fn paper_mean_nn(lambda: f64) -> f64 {
    1.0 / (lambda * PI)
}

/// `(1/(λπ))^(-α)`, the path loss at [`paper_mean_nn`].
pub fn mean_path_loss(lambda: f64, alpha: f64) -> f64 {
    paper_mean_nn(lambda).powf(-alpha)
}

/// Uniform bucket grid for fixed-radius neighbour queries.
pub(crate) struct Grid {
    cell: f64,
    nx: usize,
    ny: usize,
    origin: [f64; 2],
    buckets: Vec<Vec<u32>>,
}

impl Grid {
    pub(crate) fn new(points: &[[f64; 2]], radius: f64) -> Self {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in points {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        if points.is_empty() {
            lo = [0.0; 2];
            hi = [0.0; 2];
        }
        // Cap the bucket count so tiny radii on large windows stay cheap.
        let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(f64::MIN_POSITIVE);
        let max_cells = (points.len() as f64).sqrt().ceil().max(1.0);
        let cell = radius.max(span / max_cells).max(f64::MIN_POSITIVE);
        let nx = ((hi[0] - lo[0]) / cell).floor() as usize + 1;
        let ny = ((hi[1] - lo[1]) / cell).floor() as usize + 1;
        let mut buckets = vec![Vec::new(); nx * ny];
        for (i, p) in points.iter().enumerate() {
            let (cx, cy) = Self::cell_of(lo, cell, nx, ny, *p);
            buckets[cy * nx + cx].push(i as u32);
        }
        Self {
            cell,
            nx,
            ny,
            origin: lo,
            buckets,
        }
    }

    fn cell_of(origin: [f64; 2], cell: f64, nx: usize, ny: usize, p: [f64; 2]) -> (usize, usize) {
        let cx = (((p[0] - origin[0]) / cell).floor().max(0.0) as usize).min(nx - 1);
        let cy = (((p[1] - origin[1]) / cell).floor().max(0.0) as usize).min(ny - 1);
        (cx, cy)
    }

    /// Calls `visit` with every stored index whose cell overlaps the disc;
    /// stops early when `visit` returns false.
    pub(crate) fn for_each_near(&self, p: [f64; 2], radius: f64, mut visit: impl FnMut(usize) -> bool) {
        let span = |c: f64, o: f64, n: usize| {
            let lo = ((c - radius - o) / self.cell).floor().max(0.0);
            let hi = ((c + radius - o) / self.cell).floor().min(n as f64 - 1.0);
            (lo as isize, hi as isize)
        };
        let (x0, x1) = span(p[0], self.origin[0], self.nx);
        let (y0, y1) = span(p[1], self.origin[1], self.ny);
        for y in y0..=y1 {
            for x in x0..=x1 {
                for &i in &self.buckets[y as usize * self.nx + x as usize] {
                    if !visit(i as usize) {
                        return;
                    }
                }
            }
        }
    }
}

pub(crate) fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

/// Distance from each point to its nearest other point (∞ for a lone point).
pub fn nearest_neighbor_distances(set: &PointSet) -> Vec<f64> {
    let pts = &set.points;
    if pts.len() < 2 {
        return vec![f64::INFINITY; pts.len()];
    }
    let grid = Grid::new(pts, 2.0 / set.density.max(1e-12).sqrt());
    pts.iter()
        .enumerate()
        .map(|(i, &p)| {
            let mut radius = grid.cell;
            loop {
                let mut best = f64::INFINITY;
                grid.for_each_near(p, radius, |j| {
                    if j != i {
                        best = best.min(dist2(p, pts[j]));
                    }
                    true
                });
                // Only trust the answer once it lies inside the searched disc.
                if best.sqrt() <= radius || radius > set.window.0 + set.window.1 {
                    return best.sqrt();
                }
                radius *= 2.0;
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{integrate, Tolerance};
    use proptest::prelude::*;

    #[test]
    fn zero_intensity_is_empty() {
        assert!(sample_ppp(0.0, (5.0, 5.0), 3).is_empty());
    }

    #[test]
    fn sampling_is_deterministic_and_in_window() {
        let a = sample_ppp(0.9, (10.0, 4.0), 17);
        let b = sample_ppp(0.9, (10.0, 4.0), 17);
        assert_eq!(a, b);
        assert!(a
            .points
            .iter()
            .all(|p| (0.0..=10.0).contains(&p[0]) && (0.0..=4.0).contains(&p[1])));
        assert_ne!(a, sample_ppp(0.9, (10.0, 4.0), 18));
    }

    #[test]
    fn superpose_identity_and_density() {
        let empty = sample_ppp(0.0, (4.0, 4.0), 1);
        let s = sample_ppp(0.5, (4.0, 4.0), 2);
        let u = superpose(&empty, &s).unwrap();
        assert_eq!(u.points, s.points);
        assert_eq!(u.density, 0.5);
        let a = sample_ppp(0.3, (4.0, 4.0), 3);
        assert!((superpose(&s, &a).unwrap().density - 0.8).abs() < 1e-15);
        assert!(superpose(&s, &sample_ppp(0.3, (4.0, 5.0), 3)).is_err());
    }

    #[test]
    fn pdf_normalized_and_vanishes_at_origin() {
        assert_eq!(nn_distance_pdf(0.0, 0.7), 0.0);
        let total = integrate(|r| nn_distance_pdf(r, 0.7), 0.0, 20.0, Tolerance::relative(1e-12)).unwrap();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn mean_path_loss_reference_values() {
        assert!((mean_path_loss(1.0 / PI, 2.0) - 1.0).abs() < 1e-15);
        // (0.3π)^3.4 and (0.9π)^3.4, evaluated independently with mpmath.
        assert!((mean_path_loss(0.3, 3.4) / 0.817_564_138_162_634_6 - 1.0).abs() < 1e-13);
        assert!((mean_path_loss(0.9, 3.4) / 34.255_798_808_389_47 - 1.0).abs() < 1e-13);
        assert!((paper_mean_nn(0.5) - 2.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn csv_dump_has_header() {
        let s = sample_ppp(0.2, (5.0, 5.0), 9);
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x,y\n"));
        assert_eq!(text.lines().count(), s.len() + 1);
    }

    #[test]
    fn nearest_neighbors_match_brute_force() {
        let s = sample_ppp(0.5, (12.0, 9.0), 4);
        let fast = nearest_neighbor_distances(&s);
        for (i, p) in s.points.iter().enumerate() {
            let slow = s
                .points
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, q)| dist2(*p, *q).sqrt())
                .fold(f64::INFINITY, f64::min);
            assert_eq!(fast[i], slow);
        }
    }

    #[test]
    fn derived_seeds_are_distinct() {
        let seeds: std::collections::HashSet<u64> = (0..10_000).map(|i| derive_seed(7, i)).collect();
        assert_eq!(seeds.len(), 10_000);
        assert_ne!(derive_seed(7, 0), derive_seed(8, 0));
    }

    proptest! {
        #[test]
        fn superpose_counts_add(la in 0.0f64..2.0, lb in 0.0f64..2.0, s1 in any::<u64>(), s2 in any::<u64>()) {
            let a = sample_ppp(la, (6.0, 6.0), s1);
            let b = sample_ppp(lb, (6.0, 6.0), s2);
            let u = superpose(&a, &b).unwrap();
            prop_assert_eq!(u.len(), a.len() + b.len());
            prop_assert!((u.density - (la + lb)).abs() <= 1e-15 * (la + lb).max(1.0));
        }
    }
}
