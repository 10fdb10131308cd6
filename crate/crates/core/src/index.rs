//! Uniform hash-grid spatial index for box and ball queries.

use std::collections::HashMap;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};

/// Axis-aligned box, closed on both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Aabb {
    pub fn new(min: [f64; 3], max: [f64; 3]) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        (0..3).all(|a| p[a] >= self.min[a] && p[a] <= self.max[a])
    }
}

/// Immutable hash grid over a cloud. Cells map to the point indices they
/// contain; queries visit only the overlapping cells.
pub struct SpatialIndex {
    cell: f64,
    cells: HashMap<[i64; 3], Vec<u32>>,
}

impl SpatialIndex {
    pub fn build(cloud: &PointCloud, cell: f64) -> Result<Self> {
        if !(cell > 0.0) || !cell.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "index cell size must be positive, got {cell}"
            )));
        }
        let mut cells: HashMap<[i64; 3], Vec<u32>> = HashMap::new();
        for (i, p) in cloud.points().iter().enumerate() {
            cells.entry(Self::key(cell, *p)).or_default().push(i as u32);
        }
        Ok(Self { cell, cells })
    }

    pub fn cell_size(&self) -> f64 {
        self.cell
    }

    fn key(cell: f64, p: [f64; 3]) -> [i64; 3] {
        [
            (p[0] / cell).floor() as i64,
            (p[1] / cell).floor() as i64,
            (p[2] / cell).floor() as i64,
        ]
    }

    /// Visit every point index stored in cells overlapping `[lo, hi]`.
    /// Candidates may lie outside the box; callers filter.
    pub fn for_each_candidate(&self, lo: [f64; 3], hi: [f64; 3], mut f: impl FnMut(usize)) {
        let k0 = Self::key(self.cell, lo);
        let k1 = Self::key(self.cell, hi);
        for kx in k0[0]..=k1[0] {
            for ky in k0[1]..=k1[1] {
                for kz in k0[2]..=k1[2] {
                    if let Some(v) = self.cells.get(&[kx, ky, kz]) {
                        for &i in v {
                            f(i as usize);
                        }
                    }
                }
            }
        }
    }

    /// Exact closed-box query; results are sorted by point index.
    pub fn query_box(&self, cloud: &PointCloud, aabb: &Aabb) -> Vec<usize> {
        let mut out = Vec::new();
        self.for_each_candidate(aabb.min, aabb.max, |i| {
            if aabb.contains(cloud.point(i)) {
                out.push(i);
            }
        });
        out.sort_unstable();
        out
    }

    /// Exact ball query (closed radius); results sorted by point index.
    pub fn query_ball(&self, cloud: &PointCloud, center: [f64; 3], radius: f64) -> Vec<usize> {
        let lo = [center[0] - radius, center[1] - radius, center[2] - radius];
        let hi = [center[0] + radius, center[1] + radius, center[2] + radius];
        let r2 = radius * radius;
        let mut out = Vec::new();
        self.for_each_candidate(lo, hi, |i| {
            let p = cloud.point(i);
            let d2 = (0..3).map(|a| (p[a] - center[a]).powi(2)).sum::<f64>();
            if d2 <= r2 {
                out.push(i);
            }
        });
        out.sort_unstable();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rejects_bad_cell() {
        let c = PointCloud::new(vec![[0.0; 3]]).unwrap();
        assert!(SpatialIndex::build(&c, 0.0).is_err());
        assert!(SpatialIndex::build(&c, -1.0).is_err());
    }

    #[test]
    fn query_all_and_none() {
        let c = PointCloud::new(vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]).unwrap();
        let idx = SpatialIndex::build(&c, 0.5).unwrap();
        let all = idx.query_box(&c, &Aabb::new([-10.0; 3], [10.0; 3]));
        assert_eq!(all, vec![0, 1, 2]);
        let none = idx.query_box(&c, &Aabb::new([5.0; 3], [6.0; 3]));
        assert!(none.is_empty());
    }

    /// Box queries agree with a brute-force linear scan on random input.
    #[test]
    fn box_queries_match_linear_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<[f64; 3]> = (0..1000)
            .map(|_| [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)])
            .collect();
        let c = PointCloud::new(pts).unwrap();
        let idx = SpatialIndex::build(&c, 0.9).unwrap();
        for _ in 0..50 {
            let a: [f64; 3] =
                [rng.gen_range(-6.0..6.0), rng.gen_range(-6.0..6.0), rng.gen_range(-6.0..6.0)];
            let b: [f64; 3] =
                [rng.gen_range(-6.0..6.0), rng.gen_range(-6.0..6.0), rng.gen_range(-6.0..6.0)];
            let aabb = Aabb::new(
                [a[0].min(b[0]), a[1].min(b[1]), a[2].min(b[2])],
                [a[0].max(b[0]), a[1].max(b[1]), a[2].max(b[2])],
            );
            let mut expect: Vec<usize> = c
                .points()
                .iter()
                .enumerate()
                .filter(|(_, p)| aabb.contains(**p))
                .map(|(i, _)| i)
                .collect();
            expect.sort_unstable();
            assert_eq!(idx.query_box(&c, &aabb), expect);
        }
    }

    #[test]
    fn ball_query_matches_linear_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts: Vec<[f64; 3]> = (0..500)
            .map(|_| [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)])
            .collect();
        let c = PointCloud::new(pts).unwrap();
        let idx = SpatialIndex::build(&c, 0.5).unwrap();
        for _ in 0..20 {
            let center = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let r = rng.gen_range(0.1..1.5);
            let mut expect: Vec<usize> = c
                .points()
                .iter()
                .enumerate()
                .filter(|(_, p)| {
                    (0..3).map(|a| (p[a] - center[a]).powi(2)).sum::<f64>() <= r * r
                })
                .map(|(i, _)| i)
                .collect();
            expect.sort_unstable();
            assert_eq!(idx.query_ball(&c, center, r), expect);
        }
    }
}
