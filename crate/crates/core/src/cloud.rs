//! Point cloud storage: coordinates plus optional named per-point scalar channels.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A 3D point cloud with optional per-point attribute channels.
///
/// Coordinates are f64 (survey data may carry large offsets); attribute
/// channels are f32, matching the `float` scalar type used on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<[f64; 3]>,
    /// Insertion-ordered so file output is reproducible.
    attributes: Vec<(String, Vec<f32>)>,
}

impl PointCloud {
    /// Build a cloud from raw coordinates. Rejects empty input and
    /// non-finite coordinates.
    pub fn new(points: Vec<[f64; 3]>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput("point cloud has no points".into()));
        }
        for (i, p) in points.iter().enumerate() {
            if !p.iter().all(|c| c.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "non-finite coordinate at point {i}: {p:?}"
                )));
            }
        }
        Ok(Self {
            points,
            attributes: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn point(&self, i: usize) -> [f64; 3] {
        self.points[i]
    }

    /// Attach a named channel; must have exactly one value per point.
    pub fn add_attribute(&mut self, name: impl Into<String>, values: Vec<f32>) -> Result<()> {
        let name = name.into();
        if values.len() != self.points.len() {
            return Err(Error::InvalidArgument(format!(
                "attribute '{}' has {} values for {} points",
                name,
                values.len(),
                self.points.len()
            )));
        }
        if let Some(slot) = self.attributes.iter_mut().find(|(n, _)| *n == name) {
            slot.1 = values;
        } else {
            self.attributes.push((name, values));
        }
        Ok(())
    }

    pub fn attribute(&self, name: &str) -> Option<&[f32]> {
        self.attributes
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }

    /// Channels in insertion order.
    pub fn attributes(&self) -> impl Iterator<Item = (&str, &[f32])> {
        self.attributes
            .iter()
            .map(|(n, v)| (n.as_str(), v.as_slice()))
    }

    pub fn attribute_count(&self) -> usize {
        self.attributes.len()
    }

    /// Axis-aligned bounds of all points: (min, max).
    pub fn bounds(&self) -> ([f64; 3], [f64; 3]) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in &self.points {
            for a in 0..3 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        (lo, hi)
    }

    /// Draw `k` distinct point indices, reproducibly for a fixed seed.
    pub fn sample_points(&self, k: usize, seed: u64) -> Result<Vec<usize>> {
        let n = self.points.len();
        if k == 0 || k > n {
            return Err(Error::InvalidArgument(format!(
                "cannot sample {k} distinct points from a cloud of {n}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut indices: Vec<usize> = (0..n).collect();
        // Partial Fisher-Yates: after the loop the first k slots are the sample.
        let (sample, _) = indices.partial_shuffle(&mut rng, k);
        Ok(sample.to_vec())
    }

    /// Keep a uniformly random subset of `keep` points (attributes follow).
    /// Deterministic for a fixed seed.
    pub fn decimate(&self, keep: usize, seed: u64) -> Result<PointCloud> {
        let mut idx = self.sample_points(keep, seed)?;
        idx.sort_unstable();
        let points = idx.iter().map(|&i| self.points[i]).collect();
        let mut out = PointCloud::new(points)?;
        for (name, values) in &self.attributes {
            let sub: Vec<f32> = idx.iter().map(|&i| values[i]).collect();
            out.add_attribute(name.clone(), sub)?;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_cloud(n: usize) -> PointCloud {
        let mut pts = Vec::new();
        for i in 0..n {
            pts.push([i as f64, 0.0, 0.0]);
        }
        PointCloud::new(pts).unwrap()
    }

    #[test]
    fn rejects_empty_and_non_finite() {
        assert!(PointCloud::new(vec![]).is_err());
        assert!(PointCloud::new(vec![[0.0, f64::NAN, 0.0]]).is_err());
        assert!(PointCloud::new(vec![[0.0, 0.0, f64::INFINITY]]).is_err());
    }

    #[test]
    fn attribute_length_checked() {
        let mut c = grid_cloud(3);
        assert!(c.add_attribute("a", vec![1.0, 2.0]).is_err());
        assert!(c.add_attribute("a", vec![1.0, 2.0, 3.0]).is_ok());
        assert_eq!(c.attribute("a").unwrap(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn sample_full_is_permutation() {
        let c = grid_cloud(10);
        let mut s = c.sample_points(10, 7).unwrap();
        s.sort_unstable();
        assert_eq!(s, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn sample_is_deterministic() {
        let c = grid_cloud(100);
        assert_eq!(
            c.sample_points(20, 42).unwrap(),
            c.sample_points(20, 42).unwrap()
        );
        assert_ne!(
            c.sample_points(20, 42).unwrap(),
            c.sample_points(20, 43).unwrap()
        );
    }

    #[test]
    fn sample_bounds_checked() {
        let c = grid_cloud(5);
        assert!(c.sample_points(6, 0).is_err());
        assert!(c.sample_points(0, 0).is_err());
    }

    /// Empirical per-point selection frequency for k = N/2 stays within
    /// 5 sigma of the binomial expectation over 100 fixed seeds.
    #[test]
    fn sample_frequency_matches_binomial() {
        let n = 100_000;
        let runs = 100u32;
        let c = {
            let pts = (0..n).map(|i| [i as f64, 0.0, 0.0]).collect();
            PointCloud::new(pts).unwrap()
        };
        let mut hits = vec![0u32; n];
        for seed in 0..runs as u64 {
            for i in c.sample_points(n / 2, seed).unwrap() {
                hits[i] += 1;
            }
        }
        let p = 0.5;
        let sigma = (p * (1.0 - p) / runs as f64).sqrt();
        let tol = 5.0 * sigma;
        for (i, &h) in hits.iter().enumerate() {
            let freq = h as f64 / runs as f64;
            assert!(
                (freq - p).abs() <= tol,
                "point {i}: frequency {freq} outside {p} +- {tol}"
            );
        }
    }

    #[test]
    fn decimate_keeps_attributes_aligned() {
        let mut c = grid_cloud(50);
        let attr: Vec<f32> = (0..50).map(|i| i as f32).collect();
        c.add_attribute("v", attr).unwrap();
        let d = c.decimate(10, 3).unwrap();
        assert_eq!(d.len(), 10);
        let v = d.attribute("v").unwrap();
        for (p, &a) in d.points().iter().zip(v) {
            assert_eq!(p[0] as f32, a);
        }
    }
}
