//! Voxel grids extracted around query points: point counts, binarized
//! occupancy, boundary shells, and per-cell loss weights.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::index::SpatialIndex;

/// What a grid's scalar values mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    /// Non-negative integer point counts.
    Counts,
    /// Occupancy in {0, 1}.
    Binary,
    /// Network outputs in (0, 1).
    Probability,
}

/// Cube grid of `cells^3` values with cell side `cell_size`, centered at a
/// world-space point. Cell boxes are half-open per axis: a point exactly on
/// the grid's max face falls outside.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    cells: usize,
    cell_size: f64,
    center: [f64; 3],
    kind: GridKind,
    values: Vec<f32>,
}

impl VoxelGrid {
    pub fn zeros(cells: usize, cell_size: f64, center: [f64; 3], kind: GridKind) -> Self {
        Self {
            cells,
            cell_size,
            center,
            kind,
            values: vec![0.0; cells * cells * cells],
        }
    }

    pub fn from_values(
        cells: usize,
        cell_size: f64,
        center: [f64; 3],
        kind: GridKind,
        values: Vec<f32>,
    ) -> Result<Self> {
        if values.len() != cells * cells * cells {
            return Err(Error::InvalidArgument(format!(
                "grid of side {cells} needs {} values, got {}",
                cells * cells * cells,
                values.len()
            )));
        }
        Ok(Self { cells, cell_size, center, kind, values })
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn center(&self) -> [f64; 3] {
        self.center
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    /// World-space minimum corner.
    pub fn origin(&self) -> [f64; 3] {
        let half = self.cells as f64 * self.cell_size / 2.0;
        [
            self.center[0] - half,
            self.center[1] - half,
            self.center[2] - half,
        ]
    }

    /// World center of a cell.
    pub fn cell_center(&self, ix: usize, iy: usize, iz: usize) -> [f64; 3] {
        let o = self.origin();
        [
            o[0] + (ix as f64 + 0.5) * self.cell_size,
            o[1] + (iy as f64 + 0.5) * self.cell_size,
            o[2] + (iz as f64 + 0.5) * self.cell_size,
        ]
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (ix * self.cells + iy) * self.cells + iz
    }

    pub fn get(&self, ix: usize, iy: usize, iz: usize) -> f32 {
        self.values[self.index(ix, iy, iz)]
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().map(|&v| v as f64).sum()
    }

    /// Debug dump: one `x,y,z,value` line per nonzero cell.
    pub fn dump_csv(&self) -> String {
        let mut out = String::from("x,y,z,value\n");
        for ix in 0..self.cells {
            for iy in 0..self.cells {
                for iz in 0..self.cells {
                    let v = self.get(ix, iy, iz);
                    if v != 0.0 {
                        out.push_str(&format!("{ix},{iy},{iz},{v}\n"));
                    }
                }
            }
        }
        out
    }
}

/// Shell of a grid: interior cells forced to zero, boundary layers kept.
/// A cell (x, y, z) is on the shell when `min(x,y,z) <= thickness` or
/// `max(x,y,z) >= cells - thickness - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShellGrid {
    grid: VoxelGrid,
    thickness: usize,
}

impl ShellGrid {
    pub fn grid(&self) -> &VoxelGrid {
        &self.grid
    }

    pub fn thickness(&self) -> usize {
        self.thickness
    }

    pub fn values(&self) -> &[f32] {
        self.grid.values()
    }
}

/// Binary mask that removes single-point cells from the loss denominator:
/// 0 exactly where the count is 1, 1 everywhere else.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightGrid {
    cells: usize,
    values: Vec<f32>,
}

impl WeightGrid {
    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }
}

pub fn is_shell_cell(cells: usize, thickness: usize, ix: usize, iy: usize, iz: usize) -> bool {
    let lo = ix.min(iy).min(iz);
    let hi = ix.max(iy).max(iz);
    lo <= thickness || hi + thickness + 1 >= cells
}

fn validate_grid_args(cells: usize, cell_size: f64) -> Result<()> {
    // The reconstruction network additionally needs cells >= 8; plain
    // extraction only needs clean halvings.
    if cells < 4 || cells % 4 != 0 {
        return Err(Error::InvalidArgument(format!(
            "grid side must be a multiple of 4 and at least 4, got {cells}"
        )));
    }
    if !(cell_size > 0.0) || !cell_size.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "cell size must be positive, got {cell_size}"
        )));
    }
    Ok(())
}

/// Count grid around `center`: each cell holds the number of cloud points
/// inside its half-open world box.
pub fn extract_grid(
    cloud: &PointCloud,
    index: &SpatialIndex,
    center: [f64; 3],
    cells: usize,
    cell_size: f64,
) -> Result<VoxelGrid> {
    extract_grid_transformed(cloud, index, center, cells, cell_size, 0.0, 0.0)
}

/// Count grid extracted after rotating the cloud by `angle` about the
/// vertical axis through `center` and lifting it by `dz`; the grid stays
/// fixed at `center`. `angle = dz = 0` reduces to [`extract_grid`].
pub fn extract_grid_transformed(
    cloud: &PointCloud,
    index: &SpatialIndex,
    center: [f64; 3],
    cells: usize,
    cell_size: f64,
    angle: f64,
    dz: f64,
) -> Result<VoxelGrid> {
    validate_grid_args(cells, cell_size)?;
    let mut grid = VoxelGrid::zeros(cells, cell_size, center, GridKind::Counts);
    let half = cells as f64 * cell_size / 2.0;
    let inv = 1.0 / cell_size;
    let n = cells as i64;

    // Pre-image bound: rotation keeps horizontal distance to the grid axis,
    // so candidates live in a box inflated by sqrt(2) horizontally and by
    // the translation amplitude vertically.
    let (sin, cos) = angle.sin_cos();
    let identity = angle == 0.0 && dz == 0.0;
    let h_margin = if identity { half } else { half * std::f64::consts::SQRT_2 };
    let v_margin = half + dz.abs();
    let lo = [center[0] - h_margin, center[1] - h_margin, center[2] - v_margin];
    let hi = [center[0] + h_margin, center[1] + h_margin, center[2] + v_margin];

    index.for_each_candidate(lo, hi, |i| {
        let p = cloud.point(i);
        let dx = p[0] - center[0];
        let dy = p[1] - center[1];
        let dzp = p[2] - center[2];
        let (rx, ry, rz) = if identity {
            (dx, dy, dzp)
        } else {
            (cos * dx - sin * dy, sin * dx + cos * dy, dzp + dz)
        };
        let ix = ((rx + half) * inv).floor() as i64;
        let iy = ((ry + half) * inv).floor() as i64;
        let iz = ((rz + half) * inv).floor() as i64;
        if ix >= 0 && ix < n && iy >= 0 && iy < n && iz >= 0 && iz < n {
            let at = grid.index(ix as usize, iy as usize, iz as usize);
            grid.values[at] += 1.0;
        }
    });
    Ok(grid)
}

/// Training-time augmented extraction: uniform rotation in [0, 2pi) about
/// the vertical axis through `center`, then a uniform vertical shift in
/// [-cell_size/2, +cell_size/2]. Deterministic for a fixed seed.
pub fn augment_and_extract(
    cloud: &PointCloud,
    index: &SpatialIndex,
    center: [f64; 3],
    cells: usize,
    cell_size: f64,
    seed: u64,
) -> Result<VoxelGrid> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let angle = rng.gen_range(0.0..std::f64::consts::TAU);
    let dz = rng.gen_range(-0.5..0.5) * cell_size;
    extract_grid_transformed(cloud, index, center, cells, cell_size, angle, dz)
}

/// Occupancy at `count >= threshold`.
pub fn binarize(grid: &VoxelGrid, threshold: u32) -> Result<VoxelGrid> {
    if grid.kind() != GridKind::Counts {
        return Err(Error::InvalidArgument(
            "binarize expects a count grid".into(),
        ));
    }
    if threshold < 1 {
        return Err(Error::InvalidArgument("binarize threshold must be >= 1".into()));
    }
    let t = threshold as f32;
    let values = grid.values.iter().map(|&v| if v >= t { 1.0 } else { 0.0 }).collect();
    Ok(VoxelGrid {
        cells: grid.cells,
        cell_size: grid.cell_size,
        center: grid.center,
        kind: GridKind::Binary,
        values,
    })
}

/// Zero the interior, keep boundary layers; preserves the value kind.
pub fn make_shell(grid: &VoxelGrid, thickness: usize) -> Result<ShellGrid> {
    let n = grid.cells;
    // thickness must leave a non-empty interior: m < n/2 - 1.
    if 2 * (thickness + 1) >= n {
        return Err(Error::InvalidArgument(format!(
            "shell thickness {thickness} out of range for grid side {n}"
        )));
    }
    let mut out = grid.clone();
    for ix in 0..n {
        for iy in 0..n {
            for iz in 0..n {
                if !is_shell_cell(n, thickness, ix, iy, iz) {
                    let at = out.index(ix, iy, iz);
                    out.values[at] = 0.0;
                }
            }
        }
    }
    Ok(ShellGrid { grid: out, thickness })
}

/// Loss weights from raw counts: 0 where a cell holds exactly one point.
pub fn make_weights(grid: &VoxelGrid) -> Result<WeightGrid> {
    if grid.kind() != GridKind::Counts {
        return Err(Error::InvalidArgument(
            "weights are derived from a count grid".into(),
        ));
    }
    let values = grid
        .values
        .iter()
        .map(|&v| if v == 1.0 { 0.0 } else { 1.0 })
        .collect();
    Ok(WeightGrid { cells: grid.cells, values })
}
