//! Weighted dice-style reconstruction error and the batch loss.
//!
//! The error is 1 - I/U with an unweighted intersection
//! I = sum(pred * target) and a weighted union
//! U = sum(max(pred, target) * weight). The asymmetry (weights only in the
//! union) is intentional.

use crate::error::{Error, Result};
use crate::tensor::tree_sum;
use crate::voxel::{GridKind, VoxelGrid, WeightGrid};

/// Stabilizer added to the union.
pub const UNION_EPSILON: f64 = 1e-7;

/// Reconstruction error of one sample, with its building blocks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossValue {
    pub intersection: f64,
    /// Weighted union before the epsilon guard.
    pub union: f64,
    pub error: f64,
    /// True when the sample carries no supervised signal (raw union zero or
    /// an entirely unoccupied target); such samples score 0 and are skipped
    /// in gradient accumulation.
    pub degenerate: bool,
}

/// Per-sample errors and their batch mean.
#[derive(Debug, Clone, PartialEq)]
pub struct LossBreakdown {
    pub samples: Vec<LossValue>,
    pub mean: f64,
}

fn check_lengths(pred: &[f32], target: &[f32], weights: &[f32]) -> Result<()> {
    if pred.len() != target.len() || pred.len() != weights.len() {
        return Err(Error::InvalidArgument(format!(
            "loss inputs must match: pred {}, target {}, weights {}",
            pred.len(),
            target.len(),
            weights.len()
        )));
    }
    Ok(())
}

/// Core evaluation over flat cell values. `target` and `weights` must be
/// binary; `pred` holds probabilities (or a binary rasterization).
pub fn reconstruction_error_values(pred: &[f32], target: &[f32], weights: &[f32]) -> Result<LossValue> {
    check_lengths(pred, target, weights)?;
    let mut intersection = 0.0f64;
    let mut union = 0.0f64;
    let mut occupied = false;
    for i in 0..pred.len() {
        let p = pred[i] as f64;
        let t = target[i] as f64;
        let w = weights[i] as f64;
        intersection += p * t;
        union += p.max(t) * w;
        occupied |= t != 0.0;
    }
    if union == 0.0 || !occupied {
        return Ok(LossValue {
            intersection,
            union,
            error: 0.0,
            degenerate: true,
        });
    }
    let error = 1.0 - intersection / (union + UNION_EPSILON);
    Ok(LossValue {
        intersection,
        union,
        error,
        degenerate: false,
    })
}

/// Gradient of the error w.r.t. `pred`, written into `grad`. Degenerate
/// samples produce an all-zero gradient. At max ties the subgradient is
/// routed to `pred` (active when pred >= target).
pub fn reconstruction_error_backward_values(
    pred: &[f32],
    target: &[f32],
    weights: &[f32],
    grad: &mut [f32],
) -> Result<LossValue> {
    check_lengths(pred, target, weights)?;
    if grad.len() != pred.len() {
        return Err(Error::InvalidArgument("gradient buffer length mismatch".into()));
    }
    let value = reconstruction_error_values(pred, target, weights)?;
    if value.degenerate {
        grad.iter_mut().for_each(|g| *g = 0.0);
        return Ok(value);
    }
    let u = value.union + UNION_EPSILON;
    let i_over_u2 = value.intersection / (u * u);
    let inv_u = 1.0 / u;
    for c in 0..pred.len() {
        let t = target[c] as f64;
        let w = weights[c] as f64;
        let active = if (pred[c] as f64) >= t { w } else { 0.0 };
        grad[c] = (-t * inv_u + i_over_u2 * active) as f32;
    }
    Ok(value)
}

/// Grid-typed wrapper: checks kinds and shapes, then evaluates Eq. 1.
pub fn reconstruction_error(
    pred: &VoxelGrid,
    target: &VoxelGrid,
    weights: &WeightGrid,
) -> Result<LossValue> {
    if target.kind() != GridKind::Binary {
        return Err(Error::InvalidArgument("target grid must be binary".into()));
    }
    if pred.kind() == GridKind::Counts {
        return Err(Error::InvalidArgument(
            "prediction must be a probability or binary grid, not counts".into(),
        ));
    }
    if pred.cells() != target.cells() || pred.cells() != weights.cells() {
        return Err(Error::InvalidArgument(format!(
            "grid sizes differ: pred {}, target {}, weights {}",
            pred.cells(),
            target.cells(),
            weights.cells()
        )));
    }
    reconstruction_error_values(pred.values(), target.values(), weights.values())
}

/// Eq. 4: arithmetic mean of per-sample errors (pairwise tree sum for a
/// fixed reduction order).
pub fn batch_loss(per_sample_errors: &[f64]) -> Result<f64> {
    if per_sample_errors.is_empty() {
        return Err(Error::InvalidArgument("batch loss of an empty batch".into()));
    }
    Ok(tree_sum(per_sample_errors) / per_sample_errors.len() as f64)
}

pub fn batch_breakdown(samples: Vec<LossValue>) -> Result<LossBreakdown> {
    let errors: Vec<f64> = samples.iter().map(|s| s.error).collect();
    let mean = batch_loss(&errors)?;
    Ok(LossBreakdown { samples, mean })
}
