//! Elementwise activations, nearest-neighbour resampling, and channel
//! concatenation, each with its backward pass.

use super::{Scalar, Tensor};
use crate::error::{Error, Result};

pub fn leaky_relu<T: Scalar>(input: &Tensor<T>, slope: T) -> Tensor<T> {
    let data = input
        .data()
        .iter()
        .map(|&x| if x > T::zero() { x } else { slope * x })
        .collect();
    Tensor::from_vec(input.shape(), data).unwrap()
}

/// Derivative routed by the sign of the forward output (valid since the
/// slope is positive; x = 0 takes the slope branch).
pub fn leaky_relu_backward<T: Scalar>(
    grad_out: &Tensor<T>,
    output: &Tensor<T>,
    slope: T,
) -> Tensor<T> {
    let data = grad_out
        .data()
        .iter()
        .zip(output.data())
        .map(|(&g, &y)| if y > T::zero() { g } else { slope * g })
        .collect();
    Tensor::from_vec(grad_out.shape(), data).unwrap()
}

pub fn sigmoid<T: Scalar>(input: &Tensor<T>) -> Tensor<T> {
    let one = T::one();
    // Saturated logits would round to exactly 0 or 1; clamp by one epsilon
    // so outputs stay strictly inside (0, 1).
    let lo = T::epsilon();
    let hi = one - T::epsilon();
    let data = input
        .data()
        .iter()
        .map(|&x| (one / (one + (-x).exp())).max(lo).min(hi))
        .collect();
    Tensor::from_vec(input.shape(), data).unwrap()
}

pub fn sigmoid_backward<T: Scalar>(grad_out: &Tensor<T>, output: &Tensor<T>) -> Tensor<T> {
    let one = T::one();
    let data = grad_out
        .data()
        .iter()
        .zip(output.data())
        .map(|(&g, &y)| g * y * (one - y))
        .collect();
    Tensor::from_vec(grad_out.shape(), data).unwrap()
}

/// Resampling factor for the two stages of the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resample {
    /// Nearest-neighbour decimation: keep even indices. Needs even dims.
    Half,
    /// Replicate each voxel into a 2x2x2 block.
    Double,
}

pub fn resample_nn<T: Scalar>(input: &Tensor<T>, factor: Resample) -> Result<Tensor<T>> {
    let (b, c, d, h, w) = input.dims5()?;
    match factor {
        Resample::Double => {
            let (od, oh, ow) = (d * 2, h * 2, w * 2);
            let mut out = Tensor::zeros(&[b, c, od, oh, ow]);
            let src = input.data();
            let dst = out.data_mut();
            for bc in 0..b * c {
                let sbase = bc * d * h * w;
                let dbase = bc * od * oh * ow;
                for id in 0..od {
                    for ih in 0..oh {
                        let srow = sbase + ((id / 2) * h + ih / 2) * w;
                        let drow = dbase + (id * oh + ih) * ow;
                        for iw in 0..ow {
                            dst[drow + iw] = src[srow + iw / 2];
                        }
                    }
                }
            }
            Ok(out)
        }
        Resample::Half => {
            if d % 2 != 0 || h % 2 != 0 || w % 2 != 0 {
                return Err(Error::InvalidArgument(format!(
                    "downsampling needs even spatial dims, got {d}x{h}x{w}"
                )));
            }
            let (od, oh, ow) = (d / 2, h / 2, w / 2);
            let mut out = Tensor::zeros(&[b, c, od, oh, ow]);
            let src = input.data();
            let dst = out.data_mut();
            for bc in 0..b * c {
                let sbase = bc * d * h * w;
                let dbase = bc * od * oh * ow;
                for id in 0..od {
                    for ih in 0..oh {
                        let srow = sbase + ((id * 2) * h + ih * 2) * w;
                        let drow = dbase + (id * oh + ih) * ow;
                        for iw in 0..ow {
                            dst[drow + iw] = src[srow + iw * 2];
                        }
                    }
                }
            }
            Ok(out)
        }
    }
}

/// Backward of [`resample_nn`]: `Double` accumulates each 2x2x2 block into
/// its source voxel, `Half` scatters into the even indices.
pub fn resample_nn_backward<T: Scalar>(
    grad_out: &Tensor<T>,
    input_shape: &[usize],
    factor: Resample,
) -> Result<Tensor<T>> {
    let mut grad_in = Tensor::zeros(input_shape);
    let (b, c, d, h, w) = grad_in.dims5()?;
    let (gb, gc, gd, gh, gw) = grad_out.dims5()?;
    match factor {
        Resample::Double => {
            if (gb, gc, gd, gh, gw) != (b, c, d * 2, h * 2, w * 2) {
                return Err(Error::InvalidArgument(
                    "grad_out shape does not match doubled input".into(),
                ));
            }
            let src = grad_out.data();
            let dst = grad_in.data_mut();
            for bc in 0..b * c {
                let gbase = bc * gd * gh * gw;
                let ibase = bc * d * h * w;
                for id in 0..gd {
                    for ih in 0..gh {
                        let grow = gbase + (id * gh + ih) * gw;
                        let irow = ibase + ((id / 2) * h + ih / 2) * w;
                        for iw in 0..gw {
                            dst[irow + iw / 2] = dst[irow + iw / 2] + src[grow + iw];
                        }
                    }
                }
            }
        }
        Resample::Half => {
            if (gb, gc, gd, gh, gw) != (b, c, d / 2, h / 2, w / 2) {
                return Err(Error::InvalidArgument(
                    "grad_out shape does not match halved input".into(),
                ));
            }
            let src = grad_out.data();
            let dst = grad_in.data_mut();
            for bc in 0..b * c {
                let gbase = bc * gd * gh * gw;
                let ibase = bc * d * h * w;
                for id in 0..gd {
                    for ih in 0..gh {
                        let grow = gbase + (id * gh + ih) * gw;
                        let irow = ibase + ((id * 2) * h + ih * 2) * w;
                        for iw in 0..gw {
                            dst[irow + iw * 2] = src[grow + iw];
                        }
                    }
                }
            }
        }
    }
    Ok(grad_in)
}

/// Depth-wise (channel) concatenation: `a`'s channels come first.
pub fn concat_channels<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    let (ba, ca, da, ha, wa) = a.dims5()?;
    let (bb, cb, db, hb, wb) = b.dims5()?;
    if (ba, da, ha, wa) != (bb, db, hb, wb) {
        return Err(Error::InvalidArgument(format!(
            "concat needs matching non-channel dims, got {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let vol = da * ha * wa;
    let mut out = Tensor::zeros(&[ba, ca + cb, da, ha, wa]);
    let dst = out.data_mut();
    for n in 0..ba {
        let abase = n * ca * vol;
        let bbase = n * cb * vol;
        let obase = n * (ca + cb) * vol;
        dst[obase..obase + ca * vol].copy_from_slice(&a.data()[abase..abase + ca * vol]);
        dst[obase + ca * vol..obase + (ca + cb) * vol]
            .copy_from_slice(&b.data()[bbase..bbase + cb * vol]);
    }
    Ok(out)
}

/// Split a concatenated gradient back into the two operand shapes.
pub fn concat_channels_backward<T: Scalar>(
    grad_out: &Tensor<T>,
    channels_a: usize,
) -> Result<(Tensor<T>, Tensor<T>)> {
    let (b, c, d, h, w) = grad_out.dims5()?;
    if channels_a >= c {
        return Err(Error::InvalidArgument(format!(
            "cannot split {channels_a} channels from a {c}-channel tensor"
        )));
    }
    let cb = c - channels_a;
    let vol = d * h * w;
    let mut ga = Tensor::zeros(&[b, channels_a, d, h, w]);
    let mut gb = Tensor::zeros(&[b, cb, d, h, w]);
    for n in 0..b {
        let obase = n * c * vol;
        let abase = n * channels_a * vol;
        let bbase = n * cb * vol;
        ga.data_mut()[abase..abase + channels_a * vol]
            .copy_from_slice(&grad_out.data()[obase..obase + channels_a * vol]);
        gb.data_mut()[bbase..bbase + cb * vol]
            .copy_from_slice(&grad_out.data()[obase + channels_a * vol..obase + c * vol]);
    }
    Ok((ga, gb))
}
