//! 3x3x3 convolution with zero padding 1 and stride 1 (shape preserving),
//! forward and backward.

use super::{Scalar, Tensor};
use crate::error::{Error, Result};

/// Copy one D x H x W channel into a zero-padded (D+2) x (H+2) x (W+2)
/// scratch buffer so every tap of the 3x3x3 kernel walks full-length rows
/// with no edge cases.
#[inline]
fn pad_channel<T: Scalar>(src: &[T], d: usize, h: usize, w: usize, dst: &mut [T]) {
    let (ph, pw) = (h + 2, w + 2);
    for v in dst.iter_mut() {
        *v = T::zero();
    }
    for z in 0..d {
        for y in 0..h {
            let s = (z * h + y) * w;
            let t = ((z + 1) * ph + y + 1) * pw + 1;
            dst[t..t + w].copy_from_slice(&src[s..s + w]);
        }
    }
}

/// `dst[i] += a*pad[i] + b*pad[i+1] + c*pad[i+2]` over a full row; `pad` is
/// one row of the padded buffer (length >= dst.len() + 2).
#[inline(always)]
fn fma_row<T: Scalar>(dst: &mut [T], pad: &[T], a: T, b: T, c: T) {
    let w = dst.len();
    let p0 = &pad[..w];
    let p1 = &pad[1..w + 1];
    let p2 = &pad[2..w + 2];
    for (((d, &x0), &x1), &x2) in dst.iter_mut().zip(p0).zip(p1).zip(p2) {
        *d = *d + a * x0 + b * x1 + c * x2;
    }
}

/// Three shifted dots of `go` against one padded row:
/// `(sum go[i]*pad[i], sum go[i]*pad[i+1], sum go[i]*pad[i+2])`.
/// Two independent accumulators per tap hide the FMA latency chain.
#[inline(always)]
fn dot_row3<T: Scalar>(go: &[T], pad: &[T]) -> (T, T, T) {
    let w = go.len();
    let mut s0a = T::zero();
    let mut s0b = T::zero();
    let mut s1a = T::zero();
    let mut s1b = T::zero();
    let mut s2a = T::zero();
    let mut s2b = T::zero();
    let mut i = 0usize;
    while i + 1 < w {
        let g0 = go[i];
        let g1 = go[i + 1];
        s0a = s0a + g0 * pad[i];
        s0b = s0b + g1 * pad[i + 1];
        s1a = s1a + g0 * pad[i + 1];
        s1b = s1b + g1 * pad[i + 2];
        s2a = s2a + g0 * pad[i + 2];
        s2b = s2b + g1 * pad[i + 3];
        i += 2;
    }
    if i < w {
        let g = go[i];
        s0a = s0a + g * pad[i];
        s1a = s1a + g * pad[i + 1];
        s2a = s2a + g * pad[i + 2];
    }
    (s0a + s0b, s1a + s1b, s2a + s2b)
}

fn check_conv_shapes<T: Scalar>(
    input: &Tensor<T>,
    kernel: &Tensor<T>,
    bias: Option<&Tensor<T>>,
) -> Result<(usize, usize, usize, usize, usize, usize)> {
    let (b, ci, d, h, w) = input.dims5()?;
    let ks = kernel.shape();
    if ks.len() != 5 || ks[2] != 3 || ks[3] != 3 || ks[4] != 3 {
        return Err(Error::InvalidArgument(format!(
            "kernel must be [c_out, c_in, 3, 3, 3], got {ks:?}"
        )));
    }
    if ks[1] != ci {
        return Err(Error::InvalidArgument(format!(
            "kernel expects {} input channels, tensor has {ci}",
            ks[1]
        )));
    }
    let co = ks[0];
    if let Some(bias) = bias {
        if bias.shape() != [co] {
            return Err(Error::InvalidArgument(format!(
                "bias shape {:?} does not match {co} output channels",
                bias.shape()
            )));
        }
    }
    Ok((b, ci, co, d, h, w))
}

/// Cross-correlation plus bias; spatial shape preserved.
pub fn conv3d_forward<T: Scalar>(
    input: &Tensor<T>,
    kernel: &Tensor<T>,
    bias: &Tensor<T>,
) -> Result<Tensor<T>> {
    let (nb, ci, co, d, h, w) = check_conv_shapes(input, kernel, Some(bias))?;
    let mut out = Tensor::zeros(&[nb, co, d, h, w]);
    let vol = d * h * w;
    let (ph, pw) = (h + 2, w + 2);
    let kdata = kernel.data();
    let idata = input.data();
    let odata = out.data_mut();
    let mut pad = vec![T::zero(); (d + 2) * ph * pw];

    for b in 0..nb {
        for oc in 0..co {
            let obase = (b * co + oc) * vol;
            let bv = bias.data()[oc];
            for v in &mut odata[obase..obase + vol] {
                *v = bv;
            }
        }
        for ic in 0..ci {
            let ibase = (b * ci + ic) * vol;
            pad_channel(&idata[ibase..ibase + vol], d, h, w, &mut pad);
            for oc in 0..co {
                let obase = (b * co + oc) * vol;
                let kbase = (oc * ci + ic) * 27;
                for kd in 0..3usize {
                    for kh in 0..3usize {
                        let koff = kbase + (kd * 3 + kh) * 3;
                        let (w0, w1, w2) = (kdata[koff], kdata[koff + 1], kdata[koff + 2]);
                        for od in 0..d {
                            let prow = ((od + kd) * ph + kh) * pw;
                            let orow = obase + od * h * w;
                            for oh in 0..h {
                                fma_row(
                                    &mut odata[orow + oh * w..orow + oh * w + w],
                                    &pad[prow + oh * pw..prow + oh * pw + pw],
                                    w0,
                                    w1,
                                    w2,
                                );
                            }
                        }
                    }
                }
            }
        }
    }
    debug_assert!(out.all_finite());
    Ok(out)
}

/// Exact gradients of [`conv3d_forward`] with respect to input, kernel, bias.
pub fn conv3d_backward<T: Scalar>(
    grad_out: &Tensor<T>,
    input: &Tensor<T>,
    kernel: &Tensor<T>,
) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>)> {
    let (nb, ci, co, d, h, w) = check_conv_shapes(input, kernel, None)?;
    if grad_out.shape() != [nb, co, d, h, w] {
        return Err(Error::InvalidArgument(format!(
            "grad_out shape {:?} does not match forward output [{nb}, {co}, {d}, {h}, {w}]",
            grad_out.shape()
        )));
    }
    let vol = d * h * w;
    let (ph, pw) = (h + 2, w + 2);
    let pvol = (d + 2) * ph * pw;
    let mut grad_input = Tensor::zeros(input.shape());
    let mut grad_kernel = Tensor::zeros(kernel.shape());
    let mut grad_bias = Tensor::zeros(&[co]);

    let kdata = kernel.data();
    let idata = input.data();
    let gdata = grad_out.data();
    let gi = grad_input.data_mut();
    let gk = grad_kernel.data_mut();
    let gb = grad_bias.data_mut();

    // Padded copies: all grad_out channels of the current batch element,
    // plus one reusable input-channel pad.
    let mut gopad = vec![T::zero(); co * pvol];
    let mut inpad = vec![T::zero(); pvol];

    for b in 0..nb {
        for oc in 0..co {
            let gbase = (b * co + oc) * vol;
            let gchan = &gdata[gbase..gbase + vol];
            pad_channel(gchan, d, h, w, &mut gopad[oc * pvol..(oc + 1) * pvol]);
            let mut bias_acc = T::zero();
            for &g in gchan {
                bias_acc = bias_acc + g;
            }
            gb[oc] = gb[oc] + bias_acc;
        }

        for ic in 0..ci {
            let ibase = (b * ci + ic) * vol;
            pad_channel(&idata[ibase..ibase + vol], d, h, w, &mut inpad);
            for oc in 0..co {
                let gbase = (b * co + oc) * vol;
                let gchan = &gdata[gbase..gbase + vol];
                let gpad = &gopad[oc * pvol..(oc + 1) * pvol];
                let kbase = (oc * ci + ic) * 27;
                for kd in 0..3usize {
                    for kh in 0..3usize {
                        let koff = kbase + (kd * 3 + kh) * 3;
                        let (w0, w1, w2) = (kdata[koff], kdata[koff + 1], kdata[koff + 2]);
                        let mut k0 = T::zero();
                        let mut k1 = T::zero();
                        let mut k2 = T::zero();
                        for z in 0..d {
                            // dL/dinput row base: grad_out padded at (z+2-kd, y+2-kh)
                            let girow = ibase + z * h * w;
                            let gprow = ((z + 2 - kd) * ph + 2 - kh) * pw;
                            // dL/dkernel row base: input padded at (z+kd, y+kh)
                            let iprow = ((z + kd) * ph + kh) * pw;
                            let grow = z * h * w;
                            for y in 0..h {
                                let dst = &mut gi[girow + y * w..girow + y * w + w];
                                let src = &gpad[gprow + y * pw..gprow + y * pw + pw];
                                fma_row(dst, src, w2, w1, w0);

                                let go_row = &gchan[grow + y * w..grow + y * w + w];
                                let ip_row = &inpad[iprow + y * pw..iprow + y * pw + pw];
                                let (s0, s1, s2) = dot_row3(go_row, ip_row);
                                k0 = k0 + s0;
                                k1 = k1 + s1;
                                k2 = k2 + s2;
                            }
                        }
                        gk[koff] = gk[koff] + k0;
                        gk[koff + 1] = gk[koff + 1] + k1;
                        gk[koff + 2] = gk[koff + 2] + k2;
                    }
                }
            }
        }
    }
    debug_assert!(grad_input.all_finite() && grad_kernel.all_finite());
    Ok((grad_input, grad_kernel, grad_bias))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rand_tensor(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor<f64> {
        let len = shape.iter().product();
        let data = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Tensor::from_vec(shape, data).unwrap()
    }

    /// Naive 6-nested-loop reference convolution.
    fn conv_reference(input: &Tensor<f64>, kernel: &Tensor<f64>, bias: &Tensor<f64>) -> Tensor<f64> {
        let (nb, ci, d, h, w) = input.dims5().unwrap();
        let co = kernel.shape()[0];
        let mut out = Tensor::zeros(&[nb, co, d, h, w]);
        let at5 = |s: &[usize], a, b, c, e, f| (((a * s[1] + b) * s[2] + c) * s[3] + e) * s[4] + f;
        for b in 0..nb {
            for oc in 0..co {
                for od in 0..d {
                    for oh in 0..h {
                        for ow in 0..w {
                            let mut acc = bias.data()[oc];
                            for ic in 0..ci {
                                for kd in 0..3 {
                                    for kh in 0..3 {
                                        for kw in 0..3 {
                                            let id = od as i64 + kd as i64 - 1;
                                            let ih = oh as i64 + kh as i64 - 1;
                                            let iw = ow as i64 + kw as i64 - 1;
                                            if id < 0 || ih < 0 || iw < 0 {
                                                continue;
                                            }
                                            let (id, ih, iw) = (id as usize, ih as usize, iw as usize);
                                            if id >= d || ih >= h || iw >= w {
                                                continue;
                                            }
                                            let kv = kernel.data()
                                                [(((oc * ci + ic) * 3 + kd) * 3 + kh) * 3 + kw];
                                            let iv = input.data()
                                                [at5(input.shape(), b, ic, id, ih, iw)];
                                            acc += kv * iv;
                                        }
                                    }
                                }
                            }
                            out.data_mut()[at5(&[nb, co, d, h, w], b, oc, od, oh, ow)] = acc;
                        }
                    }
                }
            }
        }
        out
    }

    #[test]
    fn ones_kernel_center_sums_27() {
        let input = Tensor::from_vec(&[1, 1, 3, 3, 3], vec![1.0f64; 27]).unwrap();
        let kernel = Tensor::from_vec(&[1, 1, 3, 3, 3], vec![1.0f64; 27]).unwrap();
        let bias = Tensor::zeros(&[1]);
        let out = conv3d_forward(&input, &kernel, &bias).unwrap();
        // center voxel sees the whole 3^3 block of ones
        assert_eq!(out.data()[(1 * 3 + 1) * 3 + 1], 27.0);
        // a corner sees a 2^3 block
        assert_eq!(out.data()[0], 8.0);
    }

    #[test]
    fn identity_kernel_passes_input_through() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let input = rand_tensor(&[2, 1, 4, 4, 4], &mut rng);
        let mut kdata = vec![0.0f64; 27];
        kdata[13] = 1.0; // center tap
        let kernel = Tensor::from_vec(&[1, 1, 3, 3, 3], kdata).unwrap();
        let bias = Tensor::from_vec(&[1], vec![0.25]).unwrap();
        let out = conv3d_forward(&input, &kernel, &bias).unwrap();
        for (o, i) in out.data().iter().zip(input.data()) {
            assert!((o - (i + 0.25)).abs() < 1e-15);
        }
    }

    #[test]
    fn forward_matches_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let input = rand_tensor(&[2, 3, 4, 4, 4], &mut rng);
        let kernel = rand_tensor(&[2, 3, 3, 3, 3], &mut rng);
        let bias = rand_tensor(&[2], &mut rng);
        let fast = conv3d_forward(&input, &kernel, &bias).unwrap();
        let slow = conv_reference(&input, &kernel, &bias);
        let max = fast
            .data()
            .iter()
            .zip(slow.data())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(max < 1e-12, "max abs diff {max}");
    }

    #[test]
    fn shape_mismatch_rejected() {
        let input = Tensor::<f64>::zeros(&[1, 2, 4, 4, 4]);
        let kernel = Tensor::<f64>::zeros(&[3, 1, 3, 3, 3]);
        let bias = Tensor::<f64>::zeros(&[3]);
        assert!(conv3d_forward(&input, &kernel, &bias).is_err());
        let kernel = Tensor::<f64>::zeros(&[3, 2, 3, 3, 3]);
        let bias_bad = Tensor::<f64>::zeros(&[2]);
        assert!(conv3d_forward(&input, &kernel, &bias_bad).is_err());
        let go_bad = Tensor::<f64>::zeros(&[1, 2, 4, 4, 4]);
        assert!(conv3d_backward(&go_bad, &input, &kernel).is_err());
    }

    #[test]
    fn zero_grad_out_gives_zero_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let input = rand_tensor(&[1, 2, 4, 4, 4], &mut rng);
        let kernel = rand_tensor(&[2, 2, 3, 3, 3], &mut rng);
        let go = Tensor::zeros(&[1, 2, 4, 4, 4]);
        let (gi, gk, gb) = conv3d_backward(&go, &input, &kernel).unwrap();
        assert!(gi.data().iter().all(|&v| v == 0.0));
        assert!(gk.data().iter().all(|&v| v == 0.0));
        assert!(gb.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn backward_is_linear_in_grad_out() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let input = rand_tensor(&[1, 2, 4, 4, 4], &mut rng);
        let kernel = rand_tensor(&[2, 2, 3, 3, 3], &mut rng);
        let go = rand_tensor(&[1, 2, 4, 4, 4], &mut rng);
        let scaled = Tensor::from_vec(
            go.shape(),
            go.data().iter().map(|v| v * 2.5).collect(),
        )
        .unwrap();
        let (gi1, gk1, gb1) = conv3d_backward(&go, &input, &kernel).unwrap();
        let (gi2, gk2, gb2) = conv3d_backward(&scaled, &input, &kernel).unwrap();
        for (a, b) in gi1.data().iter().zip(gi2.data()) {
            assert!((a * 2.5 - b).abs() < 1e-12);
        }
        for (a, b) in gk1.data().iter().zip(gk2.data()) {
            assert!((a * 2.5 - b).abs() < 1e-12);
        }
        for (a, b) in gb1.data().iter().zip(gb2.data()) {
            assert!((a * 2.5 - b).abs() < 1e-12);
        }
    }
}
