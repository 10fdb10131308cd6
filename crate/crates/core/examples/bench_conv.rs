use anomsal_core::net::{backward, forward, ArchSpec, NetworkParams};
use anomsal_core::tensor::conv::{conv3d_backward, conv3d_forward};
use anomsal_core::tensor::Tensor;
use std::time::Instant;

fn main() {
    let spec = ArchSpec::new(16, 8).unwrap();
    let params = NetworkParams::<f32>::init(spec, 1);
    let input = Tensor::from_vec(&[1, 1, 16, 16, 16], (0..4096).map(|i| (i % 2) as f32).collect()).unwrap();
    let (_, cache) = forward(&params, &input).unwrap();
    let go = Tensor::from_vec(&[1, 1, 16, 16, 16], vec![1e-4f32; 4096]).unwrap();
    let _ = backward(&params, &cache, &go).unwrap();

    let iters = 300;
    let t0 = Instant::now();
    for _ in 0..iters {
        let (o, c) = forward(&params, &input).unwrap();
        std::hint::black_box((&o, &c.pre_sigmoid()));
    }
    let fwd = t0.elapsed().as_secs_f64() / iters as f64;

    let (_, cache) = forward(&params, &input).unwrap();
    let t0 = Instant::now();
    for _ in 0..iters {
        let (g, gi) = backward(&params, &cache, &go).unwrap();
        std::hint::black_box((&g, &gi));
    }
    let bwd = t0.elapsed().as_secs_f64() / iters as f64;
    println!("forward: {:.3} ms   backward: {:.3} ms   total {:.3} ms", fwd*1e3, bwd*1e3, (fwd+bwd)*1e3);

    // isolated conv layer: 8->8 channels at 16^3 (the most expensive layers)
    let x = Tensor::from_vec(&[1, 8, 16, 16, 16], (0..8*4096).map(|i| (i % 5) as f32 * 0.1).collect()).unwrap();
    let k = Tensor::from_vec(&[8, 8, 3, 3, 3], (0..8*8*27).map(|i| (i % 7) as f32 * 0.01).collect()).unwrap();
    let b = Tensor::from_vec(&[8], vec![0.0f32; 8]).unwrap();
    let t0 = Instant::now();
    for _ in 0..iters { std::hint::black_box(conv3d_forward(&x, &k, &b).unwrap()); }
    let cf = t0.elapsed().as_secs_f64() / iters as f64;
    let gmacs = 27.0*8.0*8.0*4096.0/1e9;
    println!("conv 8->8@16^3 fwd: {:.3} ms  ({:.2} GMAC/s)", cf*1e3, gmacs/cf);
    let goc = Tensor::from_vec(&[1, 8, 16, 16, 16], vec![1e-3f32; 8*4096]).unwrap();
    let t0 = Instant::now();
    for _ in 0..iters { std::hint::black_box(conv3d_backward(&goc, &x, &k).unwrap()); }
    let cb = t0.elapsed().as_secs_f64() / iters as f64;
    println!("conv 8->8@16^3 bwd: {:.3} ms  ({:.2} GMAC/s eq)", cb*1e3, 2.0*gmacs/cb);
}
