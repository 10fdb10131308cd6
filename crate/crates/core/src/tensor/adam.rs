//! ADAM optimizer with bias correction.

use super::Scalar;
use crate::error::{Error, Result};

/// Optimizer hyper-parameters. The training defaults follow the published
/// recipe: learning rate 1e-4, beta1 = 0.0, beta2 = 0.999.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamHyper {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            beta1: 0.0,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First/second moment accumulators for an ordered list of parameter
/// tensors, plus the shared step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub hyper: AdamHyper,
    step: u64,
    first: Vec<Vec<T>>,
    second: Vec<Vec<T>>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(hyper: AdamHyper, sizes: &[usize]) -> Self {
        Self {
            hyper,
            step: 0,
            first: sizes.iter().map(|&n| vec![T::zero(); n]).collect(),
            second: sizes.iter().map(|&n| vec![T::zero(); n]).collect(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn moments(&self, slot: usize) -> (&[T], &[T]) {
        (&self.first[slot], &self.second[slot])
    }

    pub fn moments_mut(&mut self, slot: usize) -> (&mut Vec<T>, &mut Vec<T>) {
        // split_at_mut not needed: first and second are distinct fields
        (&mut self.first[slot], &mut self.second[slot])
    }

    pub fn slots(&self) -> usize {
        self.first.len()
    }

    /// Restore accumulators from a checkpoint.
    pub fn restore(hyper: AdamHyper, step: u64, first: Vec<Vec<T>>, second: Vec<Vec<T>>) -> Self {
        Self { hyper, step, first, second }
    }

    /// One bias-corrected ADAM update over every parameter tensor.
    /// `params[i]` and `grads[i]` must match the sizes given at creation.
    pub fn step(&mut self, params: &mut [&mut [T]], grads: &[&[T]]) -> Result<()> {
        if params.len() != self.first.len() || grads.len() != self.first.len() {
            return Err(Error::InvalidArgument(format!(
                "optimizer tracks {} tensors, got {} params / {} grads",
                self.first.len(),
                params.len(),
                grads.len()
            )));
        }
        self.step += 1;
        let t = self.step;
        let lr = T::from_f64(self.hyper.learning_rate);
        let b1 = T::from_f64(self.hyper.beta1);
        let b2 = T::from_f64(self.hyper.beta2);
        let eps = T::from_f64(self.hyper.epsilon);
        let one = T::one();
        let corr1 = T::from_f64(1.0 - self.hyper.beta1.powi(t as i32));
        let corr2 = T::from_f64(1.0 - self.hyper.beta2.powi(t as i32));

        for slot in 0..self.first.len() {
            let p = &mut *params[slot];
            let g = grads[slot];
            if p.len() != self.first[slot].len() || g.len() != p.len() {
                return Err(Error::InvalidArgument(format!(
                    "slot {slot}: parameter/gradient size mismatch"
                )));
            }
            let m = &mut self.first[slot];
            let v = &mut self.second[slot];
            for i in 0..p.len() {
                m[i] = b1 * m[i] + (one - b1) * g[i];
                v[i] = b2 * v[i] + (one - b2) * g[i] * g[i];
                let m_hat = m[i] / corr1;
                let v_hat = v[i] / corr2;
                p[i] = p[i] - lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params_unchanged() {
        let mut st = AdamState::<f64>::new(AdamHyper::default(), &[3]);
        let mut p = vec![1.0, -2.0, 0.5];
        let orig = p.clone();
        st.step(&mut [&mut p], &[&[0.0, 0.0, 0.0]]).unwrap();
        assert_eq!(p, orig);
        assert_eq!(st.step_count(), 1);
    }

    /// First step with beta1 = 0: update magnitude is lr * g / (|g| + eps),
    /// i.e. essentially lr * sign(g).
    #[test]
    fn first_step_is_signed_learning_rate() {
        let hyper = AdamHyper::default();
        for &g in &[0.7f64, -0.002, 3.5] {
            let mut st = AdamState::<f64>::new(hyper, &[1]);
            let mut p = vec![0.0f64];
            st.step(&mut [&mut p[..]], &[&[g]]).unwrap();
            // m_hat = g, v_hat = g^2 exactly after bias correction
            let expect = -hyper.learning_rate * g / (g.abs() + hyper.epsilon);
            assert!((p[0] - expect).abs() < 1e-18, "g={g}: {} vs {expect}", p[0]);
            assert!((p[0].abs() - hyper.learning_rate).abs() < 1e-8);
        }
    }

    /// Constant gradient reproduces the closed-form second-moment recurrence
    /// v_t = (1 - beta2^t) * g^2.
    #[test]
    fn second_moment_recurrence() {
        let hyper = AdamHyper::default();
        let g = 0.3f64;
        let mut st = AdamState::<f64>::new(hyper, &[1]);
        let mut p = vec![0.0f64];
        for t in 1..=2u32 {
            st.step(&mut [&mut p[..]], &[&[g]]).unwrap();
            let (_, v) = st.moments(0);
            let expect = (1.0 - hyper.beta2.powi(t as i32)) * g * g;
            assert!((v[0] - expect).abs() < 1e-15, "t={t}: {} vs {expect}", v[0]);
        }
    }

    #[test]
    fn deterministic_given_same_inputs() {
        let hyper = AdamHyper { beta1: 0.9, ..AdamHyper::default() };
        let run = || {
            let mut st = AdamState::<f64>::new(hyper, &[2]);
            let mut p = vec![0.1, -0.4];
            for i in 0..10 {
                let g = [0.01 * i as f64, -0.02];
                st.step(&mut [&mut p[..]], &[&g[..]]).unwrap();
            }
            p
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn size_mismatch_rejected() {
        let mut st = AdamState::<f64>::new(AdamHyper::default(), &[2]);
        let mut p = vec![0.0; 3];
        assert!(st.step(&mut [&mut p[..]], &[&[0.0, 0.0, 0.0][..]]).is_err());
    }
}
