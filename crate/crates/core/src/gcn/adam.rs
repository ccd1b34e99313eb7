use alloc::vec::Vec;

use crate::linalg::Matrix;
use crate::math;

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: i32,
    first: Vec<Matrix>,
    second: Vec<Matrix>,
}

impl Adam {
    pub fn new(learning_rate: f64) -> Self {
        Adam { learning_rate, beta1: 0.9, beta2: 0.999, epsilon: 1e-8, step: 0, first: Vec::new(), second: Vec::new() }
    }

    /// Applies one update. `params` and `grads` must keep the same order and
    /// shapes across calls.
    pub fn step<'a>(&mut self, params: Vec<&mut Matrix>, grads: impl Iterator<Item = &'a Matrix>) {
        self.step += 1;
        let c1 = 1.0 - math::powi(self.beta1, self.step);
        let c2 = 1.0 - math::powi(self.beta2, self.step);
        for (i, (p, g)) in params.into_iter().zip(grads).enumerate() {
            if self.first.len() <= i {
                self.first.push(Matrix::zeros(g.rows(), g.cols()));
                self.second.push(Matrix::zeros(g.rows(), g.cols()));
            }
            let m = self.first[i].as_mut_slice();
            let v = self.second[i].as_mut_slice();
            for (((w, &gv), mv), vv) in p.as_mut_slice().iter_mut().zip(g.as_slice()).zip(m).zip(v) {
                *mv = self.beta1 * *mv + (1.0 - self.beta1) * gv;
                *vv = self.beta2 * *vv + (1.0 - self.beta2) * gv * gv;
                let m_hat = *mv / c1;
                let v_hat = *vv / c2;
                *w -= self.learning_rate * m_hat / (math::sqrt(v_hat) + self.epsilon);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_a_quadratic() {
        let mut x = Matrix::from_rows(&[[3.0, -2.0]]).unwrap();
        let mut opt = Adam::new(0.1);
        for _ in 0..500 {
            let g = x.clone(); // d/dx of ½‖x‖²
            opt.step(alloc::vec![&mut x], core::iter::once(&g));
        }
        assert!(x.frobenius_sq() < 1e-4);
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut x = Matrix::from_rows(&[[1.0, 2.0]]).unwrap();
        let g = Matrix::zeros(1, 2);
        let mut opt = Adam::new(0.005);
        for _ in 0..10 {
            opt.step(alloc::vec![&mut x], core::iter::once(&g));
        }
        assert_eq!(x.as_slice(), &[1.0, 2.0]);
    }
}
