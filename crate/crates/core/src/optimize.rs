//! Box-constrained BFGS minimizer with projected gradients.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub struct BoxBfgs {
    pub max_iter: usize,
    /// Stop when the projected gradient's largest component is below this.
    pub grad_tol: f64,
    /// Largest step, in the infinity norm, on the first iteration.
    pub max_first_step: f64,
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad: Vec<f64>,
    pub iterations: usize,
}

/// Components sitting on a bound with the gradient pushing outward.
pub fn active_set(x: &[f64], grad: &[f64], lo: f64, hi: f64) -> Vec<bool> {
    x.iter()
        .zip(grad)
        .map(|(&xi, &gi)| (xi <= lo && gi > 0.0) || (xi >= hi && gi < 0.0))
        .collect()
}

impl BoxBfgs {
    /// Minimize `f` over `[lo, hi]^n` from `x0`. `f` returns `None` where it is
    /// undefined; such points are rejected by the line search.
    pub fn minimize<F>(&self, f: F, x0: &[f64], lo: f64, hi: f64) -> Option<Minimum>
    where
        F: Fn(&[f64]) -> Option<(f64, Vec<f64>)>,
    {
        let n = x0.len();
        let project = |x: &mut [f64]| x.iter_mut().for_each(|v| *v = v.clamp(lo, hi));
        let mut x = x0.to_vec();
        project(&mut x);
        let (mut fx, mut g) = f(&x)?;
        let mut h = DMatrix::<f64>::identity(n, n);
        let mut scaled = false;
        let mut iterations = 0;

        while iterations < self.max_iter {
            let active = active_set(&x, &g, lo, hi);
            let pg = DVector::from_iterator(n, g.iter().zip(&active).map(|(&gi, &a)| if a { 0.0 } else { gi }));
            if pg.amax() <= self.grad_tol {
                break;
            }
            iterations += 1;

            let mut d = -(&h * &pg);
            for (di, &a) in d.iter_mut().zip(&active) {
                if a {
                    *di = 0.0;
                }
            }
            if d.dot(&pg) >= 0.0 {
                h = DMatrix::identity(n, n);
                scaled = false;
                d = -pg.clone();
            }
            let mut t = if scaled { 1.0 } else { (self.max_first_step / d.amax()).min(1.0) };

            let mut accepted = None;
            while t > 1e-16 {
                let mut xn: Vec<f64> = x.iter().zip(d.iter()).map(|(xi, di)| xi + t * di).collect();
                project(&mut xn);
                if let Some((fn_, gn)) = f(&xn) {
                    let decrease: f64 = g.iter().zip(&xn).zip(&x).map(|((gi, a), b)| gi * (a - b)).sum();
                    if fn_.is_finite() && fn_ <= fx + 1e-4 * decrease {
                        accepted = Some((xn, fn_, gn));
                        break;
                    }
                }
                t *= 0.5;
            }
            let Some((xn, fn_, gn)) = accepted else { break };

            let s = DVector::from_iterator(n, xn.iter().zip(&x).map(|(a, b)| a - b));
            let y = DVector::from_iterator(n, gn.iter().zip(&g).map(|(a, b)| a - b));
            let sy = s.dot(&y);
            let progress = fx - fn_;
            x = xn;
            g = gn;
            fx = fn_;
            if sy > 1e-12 * s.norm() * y.norm() {
                if !scaled {
                    h = DMatrix::identity(n, n) * (sy / y.dot(&y));
                    scaled = true;
                }
                let rho = 1.0 / sy;
                let hy = &h * &y;
                let yhy = y.dot(&hy);
                // H' = H - ρ(H y sᵀ + s yᵀ H) + (ρ² yᵀHy + ρ) s sᵀ
                h -= (&hy * s.transpose() + &s * hy.transpose()) * rho;
                h += (&s * s.transpose()) * (rho * rho * yhy + rho);
            }
            if progress.abs() <= 1e-16 * fx.abs().max(1.0) && s.amax() <= 1e-14 {
                break;
            }
        }
        Some(Minimum { x, value: fx, grad: g, iterations })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock_interior() {
        let f = |x: &[f64]| {
            let (a, b) = (x[0], x[1]);
            let v = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            let g = vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)];
            Some((v, g))
        };
        let opt = BoxBfgs { max_iter: 500, grad_tol: 1e-10, max_first_step: 1.0 };
        let m = opt.minimize(f, &[-1.2, 1.0], -5.0, 5.0).unwrap();
        assert!((m.x[0] - 1.0).abs() < 1e-6 && (m.x[1] - 1.0).abs() < 1e-6, "{:?}", m.x);
    }

    #[test]
    fn solution_on_the_bound() {
        // minimum of (x-3)² + (y+1)² over [0,2]² is (2, 0)
        let f = |x: &[f64]| Some(((x[0] - 3.0).powi(2) + (x[1] + 1.0).powi(2), vec![2.0 * (x[0] - 3.0), 2.0 * (x[1] + 1.0)]));
        let opt = BoxBfgs { max_iter: 100, grad_tol: 1e-12, max_first_step: 1.0 };
        let m = opt.minimize(f, &[1.0, 1.0], 0.0, 2.0).unwrap();
        assert_eq!(m.x, vec![2.0, 0.0]);
        assert_eq!(active_set(&m.x, &m.grad, 0.0, 2.0), vec![true, true]);
    }
}
