//! LSQR (Paige & Saunders) for `min |A x - b|^2 + damp^2 |x|^2`, driven only
//! by products with `A` and `A'`. Started from zero, the iterates stay in the
//! row space of `A`, so an undamped rank-deficient problem converges to the
//! minimum-norm solution.

/// A matrix known only through its action on vectors.
pub trait LinearOperator {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// `y += A x`
    fn apply_add(&self, x: &[f64], y: &mut [f64]);
    /// `x += A' y`
    fn apply_transpose_add(&self, y: &[f64], x: &mut [f64]);
}

#[derive(Debug, Clone, Copy)]
pub struct LsqrOptions {
    pub damp: f64,
    /// Target for `|A'r - damp^2 x| / |A'b|`.
    pub tolerance: f64,
    pub max_iterations: usize,
}

#[derive(Debug, Clone)]
pub struct LsqrOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Exact normal-equation residual `|A'(b - A x) - damp^2 x| / |A'b|`,
    /// recomputed from the final iterate.
    pub relative_residual: f64,
    pub converged: bool,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn scale(v: &mut [f64], s: f64) {
    v.iter_mut().for_each(|x| *x *= s);
}

/// Normal-equation residual of `x`, relative to `|A'b|`.
pub fn normal_residual<A: LinearOperator>(a: &A, b: &[f64], damp: f64, x: &[f64], atb_norm: f64) -> f64 {
    let mut r = b.to_vec();
    let mut ax = vec![0.0; a.nrows()];
    a.apply_add(x, &mut ax);
    r.iter_mut().zip(&ax).for_each(|(r, ax)| *r -= ax);
    let mut g: Vec<f64> = x.iter().map(|xi| -damp * damp * xi).collect();
    a.apply_transpose_add(&r, &mut g);
    if atb_norm > 0.0 {
        norm(&g) / atb_norm
    } else {
        norm(&g)
    }
}

pub fn lsqr<A: LinearOperator>(a: &A, b: &[f64], opts: LsqrOptions) -> LsqrOutcome {
    let (m, n) = (a.nrows(), a.ncols());
    assert_eq!(b.len(), m);
    let damp = opts.damp;
    let mut x = vec![0.0; n];

    let mut u = b.to_vec();
    let mut beta = norm(&u);
    let mut v = vec![0.0; n];
    let mut alpha = 0.0;
    if beta > 0.0 {
        scale(&mut u, 1.0 / beta);
        a.apply_transpose_add(&u, &mut v);
        alpha = norm(&v);
    }
    let atb_norm = alpha * beta;
    if alpha == 0.0 {
        // b is orthogonal to the range of A: x = 0 is optimal
        return LsqrOutcome {
            x,
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
        };
    }
    scale(&mut v, 1.0 / alpha);
    let mut w = v.clone();
    let mut phibar = beta;
    let mut rhobar = alpha;

    let threshold = opts.tolerance * atb_norm;
    let mut iterations = 0;
    let mut checked_at = None;
    let mut relative_residual = f64::INFINITY;
    let mut tmp_u = vec![0.0; m];
    let mut tmp_v = vec![0.0; n];

    while iterations < opts.max_iterations {
        iterations += 1;

        // bidiagonalization step
        tmp_u.iter_mut().zip(&u).for_each(|(t, ui)| *t = -alpha * ui);
        a.apply_add(&v, &mut tmp_u);
        std::mem::swap(&mut u, &mut tmp_u);
        beta = norm(&u);
        if beta > 0.0 {
            scale(&mut u, 1.0 / beta);
            tmp_v.iter_mut().zip(&v).for_each(|(t, vi)| *t = -beta * vi);
            a.apply_transpose_add(&u, &mut tmp_v);
            std::mem::swap(&mut v, &mut tmp_v);
            alpha = norm(&v);
            if alpha > 0.0 {
                scale(&mut v, 1.0 / alpha);
            }
        }

        // eliminate the damping term
        let rhobar1 = rhobar.hypot(damp);
        let cs1 = rhobar / rhobar1;
        phibar *= cs1;

        // plane rotation removing the subdiagonal beta
        let rho = rhobar1.hypot(beta);
        let cs = rhobar1 / rho;
        let sn = beta / rho;
        let theta = sn * alpha;
        rhobar = -cs * alpha;
        let phi = cs * phibar;
        phibar *= sn;
        let tau = sn * phi;

        let t1 = phi / rho;
        let t2 = -theta / rho;
        for ((xi, wi), vi) in x.iter_mut().zip(w.iter_mut()).zip(&v) {
            *xi += t1 * *wi;
            *wi = vi + t2 * *wi;
        }

        let arnorm_estimate = alpha * tau.abs();
        let exhausted = alpha == 0.0 || beta == 0.0;
        let due = match checked_at {
            None => arnorm_estimate <= threshold,
            // the estimate drifts from the true residual; recheck periodically
            Some(last) => iterations - last >= 10,
        };
        if due || exhausted {
            relative_residual = normal_residual(a, b, damp, &x, atb_norm);
            checked_at = Some(iterations);
            if relative_residual <= opts.tolerance || exhausted {
                break;
            }
        }
    }
    if checked_at != Some(iterations) {
        relative_residual = normal_residual(a, b, damp, &x, atb_norm);
    }
    LsqrOutcome {
        x,
        iterations,
        relative_residual,
        converged: relative_residual <= opts.tolerance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Dense row-major test operator.
    struct Dense {
        rows: usize,
        cols: usize,
        a: Vec<f64>,
    }

    impl LinearOperator for Dense {
        fn nrows(&self) -> usize {
            self.rows
        }
        fn ncols(&self) -> usize {
            self.cols
        }
        fn apply_add(&self, x: &[f64], y: &mut [f64]) {
            for i in 0..self.rows {
                y[i] += (0..self.cols).map(|j| self.a[i * self.cols + j] * x[j]).sum::<f64>();
            }
        }
        fn apply_transpose_add(&self, y: &[f64], x: &mut [f64]) {
            for j in 0..self.cols {
                x[j] += (0..self.rows).map(|i| self.a[i * self.cols + j] * y[i]).sum::<f64>();
            }
        }
    }

    fn opts(damp: f64) -> LsqrOptions {
        LsqrOptions {
            damp,
            tolerance: 1e-12,
            max_iterations: 100,
        }
    }

    #[test]
    fn overdetermined_least_squares() {
        // fit y = c0 + c1 t to (0,1), (1,3), (2,4): c1 = 1.5, c0 = 7/6
        let a = Dense {
            rows: 3,
            cols: 2,
            a: vec![1.0, 0.0, 1.0, 1.0, 1.0, 2.0],
        };
        let out = lsqr(&a, &[1.0, 3.0, 4.0], opts(0.0));
        assert!(out.converged);
        assert!((out.x[0] - 7.0 / 6.0).abs() < 1e-12);
        assert!((out.x[1] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn minimum_norm_for_duplicate_columns() {
        // two identical columns: the weight splits evenly
        let a = Dense {
            rows: 2,
            cols: 2,
            a: vec![1.0, 1.0, 1.0, 1.0],
        };
        let out = lsqr(&a, &[2.0, 2.0], opts(0.0));
        assert!((out.x[0] - 1.0).abs() < 1e-12 && (out.x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn damped_scalar() {
        // min (x - 3)^2 + 1 * x^2  =>  x = 1.5
        let a = Dense {
            rows: 1,
            cols: 1,
            a: vec![1.0],
        };
        let out = lsqr(&a, &[3.0], opts(1.0));
        assert!((out.x[0] - 1.5).abs() < 1e-12);
        assert!(out.relative_residual < 1e-12);
    }

    #[test]
    fn zero_rhs() {
        let a = Dense {
            rows: 2,
            cols: 1,
            a: vec![1.0, 2.0],
        };
        let out = lsqr(&a, &[0.0, 0.0], opts(0.0));
        assert_eq!(out.x, [0.0]);
        assert!(out.converged);
    }
}
