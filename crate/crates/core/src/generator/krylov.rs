//! Restarted GMRES with right preconditioning, for complex matrix-free operators.

use num_complex::Complex64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GmresOptions {
    /// Target relative residual `|b - A x| / |b|`.
    pub tol: f64,
    pub restart: usize,
    pub max_iter: usize,
}

impl Default for GmresOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            restart: 40,
            max_iter: 500,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GmresOutcome {
    pub x: Vec<Complex64>,
    pub iterations: usize,
    /// True relative residual at exit.
    pub residual: f64,
    pub converged: bool,
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// `sum conj(a) b`.
fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn residual(
    apply: &impl Fn(&[Complex64], &mut [Complex64]),
    b: &[Complex64],
    x: &[Complex64],
    out: &mut [Complex64],
) -> f64 {
    apply(x, out);
    for (o, bi) in out.iter_mut().zip(b) {
        *o = bi - *o;
    }
    norm(out)
}

/// Givens rotation `(c, s)` with real `c` mapping `(a, b)` to `(r, 0)`.
fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    let na = a.norm();
    if na == 0.0 {
        return (0.0, Complex64::new(1.0, 0.0));
    }
    let r = na.hypot(b.norm());
    (na / r, a * b.conj() / (na * r))
}

fn rotate(c: f64, s: Complex64, x: &mut Complex64, y: &mut Complex64) {
    let (a, b) = (*x, *y);
    *x = c * a + s * b;
    *y = -s.conj() * a + c * b;
}

/// Solves `A x = b` where `apply(v, out)` writes `A v` and `precond(v)`
/// overwrites `v` with `P^{-1} v`.
pub fn gmres(
    apply: impl Fn(&[Complex64], &mut [Complex64]),
    precond: impl Fn(&mut [Complex64]),
    b: &[Complex64],
    opts: GmresOptions,
) -> GmresOutcome {
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return GmresOutcome {
            x: vec![Complex64::default(); n],
            iterations: 0,
            residual: 0.0,
            converged: true,
        };
    }
    let target = opts.tol * bnorm;
    let m = opts.restart.max(1);

    let mut x = b.to_vec();
    precond(&mut x);
    let mut r = vec![Complex64::default(); n];
    let mut beta = residual(&apply, b, &x, &mut r);
    let mut iterations = 0;

    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(m + 1);
    let mut h = vec![vec![Complex64::default(); m]; m + 1];
    let mut rot: Vec<(f64, Complex64)> = Vec::with_capacity(m);
    let mut w = vec![Complex64::default(); n];
    let mut z = vec![Complex64::default(); n];

    while beta > target && iterations < opts.max_iter {
        basis.clear();
        rot.clear();
        basis.push(r.iter().map(|v| v / beta).collect());
        let mut g = vec![Complex64::default(); m + 1];
        g[0] = Complex64::new(beta, 0.0);
        let mut k = 0;
        while k < m && iterations < opts.max_iter {
            z.copy_from_slice(&basis[k]);
            precond(&mut z);
            apply(&z, &mut w);
            for (i, v) in basis.iter().enumerate() {
                let hij = dot(v, &w);
                h[i][k] = hij;
                w.iter_mut().zip(v).for_each(|(wi, vi)| *wi -= hij * vi);
            }
            let hn = norm(&w);
            h[k + 1][k] = Complex64::new(hn, 0.0);
            for (i, &(c, s)) in rot.iter().enumerate() {
                let (top, bottom) = h.split_at_mut(i + 1);
                rotate(c, s, &mut top[i][k], &mut bottom[0][k]);
            }
            let (c, s) = givens(h[k][k], h[k + 1][k]);
            rot.push((c, s));
            {
                let (top, bottom) = h.split_at_mut(k + 1);
                rotate(c, s, &mut top[k][k], &mut bottom[0][k]);
            }
            let (gk, gk1) = g.split_at_mut(k + 1);
            rotate(c, s, &mut gk[k], &mut gk1[0]);
            iterations += 1;
            k += 1;
            if g[k].norm() <= target || hn == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / hn).collect());
        }
        // back substitution on the k x k triangle
        let mut y = vec![Complex64::default(); k];
        for i in (0..k).rev() {
            let mut acc = g[i];
            for j in i + 1..k {
                acc -= h[i][j] * y[j];
            }
            y[i] = acc / h[i][i];
        }
        z.iter_mut().for_each(|v| *v = Complex64::default());
        for (yi, v) in y.iter().zip(&basis) {
            z.iter_mut().zip(v).for_each(|(zj, vj)| *zj += yi * vj);
        }
        precond(&mut z);
        x.iter_mut().zip(&z).for_each(|(xi, zi)| *xi += zi);
        let prev = beta;
        beta = residual(&apply, b, &x, &mut r);
        if !(beta.is_finite()) || (k == 0 && beta >= prev) {
            break;
        }
    }
    GmresOutcome {
        x,
        iterations,
        residual: beta / bnorm,
        converged: beta <= target,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
        (0..n)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect()
    }

    #[test]
    fn givens_zeroes_second_entry() {
        let mut a = Complex64::new(0.3, -1.2);
        let mut b = Complex64::new(2.0, 0.5);
        let r = a.norm().hypot(b.norm());
        let (c, s) = givens(a, b);
        rotate(c, s, &mut a, &mut b);
        assert!(b.norm() < 1e-15);
        assert!((a.norm() - r).abs() < 1e-14);
    }

    #[test]
    fn solves_dense_nonsymmetric_system() {
        let n = 30;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mat: Vec<Vec<Complex64>> = (0..n)
            .map(|i| {
                let mut row = random_vec(n, &mut rng);
                row.iter_mut().for_each(|v| *v *= 0.1);
                row[i] += Complex64::new(3.0, 1.0);
                row
            })
            .collect();
        let apply = |v: &[Complex64], out: &mut [Complex64]| {
            for (o, row) in out.iter_mut().zip(&mat) {
                *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
            }
        };
        let b = random_vec(n, &mut rng);
        let opts = GmresOptions {
            tol: 1e-12,
            restart: 5,
            max_iter: 500,
        };
        let out = gmres(apply, |_| {}, &b, opts);
        assert!(out.converged, "{out:?}");
        let mut check = vec![Complex64::default(); n];
        apply(&out.x, &mut check);
        let err: f64 = check
            .iter()
            .zip(&b)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(err <= 1e-12 * norm(&b) * 1.01);
    }

    #[test]
    fn exact_preconditioner_converges_immediately() {
        let d: Vec<Complex64> = (0..20)
            .map(|i| Complex64::new(1.0 + i as f64, -2.0))
            .collect();
        let apply = |v: &[Complex64], out: &mut [Complex64]| {
            for ((o, vi), di) in out.iter_mut().zip(v).zip(&d) {
                *o = vi * di;
            }
        };
        let precond = |v: &mut [Complex64]| v.iter_mut().zip(&d).for_each(|(vi, di)| *vi /= di);
        let b = vec![Complex64::new(1.0, 1.0); 20];
        let out = gmres(apply, precond, &b, GmresOptions::default());
        assert!(out.converged);
        assert_eq!(out.iterations, 0);
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let out = gmres(
            |v, o| o.copy_from_slice(v),
            |_| {},
            &[Complex64::default(); 4],
            GmresOptions::default(),
        );
        assert!(out.converged && out.x.iter().all(|v| *v == Complex64::default()));
    }

    #[test]
    fn reports_non_convergence() {
        let n = 50;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mat: Vec<Vec<Complex64>> = (0..n).map(|_| random_vec(n, &mut rng)).collect();
        let apply = |v: &[Complex64], out: &mut [Complex64]| {
            for (o, row) in out.iter_mut().zip(&mat) {
                *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
            }
        };
        let b = random_vec(n, &mut rng);
        let out = gmres(
            apply,
            |_| {},
            &b,
            GmresOptions {
                tol: 1e-14,
                restart: 2,
                max_iter: 6,
            },
        );
        assert!(!out.converged);
        assert_eq!(out.iterations, 6);
        assert!(out.residual > 1e-14);
    }
}
