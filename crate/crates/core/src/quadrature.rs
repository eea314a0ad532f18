//! One-dimensional quadrature rules.

use nalgebra::{DMatrix, SymmetricEigen};

const SIMPSON_MAX_DEPTH: u32 = 60;

/// Adaptive Simpson on `[a, b]`, accepting a panel once its two halves agree
/// to within `15 * max(abs_tol, rel_tol * |panel|)`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> f64 {
    if a == b {
        return 0.0;
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = simpson(a, b, fa, fm, fb);
    refine(
        &f,
        a,
        b,
        fa,
        fm,
        fb,
        whole,
        abs_tol,
        rel_tol,
        SIMPSON_MAX_DEPTH,
    )
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    abs_tol: f64,
    rel_tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    let tol = abs_tol.max(rel_tol * (left + right).abs());
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    refine(
        f,
        a,
        m,
        fa,
        flm,
        fm,
        left,
        0.5 * abs_tol,
        rel_tol,
        depth - 1,
    ) + refine(
        f,
        m,
        b,
        fm,
        frm,
        fb,
        right,
        0.5 * abs_tol,
        rel_tol,
        depth - 1,
    )
}

/// Nodes and weights of an `n`-point rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    /// Gauss-Legendre on `[-1, 1]`, roots by Newton iteration on `P_n`.
    pub fn gauss_legendre(n: usize) -> Rule {
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let dp = legendre(n, x).1;
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Rule { nodes, weights }
    }

    /// Gauss-Hermite for the weight `exp(-x^2)`, from the eigen-decomposition
    /// of the Jacobi matrix.
    pub fn gauss_hermite(n: usize) -> Rule {
        let jacobi = DMatrix::from_fn(n, n, |i, j| {
            if i.abs_diff(j) == 1 {
                (i.max(j) as f64 / 2.0).sqrt()
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(jacobi);
        let mu0 = std::f64::consts::PI.sqrt();
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|k| (eig.eigenvalues[k], mu0 * eig.eigenvectors[(0, k)].powi(2)))
            .collect();
        pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
        Rule {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        }
    }

    /// `sum w_i f(x_i)`.
    pub fn apply<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// The rule mapped affinely onto `[a, b]` and applied to `f`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> f64 {
        let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
        h * self.apply(|x| f(c + h * x))
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    (p1, n as f64 * (x * p1 - p0) / (x * x - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_polynomials_and_exp() {
        let v = adaptive_simpson(|x| x * x * x, 0.0, 2.0, 1e-14, 0.0);
        assert!((v - 4.0).abs() < 1e-13);
        let e = adaptive_simpson(f64::exp, 0.0, 1.0, 1e-13, 0.0);
        assert!((e - (1f64.exp() - 1.0)).abs() < 1e-12);
        assert_eq!(adaptive_simpson(f64::exp, 1.0, 1.0, 1e-12, 0.0), 0.0);
        let rev = adaptive_simpson(f64::exp, 1.0, 0.0, 1e-13, 0.0);
        assert!((rev + e).abs() < 1e-13);
    }

    #[test]
    fn legendre_rule() {
        let r = Rule::gauss_legendre(64);
        assert!((r.weights.iter().sum::<f64>() - 2.0).abs() < 1e-13);
        assert!(r.nodes.windows(2).all(|p| p[0] < p[1]));
        // exact through degree 127
        let v = r.apply(|x| x.powi(126));
        assert!((v - 2.0 / 127.0).abs() < 1e-14);
        let s = r.integrate(f64::sin, 0.0, std::f64::consts::PI);
        assert!((s - 2.0).abs() < 1e-14);
        let small = Rule::gauss_legendre(3);
        assert!((small.nodes[2] - 0.6f64.sqrt()).abs() < 1e-15);
        assert!((small.weights[1] - 8.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn hermite_rule_moments() {
        let r = Rule::gauss_hermite(40);
        let sp = std::f64::consts::PI.sqrt();
        assert!((r.apply(|_| 1.0) - sp).abs() < 1e-13);
        assert!((r.apply(|x| x * x) - sp / 2.0).abs() < 1e-13);
        assert!((r.apply(|x| x.powi(4)) - 0.75 * sp).abs() < 1e-12);
        assert!(r.apply(|x| x.powi(3)).abs() < 1e-13);
        let two = Rule::gauss_hermite(2);
        assert!((two.nodes[1] - 0.5f64.sqrt()).abs() < 1e-15);
    }
}
