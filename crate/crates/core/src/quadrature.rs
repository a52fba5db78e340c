//! Gauss–Legendre rules.

/// Nodes and weights of the `n`-point Gauss–Legendre rule on [-1, 1].
///
/// Roots of P_n by Newton iteration from the Chebyshev-like initial guess;
/// accurate to machine precision for the small `n` used here.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Composite rule on [a, b] with `panels` equal panels of an `order`-point rule.
pub fn composite(a: f64, b: f64, panels: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(order);
    let width = (b - a) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * order);
    let mut weights = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let left = a + width * p as f64;
        let mid = left + 0.5 * width;
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(mid + 0.5 * width * xi);
            weights.push(0.5 * width * wi);
        }
    }
    (nodes, weights)
}

/// Rule on [0, len] with panels halving towards 0, for integrands with an
/// algebraic endpoint singularity at 0.
pub fn graded_near_zero(len: f64, levels: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    let mut right = len;
    for _ in 0..levels {
        let (x, w) = composite(0.5 * right, right, 1, order);
        nodes.extend(x);
        weights.extend(w);
        right *= 0.5;
    }
    let (x, w) = composite(0.0, right, 1, order);
    nodes.extend(x);
    weights.extend(w);
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        for n in 1..=10 {
            let (x, w) = gauss_legendre(n);
            for degree in 0..2 * n {
                let approx: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(degree as i32)).sum();
                let exact = if degree % 2 == 1 { 0.0 } else { 2.0 / (degree as f64 + 1.0) };
                assert!((approx - exact).abs() < 1e-13, "n={n} degree={degree}");
            }
        }
    }

    #[test]
    fn eight_point_nodes_are_sorted_and_symmetric() {
        let (x, w) = gauss_legendre(8);
        assert!(x.windows(2).all(|p| p[0] < p[1]));
        for k in 0..8 {
            assert!((x[k] + x[7 - k]).abs() < 1e-15);
            assert!((w[k] - w[7 - k]).abs() < 1e-15);
        }
        assert!((x[7] - 0.960_289_856_497_536_3).abs() < 1e-15);
    }

    #[test]
    fn composite_exponential() {
        let (x, w) = composite(0.0, 10.0, 10, 8);
        let v: f64 = x.iter().zip(&w).map(|(x, w)| w * (-x).exp()).sum();
        assert!((v - (1.0 - (-10.0f64).exp())).abs() < 1e-14);
    }

    #[test]
    fn graded_rule_handles_sqrt_singularity() {
        let (x, w) = graded_near_zero(1.0, 30, 8);
        let v: f64 = x.iter().zip(&w).map(|(x, w)| w * x.sqrt()).sum();
        assert!((v - 2.0 / 3.0).abs() < 1e-13, "{v}");
        let (x, _) = composite(0.0, 1.0, 1, 8);
        let plain: f64 = gauss_legendre(8).1.iter().zip(&x).map(|(w, x)| 0.5 * w * x.sqrt()).sum();
        assert!((plain - 2.0 / 3.0).abs() > 1e-6);
    }
}
