//! Gauss-Legendre quadrature, used for singular-kernel cell averages and for
//! independent cross-checks of grid sums.

/// Nodes and weights of the `n`-point Gauss-Legendre rule on [-1, 1].
///
/// Newton iteration on the Legendre polynomial from the Chebyshev initial
/// guess; accurate to machine precision for the modest orders used here.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // p, dp: Legendre P_n and its derivative at x by upward recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let p = p1;
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Integrate `f` over [a, b] with a composite `n`-point rule on one panel.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let (x, w) = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut sum = 0.0;
    for i in 0..n {
        sum += w[i] * f(mid + half * x[i]);
    }
    sum * half
}

/// Average of `1/|z|` over the unit cube `[-1/2, 1/2]^3`.
///
/// By symmetry and the rescaling `z -> z/2` this reduces to a regular double
/// integral: `3 * int_0^1 int_0^1 (1 + u^2 + v^2)^{-1/2} du dv`, which a
/// tensor Gauss-Legendre rule resolves to full precision.
pub fn unit_cube_kernel_average() -> f64 {
    let n = 48;
    let (x, w) = gauss_legendre(n);
    // Map [-1,1] -> [0,1].
    let mut sum = 0.0;
    for i in 0..n {
        let u = 0.5 * (x[i] + 1.0);
        for j in 0..n {
            let v = 0.5 * (x[j] + 1.0);
            sum += w[i] * w[j] * (1.0 + u * u + v * v).powf(-0.5);
        }
    }
    3.0 * sum * 0.25
}
