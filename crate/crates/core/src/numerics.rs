//! Small numerical building blocks: finite-difference weights, Gauss-Legendre
//! nodes, pairwise summation and FFT frequency bookkeeping.

use std::f64::consts::PI;

use num_complex::Complex64;

/// Finite-difference weights for the `order`-th derivative at `x0` using the
/// given nodes (Fornberg's recursion).
pub fn fornberg_weights(x0: f64, nodes: &[f64], order: usize) -> Vec<f64> {
    let n = nodes.len();
    assert!(n > order, "need more nodes than the derivative order");
    // c[j][k]: weight of node j for the k-th derivative
    let mut c = vec![vec![0.0; order + 1]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[order]).collect()
}

/// Symmetric integer offsets `-p..=p` with weights for the `order`-th
/// derivative, unit spacing. `extra` widens the stencil beyond the minimal
/// second-order-accurate one by `extra` nodes on each side.
pub fn central_stencil(order: usize, extra: usize) -> (Vec<i32>, Vec<f64>) {
    let p = order.div_ceil(2).max(1) + extra;
    let offsets: Vec<i32> = (-(p as i32)..=p as i32).collect();
    let nodes: Vec<f64> = offsets.iter().map(|&o| o as f64).collect();
    let weights = fornberg_weights(0.0, &nodes, order);
    (offsets, weights)
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite Gauss-Legendre rule on `[a, b]` with `panels` panels of
/// `per_panel` nodes each.
pub fn composite_gauss(a: f64, b: f64, panels: usize, per_panel: usize) -> (Vec<f64>, Vec<f64>) {
    let (gx, gw) = gauss_legendre(per_panel);
    let width = (b - a) / panels as f64;
    let mut xs = Vec::with_capacity(panels * per_panel);
    let mut ws = Vec::with_capacity(panels * per_panel);
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * width;
        for (x, w) in gx.iter().zip(&gw) {
            xs.push(mid + 0.5 * width * x);
            ws.push(0.5 * width * w);
        }
    }
    (xs, ws)
}

/// Pairwise (cascade) sum; the rounding error grows like `log n`.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 16;
    if values.len() <= BLOCK {
        values.iter().sum()
    } else {
        let (lo, hi) = values.split_at(values.len() / 2);
        pairwise_sum(lo) + pairwise_sum(hi)
    }
}

pub fn pairwise_sum_complex(values: &[Complex64]) -> Complex64 {
    const BLOCK: usize = 16;
    if values.len() <= BLOCK {
        values.iter().sum()
    } else {
        let (lo, hi) = values.split_at(values.len() / 2);
        pairwise_sum_complex(lo) + pairwise_sum_complex(hi)
    }
}

/// Angular frequency of FFT bin `m` for `n` samples spaced `dt` apart, in
/// the ordering used by an unshifted transform.
pub fn fft_angular_frequency(m: usize, n: usize, dt: f64) -> f64 {
    let signed = if m < n.div_ceil(2) { m as f64 } else { m as f64 - n as f64 };
    2.0 * PI * signed / (n as f64 * dt)
}

/// Whether successive samples are equally spaced to a relative `tol`.
pub fn is_uniform(samples: &[f64], tol: f64) -> bool {
    if samples.len() < 2 {
        return true;
    }
    let step = (samples[samples.len() - 1] - samples[0]) / (samples.len() - 1) as f64;
    if step <= 0.0 {
        return false;
    }
    samples
        .windows(2)
        .all(|w| ((w[1] - w[0]) - step).abs() <= tol * step)
}
