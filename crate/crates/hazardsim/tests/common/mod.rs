//! Independent oracles shared by the integration and acceptance suites.
//!
//! Everything here recomputes expected values from first principles
//! (quadrature, root finding, direct ODE integration) without touching the
//! sampling or simulation code paths it is used to check.

#![allow(dead_code)]

/// Standard normal density.
pub fn phi(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Composite Simpson integration of `f` over `[lo, hi]`.
pub fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, panels: usize) -> f64 {
    assert!(panels > 0);
    let n = panels * 2;
    let h = (hi - lo) / n as f64;
    let mut sum = f(lo) + f(hi);
    for k in 1..n {
        let x = lo + k as f64 * h;
        sum += f(x) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * h / 3.0
}

/// Mean and standard deviation of N(mean, sd^2) truncated to [lo, hi],
/// computed by quadrature over the unnormalized density.
pub fn truncated_normal_moments(mean: f64, sd: f64, lo: f64, hi: f64) -> (f64, f64) {
    let density = |x: f64| phi((x - mean) / sd) / sd;
    let mass = simpson(density, lo, hi, 4000);
    let m1 = simpson(|x| x * density(x), lo, hi, 4000) / mass;
    let m2 = simpson(|x| x * x * density(x), lo, hi, 4000) / mass;
    (m1, (m2 - m1 * m1).sqrt())
}

/// Unnormalized density of the symmetric two-component offset mixture.
pub fn offset_mixture_density(x: f64, mean: f64, sd: f64) -> f64 {
    0.5 * phi((x - mean) / sd) / sd + 0.5 * phi((x + mean) / sd) / sd
}

/// P(|X| > threshold) for the offset mixture truncated to [-bound, bound],
/// computed by quadrature.
pub fn offset_mixture_tail_probability(mean: f64, sd: f64, bound: f64, threshold: f64) -> f64 {
    let density = |x: f64| offset_mixture_density(x, mean, sd);
    let mass = simpson(density, -bound, bound, 4000);
    let inner = simpson(density, -threshold, threshold, 4000);
    (mass - inner) / mass
}

/// Mean and sd of the truncated offset mixture by quadrature.
pub fn offset_mixture_moments(mean: f64, sd: f64, bound: f64) -> (f64, f64) {
    let density = |x: f64| offset_mixture_density(x, mean, sd);
    let mass = simpson(density, -bound, bound, 4000);
    let m1 = simpson(|x| x * density(x), -bound, bound, 4000) / mass;
    let m2 = simpson(|x| x * x * density(x), -bound, bound, 4000) / mass;
    (m1, (m2 - m1 * m1).sqrt())
}

/// Bisection root finder; `f(lo)` and `f(hi)` must bracket the root.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
    let mut flo = f(lo);
    assert!(
        flo * f(hi) <= 0.0,
        "bisection endpoints do not bracket a root"
    );
    for _ in 0..iters {
        let mid = 0.5 * (lo + hi);
        let fmid = f(mid);
        if flo * fmid <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fmid;
        }
    }
    0.5 * (lo + hi)
}

/// Free-road speed profile v(t) for dv/dt = a_max (1 - (v/v0)^delta),
/// integrated with classical fourth-order Runge-Kutta at a fine step.
pub fn free_road_speed(a_max: f64, v0: f64, delta: f64, t_end: f64) -> f64 {
    let f = |v: f64| a_max * (1.0 - (v / v0).powf(delta));
    let steps = (t_end / 0.001).round() as usize;
    let h = t_end / steps as f64;
    let mut v: f64 = 0.0;
    for _ in 0..steps {
        let k1 = f(v);
        let k2 = f(v + 0.5 * h * k1);
        let k3 = f(v + 0.5 * h * k2);
        let k4 = f(v + h * k3);
        v += h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
    }
    v
}

/// Sample mean and standard deviation.
pub fn sample_moments(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Breadth-first reachability count over a directed adjacency list.
pub fn bfs_reachable(adjacency: &[Vec<usize>], start: usize) -> usize {
    let mut seen = vec![false; adjacency.len()];
    let mut queue = std::collections::VecDeque::from([start]);
    seen[start] = true;
    let mut count = 1;
    while let Some(node) = queue.pop_front() {
        for &next in &adjacency[node] {
            if !seen[next] {
                seen[next] = true;
                count += 1;
                queue.push_back(next);
            }
        }
    }
    count
}
