//! Independent reference computations used by the integration tests and the
//! acceptance runner. Nothing here calls into the code under test except for
//! plain data types.

#![allow(dead_code)]

use std::f64::consts::TAU;

/// Minimum total cost over all injective row -> column maps, by exhaustive
/// enumeration.
pub fn brute_force_assignment(cost: &[Vec<f64>]) -> f64 {
    fn go(cost: &[Vec<f64>], row: usize, used: &mut [bool], acc: f64, best: &mut f64) {
        if row == cost.len() {
            *best = best.min(acc);
            return;
        }
        for c in 0..used.len() {
            if !used[c] {
                used[c] = true;
                go(cost, row + 1, used, acc + cost[row][c], best);
                used[c] = false;
            }
        }
    }
    let cols = cost.first().map_or(0, Vec::len);
    let mut best = f64::INFINITY;
    go(cost, 0, &mut vec![false; cols], 0.0, &mut best);
    best
}

/// Grid cost matrix built from scratch: min-max normalization, `s = ceil(sqrt n)`,
/// cell centers at `((c + 0.5) / s, (r + 0.5) / s)`, squared distance.
pub fn grid_cost_matrix(points: &[[f64; 2]]) -> (usize, Vec<Vec<f64>>) {
    let n = points.len();
    let mut s = 0;
    while s * s < n {
        s += 1;
    }
    let axis = |d: usize| {
        let lo = points.iter().map(|p| p[d]).fold(f64::INFINITY, f64::min);
        let hi = points
            .iter()
            .map(|p| p[d])
            .fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    };
    let (ax, ay) = (axis(0), axis(1));
    let norm = |v: f64, (lo, hi): (f64, f64)| if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
    let cost = points
        .iter()
        .map(|p| {
            let (x, y) = (norm(p[0], ax), norm(p[1], ay));
            (0..s * s)
                .map(|cell| {
                    let cx = ((cell % s) as f64 + 0.5) / s as f64;
                    let cy = ((cell / s) as f64 + 0.5) / s as f64;
                    (x - cx).powi(2) + (y - cy).powi(2)
                })
                .collect()
        })
        .collect();
    (s, cost)
}

/// Greedy baseline: each point, in index order, takes the cheapest free cell.
pub fn greedy_cost(cost: &[Vec<f64>]) -> f64 {
    let cols = cost.first().map_or(0, Vec::len);
    let mut used = vec![false; cols];
    let mut total = 0.0;
    for row in cost {
        let (best, c) = (0..cols).filter(|&c| !used[c]).map(|c| (c, row[c])).fold(
            (usize::MAX, f64::INFINITY),
            |a, b| if b.1 < a.1 { b } else { a },
        );
        used[best] = true;
        total += c;
    }
    total
}

/// Entropy (nats) of `p_j ∝ exp(-beta d_j)`, computed without any shift.
pub fn row_entropy(dist: &[f64], beta: f64) -> f64 {
    let w: Vec<f64> = dist.iter().map(|d| (-beta * d).exp()).collect();
    let z: f64 = w.iter().sum();
    w.iter()
        .map(|v| v / z)
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.ln())
        .sum()
}

/// KL(P || Q) with a Student-t kernel, straight from the definition.
pub fn naive_kl(p: &[f64], n: usize, y: &[[f64; 2]]) -> f64 {
    let kern = |i: usize, j: usize| {
        let d2 = (y[i][0] - y[j][0]).powi(2) + (y[i][1] - y[j][1]).powi(2);
        1.0 / (1.0 + d2)
    };
    let mut z = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                z += kern(i, j);
            }
        }
    }
    let mut kl = 0.0;
    for i in 0..n {
        for j in 0..n {
            let pij = p[i * n + j];
            if i != j && pij > 0.0 {
                kl += pij * (pij / (kern(i, j) / z)).ln();
            }
        }
    }
    kl
}

/// Central finite-difference gradient of [`naive_kl`].
pub fn fd_gradient(p: &[f64], n: usize, y: &[[f64; 2]], eps: f64) -> Vec<[f64; 2]> {
    let mut g = vec![[0.0; 2]; n];
    let mut yy = y.to_vec();
    for i in 0..n {
        for d in 0..2 {
            let orig = yy[i][d];
            yy[i][d] = orig + eps;
            let plus = naive_kl(p, n, &yy);
            yy[i][d] = orig - eps;
            let minus = naive_kl(p, n, &yy);
            yy[i][d] = orig;
            g[i][d] = (plus - minus) / (2.0 * eps);
        }
    }
    g
}

/// Fraction of points whose 3 nearest neighbours (excluding self) share its label.
pub fn knn_purity(y: &[[f64; 2]], labels: &[usize], k: usize) -> f64 {
    let n = y.len();
    let mut agree = 0usize;
    for i in 0..n {
        let mut d: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| ((y[i][0] - y[j][0]).powi(2) + (y[i][1] - y[j][1]).powi(2), j))
            .collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0));
        agree += d[..k]
            .iter()
            .filter(|(_, j)| labels[*j] == labels[i])
            .count();
    }
    agree as f64 / (n * k) as f64
}

/// Interaction parameters of a trace header.
#[derive(Clone, Copy, Debug)]
pub struct RingParams {
    pub cx: f64,
    pub cy: f64,
    pub base_radius: f64,
    pub gain: f64,
    pub sensitivity: f64,
    pub decay_rate: f64,
    pub sigma: f64,
    pub decay: bool,
    pub dt_cap: f64,
}

/// Replays `(t, x, y)` records with the interaction rules written out
/// directly: the hit tick is the one whose direction best matches the cursor
/// direction, and brush weights are evaluated for every tick.
pub fn naive_replay(h: &RingParams, events: &[(f64, f64, f64)]) -> Vec<f64> {
    let n = 512usize;
    let mut v = vec![0.0f64; n];
    let Some(&(t0, _, _)) = events.first() else {
        return v;
    };
    let mut prev = t0;
    for &(t, x, y) in events {
        let dt = (t - prev).min(h.dt_cap);
        prev = t;
        let (dx, dy) = (x - h.cx, y - h.cy);
        let r = (dx * dx + dy * dy).sqrt();
        if r >= h.base_radius - h.gain && r <= h.base_radius + h.gain && r > 0.0 {
            let hit = (0..n)
                .max_by(|&a, &b| {
                    let dir = |k: usize| {
                        let a = TAU * k as f64 / n as f64;
                        a.sin() * dx - a.cos() * dy
                    };
                    dir(a).total_cmp(&dir(b))
                })
                .unwrap();
            let drive = ((r - h.base_radius) / h.gain).clamp(-1.0, 1.0);
            let reach = (3.0 * h.sigma).ceil() as usize;
            for (j, vj) in v.iter_mut().enumerate() {
                let delta = {
                    let d = j.abs_diff(hit);
                    d.min(n - d)
                };
                let w = if h.sigma == 0.0 {
                    if delta == 0 {
                        1.0
                    } else {
                        0.0
                    }
                } else if delta <= reach {
                    (-((delta * delta) as f64) / (2.0 * h.sigma * h.sigma)).exp()
                } else {
                    0.0
                };
                if w != 0.0 {
                    *vj = (*vj + h.sensitivity * drive * w * dt).clamp(-3.0, 3.0);
                }
            }
        }
        if h.decay && dt > 0.0 {
            let f = (-h.decay_rate * dt).exp();
            for vj in v.iter_mut() {
                *vj *= f;
                if vj.abs() < 1e-4 {
                    *vj = 0.0;
                }
            }
        }
    }
    v
}
