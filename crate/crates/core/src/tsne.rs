//! Exact t-SNE: perplexity-calibrated Gaussian affinities and a 2-D
//! Student-t embedding found by gradient descent on KL(P || Q).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Maximum bisection steps per point when calibrating precisions.
pub const CALIBRATION_STEPS: usize = 50;
pub const DEFAULT_PERPLEXITY: f64 = 30.0;
/// Allowed |H_i - ln(perplexity)|.
pub const ENTROPY_TOLERANCE: f64 = 1e-5;

/// Symmetric joint probabilities, row-major `n x n`, zero diagonal, summing to 1.
#[derive(Clone, Debug, PartialEq)]
pub struct AffinityMatrix<T> {
    n: usize,
    p: Vec<T>,
    perplexity: T,
    betas: Vec<T>,
    /// Σ p ln p, cached for KL evaluation.
    neg_entropy: T,
}

impl<T: Scalar> AffinityMatrix<T> {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.p[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.p
    }

    pub fn perplexity(&self) -> T {
        self.perplexity
    }

    /// Per-point precisions `1 / (2 σ_i²)` found by the calibration search.
    pub fn betas(&self) -> &[T] {
        &self.betas
    }

    /// Builds from an explicit joint matrix, checking symmetry, sign, and normalization.
    pub fn from_joint(n: usize, p: Vec<T>) -> Result<Self> {
        if n < 2 || p.len() != n * n {
            return Err(Error::DegenerateCorpus(format!(
                "joint matrix must be n x n with n >= 2, got {} entries",
                p.len()
            )));
        }
        let tol = T::lit(1e-6);
        let mut total = T::zero();
        for i in 0..n {
            if !p[i * n + i].is_zero() {
                return Err(Error::DegenerateCorpus("nonzero diagonal".into()));
            }
            for j in 0..n {
                let v = p[i * n + j];
                if !(v >= T::zero() && v.is_finite()) || (v - p[j * n + i]).abs() > tol {
                    return Err(Error::DegenerateCorpus(format!(
                        "entry ({i},{j}) negative or asymmetric"
                    )));
                }
                total += v;
            }
        }
        if (total - T::one()).abs() > tol {
            return Err(Error::DegenerateCorpus(format!("entries sum to {total}")));
        }
        Ok(AffinityMatrix {
            n,
            neg_entropy: neg_entropy(&p),
            p,
            perplexity: T::nan(),
            betas: Vec::new(),
        })
    }
}

/// Squared Euclidean distances, row-major `n x n`.
pub fn squared_distances<T: Scalar, V: AsRef<[T]>>(x: &[V]) -> Vec<T> {
    let n = x.len();
    let mut d = vec![T::zero(); n * n];
    for i in 0..n {
        let xi = x[i].as_ref();
        for j in (i + 1)..n {
            let dij = xi
                .iter()
                .zip(x[j].as_ref())
                .map(|(a, b)| (*a - *b) * (*a - *b))
                .sum::<T>();
            d[i * n + j] = dij;
            d[j * n + i] = dij;
        }
    }
    d
}

/// Conditional distribution `p_{j|i} ∝ exp(-β d_ij)` over `j != i` and its
/// Shannon entropy in nats. `row` holds distances to every other point.
pub fn conditional_row<T: Scalar>(row: &[T], beta: T) -> (Vec<T>, T) {
    // Shift by the nearest distance; the normalized distribution is unchanged.
    let d_min = row.iter().copied().fold(T::infinity(), T::min);
    let mut p: Vec<T> = row.iter().map(|&d| (-(d - d_min) * beta).exp()).collect();
    let sum: T = p.iter().copied().sum();
    let weighted: T = p.iter().zip(row).map(|(pj, &d)| *pj * (d - d_min)).sum();
    let entropy = sum.ln() + beta * weighted / sum;
    p.iter_mut().for_each(|v| *v /= sum);
    (p, entropy)
}

/// Calibrates per-point precisions to the target perplexity and symmetrizes.
///
/// Each β_i starts from the inverse mean squared distance, then doubles or
/// halves until the target entropy is bracketed and bisects from there, for
/// at most [`CALIBRATION_STEPS`] evaluations.
pub fn calibrate_affinities<T: Scalar, V: AsRef<[T]>>(
    x: &[V],
    perplexity: T,
) -> Result<AffinityMatrix<T>> {
    let n = x.len();
    if n < 2 {
        return Err(Error::DegenerateCorpus(format!(
            "t-SNE needs at least 2 points, got {n}"
        )));
    }
    let dims = x[0].as_ref().len();
    if x.iter().any(|v| v.as_ref().len() != dims) {
        return Err(Error::DegenerateCorpus(
            "feature vectors differ in length".into(),
        ));
    }
    let p_max = T::from_usize_lossy(n - 1);
    if !(perplexity >= T::one() && perplexity <= p_max) {
        return Err(Error::InvalidPerplexity {
            perplexity: perplexity.to_f64_lossless(),
            points: n,
        });
    }
    let dist = squared_distances(x);
    let target = perplexity.ln();
    let tol = T::lit(ENTROPY_TOLERANCE);
    let two = T::lit(2.0);

    let mut cond = vec![T::zero(); n * n];
    let mut betas = Vec::with_capacity(n);
    let mut row = Vec::with_capacity(n - 1);
    for i in 0..n {
        row.clear();
        row.extend((0..n).filter(|&j| j != i).map(|j| dist[i * n + j]));
        let mean = row.iter().copied().sum::<T>() / T::from_usize_lossy(n - 1);
        let mut beta = if mean > T::zero() {
            T::one() / mean
        } else {
            T::one()
        };
        let (mut lo, mut hi) = (None::<T>, None::<T>);
        let (mut best, mut entropy) = conditional_row(&row, beta);
        for _ in 1..CALIBRATION_STEPS {
            let gap = entropy - target;
            if gap.abs() <= tol {
                break;
            }
            if gap > T::zero() {
                // Too flat: sharpen.
                lo = Some(beta);
                beta = match hi {
                    Some(h) => (beta + h) / two,
                    None => beta * two,
                };
            } else {
                hi = Some(beta);
                beta = match lo {
                    Some(l) => (beta + l) / two,
                    None => beta / two,
                };
            }
            (best, entropy) = conditional_row(&row, beta);
        }
        betas.push(beta);
        let mut k = 0;
        for j in 0..n {
            if j != i {
                cond[i * n + j] = best[k];
                k += 1;
            }
        }
    }

    let denom = two * T::from_usize_lossy(n);
    let mut p = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                p[i * n + j] = (cond[i * n + j] + cond[j * n + i]) / denom;
            }
        }
    }
    Ok(AffinityMatrix {
        n,
        neg_entropy: neg_entropy(&p),
        p,
        perplexity,
        betas,
    })
}

fn neg_entropy<T: Scalar>(p: &[T]) -> T {
    p.iter()
        .filter(|v| **v > T::zero())
        .map(|&v| v * v.ln())
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TsneOptions<T> {
    pub iterations: usize,
    pub seed: u64,
    pub learning_rate: T,
    pub exaggeration: T,
    pub exaggeration_iterations: usize,
    pub initial_momentum: T,
    pub final_momentum: T,
    pub momentum_switch: usize,
    pub min_gain: T,
    pub init_std: T,
}

impl<T: Scalar> Default for TsneOptions<T> {
    fn default() -> Self {
        TsneOptions {
            iterations: 1000,
            seed: 42,
            learning_rate: T::lit(200.0),
            exaggeration: T::lit(12.0),
            exaggeration_iterations: 250,
            initial_momentum: T::lit(0.5),
            final_momentum: T::lit(0.8),
            momentum_switch: 250,
            min_gain: T::lit(0.01),
            init_std: T::lit(1e-4),
        }
    }
}

impl<T: Scalar> TsneOptions<T> {
    pub fn with_iterations(mut self, iterations: usize) -> Self {
        self.iterations = iterations;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// N x 2 coordinates and the KL divergence after each iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct Embedding2D<T> {
    pub coords: Vec<[T; 2]>,
    pub kl_history: Vec<T>,
}

impl<T: Scalar> Embedding2D<T> {
    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }
}

/// KL(P || Q) and its gradient at one configuration.
#[derive(Clone, Debug)]
pub struct GradientEval<T> {
    pub gradient: Vec<[T; 2]>,
    /// KL divergence against the unexaggerated P.
    pub kl: T,
}

/// Evaluates `∂C/∂y_i = 4 Σ_j (α p_ij − q_ij)(y_i − y_j)(1 + ‖y_i − y_j‖²)⁻¹`
/// with exaggeration α, and KL(P || Q) for α = 1.
///
/// With `k_ij = (1 + ‖y_i − y_j‖²)⁻¹` and `q_ij = k_ij / Z`, the gradient splits
/// into `4 (α Σ_j p_ij k_ij Δ_ij − Z⁻¹ Σ_j k_ij² Δ_ij)`, so a single sweep over
/// unordered pairs suffices. KL uses `Σ p ln p + Σ p ln(1 + d²) + ln Z`.
pub fn kl_gradient<T: Scalar>(
    p: &AffinityMatrix<T>,
    y: &[[T; 2]],
    exaggeration: T,
) -> GradientEval<T> {
    let n = p.n;
    assert_eq!(y.len(), n, "embedding size must match affinities");
    let mut attract = vec![[T::zero(); 2]; n];
    let mut repel = vec![[T::zero(); 2]; n];
    let mut z = T::zero();
    let mut cross = T::zero();
    for i in 0..n {
        let [yi0, yi1] = y[i];
        let (mut ax, mut ay, mut rx, mut ry) = (T::zero(), T::zero(), T::zero(), T::zero());
        let mut row_z = T::zero();
        let mut row_cross = T::zero();
        for j in (i + 1)..n {
            let dx = yi0 - y[j][0];
            let dy = yi1 - y[j][1];
            let d2 = dx * dx + dy * dy;
            let k = T::one() / (T::one() + d2);
            row_z += k;
            let pij = p.p[i * n + j];
            let pji = p.p[j * n + i];
            if pij + pji > T::zero() {
                row_cross += (pij + pji) * d2.ln_1p();
            }
            let (ai, aj) = (pij * k, pji * k);
            let kk = k * k;
            ax += ai * dx;
            ay += ai * dy;
            rx += kk * dx;
            ry += kk * dy;
            attract[j][0] -= aj * dx;
            attract[j][1] -= aj * dy;
            repel[j][0] -= kk * dx;
            repel[j][1] -= kk * dy;
        }
        attract[i][0] += ax;
        attract[i][1] += ay;
        repel[i][0] += rx;
        repel[i][1] += ry;
        z += row_z;
        cross += row_cross;
    }
    z *= T::lit(2.0);
    let four = T::lit(4.0);
    let gradient = attract
        .iter()
        .zip(&repel)
        .map(|(a, r)| {
            [
                four * (exaggeration * a[0] - r[0] / z),
                four * (exaggeration * a[1] - r[1] / z),
            ]
        })
        .collect();
    GradientEval {
        gradient,
        kl: p.neg_entropy + cross + z.ln(),
    }
}

/// Gradient descent with momentum, adaptive gains, and early exaggeration.
///
/// Gains grow by 0.2 when the gradient sign opposes the previous update and
/// shrink by a factor 0.8 otherwise, floored at `min_gain`. Coordinates are
/// recentered to zero mean after every step. `kl_history[t]` is the KL
/// divergence after step `t`.
pub fn tsne_embed<T: Scalar>(p: &AffinityMatrix<T>, opts: &TsneOptions<T>) -> Embedding2D<T> {
    let n = p.n;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut y: Vec<[T; 2]> = (0..n)
        .map(|_| {
            let a: f64 = rng.sample(StandardNormal);
            let b: f64 = rng.sample(StandardNormal);
            [opts.init_std * T::lit(a), opts.init_std * T::lit(b)]
        })
        .collect();
    recenter(&mut y);
    let mut update = vec![[T::zero(); 2]; n];
    let mut gains = vec![[T::one(); 2]; n];
    let mut kl_history = Vec::with_capacity(opts.iterations);
    let bump = T::lit(0.2);
    let shrink = T::lit(0.8);

    for iter in 0..opts.iterations {
        let alpha = if iter < opts.exaggeration_iterations {
            opts.exaggeration
        } else {
            T::one()
        };
        let momentum = if iter < opts.momentum_switch {
            opts.initial_momentum
        } else {
            opts.final_momentum
        };
        let eval = kl_gradient(p, &y, alpha);
        if iter > 0 {
            kl_history.push(eval.kl);
        }
        for i in 0..n {
            for d in 0..2 {
                let g = eval.gradient[i][d];
                let gain = &mut gains[i][d];
                *gain = if (g > T::zero()) != (update[i][d] > T::zero()) {
                    *gain + bump
                } else {
                    *gain * shrink
                };
                if *gain < opts.min_gain {
                    *gain = opts.min_gain;
                }
                update[i][d] = momentum * update[i][d] - opts.learning_rate * *gain * g;
                y[i][d] += update[i][d];
            }
        }
        recenter(&mut y);
    }
    if opts.iterations > 0 {
        kl_history.push(kl_divergence(p, &y));
    }
    Embedding2D {
        coords: y,
        kl_history,
    }
}

/// KL(P || Q) for the given coordinates.
pub fn kl_divergence<T: Scalar>(p: &AffinityMatrix<T>, y: &[[T; 2]]) -> T {
    kl_gradient(p, y, T::one()).kl
}

fn recenter<T: Scalar>(y: &mut [[T; 2]]) {
    let n = T::from_usize_lossy(y.len());
    let mx = y.iter().map(|p| p[0]).sum::<T>() / n;
    let my = y.iter().map(|p| p[1]).sum::<T>() / n;
    for p in y.iter_mut() {
        p[0] -= mx;
        p[1] -= my;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_points_have_single_neighbor() {
        let x = vec![vec![0.0f64, 0.0], vec![1.0, 3.0]];
        let p = calibrate_affinities(&x, 1.0).unwrap();
        assert_eq!(p.get(0, 1), 0.5);
        assert_eq!(p.get(1, 0), 0.5);
        assert_eq!(p.get(0, 0), 0.0);
    }

    #[test]
    fn equidistant_triple_is_uniform() {
        let h = 3f64.sqrt() / 2.0;
        let x = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.5, h]];
        let d = squared_distances(&x);
        let row: Vec<f64> = vec![d[1], d[2]];
        let (cond, entropy) = conditional_row(&row, 0.7);
        assert!((cond[0] - 0.5).abs() < 1e-12);
        assert!((entropy - 2f64.ln()).abs() < 1e-12);
        let p = calibrate_affinities(&x, 2.0).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert!((p.get(i, j) - 1.0 / 6.0).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn degenerate_inputs_rejected() {
        let one = vec![vec![1.0f64]];
        assert!(matches!(
            calibrate_affinities(&one, 1.0),
            Err(Error::DegenerateCorpus(_))
        ));
        let three = vec![vec![0.0f64], vec![1.0], vec![2.0]];
        assert!(calibrate_affinities(&three, 2.5).is_err());
        assert!(calibrate_affinities(&three, 0.5).is_err());
    }

    #[test]
    fn duplicates_are_allowed() {
        let x = vec![vec![1.0f64, 1.0]; 4];
        let p = calibrate_affinities(&x, 2.0).unwrap();
        assert!((p.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.get(0, 1) > 0.0);
    }

    #[test]
    fn two_points_have_zero_kl() {
        // With two points Q is forced to [0.5, 0.5], matching P exactly.
        let x = vec![vec![0.0f64], vec![1.0]];
        let p = calibrate_affinities(&x, 1.0).unwrap();
        let e = tsne_embed(&p, &TsneOptions::default().with_iterations(300));
        assert_eq!(e.kl_history.len(), 300);
        assert!(e.kl_history.iter().all(|k| k.abs() < 1e-12));
        assert!(e.coords.iter().flatten().all(|c| c.is_finite()));
    }

    #[test]
    fn same_seed_same_embedding() {
        let x: Vec<Vec<f64>> = (0..12)
            .map(|i| vec![(i as f64).sin(), (i as f64 * 0.3).cos(), i as f64 * 0.1])
            .collect();
        let p = calibrate_affinities(&x, 3.0).unwrap();
        let opts = TsneOptions::default().with_iterations(120).with_seed(7);
        assert_eq!(tsne_embed(&p, &opts), tsne_embed(&p, &opts));
        let other = tsne_embed(&p, &opts.with_seed(8));
        assert_ne!(tsne_embed(&p, &opts).coords, other.coords);
    }

    #[test]
    fn kl_matches_gradient_eval() {
        let x: Vec<Vec<f64>> = (0..8)
            .map(|i| vec![i as f64, (i * i) as f64 * 0.1])
            .collect();
        let p = calibrate_affinities(&x, 3.0).unwrap();
        let y: Vec<[f64; 2]> = (0..8)
            .map(|i| [(i as f64 * 1.3).sin(), (i as f64 * 0.7).cos()])
            .collect();
        let eval = kl_gradient(&p, &y, 1.0);
        // Direct evaluation of Σ p ln(p / q).
        let n = y.len();
        let mut z = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let d2 = (y[i][0] - y[j][0]).powi(2) + (y[i][1] - y[j][1]).powi(2);
                    z += 1.0 / (1.0 + d2);
                }
            }
        }
        let mut kl = 0.0;
        let mut q_total = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let d2 = (y[i][0] - y[j][0]).powi(2) + (y[i][1] - y[j][1]).powi(2);
                    let q = 1.0 / (1.0 + d2) / z;
                    q_total += q;
                    kl += p.get(i, j) * (p.get(i, j) / q).ln();
                }
            }
        }
        assert!((q_total - 1.0).abs() < 1e-12);
        assert!((eval.kl - kl).abs() < 1e-12);
        assert_eq!(eval.kl, kl_divergence(&p, &y));
    }

    #[test]
    fn from_joint_validates() {
        assert!(AffinityMatrix::from_joint(2, vec![0.0, 0.5, 0.5, 0.0f64]).is_ok());
        assert!(AffinityMatrix::from_joint(2, vec![0.0, 0.6, 0.4, 0.0f64]).is_err());
        assert!(AffinityMatrix::from_joint(2, vec![0.1, 0.4, 0.5, 0.0f64]).is_err());
    }
}
