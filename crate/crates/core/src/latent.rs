//! Latent state and the tick-ring interaction model.
//!
//! A [`TickRingState`] owns one [`LatentVector`] and renders it as 512 radial
//! ticks around a center point. Tick `i` sits at angle `i * 2π/512`, measured
//! clockwise from 12 o'clock with the screen y axis pointing down. Cursor
//! events inside the boundary band `[R_b - G, R_b + G]` push the ticks near the
//! cursor angle outward (cursor outside the base circle) or inward (inside).
//!
//! All arithmetic here is mirrored by the browser client; the order of
//! floating-point operations in [`TickRingState::apply_cursor`] and
//! [`TickRingState::decay_step`] is part of the contract.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::scalar::{clamp, Scalar};

/// Dimensionality of the latent space.
pub const LATENT_DIMS: usize = 512;

/// Symmetric bound on every latent coordinate.
pub const V_MAX: f64 = 3.0;

/// Magnitude below which decayed values snap to exactly zero.
pub const DECAY_SNAP: f64 = 1e-4;

/// Exactly 512 finite coordinates, each within `[-V_MAX, V_MAX]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LatentVector<T> {
    values: Vec<T>,
}

impl<T: Scalar> LatentVector<T> {
    pub fn zeros() -> Self {
        LatentVector {
            values: vec![T::zero(); LATENT_DIMS],
        }
    }

    /// Validates length, finiteness, and range.
    pub fn new(values: Vec<T>) -> Result<Self> {
        Self::check_shape(&values)?;
        let vmax = T::lit(V_MAX);
        if let Some(i) = values.iter().position(|v| v.abs() > vmax) {
            return Err(Error::MalformedLatent(format!(
                "value {} at index {i} outside [-{V_MAX}, {V_MAX}]",
                values[i]
            )));
        }
        Ok(LatentVector { values })
    }

    /// Validates length and finiteness, clamping out-of-range values into the box.
    pub fn new_clamped(values: Vec<T>) -> Result<Self> {
        Self::check_shape(&values)?;
        let vmax = T::lit(V_MAX);
        let values = values.into_iter().map(|v| clamp(v, -vmax, vmax)).collect();
        Ok(LatentVector { values })
    }

    fn check_shape(values: &[T]) -> Result<()> {
        if values.len() != LATENT_DIMS {
            return Err(Error::MalformedLatent(format!(
                "expected {LATENT_DIMS} latent variables, found {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::MalformedLatent(format!(
                "non-finite value at index {i}"
            )));
        }
        Ok(())
    }

    pub fn as_slice(&self) -> &[T] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<T> {
        self.values
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.is_zero())
    }

    /// Converts to another scalar type. Values stay in range since the bound is exact in both.
    pub fn cast<U: Scalar>(&self) -> LatentVector<U> {
        LatentVector {
            values: self
                .values
                .iter()
                .map(|v| U::lit(v.to_f64_lossless()))
                .collect(),
        }
    }
}

impl<T: Scalar> Default for LatentVector<T> {
    fn default() -> Self {
        Self::zeros()
    }
}

impl<T> std::ops::Index<usize> for LatentVector<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.values[i]
    }
}

/// Screen-space point in pixels, y axis down.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Point<T> {
    pub fn new(x: T, y: T) -> Self {
        Point { x, y }
    }

    fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Pointer sample with a monotonic timestamp in seconds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CursorEvent<T> {
    pub position: Point<T>,
    pub timestamp: T,
}

/// Interaction tuning. Sensitivity is value units per second at full drive.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InteractionConfig<T> {
    pub sensitivity: T,
    /// Exponential decay rate, 1/seconds.
    pub decay_rate: T,
    pub decay_enabled: bool,
    /// Gaussian brush width in ticks. Zero edits a single tick.
    pub brush_sigma: T,
    /// Upper bound on the time step of a single event, seconds.
    pub dt_cap: T,
}

impl<T: Scalar> Default for InteractionConfig<T> {
    fn default() -> Self {
        InteractionConfig {
            sensitivity: T::lit(2.0),
            decay_rate: T::lit(0.7),
            decay_enabled: false,
            brush_sigma: T::lit(1.5),
            dt_cap: T::lit(0.05),
        }
    }
}

impl<T: Scalar> InteractionConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.sensitivity > T::zero() && self.sensitivity.is_finite()) {
            return Err(Error::InvalidConfig("sensitivity must be positive"));
        }
        if !(self.decay_rate >= T::zero() && self.decay_rate.is_finite()) {
            return Err(Error::InvalidConfig("decay rate must be non-negative"));
        }
        if !(self.brush_sigma >= T::zero() && self.brush_sigma.is_finite()) {
            return Err(Error::InvalidConfig("brush sigma must be non-negative"));
        }
        if !(self.dt_cap > T::zero() && self.dt_cap.is_finite()) {
            return Err(Error::InvalidConfig("dt cap must be positive"));
        }
        Ok(())
    }
}

/// Tick ring geometry plus the latent values it displays.
#[derive(Clone, Debug, PartialEq)]
pub struct TickRingState<T> {
    values: LatentVector<T>,
    center: Point<T>,
    base_radius: T,
    gain: T,
}

impl<T: Scalar> TickRingState<T> {
    /// Ring with all values at zero. Requires `gain > 0` and `base_radius > 0`.
    pub fn new(center: Point<T>, base_radius: T, gain: T) -> Result<Self> {
        if !(center.is_finite() && base_radius.is_finite() && gain.is_finite()) {
            return Err(Error::InvalidConfig("ring geometry must be finite"));
        }
        if !(base_radius > T::zero() && gain > T::zero()) {
            return Err(Error::InvalidConfig(
                "ring radius and gain must be positive",
            ));
        }
        Ok(TickRingState {
            values: LatentVector::zeros(),
            center,
            base_radius,
            gain,
        })
    }

    pub fn tick_count(&self) -> usize {
        LATENT_DIMS
    }

    pub fn values(&self) -> &LatentVector<T> {
        &self.values
    }

    pub fn set_values(&mut self, values: LatentVector<T>) {
        self.values = values;
    }

    pub fn center(&self) -> Point<T> {
        self.center
    }

    pub fn base_radius(&self) -> T {
        self.base_radius
    }

    pub fn gain(&self) -> T {
        self.gain
    }

    /// Inner and outer boundary radii; events outside this band are ignored.
    pub fn boundary_band(&self) -> (T, T) {
        (self.base_radius - self.gain, self.base_radius + self.gain)
    }

    fn tick_step() -> T {
        T::lit(TAU) / T::from_usize_lossy(LATENT_DIMS)
    }

    /// Index of the tick nearest the cursor's angle around the center.
    pub fn angle_to_index(&self, position: Point<T>) -> Result<usize> {
        let dx = position.x - self.center.x;
        let dy = position.y - self.center.y;
        if dx.is_zero() && dy.is_zero() {
            return Err(Error::UndefinedAngle);
        }
        // Clockwise from 12 o'clock with y down.
        let mut phi = dx.atan2(-dy);
        if phi < T::zero() {
            phi += T::lit(TAU);
        }
        let k = (phi / Self::tick_step()).round();
        let k = k.to_usize().unwrap_or(0);
        Ok(k % LATENT_DIMS)
    }

    /// Radial segment `(start, end)` of tick `i`: from the base radius to
    /// `base + (v / V_MAX) * gain`. Negative values extend inward.
    pub fn tick_segment(&self, i: usize) -> (Point<T>, Point<T>) {
        let angle = Self::tick_step() * T::from_usize_lossy(i);
        let (s, c) = angle.sin_cos();
        let at = |r: T| Point::new(self.center.x + r * s, self.center.y - r * c);
        let end = self.base_radius + self.values[i] / T::lit(V_MAX) * self.gain;
        (at(self.base_radius), at(end))
    }

    /// Applies one cursor sample. `prev_timestamp` is the previous sample's time.
    ///
    /// Non-finite input and decreasing timestamps are rejected with the state
    /// untouched. Positions outside the boundary band, or exactly at the
    /// center, leave the state bit-identical.
    pub fn apply_cursor(
        &mut self,
        event: &CursorEvent<T>,
        prev_timestamp: T,
        cfg: &InteractionConfig<T>,
    ) -> Result<()> {
        if !event.position.is_finite() {
            return Err(Error::InvalidEvent("non-finite position"));
        }
        if !(event.timestamp.is_finite() && prev_timestamp.is_finite()) {
            return Err(Error::InvalidEvent("non-finite timestamp"));
        }
        if event.timestamp < prev_timestamp {
            return Err(Error::InvalidEvent("timestamp decreased"));
        }
        cfg.validate()?;

        let dx = event.position.x - self.center.x;
        let dy = event.position.y - self.center.y;
        let r = dx.hypot(dy);
        let (inner, outer) = self.boundary_band();
        if r < inner || r > outer {
            return Ok(());
        }
        let Ok(hit) = self.angle_to_index(event.position) else {
            return Ok(());
        };

        let one = T::one();
        let drive = clamp((r - self.base_radius) / self.gain, -one, one);
        let dt = (event.timestamp - prev_timestamp).min(cfg.dt_cap);
        let vmax = T::lit(V_MAX);
        let rate = cfg.sensitivity * drive;

        for (j, w) in brush_weights(hit, cfg.brush_sigma) {
            let v = self.values.values[j];
            self.values.values[j] = clamp(v + rate * w * dt, -vmax, vmax);
        }
        Ok(())
    }

    /// Exponential relaxation toward zero over `dt` seconds. No-op when decay
    /// is disabled.
    pub fn decay_step(&mut self, dt: T, cfg: &InteractionConfig<T>) {
        if !cfg.decay_enabled || dt.is_nan() || dt <= T::zero() {
            return;
        }
        let factor = (-cfg.decay_rate * dt).exp();
        let snap = T::lit(DECAY_SNAP);
        for v in &mut self.values.values {
            let next = *v * factor;
            *v = if next.abs() < snap { T::zero() } else { next };
        }
    }

    pub fn reset(&mut self) {
        self.values = LatentVector::zeros();
    }
}

/// Circular distance between two tick indices.
pub fn tick_distance(a: usize, b: usize) -> usize {
    let d = a.abs_diff(b) % LATENT_DIMS;
    d.min(LATENT_DIMS - d)
}

/// `(tick, weight)` pairs for a Gaussian brush centered on `hit`, truncated at
/// `ceil(3σ)` ticks. Each tick appears at most once.
pub fn brush_weights<T: Scalar>(hit: usize, sigma: T) -> Vec<(usize, T)> {
    if sigma.is_zero() {
        return vec![(hit, T::one())];
    }
    let reach = (T::lit(3.0) * sigma)
        .ceil()
        .to_usize()
        .unwrap_or(usize::MAX);
    let reach = reach.min(LATENT_DIMS / 2);
    let two_var = T::lit(2.0) * sigma * sigma;
    let mut out = Vec::with_capacity(2 * reach + 1);
    let mut push = |j: usize| {
        let d = T::from_usize_lossy(tick_distance(j, hit));
        out.push((j, (-(d * d) / two_var).exp()));
    };
    push(hit);
    for k in 1..=reach {
        push((hit + k) % LATENT_DIMS);
        let left = (hit + LATENT_DIMS - k) % LATENT_DIMS;
        if left != (hit + k) % LATENT_DIMS {
            push(left);
        }
    }
    out
}
