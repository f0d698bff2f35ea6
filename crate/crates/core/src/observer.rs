//! Interval observer (framers) for the leader state `[position, velocity]`.
//!
//! The observer runs in auxiliary coordinates `z = T x`. With `T + N C = I`
//! the true state satisfies `x = z + N y - N V θ` and
//!
//! ```text
//! ż = Mx z + Mv y - Mv V θ + Mu u + Mw d
//! ```
//!
//! so bounding every unknown term from below (resp. above) gives the lower
//! (resp. upper) framer. The leader command `u` is not known exactly by the
//! follower, only an interval around the received value; see [`InputInterval`].
//!
//! The hot path works on fixed-size arrays. [`ObserverModel`] caches every
//! positive/negative part once.

use crate::interval_algebra::{neg_part, pos_part, up_down_split, AlgebraError, IntervalVector, Matrix};
use crate::synthesis::DerivedObserverMatrices;

pub type Vec2 = [f64; 2];
pub type Mat2 = [[f64; 2]; 2];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ObserverError {
    #[error("observer gains must describe a 2-state, single-output system: {0}")]
    Shape(String),
    #[error("{what} bounds are inverted ({lower} > {upper})")]
    InvertedBounds { what: &'static str, lower: f64, upper: f64 },
    #[error("framer violation on {component}: lower {lower} > upper {upper}")]
    FramerViolation { component: &'static str, lower: f64, upper: f64 },
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

const COMPONENTS: [&str; 2] = ["position", "velocity"];

/// Closed scalar interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub lower: f64,
    pub upper: f64,
}

impl Bounds {
    pub const ZERO: Bounds = Bounds { lower: 0.0, upper: 0.0 };

    pub fn new(lower: f64, upper: f64) -> Self {
        Self { lower, upper }
    }

    pub fn symmetric(radius: f64) -> Self {
        Self { lower: -radius, upper: radius }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    fn check(&self, what: &'static str) -> Result<(), ObserverError> {
        if !(self.lower <= self.upper) {
            return Err(ObserverError::InvertedBounds { what, lower: self.lower, upper: self.upper });
        }
        Ok(())
    }
}

/// Interval known to contain the leader's executed command.
///
/// The follower receives `ū = u + f` and holds an attack estimate `f̂`, so
/// with `|f| ≤ f̄` the command lies within `(ū - f̂) ± (f̄ + |f̂|)`.
pub type InputInterval = Bounds;

pub fn input_interval(u_received: f64, f_hat: f64, attack_bound: f64) -> InputInterval {
    let center = u_received - f_hat;
    let radius = attack_bound + f_hat.abs();
    Bounds::new(center - radius, center + radius)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FramerState {
    pub z_lower: Vec2,
    pub z_upper: Vec2,
    /// Last measurement used for recovery.
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FramerOutput {
    pub interval: IntervalVector,
    /// Midpoint of the position interval.
    pub x_hat: f64,
    pub width: Vec2,
}

impl FramerOutput {
    pub fn velocity_midpoint(&self) -> f64 {
        0.5 * (self.interval.lower()[1] + self.interval.upper()[1])
    }
}

/// Observer matrices split into the parts the framer rows need, plus the
/// disturbance and noise bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct ObserverModel {
    pub mx: Mat2,
    pub mx_up: Mat2,
    pub mx_down: Mat2,
    pub mw_pos: Vec2,
    pub mw_neg: Vec2,
    pub mv: Vec2,
    pub mv_pos: Vec2,
    pub mv_neg: Vec2,
    pub mu_pos: Vec2,
    pub mu_neg: Vec2,
    pub n: Vec2,
    pub nv_pos: Vec2,
    pub nv_neg: Vec2,
    pub disturbance: Bounds,
    pub noise: Bounds,
}

fn mat2(m: &Matrix, name: &str) -> Result<Mat2, ObserverError> {
    if m.shape() != (2, 2) {
        return Err(ObserverError::Shape(format!("{name} is {:?}, expected 2x2", m.shape())));
    }
    Ok([[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]])
}

fn vec2(m: &Matrix, name: &str) -> Result<Vec2, ObserverError> {
    if m.shape() != (2, 1) {
        return Err(ObserverError::Shape(format!("{name} is {:?}, expected 2x1", m.shape())));
    }
    Ok([m[(0, 0)], m[(1, 0)]])
}

impl ObserverModel {
    pub fn new(derived: &DerivedObserverMatrices, disturbance: Bounds, noise: Bounds) -> Result<Self, ObserverError> {
        disturbance.check("disturbance")?;
        noise.check("noise")?;
        let (up, down) = up_down_split(&derived.mx)?;
        Ok(Self {
            mx: mat2(&derived.mx, "Mx")?,
            mx_up: mat2(&up, "Mx")?,
            mx_down: mat2(&down, "Mx")?,
            mw_pos: vec2(&pos_part(&derived.mw), "Mw")?,
            mw_neg: vec2(&neg_part(&derived.mw), "Mw")?,
            mv: vec2(&derived.mv, "Mv")?,
            mv_pos: vec2(&pos_part(&derived.mv), "Mv")?,
            mv_neg: vec2(&neg_part(&derived.mv), "Mv")?,
            mu_pos: vec2(&pos_part(&derived.mu), "Mu")?,
            mu_neg: vec2(&neg_part(&derived.mu), "Mu")?,
            n: vec2(&derived.n, "N")?,
            nv_pos: vec2(&pos_part(&derived.nv), "NV")?,
            nv_neg: vec2(&neg_part(&derived.nv), "NV")?,
            disturbance,
            noise,
        })
    }

    /// Offsets `(lo, hi)` with `X̲ = Z̲ + N y + lo` and `X̄ = Z̄ + N y + hi`.
    fn noise_offsets(&self) -> (Vec2, Vec2) {
        let (tl, tu) = (self.noise.lower, self.noise.upper);
        let lo = [0, 1].map(|i| -self.nv_pos[i] * tu + self.nv_neg[i] * tl);
        let hi = [0, 1].map(|i| -self.nv_pos[i] * tl + self.nv_neg[i] * tu);
        (lo, hi)
    }

    /// Inverts the recovery rows at `t = 0`. The auxiliary state is
    /// `Z = x - N y + NV θ`, so the unknown `θ(0)` widens `Z(0)` by `|NV| δ_v`
    /// per side; the recovered interval at `t = 0` is the given one widened by
    /// twice that.
    pub fn init_framers(&self, x0: &IntervalVector, y0: f64) -> Result<FramerState, ObserverError> {
        if x0.len() != 2 {
            return Err(ObserverError::Shape(format!("initial interval has {} components", x0.len())));
        }
        let (lo, hi) = self.noise_offsets();
        let z_lower = [0, 1].map(|i| x0.lower()[i] - self.n[i] * y0 - hi[i]);
        let z_upper = [0, 1].map(|i| x0.upper()[i] - self.n[i] * y0 - lo[i]);
        for i in 0..2 {
            if !(z_lower[i] <= z_upper[i]) {
                return Err(ObserverError::FramerViolation {
                    component: COMPONENTS[i],
                    lower: z_lower[i],
                    upper: z_upper[i],
                });
            }
        }
        Ok(FramerState { z_lower, z_upper, y: y0 })
    }

    /// Right-hand sides of the lower and upper framer ODEs.
    pub fn framer_derivative(&self, z_lower: &Vec2, z_upper: &Vec2, y: f64, u: InputInterval) -> (Vec2, Vec2) {
        let (d, th) = (self.disturbance, self.noise);
        let mut dl = [0.0; 2];
        let mut du = [0.0; 2];
        for i in 0..2 {
            let mut l = 0.0;
            let mut h = 0.0;
            for j in 0..2 {
                l += self.mx_up[i][j] * z_lower[j] - self.mx_down[i][j] * z_upper[j];
                h += self.mx_up[i][j] * z_upper[j] - self.mx_down[i][j] * z_lower[j];
            }
            let common = self.mv[i] * y;
            dl[i] = l + common + self.mw_pos[i] * d.lower - self.mw_neg[i] * d.upper - self.mv_pos[i] * th.upper
                + self.mv_neg[i] * th.lower
                + self.mu_pos[i] * u.lower
                - self.mu_neg[i] * u.upper;
            du[i] = h + common + self.mw_pos[i] * d.upper - self.mw_neg[i] * d.lower - self.mv_pos[i] * th.lower
                + self.mv_neg[i] * th.upper
                + self.mu_pos[i] * u.upper
                - self.mu_neg[i] * u.lower;
        }
        (dl, du)
    }

    /// Recovered state bounds, unchecked.
    #[inline]
    pub fn recover_raw(&self, z_lower: &Vec2, z_upper: &Vec2, y: f64) -> (Vec2, Vec2) {
        let (lo, hi) = self.noise_offsets();
        let xl = [0, 1].map(|i| z_lower[i] + self.n[i] * y + lo[i]);
        let xu = [0, 1].map(|i| z_upper[i] + self.n[i] * y + hi[i]);
        (xl, xu)
    }

    /// Recovered state bounds without allocating.
    pub fn recover_bounds(&self, z_lower: &Vec2, z_upper: &Vec2, y: f64) -> Result<(Vec2, Vec2), ObserverError> {
        let (xl, xu) = self.recover_raw(z_lower, z_upper, y);
        for i in 0..2 {
            if !(xl[i] <= xu[i]) {
                return Err(ObserverError::FramerViolation { component: COMPONENTS[i], lower: xl[i], upper: xu[i] });
            }
        }
        Ok((xl, xu))
    }

    pub fn recover_interval(&self, fs: &FramerState) -> Result<FramerOutput, ObserverError> {
        let (xl, xu) = self.recover_bounds(&fs.z_lower, &fs.z_upper, fs.y)?;
        Ok(FramerOutput {
            interval: IntervalVector::new(xl.to_vec(), xu.to_vec())?,
            x_hat: 0.5 * (xl[0] + xu[0]),
            width: [xu[0] - xl[0], xu[1] - xl[1]],
        })
    }

    /// Metzler part of `Mx`, the matrix driving the framer width.
    pub fn metzler(&self) -> Mat2 {
        let mut m = self.mx_up;
        for i in 0..2 {
            for j in 0..2 {
                if i != j {
                    m[i][j] += self.mx_down[i][j];
                }
            }
        }
        m
    }

    /// Width forcing `|Mw| δw + |Mv| δv + |Mu| δu` of the auxiliary framers.
    pub fn width_forcing(&self, input_width: f64) -> Vec2 {
        [0, 1].map(|i| {
            (self.mw_pos[i] + self.mw_neg[i]) * self.disturbance.width()
                + (self.mv_pos[i] + self.mv_neg[i]) * self.noise.width()
                + (self.mu_pos[i] + self.mu_neg[i]) * input_width
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::VehicleParams;
    use crate::synthesis::{load_tabulated_gains, GainSet};
    use approx::assert_abs_diff_eq;

    fn model(s: GainSet, d: Bounds, th: Bounds) -> ObserverModel {
        let (_, derived) = load_tabulated_gains(s, &VehicleParams::default()).unwrap();
        ObserverModel::new(&derived, d, th).unwrap()
    }

    #[test]
    fn degenerate_init_subtracts_ny() {
        let m = model(GainSet::NoiseFree, Bounds::ZERO, Bounds::ZERO);
        let x0 = IntervalVector::degenerate(vec![25.0, 10.0]);
        let fs = m.init_framers(&x0, 10.0).unwrap();
        assert_eq!(fs.z_lower, fs.z_upper);
        assert_abs_diff_eq!(fs.z_lower[0], 25.0);
        assert_abs_diff_eq!(fs.z_lower[1], 10.0 - 1.0002 * 10.0, epsilon = 1e-12);
    }

    #[test]
    fn init_preserves_width() {
        let m = model(GainSet::Noisy, Bounds::ZERO, Bounds::ZERO);
        let x0 = IntervalVector::new(vec![0.0, 3.0], vec![1.0, 3.0]).unwrap();
        let fs = m.init_framers(&x0, 2.5).unwrap();
        assert_abs_diff_eq!(fs.z_upper[0] - fs.z_lower[0], 1.0);
        assert_abs_diff_eq!(fs.z_upper[1] - fs.z_lower[1], 0.0);
    }

    #[test]
    fn init_noise_offset_on_velocity_row() {
        let m = model(GainSet::Noisy, Bounds::ZERO, Bounds::symmetric(0.025));
        let x0 = IntervalVector::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        let fs = m.init_framers(&x0, 0.0).unwrap();
        assert_abs_diff_eq!(fs.z_lower[1], -1.0 - 0.3756 * 0.025, epsilon = 1e-15);
        assert_abs_diff_eq!(fs.z_upper[1], 1.0 + 0.3756 * 0.025, epsilon = 1e-15);
        assert_eq!(fs.z_lower[0], -1.0);
        let out = m.recover_interval(&fs).unwrap();
        assert_abs_diff_eq!(out.interval.lower()[1], -1.0 - 2.0 * 0.3756 * 0.025, epsilon = 1e-15);
        assert_abs_diff_eq!(out.interval.upper()[1], 1.0 + 2.0 * 0.3756 * 0.025, epsilon = 1e-15);
    }

    /// Whatever the initial noise sample, `Z(0)` must hold the true `Z = x - N(y0 - θ0)`.
    #[test]
    fn init_bounds_the_true_auxiliary_state() {
        let m = model(GainSet::Noisy, Bounds::ZERO, Bounds::symmetric(0.025));
        let x = [4.0, 10.0];
        let x0 = IntervalVector::degenerate(x.to_vec());
        for theta0 in [-0.025, -0.01, 0.0, 0.02, 0.025] {
            let y0 = x[1] + theta0;
            let fs = m.init_framers(&x0, y0).unwrap();
            for i in 0..2 {
                let z = x[i] - m.n[i] * (y0 - theta0);
                assert!(fs.z_lower[i] <= z + 1e-15 && z <= fs.z_upper[i] + 1e-15, "theta0 {theta0}, row {i}");
            }
        }
    }

    #[test]
    fn degenerate_rows_coincide() {
        let m = model(GainSet::Noisy, Bounds::ZERO, Bounds::ZERO);
        let z = [3.0, -1.0];
        let (dl, du) = m.framer_derivative(&z, &z, 0.7, Bounds::new(0.2, 0.2));
        assert_eq!(dl, du);
    }

    #[test]
    fn disturbance_width_forcing_noise_free() {
        let m = model(GainSet::NoiseFree, Bounds::symmetric(0.01), Bounds::ZERO);
        let (dl, du) = m.framer_derivative(&[0.0; 2], &[0.0; 2], 0.0, Bounds::ZERO);
        assert_abs_diff_eq!(du[0] - dl[0], 0.0);
        assert_abs_diff_eq!(du[1] - dl[1], 0.0002 * 0.02, epsilon = 1e-15);
    }

    #[test]
    fn width_rows_match_metzler_form() {
        let m = model(GainSet::Noisy, Bounds::symmetric(0.01), Bounds::symmetric(0.025));
        let zl = [1.0, -0.3];
        let zu = [1.4, 0.2];
        let u = Bounds::new(-0.4, 0.6);
        let (dl, du) = m.framer_derivative(&zl, &zu, 3.0, u);
        let mm = m.metzler();
        let forcing = m.width_forcing(u.width());
        for i in 0..2 {
            let expected = mm[i][0] * (zu[0] - zl[0]) + mm[i][1] * (zu[1] - zl[1]) + forcing[i];
            assert_abs_diff_eq!(du[i] - dl[i], expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn recovery_examples() {
        let m = model(GainSet::NoiseFree, Bounds::ZERO, Bounds::ZERO);
        let zero = FramerState { z_lower: [0.0; 2], z_upper: [0.0; 2], y: 0.0 };
        let out = m.recover_interval(&zero).unwrap();
        assert_eq!(out.interval.lower(), &[0.0, 0.0]);
        assert_eq!(out.x_hat, 0.0);
        let out = m.recover_interval(&FramerState { y: 1.0, ..zero }).unwrap();
        assert_abs_diff_eq!(out.interval.lower()[1], 1.0002, epsilon = 1e-15);
        assert_abs_diff_eq!(out.interval.upper()[1], 1.0002, epsilon = 1e-15);

        let m = model(GainSet::Noisy, Bounds::ZERO, Bounds::symmetric(0.025));
        let out = m.recover_interval(&zero).unwrap();
        assert_abs_diff_eq!(out.width[1], 2.0 * 0.3756 * 0.025, epsilon = 1e-15);
        assert_abs_diff_eq!(out.width[1], 0.01878, epsilon = 1e-12);
        assert_eq!(out.width[0], 0.0);
    }

    #[test]
    fn inverted_z_reports_violation() {
        let m = model(GainSet::NoiseFree, Bounds::ZERO, Bounds::ZERO);
        let fs = FramerState { z_lower: [1.0, 0.0], z_upper: [0.0, 0.0], y: 0.0 };
        assert!(matches!(m.recover_interval(&fs), Err(ObserverError::FramerViolation { component: "position", .. })));
    }

    #[test]
    fn input_interval_covers_true_command() {
        let iv = input_interval(1.5, 0.2, 0.5);
        assert_abs_diff_eq!(iv.lower, 0.6);
        assert_abs_diff_eq!(iv.upper, 2.0);
        // received 1.5 = u + f with f = 0.5 -> u = 1.0 inside
        assert!(iv.lower <= 1.0 && 1.0 <= iv.upper);
    }
}
