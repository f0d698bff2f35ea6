//! Follower control law with attack compensation, and the uncompensated
//! baseline.

use serde::{Deserialize, Serialize};

use crate::plant::{VehicleParams, VehicleState};

/// `K1` must exceed this for the closed-loop ultimate bound with unit
/// Young's-inequality weights.
pub const K1_THRESHOLD: f64 = 1.5;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ControllerError {
    #[error("controller gain {name} must be positive and finite, got {value}")]
    Gain { name: &'static str, value: f64 },
    #[error("desired gap terms must be finite")]
    Reference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerGains {
    pub alpha: f64,
    pub k1: f64,
    /// Desired bumper-to-bumper gap `x_d` (m).
    pub desired_gap: f64,
    pub desired_gap_rate: f64,
    pub desired_gap_accel: f64,
    /// Optional symmetric clamp on the follower command; off by default.
    pub saturation: Option<f64>,
}

impl Default for ControllerGains {
    fn default() -> Self {
        Self { alpha: 1.0, k1: 2.0, desired_gap: 5.0, desired_gap_rate: 0.0, desired_gap_accel: 0.0, saturation: None }
    }
}

impl ControllerGains {
    pub fn validate(&self) -> Result<(), ControllerError> {
        for (name, value) in [("alpha", self.alpha), ("k1", self.k1)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(ControllerError::Gain { name, value });
            }
        }
        if let Some(s) = self.saturation {
            if !(s > 0.0 && s.is_finite()) {
                return Err(ControllerError::Gain { name: "saturation", value: s });
            }
        }
        if ![self.desired_gap, self.desired_gap_rate, self.desired_gap_accel].iter().all(|x| x.is_finite()) {
            return Err(ControllerError::Reference);
        }
        Ok(())
    }

    /// Whether `K1` satisfies the stability margin; logs a warning otherwise.
    pub fn check_gain_condition(&self) -> bool {
        let ok = self.k1 > K1_THRESHOLD;
        if !ok {
            log::warn!("k1 = {} does not exceed {K1_THRESHOLD}; the ultimate-boundedness guarantee is void", self.k1);
        }
        ok
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackingErrors {
    /// Distance error (m).
    pub e: f64,
    pub e_dot: f64,
    /// Filtered error `ė + α e` (m/s).
    pub r: f64,
}

pub fn compute_errors(
    follower: VehicleState,
    leader_pos_est: f64,
    leader_vel_est: f64,
    gains: &ControllerGains,
    length: f64,
) -> TrackingErrors {
    let e = follower.x - leader_pos_est + length + gains.desired_gap;
    let e_dot = follower.v - leader_vel_est + gains.desired_gap_rate;
    TrackingErrors { e, e_dot, r: e_dot + gains.alpha * e }
}

/// Signals the control law consumes besides the tracking errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LawInputs {
    pub follower_v: f64,
    pub leader_v_est: f64,
    /// Leader command as received over V2V.
    pub u_received: f64,
    pub f_hat: f64,
}

pub fn control_law(
    err: TrackingErrors,
    inputs: LawInputs,
    gains: &ControllerGains,
    follower: &VehicleParams,
    leader: &VehicleParams,
) -> f64 {
    let b = follower.b;
    let (alpha, e, r) = (gains.alpha, err.e, err.r);
    let u = (follower.a / b) * inputs.follower_v - (leader.a / leader.b) * inputs.leader_v_est + inputs.u_received
        - inputs.f_hat
        - gains.desired_gap_accel / b
        - (alpha / b) * r
        + (alpha * alpha / b) * e
        - e / b
        - (gains.k1 / b) * r;
    match gains.saturation {
        Some(s) => u.clamp(-s, s),
        None => u,
    }
}

/// The same law with the attack estimate forced to zero.
pub fn baseline_control_law(
    err: TrackingErrors,
    inputs: LawInputs,
    gains: &ControllerGains,
    follower: &VehicleParams,
    leader: &VehicleParams,
) -> f64 {
    control_law(err, LawInputs { f_hat: 0.0, ..inputs }, gains, follower, leader)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    const D: f64 = 4.5;

    fn p() -> VehicleParams {
        VehicleParams::default()
    }

    #[test]
    fn zero_error_geometry() {
        let g = ControllerGains::default();
        let err = compute_errors(VehicleState::new(100.0 - D - 5.0, 10.0), 100.0, 10.0, &g, D);
        assert_eq!((err.e, err.r), (0.0, 0.0));
        let err = compute_errors(VehicleState::new(100.0 - D - 5.0, 10.0), 101.0, 10.0, &g, D);
        assert_abs_diff_eq!(err.e, -1.0);
        assert_abs_diff_eq!(err.r, -1.0);
        let err = compute_errors(VehicleState::new(2.0 - D - 5.0, 9.0), 0.0, 10.0, &g, D);
        assert_abs_diff_eq!(err.r, 1.0);
    }

    #[test]
    fn synchronized_command_passes_through() {
        let g = ControllerGains::default();
        let zero = TrackingErrors { e: 0.0, e_dot: 0.0, r: 0.0 };
        let u_leader = 0.2113;
        let inputs = LawInputs { follower_v: 10.0, leader_v_est: 10.0, u_received: u_leader + 0.5, f_hat: 0.5 };
        assert_abs_diff_eq!(control_law(zero, inputs, &g, &p(), &p()), u_leader, epsilon = 1e-12);
        let inputs = LawInputs { f_hat: 0.0, ..inputs };
        assert_abs_diff_eq!(control_law(zero, inputs, &g, &p(), &p()), u_leader + 0.5, epsilon = 1e-12);
    }

    #[test]
    fn unit_errors_example() {
        let g = ControllerGains::default();
        let err = TrackingErrors { e: 1.0, e_dot: 0.0, r: 1.0 };
        let inputs = LawInputs { follower_v: 0.0, leader_v_est: 0.0, u_received: 0.0, f_hat: 0.0 };
        assert_abs_diff_eq!(control_law(err, inputs, &g, &p(), &p()), -3.0 / 6.6870, epsilon = 1e-12);
        assert_abs_diff_eq!(control_law(err, inputs, &g, &p(), &p()), -0.44863, epsilon = 1e-5);
    }

    #[test]
    fn baseline_ignores_estimate() {
        let g = ControllerGains::default();
        let err = TrackingErrors { e: 0.3, e_dot: -0.1, r: 0.2 };
        let inputs = LawInputs { follower_v: 9.0, leader_v_est: 10.0, u_received: 0.7, f_hat: 0.3 };
        let base = baseline_control_law(err, inputs, &g, &p(), &p());
        assert_eq!(base, control_law(err, LawInputs { f_hat: 0.0, ..inputs }, &g, &p(), &p()));
        assert_abs_diff_eq!(base - control_law(err, inputs, &g, &p(), &p()), 0.3, epsilon = 1e-12);
    }

    #[test]
    fn gain_condition() {
        assert!(ControllerGains::default().check_gain_condition());
        assert!(!ControllerGains { k1: 1.2, ..Default::default() }.check_gain_condition());
        assert!(ControllerGains { alpha: 0.0, ..Default::default() }.validate().is_err());
        assert!(ControllerGains { saturation: Some(-1.0), ..Default::default() }.validate().is_err());
    }

    #[test]
    fn saturation_clamps() {
        let g = ControllerGains { saturation: Some(0.1), ..Default::default() };
        let err = TrackingErrors { e: 0.0, e_dot: 0.0, r: 0.0 };
        let inputs = LawInputs { follower_v: 0.0, leader_v_est: 0.0, u_received: 3.0, f_hat: 0.0 };
        assert_eq!(control_law(err, inputs, &g, &p(), &p()), 0.1);
    }

    proptest! {
        #[test]
        fn attack_cancellation(u in -2.0f64..2.0, f in -1.0f64..1.0, e in -3.0f64..3.0, r in -3.0f64..3.0, v in 0.0f64..30.0) {
            let g = ControllerGains::default();
            let err = TrackingErrors { e, e_dot: r - e, r };
            let attacked = LawInputs { follower_v: v, leader_v_est: v + 0.3, u_received: u + f, f_hat: f };
            let clean = LawInputs { u_received: u, f_hat: 0.0, ..attacked };
            let a = control_law(err, attacked, &g, &p(), &p());
            let c = control_law(err, clean, &g, &p(), &p());
            prop_assert!((a - c).abs() <= 1e-12 * (1.0 + a.abs()));
        }

        #[test]
        fn affine_in_errors(e in -3.0f64..3.0, r in -3.0f64..3.0, alpha in 0.1f64..3.0, k1 in 0.1f64..5.0) {
            let g = ControllerGains { alpha, k1, ..Default::default() };
            let b = p().b;
            let inputs = LawInputs { follower_v: 12.0, leader_v_est: 11.0, u_received: 0.4, f_hat: 0.1 };
            let at = |e: f64, r: f64| control_law(TrackingErrors { e, e_dot: 0.0, r }, inputs, &g, &p(), &p());
            let h = 1e-3;
            let de = (at(e + h, r) - at(e, r)) / h;
            let dr = (at(e, r + h) - at(e, r)) / h;
            prop_assert!((de - (alpha * alpha - 1.0) / b).abs() < 1e-8);
            prop_assert!((dr + (alpha + k1) / b).abs() < 1e-8);
        }
    }
}
