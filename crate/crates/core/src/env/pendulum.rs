use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{finite, positive, rotate, substeps, unit_angle, unknown_param, Environment, Objective, SuccessRule};
use crate::error::Result;
use crate::scalar::Real;

/// Torque-limited pendulum swing-up.
///
/// State is `(sin th, cos th, omega)` with `th = 0` hanging down and `th = pi`
/// upright. Reward is `-(angle_weight * phi^2 + velocity_weight * omega^2)
/// - action_weight * a^2`, where `phi` is the wrapped angle from upright.
#[derive(Debug, Clone)]
pub struct Pendulum<F> {
    pub mass: F,
    pub length: F,
    pub gravity: F,
    pub max_torque: F,
    pub damping: F,
    pub dt: F,
    pub substeps: usize,
    pub angle_weight: F,
    pub velocity_weight: F,
    pub action_weight: F,
    /// Half-width of the uniform start perturbation around hanging.
    pub init_noise: F,
    /// Angle from upright counted as success.
    pub success_angle: F,
}

impl<F: Real> Default for Pendulum<F> {
    fn default() -> Self {
        Self {
            mass: F::one(),
            length: F::one(),
            gravity: F::lit(9.81),
            max_torque: F::lit(4.0),
            damping: F::zero(),
            dt: F::lit(0.05),
            substeps: 20,
            angle_weight: F::one(),
            velocity_weight: F::lit(0.1),
            action_weight: F::lit(0.001),
            init_noise: F::lit(0.1),
            success_angle: F::lit(0.25),
        }
    }
}

impl<F: Real> Pendulum<F> {
    /// Signed angle from upright for an observation.
    pub fn angle_from_upright(s: &[F]) -> F {
        (-s[0]).atan2(-s[1])
    }

    /// Total mechanical energy, zero when hanging at rest.
    pub fn energy(&self, s: &[F]) -> F {
        let inertia = self.mass * self.length * self.length;
        F::lit(0.5) * inertia * s[2] * s[2] + self.mass * self.gravity * self.length * (F::one() - s[1])
    }

    /// Observation for a raw angle and angular velocity.
    pub fn observe(theta: F, omega: F) -> Vec<F> {
        let (s, c) = theta.sin_cos();
        vec![s, c, omega]
    }
}

impl<F: Real> Objective<F> for Pendulum<F> {
    fn reward(&self, s: &[F], a: &[F]) -> F {
        let phi = Self::angle_from_upright(s);
        -(self.angle_weight * phi * phi + self.velocity_weight * s[2] * s[2])
            - self.action_weight * a[0] * a[0]
    }
}

impl<F: Real> Environment<F> for Pendulum<F> {
    fn name(&self) -> &'static str {
        "pendulum"
    }

    fn dim_s(&self) -> usize {
        3
    }

    fn dim_a(&self) -> usize {
        1
    }

    fn dt(&self) -> F {
        self.dt
    }

    fn initial_state(&self, seed: u64) -> Vec<F> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = self.init_noise.as_f64();
        let (theta, omega) = if w > 0.0 {
            (rng.random_range(-w..=w), rng.random_range(-w..=w))
        } else {
            (0.0, 0.0)
        };
        Self::observe(F::lit(theta), F::lit(omega))
    }

    fn transition(&self, s: &[F], a: &[F]) -> Vec<F> {
        let (mut sin, mut cos) = unit_angle(s[0], s[1]);
        let mut omega = s[2];
        let h = self.dt / F::from_usize(self.substeps.max(1)).expect("substeps as float");
        let inertia = self.mass * self.length * self.length;
        let torque = a[0] * self.max_torque;
        for _ in 0..self.substeps.max(1) {
            let alpha = -self.gravity / self.length * sin + (torque - self.damping * omega) / inertia;
            omega += h * alpha;
            (sin, cos) = rotate(sin, cos, h * omega);
        }
        let (sin, cos) = unit_angle(sin, cos);
        vec![sin, cos, omega]
    }

    fn success(&self, s: &[F]) -> bool {
        Self::angle_from_upright(s).abs() < self.success_angle
    }

    fn success_rule(&self) -> SuccessRule {
        SuccessRule::Hold(10)
    }

    fn set_param(&mut self, name: &str, value: f64) -> Result<()> {
        let v = finite::<F>(name, value)?;
        match name {
            "mass" => self.mass = positive(name, value)?,
            "length" => self.length = positive(name, value)?,
            "gravity" => self.gravity = v,
            "max_torque" => self.max_torque = v,
            "damping" => self.damping = v,
            "dt" => self.dt = positive(name, value)?,
            "substeps" => self.substeps = substeps(value)?,
            "angle_weight" => self.angle_weight = v,
            "velocity_weight" => self.velocity_weight = v,
            "action_weight" => self.action_weight = v,
            "init_noise" => self.init_noise = v,
            "success_angle" => self.success_angle = v,
            _ => return Err(unknown_param("pendulum", name)),
        }
        Ok(())
    }

    fn params(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("mass", self.mass.as_f64()),
            ("length", self.length.as_f64()),
            ("gravity", self.gravity.as_f64()),
            ("max_torque", self.max_torque.as_f64()),
            ("damping", self.damping.as_f64()),
            ("dt", self.dt.as_f64()),
            ("substeps", self.substeps as f64),
            ("angle_weight", self.angle_weight.as_f64()),
            ("velocity_weight", self.velocity_weight.as_f64()),
            ("action_weight", self.action_weight.as_f64()),
            ("init_noise", self.init_noise.as_f64()),
            ("success_angle", self.success_angle.as_f64()),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn hanging_at_rest_is_a_fixed_point() {
        let env = Pendulum::<f64>::default();
        let s = vec![0.0, 1.0, 0.0];
        assert_eq!(env.transition(&s, &[0.0]), s);
    }

    #[test]
    fn energy_conserved_without_torque() {
        let env = Pendulum::<f64>::default();
        for theta0 in [0.5, 1.5, 2.5, 3.0] {
            let mut s = Pendulum::observe(theta0, 0.0);
            let e0 = env.energy(&s);
            for _ in 0..100 {
                s = env.transition(&s, &[0.0]);
                let rel = (env.energy(&s) - e0).abs() / e0;
                assert!(rel < 0.01, "theta0={theta0}: drift {rel}");
            }
        }
    }

    #[test]
    fn reward_and_success_at_upright() {
        let env = Pendulum::<f64>::default();
        let up = Pendulum::observe(PI, 0.0);
        assert!(env.reward(&up, &[0.0]).abs() < 1e-20);
        assert!(env.success(&up));
        assert!(!env.success(&Pendulum::observe(0.0, 0.0)));
        let down = Pendulum::observe(0.0, 0.0);
        assert!((env.reward(&down, &[0.0]) + PI * PI).abs() < 1e-12);
    }

    #[test]
    fn torque_is_too_weak_to_lift_directly() {
        let env = Pendulum::<f64>::default();
        assert!(env.max_torque < env.mass * env.gravity * env.length);
    }

    #[test]
    fn unknown_parameter_rejected() {
        let mut env = Pendulum::<f64>::default();
        assert!(env.set_param("max_torque", 2.0).is_ok());
        assert_eq!(env.max_torque, 2.0);
        assert!(env.set_param("nope", 1.0).is_err());
    }
}
