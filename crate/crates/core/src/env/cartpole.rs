use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{finite, positive, rotate, substeps, unit_angle, unknown_param, Environment, Objective, SuccessRule};
use crate::error::Result;
use crate::scalar::Real;

/// Cart-pole swing-up on a bounded track.
///
/// State is `(x, x_dot, sin th, cos th, th_dot)` with `th = 0` hanging and
/// `th = pi` upright. Leaving the track is a failure.
#[derive(Debug, Clone)]
pub struct Cartpole<F> {
    pub cart_mass: F,
    pub pole_mass: F,
    pub pole_length: F,
    pub gravity: F,
    pub max_force: F,
    pub cart_friction: F,
    pub track_limit: F,
    pub dt: F,
    pub substeps: usize,
    pub angle_weight: F,
    pub position_weight: F,
    pub velocity_weight: F,
    pub action_weight: F,
    pub failure_penalty: F,
    pub init_noise: F,
    pub success_angle: F,
}

impl<F: Real> Default for Cartpole<F> {
    fn default() -> Self {
        Self {
            cart_mass: F::one(),
            pole_mass: F::lit(0.1),
            pole_length: F::lit(0.5),
            gravity: F::lit(9.81),
            max_force: F::lit(10.0),
            cart_friction: F::lit(0.1),
            track_limit: F::lit(3.0),
            dt: F::lit(0.05),
            substeps: 10,
            angle_weight: F::one(),
            position_weight: F::lit(0.1),
            velocity_weight: F::lit(0.01),
            action_weight: F::lit(0.001),
            failure_penalty: F::lit(-100.0),
            init_noise: F::lit(0.05),
            success_angle: F::lit(0.25),
        }
    }
}

impl<F: Real> Cartpole<F> {
    pub fn angle_from_upright(s: &[F]) -> F {
        (-s[2]).atan2(-s[3])
    }

    pub fn observe(x: F, x_dot: F, theta: F, theta_dot: F) -> Vec<F> {
        let (s, c) = theta.sin_cos();
        vec![x, x_dot, s, c, theta_dot]
    }
}

impl<F: Real> Objective<F> for Cartpole<F> {
    fn reward(&self, s: &[F], a: &[F]) -> F {
        let phi = Self::angle_from_upright(s);
        -(self.angle_weight * phi * phi
            + self.position_weight * s[0] * s[0]
            + self.velocity_weight * s[4] * s[4])
            - self.action_weight * a[0] * a[0]
    }

    fn failure(&self, s: &[F]) -> bool {
        s[0].abs() > self.track_limit
    }

    fn failure_penalty(&self) -> F {
        self.failure_penalty
    }
}

impl<F: Real> Environment<F> for Cartpole<F> {
    fn name(&self) -> &'static str {
        "cartpole"
    }

    fn dim_s(&self) -> usize {
        5
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
        let mut draw = || if w > 0.0 { F::lit(rng.random_range(-w..=w)) } else { F::zero() };
        let (x, xd, th, thd) = (draw(), draw(), draw(), draw());
        Self::observe(x, xd, th, thd)
    }

    fn transition(&self, s: &[F], a: &[F]) -> Vec<F> {
        let (mut x, mut x_dot) = (s[0], s[1]);
        let (mut sin, mut cos) = unit_angle(s[2], s[3]);
        let mut th_dot = s[4];
        let (big_m, m, l, g) = (self.cart_mass, self.pole_mass, self.pole_length, self.gravity);
        let force = a[0] * self.max_force;
        let h = self.dt / F::from_usize(self.substeps.max(1)).expect("substeps as float");
        for _ in 0..self.substeps.max(1) {
            // Lagrangian equations for a point-mass pole, solved as a 2x2 system.
            let rhs_x = force - self.cart_friction * x_dot + m * l * sin * th_dot * th_dot;
            let rhs_th = -m * g * l * sin;
            let det = (big_m + m) * m * l * l - m * m * l * l * cos * cos;
            let x_acc = (rhs_x * m * l * l - m * l * cos * rhs_th) / det;
            let th_acc = ((big_m + m) * rhs_th - m * l * cos * rhs_x) / det;
            x_dot += h * x_acc;
            th_dot += h * th_acc;
            x += h * x_dot;
            (sin, cos) = rotate(sin, cos, h * th_dot);
        }
        let (sin, cos) = unit_angle(sin, cos);
        vec![x, x_dot, sin, cos, th_dot]
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
            "cart_mass" => self.cart_mass = positive(name, value)?,
            "pole_mass" => self.pole_mass = positive(name, value)?,
            "pole_length" => self.pole_length = positive(name, value)?,
            "gravity" => self.gravity = v,
            "max_force" => self.max_force = v,
            "cart_friction" => self.cart_friction = v,
            "track_limit" => self.track_limit = v,
            "dt" => self.dt = positive(name, value)?,
            "substeps" => self.substeps = substeps(value)?,
            "angle_weight" => self.angle_weight = v,
            "position_weight" => self.position_weight = v,
            "velocity_weight" => self.velocity_weight = v,
            "action_weight" => self.action_weight = v,
            "failure_penalty" => self.failure_penalty = v,
            "init_noise" => self.init_noise = v,
            "success_angle" => self.success_angle = v,
            _ => return Err(unknown_param("cartpole", name)),
        }
        Ok(())
    }

    fn params(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("cart_mass", self.cart_mass.as_f64()),
            ("pole_mass", self.pole_mass.as_f64()),
            ("pole_length", self.pole_length.as_f64()),
            ("gravity", self.gravity.as_f64()),
            ("max_force", self.max_force.as_f64()),
            ("cart_friction", self.cart_friction.as_f64()),
            ("track_limit", self.track_limit.as_f64()),
            ("dt", self.dt.as_f64()),
            ("substeps", self.substeps as f64),
            ("angle_weight", self.angle_weight.as_f64()),
            ("position_weight", self.position_weight.as_f64()),
            ("velocity_weight", self.velocity_weight.as_f64()),
            ("action_weight", self.action_weight.as_f64()),
            ("failure_penalty", self.failure_penalty.as_f64()),
            ("init_noise", self.init_noise.as_f64()),
            ("success_angle", self.success_angle.as_f64()),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hanging_at_rest_is_a_fixed_point() {
        let env = Cartpole::<f64>::default();
        let s = vec![0.5, 0.0, 0.0, 1.0, 0.0];
        assert_eq!(env.transition(&s, &[0.0]), s);
    }

    #[test]
    fn pushing_moves_the_cart_and_swings_the_pole_back() {
        let env = Cartpole::<f64>::default();
        let s = env.transition(&[0.0, 0.0, 0.0, 1.0, 0.0], &[1.0]);
        assert!(s[1] > 0.0);
        // cart accelerates right, hanging pole lags behind (negative angle)
        assert!(s[4] < 0.0);
    }

    #[test]
    fn leaving_the_track_fails() {
        let env = Cartpole::<f64>::default();
        assert!(env.failure(&[3.1, 0.0, 0.0, 1.0, 0.0]));
        assert!(!env.failure(&[2.9, 0.0, 0.0, 1.0, 0.0]));
        assert_eq!(env.failure_penalty(), -100.0);
    }
}
