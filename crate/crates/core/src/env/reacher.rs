use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{finite, positive, rotate, substeps, unit_angle, unknown_param, Environment, Objective, SuccessRule};
use crate::error::Result;
use crate::scalar::Real;

/// Planar two-link arm reaching for a goal point.
///
/// State is `(sin q1, cos q1, sin q2, cos q2, q1_dot, q2_dot, goal_x, goal_y)`.
/// Each joint is a damped rotor driven by its own torque. Reward is
/// `-|tip - goal| - action_weight * |a|^2`.
#[derive(Debug, Clone)]
pub struct Reacher2<F> {
    pub link1: F,
    pub link2: F,
    pub inertia: F,
    pub damping: F,
    pub torque_scale: F,
    pub dt: F,
    pub substeps: usize,
    pub action_weight: F,
    pub goal_min_radius: F,
    pub goal_max_radius: F,
    pub success_distance: F,
}

impl<F: Real> Default for Reacher2<F> {
    fn default() -> Self {
        Self {
            link1: F::lit(0.5),
            link2: F::lit(0.5),
            inertia: F::one(),
            damping: F::one(),
            torque_scale: F::lit(5.0),
            dt: F::lit(0.05),
            substeps: 5,
            action_weight: F::lit(0.01),
            goal_min_radius: F::lit(0.2),
            goal_max_radius: F::lit(0.9),
            success_distance: F::lit(0.05),
        }
    }
}

impl<F: Real> Reacher2<F> {
    /// Fingertip position from the encoded joint angles.
    pub fn tip(&self, s: &[F]) -> (F, F) {
        let (s1, c1) = (s[0], s[1]);
        // angle addition for q1 + q2
        let s12 = s1 * s[3] + c1 * s[2];
        let c12 = c1 * s[3] - s1 * s[2];
        (self.link1 * c1 + self.link2 * c12, self.link1 * s1 + self.link2 * s12)
    }

    pub fn goal_distance(&self, s: &[F]) -> F {
        let (x, y) = self.tip(s);
        (x - s[6]).hypot(y - s[7])
    }

    pub fn observe(q1: F, q2: F, q1_dot: F, q2_dot: F, goal: (F, F)) -> Vec<F> {
        let (s1, c1) = q1.sin_cos();
        let (s2, c2) = q2.sin_cos();
        vec![s1, c1, s2, c2, q1_dot, q2_dot, goal.0, goal.1]
    }
}

impl<F: Real> Objective<F> for Reacher2<F> {
    fn reward(&self, s: &[F], a: &[F]) -> F {
        -self.goal_distance(s) - self.action_weight * (a[0] * a[0] + a[1] * a[1])
    }
}

impl<F: Real> Environment<F> for Reacher2<F> {
    fn name(&self) -> &'static str {
        "reacher2"
    }

    fn dim_s(&self) -> usize {
        8
    }

    fn dim_a(&self) -> usize {
        2
    }

    fn dt(&self) -> F {
        self.dt
    }

    fn initial_state(&self, seed: u64) -> Vec<F> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q1 = rng.random_range(-PI..PI);
        let q2 = rng.random_range(-PI..PI);
        let (r0, r1) = (self.goal_min_radius.as_f64(), self.goal_max_radius.as_f64());
        let radius = rng.random_range(r0..=r1);
        let angle = rng.random_range(-PI..PI);
        let goal = (F::lit(radius * angle.cos()), F::lit(radius * angle.sin()));
        Self::observe(F::lit(q1), F::lit(q2), F::zero(), F::zero(), goal)
    }

    fn transition(&self, s: &[F], a: &[F]) -> Vec<F> {
        let (mut s1, mut c1) = unit_angle(s[0], s[1]);
        let (mut s2, mut c2) = unit_angle(s[2], s[3]);
        let (mut w1, mut w2) = (s[4], s[5]);
        let h = self.dt / F::from_usize(self.substeps.max(1)).expect("substeps as float");
        for _ in 0..self.substeps.max(1) {
            w1 += h * (self.torque_scale * a[0] - self.damping * w1) / self.inertia;
            w2 += h * (self.torque_scale * a[1] - self.damping * w2) / self.inertia;
            (s1, c1) = rotate(s1, c1, h * w1);
            (s2, c2) = rotate(s2, c2, h * w2);
        }
        let (s1, c1) = unit_angle(s1, c1);
        let (s2, c2) = unit_angle(s2, c2);
        vec![s1, c1, s2, c2, w1, w2, s[6], s[7]]
    }

    fn success(&self, s: &[F]) -> bool {
        self.goal_distance(s) < self.success_distance
    }

    fn success_rule(&self) -> SuccessRule {
        SuccessRule::Final
    }

    fn set_param(&mut self, name: &str, value: f64) -> Result<()> {
        let v = finite::<F>(name, value)?;
        match name {
            "link1" => self.link1 = positive(name, value)?,
            "link2" => self.link2 = positive(name, value)?,
            "inertia" => self.inertia = positive(name, value)?,
            "damping" => self.damping = v,
            "torque_scale" => self.torque_scale = v,
            "dt" => self.dt = positive(name, value)?,
            "substeps" => self.substeps = substeps(value)?,
            "action_weight" => self.action_weight = v,
            "goal_min_radius" => self.goal_min_radius = v,
            "goal_max_radius" => self.goal_max_radius = v,
            "success_distance" => self.success_distance = v,
            _ => return Err(unknown_param("reacher2", name)),
        }
        Ok(())
    }

    fn params(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("link1", self.link1.as_f64()),
            ("link2", self.link2.as_f64()),
            ("inertia", self.inertia.as_f64()),
            ("damping", self.damping.as_f64()),
            ("torque_scale", self.torque_scale.as_f64()),
            ("dt", self.dt.as_f64()),
            ("substeps", self.substeps as f64),
            ("action_weight", self.action_weight.as_f64()),
            ("goal_min_radius", self.goal_min_radius.as_f64()),
            ("goal_max_radius", self.goal_max_radius.as_f64()),
            ("success_distance", self.success_distance.as_f64()),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn at_rest_without_torque_is_fixed() {
        let env = Reacher2::<f64>::default();
        for seed in 0..20 {
            let s = env.initial_state(seed);
            assert_eq!(env.transition(&s, &[0.0, 0.0]), s);
        }
    }

    #[test]
    fn straight_arm_tip() {
        let env = Reacher2::<f64>::default();
        let s = Reacher2::observe(0.0, 0.0, 0.0, 0.0, (1.0, 0.0));
        let (x, y) = env.tip(&s);
        assert!((x - 1.0).abs() < 1e-15 && y.abs() < 1e-15);
        assert!(env.success(&s));
        let s = Reacher2::observe(std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2, 0.0, 0.0, (0.0, 0.0));
        let (x, y) = env.tip(&s);
        assert!((x + 0.5).abs() < 1e-12 && (y - 0.5).abs() < 1e-12);
    }

    #[test]
    fn goals_are_reachable() {
        let env = Reacher2::<f64>::default();
        for seed in 0..50 {
            let s = env.initial_state(seed);
            let r = s[6].hypot(s[7]);
            assert!((0.2..=0.9).contains(&r));
        }
    }
}
