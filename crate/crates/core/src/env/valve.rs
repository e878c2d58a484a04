use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{finite, positive, rotate, substeps, unit_angle, unknown_param, Environment, Objective, SuccessRule};
use crate::error::Result;
use crate::scalar::Real;

/// A 1-DoF valve turned by two velocity-driven fingers through viscous contact.
///
/// State is `(sin th, cos th, omega, sin target, cos target)`; actions are the two
/// finger speeds. Finger `i` sits at angle `placement_i` around the valve and its
/// contact stiffness is `contact_gain * (1 + contact_modulation * cos(th - placement_i))`,
/// so which finger has grip changes as the valve turns.
///
/// Reward: `-10 |e| + 1[|e| < 0.25] + 10 [|e| < 0.1]` with `e = wrap(th - target)`.
#[derive(Debug, Clone)]
pub struct ToyValve<F> {
    pub inertia: F,
    pub friction: F,
    pub contact_gain: F,
    pub contact_modulation: F,
    pub finger_speed: F,
    pub dt: F,
    pub substeps: usize,
}

impl<F: Real> Default for ToyValve<F> {
    fn default() -> Self {
        Self {
            inertia: F::lit(0.1),
            friction: F::lit(0.2),
            contact_gain: F::one(),
            contact_modulation: F::lit(0.8),
            finger_speed: F::lit(2.0),
            dt: F::lit(0.15),
            substeps: 10,
        }
    }
}

pub const OUTER_THRESHOLD: f64 = 0.25;
pub const INNER_THRESHOLD: f64 = 0.1;

impl<F: Real> ToyValve<F> {
    /// Wrapped angle from the target, in `(-pi, pi]`.
    pub fn angle_error(s: &[F]) -> F {
        let (sv, cv, st, ct) = (s[0], s[1], s[3], s[4]);
        (sv * ct - cv * st).atan2(cv * ct + sv * st)
    }

    /// Reward as a function of the angle error alone.
    pub fn reward_for_error(e: F) -> F {
        let e = e.abs();
        let mut r = F::lit(-10.0) * e;
        if e < F::lit(OUTER_THRESHOLD) {
            r += F::one();
        }
        if e < F::lit(INNER_THRESHOLD) {
            r += F::lit(10.0);
        }
        r
    }

    pub fn observe(theta: F, omega: F, target: F) -> Vec<F> {
        let (s, c) = theta.sin_cos();
        let (st, ct) = target.sin_cos();
        vec![s, c, omega, st, ct]
    }
}

impl<F: Real> Objective<F> for ToyValve<F> {
    fn reward(&self, s: &[F], _a: &[F]) -> F {
        Self::reward_for_error(Self::angle_error(s))
    }
}

impl<F: Real> Environment<F> for ToyValve<F> {
    fn name(&self) -> &'static str {
        "toy_valve"
    }

    fn dim_s(&self) -> usize {
        5
    }

    fn dim_a(&self) -> usize {
        2
    }

    fn dt(&self) -> F {
        self.dt
    }

    fn initial_state(&self, seed: u64) -> Vec<F> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let theta = rng.random_range(-PI..=PI);
        let target = rng.random_range(-PI..=PI);
        Self::observe(F::lit(theta), F::zero(), F::lit(target))
    }

    fn transition(&self, s: &[F], a: &[F]) -> Vec<F> {
        let (mut sin, mut cos) = unit_angle(s[0], s[1]);
        let mut omega = s[2];
        let h = self.dt / F::from_usize(self.substeps.max(1)).expect("substeps as float");
        let v1 = a[0] * self.finger_speed;
        let v2 = a[1] * self.finger_speed;
        for _ in 0..self.substeps.max(1) {
            // placements at 0 and pi: cos(th - pi) = -cos(th)
            let k1 = self.contact_gain * (F::one() + self.contact_modulation * cos);
            let k2 = self.contact_gain * (F::one() - self.contact_modulation * cos);
            let torque = k1 * (v1 - omega) + k2 * (v2 - omega) - self.friction * omega;
            omega += h * torque / self.inertia;
            (sin, cos) = rotate(sin, cos, h * omega);
        }
        let (sin, cos) = unit_angle(sin, cos);
        vec![sin, cos, omega, s[3], s[4]]
    }

    fn success(&self, s: &[F]) -> bool {
        Self::angle_error(s).abs() < F::lit(INNER_THRESHOLD)
    }

    fn success_rule(&self) -> SuccessRule {
        SuccessRule::Final
    }

    fn set_param(&mut self, name: &str, value: f64) -> Result<()> {
        let v = finite::<F>(name, value)?;
        match name {
            "inertia" => self.inertia = positive(name, value)?,
            "friction" => self.friction = v,
            "contact_gain" => self.contact_gain = v,
            "contact_modulation" => self.contact_modulation = v,
            "finger_speed" => self.finger_speed = v,
            "dt" => self.dt = positive(name, value)?,
            "substeps" => self.substeps = substeps(value)?,
            _ => return Err(unknown_param("toy_valve", name)),
        }
        Ok(())
    }

    fn params(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("inertia", self.inertia.as_f64()),
            ("friction", self.friction.as_f64()),
            ("contact_gain", self.contact_gain.as_f64()),
            ("contact_modulation", self.contact_modulation.as_f64()),
            ("finger_speed", self.finger_speed.as_f64()),
            ("dt", self.dt.as_f64()),
            ("substeps", self.substeps as f64),
        ]
    }
}
