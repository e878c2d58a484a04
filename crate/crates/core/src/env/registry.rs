use super::{Cartpole, Environment, Pendulum, Reacher2, ToyValve};
use crate::error::{PddmError, Result};
use crate::scalar::Real;

pub const ENV_NAMES: [&str; 4] = ["pendulum", "cartpole", "reacher2", "toy_valve"];

/// Builds an environment by name and applies parameter overrides in order.
pub fn make_env<F: Real>(name: &str, overrides: &[(String, f64)]) -> Result<Box<dyn Environment<F>>> {
    let mut env: Box<dyn Environment<F>> = match name {
        "pendulum" => Box::new(Pendulum::default()),
        "cartpole" => Box::new(Cartpole::default()),
        "reacher2" => Box::new(Reacher2::default()),
        "toy_valve" => Box::new(ToyValve::default()),
        other => return Err(PddmError::UnknownEnvironment(other.into())),
    };
    for (k, v) in overrides {
        env.set_param(k, *v)?;
    }
    Ok(env)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_name_builds_with_consistent_dims() {
        for name in ENV_NAMES {
            let env = make_env::<f64>(name, &[]).unwrap();
            assert_eq!(env.name(), name);
            let s = env.initial_state(0);
            assert_eq!(s.len(), env.dim_s());
            let a = vec![0.3; env.dim_a()];
            assert_eq!(env.transition(&s, &a).len(), env.dim_s());
            let expected_dt = if name == "toy_valve" { 0.15 } else { 0.05 };
            assert_eq!(env.dt(), expected_dt);
        }
    }

    #[test]
    fn overrides_and_unknowns() {
        let env = make_env::<f64>("pendulum", &[("max_torque".into(), 2.5)]).unwrap();
        assert!(env.params().contains(&("max_torque", 2.5)));
        assert!(matches!(
            make_env::<f64>("pendulum", &[("bogus".into(), 1.0)]),
            Err(PddmError::UnknownEnvParameter { .. })
        ));
        assert!(matches!(make_env::<f64>("hopper", &[]), Err(PddmError::UnknownEnvironment(_))));
    }

    #[test]
    fn nonsense_values_rejected() {
        for (env, p, v) in [
            ("pendulum", "mass", 0.0),
            ("pendulum", "dt", -0.1),
            ("pendulum", "substeps", 0.0),
            ("cartpole", "substeps", 2.5),
            ("reacher2", "link1", f64::NAN),
            ("toy_valve", "friction", f64::INFINITY),
        ] {
            let r = make_env::<f64>(env, &[(p.into(), v)]);
            assert!(matches!(r, Err(PddmError::InvalidConfig(_))), "{env}.{p}={v}");
        }
        assert!(make_env::<f64>("cartpole", &[("substeps".into(), 3.0)]).is_ok());
    }
}
