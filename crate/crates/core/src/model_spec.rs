//! One-line model and initial-data descriptions used by the CLI.
//!
//! ```text
//! uniform:vmax=1,n=64          Gauss-Legendre uniform Maxwellian on [-vmax, vmax]
//! atoms:(1,0.5);(-1,0.5)       discrete Maxwellian, (velocity, mass) pairs
//! coth:vmax=1                  closed form of the uniform model
//! relativistic                 closed form of the +-1 two-atom model
//! classical:theta2=0.333333    H(p) = theta2 p^2
//!
//! parabola:a=1,center=0   cosine:amp=1   linear:p=0.5   ramp:w=1,slope=20,height=2
//! ```

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianModel;
use crate::hj::InitialCondition;
use crate::velocity::VelocityModel;

#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Velocity(VelocityModel),
    Coth { v_max: f64 },
    Relativistic,
    Classical { theta2: f64 },
}

impl ModelSpec {
    pub fn hamiltonian(&self) -> Result<HamiltonianModel> {
        match self {
            ModelSpec::Velocity(m) => Ok(HamiltonianModel::implicit(m.clone())),
            ModelSpec::Coth { v_max } => HamiltonianModel::coth(*v_max),
            ModelSpec::Relativistic => Ok(HamiltonianModel::relativistic()),
            ModelSpec::Classical { theta2 } => HamiltonianModel::classical(*theta2),
        }
    }

    /// Velocity model for the kinetic solver. Closed forms have none.
    pub fn velocity(&self) -> Result<VelocityModel> {
        match self {
            ModelSpec::Velocity(m) => Ok(m.clone()),
            ModelSpec::Relativistic => VelocityModel::atoms(&[(1.0, 0.5), (-1.0, 0.5)]),
            other => Err(Error::Invalid(format!(
                "{} has no velocity model; use uniform:... or atoms:...",
                other.name()
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Velocity(_) => "velocity",
            ModelSpec::Coth { .. } => "coth",
            ModelSpec::Relativistic => "relativistic",
            ModelSpec::Classical { .. } => "classical",
        }
    }
}

fn split_head(s: &str) -> (&str, &str) {
    match s.split_once(':') {
        Some((h, rest)) => (h.trim(), rest.trim()),
        None => (s.trim(), ""),
    }
}

/// `k=v,k=v` into a map; every key must be in `allowed`.
fn key_values(body: &str, allowed: &[&str]) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for item in body.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::Invalid(format!("expected key=value, got '{item}'")))?;
        let k = k.trim();
        if !allowed.contains(&k) {
            return Err(Error::Invalid(format!("unknown key '{k}' (expected one of {allowed:?})")));
        }
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::Invalid(format!("'{k}' is not a number: '{}'", v.trim())))?;
        if !v.is_finite() {
            return Err(Error::Invalid(format!("'{k}' must be finite")));
        }
        if out.insert(k.to_string(), v).is_some() {
            return Err(Error::Invalid(format!("duplicate key '{k}'")));
        }
    }
    Ok(out)
}

fn count(v: f64, name: &str) -> Result<usize> {
    if v < 0.0 || v.fract() != 0.0 || v > 1e7 {
        return Err(Error::Invalid(format!("'{name}' must be a non-negative integer, got {v}")));
    }
    Ok(v as usize)
}

fn parse_atoms(body: &str) -> Result<Vec<(f64, f64)>> {
    let mut atoms = Vec::new();
    for item in body.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        let inner = item
            .strip_prefix('(')
            .and_then(|s| s.strip_suffix(')'))
            .ok_or_else(|| Error::Invalid(format!("atom must look like (v,mass), got '{item}'")))?;
        let (v, m) = inner
            .split_once(',')
            .ok_or_else(|| Error::Invalid(format!("atom must look like (v,mass), got '{item}'")))?;
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Invalid(format!("not a number in atom '{item}'")))
        };
        atoms.push((parse(v)?, parse(m)?));
    }
    if atoms.is_empty() {
        return Err(Error::Invalid("atoms: needs at least one (v,mass) pair".into()));
    }
    Ok(atoms)
}

impl FromStr for ModelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (head, body) = split_head(s);
        match head {
            "uniform" => {
                let kv = key_values(body, &["vmax", "n"])?;
                let v_max = kv.get("vmax").copied().unwrap_or(1.0);
                let n = count(kv.get("n").copied().unwrap_or(64.0), "n")?;
                Ok(ModelSpec::Velocity(VelocityModel::uniform(v_max, n)?))
            }
            "atoms" => Ok(ModelSpec::Velocity(VelocityModel::atoms(&parse_atoms(body)?)?)),
            "coth" => {
                let kv = key_values(body, &["vmax"])?;
                let v_max = kv.get("vmax").copied().unwrap_or(1.0);
                HamiltonianModel::coth(v_max)?;
                Ok(ModelSpec::Coth { v_max })
            }
            "relativistic" => {
                key_values(body, &[])?;
                Ok(ModelSpec::Relativistic)
            }
            "classical" => {
                let kv = key_values(body, &["theta2"])?;
                let theta2 = kv.get("theta2").copied().unwrap_or(1.0 / 3.0);
                HamiltonianModel::classical(theta2)?;
                Ok(ModelSpec::Classical { theta2 })
            }
            other => Err(Error::Invalid(format!(
                "unknown model '{other}' (expected uniform, atoms, coth, relativistic or classical)"
            ))),
        }
    }
}

pub fn parse_initial(s: &str) -> Result<InitialCondition> {
    let (head, body) = split_head(s);
    let init = match head {
        "parabola" => {
            let kv = key_values(body, &["a", "center"])?;
            InitialCondition::Parabola {
                a: kv.get("a").copied().unwrap_or(1.0),
                center: kv.get("center").copied().unwrap_or(0.0),
            }
        }
        "cosine" => {
            let kv = key_values(body, &["amp"])?;
            InitialCondition::CosineBump {
                amplitude: kv.get("amp").copied().unwrap_or(1.0),
            }
        }
        "linear" => {
            let kv = key_values(body, &["p"])?;
            InitialCondition::Linear {
                p: kv.get("p").copied().unwrap_or(1.0),
            }
        }
        "ramp" => {
            let kv = key_values(body, &["w", "slope", "height"])?;
            let init = InitialCondition::Ramp {
                half_width: kv.get("w").copied().unwrap_or(1.0),
                slope: kv.get("slope").copied().unwrap_or(20.0),
                height: kv.get("height").copied().unwrap_or(2.0),
            };
            if let InitialCondition::Ramp { half_width, slope, height } = init {
                if half_width < 0.0 || slope <= 0.0 || height <= 0.0 {
                    return Err(Error::Invalid("ramp needs w >= 0, slope > 0, height > 0".into()));
                }
            }
            init
        }
        other => {
            return Err(Error::Invalid(format!(
                "unknown initial condition '{other}' (expected parabola, cosine, linear or ramp)"
            )))
        }
    };
    Ok(init)
}

/// Comma-separated list of numbers, e.g. an eps sequence.
pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::Invalid(format!("not a number: '{t}'")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::velocity::VelocityKind;

    #[test]
    fn parses_models() {
        let m: ModelSpec = "uniform:vmax=1,n=64".parse().unwrap();
        let v = m.velocity().unwrap();
        assert_eq!(v.len(), 64);
        assert_eq!(v.kind(), VelocityKind::ContinuousQuadrature);

        let m: ModelSpec = "atoms:(1,0.5);(-1,0.5)".parse().unwrap();
        assert_eq!(m.velocity().unwrap().kind(), VelocityKind::DiscreteAtoms);

        assert_eq!("coth:vmax=2".parse::<ModelSpec>().unwrap(), ModelSpec::Coth { v_max: 2.0 });
        assert_eq!("relativistic".parse::<ModelSpec>().unwrap(), ModelSpec::Relativistic);
        assert_eq!(
            "classical:theta2=0.25".parse::<ModelSpec>().unwrap(),
            ModelSpec::Classical { theta2: 0.25 }
        );
    }

    #[test]
    fn rejects_bad_models() {
        for bad in [
            "uniform:n=63",
            "uniform:n=2.5",
            "uniform:vmax=-1",
            "uniform:speed=1",
            "atoms:(1,0.5);(-2,0.5)",
            "atoms:(1,0.5)",
            "atoms:1,0.5",
            "classical:theta2=0",
            "maxwell",
            "coth:vmax=nan",
        ] {
            let err = bad.parse::<ModelSpec>().unwrap_err();
            assert!(err.is_validation(), "{bad}: {err}");
        }
    }

    #[test]
    fn closed_forms_have_no_velocity_model() {
        assert!("coth".parse::<ModelSpec>().unwrap().velocity().is_err());
        assert!("classical".parse::<ModelSpec>().unwrap().velocity().is_err());
    }

    #[test]
    fn parses_initial_data() {
        assert_eq!(
            parse_initial("parabola:a=1").unwrap(),
            InitialCondition::Parabola { a: 1.0, center: 0.0 }
        );
        assert_eq!(
            parse_initial("cosine:amp=0.5").unwrap(),
            InitialCondition::CosineBump { amplitude: 0.5 }
        );
        assert_eq!(parse_initial("linear:p=2").unwrap(), InitialCondition::Linear { p: 2.0 });
        assert!(parse_initial("ramp:slope=0").is_err());
        assert!(parse_initial("gaussian:s=1").is_err());
        assert!(parse_initial("parabola:a=x").is_err());
    }

    #[test]
    fn parses_lists() {
        assert_eq!(parse_list("0.5, 0.25,0.125").unwrap(), vec![0.5, 0.25, 0.125]);
        assert!(parse_list("0.5,a").is_err());
    }
}
