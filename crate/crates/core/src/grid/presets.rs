//! Initial data presets.
//!
//! Radial presets use `r = |x|`. Polynomial branches use `s = x` for m = 1
//! and `s = |x|` for m = 2.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{GridDomain, QGridFunction};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// `[[g]] + [[-g]]` with `g = a cos(pi r / 2)`; optional param `a` (default 1).
    SymmetricCos,
    /// `[[g]] + [[-g]]` with `g = max(0, sum c_k r^k)`; params are the `c_k`.
    SymmetricPoly,
    /// Q polynomial branches in `s`; params are Q equal-length coefficient blocks.
    Branches,
    /// Branch `i` is `a_i cos(pi r / 2)`; params are the Q amplitudes.
    CosBranches,
    /// Every node carries the same Q values; params are those values.
    Constant,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::SymmetricCos,
        Preset::SymmetricPoly,
        Preset::Branches,
        Preset::CosBranches,
        Preset::Constant,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::SymmetricCos => "symmetric-cos",
            Preset::SymmetricPoly => "symmetric-poly",
            Preset::Branches => "branches",
            Preset::CosBranches => "cos-branches",
            Preset::Constant => "constant",
        }
    }

    pub fn is_symmetric(self) -> bool {
        matches!(self, Preset::SymmetricCos | Preset::SymmetricPoly)
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::UnknownPreset(s.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialSpec {
    pub preset: Preset,
    pub params: Vec<f64>,
}

impl InitialSpec {
    pub fn new(preset: Preset, params: Vec<f64>) -> Self {
        Self { preset, params }
    }

    pub fn symmetric_cos() -> Self {
        Self::new(Preset::SymmetricCos, Vec::new())
    }
}

fn poly(coeffs: &[f64], s: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * s + c)
}

/// `cos(pi r / 2)`, pinned to zero on and outside the unit sphere.
pub(crate) fn cos_profile(r: f64) -> f64 {
    if r >= 1.0 {
        0.0
    } else {
        (FRAC_PI_2 * r).cos()
    }
}

/// Samples the initial Q-valued function `f_0` described by `spec`.
pub fn sample_initial(spec: &InitialSpec, domain: Arc<GridDomain>, q: usize) -> Result<QGridFunction> {
    if q == 0 {
        return Err(Error::PresetParams("Q must be positive".into()));
    }
    let nodes = domain.node_count();
    let radius: Vec<f64> = (0..nodes).map(|x| domain.radius(x)).collect();
    let params = &spec.params;
    let branches: Vec<Vec<f64>> = match spec.preset {
        Preset::SymmetricCos | Preset::SymmetricPoly => {
            if !q.is_multiple_of(2) {
                return Err(Error::PresetParams(format!(
                    "{} needs an even Q, got {q}",
                    spec.preset
                )));
            }
            let g: Vec<f64> = match spec.preset {
                Preset::SymmetricCos => {
                    let amplitude = match params.as_slice() {
                        [] => 1.0,
                        [a] => *a,
                        _ => {
                            return Err(Error::PresetParams(
                                "symmetric-cos takes at most one amplitude".into(),
                            ))
                        }
                    };
                    if amplitude < 0.0 {
                        return Err(Error::PresetParams("amplitude must be nonnegative".into()));
                    }
                    radius.iter().map(|&r| amplitude * cos_profile(r)).collect()
                }
                _ => {
                    if params.is_empty() {
                        return Err(Error::PresetParams(
                            "symmetric-poly needs at least one coefficient".into(),
                        ));
                    }
                    radius.iter().map(|&r| poly(params, r).max(0.0)).collect()
                }
            };
            let neg: Vec<f64> = g.iter().map(|v| -v).collect();
            (0..q)
                .map(|i| if i < q / 2 { neg.clone() } else { g.clone() })
                .collect()
        }
        Preset::Branches => {
            if params.is_empty() || !params.len().is_multiple_of(q) {
                return Err(Error::PresetParams(format!(
                    "branches needs Q={q} equal coefficient blocks, got {} values",
                    params.len()
                )));
            }
            let per = params.len() / q;
            params
                .chunks(per)
                .map(|c| {
                    (0..nodes)
                        .map(|x| {
                            let s = if domain.m() == 1 {
                                domain.coord(x)[0]
                            } else {
                                radius[x]
                            };
                            poly(c, s)
                        })
                        .collect()
                })
                .collect()
        }
        Preset::CosBranches | Preset::Constant => {
            if params.len() != q {
                return Err(Error::PresetParams(format!(
                    "{} needs exactly Q={q} values, got {}",
                    spec.preset,
                    params.len()
                )));
            }
            params
                .iter()
                .map(|&a| {
                    if spec.preset == Preset::Constant {
                        vec![a; nodes]
                    } else {
                        radius.iter().map(|&r| a * cos_profile(r)).collect()
                    }
                })
                .collect()
        }
    };
    QGridFunction::from_branches(domain, &branches)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::eta_field;

    fn dom(m: usize, r: usize) -> Arc<GridDomain> {
        Arc::new(GridDomain::new(m, r).unwrap())
    }

    #[test]
    fn symmetric_cos_on_three_nodes() {
        let f = sample_initial(&InitialSpec::symmetric_cos(), dom(1, 3), 2).unwrap();
        assert_eq!(f.value(0).coords(), &[0.0, 0.0]);
        assert_eq!(f.value(1).coords(), &[-1.0, 1.0]);
        assert_eq!(f.value(2).coords(), &[0.0, 0.0]);
    }

    #[test]
    fn constant_branches_give_constant_function() {
        let spec = InitialSpec::new(Preset::Branches, vec![0.7, 0.7]);
        let f = sample_initial(&spec, dom(2, 7), 2).unwrap();
        assert!(f.is_constant());
        assert_eq!(f.value(0).coords(), &[0.7, 0.7]);
    }

    #[test]
    fn symmetric_presets_have_zero_mean() {
        for (spec, m) in [
            (InitialSpec::symmetric_cos(), 1),
            (InitialSpec::new(Preset::SymmetricCos, vec![2.5]), 2),
            (InitialSpec::new(Preset::SymmetricPoly, vec![1.0, 0.0, -1.0]), 1),
            (InitialSpec::new(Preset::SymmetricPoly, vec![0.5, -2.0]), 2),
        ] {
            for q in [2, 4] {
                let f = sample_initial(&spec, dom(m, 9), q).unwrap();
                assert!(eta_field(&f).iter().all(|e| e[0] == 0.0));
            }
        }
    }

    #[test]
    fn polynomial_is_clamped_nonnegative() {
        let spec = InitialSpec::new(Preset::SymmetricPoly, vec![0.5, -2.0]);
        let f = sample_initial(&spec, dom(1, 5), 2).unwrap();
        // r = 1 gives 0.5 - 2 < 0, clamped to the double origin
        assert_eq!(f.value(0).coords(), &[0.0, 0.0]);
        assert_eq!(f.value(2).coords(), &[-0.5, 0.5]);
    }

    #[test]
    fn preset_errors() {
        let d = dom(1, 5);
        assert!(matches!(
            sample_initial(&InitialSpec::symmetric_cos(), d.clone(), 3),
            Err(Error::PresetParams(_))
        ));
        assert!(matches!(
            sample_initial(&InitialSpec::new(Preset::Branches, vec![1.0, 2.0, 3.0]), d.clone(), 2),
            Err(Error::PresetParams(_))
        ));
        assert!(matches!(
            sample_initial(&InitialSpec::new(Preset::CosBranches, vec![1.0]), d, 2),
            Err(Error::PresetParams(_))
        ));
        assert_eq!(
            "bogus".parse::<Preset>(),
            Err(Error::UnknownPreset("bogus".into()))
        );
        assert_eq!("cos-branches".parse::<Preset>(), Ok(Preset::CosBranches));
    }
}
