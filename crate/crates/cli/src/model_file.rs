//! Model description files: parameters, lattice, species and reactions.

use std::path::Path;

use rdme_core::model::{Boundary, LatticeSpec, ModelError, RateLaw, ReactionChannel, SpeciesSpec};
use rdme_core::rates::{h_star, AssocRate, Dim, PhysicalParams};
use serde::Deserialize;

use crate::config::{NumberOrName, RateMode, REQUIRED};
use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    #[serde(default)]
    pub parameters: toml::Table,
    pub lattice: Option<LatticeSection>,
    pub species: Vec<SpeciesSection>,
    #[serde(default, rename = "reaction")]
    pub reactions: Vec<ReactionSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSection {
    pub dim: usize,
    pub n: usize,
    pub length: Option<f64>,
    pub h: Option<f64>,
    pub boundary: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeciesSection {
    pub name: String,
    pub diffusion: NumberOrName,
    pub radius: NumberOrName,
    /// Copy number placed uniformly at random at t = 0.
    pub initial: Option<NumberOrName>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Law {
    Multiscale,
    CollinsKimball,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReactionSection {
    pub name: String,
    #[serde(default)]
    pub reactants: Vec<String>,
    #[serde(default)]
    pub products: Vec<String>,
    /// Intrinsic association rate (m^d/s) of a bimolecular channel.
    pub k_r: Option<NumberOrName>,
    /// Fixes the law of a `k_r` channel; otherwise the experiment's mode applies.
    pub law: Option<Law>,
    /// Mesoscopic constant used as given.
    pub rate: Option<NumberOrName>,
    /// Intrinsic dissociation rate (1/s), paired with `reverse_of`.
    pub k_d: Option<NumberOrName>,
    pub reverse_of: Option<String>,
}

/// Species, channels and initial counts ready for compilation.
#[derive(Debug, Clone)]
pub struct BuiltModel {
    pub species: Vec<SpeciesSpec>,
    pub channels: Vec<ReactionChannel>,
    pub initial: Vec<u32>,
}

impl ModelFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let m: ModelFile =
            toml::from_str(text).map_err(|e| CliError::Config(format!("model file: {e}")))?;
        m.check_parameters()?;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read model {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Fails listing every parameter still set to the placeholder.
    fn check_parameters(&self) -> Result<(), CliError> {
        let missing: Vec<&str> = self
            .parameters
            .iter()
            .filter(|(_, v)| v.as_str() == Some(REQUIRED))
            .map(|(k, _)| k.as_str())
            .collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(format!(
                "model parameters must be supplied: {}",
                missing.join(", ")
            )))
        }
    }

    fn number(&self, v: &NumberOrName, what: &str) -> Result<f64, CliError> {
        v.finite(what, Some(&self.parameters))
    }

    /// Builds the channel list. `mode` picks the law of `k_r` channels
    /// without an explicit `law`; `diffusion` overrides every species'
    /// diffusion constant.
    pub fn build(&self, mode: RateMode, diffusion: Option<f64>) -> Result<BuiltModel, CliError> {
        let mut species = Vec::with_capacity(self.species.len());
        for s in &self.species {
            let gamma = match diffusion {
                Some(d) => d,
                None => self.number(&s.diffusion, &format!("species {:?} diffusion", s.name))?,
            };
            let radius = self.number(&s.radius, &format!("species {:?} radius", s.name))?;
            species.push(SpeciesSpec::new(s.name.clone(), gamma, radius));
        }
        let index = |channel: &str, name: &str| {
            species.iter().position(|s| s.name == name).ok_or_else(|| ModelError::InvalidChannel {
                channel: channel.to_string(),
                reason: format!("unknown species {name:?}"),
            })
        };
        let mut channels = Vec::with_capacity(self.reactions.len());
        for r in &self.reactions {
            let what = |k: &str| format!("reaction {:?} {k}", r.name);
            let reactants = r.reactants.iter().map(|n| index(&r.name, n)).collect::<Result<Vec<_>, _>>()?;
            let products = r.products.iter().map(|n| index(&r.name, n)).collect::<Result<Vec<_>, _>>()?;
            let law = match (&r.k_r, &r.rate, &r.k_d, &r.reverse_of) {
                (Some(k), None, None, None) => {
                    let k_r = k.resolve(&what("k_r"), Some(&self.parameters))?;
                    let law = r.law.unwrap_or(match mode {
                        RateMode::Hhp => Law::Multiscale,
                        RateMode::Ck => Law::CollinsKimball,
                    });
                    match law {
                        Law::Multiscale => RateLaw::Multiscale { k_r },
                        Law::CollinsKimball => RateLaw::CollinsKimball { k_r },
                    }
                }
                (None, Some(rate), None, None) => RateLaw::Mesoscopic {
                    rate: self.number(rate, &what("rate"))?,
                },
                (None, None, Some(k_d), Some(assoc)) => {
                    let association = self
                        .reactions
                        .iter()
                        .position(|a| &a.name == assoc)
                        .ok_or_else(|| ModelError::InvalidChannel {
                            channel: r.name.clone(),
                            reason: format!("reverse_of names unknown channel {assoc:?}"),
                        })?;
                    RateLaw::Dissociation {
                        k_d: self.number(k_d, &what("k_d"))?,
                        association,
                    }
                }
                _ => {
                    return Err(CliError::Config(format!(
                        "reaction {:?} needs exactly one of k_r, rate, or k_d with reverse_of",
                        r.name
                    )))
                }
            };
            if r.law.is_some() && r.k_r.is_none() {
                return Err(CliError::Config(format!("reaction {:?}: law applies to k_r channels only", r.name)));
            }
            channels.push(ReactionChannel::new(r.name.clone(), reactants, products, law));
        }
        let mut initial = Vec::with_capacity(self.species.len());
        for s in &self.species {
            let x = match &s.initial {
                Some(v) => self.number(v, &format!("species {:?} initial", s.name))?,
                None => 0.0,
            };
            if !(x >= 0.0 && x.fract() == 0.0 && x <= u32::MAX as f64) {
                return Err(CliError::Config(format!("species {:?}: initial count must be a whole number", s.name)));
            }
            initial.push(x as u32);
        }
        Ok(BuiltModel {
            initial,
            species,
            channels,
        })
    }

    pub fn lattice(&self) -> Result<Option<LatticeSpec>, CliError> {
        let Some(l) = &self.lattice else { return Ok(None) };
        let length = match (l.length, l.h) {
            (Some(len), None) => len,
            (None, Some(h)) => h * l.n as f64,
            _ => return Err(CliError::Config("[lattice] needs exactly one of length, h".into())),
        };
        let boundary = parse_boundary(l.boundary.as_deref())?;
        Ok(Some(LatticeSpec::new(l.dim, l.n, length, boundary)?))
    }
}

pub fn parse_boundary(b: Option<&str>) -> Result<Boundary, CliError> {
    match b {
        None | Some("periodic") => Ok(Boundary::Periodic),
        Some("reflective") => Ok(Boundary::Reflective),
        Some(b) => Err(CliError::Config(format!("unknown boundary {b:?}"))),
    }
}

/// Largest `h*_inf` over the bimolecular intrinsic-rate channels, used to
/// resolve widths given relative to the critical width.
pub fn max_h_star_inf(model: &BuiltModel, dim: usize) -> Option<f64> {
    let dim = Dim::from_usize(dim)?;
    model
        .channels
        .iter()
        .filter(|c| c.reactants.len() == 2)
        .filter_map(|c| {
            let k_r = match c.rate {
                RateLaw::Multiscale { k_r } | RateLaw::CollinsKimball { k_r } => k_r,
                _ => return None,
            };
            let (a, b) = (&model.species[c.reactants[0]], &model.species[c.reactants[1]]);
            let p = PhysicalParams::new(k_r, 0.0, a.gamma + b.gamma, a.radius + b.radius, dim).ok()?;
            Some(h_star(&p).h_star_inf)
        })
        .fold(None, |m: Option<f64>, h| Some(m.map_or(h, |m| m.max(h))))
}

/// Display form of a rate for reports.
pub fn rate_label(k: AssocRate<f64>) -> String {
    match k {
        AssocRate::Finite(v) => format!("{v:e}"),
        AssocRate::Infinite => "inf".into(),
    }
}
