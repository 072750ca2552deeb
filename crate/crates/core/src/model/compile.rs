use std::collections::{BTreeMap, HashSet};

use serde::Serialize;

use super::{
    LatticeSpec, ModelError, PairOverride, RateLaw, ReactionChannel, SpeciesSpec, NO_NEIGHBOR,
};
use crate::rates::{self, AssocRate, Dim, MeshBound, PhysicalParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompileOptions {
    /// Tolerance used for the mesh-bound warning.
    pub eps: f64,
}

impl Default for CompileOptions {
    fn default() -> Self {
        Self { eps: 0.05 }
    }
}

/// Reactant pattern of a compiled channel, fixing its propensity form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Reactants {
    Zero,
    One(usize),
    Two(usize, usize),
    /// `A + A`
    Homo(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum WarningKind {
    BelowHStarInf { h_star_inf: f64 },
    BelowTenSigma { sigma: f64 },
    AboveMeshBound { bound: f64, eps: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompileWarning {
    pub channel: String,
    pub h: f64,
    pub kind: WarningKind,
}

impl std::fmt::Display for CompileWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.kind {
            WarningKind::BelowHStarInf { h_star_inf } => write!(
                f,
                "channel {:?}: h = {:e} m is below h*_inf = {:e} m",
                self.channel, self.h, h_star_inf
            ),
            WarningKind::BelowTenSigma { sigma } => write!(
                f,
                "channel {:?}: h = {:e} m is below 10 sigma = {:e} m",
                self.channel,
                self.h,
                10.0 * sigma
            ),
            WarningKind::AboveMeshBound { bound, eps } => write!(
                f,
                "channel {:?}: h = {:e} m exceeds the eps = {} mesh bound {:e} m",
                self.channel, self.h, eps, bound
            ),
        }
    }
}

/// Resolved pair quantities of a bimolecular channel with intrinsic rates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelDiagnostics {
    pub channel: String,
    pub diffusion: f64,
    pub sigma: f64,
    /// `f64::INFINITY` for the diffusion-limited sentinel.
    pub k_r: f64,
    pub h_star_kr: f64,
    pub h_star_inf: f64,
    pub rho: Option<f64>,
    /// `k_d^meso` for `k_d = 1`, i.e. the ratio `k_d^meso / k_d`.
    pub kd_meso_ratio: Option<f64>,
    /// `f64::INFINITY` when unbounded.
    pub mesh_bound: f64,
    pub k_ck: Option<f64>,
    pub eps_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompiledChannel {
    pub name: String,
    pub reactants: Reactants,
    /// Net change per species, sorted by species index, zero entries dropped.
    pub deltas: Vec<(usize, i32)>,
    /// Per-voxel constant `c` in the propensity.
    pub constant: f64,
    pub diagnostics: Option<ChannelDiagnostics>,
}

/// Immutable, thread-shareable result of [`compile_model`].
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledModel {
    pub species: Vec<SpeciesSpec>,
    pub lattice: LatticeSpec,
    pub channels: Vec<CompiledChannel>,
    /// Per-direction jump rate `gamma / h²` of each species.
    pub jump_rates: Vec<f64>,
    /// See [`LatticeSpec::neighbor_table`].
    pub neighbors: Vec<u32>,
    pub warnings: Vec<CompileWarning>,
    pub options: CompileOptions,
}

impl CompiledModel {
    pub fn species_index(&self, name: &str) -> Option<usize> {
        self.species.iter().position(|s| s.name == name)
    }

    pub fn channel_index(&self, name: &str) -> Option<usize> {
        self.channels.iter().position(|c| c.name == name)
    }

    /// Neighbours of `voxel`, [`NO_NEIGHBOR`] where absent.
    pub fn neighbors_of(&self, voxel: usize) -> &[u32] {
        let d = self.lattice.directions();
        &self.neighbors[voxel * d..(voxel + 1) * d]
    }

    /// Number of directions a molecule in `voxel` can jump to.
    pub fn open_directions(&self, voxel: usize) -> usize {
        self.neighbors_of(voxel)
            .iter()
            .filter(|&&w| w != NO_NEIGHBOR)
            .count()
    }
}

/// Per-neighbour jump rate `gamma / h²` in 1/s.
pub fn diffusion_propensity(species: &SpeciesSpec, lattice: &LatticeSpec) -> f64 {
    let h = lattice.h();
    species.gamma / (h * h)
}

/// Mass-action propensity of `channel` given one voxel's copy numbers.
pub fn reaction_propensity(channel: &CompiledChannel, counts: &[u32]) -> f64 {
    let c = channel.constant;
    match channel.reactants {
        Reactants::Zero => c,
        Reactants::One(a) => c * counts[a] as f64,
        Reactants::Two(a, b) => c * counts[a] as f64 * counts[b] as f64,
        Reactants::Homo(a) => {
            let x = counts[a] as f64;
            if x < 2.0 {
                0.0
            } else {
                c * x * (x - 1.0) / 2.0
            }
        }
    }
}

/// Resolves every channel into a per-voxel propensity constant at the
/// lattice's voxel width.
pub fn compile_model(
    species: &[SpeciesSpec],
    channels: &[ReactionChannel],
    lattice: &LatticeSpec,
    options: CompileOptions,
) -> Result<CompiledModel, ModelError> {
    lattice.validate()?;
    validate_species(species)?;
    let mut seen = HashSet::new();
    for ch in channels {
        if !seen.insert(ch.name.as_str()) {
            return Err(invalid(ch, "duplicate channel name"));
        }
    }
    if !(options.eps >= 0.0 && options.eps < 1.0) {
        return Err(ModelError::InvalidChannel {
            channel: String::new(),
            reason: format!("warning tolerance eps = {} must lie in [0, 1)", options.eps),
        });
    }

    let h = lattice.h();
    let mut compiled = Vec::with_capacity(channels.len());
    let mut warnings = Vec::new();
    for ch in channels {
        let reactants = reactant_pattern(ch, species.len())?;
        let deltas = net_deltas(ch, species.len())?;
        let (constant, diagnostics) = match ch.rate {
            RateLaw::Mesoscopic { rate } => {
                if !(rate >= 0.0) || !rate.is_finite() {
                    return Err(invalid(ch, "mesoscopic rate must be non-negative and finite"));
                }
                (rate, None)
            }
            RateLaw::Multiscale { k_r } => {
                let p = pair_params(ch, species, lattice, k_r, 0.0)?;
                let rho = rates::rho_meso(h, &p).map_err(|e| rate_error(ch, e))?;
                let diag = diagnostics(ch, &p, h, options.eps)?;
                warnings.extend(width_warnings(ch, &diag, h, options.eps));
                (rho.value, Some(diag))
            }
            RateLaw::CollinsKimball { k_r } => {
                let p = pair_params(ch, species, lattice, k_r, 0.0)?;
                if p.dim != Dim::Three {
                    return Err(ModelError::Unsupported {
                        channel: ch.name.clone(),
                        reason: "Collins-Kimball rates are only defined in 3D".into(),
                    });
                }
                let k_ck = rates::collins_kimball(&p).map_err(|e| rate_error(ch, e))?;
                let diag = diagnostics(ch, &p, h, options.eps)?;
                if h < 10.0 * p.sigma {
                    warnings.push(CompileWarning {
                        channel: ch.name.clone(),
                        h,
                        kind: WarningKind::BelowTenSigma { sigma: p.sigma },
                    });
                }
                (k_ck / h.powi(3), Some(diag))
            }
            RateLaw::Dissociation { k_d, association } => {
                if !(k_d >= 0.0) || !k_d.is_finite() {
                    return Err(invalid(ch, "k_d must be non-negative and finite"));
                }
                let assoc = channels
                    .get(association)
                    .ok_or_else(|| invalid(ch, "linked association channel does not exist"))?;
                check_link(ch, assoc)?;
                match assoc.rate {
                    RateLaw::Multiscale { k_r } => {
                        let p = pair_params(assoc, species, lattice, k_r, k_d)?;
                        let kd = rates::kd_meso(h, &p).map_err(|e| rate_error(ch, e))?;
                        (kd.value, None)
                    }
                    _ => (k_d, None),
                }
            }
        };
        compiled.push(CompiledChannel {
            name: ch.name.clone(),
            reactants,
            deltas,
            constant,
            diagnostics,
        });
    }
    for w in &warnings {
        log::warn!("{w}");
    }

    Ok(CompiledModel {
        species: species.to_vec(),
        lattice: *lattice,
        channels: compiled,
        jump_rates: species
            .iter()
            .map(|s| diffusion_propensity(s, lattice))
            .collect(),
        neighbors: lattice.neighbor_table(),
        warnings,
        options,
    })
}

fn invalid(ch: &ReactionChannel, reason: &str) -> ModelError {
    ModelError::InvalidChannel {
        channel: ch.name.clone(),
        reason: reason.into(),
    }
}

fn rate_error(ch: &ReactionChannel, e: rates::RateError) -> ModelError {
    match e {
        rates::RateError::NoValidRate { h, h_star_kr } => ModelError::NoValidRate {
            channel: ch.name.clone(),
            h,
            h_star_kr,
        },
        other => ModelError::Rate {
            channel: ch.name.clone(),
            source: other,
        },
    }
}

fn validate_species(species: &[SpeciesSpec]) -> Result<(), ModelError> {
    let mut names = HashSet::new();
    for s in species {
        let bad = |reason: &str| ModelError::InvalidSpecies {
            name: s.name.clone(),
            reason: reason.into(),
        };
        if !names.insert(s.name.as_str()) {
            return Err(bad("duplicate name"));
        }
        if !(s.gamma >= 0.0) || !s.gamma.is_finite() {
            return Err(bad("gamma must be non-negative and finite"));
        }
        if !(s.radius >= 0.0) || !s.radius.is_finite() {
            return Err(bad("radius must be non-negative and finite"));
        }
    }
    Ok(())
}

fn reactant_pattern(ch: &ReactionChannel, n_species: usize) -> Result<Reactants, ModelError> {
    if ch
        .reactants
        .iter()
        .chain(&ch.products)
        .any(|&s| s >= n_species)
    {
        return Err(invalid(ch, "unknown species index"));
    }
    let pattern = match ch.reactants.as_slice() {
        [] => Reactants::Zero,
        [a] => Reactants::One(*a),
        [a, b] if a == b => Reactants::Homo(*a),
        [a, b] => Reactants::Two(*a, *b),
        _ => return Err(invalid(ch, "at most two reactants are supported")),
    };
    let bimolecular = matches!(pattern, Reactants::Two(..) | Reactants::Homo(_));
    match ch.rate {
        RateLaw::Multiscale { .. } | RateLaw::CollinsKimball { .. } if !bimolecular => {
            Err(invalid(ch, "intrinsic association rates need two reactants"))
        }
        RateLaw::Dissociation { .. } if !matches!(pattern, Reactants::One(_)) => {
            Err(invalid(ch, "a dissociation has exactly one reactant"))
        }
        _ => Ok(pattern),
    }
}

fn net_deltas(ch: &ReactionChannel, n_species: usize) -> Result<Vec<(usize, i32)>, ModelError> {
    let mut net: BTreeMap<usize, i32> = BTreeMap::new();
    for &s in &ch.reactants {
        *net.entry(s).or_default() -= 1;
    }
    for &s in &ch.products {
        if s >= n_species {
            return Err(invalid(ch, "unknown species index"));
        }
        *net.entry(s).or_default() += 1;
    }
    Ok(net.into_iter().filter(|&(_, d)| d != 0).collect())
}

fn sorted(v: &[usize]) -> Vec<usize> {
    let mut v = v.to_vec();
    v.sort_unstable();
    v
}

fn check_link(ch: &ReactionChannel, assoc: &ReactionChannel) -> Result<(), ModelError> {
    if assoc.reactants.len() != 2 {
        return Err(invalid(ch, "linked channel is not bimolecular"));
    }
    if sorted(&ch.products) != sorted(&assoc.reactants)
        || sorted(&ch.reactants) != sorted(&assoc.products)
    {
        return Err(invalid(ch, "dissociation is not the reverse of its linked association"));
    }
    Ok(())
}

fn pair_params(
    ch: &ReactionChannel,
    species: &[SpeciesSpec],
    lattice: &LatticeSpec,
    k_r: AssocRate<f64>,
    k_d: f64,
) -> Result<PhysicalParams<f64>, ModelError> {
    let dim = Dim::from_usize(lattice.dim).ok_or_else(|| ModelError::Unsupported {
        channel: ch.name.clone(),
        reason: format!("intrinsic rates need a 2D or 3D lattice, got {}D", lattice.dim),
    })?;
    let PairOverride { diffusion, sigma } = ch.pair.unwrap_or_else(|| {
        let (a, b) = (&species[ch.reactants[0]], &species[ch.reactants[1]]);
        PairOverride {
            diffusion: a.gamma + b.gamma,
            sigma: a.radius + b.radius,
        }
    });
    PhysicalParams::new(k_r, k_d, diffusion, sigma, dim).map_err(|e| rate_error(ch, e))
}

fn diagnostics(
    ch: &ReactionChannel,
    p: &PhysicalParams<f64>,
    h: f64,
    eps: f64,
) -> Result<ChannelDiagnostics, ModelError> {
    let crit = rates::h_star(p);
    let bound = rates::mesh_bound_f(p, eps).map_err(|e| rate_error(ch, e))?;
    let three = p.dim == Dim::Three;
    Ok(ChannelDiagnostics {
        channel: ch.name.clone(),
        diffusion: p.diffusion,
        sigma: p.sigma,
        k_r: p.k_r.to_f64(),
        h_star_kr: crit.h_star_kr,
        h_star_inf: crit.h_star_inf,
        rho: rates::rho_meso(h, p).ok().map(|r| r.value),
        kd_meso_ratio: rates::kd_meso(h, &PhysicalParams { k_d: 1.0, ..*p })
            .ok()
            .map(|r| r.value),
        mesh_bound: match bound.value {
            MeshBound::Bounded(f) => f,
            MeshBound::Unbounded => f64::INFINITY,
        },
        k_ck: three.then(|| rates::collins_kimball(p).ok()).flatten(),
        eps_max: three.then(|| rates::eps_max(p).ok()).flatten(),
    })
}

fn width_warnings(
    ch: &ReactionChannel,
    diag: &ChannelDiagnostics,
    h: f64,
    eps: f64,
) -> Vec<CompileWarning> {
    let mut out = Vec::new();
    let mut push = |kind| {
        out.push(CompileWarning {
            channel: ch.name.clone(),
            h,
            kind,
        })
    };
    if h < diag.h_star_inf {
        push(WarningKind::BelowHStarInf {
            h_star_inf: diag.h_star_inf,
        });
    }
    if h < 10.0 * diag.sigma {
        push(WarningKind::BelowTenSigma { sigma: diag.sigma });
    }
    if h > diag.mesh_bound {
        push(WarningKind::AboveMeshBound {
            bound: diag.mesh_bound,
            eps,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Boundary, SystemState};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const SIGMA: f64 = 2e-9;
    const D: f64 = 2e-12;

    fn abc() -> Vec<SpeciesSpec> {
        vec![
            SpeciesSpec::new("A", D / 2.0, SIGMA / 2.0),
            SpeciesSpec::new("B", D / 2.0, SIGMA / 2.0),
            SpeciesSpec::new("C", 0.0, SIGMA),
        ]
    }

    fn h_star_inf() -> f64 {
        let p = PhysicalParams::new(AssocRate::Infinite, 0.0, D, SIGMA, Dim::Three).unwrap();
        rates::h_star(&p).h_star_inf
    }

    fn lattice(n: usize, h: f64) -> LatticeSpec {
        LatticeSpec::new(3, n, n as f64 * h, Boundary::Periodic).unwrap()
    }

    fn reversible(k_r: f64, k_d: f64) -> Vec<ReactionChannel> {
        vec![
            ReactionChannel::new(
                "bind",
                vec![0, 1],
                vec![2],
                RateLaw::Multiscale {
                    k_r: AssocRate::Finite(k_r),
                },
            ),
            ReactionChannel::new(
                "unbind",
                vec![2],
                vec![0, 1],
                RateLaw::Dissociation { k_d, association: 0 },
            ),
        ]
    }

    #[test]
    fn multiscale_at_critical_width_is_intrinsic_over_volume() {
        let h = h_star_inf();
        let m = compile_model(&abc(), &reversible(1e-18, 5.0), &lattice(5, h), Default::default())
            .unwrap();
        assert_relative_eq!(m.channels[0].constant, 1e-18 / h.powi(3), max_relative = 1e-12);
        assert_relative_eq!(m.channels[1].constant, 5.0, max_relative = 1e-12);
        assert_eq!(m.channels[0].reactants, Reactants::Two(0, 1));
        assert_eq!(m.channels[0].deltas, vec![(0, -1), (1, -1), (2, 1)]);
        let diag = m.channels[0].diagnostics.as_ref().unwrap();
        assert_relative_eq!(diag.h_star_inf, h);
        assert!(m
            .warnings
            .iter()
            .any(|w| matches!(w.kind, WarningKind::BelowTenSigma { .. })));
    }

    #[test]
    fn collins_kimball_constant() {
        let ch = vec![ReactionChannel::new(
            "bind",
            vec![0, 1],
            vec![2],
            RateLaw::CollinsKimball {
                k_r: AssocRate::Finite(1e-18),
            },
        )];
        let m = compile_model(&abc(), &ch, &lattice(4, 1e-7), Default::default()).unwrap();
        assert_relative_eq!(m.channels[0].constant, 47.859, max_relative = 1e-4);
    }

    #[test]
    fn collins_kimball_rejected_in_2d() {
        let ch = vec![ReactionChannel::new(
            "bind",
            vec![0, 1],
            vec![2],
            RateLaw::CollinsKimball {
                k_r: AssocRate::Finite(1e-18),
            },
        )];
        let l = LatticeSpec::new(2, 4, 4e-7, Boundary::Periodic).unwrap();
        let err = compile_model(&abc(), &ch, &l, Default::default()).unwrap_err();
        assert!(matches!(err, ModelError::Unsupported { .. }));
    }

    #[test]
    fn too_fine_mesh_names_channel_and_critical_size() {
        let err = compile_model(&abc(), &reversible(1e-18, 1.0), &lattice(5, 3e-9), Default::default())
            .unwrap_err();
        match &err {
            ModelError::NoValidRate {
                channel, h_star_kr, ..
            } => {
                assert_eq!(channel, "bind");
                assert!(*h_star_kr > 3e-9);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(err.to_string().contains("bind"));
    }

    #[test]
    fn coarse_mesh_warns_about_bound() {
        let m = compile_model(&abc(), &reversible(1e-18, 1.0), &lattice(5, 1e-7), Default::default())
            .unwrap();
        assert!(m
            .warnings
            .iter()
            .any(|w| matches!(w.kind, WarningKind::AboveMeshBound { .. })));
        assert!(m.channels[1].constant < 1.0);
    }

    #[test]
    fn dissociation_link_must_reverse_association() {
        let mut ch = reversible(1e-18, 1.0);
        ch[1].products = vec![0, 0];
        let err = compile_model(&abc(), &ch, &lattice(5, 1e-8), Default::default()).unwrap_err();
        assert!(matches!(err, ModelError::InvalidChannel { .. }));
    }

    #[test]
    fn dissociation_linked_to_ck_uses_intrinsic_rate() {
        let mut ch = reversible(1e-18, 3.0);
        ch[0].rate = RateLaw::CollinsKimball {
            k_r: AssocRate::Finite(1e-18),
        };
        let m = compile_model(&abc(), &ch, &lattice(5, 1e-7), Default::default()).unwrap();
        assert_eq!(m.channels[1].constant, 3.0);
    }

    #[test]
    fn pair_override_replaces_species_sums() {
        let mut ch = reversible(1e-18, 1.0);
        ch[0] = ch[0].clone().with_pair(PairOverride {
            diffusion: 1e-12,
            sigma: 4e-9,
        });
        let m = compile_model(&abc(), &ch, &lattice(5, 5e-8), Default::default()).unwrap();
        let diag = m.channels[0].diagnostics.as_ref().unwrap();
        assert_eq!(diag.diffusion, 1e-12);
        assert_eq!(diag.sigma, 4e-9);
    }

    #[test]
    fn diffusion_propensity_examples() {
        let l = lattice(3, 6.4e-9);
        let s = SpeciesSpec::new("A", 1e-12, 0.0);
        assert_relative_eq!(diffusion_propensity(&s, &l), 2.4414e4, max_relative = 1e-4);
        let still = SpeciesSpec::new("S", 0.0, 0.0);
        assert_eq!(diffusion_propensity(&still, &l), 0.0);
    }

    #[test]
    fn propensity_examples() {
        let ch = |reactants, constant| CompiledChannel {
            name: "c".into(),
            reactants,
            deltas: vec![],
            constant,
            diagnostics: None,
        };
        assert_relative_eq!(
            reaction_propensity(&ch(Reactants::Two(0, 1), 3.9026e6), &[1, 1]),
            3.9026e6
        );
        assert_eq!(reaction_propensity(&ch(Reactants::Two(0, 1), 3.9026e6), &[0, 1]), 0.0);
        assert_eq!(reaction_propensity(&ch(Reactants::Homo(0), 2.0), &[3]), 6.0);
        assert_eq!(reaction_propensity(&ch(Reactants::Homo(0), 2.0), &[1]), 0.0);
        assert_eq!(reaction_propensity(&ch(Reactants::One(0), 2.0), &[4]), 8.0);
    }

    #[test]
    fn duplicate_names_rejected() {
        let mut sp = abc();
        sp[1].name = "A".into();
        assert!(matches!(
            compile_model(&sp, &[], &lattice(2, 1e-8), Default::default()),
            Err(ModelError::InvalidSpecies { .. })
        ));
    }

    #[test]
    fn large_voxel_gap_in_the_diffusion_limit() {
        // h³ rho = 4 pi sigma D / (1 - 4 pi C3 sigma / (6 h)) for k_r -> inf.
        let ch = |rate| vec![ReactionChannel::new("bind", vec![0, 1], vec![2], rate)];
        let l = lattice(2, 100.0 * SIGMA);
        let k_r = AssocRate::Infinite;
        let hhp = compile_model(&abc(), &ch(RateLaw::Multiscale { k_r }), &l, Default::default()).unwrap();
        let ck = compile_model(&abc(), &ch(RateLaw::CollinsKimball { k_r }), &l, Default::default()).unwrap();
        let gap = hhp.channels[0].constant / ck.channels[0].constant - 1.0;
        let expected = 1.0 / (1.0 - 4.0 * std::f64::consts::PI * 1.5164 / 600.0) - 1.0;
        assert_relative_eq!(gap, expected, max_relative = 1e-9);
        assert!(gap > 0.03);
    }

    proptest! {
        #[test]
        fn compile_is_deterministic(k_r in 1e-22f64..1e-16, h in 7e-9f64..1e-7) {
            let a = compile_model(&abc(), &reversible(k_r, 2.0), &lattice(3, h), Default::default()).unwrap();
            let b = compile_model(&abc(), &reversible(k_r, 2.0), &lattice(3, h), Default::default()).unwrap();
            prop_assert_eq!(a.channels[0].constant.to_bits(), b.channels[0].constant.to_bits());
            prop_assert_eq!(a.channels[1].constant.to_bits(), b.channels[1].constant.to_bits());
        }

        #[test]
        fn multiscale_and_ck_agree_for_large_voxels(
            log_q in -4.0f64..-0.6,
            log_d in -13.0f64..-10.0,
            log_sigma in -10.0f64..-8.0,
        ) {
            // q = k_r / (4 pi sigma D); the 1% agreement at 100 sigma holds
            // only while the pair is not strongly diffusion-limited.
            let sigma = 10f64.powf(log_sigma);
            let d = 10f64.powf(log_d);
            let log_kr = log_q + (4.0 * std::f64::consts::PI * sigma * d).log10();
            let sp = vec![
                SpeciesSpec::new("A", d / 2.0, sigma / 2.0),
                SpeciesSpec::new("B", d / 2.0, sigma / 2.0),
                SpeciesSpec::new("C", 0.0, 0.0),
            ];
            let k_r = AssocRate::Finite(10f64.powf(log_kr));
            let mk = |rate| vec![ReactionChannel::new("bind", vec![0, 1], vec![2], rate)];
            let l = lattice(2, 100.0 * sigma);
            let hhp = compile_model(&sp, &mk(RateLaw::Multiscale { k_r }), &l, Default::default()).unwrap();
            let ck = compile_model(&sp, &mk(RateLaw::CollinsKimball { k_r }), &l, Default::default()).unwrap();
            let (a, b) = (hhp.channels[0].constant, ck.channels[0].constant);
            prop_assert!((a - b).abs() / b < 0.01);
        }

        #[test]
        fn propensities_nonnegative_and_total_conserved(
            events in proptest::collection::vec((0usize..27, 0usize..2, 0usize..6), 1..200),
        ) {
            let m = compile_model(&abc(), &reversible(1e-18, 2.0), &lattice(3, 1e-8), Default::default()).unwrap();
            let mut st = SystemState::empty(27, 3);
            st.add(0, 0, 3);
            st.add(13, 1, 2);
            st.add(26, 2, 1);
            let conserved = |st: &SystemState| st.totals()[0] + st.totals()[2];
            let start = conserved(&st);
            for (v, kind, dir) in events {
                let counts = st.voxel(v).to_vec();
                for ch in &m.channels {
                    prop_assert!(reaction_propensity(ch, &counts) >= 0.0);
                }
                if kind == 0 {
                    // Diffusion of any present species.
                    if let Some(s) = (0..3).find(|&s| counts[s] > 0) {
                        let to = m.neighbors_of(v)[dir] as usize;
                        st.apply(&crate::model::StoichVector::diffusion(s, v, to));
                    }
                } else {
                    let fireable: Vec<_> = m.channels.iter()
                        .filter(|ch| reaction_propensity(ch, &counts) > 0.0)
                        .collect();
                    if let Some(ch) = fireable.first() {
                        st.apply(&crate::model::StoichVector::reaction(v, &ch.deltas));
                    }
                }
                prop_assert_eq!(conserved(&st), start);
                let sum: u64 = st.counts().iter().map(|&c| c as u64).sum();
                prop_assert_eq!(sum, st.totals().iter().sum::<u64>());
            }
        }
    }
}
