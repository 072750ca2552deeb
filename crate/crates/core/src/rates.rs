//! Closed-form mesoscopic rate calculators.
//!
//! Every function here is a pure function of [`PhysicalParams`] and a voxel
//! width. Quantities are strict SI: lengths in m, diffusion in m²/s,
//! association rates in m^d/s, dissociation rates in 1/s.
//!
//! The mesoscopic association constant for a Cartesian voxel of width `h` is
//!
//! ```text
//! rho(h) = k_r / h^d * (1 + (k_r / D) * G(h, sigma))^-1
//! ```
//!
//! with the geometric function
//!
//! ```text
//! G(h, sigma) = ln(h / (sqrt(pi) sigma)) / (2 pi) - (3 / (2 pi) + C2) / 4   (2D)
//! G(h, sigma) = 1 / (4 pi sigma) - C3 / (6 h)                               (3D)
//! ```
//!
//! `rho` is a valid (positive) rate only above the critical width
//! `h*_{k_r}`; the root of `G` is the rate-independent width `h*_inf`, the
//! smallest mesh on which dissociation can also be matched.

use serde::Serialize;
use thiserror::Error;

use crate::scalar::Real;

/// Lattice constant of the 2D discrete Green's function.
pub const C2: f64 = 0.1951;
/// Lattice constant of the 3D discrete Green's function.
pub const C3: f64 = 1.5164;

/// Spatial dimension supported by the rate formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Dim {
    Two,
    Three,
}

impl Dim {
    pub fn get(self) -> usize {
        match self {
            Dim::Two => 2,
            Dim::Three => 3,
        }
    }

    pub fn from_usize(d: usize) -> Option<Self> {
        match d {
            2 => Some(Dim::Two),
            3 => Some(Dim::Three),
            _ => None,
        }
    }

    fn powi<T: Real>(self, x: T) -> T {
        x.powi(self.get() as i32)
    }
}

/// Intrinsic association rate; `Infinite` is the perfectly absorbing limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AssocRate<T> {
    Finite(T),
    Infinite,
}

impl<T: Real> AssocRate<T> {
    pub fn finite(self) -> Option<T> {
        match self {
            AssocRate::Finite(k) => Some(k),
            AssocRate::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, AssocRate::Infinite)
    }

    pub fn is_zero(self) -> bool {
        matches!(self, AssocRate::Finite(k) if k == T::zero())
    }

    /// `D / k_r`, which is zero in the absorbing limit and infinite for `k_r = 0`.
    fn diffusion_over_rate(self, diffusion: T) -> T {
        match self {
            AssocRate::Finite(k) if k == T::zero() => T::infinity(),
            AssocRate::Finite(k) => diffusion / k,
            AssocRate::Infinite => T::zero(),
        }
    }

    /// Lossy conversion for reporting.
    pub fn to_f64(self) -> f64 {
        match self {
            AssocRate::Finite(k) => k.to_f64_lossy(),
            AssocRate::Infinite => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RateError {
    #[error("{op} is not defined in {dim}D")]
    UnsupportedDimension { op: &'static str, dim: usize },
    #[error("no valid mesoscopic rate at h = {h:e} m; the critical width is h*_kr = {h_star_kr:e} m")]
    NoValidRate { h: f64, h_star_kr: f64 },
    #[error("k_d^meso / k_d is undefined for k_r = 0 with k_d > 0")]
    UndefinedRatio,
    #[error("tolerance eps = {0} must lie in [0, 1)")]
    InvalidTolerance(f64),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

/// Microscopic parameters of one reacting pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams<T> {
    pub k_r: AssocRate<T>,
    pub k_d: T,
    /// Relative diffusion constant: the sum of both molecules' constants.
    pub diffusion: T,
    /// Reaction radius: the sum of both molecular radii.
    pub sigma: T,
    pub dim: Dim,
}

impl<T: Real> PhysicalParams<T> {
    pub fn new(
        k_r: AssocRate<T>,
        k_d: T,
        diffusion: T,
        sigma: T,
        dim: Dim,
    ) -> Result<Self, RateError> {
        let p = Self {
            k_r,
            k_d,
            diffusion,
            sigma,
            dim,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), RateError> {
        let bad = |what: &str| Err(RateError::InvalidParams(what.to_string()));
        if !(self.diffusion > T::zero()) || !self.diffusion.is_finite() {
            return bad("D must be positive and finite");
        }
        if !(self.sigma > T::zero()) || !self.sigma.is_finite() {
            return bad("sigma must be positive and finite");
        }
        if let AssocRate::Finite(k) = self.k_r {
            if !(k >= T::zero()) || !k.is_finite() {
                return bad("k_r must be non-negative and finite (use the infinite sentinel)");
            }
        }
        if !(self.k_d >= T::zero()) || !self.k_d.is_finite() {
            return bad("k_d must be non-negative and finite");
        }
        Ok(())
    }

    pub fn with_rate(self, k_r: AssocRate<T>) -> Self {
        Self { k_r, ..self }
    }

    /// Diffusion-limited rate constant `4 pi sigma D`.
    pub fn smoluchowski_rate(&self) -> T {
        T::lit(4.0) * T::PI() * self.sigma * self.diffusion
    }
}

/// Modelling advisories attached to a computed value.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Flags {
    /// The length scale (voxel width or domain side) is below `10 sigma`.
    pub below_ten_sigma: bool,
    /// The voxel width is below `h*_inf`; dissociation cannot be matched.
    pub below_h_star_inf: bool,
    /// The requested tolerance is at or above `eps_max` (3D).
    pub eps_at_or_above_max: bool,
}

impl Flags {
    pub fn any(&self) -> bool {
        self.below_ten_sigma || self.below_h_star_inf || self.eps_at_or_above_max
    }
}

/// A computed value together with its advisories.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rated<T> {
    pub value: T,
    pub flags: Flags,
}

/// Critical voxel widths `(h*_{k_r}, h*_inf)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalSizes<T> {
    pub h_star_kr: T,
    pub h_star_inf: T,
}

/// Upper admissible voxel width for a rebinding-error tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum MeshBound<T> {
    Bounded(T),
    /// Every width satisfies the tolerance.
    Unbounded,
}

impl<T: Real> MeshBound<T> {
    pub fn value(self) -> Option<T> {
        match self {
            MeshBound::Bounded(h) => Some(h),
            MeshBound::Unbounded => None,
        }
    }

    pub fn to_f64(self) -> f64 {
        match self {
            MeshBound::Bounded(h) => h.to_f64_lossy(),
            MeshBound::Unbounded => f64::INFINITY,
        }
    }
}

/// Voxel width, domain side and voxel count of a Cartesian mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshContext<T> {
    pub h: T,
    pub length: T,
    /// Total voxel count `(L / h)^d`.
    pub voxels: T,
    pub dim: Dim,
}

impl<T: Real> MeshContext<T> {
    pub fn new(h: T, length: T, dim: Dim) -> Result<Self, RateError> {
        if !(h > T::zero()) || !(length > T::zero()) {
            return Err(RateError::InvalidParams("h and L must be positive".into()));
        }
        Ok(Self {
            h,
            length,
            voxels: dim.powi(length / h),
            dim,
        })
    }

    /// Mesh of `n` voxels per side on a domain of side `length`.
    pub fn from_lattice(n: usize, length: T, dim: Dim) -> Result<Self, RateError> {
        if n == 0 {
            return Err(RateError::InvalidParams("n must be positive".into()));
        }
        let nt = T::from_usize(n).expect("voxel count fits scalar");
        Ok(Self {
            h: length / nt,
            length,
            voxels: dim.powi(nt),
            dim,
        })
    }
}

/// Dimensionless quantities of the 2D disk binding-time formula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disk2DQuantities<T> {
    /// `sqrt(pi) sigma / L`
    pub lambda: T,
    /// `k_r / (2 pi D)`; infinite in the absorbing limit.
    pub alpha: T,
    /// `F(lambda)`
    pub f_lambda: T,
}

impl<T: Real> Disk2DQuantities<T> {
    pub fn new(p: &PhysicalParams<T>, length: T) -> Result<Self, RateError> {
        let lambda = T::PI().sqrt() * p.sigma / length;
        if !(lambda > T::zero() && lambda < T::one()) {
            return Err(RateError::InvalidParams(format!(
                "disk quantities need 0 < sqrt(pi) sigma / L < 1, got {lambda}"
            )));
        }
        let alpha = match p.k_r {
            AssocRate::Finite(k) => k / (T::lit(2.0) * T::PI() * p.diffusion),
            AssocRate::Infinite => T::infinity(),
        };
        Ok(Self {
            lambda,
            alpha,
            f_lambda: disk_f(lambda),
        })
    }
}

/// `F(lambda) = ln(1/lambda) / (1 - lambda²)² - (3 - lambda²) / (4 (1 - lambda²))`
pub fn disk_f<T: Real>(lambda: T) -> T {
    let one = T::one();
    let l2 = lambda * lambda;
    let q = one - l2;
    (one / lambda).ln() / (q * q) - (T::lit(3.0) - l2) / (T::lit(4.0) * q)
}

fn flags_for_width<T: Real>(h: T, p: &PhysicalParams<T>) -> Flags {
    Flags {
        below_ten_sigma: h < T::lit(10.0) * p.sigma,
        below_h_star_inf: h < h_star(p).h_star_inf,
        eps_at_or_above_max: false,
    }
}

fn require_3d<T>(p: &PhysicalParams<T>, op: &'static str) -> Result<(), RateError> {
    match p.dim {
        Dim::Three => Ok(()),
        Dim::Two => Err(RateError::UnsupportedDimension { op, dim: 2 }),
    }
}

/// Collins–Kimball effective rate `4 pi sigma D k_r / (4 pi sigma D + k_r)` (3D only).
pub fn collins_kimball<T: Real>(p: &PhysicalParams<T>) -> Result<T, RateError> {
    require_3d(p, "collins_kimball")?;
    let k_diff = p.smoluchowski_rate();
    Ok(match p.k_r {
        AssocRate::Finite(k) => k_diff * k / (k_diff + k),
        AssocRate::Infinite => k_diff,
    })
}

/// Geometric function `G^(d)(h, sigma)`.
pub fn g_geometric<T: Real>(h: T, p: &PhysicalParams<T>) -> T {
    let pi = T::PI();
    match p.dim {
        Dim::Two => {
            let two_pi = T::lit(2.0) * pi;
            (h / (pi.sqrt() * p.sigma)).ln() / two_pi
                - (T::lit(3.0) / two_pi + T::lit(C2)) / T::lit(4.0)
        }
        Dim::Three => {
            T::one() / (T::lit(4.0) * pi * p.sigma) - T::lit(C3) / (T::lit(6.0) * h)
        }
    }
}

/// `1 + (k_r / D) G`, the factor dividing `k_r / h^d`; `None` in the absorbing limit.
fn rate_denominator<T: Real>(h: T, p: &PhysicalParams<T>) -> Option<T> {
    p.k_r
        .finite()
        .map(|k| T::one() + k / p.diffusion * g_geometric(h, p))
}

/// Critical widths `h*_{k_r}` and `h*_inf`.
pub fn h_star<T: Real>(p: &PhysicalParams<T>) -> CriticalSizes<T> {
    let pi = T::PI();
    let ratio = p.k_r.diffusion_over_rate(p.diffusion);
    match p.dim {
        Dim::Two => {
            let h_inf = pi.sqrt()
                * ((T::lit(3.0) + T::lit(2.0) * T::lit(C2) * pi) / T::lit(4.0)).exp()
                * p.sigma;
            CriticalSizes {
                h_star_kr: h_inf * (-(T::lit(2.0) * pi * ratio)).exp(),
                h_star_inf: h_inf,
            }
        }
        Dim::Three => {
            let c = T::lit(C3) / T::lit(6.0);
            let inv_sphere = T::one() / (T::lit(4.0) * pi * p.sigma);
            CriticalSizes {
                h_star_kr: c / (ratio + inv_sphere),
                h_star_inf: c / inv_sphere,
            }
        }
    }
}

/// Mesoscopic association constant `rho^(d)(k_r, h)` in 1/s.
///
/// Fails with [`RateError::NoValidRate`] for `h <= h*_{k_r}`.
pub fn rho_meso<T: Real>(h: T, p: &PhysicalParams<T>) -> Result<Rated<T>, RateError> {
    let no_rate = || RateError::NoValidRate {
        h: h.to_f64_lossy(),
        h_star_kr: h_star(p).h_star_kr.to_f64_lossy(),
    };
    let volume = p.dim.powi(h);
    let value = match p.k_r {
        AssocRate::Finite(k) if k == T::zero() => T::zero(),
        AssocRate::Finite(k) => {
            let denom = rate_denominator(h, p).expect("finite rate");
            if !(denom > T::zero()) {
                return Err(no_rate());
            }
            k / (volume * denom)
        }
        AssocRate::Infinite => {
            let g = g_geometric(h, p);
            if !(g > T::zero()) {
                return Err(no_rate());
            }
            p.diffusion / (volume * g)
        }
    };
    Ok(Rated {
        value,
        flags: flags_for_width(h, p),
    })
}

/// Mesoscopic dissociation rate `h^d k_d rho / k_r` in 1/s (detailed balance).
pub fn kd_meso<T: Real>(h: T, p: &PhysicalParams<T>) -> Result<Rated<T>, RateError> {
    let flags = flags_for_width(h, p);
    match p.k_r {
        AssocRate::Finite(k) if k == T::zero() => {
            if p.k_d > T::zero() {
                Err(RateError::UndefinedRatio)
            } else {
                Ok(Rated {
                    value: T::zero(),
                    flags,
                })
            }
        }
        AssocRate::Finite(k) => {
            let rho = rho_meso(h, p)?.value;
            Ok(Rated {
                value: p.dim.powi(h) * p.k_d * rho / k,
                flags,
            })
        }
        AssocRate::Infinite => {
            // k_d (1 + (k_r/D) G)^-1 vanishes as k_r grows, wherever rho exists.
            rho_meso(h, p)?;
            Ok(Rated {
                value: T::zero(),
                flags,
            })
        }
    }
}

/// Largest width `F(k_r, sigma, D, eps)` keeping `|k_r - h^d rho| < eps k_r`
/// for `h >= h*_inf`.
pub fn mesh_bound_f<T: Real>(
    p: &PhysicalParams<T>,
    eps: T,
) -> Result<Rated<MeshBound<T>>, RateError> {
    if !(eps >= T::zero() && eps < T::one()) {
        return Err(RateError::InvalidTolerance(eps.to_f64_lossy()));
    }
    let crit = h_star(p);
    let mut flags = Flags::default();
    if p.dim == Dim::Three {
        flags.eps_at_or_above_max = eps >= eps_max(p)?;
    }
    if eps == T::zero() {
        return Ok(Rated {
            value: MeshBound::Bounded(crit.h_star_inf),
            flags,
        });
    }
    if p.k_r.is_zero() {
        return Ok(Rated {
            value: MeshBound::Unbounded,
            flags,
        });
    }
    // 1 - (1 - eps)^-1 = -eps / (1 - eps)
    let shrink = -eps / (T::one() - eps);
    let ratio = p.k_r.diffusion_over_rate(p.diffusion);
    let pi = T::PI();
    let value = match p.dim {
        Dim::Three => {
            let bracket = T::one() / (T::lit(4.0) * pi * p.sigma) + shrink * ratio;
            if bracket > T::zero() {
                MeshBound::Bounded(T::lit(C3) / T::lit(6.0) / bracket)
            } else {
                MeshBound::Unbounded
            }
        }
        Dim::Two => {
            let exponent = -(T::lit(2.0) * pi * ratio * shrink)
                + (T::lit(3.0) + T::lit(2.0) * pi * T::lit(C2)) / T::lit(4.0);
            let f = pi.sqrt() * exponent.exp() * p.sigma;
            if f.is_finite() {
                MeshBound::Bounded(f)
            } else {
                MeshBound::Unbounded
            }
        }
    };
    Ok(Rated { value, flags })
}

/// Maximal relative rebinding-time error `k_CK / (4 pi sigma D)` (3D only).
pub fn eps_max<T: Real>(p: &PhysicalParams<T>) -> Result<T, RateError> {
    require_3d(p, "eps_max")?;
    Ok(collins_kimball(p)? / p.smoluchowski_rate())
}

/// Mean binding time of a uniformly placed pair in a box of side `length`.
///
/// 3D: `L³ / k_CK`. 2D: `(1 + alpha F(lambda)) L² / k_r`, whose absorbing
/// limit is `F(lambda) L² / (2 pi D)`.
pub fn tau_micro_mean<T: Real>(p: &PhysicalParams<T>, length: T) -> Result<Rated<T>, RateError> {
    let flags = Flags {
        below_ten_sigma: length < T::lit(10.0) * p.sigma,
        ..Flags::default()
    };
    if p.k_r.is_zero() {
        return Ok(Rated {
            value: T::infinity(),
            flags,
        });
    }
    let value = match p.dim {
        Dim::Three => length.powi(3) / collins_kimball(p)?,
        Dim::Two => {
            let q = Disk2DQuantities::new(p, length)?;
            let area = length * length;
            match p.k_r {
                AssocRate::Finite(k) => (T::one() + q.alpha * q.f_lambda) * area / k,
                AssocRate::Infinite => q.f_lambda * area / (T::lit(2.0) * T::PI() * p.diffusion),
            }
        }
    };
    Ok(Rated { value, flags })
}

/// Mean rebinding times of a freshly dissociated pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RebindTimes<T> {
    /// `N / rho`
    pub meso: T,
    /// `L^d / k_r`
    pub micro: T,
}

pub fn tau_rebind<T: Real>(
    p: &PhysicalParams<T>,
    mesh: &MeshContext<T>,
) -> Result<RebindTimes<T>, RateError> {
    let rho = rho_meso(mesh.h, p)?.value;
    let micro = match p.k_r {
        AssocRate::Finite(k) => mesh.dim.powi(mesh.length) / k,
        AssocRate::Infinite => T::zero(),
    };
    Ok(RebindTimes {
        meso: mesh.voxels / rho,
        micro,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn fig3a(k_r: f64) -> PhysicalParams<f64> {
        PhysicalParams::new(AssocRate::Finite(k_r), 0.0, 2e-12, 2e-9, Dim::Three).unwrap()
    }

    fn absorbing(dim: Dim) -> PhysicalParams<f64> {
        PhysicalParams::new(AssocRate::Infinite, 0.0, 2e-12, 2e-9, dim).unwrap()
    }

    #[test]
    fn collins_kimball_values() {
        assert_relative_eq!(collins_kimball(&fig3a(1e-18)).unwrap(), 4.7859e-20, max_relative = 1e-4);
        assert_relative_eq!(
            collins_kimball(&absorbing(Dim::Three)).unwrap(),
            5.0265e-20,
            max_relative = 1e-4
        );
        let slow = collins_kimball(&fig3a(1e-22)).unwrap();
        assert_relative_eq!(slow, 9.980e-23, max_relative = 1e-3);
    }

    #[test]
    fn collins_kimball_rejects_2d() {
        let p = absorbing(Dim::Two);
        assert!(matches!(
            collins_kimball(&p),
            Err(RateError::UnsupportedDimension { dim: 2, .. })
        ));
        assert!(eps_max(&p).is_err());
    }

    #[test]
    fn geometric_function_values() {
        let p3 = absorbing(Dim::Three);
        let g_root = g_geometric(3.1758 * 2e-9, &p3);
        assert!(g_root.abs() * 4.0 * std::f64::consts::PI * 2e-9 < 1e-4);
        assert_relative_eq!(g_geometric(6.4e-9, &p3), 2.99e5, max_relative = 2e-3);
        let p2 = absorbing(Dim::Two);
        assert!(g_geometric(1.02e-8, &p2).abs() < 1e-4);
    }

    #[test]
    fn rho_at_critical_width_is_intrinsic() {
        let p = fig3a(1e-18);
        let h = h_star(&p).h_star_inf;
        let rho = rho_meso(h, &p).unwrap();
        // 3.9026e6 at the rounded width 6.3516e-9
        assert_relative_eq!(rho.value, 3.9026e6, max_relative = 2e-4);
        assert_relative_eq!(rho.value, 1e-18 / h.powi(3), max_relative = 1e-12);
        assert!(rho.flags.below_ten_sigma);
    }

    #[test]
    fn rho_large_voxel_and_small_rate_limits() {
        let p = fig3a(1e-18);
        let rho = rho_meso(1e-6, &p).unwrap().value;
        assert_relative_eq!(rho, 0.04815, max_relative = 1e-3);
        let ck = collins_kimball(&p).unwrap() / 1e-18;
        assert!((rho - ck).abs() / ck < 0.007);

        let slow = fig3a(1e-24);
        assert_relative_eq!(rho_meso(6.4e-9, &slow).unwrap().value, 3.815, max_relative = 1e-3);
    }

    #[test]
    fn rho_below_critical_width_fails() {
        let p = fig3a(1e-18);
        let crit = h_star(&p);
        match rho_meso(0.99 * crit.h_star_kr, &p) {
            Err(RateError::NoValidRate { h_star_kr, .. }) => {
                assert_relative_eq!(h_star_kr, crit.h_star_kr)
            }
            other => panic!("expected NoValidRate, got {other:?}"),
        }
        assert!(rho_meso(crit.h_star_inf, &absorbing(Dim::Three)).is_err());
        assert!(rho_meso(1.01 * crit.h_star_inf, &absorbing(Dim::Three)).is_ok());
    }

    #[test]
    fn zero_rate_gives_zero_propensity() {
        let p = fig3a(0.0);
        assert_eq!(rho_meso(1e-9, &p).unwrap().value, 0.0);
        assert_eq!(h_star(&p).h_star_kr, 0.0);
    }

    #[test]
    fn kd_meso_values() {
        let mut p = fig3a(1e-18);
        p.k_d = 1.0;
        let h_inf = h_star(&p).h_star_inf;
        assert_relative_eq!(kd_meso(h_inf, &p).unwrap().value, 1.0, max_relative = 1e-12);
        assert_relative_eq!(kd_meso(1e-6, &p).unwrap().value, 0.04815, max_relative = 1e-3);
        assert!(kd_meso(1.05 * h_inf, &p).unwrap().value < 1.0);
        assert!(kd_meso(0.98 * h_inf, &p).unwrap().value > 1.0);
    }

    #[test]
    fn kd_meso_undefined_for_zero_rate() {
        let mut p = fig3a(0.0);
        p.k_d = 2.0;
        assert_eq!(kd_meso(1e-8, &p), Err(RateError::UndefinedRatio));
        p.k_d = 0.0;
        assert_eq!(kd_meso(1e-8, &p).unwrap().value, 0.0);
    }

    #[test]
    fn critical_sizes() {
        let h3 = h_star(&absorbing(Dim::Three));
        assert_relative_eq!(h3.h_star_inf / 2e-9, 3.1758, max_relative = 1e-4);
        assert_eq!(h3.h_star_kr, h3.h_star_inf);
        let h2 = h_star(&absorbing(Dim::Two));
        assert_relative_eq!(h2.h_star_inf / 2e-9, 5.0982, max_relative = 1e-4);
        let hk = h_star(&fig3a(1e-20));
        assert_relative_eq!(hk.h_star_kr, 1.0540e-9, max_relative = 1e-4);
    }

    #[test]
    fn mesh_bound_values() {
        let p = fig3a(1e-18);
        let f0 = mesh_bound_f(&p, 0.0).unwrap().value.value().unwrap();
        assert_eq!(f0, h_star(&p).h_star_inf);
        let f = mesh_bound_f(&p, 0.05).unwrap();
        assert_relative_eq!(f.value.value().unwrap(), 6.3687e-9, max_relative = 1e-4);
        assert!(!f.flags.eps_at_or_above_max);
        let em = eps_max(&p).unwrap();
        let past = mesh_bound_f(&p, em + 1e-6).unwrap();
        assert_eq!(past.value, MeshBound::Unbounded);
        assert!(past.flags.eps_at_or_above_max);
        let near = mesh_bound_f(&p, em * (1.0 - 1e-9)).unwrap();
        assert!(near.value.value().unwrap() > 1e-3);
        assert!(mesh_bound_f(&p, 1.0).is_err());
        assert!(mesh_bound_f(&p, -0.1).is_err());
    }

    #[test]
    fn eps_max_values() {
        assert_relative_eq!(eps_max(&fig3a(1e-18)).unwrap(), 0.95213, max_relative = 1e-4);
        assert_eq!(eps_max(&absorbing(Dim::Three)).unwrap(), 1.0);
        assert!(eps_max(&fig3a(1e-40)).unwrap() < 1e-19);
    }

    #[test]
    fn tau_micro_values() {
        let l = 5.145e-7;
        assert_relative_eq!(tau_micro_mean(&fig3a(1e-18), l).unwrap().value, 2.8458, max_relative = 1e-4);
        assert_relative_eq!(
            tau_micro_mean(&absorbing(Dim::Three), l).unwrap().value,
            2.7096,
            max_relative = 1e-4
        );
        let p2 = PhysicalParams::new(AssocRate::Finite(1e-12), 0.0, 2e-14, 2e-9, Dim::Two).unwrap();
        let q = Disk2DQuantities::new(&p2, 5.2e-7).unwrap();
        assert_relative_eq!(q.lambda, 6.817e-3, max_relative = 1e-3);
        assert_relative_eq!(q.alpha, 7.9577, max_relative = 1e-4);
        assert_relative_eq!(q.f_lambda, 4.238, max_relative = 1e-3);
        assert_relative_eq!(tau_micro_mean(&p2, 5.2e-7).unwrap().value, 9.39, max_relative = 1e-3);
        assert!(tau_micro_mean(&p2, 1e-8).unwrap().flags.below_ten_sigma);
    }

    #[test]
    fn tau_micro_2d_absorbing_limit_matches_large_rate() {
        let p = PhysicalParams::new(AssocRate::Infinite, 0.0, 2e-14, 2e-9, Dim::Two).unwrap();
        let limit = tau_micro_mean(&p, 5.2e-7).unwrap().value;
        let big = tau_micro_mean(&p.with_rate(AssocRate::Finite(1e-3)), 5.2e-7).unwrap().value;
        assert_relative_eq!(limit, big, max_relative = 1e-6);
    }

    #[test]
    fn tau_rebind_crossover() {
        let p = fig3a(1e-18);
        let h = h_star(&p).h_star_inf;
        let m = MeshContext::from_lattice(81, 81.0 * h, Dim::Three).unwrap();
        let t = tau_rebind(&p, &m).unwrap();
        assert_relative_eq!(t.meso, t.micro, max_relative = 1e-10);
        // N = 81^3 voxels of width h*_inf inside the rounded L = 5.145e-7
        let paper = MeshContext {
            h,
            length: 5.145e-7,
            voxels: 81f64.powi(3),
            dim: Dim::Three,
        };
        let tp = tau_rebind(&p, &paper).unwrap();
        assert_relative_eq!(tp.meso, 0.13618, max_relative = 2e-4);
        assert_relative_eq!(tp.micro, 0.13620, max_relative = 1e-4);
        let coarse = MeshContext::from_lattice(81, 162.0 * h, Dim::Three).unwrap();
        let tc = tau_rebind(&p, &coarse).unwrap();
        assert!(tc.meso > tc.micro);
        let fine = MeshContext::from_lattice(81, 81.0 * 0.97 * h, Dim::Three).unwrap();
        let tf = tau_rebind(&p, &fine).unwrap();
        assert!(tf.meso < tf.micro);
    }

    #[test]
    fn works_in_single_precision() {
        let p = PhysicalParams::<f32>::new(AssocRate::Infinite, 0.0, 2e-12, 2e-9, Dim::Three).unwrap();
        let h = h_star(&p).h_star_inf;
        assert!((h / 2e-9 - 3.1758).abs() < 1e-3);
    }
}
