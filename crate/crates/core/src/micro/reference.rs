//! Table-free reference sampler.
//!
//! Every step is a free Gaussian step whose size shrinks near contact,
//! `sd = max(sigma / resolution, (|r| - sigma) / far_factor)`. An endpoint
//! inside the sphere is folded back out. Reaction within a step is decided
//! from the exact half-line Robin bridge for `u = r p` at the sphere:
//! `1 - g_{kappa + D/sigma}(x, y) / g_{D/sigma}(x, y)` with
//! `kappa = k_r / (4 pi sigma²)`, where `x` and `y` are the start and end
//! distances from contact.

use rand::Rng;

use super::{
    far_step, gaussian3, half_line_robin_density, initial_state, norm, reflect_out, wrap,
    BindingSample, InitialCondition, MicroConfig, PairState,
};

/// Step-size floor near contact in units of sigma.
pub const DEFAULT_RESOLUTION: f64 = 20.0;

/// Probability that the pair reacted during a reflected step from contact
/// distance `x` to `y` taking time `t`.
pub fn bridge_reaction_probability(config: &MicroConfig, x: f64, y: f64, t: f64) -> f64 {
    let d = config.diffusion;
    let a = d / config.sigma;
    let kappa = config.k_r.to_f64() / (4.0 * std::f64::consts::PI * config.sigma * config.sigma);
    let reflecting = half_line_robin_density(x, y, t, d, a);
    if reflecting <= 0.0 {
        return if kappa > 0.0 { 1.0 } else { 0.0 };
    }
    let robin = half_line_robin_density(x, y, t, d, kappa + a);
    (1.0 - robin / reflecting).clamp(0.0, 1.0)
}

fn reference_step<R: Rng + ?Sized>(
    config: &MicroConfig,
    resolution: f64,
    state: &mut PairState,
    rng: &mut R,
) {
    let sigma = config.sigma;
    let r = state.distance();
    let floor = sigma / resolution;
    let natural = (r - sigma) / config.far_factor;
    if natural > floor * config.far_factor {
        // Far from contact: the sphere is out of reach.
        far_step(config, state, rng);
        return;
    }
    let sd = natural.max(floor);
    let t = sd * sd / (2.0 * config.diffusion);
    let g = gaussian3(rng);
    let mut next = [
        state.r[0] + sd * g[0],
        state.r[1] + sd * g[1],
        state.r[2] + sd * g[2],
    ];
    wrap(&mut next, config.length);
    reflect_out(&mut next, sigma);
    let p = bridge_reaction_probability(config, r - sigma, norm(&next) - sigma, t);
    let hazard = if p < 1.0 { -(-p).ln_1p() } else { f64::INFINITY };
    if hazard >= state.hazard {
        state.t += if hazard.is_finite() { t * state.hazard / hazard } else { 0.0 };
        state.hazard = 0.0;
        state.bound = true;
        return;
    }
    state.hazard -= hazard;
    state.r = next;
    state.t += t;
}

/// First binding time using the table-free reference dynamics.
pub fn sample_binding_time_reference<R: Rng + ?Sized>(
    config: &MicroConfig,
    resolution: f64,
    init: InitialCondition,
    rng: &mut R,
) -> BindingSample {
    if config.k_r.is_zero() {
        return BindingSample::Censored(0.0);
    }
    let mut state = initial_state(config, init, rng);
    let mut steps = 0u64;
    while !state.bound {
        if steps >= config.max_steps || state.t >= config.max_time {
            return BindingSample::Censored(state.t);
        }
        reference_step(config, resolution, &mut state, rng);
        steps += 1;
    }
    BindingSample::Bound(state.t)
}
