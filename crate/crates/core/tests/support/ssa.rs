//! Direct-method stochastic simulation, independent of the lattice engine.
#![allow(dead_code)]

use rand::Rng;
use rdme_core::model::{reaction_propensity, CompiledModel};
use rdme_core::nsm::exponential;

/// Direct-method SSA for a well-mixed single voxel.
pub fn direct_ssa_first_firing<R: Rng>(
    model: &CompiledModel,
    initial: &[u32],
    target: usize,
    rng: &mut R,
) -> f64 {
    let mut x = initial.to_vec();
    let mut t = 0.0;
    loop {
        let a: Vec<f64> = model
            .channels
            .iter()
            .map(|ch| reaction_propensity(ch, &x))
            .collect();
        let total: f64 = a.iter().sum();
        if total == 0.0 {
            return f64::INFINITY;
        }
        t += exponential(rng, total);
        let mut u = rng.random::<f64>() * total;
        let mut j = 0;
        while u >= a[j] || a[j] == 0.0 {
            u -= a[j];
            j += 1;
        }
        if j == target {
            return t;
        }
        for &(s, d) in &model.channels[j].deltas {
            x[s] = (x[s] as i32 + d) as u32;
        }
    }
}
