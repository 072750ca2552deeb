//! Dense continuous-time Markov chain oracles for lattice pair binding.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

/// Expected absorption times `m` solving `(diag(out) - T) m = 1`, where `T`
/// holds the transient-to-transient rates and `out` every exit rate.
pub fn mean_absorption_time(n: usize, transitions: &[(usize, usize, f64)], absorb: &[f64]) -> Vec<f64> {
    let mut a = DMatrix::<f64>::zeros(n, n);
    for (i, &k) in absorb.iter().enumerate() {
        a[(i, i)] += k;
    }
    for &(i, j, r) in transitions {
        a[(i, i)] += r;
        a[(i, j)] -= r;
    }
    let m = a
        .lu()
        .solve(&DVector::from_element(n, 1.0))
        .expect("absorbing chain is non-singular");
    m.iter().copied().collect()
}

/// Periodic neighbours of voxel `v` on an `n^dim` lattice (row-major, last
/// coordinate fastest), independent of the simulator's own table.
pub fn periodic_neighbors(v: usize, n: usize, dim: usize) -> Vec<usize> {
    let mut coords = vec![0; dim];
    let mut rest = v;
    for c in coords.iter_mut().rev() {
        *c = rest % n;
        rest /= n;
    }
    let mut out = Vec::new();
    for axis in 0..dim {
        for step in [n - 1, 1] {
            let mut nc = coords.clone();
            nc[axis] = (nc[axis] + step) % n;
            out.push(nc.iter().fold(0, |acc, &c| acc * n + c));
        }
    }
    out
}

/// Mean time until an A and a B molecule meet and react, for every joint
/// starting state `a * K + b`; each molecule jumps with `jump_a` / `jump_b`
/// per direction and the pair reacts at `rho` when co-located.
pub fn joint_pair_binding(n: usize, dim: usize, jump_a: f64, jump_b: f64, rho: f64) -> Vec<f64> {
    let k = n.pow(dim as u32);
    let mut transitions = Vec::new();
    let mut absorb = vec![0.0; k * k];
    for a in 0..k {
        for b in 0..k {
            let s = a * k + b;
            if a == b {
                absorb[s] = rho;
            }
            for w in periodic_neighbors(a, n, dim) {
                transitions.push((s, w * k + b, jump_a));
            }
            for w in periodic_neighbors(b, n, dim) {
                transitions.push((s, a * k + w, jump_b));
            }
        }
    }
    mean_absorption_time(k * k, &transitions, &absorb)
}

/// Same quantity in the relative coordinate `b - a` (valid on periodic
/// lattices), indexed by displacement voxel; index 0 is co-location.
pub fn relative_pair_binding(n: usize, dim: usize, jump: f64, rho: f64) -> Vec<f64> {
    let k = n.pow(dim as u32);
    let mut transitions = Vec::new();
    let mut absorb = vec![0.0; k];
    absorb[0] = rho;
    for s in 0..k {
        for w in periodic_neighbors(s, n, dim) {
            transitions.push((s, w, jump));
        }
    }
    mean_absorption_time(k, &transitions, &absorb)
}
