use serde::Serialize;

use super::ModelError;

/// Sentinel for a missing neighbour across a reflective wall.
pub const NO_NEIGHBOR: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum Boundary {
    #[default]
    Periodic,
    Reflective,
}

/// Uniform Cartesian lattice of `n^dim` cubic voxels of width `length / n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatticeSpec {
    pub dim: usize,
    pub n: usize,
    pub length: f64,
    pub boundary: Boundary,
}

impl LatticeSpec {
    pub fn new(dim: usize, n: usize, length: f64, boundary: Boundary) -> Result<Self, ModelError> {
        let spec = Self {
            dim,
            n,
            length,
            boundary,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(1..=3).contains(&self.dim) {
            return Err(ModelError::InvalidLattice(format!("dimension {} not in 1..=3", self.dim)));
        }
        if self.n == 0 {
            return Err(ModelError::InvalidLattice("n must be positive".into()));
        }
        if !(self.length > 0.0) || !self.length.is_finite() {
            return Err(ModelError::InvalidLattice("side length must be positive".into()));
        }
        if self.n.checked_pow(self.dim as u32).is_none_or(|k| k >= NO_NEIGHBOR as usize) {
            return Err(ModelError::InvalidLattice("too many voxels".into()));
        }
        Ok(())
    }

    /// Voxel width `h = L / n`.
    pub fn h(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Total voxel count `K = n^dim`.
    pub fn voxel_count(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn directions(&self) -> usize {
        2 * self.dim
    }

    /// Row-major index: the last coordinate varies fastest.
    pub fn index(&self, coords: &[usize]) -> usize {
        debug_assert_eq!(coords.len(), self.dim);
        coords.iter().fold(0, |acc, &c| acc * self.n + c)
    }

    pub fn coords(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim];
        for slot in out.iter_mut().rev() {
            *slot = index % self.n;
            index /= self.n;
        }
        out
    }

    /// Flat adjacency table with `2 * dim` entries per voxel, ordered
    /// `(-axis0, +axis0, -axis1, +axis1, ...)`. Self-loops on a single-voxel
    /// periodic axis and walls of reflective lattices are [`NO_NEIGHBOR`].
    pub fn neighbor_table(&self) -> Vec<u32> {
        let k = self.voxel_count();
        let dirs = self.directions();
        let mut table = vec![NO_NEIGHBOR; k * dirs];
        let n = self.n;
        for v in 0..k {
            let coords = self.coords(v);
            for axis in 0..self.dim {
                for (side, step) in [(0usize, -1isize), (1, 1)] {
                    let c = coords[axis] as isize + step;
                    let wrapped = match self.boundary {
                        Boundary::Periodic => Some(c.rem_euclid(n as isize) as usize),
                        Boundary::Reflective => {
                            (0..n as isize).contains(&c).then_some(c as usize)
                        }
                    };
                    if let Some(c) = wrapped {
                        let mut nc = coords.clone();
                        nc[axis] = c;
                        let w = self.index(&nc);
                        if w != v {
                            table[v * dirs + 2 * axis + side] = w as u32;
                        }
                    }
                }
            }
        }
        table
    }
}
