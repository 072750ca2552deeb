use smallvec::SmallVec;

/// Sparse `(voxel, species, delta)` update.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StoichVector {
    pub entries: SmallVec<[(usize, usize, i32); 4]>,
}

impl StoichVector {
    /// One molecule of `species` jumping from `from` to `to`.
    pub fn diffusion(species: usize, from: usize, to: usize) -> Self {
        let mut entries = SmallVec::new();
        entries.push((from, species, -1));
        entries.push((to, species, 1));
        Self { entries }
    }

    /// Net species changes of a reaction applied inside `voxel`.
    pub fn reaction(voxel: usize, deltas: &[(usize, i32)]) -> Self {
        Self {
            entries: deltas.iter().map(|&(s, d)| (voxel, s, d)).collect(),
        }
    }

    /// Distinct voxels touched, in first-seen order.
    pub fn voxels(&self) -> SmallVec<[usize; 2]> {
        let mut out: SmallVec<[usize; 2]> = SmallVec::new();
        for &(v, _, _) in &self.entries {
            if !out.contains(&v) {
                out.push(v);
            }
        }
        out
    }
}

/// `K x S` copy-number matrix stored voxel-major, with running species totals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemState {
    voxels: usize,
    species: usize,
    counts: Vec<u32>,
    totals: Vec<u64>,
}

impl SystemState {
    pub fn empty(voxels: usize, species: usize) -> Self {
        Self {
            voxels,
            species,
            counts: vec![0; voxels * species],
            totals: vec![0; species],
        }
    }

    pub fn voxel_count(&self) -> usize {
        self.voxels
    }

    pub fn species_count(&self) -> usize {
        self.species
    }

    pub fn get(&self, voxel: usize, species: usize) -> u32 {
        self.counts[voxel * self.species + species]
    }

    pub fn add(&mut self, voxel: usize, species: usize, count: u32) {
        self.counts[voxel * self.species + species] += count;
        self.totals[species] += count as u64;
    }

    /// Copy numbers of all species in one voxel.
    pub fn voxel(&self, voxel: usize) -> &[u32] {
        &self.counts[voxel * self.species..(voxel + 1) * self.species]
    }

    pub fn totals(&self) -> &[u64] {
        &self.totals
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// Applies `stoich` and returns the voxels whose propensities changed.
    ///
    /// # Panics
    /// If a count would become negative; that is a propensity bug upstream.
    pub fn apply(&mut self, stoich: &StoichVector) -> SmallVec<[usize; 2]> {
        for &(v, s, d) in &stoich.entries {
            let slot = &mut self.counts[v * self.species + s];
            let next = *slot as i64 + d as i64;
            assert!(
                next >= 0,
                "negative copy number for species {s} in voxel {v}: stoichiometry applied to an empty voxel"
            );
            *slot = next as u32;
            self.totals[s] = (self.totals[s] as i64 + d as i64) as u64;
        }
        stoich.voxels()
    }
}
