use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::Rng;
use sha2::{Digest, Sha256};

use super::MicroConfig;

const MAGIC: &[u8; 8] = b"RDMEPROP";
/// Bumped whenever the table layout or discretisation changes.
pub const FORMAT_VERSION: u32 = 1;

/// One-step radial propagator of the relative distance for a pair with a
/// partially absorbing contact sphere.
///
/// Built from a vertex-centred finite-volume discretisation of radial
/// diffusion on nodes `r_i = sigma + i dr`, `i = 0..=M`, with a half cell at
/// contact (absorbing at rate `k_r / V_0`, or absorbing outright for
/// infinite `k_r`) and a reflecting outer wall far beyond one step's reach.
/// The step kernel is `exp(dt Q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagatorTable {
    pub diffusion: f64,
    pub sigma: f64,
    /// `f64::INFINITY` for the diffusion-limited sentinel.
    pub k_r: f64,
    pub dt: f64,
    pub dr: f64,
    /// Grid nodes `M + 1`.
    pub nodes: usize,
    /// Tabulated starting nodes.
    pub rows: usize,
    survival: Vec<f64>,
    cdf: Vec<f64>,
}

impl PropagatorTable {
    pub fn build(config: &MicroConfig) -> Self {
        let sigma = config.sigma;
        let d = config.diffusion;
        let dr = sigma / config.cells_per_sigma as f64;
        let reach = 8.0 * (2.0 * d * config.dt).sqrt();
        let m = (((config.shell - 1.0) * sigma + reach) / dr).ceil() as usize;
        let nodes = m + 1;
        let rows = ((((config.shell - 1.0) * sigma) / dr).ceil() as usize + 2).min(nodes);
        let k_r = config.k_r.to_f64();

        let (lo, hi) = cell_bounds(sigma, dr, nodes);
        let volume: Vec<f64> = (0..nodes)
            .map(|i| 4.0 / 3.0 * std::f64::consts::PI * (hi[i].powi(3) - lo[i].powi(3)))
            .collect();
        let mut q = DMatrix::<f64>::zeros(nodes, nodes);
        for i in 0..m {
            let face = hi[i];
            let conductance = d * 4.0 * std::f64::consts::PI * face * face / dr;
            let (up, down) = (conductance / volume[i], conductance / volume[i + 1]);
            q[(i, i + 1)] += up;
            q[(i, i)] -= up;
            q[(i + 1, i)] += down;
            q[(i + 1, i + 1)] -= down;
        }
        if k_r.is_infinite() {
            // Node 0 sits on the contact sphere: the 1 -> 0 rate left on the
            // diagonal becomes the absorption rate.
            for j in 0..nodes {
                q[(0, j)] = 0.0;
                q[(j, 0)] = 0.0;
            }
        } else {
            q[(0, 0)] -= k_r / volume[0];
        }

        let p = (q * config.dt).exp();
        let mut survival = Vec::with_capacity(rows);
        let mut cdf = Vec::with_capacity(rows * nodes);
        for i in 0..rows {
            let row: Vec<f64> = (0..nodes).map(|j| p[(i, j)].max(0.0)).collect();
            let s: f64 = if k_r.is_infinite() && i == 0 {
                0.0
            } else {
                row.iter().sum::<f64>().min(1.0)
            };
            survival.push(s);
            let mut acc = 0.0;
            let total: f64 = row.iter().sum();
            for x in row {
                acc += x;
                cdf.push(if total > 0.0 { acc / total } else { 0.0 });
            }
            let last = cdf.len() - 1;
            if total > 0.0 {
                cdf[last] = 1.0;
            }
        }
        Self {
            diffusion: d,
            sigma,
            k_r,
            dt: config.dt,
            dr,
            nodes,
            rows,
            survival,
            cdf,
        }
    }

    /// Largest radius the table covers as a starting point.
    pub fn max_start(&self) -> f64 {
        self.sigma + (self.rows - 1) as f64 * self.dr
    }

    /// Survival probability over one step from grid node `i`.
    pub fn node_survival(&self, i: usize) -> f64 {
        self.survival[i]
    }

    /// Survival over one step from radius `r0`, linear between nodes.
    pub fn survival(&self, r0: f64) -> f64 {
        let (i, w) = self.locate(r0);
        w * self.survival[i] + (1.0 - w) * self.survival[i + 1]
    }

    fn locate(&self, r0: f64) -> (usize, f64) {
        assert!(
            r0 >= self.sigma * (1.0 - 1e-12) && r0 <= self.max_start() * (1.0 + 1e-12),
            "radius {r0:e} outside the propagator table"
        );
        let x = ((r0 - self.sigma) / self.dr).max(0.0);
        let i = (x.floor() as usize).min(self.rows - 2);
        (i, 1.0 - (x - i as f64))
    }

    /// Conditional CDF over end nodes for start node `i`.
    pub fn node_cdf(&self, i: usize) -> &[f64] {
        &self.cdf[i * self.nodes..(i + 1) * self.nodes]
    }

    /// Inner and outer radius of the finite-volume cell of node `j`.
    pub fn cell(&self, j: usize) -> (f64, f64) {
        let c = self.sigma + j as f64 * self.dr;
        let lo = if j == 0 { self.sigma } else { c - 0.5 * self.dr };
        let hi = if j + 1 == self.nodes { c } else { c + 0.5 * self.dr };
        (lo, hi)
    }

    /// Samples the end radius of a surviving step from `r0` according to the
    /// kernel interpolated between the bracketing start nodes; the caller
    /// decides survival from [`survival`](Self::survival).
    pub fn sample_radius<R: Rng + ?Sized>(&self, r0: f64, rng: &mut R) -> f64 {
        let (i, w) = self.locate(r0);
        let (a, b) = (w * self.survival[i], (1.0 - w) * self.survival[i + 1]);
        let row = if rng.random::<f64>() * (a + b) < a { i } else { i + 1 };
        let cdf = self.node_cdf(row);
        let u: f64 = rng.random();
        let j = cdf.partition_point(|&c| c <= u).min(self.nodes - 1);
        let (lo, hi) = self.cell(j);
        // Uniform in the cell's volume.
        let v: f64 = rng.random();
        (lo.powi(3) + v * (hi.powi(3) - lo.powi(3))).cbrt()
    }

    fn header_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(64);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        for x in [self.diffusion, self.sigma, self.k_r, self.dt, self.dr] {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out.extend_from_slice(&(self.nodes as u64).to_le_bytes());
        out.extend_from_slice(&(self.rows as u64).to_le_bytes());
        out
    }

    /// Serialises to the versioned little-endian cache format.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.header_bytes();
        for x in self.survival.iter().chain(&self.cdf) {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> io::Result<Self> {
        let bad = |m: &str| io::Error::new(io::ErrorKind::InvalidData, m.to_string());
        let mut r = bytes;
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(bad("not a propagator table"));
        }
        let mut u4 = [0u8; 4];
        r.read_exact(&mut u4)?;
        if u32::from_le_bytes(u4) != FORMAT_VERSION {
            return Err(bad("propagator table format version mismatch"));
        }
        let mut word = || -> io::Result<[u8; 8]> {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            Ok(b)
        };
        let mut f = || word().map(f64::from_le_bytes);
        let (diffusion, sigma, k_r, dt, dr) = (f()?, f()?, f()?, f()?, f()?);
        let nodes = u64::from_le_bytes(word()?) as usize;
        let rows = u64::from_le_bytes(word()?) as usize;
        let mut f = || word().map(f64::from_le_bytes);
        let expected = rows * (nodes + 1);
        let mut data = Vec::with_capacity(expected);
        for _ in 0..expected {
            data.push(f()?);
        }
        if !r.is_empty() {
            return Err(bad("trailing bytes in propagator table"));
        }
        let cdf = data.split_off(rows);
        Ok(Self {
            diffusion,
            sigma,
            k_r,
            dt,
            dr,
            nodes,
            rows,
            survival: data,
            cdf,
        })
    }

    /// Cache file name derived from a hash of the configuration.
    pub fn cache_key(config: &MicroConfig) -> String {
        let mut h = Sha256::new();
        h.update(MAGIC);
        h.update(FORMAT_VERSION.to_le_bytes());
        for x in [
            config.diffusion,
            config.sigma,
            config.k_r.to_f64(),
            config.dt,
            config.shell,
            config.cells_per_sigma as f64,
        ] {
            h.update(x.to_le_bytes());
        }
        let digest = h.finalize();
        let hex: String = digest.iter().take(16).map(|b| format!("{b:02x}")).collect();
        format!("propagator-{hex}.bin")
    }

    /// Loads the table for `config` from `dir`, building and storing it on a
    /// miss or an unreadable file.
    pub fn load_or_build(config: &MicroConfig, dir: &Path) -> io::Result<Self> {
        let path: PathBuf = dir.join(Self::cache_key(config));
        if let Ok(bytes) = fs::read(&path) {
            match Self::from_bytes(&bytes) {
                Ok(t) => return Ok(t),
                Err(e) => log::warn!("ignoring cache file {}: {e}", path.display()),
            }
        }
        let table = Self::build(config);
        fs::create_dir_all(dir)?;
        let tmp = path.with_extension("tmp");
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(&table.to_bytes())?;
        }
        fs::rename(&tmp, &path)?;
        Ok(table)
    }
}

fn cell_bounds(sigma: f64, dr: f64, nodes: usize) -> (Vec<f64>, Vec<f64>) {
    let mut lo = Vec::with_capacity(nodes);
    let mut hi = Vec::with_capacity(nodes);
    for j in 0..nodes {
        let c = sigma + j as f64 * dr;
        lo.push(if j == 0 { sigma } else { c - 0.5 * dr });
        hi.push(if j + 1 == nodes { c } else { c + 0.5 * dr });
    }
    (lo, hi)
}
