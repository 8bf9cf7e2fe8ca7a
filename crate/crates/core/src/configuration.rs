//! Reproducible lazy Bernoulli edge environments.
//!
//! The state of an edge is a pure function of (master_seed, sample_index,
//! canonical edge key): no state is stored, so explorations are parallel-safe
//! and exactly reproducible.

use crate::error::{Error, Result};
use crate::lattice::{GraphSpec, Point};
use serde::{Deserialize, Serialize};

/// Where a critical-point value came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PcProvenance {
    UserSupplied,
    LiteratureDefault,
    Estimated,
}

/// A value of p_c with its provenance.
///
/// The model itself defines p_c only as an infimum; any number used in a run
/// is either supplied, taken from the simulation literature, or estimated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub value: f64,
    pub provenance: PcProvenance,
}

/// Literature value for the d = 7 nearest-neighbour bond threshold,
/// p_c ≈ 0.0786752 (high-precision Monte Carlo estimates; see README).
pub const PC_D7_NN_LITERATURE: f64 = 0.0786752;

impl CriticalPoint {
    pub fn user(value: f64) -> Result<Self> {
        if !(value > 0.0 && value < 1.0) {
            return Err(Error::BadProbability(value));
        }
        Ok(CriticalPoint {
            value,
            provenance: PcProvenance::UserSupplied,
        })
    }

    /// The documented literature default; only available for d = 7
    /// nearest-neighbour.
    pub fn literature_default(spec: &GraphSpec) -> Option<Self> {
        if spec.dimension == 7 && spec.effective_spread() == 1 {
            Some(CriticalPoint {
                value: PC_D7_NN_LITERATURE,
                provenance: PcProvenance::LiteratureDefault,
            })
        } else {
            None
        }
    }
}

/// A lazily evaluated random edge environment at parameter p, fully
/// determined by (master_seed, sample_index).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub master_seed: u64,
    pub sample_index: u64,
    pub p: f64,
    pub spec: GraphSpec,
}

#[inline]
fn mix64(mut z: u64) -> u64 {
    z ^= z >> 30;
    z = z.wrapping_mul(0xbf58476d1ce4e5b9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94d049bb133111eb);
    z ^= z >> 31;
    z
}

const GOLDEN: u64 = 0x9e3779b97f4a7c15;

impl Configuration {
    pub fn new(master_seed: u64, p: f64, spec: GraphSpec) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::BadProbability(p));
        }
        Ok(Configuration {
            master_seed,
            sample_index: 0,
            p,
            spec,
        })
    }

    /// The sample with the given index: an edge family statistically
    /// independent of every other index, deterministic in (master_seed, index).
    pub fn derive_sample(&self, index: u64) -> Configuration {
        Configuration {
            sample_index: index,
            ..*self
        }
    }

    /// Canonical edge hash mapped to [0, 1); shared-uniform coupling point
    /// for monotonicity arguments in p.
    #[inline]
    pub fn edge_uniform(&self, a: &Point, b: &Point) -> f64 {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let mut h = mix64(self.master_seed ^ GOLDEN);
        h = mix64(h ^ self.sample_index);
        for &c in lo.coords() {
            debug_assert!(c.unsigned_abs() < (1 << 31));
            h = mix64(h.wrapping_add(GOLDEN) ^ (c as u64));
        }
        for &c in hi.coords() {
            h = mix64(h.wrapping_add(GOLDEN) ^ (c as u64));
        }
        h = mix64(h ^ (lo.dim() as u64));
        ((h >> 11) as f64) * (1.0 / (1u64 << 53) as f64)
    }

    /// Open/closed state of the edge {a, b} without adjacency validation.
    ///
    /// Used on hot paths where the caller generates genuine neighbours.
    #[inline]
    pub fn edge_open_unchecked(&self, a: &Point, b: &Point) -> bool {
        self.edge_uniform(a, b) < self.p
    }

    /// Open/closed state of the edge {a, b}.
    pub fn edge_open(&self, a: &Point, b: &Point) -> Result<bool> {
        if !self.spec.adjacent(a, b) {
            return Err(Error::NotAdjacent(
                a.coords().to_vec(),
                b.coords().to_vec(),
            ));
        }
        for &c in a.coords().iter().chain(b.coords()) {
            if c.unsigned_abs() >= (1 << 31) {
                return Err(Error::CoordinateOverflow(c));
            }
        }
        Ok(self.edge_open_unchecked(a, b))
    }
}
