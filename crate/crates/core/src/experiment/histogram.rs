use std::f64::consts::TAU;

use serde::Serialize;

use super::{degenerate, OutcomeRecord};
use crate::error::{Error, Result};
use crate::qstate::SphereCoordinates;

/// Equal-area histogram of energy-zero outcomes on the sphere.
///
/// Bins are uniform in `cos θ ∈ [−1, 1]` and `φ ∈ [0, 2π)`, so every bin
/// covers the same solid angle. Counts are stored `cos θ`-major.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SphereHistogram {
    pub z_edges: Vec<f64>,
    pub phi_edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub total_count: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HistogramBin {
    pub z_low: f64,
    pub z_high: f64,
    pub phi_low: f64,
    pub phi_high: f64,
    pub count: u64,
}

impl SphereHistogram {
    pub fn new(n_z_bins: usize, n_phi_bins: usize) -> Result<Self> {
        if n_z_bins == 0 || n_phi_bins == 0 {
            return Err(Error::Bins {
                z_bins: n_z_bins,
                phi_bins: n_phi_bins,
            });
        }
        let z_edges = (0..=n_z_bins)
            .map(|i| {
                if i == n_z_bins {
                    1.0
                } else {
                    -1.0 + 2.0 * i as f64 / n_z_bins as f64
                }
            })
            .collect();
        let phi_edges = (0..=n_phi_bins)
            .map(|j| {
                if j == n_phi_bins {
                    TAU
                } else {
                    TAU * j as f64 / n_phi_bins as f64
                }
            })
            .collect();
        Ok(Self {
            z_edges,
            phi_edges,
            counts: vec![0; n_z_bins * n_phi_bins],
            total_count: 0,
        })
    }

    pub fn n_z_bins(&self) -> usize {
        self.z_edges.len() - 1
    }

    pub fn n_phi_bins(&self) -> usize {
        self.phi_edges.len() - 1
    }

    /// `(z index, φ index)` of the bin holding `coords`.
    pub fn bin_of(&self, coords: SphereCoordinates) -> (usize, usize) {
        let nz = self.n_z_bins();
        let nphi = self.n_phi_bins();
        let z = coords.cos_theta().clamp(-1.0, 1.0);
        let iz = (((z + 1.0) * 0.5 * nz as f64) as usize).min(nz - 1);
        let iphi = ((coords.phi / TAU * nphi as f64) as usize).min(nphi - 1);
        (iz, iphi)
    }

    pub fn add(&mut self, coords: SphereCoordinates) {
        let (iz, iphi) = self.bin_of(coords);
        let n = self.n_phi_bins();
        self.counts[iz * n + iphi] += 1;
        self.total_count += 1;
    }

    pub fn count(&self, iz: usize, iphi: usize) -> u64 {
        self.counts[iz * self.n_phi_bins() + iphi]
    }

    /// All bins in storage order.
    pub fn bins(&self) -> impl Iterator<Item = HistogramBin> + '_ {
        let n = self.n_phi_bins();
        self.counts.iter().enumerate().map(move |(k, &count)| {
            let (iz, iphi) = (k / n, k % n);
            HistogramBin {
                z_low: self.z_edges[iz],
                z_high: self.z_edges[iz + 1],
                phi_low: self.phi_edges[iphi],
                phi_high: self.phi_edges[iphi + 1],
                count,
            }
        })
    }

    pub fn occupied(&self) -> impl Iterator<Item = HistogramBin> + '_ {
        self.bins().filter(|b| b.count > 0)
    }

    /// Counts summed over azimuth, one per `cos θ` band.
    pub fn z_marginal(&self) -> Vec<u64> {
        self.counts
            .chunks(self.n_phi_bins())
            .map(|row| row.iter().sum())
            .collect()
    }
}

/// Bins every energy-zero record.
pub fn sphere_histogram(
    records: &[OutcomeRecord],
    n_z_bins: usize,
    n_phi_bins: usize,
) -> Result<SphereHistogram> {
    let mut hist = SphereHistogram::new(n_z_bins, n_phi_bins)?;
    let mut any = false;
    for coords in degenerate(records).filter_map(|r| r.sphere) {
        hist.add(coords);
        any = true;
    }
    if !any {
        return Err(Error::NoDegenerateOutcomes);
    }
    Ok(hist)
}
