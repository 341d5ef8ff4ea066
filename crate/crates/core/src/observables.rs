//! Battery figures of merit from composite states.
//!
//! Two ergotropy variants are provided. [`ergotropy`] is the textbook
//! passive-state construction from the eigenvalues of `ρ_b`.
//! [`ergotropy_populations`] reorders the diagonal populations of `ρ_b` in
//! the `H_b` eigenbasis instead, discarding coherences between battery
//! levels. The two agree whenever `ρ_b` is diagonal; for two or more
//! batteries charged from a cat state they do not, and the population
//! variant is the one [`MeritRecord::ergotropy`] carries.

use serde::Serialize;

use crate::dynamics::{StateVector, Trajectory};
use crate::error::{Error, Result};
use crate::linalg::{eigh, ComplexMatrix, C64};
use crate::model::ModelSpec;

/// Hermiticity / trace tolerance for reduced density matrices.
pub const DENSITY_TOL: f64 = 1e-10;

/// Reduced density matrix of the battery register.
#[derive(Clone, Debug)]
pub struct BatteryDensityMatrix {
    batteries: usize,
    rho: ComplexMatrix,
    /// Eigenvalues, ascending, after clamping.
    spectrum: Vec<f64>,
}

impl BatteryDensityMatrix {
    /// Validates `rho`. Eigenvalues in `[-1e-10, 0)` are clamped to zero
    /// and the matrix renormalized; anything more negative is an error.
    pub fn new(batteries: usize, rho: ComplexMatrix) -> Result<Self> {
        let dim = 1usize << batteries;
        if rho.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: rho.dim() });
        }
        let defect = rho.hermitian_defect();
        if !(defect <= DENSITY_TOL) {
            return Err(Error::InvalidDensityMatrix(format!("not Hermitian (defect {defect:e})")));
        }
        let tr = rho.trace();
        if !((tr.re - 1.0).abs() <= DENSITY_TOL && tr.im.abs() <= DENSITY_TOL) {
            return Err(Error::InvalidDensityMatrix(format!("trace {tr} != 1")));
        }
        // symmetrize away round-off so the eigensolver sees an exact Hermitian input
        let sym = ComplexMatrix::from_fn(dim, |i, j| (rho.get(i, j) + rho.get(j, i).conj()) * 0.5);
        let decomp = eigh(&sym)?;
        let lowest = decomp.eigenvalues()[0];
        if lowest < -DENSITY_TOL {
            return Err(Error::InvalidDensityMatrix(format!("negative eigenvalue {lowest:e}")));
        }
        if lowest >= 0.0 {
            return Ok(Self { batteries, rho: sym, spectrum: decomp.eigenvalues().to_vec() });
        }
        let clamped: Vec<f64> = decomp.eigenvalues().iter().map(|&l| l.max(0.0)).collect();
        let total: f64 = clamped.iter().sum();
        let spectrum: Vec<f64> = clamped.iter().map(|l| l / total).collect();
        let v = decomp.eigenvectors();
        let rho = ComplexMatrix::from_fn(dim, |i, j| {
            (0..dim).map(|k| v.get(i, k) * v.get(j, k).conj() * spectrum[k]).sum()
        });
        Ok(Self { batteries, rho, spectrum })
    }

    pub fn batteries(&self) -> usize {
        self.batteries
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.rho
    }

    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    /// Diagonal entries, i.e. level populations in the computational basis.
    pub fn populations(&self) -> Vec<f64> {
        (0..self.rho.dim()).map(|i| self.rho.get(i, i).re).collect()
    }

    /// Largest off-diagonal magnitude.
    pub fn max_coherence(&self) -> f64 {
        let n = self.rho.dim();
        let mut m = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    m = m.max(self.rho.get(i, j).norm());
                }
            }
        }
        m
    }
}

/// `ρ_b[a, b] = Σ_c ψ[c, a] ψ*[c, b]`, summing over charger configurations.
pub fn reduce_to_battery(psi: &StateVector, sites: usize, batteries: usize) -> Result<BatteryDensityMatrix> {
    let m = 1usize << batteries;
    let dim = m << sites;
    if psi.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: psi.dim() });
    }
    let mut acc = vec![C64::new(0.0, 0.0); m * m];
    for block in psi.amplitudes().chunks_exact(m) {
        for (a, &x) in block.iter().enumerate() {
            if x == C64::new(0.0, 0.0) {
                continue;
            }
            for (b, &y) in block.iter().enumerate() {
                acc[a * m + b] += x * y.conj();
            }
        }
    }
    BatteryDensityMatrix::new(batteries, ComplexMatrix::from_row_major(m, &acc)?)
}

/// Diagonal battery Hamiltonian `-(δ/2) Σ Σᶻ_i` on the battery register.
#[derive(Clone, Debug, PartialEq)]
pub struct BatteryHamiltonian {
    batteries: usize,
    delta: f64,
}

impl BatteryHamiltonian {
    pub fn new(batteries: usize, delta: f64) -> Self {
        Self { batteries, delta }
    }

    pub fn from_spec(spec: &ModelSpec) -> Self {
        Self::new(spec.batteries, spec.delta)
    }

    pub fn batteries(&self) -> usize {
        self.batteries
    }

    /// Energy of battery basis state `a`: `-nδ/2 + δ · popcount(a)`.
    pub fn energy(&self, a: usize) -> f64 {
        -(self.batteries as f64) * self.delta / 2.0 + self.delta * a.count_ones() as f64
    }

    pub fn energies(&self) -> Vec<f64> {
        (0..1usize << self.batteries).map(|a| self.energy(a)).collect()
    }

    pub fn ground_energy(&self) -> f64 {
        -(self.batteries as f64) * self.delta / 2.0
    }

    fn check(&self, rho: &BatteryDensityMatrix) -> Result<()> {
        if rho.batteries != self.batteries {
            return Err(Error::DimensionMismatch { expected: self.batteries, found: rho.batteries });
        }
        Ok(())
    }
}

/// `tr(ρ H_b)`.
pub fn energy(rho: &BatteryDensityMatrix, hb: &BatteryHamiltonian) -> Result<f64> {
    hb.check(rho)?;
    Ok(rho.populations().iter().zip(hb.energies()).map(|(p, e)| p * e).sum())
}

/// Energy above the all-ground initial battery, `tr(ρ H_b) + nδ/2`.
pub fn stored_energy(rho: &BatteryDensityMatrix, hb: &BatteryHamiltonian) -> Result<f64> {
    hb.check(rho)?;
    // summed as excitation counts so an all-ground battery gives exactly 0
    Ok(rho.populations().iter().enumerate().map(|(a, p)| p * hb.delta * a.count_ones() as f64).sum())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ergotropy {
    pub ergotropy: f64,
    pub passive_energy: f64,
}

fn passive_energy(mut weights: Vec<f64>, hb: &BatteryHamiltonian) -> f64 {
    let mut levels = hb.energies();
    weights.sort_by(|a, b| b.total_cmp(a));
    levels.sort_by(f64::total_cmp);
    weights.iter().zip(&levels).map(|(w, e)| w * e).sum()
}

fn ergotropy_from(weights: Vec<f64>, rho: &BatteryDensityMatrix, hb: &BatteryHamiltonian) -> Result<Ergotropy> {
    let e = energy(rho, hb)?;
    let passive_energy = passive_energy(weights, hb);
    Ok(Ergotropy { ergotropy: (e - passive_energy).max(0.0), passive_energy })
}

/// Ergotropy from the eigenvalues of `ρ` paired descending against the
/// `H_b` levels ascending.
pub fn ergotropy(rho: &BatteryDensityMatrix, hb: &BatteryHamiltonian) -> Result<Ergotropy> {
    hb.check(rho)?;
    ergotropy_from(rho.spectrum.clone(), rho, hb)
}

/// Ergotropy from diagonal populations in the `H_b` eigenbasis.
pub fn ergotropy_populations(rho: &BatteryDensityMatrix, hb: &BatteryHamiltonian) -> Result<Ergotropy> {
    hb.check(rho)?;
    ergotropy_from(rho.populations(), rho, hb)
}

/// The passive state built from the spectrum of `ρ`, expressed as a
/// diagonal density matrix.
pub fn passive_state(rho: &BatteryDensityMatrix, hb: &BatteryHamiltonian) -> Result<BatteryDensityMatrix> {
    hb.check(rho)?;
    let mut weights = rho.spectrum.clone();
    weights.sort_by(|a, b| b.total_cmp(a));
    let mut order: Vec<usize> = (0..weights.len()).collect();
    let levels = hb.energies();
    order.sort_by(|&a, &b| levels[a].total_cmp(&levels[b]).then(a.cmp(&b)));
    let mut diag = vec![0.0; weights.len()];
    for (w, idx) in weights.into_iter().zip(order) {
        diag[idx] = w;
    }
    BatteryDensityMatrix::new(rho.batteries, ComplexMatrix::from_diagonal(&diag))
}

/// `1 - tr(ρ²)`.
pub fn linear_entropy(rho: &BatteryDensityMatrix) -> f64 {
    let m = &rho.rho;
    let n = m.dim();
    let mut purity = 0.0;
    for i in 0..n {
        for j in 0..n {
            purity += m.get(i, j).norm_sqr();
        }
    }
    1.0 - purity
}

/// `ΔE / t`, taking the `t → 0` limit of 0 at `t = 0`.
pub fn charging_power(stored_energy: f64, t: f64) -> Result<f64> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeTime(t));
    }
    Ok(if t == 0.0 { 0.0 } else { stored_energy / t })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeritRecord {
    pub t: f64,
    pub stored_energy: f64,
    /// Population-based ergotropy.
    pub ergotropy: f64,
    pub passive_energy: f64,
    /// Eigenvalue-based ergotropy, including battery coherences.
    pub coherent_ergotropy: f64,
    pub linear_entropy: f64,
    pub power: f64,
    /// `ΔE - ξ`.
    pub unavailable: f64,
}

pub fn merit_record(t: f64, psi: &StateVector, spec: &ModelSpec) -> Result<MeritRecord> {
    let rho = reduce_to_battery(psi, spec.sites, spec.batteries)?;
    merit_from_density(t, &rho, &BatteryHamiltonian::from_spec(spec))
}

pub fn merit_from_density(t: f64, rho: &BatteryDensityMatrix, hb: &BatteryHamiltonian) -> Result<MeritRecord> {
    let stored = stored_energy(rho, hb)?;
    let pop = ergotropy_populations(rho, hb)?;
    let coherent = ergotropy(rho, hb)?;
    Ok(MeritRecord {
        t,
        stored_energy: stored,
        ergotropy: pop.ergotropy,
        passive_energy: pop.passive_energy,
        coherent_ergotropy: coherent.ergotropy,
        linear_entropy: linear_entropy(rho),
        power: charging_power(stored, t)?,
        unavailable: stored - pop.ergotropy,
    })
}

/// Grid brackets around the edges of one interval of positive ergotropy.
/// `None` means the interval was already open at the first grid point (or
/// still open at the last one).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErgotropyWindow {
    pub opens: Option<(f64, f64)>,
    pub closes: Option<(f64, f64)>,
}

/// Ergotropy below this counts as zero for window detection.
pub const WINDOW_THRESHOLD: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct MeritSeries {
    pub records: Vec<MeritRecord>,
    pub argmax_stored_energy: f64,
    pub argmax_ergotropy: f64,
    pub argmax_power: f64,
    pub windows: Vec<ErgotropyWindow>,
}

impl MeritSeries {
    pub fn from_records(records: Vec<MeritRecord>) -> Self {
        let argmax = |f: fn(&MeritRecord) -> f64| {
            let mut best: Option<(f64, f64)> = None;
            for r in &records {
                let v = f(r);
                if best.is_none_or(|(bv, _)| v > bv) {
                    best = Some((v, r.t));
                }
            }
            best.map_or(f64::NAN, |(_, t)| t)
        };
        let argmax_stored_energy = argmax(|r| r.stored_energy);
        let argmax_ergotropy = argmax(|r| r.ergotropy);
        let argmax_power = argmax(|r| r.power);
        let windows = detect_windows(&records);
        Self { records, argmax_stored_energy, argmax_ergotropy, argmax_power, windows }
    }
}

fn detect_windows(records: &[MeritRecord]) -> Vec<ErgotropyWindow> {
    let mut windows = Vec::new();
    let mut open: Option<Option<(f64, f64)>> = None;
    for (k, r) in records.iter().enumerate() {
        let positive = r.ergotropy > WINDOW_THRESHOLD;
        match (open, positive) {
            (None, true) => {
                open = Some(if k == 0 { None } else { Some((records[k - 1].t, r.t)) });
            }
            (Some(opens), false) => {
                windows.push(ErgotropyWindow { opens, closes: Some((records[k - 1].t, r.t)) });
                open = None;
            }
            _ => {}
        }
    }
    if let Some(opens) = open {
        windows.push(ErgotropyWindow { opens, closes: None });
    }
    windows
}

pub fn merit_series(trajectory: &Trajectory, spec: &ModelSpec) -> Result<MeritSeries> {
    let records = trajectory
        .times
        .iter()
        .zip(&trajectory.states)
        .map(|(&t, psi)| merit_record(t, psi, spec))
        .collect::<Result<Vec<_>>>()?;
    Ok(MeritSeries::from_records(records))
}
