//! Initial states and exact time evolution.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, eigh_symmetric, SpectralDecomposition, C64};
use crate::model::{self, ModelSpec, ParitySector, PauliSum};

/// Allowed deviation of `‖ψ‖` from 1.
pub const NORM_TOL: f64 = 1e-10;

/// Normalized complex amplitude vector.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amps: Vec<C64>,
}

impl StateVector {
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        let norm = linalg::norm(&amps);
        if amps.is_empty() || !((norm - 1.0).abs() <= NORM_TOL) {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { amps })
    }

    /// Rescales `amps` to unit norm.
    pub fn normalized(mut amps: Vec<C64>) -> Result<Self> {
        let norm = linalg::norm(&amps);
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::NotNormalized { norm });
        }
        amps.iter_mut().for_each(|a| *a /= norm);
        Ok(Self { amps })
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(index < dim);
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[index] = C64::new(1.0, 0.0);
        Self { amps }
    }

    fn from_raw(amps: Vec<C64>) -> Self {
        Self { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        linalg::norm(&self.amps)
    }

    pub fn inner(&self, other: &StateVector) -> C64 {
        linalg::inner(&self.amps, &other.amps)
    }

    pub fn with_global_phase(&self, theta: f64) -> Self {
        let phase = C64::from_polar(1.0, theta);
        Self { amps: self.amps.iter().map(|a| a * phase).collect() }
    }
}

/// `(|+…+> + |−…−>)/√2` in the σᶻ basis.
pub fn ghz_plus(sites: usize) -> StateVector {
    cat_state(sites, 1.0)
}

/// `(|+…+> − |−…−>)/√2` in the σᶻ basis.
pub fn ghz_minus(sites: usize) -> StateVector {
    cat_state(sites, -1.0)
}

// |+…+> has amplitude 2^{-L/2} everywhere and |−…−> carries (−1)^{w(s)},
// so the cat keeps only one weight parity with amplitude √2 · 2^{-L/2}.
fn cat_state(sites: usize, sign: f64) -> StateVector {
    assert!((1..30).contains(&sites));
    let base = FRAC_1_SQRT_2 * 0.5f64.powf(sites as f64 / 2.0);
    let amps = (0..1u64 << sites)
        .map(|s| {
            let parity = if s.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            C64::new(base * (1.0 + sign * parity), 0.0)
        })
        .collect();
    StateVector::from_raw(amps)
}

/// Seeded random charger state: independent standard complex Gaussian
/// amplitudes from ChaCha8 via Box–Muller, then normalized.
pub fn random_charger(sites: usize, seed: u64) -> StateVector {
    assert!((1..30).contains(&sites));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amps: Vec<C64> = (0..1usize << sites)
        .map(|_| {
            let u1 = 1.0 - rng.random::<f64>();
            let u2: f64 = rng.random();
            let r = (-2.0 * u1.ln()).sqrt();
            let (s, c) = (TAU * u2).sin_cos();
            C64::new(r * c, r * s)
        })
        .collect();
    StateVector::normalized(amps).expect("Gaussian draw is non-zero")
}

/// `index`-th charger eigenstate (ascending energy) of `H_c` alone.
///
/// `H_c` conserves the charger Z-parity, so each eigenvector returned here
/// has definite parity even inside (near-)degenerate cat doublets. Ties in
/// energy are ordered even sector first.
pub fn charger_eigenstate(spec: &ModelSpec, index: usize) -> Result<StateVector> {
    let terms = model::charger_terms_local(spec)?;
    let dim = terms.dim();
    if index >= dim {
        return Err(Error::InvalidModel(format!("eigenstate index {index} outside [0, {dim})")));
    }
    let sectors = ParitySector::both(spec.sites);
    let decomps = sectors
        .iter()
        .map(|s| eigh_symmetric(terms.sector_matrix(s)?.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    let mut levels: Vec<(f64, usize, usize)> = decomps
        .iter()
        .enumerate()
        .flat_map(|(si, d)| d.eigenvalues().iter().enumerate().map(move |(k, &e)| (e, si, k)))
        .collect();
    levels.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let (_, si, k) = levels[index];
    let v = decomps[si].eigenvectors();
    let local: Vec<C64> = (0..v.dim()).map(|i| v.get(i, k)).collect();
    let mut amps = vec![C64::new(0.0, 0.0); dim];
    sectors[si].scatter(&local, &mut amps);
    StateVector::normalized(amps)
}

/// `|0…0>` on `batteries` qubits.
pub fn all_ground(batteries: usize) -> StateVector {
    StateVector::basis(1 << batteries, 0)
}

/// `charger ⊗ battery` under the composite bit convention.
pub fn compose(charger: &StateVector, battery: &StateVector) -> Result<StateVector> {
    for s in [charger, battery] {
        if !s.dim().is_power_of_two() {
            return Err(Error::DimensionMismatch { expected: s.dim().next_power_of_two(), found: s.dim() });
        }
    }
    let m = battery.dim();
    let mut amps = vec![C64::new(0.0, 0.0); charger.dim() * m];
    for (c, &ac) in charger.amps.iter().enumerate() {
        for (b, &ab) in battery.amps.iter().enumerate() {
            amps[c * m + b] = ac * ab;
        }
    }
    Ok(StateVector::from_raw(amps))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChargerKind {
    GhzPlus,
    GhzMinus,
    /// Charger eigenstate by ascending-energy index.
    Eigenstate(usize),
    /// Random state with the given seed.
    Random(u64),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatteryKind {
    #[default]
    AllGround,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialStateSpec {
    pub charger_kind: ChargerKind,
    #[serde(default)]
    pub battery_kind: BatteryKind,
}

impl InitialStateSpec {
    pub fn ghz_plus() -> Self {
        Self { charger_kind: ChargerKind::GhzPlus, battery_kind: BatteryKind::AllGround }
    }

    pub fn random(seed: u64) -> Self {
        Self { charger_kind: ChargerKind::Random(seed), battery_kind: BatteryKind::AllGround }
    }

    pub fn validate(&self, spec: &ModelSpec) -> Result<()> {
        if let ChargerKind::Eigenstate(index) = self.charger_kind {
            if index >= 1 << spec.sites {
                return Err(Error::InvalidConfig(format!(
                    "eigenstate index {index} outside [0, 2^{})",
                    spec.sites
                )));
            }
        }
        Ok(())
    }

    pub fn prepare(&self, spec: &ModelSpec) -> Result<StateVector> {
        spec.validate()?;
        self.validate(spec)?;
        let charger = match self.charger_kind {
            ChargerKind::GhzPlus => ghz_plus(spec.sites),
            ChargerKind::GhzMinus => ghz_minus(spec.sites),
            ChargerKind::Eigenstate(k) => charger_eigenstate(spec, k)?,
            ChargerKind::Random(seed) => random_charger(spec.sites, seed),
        };
        let battery = match self.battery_kind {
            BatteryKind::AllGround => all_ground(spec.batteries),
        };
        compose(&charger, &battery)
    }
}

/// Checks a time grid: non-empty, finite, strictly increasing, `t_0 >= 0`.
pub fn validate_times(times: &[f64]) -> Result<()> {
    let first = *times.first().ok_or_else(|| Error::InvalidGrid("empty time grid".into()))?;
    if !(first >= 0.0) {
        return Err(Error::InvalidGrid(format!("grid starts at {first}, expected t >= 0")));
    }
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidGrid("non-finite time".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid("grid must be strictly increasing".into()));
    }
    Ok(())
}

/// `steps` uniform points on `[t_start, t_end]`, both ends included.
pub fn uniform_grid(t_start: f64, t_end: f64, steps: usize) -> Result<Vec<f64>> {
    if steps < 2 || !(t_end > t_start) || !(t_start >= 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidGrid(format!(
            "need steps >= 2 and t_end > t_start >= 0 (got {steps}, [{t_start}, {t_end}])"
        )));
    }
    let dt = (t_end - t_start) / (steps - 1) as f64;
    Ok((0..steps).map(|k| if k + 1 == steps { t_end } else { t_start + k as f64 * dt }).collect())
}

struct Block {
    sector: Option<ParitySector>,
    decomp: SpectralDecomposition,
    coeffs: Vec<C64>,
}

/// `e^{-iHt} ψ₀` for a fixed Hamiltonian and initial state.
///
/// When `H` conserves Z-parity each sector is diagonalized separately and
/// sectors where `ψ₀` has no weight are skipped entirely.
pub struct Evolver {
    dim: usize,
    blocks: Vec<Block>,
}

impl Evolver {
    pub fn new(hamiltonian: &PauliSum, psi0: &StateVector) -> Result<Self> {
        let dim = hamiltonian.dim();
        if psi0.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: psi0.dim() });
        }
        let mut blocks = Vec::new();
        if hamiltonian.conserves_parity() {
            for sector in ParitySector::both(hamiltonian.qubits()) {
                let local = sector.gather(psi0.amplitudes());
                if local.iter().all(|a| *a == C64::new(0.0, 0.0)) {
                    continue;
                }
                let decomp = eigh_symmetric(hamiltonian.sector_matrix(&sector)?.as_ref())?;
                let coeffs = decomp.project(&local)?;
                blocks.push(Block { sector: Some(sector), decomp, coeffs });
            }
        } else {
            let dense = hamiltonian.to_dense();
            let decomp = eigh_symmetric(dense.real_part().as_ref())?;
            let coeffs = decomp.project(psi0.amplitudes())?;
            blocks.push(Block { sector: None, decomp, coeffs });
        }
        Ok(Self { dim, blocks })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Sizes of the blocks actually diagonalized.
    pub fn block_dims(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.decomp.dim()).collect()
    }

    pub fn states_at(&self, times: &[f64]) -> Result<Vec<StateVector>> {
        let mut out = vec![vec![C64::new(0.0, 0.0); self.dim]; times.len()];
        for block in &self.blocks {
            let evolved = block.decomp.propagate_coefficients(&block.coeffs, times)?;
            for (dst, src) in out.iter_mut().zip(evolved) {
                match &block.sector {
                    Some(sector) => sector.scatter(&src, dst),
                    None => dst.copy_from_slice(&src),
                }
            }
        }
        Ok(out.into_iter().map(StateVector::from_raw).collect())
    }

    pub fn state_at(&self, t: f64) -> Result<StateVector> {
        Ok(self.states_at(&[t])?.pop().expect("one time"))
    }
}

/// States on a time grid, paired with their times.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
}

/// `ψ(t_k) = e^{-iH t_k} ψ(0)` for the full sunburst Hamiltonian, one
/// spectral decomposition shared by the whole grid.
pub fn trajectory(spec: &ModelSpec, init: &InitialStateSpec, times: &[f64]) -> Result<Trajectory> {
    validate_times(times)?;
    let psi0 = init.prepare(spec)?;
    let evolver = Evolver::new(&model::total_terms(spec)?, &psi0)?;
    Ok(Trajectory { times: times.to_vec(), states: evolver.states_at(times)? })
}
