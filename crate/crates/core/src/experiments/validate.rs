//! Self-check suite: each check compares two independent routes to the
//! same quantity and reports `CHECK <name> PASS|FAIL <detail>`.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analytic::AnalyticParams;
use crate::dynamics::{random_charger, uniform_grid, Evolver, InitialStateSpec, StateVector};
use crate::linalg::{eigh, evolve_spectral, expectation, expm_series_oracle, norm, ComplexMatrix, C64};
use crate::model::{
    battery_terms, charger_terms, coupling_terms, total_terms, ModelSpec, ParitySector, PauliSum,
};
use crate::error::Result;
use crate::observables::reduce_to_battery;

use super::run_system;

/// Builds `V_cb` for a model. Swappable so tests can inject a broken one.
pub type CouplingBuilder = fn(&ModelSpec) -> Result<PauliSum>;

const SEED: u64 = 0x5eed;

type Check = fn(CouplingBuilder) -> Result<(bool, String)>;

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "CHECK {} {} {}", self.name, status, self.detail)
    }
}

#[derive(Clone, Debug, Default)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

pub fn cmd_validate() -> ValidationReport {
    cmd_validate_with(coupling_terms)
}

pub fn cmd_validate_with(coupling: CouplingBuilder) -> ValidationReport {
    let checks: [(&'static str, Check); 11] = [
        ("propagator_oracle", |_| propagator_oracle()),
        ("ground_energy_power_iteration", |_| ground_energy_power_iteration()),
        ("spectral_reconstruction", |_| spectral_reconstruction()),
        ("charger_commutator", charger_commutator),
        ("partial_trace_oracle", |_| partial_trace_oracle()),
        ("amplitude_normalization", |_| amplitude_normalization()),
        ("ergotropy_window", |_| ergotropy_window()),
        ("two_battery_analytic", |_| two_battery_analytic()),
        ("two_battery_exact_diagonalization", |_| two_battery_exact_diagonalization()),
        ("norm_energy_conservation", |_| norm_energy_conservation()),
        ("ergotropy_below_threshold", |_| ergotropy_below_threshold()),
    ];
    let checks = checks
        .into_iter()
        .map(|(name, check)| match check(coupling) {
            Ok((passed, detail)) => CheckResult { name, passed, detail },
            Err(e) => CheckResult { name, passed: false, detail: format!("error={e}") },
        })
        .collect();
    ValidationReport { checks }
}

fn verdict(value: f64, tol: f64, what: &str) -> (bool, String) {
    (value <= tol, format!("{what}={value:.3e} tol={tol:.0e}"))
}

fn max_diff(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn random_hermitian(rng: &mut ChaCha8Rng, dim: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(dim);
    for i in 0..dim {
        m.set(i, i, C64::new(rng.random_range(-1.0..1.0), 0.0));
        for j in i + 1..dim {
            let z = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            m.set(i, j, z);
            m.set(j, i, z.conj());
        }
    }
    m
}

fn propagator_oracle() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    let spec = ModelSpec::reference(3, 1);
    let sunburst = total_terms(&spec)?.to_dense();
    let random = random_hermitian(&mut rng, 24);
    for h in [sunburst, random] {
        let decomp = eigh(&h)?;
        let psi = StateVector::normalized(
            (0..h.dim()).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect(),
        )?;
        for t in [0.1, 0.7, 1.5] {
            let fast = evolve_spectral(&decomp, psi.amplitudes(), t)?;
            let slow = expm_series_oracle(&h, psi.amplitudes(), t)?;
            worst = worst.max(max_diff(&fast, &slow));
        }
    }
    Ok(verdict(worst, 1e-8, "max_diff"))
}

// Lowest eigenvalue of each parity block by power iteration on `cI - H`.
fn power_iteration_ground(h: &PauliSum) -> Result<f64> {
    let shift: f64 = h.terms().iter().map(|t| t.coeff.abs()).sum();
    let mut best = f64::INFINITY;
    for sector in ParitySector::both(h.qubits()) {
        let mut v = vec![C64::new(0.0, 0.0); h.dim()];
        for (k, &b) in sector.states().iter().enumerate() {
            v[b as usize] = C64::new(1.0 + (k as f64 * 0.37).sin(), 0.0);
        }
        let mut energy = 0.0;
        for _ in 0..20_000 {
            let hv = h.apply(&v)?;
            energy = v.iter().zip(&hv).map(|(a, b)| (a.conj() * b).re).sum::<f64>()
                / v.iter().map(|a| a.norm_sqr()).sum::<f64>();
            let next: Vec<C64> = v.iter().zip(&hv).map(|(a, b)| a * shift - b).collect();
            let n = norm(&next);
            v = next.into_iter().map(|a| a / n).collect();
        }
        best = best.min(energy);
    }
    Ok(best)
}

fn ground_energy_power_iteration() -> Result<(bool, String)> {
    let h = total_terms(&ModelSpec::reference(4, 1))?;
    let exact = eigh(&h.to_dense())?.eigenvalues()[0];
    let iterated = power_iteration_ground(&h)?;
    let (ok, detail) = verdict((exact - iterated).abs(), 1e-8, "diff");
    Ok((ok, format!("E0={exact:.12} {detail}")))
}

fn spectral_reconstruction() -> Result<(bool, String)> {
    let h = total_terms(&ModelSpec::reference(4, 2))?.to_dense();
    let decomp = eigh(&h)?;
    let err = decomp.reconstruct().sub(&h)?.max_abs() / h.max_abs();
    let v = decomp.eigenvectors();
    let ortho = v.adjoint().matmul(&v)?.sub(&ComplexMatrix::identity(v.dim()))?.max_abs();
    let ok = err <= 1e-9 && ortho <= 1e-10;
    Ok((ok, format!("reconstruction={err:.3e} orthonormality={ortho:.3e}")))
}

fn charger_commutator(coupling: CouplingBuilder) -> Result<(bool, String)> {
    let spec = ModelSpec::reference(4, 2).with_h(0.0);
    let hc = charger_terms(&spec)?.to_dense();
    let rest = battery_terms(&spec)?.to_dense().add(&coupling(&spec)?.to_dense())?;
    let c = hc.commutator(&rest)?.max_abs();
    Ok(verdict(c, 1e-10, "max_abs"))
}

// Partial trace by explicit per-qubit bit strings.
fn naive_partial_trace(psi: &[C64], spec: &ModelSpec) -> ComplexMatrix {
    let (l, n) = (spec.sites, spec.batteries);
    let index = |charger: &[usize], battery: &[usize]| {
        let mut k = 0usize;
        for site in 1..=l {
            k |= charger[site - 1] << spec.charger_bit(site);
        }
        for i in 1..=n {
            k |= battery[i - 1] << spec.battery_bit(i);
        }
        k
    };
    let bits = |value: usize, width: usize| (0..width).map(|q| (value >> (width - 1 - q)) & 1).collect::<Vec<_>>();
    let mut rho = ComplexMatrix::zeros(1 << n);
    for a in 0..1 << n {
        for b in 0..1 << n {
            let mut sum = C64::new(0.0, 0.0);
            for c in 0..1 << l {
                let cb = bits(c, l);
                sum += psi[index(&cb, &bits(a, n))] * psi[index(&cb, &bits(b, n))].conj();
            }
            rho.set(a, b, sum);
        }
    }
    rho
}

fn partial_trace_oracle() -> Result<(bool, String)> {
    let spec = ModelSpec::reference(3, 2).with_spacing(1);
    let charger = random_charger(spec.qubits(), SEED);
    let fast = reduce_to_battery(&charger, spec.sites, spec.batteries)?;
    let slow = naive_partial_trace(charger.amplitudes(), &spec);
    Ok(verdict(fast.matrix().sub(&slow)?.max_abs(), 1e-12, "max_diff"))
}

fn random_params(rng: &mut ChaCha8Rng) -> Result<AnalyticParams> {
    AnalyticParams::new(rng.random_range(0.05..2.0), rng.random_range(0.0..5.0))
}

fn amplitude_normalization() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    for _ in 0..500 {
        let p = random_params(&mut rng)?;
        let (a, b) = p.amplitudes(rng.random_range(0.0..20.0));
        worst = worst.max((a.norm_sqr() + b.norm_sqr() - 1.0).abs());
    }
    Ok(verdict(worst, 1e-12, "max_defect"))
}

fn ergotropy_window() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let delta = rng.random_range(0.05..2.0);
        let kappa = rng.random_range(0.51 * delta..5.0);
        let p = AnalyticParams::new(delta, kappa)?;
        let (t1, t2) = p.window_times().expect("2κ > δ opens a window");
        let t_charge = p.charging_time()?;
        worst = worst.max((t1 + t2 - 2.0 * t_charge).abs());
        worst = worst.max(p.ergotropy(t1).abs()).max(p.ergotropy(t2).abs());
        let t = rng.random_range(t1..t2);
        worst = worst.max((p.stored_energy(t) - p.ergotropy(t) - p.unavailable(t)).abs());
    }
    Ok(verdict(worst, 1e-9, "max_defect"))
}

fn two_battery_analytic() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let p = AnalyticParams::new(0.5, 2.0)?;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let t = rng.random_range(0.0..10.0);
        let two = p.two_battery(t);
        worst = worst
            .max((two.ergotropy - 2.0 * p.ergotropy(t)).abs())
            .max((two.stored_energy - 2.0 * p.stored_energy(t)).abs())
            .max((two.lambda1 - two.lambda1_from_amplitudes()).abs());
    }
    Ok(verdict(worst, 1e-12, "max_defect"))
}

fn two_battery_exact_diagonalization() -> Result<(bool, String)> {
    let spec = ModelSpec::reference(10, 2);
    let p = AnalyticParams::new(spec.delta, spec.kappa)?;
    let times = uniform_grid(0.0, 2.0, 400)?;
    let series = run_system(&spec, &InitialStateSpec::ghz_plus(), &times)?;
    let worst = series
        .records
        .iter()
        .map(|r| (r.ergotropy - 2.0 * p.ergotropy(r.t)).abs().max((r.stored_energy - 2.0 * p.stored_energy(r.t)).abs()))
        .fold(0.0, f64::max);
    Ok(verdict(worst, 0.05, "max_dev"))
}

fn norm_energy_conservation() -> Result<(bool, String)> {
    let spec = ModelSpec::reference(5, 1);
    let terms = total_terms(&spec)?;
    let h = terms.to_dense();
    let psi0 = InitialStateSpec::random(SEED).prepare(&spec)?;
    let e0 = expectation(&h, psi0.amplitudes())?;
    let evolver = Evolver::new(&terms, &psi0)?;
    let (mut dn, mut de) = (0.0f64, 0.0f64);
    for psi in evolver.states_at(&uniform_grid(0.0, 5.0, 50)?)? {
        dn = dn.max((psi.norm() - 1.0).abs());
        de = de.max((expectation(&h, psi.amplitudes())? - e0).abs());
    }
    Ok((dn <= 1e-9 && de <= 1e-9, format!("norm_drift={dn:.3e} energy_drift={de:.3e} tol=1e-9")))
}

fn ergotropy_below_threshold() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let delta = rng.random_range(0.05..2.0);
        let p = AnalyticParams::new(delta, rng.random_range(0.0..0.499 * delta))?;
        worst = worst.max(p.ergotropy(rng.random_range(0.0..50.0)));
    }
    let spec = ModelSpec::reference(4, 1).with_kappa(0.1);
    let series = run_system(&spec, &InitialStateSpec::ghz_plus(), &uniform_grid(0.0, 20.0, 400)?)?;
    let numeric = series.records.iter().map(|r| r.ergotropy).fold(0.0, f64::max);
    Ok(((worst == 0.0) && numeric <= 1e-9, format!("analytic_max={worst:.3e} numeric_max={numeric:.3e}")))
}
