//! Sunburst Hamiltonian: a periodic transverse-field Ising ring (the
//! charger) with `n` battery qubits hanging off equispaced ring sites.
//!
//! ```text
//! H   = H_c + H_b + V_cb
//! H_c = -Σ_i (J σˣ_i σˣ_{i+1} + h σᶻ_i)      i = 1..L, σ_{L+1} = σ_1
//! H_b = -(δ/2) Σ_i Σᶻ_i                       i = 1..n
//! V   = -κ Σ_i σˣ_{1+(i-1)d} Σˣ_i
//! ```
//!
//! Basis convention: a composite basis index is `(charger bits) << n |
//! (battery bits)`. Charger site `i` (1-based) is bit `L - i` of the charger
//! block and battery `i` is bit `n - i` of the battery block, so the
//! all-ground battery is battery index 0 and tracing out the charger is a
//! strided sum. `σˣ` flips a bit and `σᶻ` multiplies by `(-1)^bit`.
//!
//! Every term is a real product of X and Z factors, so operators are built
//! as a [`PauliSum`] and only densified on demand. All terms flip an even
//! number of bits, which makes total Z-parity a conserved quantity; the
//! dynamics layer uses that to diagonalize two half-size blocks.

use std::fmt;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64, HERMITIAN_TOL};

/// Largest `L + n` accepted by [`ModelSpec::validate`].
pub const MAX_QUBITS: usize = 14;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    /// Charger ring length.
    #[serde(rename = "L")]
    pub sites: usize,
    /// Number of battery qubits.
    #[serde(rename = "n")]
    pub batteries: usize,
    /// Ring distance between consecutive attachment sites; defaults to
    /// `L / n` when that division is exact.
    #[serde(rename = "d", default, skip_serializing_if = "Option::is_none")]
    pub spacing: Option<usize>,
    #[serde(rename = "J")]
    pub j: f64,
    pub h: f64,
    pub delta: f64,
    pub kappa: f64,
}

impl ModelSpec {
    pub fn new(sites: usize, batteries: usize, j: f64, h: f64, delta: f64, kappa: f64) -> Self {
        Self { sites, batteries, spacing: None, j, h, delta, kappa }
    }

    /// `J = 1, h = 0.1, δ = 0.5, κ = 2`, the parameter set used for all the
    /// reference figures.
    pub fn reference(sites: usize, batteries: usize) -> Self {
        Self::new(sites, batteries, 1.0, 0.1, 0.5, 2.0)
    }

    pub fn with_spacing(mut self, d: usize) -> Self {
        self.spacing = Some(d);
        self
    }

    pub fn with_h(mut self, h: f64) -> Self {
        self.h = h;
        self
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn qubits(&self) -> usize {
        self.sites + self.batteries
    }

    pub fn dim(&self) -> usize {
        1 << self.qubits()
    }

    /// Effective battery spacing.
    pub fn resolved_spacing(&self) -> Result<usize> {
        match (self.spacing, self.batteries) {
            (Some(d), _) => Ok(d),
            (None, 0) => Ok(1),
            (None, n) if self.sites.is_multiple_of(n) => Ok(self.sites / n),
            (None, n) => Err(Error::InvalidModel(format!(
                "L = {} is not a multiple of n = {n}; spacing d must be given",
                self.sites
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidModel(msg));
        if self.sites < 2 {
            return bad(format!("ring needs L >= 2, got {}", self.sites));
        }
        if self.qubits() > MAX_QUBITS {
            return bad(format!("L + n = {} exceeds the dense limit {MAX_QUBITS}", self.qubits()));
        }
        if !(self.j.is_finite() && self.j > 0.0) {
            return bad(format!("J must be positive, got {}", self.j));
        }
        for (name, v) in [("h", self.h), ("delta", self.delta), ("kappa", self.kappa)] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be finite and non-negative, got {v}"));
            }
        }
        let d = self.resolved_spacing()?;
        if d == 0 {
            return bad("spacing d must be at least 1".into());
        }
        if self.batteries * d > self.sites {
            return bad(format!("n * d = {} exceeds L = {}", self.batteries * d, self.sites));
        }
        let mut sites = attachment_sites(self.sites, self.batteries, d);
        sites.sort_unstable();
        if sites.windows(2).any(|w| w[0] == w[1]) {
            return bad("battery attachment sites are not distinct".into());
        }
        Ok(())
    }

    /// Bit index of charger site `site` (1-based) in the composite basis.
    pub fn charger_bit(&self, site: usize) -> usize {
        debug_assert!((1..=self.sites).contains(&site));
        self.batteries + self.sites - site
    }

    /// Bit index of battery `i` (1-based) in the composite basis.
    pub fn battery_bit(&self, i: usize) -> usize {
        debug_assert!((1..=self.batteries).contains(&i));
        self.batteries - i
    }
}

fn attachment_sites(sites: usize, batteries: usize, d: usize) -> Vec<usize> {
    (0..batteries).map(|i| (i * d) % sites + 1).collect()
}

/// Charger sites (1-based) that batteries `1..=n` couple to.
pub fn battery_positions(spec: &ModelSpec) -> Result<Vec<usize>> {
    spec.validate()?;
    Ok(attachment_sites(spec.sites, spec.batteries, spec.resolved_spacing()?))
}

/// Real product of Pauli X and Z factors on disjoint qubits.
///
/// On a basis state `|b>` it acts as `coeff · (-1)^{popcount(b & phase)} |b ^ flip>`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PauliTerm {
    pub coeff: f64,
    pub flip: u64,
    pub phase: u64,
}

impl PauliTerm {
    #[inline]
    pub fn act(&self, basis: u64) -> (u64, f64) {
        let sign = if (basis & self.phase).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
        (basis ^ self.flip, sign * self.coeff)
    }
}

/// Sum of [`PauliTerm`]s on a fixed number of qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliSum {
    qubits: usize,
    terms: Vec<PauliTerm>,
}

impl PauliSum {
    pub fn new(qubits: usize) -> Self {
        assert!(qubits < 64);
        Self { qubits, terms: Vec::new() }
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.qubits
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    /// Adds a term. X and Z on the same qubit would make the term
    /// anti-Hermitian, so overlapping masks are refused.
    pub fn push(&mut self, term: PauliTerm) -> Result<()> {
        let range = if self.qubits == 0 { 0 } else { u64::MAX >> (64 - self.qubits) };
        if (term.flip | term.phase) & !range != 0 {
            return Err(Error::InvalidModel("Pauli term acts outside the register".into()));
        }
        if term.flip & term.phase != 0 {
            return Err(Error::InvalidModel("X and Z on the same qubit in one term".into()));
        }
        if term.coeff != 0.0 {
            self.terms.push(term);
        }
        Ok(())
    }

    pub fn extend(&mut self, other: &PauliSum) -> Result<()> {
        if other.qubits != self.qubits {
            return Err(Error::DimensionMismatch { expected: self.qubits, found: other.qubits });
        }
        self.terms.extend_from_slice(&other.terms);
        Ok(())
    }

    /// Re-labels this operator as acting on the high qubits of a larger
    /// register (low `shift` qubits untouched).
    pub fn embed(&self, shift: usize, qubits: usize) -> Result<PauliSum> {
        let mut out = PauliSum::new(qubits);
        for t in &self.terms {
            out.push(PauliTerm { coeff: t.coeff, flip: t.flip << shift, phase: t.phase << shift })?;
        }
        Ok(out)
    }

    /// True when every term flips an even number of bits.
    pub fn conserves_parity(&self) -> bool {
        self.terms.iter().all(|t| t.flip.count_ones() % 2 == 0)
    }

    /// Matrix-free `H psi`.
    pub fn apply(&self, psi: &[C64]) -> Result<Vec<C64>> {
        if psi.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: psi.len() });
        }
        let mut out = vec![C64::new(0.0, 0.0); psi.len()];
        for (b, &amp) in psi.iter().enumerate() {
            for t in &self.terms {
                let (target, v) = t.act(b as u64);
                out[target as usize] += amp * v;
            }
        }
        Ok(out)
    }

    pub fn to_dense(&self) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(self.dim());
        for b in 0..self.dim() {
            for t in &self.terms {
                let (target, v) = t.act(b as u64);
                m.add_at(target as usize, b, C64::new(v, 0.0));
            }
        }
        m
    }

    /// Real block of the operator restricted to one parity sector.
    pub fn sector_matrix(&self, sector: &ParitySector) -> Result<Mat<f64>> {
        if sector.qubits != self.qubits {
            return Err(Error::DimensionMismatch { expected: self.qubits, found: sector.qubits });
        }
        if !self.conserves_parity() {
            return Err(Error::InvalidModel("operator does not conserve Z-parity".into()));
        }
        let m = sector.len();
        let mut out = Mat::<f64>::zeros(m, m);
        for (col, &b) in sector.states.iter().enumerate() {
            for t in &self.terms {
                let (target, v) = t.act(b);
                out[(sector.position(target), col)] += v;
            }
        }
        Ok(out)
    }
}

/// Basis states of fixed Z-parity, `popcount(b) mod 2 == parity`.
#[derive(Clone, Debug)]
pub struct ParitySector {
    qubits: usize,
    parity: u32,
    states: Vec<u64>,
}

impl ParitySector {
    pub fn new(qubits: usize, parity: u32) -> Self {
        let parity = parity % 2;
        let states = (0..1u64 << qubits).filter(|b| b.count_ones() % 2 == parity).collect();
        Self { qubits, parity, states }
    }

    /// Both sectors, even first.
    pub fn both(qubits: usize) -> [ParitySector; 2] {
        [Self::new(qubits, 0), Self::new(qubits, 1)]
    }

    pub fn parity(&self) -> u32 {
        self.parity
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[u64] {
        &self.states
    }

    /// Position of `basis` within this sector. Within a parity class the
    /// states are ordered, and `b >> 1` enumerates them one to one.
    #[inline]
    pub fn position(&self, basis: u64) -> usize {
        debug_assert_eq!(basis.count_ones() % 2, self.parity);
        (basis >> 1) as usize
    }

    /// Gathers the sector amplitudes of a full-space vector.
    pub fn gather(&self, psi: &[C64]) -> Vec<C64> {
        self.states.iter().map(|&b| psi[b as usize]).collect()
    }

    /// Writes sector amplitudes back into a full-space vector.
    pub fn scatter(&self, amps: &[C64], out: &mut [C64]) {
        for (&b, &a) in self.states.iter().zip(amps) {
            out[b as usize] = a;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorLabel {
    Charger,
    Batteries,
    Coupling,
    Total,
}

impl fmt::Display for OperatorLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OperatorLabel::Charger => "H_c",
            OperatorLabel::Batteries => "H_b",
            OperatorLabel::Coupling => "V_cb",
            OperatorLabel::Total => "H_total",
        })
    }
}

/// Dense Hermitian operator on the full composite space.
#[derive(Clone, Debug)]
pub struct HermitianOperator {
    label: OperatorLabel,
    matrix: ComplexMatrix,
}

impl HermitianOperator {
    pub fn new(label: OperatorLabel, matrix: ComplexMatrix) -> Result<Self> {
        let defect = matrix.hermitian_defect();
        if !(defect <= HERMITIAN_TOL) {
            return Err(Error::NotHermitian { max_asymmetry: defect });
        }
        Ok(Self { label, matrix })
    }

    pub fn label(&self) -> OperatorLabel {
        self.label
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }
}

/// `H_c` on an `L`-qubit register (site `i` at bit `L - i`).
pub fn charger_terms_local(spec: &ModelSpec) -> Result<PauliSum> {
    spec.validate()?;
    let l = spec.sites;
    let bit = |site: usize| 1u64 << (l - site);
    let mut sum = PauliSum::new(l);
    for i in 1..=l {
        let next = i % l + 1;
        sum.push(PauliTerm { coeff: -spec.j, flip: bit(i) | bit(next), phase: 0 })?;
    }
    for i in 1..=l {
        sum.push(PauliTerm { coeff: -spec.h, flip: 0, phase: bit(i) })?;
    }
    Ok(sum)
}

pub fn charger_terms(spec: &ModelSpec) -> Result<PauliSum> {
    charger_terms_local(spec)?.embed(spec.batteries, spec.qubits())
}

pub fn battery_terms(spec: &ModelSpec) -> Result<PauliSum> {
    spec.validate()?;
    let mut sum = PauliSum::new(spec.qubits());
    for i in 1..=spec.batteries {
        sum.push(PauliTerm { coeff: -spec.delta / 2.0, flip: 0, phase: 1 << spec.battery_bit(i) })?;
    }
    Ok(sum)
}

pub fn coupling_terms(spec: &ModelSpec) -> Result<PauliSum> {
    let mut sum = PauliSum::new(spec.qubits());
    for (i, site) in battery_positions(spec)?.into_iter().enumerate() {
        let flip = (1 << spec.charger_bit(site)) | (1 << spec.battery_bit(i + 1));
        sum.push(PauliTerm { coeff: -spec.kappa, flip, phase: 0 })?;
    }
    Ok(sum)
}

pub fn total_terms(spec: &ModelSpec) -> Result<PauliSum> {
    let mut sum = charger_terms(spec)?;
    sum.extend(&battery_terms(spec)?)?;
    sum.extend(&coupling_terms(spec)?)?;
    Ok(sum)
}

pub fn build_charger(spec: &ModelSpec) -> Result<HermitianOperator> {
    HermitianOperator::new(OperatorLabel::Charger, charger_terms(spec)?.to_dense())
}

pub fn build_batteries(spec: &ModelSpec) -> Result<HermitianOperator> {
    HermitianOperator::new(OperatorLabel::Batteries, battery_terms(spec)?.to_dense())
}

pub fn build_coupling(spec: &ModelSpec) -> Result<HermitianOperator> {
    HermitianOperator::new(OperatorLabel::Coupling, coupling_terms(spec)?.to_dense())
}

pub fn build_total(spec: &ModelSpec) -> Result<HermitianOperator> {
    HermitianOperator::new(OperatorLabel::Total, total_terms(spec)?.to_dense())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::eigh;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn positions_match_equispaced_layouts() {
        assert_eq!(battery_positions(&ModelSpec::reference(11, 1)).unwrap(), vec![1]);
        assert_eq!(battery_positions(&ModelSpec::reference(10, 2)).unwrap(), vec![1, 6]);
        assert_eq!(battery_positions(&ModelSpec::reference(9, 3)).unwrap(), vec![1, 4, 7]);
        assert_eq!(battery_positions(&ModelSpec::reference(8, 4)).unwrap(), vec![1, 3, 5, 7]);
        assert_eq!(battery_positions(&ModelSpec::reference(8, 3).with_spacing(2)).unwrap(), vec![1, 3, 5]);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let bad = [
            ModelSpec::reference(1, 0),
            ModelSpec::reference(10, 3),
            ModelSpec::reference(8, 3).with_spacing(3),
            ModelSpec::reference(8, 2).with_spacing(0),
            ModelSpec::new(4, 1, 0.0, 0.1, 0.5, 2.0),
            ModelSpec::new(4, 1, 1.0, -0.1, 0.5, 2.0),
            ModelSpec::new(4, 1, 1.0, 0.1, f64::NAN, 2.0),
            ModelSpec::reference(14, 1),
        ];
        for spec in bad {
            assert!(spec.validate().is_err(), "{spec:?} should be invalid");
        }
        assert!(ModelSpec::reference(4, 0).validate().is_ok());
    }

    #[test]
    fn two_site_ring_counts_its_bond_twice() {
        let spec = ModelSpec::new(2, 0, 1.0, 0.0, 0.5, 2.0);
        let hc = build_charger(&spec).unwrap();
        let d = eigh(hc.matrix()).unwrap();
        assert!((d.eigenvalues()[0] + 2.0).abs() < 1e-14);
        // -2 σx σx on two qubits: anti-diagonal of -2
        for b in 0..4 {
            assert_eq!(hc.matrix().get(3 - b, b), c(-2.0));
        }
    }

    #[test]
    fn battery_hamiltonian_diagonal() {
        let h1 = build_batteries(&ModelSpec::reference(2, 1)).unwrap();
        // battery factor is the lowest bit
        assert_eq!(h1.matrix().get(0, 0), c(-0.25));
        assert_eq!(h1.matrix().get(1, 1), c(0.25));

        let h2 = build_batteries(&ModelSpec::reference(2, 2).with_spacing(1)).unwrap();
        let diag: Vec<f64> = (0..4).map(|i| h2.matrix().get(i, i).re).collect();
        assert_eq!(diag, vec![-0.5, 0.0, 0.0, 0.5]);
        assert!(h2.matrix().sub(&ComplexMatrix::from_diagonal(&(0..16).map(|i| h2.matrix().get(i, i).re).collect::<Vec<_>>())).unwrap().max_abs() == 0.0);

        let h0 = build_batteries(&ModelSpec::reference(3, 0)).unwrap();
        assert_eq!(h0.matrix().max_abs(), 0.0);
    }

    #[test]
    fn coupling_matches_hand_built_matrix() {
        let spec = ModelSpec::new(2, 1, 1.0, 0.1, 0.5, 2.0);
        let v = build_coupling(&spec).unwrap();
        // -κ σx_1 ⊗ I_2 ⊗ Σx: bits (site1, site2, battery) = (2, 1, 0)
        let mut expected = ComplexMatrix::zeros(8);
        for b in 0..8usize {
            expected.set(b ^ 0b101, b, c(-2.0));
        }
        assert_eq!(v.matrix(), &expected);
        assert_eq!(build_coupling(&spec.clone().with_kappa(0.0)).unwrap().matrix().max_abs(), 0.0);
    }

    #[test]
    fn decoupled_field_free_model_commutes_with_x_and_battery_z() {
        let spec = ModelSpec::new(3, 1, 1.0, 0.0, 0.5, 0.0);
        let h = build_total(&spec).unwrap();
        for site in 1..=3 {
            let mut x = PauliSum::new(4);
            x.push(PauliTerm { coeff: 1.0, flip: 1 << spec.charger_bit(site), phase: 0 }).unwrap();
            assert_eq!(h.matrix().commutator(&x.to_dense()).unwrap().max_abs(), 0.0);
        }
        let mut z = PauliSum::new(4);
        z.push(PauliTerm { coeff: 1.0, flip: 0, phase: 1 }).unwrap();
        assert_eq!(h.matrix().commutator(&z.to_dense()).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn charger_commutes_with_battery_part_at_zero_field() {
        let spec = ModelSpec::new(4, 2, 1.0, 0.0, 0.5, 2.0);
        let hc = build_charger(&spec).unwrap();
        let rest = build_batteries(&spec).unwrap().matrix().add(build_coupling(&spec).unwrap().matrix()).unwrap();
        assert!(hc.matrix().commutator(&rest).unwrap().max_abs() <= 1e-10);
        let hc = build_charger(&spec.with_h(0.1)).unwrap();
        assert!(hc.matrix().commutator(&rest).unwrap().max_abs() > 1e-3);
    }

    #[test]
    fn total_operator_is_traceless() {
        let h = build_total(&ModelSpec::reference(11, 1)).unwrap();
        assert_eq!(h.dim(), 4096);
        assert!(h.matrix().trace().norm() < 1e-12);
    }

    #[test]
    fn sector_blocks_reassemble_full_operator() {
        let spec = ModelSpec::reference(4, 2);
        let terms = total_terms(&spec).unwrap();
        assert!(terms.conserves_parity());
        let dense = terms.to_dense();
        for sector in ParitySector::both(spec.qubits()) {
            let block = terms.sector_matrix(&sector).unwrap();
            for (i, &a) in sector.states().iter().enumerate() {
                assert_eq!(sector.position(a), i);
                for (j, &b) in sector.states().iter().enumerate() {
                    assert_eq!(block[(i, j)], dense.get(a as usize, b as usize).re);
                }
            }
        }
    }

    #[test]
    fn overlapping_x_and_z_rejected() {
        let mut s = PauliSum::new(3);
        assert!(s.push(PauliTerm { coeff: 1.0, flip: 0b1, phase: 0b1 }).is_err());
        assert!(s.push(PauliTerm { coeff: 1.0, flip: 0b1000, phase: 0 }).is_err());
        let mut odd = PauliSum::new(3);
        odd.push(PauliTerm { coeff: 1.0, flip: 0b1, phase: 0 }).unwrap();
        assert!(odd.sector_matrix(&ParitySector::new(3, 0)).is_err());
    }
}
