//! Experiment runner: JSON configs in, CSV time series out.
//!
//! Every energy-type column (`dE`, `xi`, `P`) is per battery, i.e. divided
//! by `n`, so that systems of different size share one axis. Analytic
//! columns exist only where a closed form does: `n = 1` for all four
//! quantities, `n = 2` for everything except `SL`.

mod validate;

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::AnalyticParams;
use crate::dynamics::{uniform_grid, Evolver, InitialStateSpec};
use crate::error::{Error, Result};
use crate::model::{total_terms, ModelSpec};
use crate::observables::{merit_record, MeritRecord, MeritSeries};

pub use validate::{cmd_validate, cmd_validate_with, CheckResult, CouplingBuilder, ValidationReport};

/// κ values for the coupling sweep when the config has none.
pub const DEFAULT_KAPPAS: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];

/// `(L, n)` pairs with `L + n = 12` used by the scaling figures.
pub const SCALING_SYSTEMS: [(usize, usize); 4] = [(11, 1), (10, 2), (9, 3), (8, 4)];

/// Number of random charger realizations.
pub const REALIZATIONS: u64 = 3;

pub const CSV_HEADER: &str = "t,dE_num,xi_num,SL_num,P_num,dE_ana,xi_ana,SL_ana,P_ana,n,L,kappa,seed";

// time points propagated per GEMM
const CHUNK: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub t_start: f64,
    pub t_end: f64,
    pub steps: usize,
}

impl GridSpec {
    pub fn times(&self) -> Result<Vec<f64>> {
        uniform_grid(self.t_start, self.t_end, self.steps)
    }

    pub fn step(&self) -> f64 {
        (self.t_end - self.t_start) / (self.steps - 1) as f64
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { t_start: 0.0, t_end: 2.0, steps: 2000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParameter {
    Kappa,
    N,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub initial: InitialStateSpec,
    pub grid: GridSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    pub seed: u64,
    pub output_path: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: ModelSpec::reference(11, 1),
            initial: InitialStateSpec::ghz_plus(),
            grid: GridSpec::default(),
            sweep: None,
            seed: 0,
            output_path: PathBuf::from("sunburst.csv"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.initial.validate(&self.model)?;
        self.grid.times()?;
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err(Error::InvalidConfig("sweep has no values".into()));
            }
            for &v in &sweep.values {
                self.sweep_variant(sweep.parameter, v)?;
            }
        }
        Ok(())
    }

    /// Sets the seed, and the charger seed too when the charger is random.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        if let crate::dynamics::ChargerKind::Random(_) = self.initial.charger_kind {
            self.initial = InitialStateSpec::random(seed);
        }
        self
    }

    pub fn with_h(mut self, h: f64) -> Self {
        self.model.h = h;
        self
    }

    fn sweep_variant(&self, parameter: SweepParameter, value: f64) -> Result<ModelSpec> {
        let spec = match parameter {
            SweepParameter::Kappa => {
                if !(value.is_finite() && value >= 0.0) {
                    return Err(Error::InvalidConfig(format!("kappa = {value}")));
                }
                self.model.clone().with_kappa(value)
            }
            SweepParameter::N => {
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(Error::InvalidConfig(format!("n = {value} is not a positive integer")));
                }
                ModelSpec { batteries: value as usize, ..self.model.clone() }
            }
        };
        spec.validate()?;
        self.initial.validate(&spec)?;
        Ok(spec)
    }

    /// The model with `(L, n)` replaced and the spacing reset to its default.
    fn system(&self, sites: usize, batteries: usize) -> ModelSpec {
        ModelSpec { sites, batteries, spacing: None, ..self.model.clone() }
    }
}

/// One output line. Absent values are written as empty fields.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CsvRow {
    pub t: f64,
    pub de_num: Option<f64>,
    pub xi_num: Option<f64>,
    pub sl_num: Option<f64>,
    pub p_num: Option<f64>,
    pub de_ana: Option<f64>,
    pub xi_ana: Option<f64>,
    pub sl_ana: Option<f64>,
    pub p_ana: Option<f64>,
    pub n: usize,
    pub l: usize,
    pub kappa: f64,
    pub seed: u64,
}

fn float(out: &mut String, v: f64) {
    write!(out, "{v:.16e}").unwrap();
}

fn opt(out: &mut String, v: Option<f64>) {
    if let Some(v) = v {
        float(out, v);
    }
}

impl CsvRow {
    fn numeric(record: &MeritRecord, spec: &ModelSpec, seed: u64) -> Self {
        let n = spec.batteries as f64;
        Self {
            t: record.t,
            de_num: Some(record.stored_energy / n),
            xi_num: Some(record.ergotropy / n),
            sl_num: Some(record.linear_entropy),
            p_num: Some(record.power / n),
            n: spec.batteries,
            l: spec.sites,
            kappa: spec.kappa,
            seed,
            ..Self::default()
        }
        .with_analytic(spec)
    }

    fn with_analytic(mut self, spec: &ModelSpec) -> Self {
        let Ok(p) = AnalyticParams::new(spec.delta, spec.kappa) else {
            return self;
        };
        let t = self.t;
        match spec.batteries {
            1 => {
                self.de_ana = Some(p.stored_energy(t));
                self.xi_ana = Some(p.ergotropy(t));
                self.sl_ana = Some(p.linear_entropy(t));
                self.p_ana = Some(p.power(t));
            }
            2 => {
                let two = p.two_battery(t);
                let de = two.stored_energy / 2.0;
                self.de_ana = Some(de);
                self.xi_ana = Some(two.ergotropy / 2.0);
                self.p_ana = Some(if t == 0.0 { 0.0 } else { de / t });
            }
            _ => {}
        }
        self
    }

    fn drop_energy_and_power(mut self) -> Self {
        self.de_num = None;
        self.de_ana = None;
        self.p_num = None;
        self.p_ana = None;
        self
    }

    fn drop_ergotropy_and_entropy(mut self) -> Self {
        self.xi_num = None;
        self.xi_ana = None;
        self.sl_num = None;
        self.sl_ana = None;
        self
    }

    pub fn to_csv_line(&self) -> String {
        let mut out = String::new();
        float(&mut out, self.t);
        for v in [
            self.de_num,
            self.xi_num,
            self.sl_num,
            self.p_num,
            self.de_ana,
            self.xi_ana,
            self.sl_ana,
            self.p_ana,
        ] {
            out.push(',');
            opt(&mut out, v);
        }
        write!(out, ",{},{},", self.n, self.l).unwrap();
        float(&mut out, self.kappa);
        write!(out, ",{}", self.seed).unwrap();
        out
    }
}

pub fn write_csv(rows: &[CsvRow], mut w: impl Write) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for row in rows {
        writeln!(w, "{}", row.to_csv_line())?;
    }
    Ok(())
}

pub fn csv_string(rows: &[CsvRow]) -> String {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("CSV is ASCII")
}

/// Figures of merit of one system along a time grid.
pub fn run_system(spec: &ModelSpec, init: &InitialStateSpec, times: &[f64]) -> Result<MeritSeries> {
    let psi0 = init.prepare(spec)?;
    let evolver = Evolver::new(&total_terms(spec)?, &psi0)?;
    let mut records = Vec::with_capacity(times.len());
    for chunk in times.chunks(CHUNK) {
        for (&t, psi) in chunk.iter().zip(evolver.states_at(chunk)?) {
            records.push(merit_record(t, &psi, spec)?);
        }
    }
    Ok(MeritSeries::from_records(records))
}

#[derive(Clone, Debug)]
pub struct SystemRun {
    pub spec: ModelSpec,
    pub seed: u64,
    pub series: MeritSeries,
}

struct Job {
    spec: ModelSpec,
    init: InitialStateSpec,
    seed: u64,
    times: Vec<f64>,
}

// Parallel over jobs; results come back in job order.
fn run_jobs(jobs: Vec<Job>) -> Result<Vec<SystemRun>> {
    jobs.into_par_iter()
        .map(|job| {
            let series = run_system(&job.spec, &job.init, &job.times)?;
            Ok(SystemRun { spec: job.spec, seed: job.seed, series })
        })
        .collect()
}

fn rows_of(run: &SystemRun) -> impl Iterator<Item = CsvRow> + '_ {
    run.series.records.iter().map(|r| CsvRow::numeric(r, &run.spec, run.seed))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Metric {
    pub name: String,
    pub value: f64,
}

fn metric(name: impl Into<String>, value: f64) -> Metric {
    Metric { name: name.into(), value }
}

#[derive(Clone, Debug)]
pub struct FigureOutput {
    pub command: &'static str,
    pub rows: Vec<CsvRow>,
    pub metrics: Vec<Metric>,
    pub notes: Vec<String>,
}

impl FigureOutput {
    /// Rows belonging to one `(L, n, seed)` system.
    pub fn system_rows(&self, sites: usize, batteries: usize, seed: u64) -> Vec<CsvRow> {
        self.rows.iter().filter(|r| r.l == sites && r.n == batteries && r.seed == seed).copied().collect()
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|m| m.name == name).map(|m| m.value)
    }

    /// Writes the CSV and a `<stem>.meta.json` sidecar next to it.
    pub fn write(&self, config: &ExperimentConfig, path: &Path) -> Result<PathBuf> {
        let mut file = std::io::BufWriter::new(fs::File::create(path)?);
        write_csv(&self.rows, &mut file)?;
        file.flush()?;
        let meta_path = path.with_extension("meta.json");
        let meta = serde_json::json!({
            "command": self.command,
            "config": config,
            "columns": CSV_HEADER,
            "energy_columns": "per battery",
            "metrics": self.metrics,
            "notes": self.notes,
        });
        fs::write(&meta_path, serde_json::to_string_pretty(&meta)? + "\n")?;
        Ok(meta_path)
    }
}

/// Peak time of sampled data: vertex of the parabola through the grid
/// maximum and its two neighbours, or the grid maximum itself at an edge.
pub fn interpolated_peak(times: &[f64], values: &[f64]) -> Option<f64> {
    let k = (0..values.len()).max_by(|&a, &b| values[a].total_cmp(&values[b]))?;
    if k == 0 || k + 1 == values.len() {
        return Some(times[k]);
    }
    let (x0, x1, x2) = (times[k - 1], times[k], times[k + 1]);
    let (y0, y1, y2) = (values[k - 1], values[k], values[k + 1]);
    let num = (x1 - x0).powi(2) * (y1 - y2) - (x1 - x2).powi(2) * (y1 - y0);
    let den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0);
    if den == 0.0 {
        return Some(x1);
    }
    Some(x1 - 0.5 * num / den)
}

fn label(spec: &ModelSpec) -> String {
    format!("L={},n={}", spec.sites, spec.batteries)
}

fn max_dev(rows: &[CsvRow], num: fn(&CsvRow) -> Option<f64>, ana: fn(&CsvRow) -> Option<f64>) -> Option<f64> {
    rows.iter()
        .map(|r| Some((num(r)? - ana(r)?).abs()))
        .try_fold(0.0f64, |acc, d| d.map(|d| acc.max(d)))
}

fn scaling_jobs(config: &ExperimentConfig, times: &[f64]) -> Vec<Job> {
    SCALING_SYSTEMS
        .iter()
        .map(|&(l, n)| Job { spec: config.system(l, n), init: config.initial, seed: config.seed, times: times.to_vec() })
        .collect()
}

/// Ergotropy and linear entropy of the four `L + n = 12` systems.
pub fn cmd_fig1(config: &ExperimentConfig) -> Result<FigureOutput> {
    config.validate()?;
    let runs = run_jobs(scaling_jobs(config, &config.grid.times()?))?;
    let reference = AnalyticParams::new(config.model.delta, config.model.kappa)?;
    let mut rows = Vec::new();
    let mut metrics = Vec::new();
    for run in &runs {
        let own: Vec<CsvRow> = rows_of(run).collect();
        let xi_dev = own
            .iter()
            .map(|r| (r.xi_num.unwrap() - reference.ergotropy(r.t)).abs())
            .fold(0.0, f64::max);
        metrics.push(metric(format!("max_xi_dev_from_single[{}]", label(&run.spec)), xi_dev));
        if let Some(d) = max_dev(&own, |r| r.sl_num, |r| r.sl_ana) {
            metrics.push(metric(format!("max_SL_dev[{}]", label(&run.spec)), d));
        }
        let gap = run
            .series
            .records
            .iter()
            .map(|r| (r.coherent_ergotropy - r.ergotropy).abs() / run.spec.batteries as f64)
            .fold(0.0, f64::max);
        metrics.push(metric(format!("max_coherent_gap[{}]", label(&run.spec)), gap));
        rows.extend(own.into_iter().map(CsvRow::drop_energy_and_power));
    }
    Ok(FigureOutput {
        command: "fig1",
        rows,
        metrics,
        notes: vec![
            "xi is the population-based ergotropy; max_coherent_gap is its distance to the eigenvalue-based one".into(),
        ],
    })
}

/// Stored energy and charging power of the four `L + n = 12` systems.
pub fn cmd_fig2(config: &ExperimentConfig) -> Result<FigureOutput> {
    config.validate()?;
    let runs = run_jobs(scaling_jobs(config, &config.grid.times()?))?;
    let reference = AnalyticParams::new(config.model.delta, config.model.kappa)?;
    let mut rows = Vec::new();
    let mut metrics = Vec::new();
    if let Ok((t_max, p_max)) = reference.max_power() {
        metrics.push(metric("analytic_t_max", t_max));
        metrics.push(metric("analytic_P_max", p_max));
    }
    for run in &runs {
        let own: Vec<CsvRow> = rows_of(run).collect();
        let p_dev = own.iter().map(|r| (r.p_num.unwrap() - reference.power(r.t)).abs()).fold(0.0, f64::max);
        metrics.push(metric(format!("max_P_dev_from_single[{}]", label(&run.spec)), p_dev));
        let ts: Vec<f64> = run.series.records.iter().map(|r| r.t).collect();
        let power: Vec<f64> = run.series.records.iter().map(|r| r.power).collect();
        let energy: Vec<f64> = run.series.records.iter().map(|r| r.stored_energy).collect();
        let tag = label(&run.spec);
        metrics.push(metric(format!("argmax_P[{tag}]"), run.series.argmax_power));
        metrics.push(metric(format!("peak_P[{tag}]"), interpolated_peak(&ts, &power).unwrap_or(f64::NAN)));
        metrics.push(metric(format!("argmax_dE[{tag}]"), run.series.argmax_stored_energy));
        metrics.push(metric(format!("peak_dE[{tag}]"), interpolated_peak(&ts, &energy).unwrap_or(f64::NAN)));
        rows.extend(own.into_iter().map(CsvRow::drop_ergotropy_and_entropy));
    }
    Ok(FigureOutput { command: "fig2", rows, metrics, notes: Vec::new() })
}

/// Maximum ergotropy and power per battery against κ.
///
/// Each κ gets its own grid of `grid.steps` points over one period
/// `[0, 2π/ω]`, so the maximum at `T = π/ω` is always inside it. One row
/// per `(n, κ)`: `t` is where `ξ` peaks, `SL` is taken there, and the
/// other numeric columns are maxima over the grid. Analytic columns hold
/// `ΔE(T)`, `ξ(T)`, `S_L(t)` and `1.45 δκ²/ω`.
pub fn cmd_fig3(config: &ExperimentConfig) -> Result<FigureOutput> {
    config.validate()?;
    let (kappas, defaulted) = match &config.sweep {
        Some(SweepSpec { parameter: SweepParameter::Kappa, values }) => (values.clone(), false),
        Some(_) => return Err(Error::InvalidConfig("fig3 sweeps kappa only".into())),
        None => (DEFAULT_KAPPAS.to_vec(), true),
    };
    let mut jobs = Vec::new();
    for &(l, n) in &SCALING_SYSTEMS {
        for &kappa in &kappas {
            let spec = config.system(l, n).with_kappa(kappa);
            let p = AnalyticParams::new(spec.delta, kappa)?;
            let t_end = if p.omega() > 0.0 { p.period() } else { config.grid.t_end };
            jobs.push(Job {
                spec,
                init: config.initial,
                seed: config.seed,
                times: uniform_grid(0.0, t_end, config.grid.steps)?,
            });
        }
    }
    let runs = run_jobs(jobs)?;
    let mut rows = Vec::new();
    for run in &runs {
        let spec = &run.spec;
        let nf = spec.batteries as f64;
        let records = &run.series.records;
        let peak = records.iter().fold(&records[0], |best, r| if r.ergotropy > best.ergotropy { r } else { best });
        let max_of = |f: fn(&MeritRecord) -> f64| records.iter().map(f).fold(f64::NEG_INFINITY, f64::max) / nf;
        let mut row = CsvRow {
            t: peak.t,
            de_num: Some(max_of(|r| r.stored_energy)),
            xi_num: Some(peak.ergotropy / nf),
            sl_num: Some(peak.linear_entropy),
            p_num: Some(max_of(|r| r.power)),
            n: spec.batteries,
            l: spec.sites,
            kappa: spec.kappa,
            seed: run.seed,
            ..CsvRow::default()
        };
        if spec.batteries <= 2 {
            let p = AnalyticParams::new(spec.delta, spec.kappa)?;
            row.de_ana = Some(p.charging_time().map_or(0.0, |t| p.stored_energy(t)));
            row.xi_ana = Some(p.max_ergotropy());
            row.p_ana = Some(p.max_power_approx().1);
            if spec.batteries == 1 {
                row.sl_ana = Some(p.linear_entropy(peak.t));
            }
        }
        rows.push(row);
    }
    let mut notes = vec!["each kappa is sampled on [0, 2pi/omega] with grid.steps points".to_string()];
    if defaulted {
        notes.push(format!("kappa values {DEFAULT_KAPPAS:?} are a default choice, not taken from the config"));
    }
    Ok(FigureOutput { command: "fig3", rows, metrics: Vec::new(), notes })
}

/// Seeds of the random charger realizations.
pub fn realization_seeds(seed: u64) -> Vec<u64> {
    (0..REALIZATIONS).map(|k| seed.wrapping_add(k)).collect()
}

/// Ergotropy for random charger states, `L = 11, n = 1`.
pub fn cmd_fig4(config: &ExperimentConfig) -> Result<FigureOutput> {
    config.validate()?;
    let times = config.grid.times()?;
    let seeds = realization_seeds(config.seed);
    let jobs = seeds
        .iter()
        .map(|&s| Job { spec: config.system(11, 1), init: InitialStateSpec::random(s), seed: s, times: times.clone() })
        .collect();
    let runs = run_jobs(jobs)?;
    let mut metrics = Vec::new();
    for run in &runs {
        let own: Vec<CsvRow> = rows_of(run).collect();
        let d = max_dev(&own, |r| r.xi_num, |r| r.xi_ana).unwrap_or(f64::NAN);
        metrics.push(metric(format!("max_xi_dev_from_analytic[seed={}]", run.seed), d));
    }
    let mut pairwise = 0.0f64;
    for (a, ra) in runs.iter().enumerate() {
        for rb in &runs[a + 1..] {
            let d = ra
                .series
                .records
                .iter()
                .zip(&rb.series.records)
                .map(|(x, y)| (x.ergotropy - y.ergotropy).abs())
                .fold(0.0, f64::max);
            metrics.push(metric(format!("max_xi_dev[seed={},seed={}]", ra.seed, rb.seed), d));
            pairwise = pairwise.max(d);
        }
    }
    metrics.push(metric("max_pairwise_xi_dev", pairwise));
    let rows = runs.iter().flat_map(rows_of).collect();
    Ok(FigureOutput {
        command: "fig4",
        rows,
        metrics,
        notes: vec![format!("charger seeds {seeds:?}")],
    })
}

/// Time series of the configured system, once per sweep value if a sweep
/// is present.
pub fn cmd_sweep(config: &ExperimentConfig) -> Result<FigureOutput> {
    config.validate()?;
    let times = config.grid.times()?;
    let specs = match &config.sweep {
        None => vec![config.model.clone()],
        Some(sweep) => sweep
            .values
            .iter()
            .map(|&v| config.sweep_variant(sweep.parameter, v))
            .collect::<Result<_>>()?,
    };
    let jobs = specs
        .into_iter()
        .map(|spec| Job { spec, init: config.initial, seed: config.seed, times: times.clone() })
        .collect();
    let runs = run_jobs(jobs)?;
    let mut metrics = Vec::new();
    for run in &runs {
        let tag = format!("{},kappa={}", label(&run.spec), run.spec.kappa);
        metrics.push(metric(format!("argmax_dE[{tag}]"), run.series.argmax_stored_energy));
        metrics.push(metric(format!("argmax_xi[{tag}]"), run.series.argmax_ergotropy));
        metrics.push(metric(format!("argmax_P[{tag}]"), run.series.argmax_power));
    }
    let rows = runs.iter().flat_map(rows_of).collect();
    Ok(FigureOutput { command: "sweep", rows, metrics, notes: Vec::new() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> ExperimentConfig {
        ExperimentConfig {
            model: ModelSpec::reference(4, 1),
            grid: GridSpec { t_start: 0.0, t_end: 1.0, steps: 21 },
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn parabola_vertex() {
        let ts: Vec<f64> = (0..11).map(|k| k as f64 * 0.1).collect();
        let ys: Vec<f64> = ts.iter().map(|t| -(t - 0.537f64).powi(2)).collect();
        assert!((interpolated_peak(&ts, &ys).unwrap() - 0.537).abs() < 1e-12);
        assert_eq!(interpolated_peak(&ts[..3], &[3.0, 2.0, 1.0]), Some(0.0));
        assert_eq!(interpolated_peak(&[], &[]), None);
    }

    #[test]
    fn config_round_trip() {
        let json = r#"{
            "model": {"L": 6, "n": 2, "J": 1.0, "h": 0.1, "delta": 0.5, "kappa": 2.0},
            "initial": {"charger_kind": {"random": 7}},
            "grid": {"t_start": 0.0, "t_end": 2.0, "steps": 50},
            "sweep": {"parameter": "kappa", "values": [0.5, 1.0]},
            "seed": 7,
            "output_path": "out.csv"
        }"#;
        let config = ExperimentConfig::from_json(json).unwrap();
        assert_eq!(config.model.sites, 6);
        assert_eq!(config.initial, InitialStateSpec::random(7));
        let again = ExperimentConfig::from_json(&serde_json::to_string(&config).unwrap()).unwrap();
        assert_eq!(again, config);
    }

    #[test]
    fn config_rejects_unknown_keys_and_bad_values() {
        let base = serde_json::to_value(ExperimentConfig::default()).unwrap();
        let mut extra = base.clone();
        extra["colour"] = serde_json::json!("red");
        assert!(ExperimentConfig::from_json(&extra.to_string()).is_err());
        let mut grid = base.clone();
        grid["grid"]["steps"] = serde_json::json!(1);
        assert!(ExperimentConfig::from_json(&grid.to_string()).is_err());
        let mut reversed = base.clone();
        reversed["grid"]["t_end"] = serde_json::json!(-1.0);
        assert!(ExperimentConfig::from_json(&reversed.to_string()).is_err());
        let mut sweep = base;
        sweep["sweep"] = serde_json::json!({"parameter": "n", "values": [1.5]});
        assert!(ExperimentConfig::from_json(&sweep.to_string()).is_err());
    }

    #[test]
    fn csv_line_format() {
        let row = CsvRow { t: 0.5, xi_num: Some(0.25), n: 1, l: 11, kappa: 2.0, seed: 3, ..CsvRow::default() };
        assert_eq!(
            row.to_csv_line(),
            "5.0000000000000000e-1,,2.5000000000000000e-1,,,,,,,1,11,2.0000000000000000e0,3"
        );
        let text = csv_string(&[row]);
        assert!(text.starts_with(CSV_HEADER));
        assert!(!text.contains('\r'));
        assert_eq!(text.lines().count(), 2);
    }

    #[test]
    fn seventeen_digits_round_trip() {
        let v = std::f64::consts::PI / 7.0;
        let mut s = String::new();
        float(&mut s, v);
        assert_eq!(s.parse::<f64>().unwrap(), v);
    }

    #[test]
    fn analytic_columns_only_for_one_and_two_batteries() {
        for (n, filled) in [(1, true), (2, true), (3, false)] {
            let spec = ModelSpec::reference(6, n);
            let row = CsvRow { t: 0.3, ..CsvRow::default() }.with_analytic(&spec);
            assert_eq!(row.xi_ana.is_some(), filled);
            assert_eq!(row.sl_ana.is_some(), n == 1);
        }
    }

    #[test]
    fn sweep_is_reproducible_and_ordered() {
        let config = ExperimentConfig {
            sweep: Some(SweepSpec { parameter: SweepParameter::Kappa, values: vec![1.0, 0.5] }),
            ..small_config()
        };
        let a = cmd_sweep(&config).unwrap();
        let b = cmd_sweep(&config).unwrap();
        assert_eq!(csv_string(&a.rows), csv_string(&b.rows));
        assert_eq!(a.rows.len(), 42);
        assert_eq!(a.rows[0].kappa, 1.0);
        assert_eq!(a.rows[21].kappa, 0.5);
        assert_eq!(a.rows[0].t, 0.0);
    }

    #[test]
    fn zero_coupling_stores_nothing() {
        let mut config = small_config();
        config.model.kappa = 0.0;
        let out = cmd_sweep(&config).unwrap();
        for r in &out.rows {
            assert_eq!(r.xi_num, Some(0.0));
            assert!(r.de_num.unwrap().abs() < 1e-12);
            assert_eq!(r.xi_ana, Some(0.0));
        }
    }

    #[test]
    fn sweep_over_battery_count() {
        let config = ExperimentConfig {
            model: ModelSpec::reference(4, 1),
            sweep: Some(SweepSpec { parameter: SweepParameter::N, values: vec![1.0, 2.0] }),
            ..small_config()
        };
        let out = cmd_sweep(&config).unwrap();
        assert_eq!(out.rows[0].n, 1);
        assert_eq!(out.rows.last().unwrap().n, 2);
    }

    #[test]
    fn figure_writes_csv_and_metadata() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.csv");
        let config = small_config();
        let meta = cmd_sweep(&config).unwrap().write(&config, &path).unwrap();
        let csv = fs::read_to_string(&path).unwrap();
        assert_eq!(csv.lines().next().unwrap(), CSV_HEADER);
        let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(meta).unwrap()).unwrap();
        assert_eq!(meta["command"], "sweep");
    }
}
