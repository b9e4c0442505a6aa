//! Ensembles of billiard or reduced-model realizations and their statistics.

mod analysis;
mod initial;
mod trace;

pub use analysis::{
    aggregate_rates, fit_rate, invariant_trace, moving_average, sqrt_m_extrapolation, transient_time,
    Extrapolation, InvariantPoint, RateFit, RateSummary,
};
pub use initial::{build_initial_ensemble, initial_member, member_rng, Member};
pub use trace::{trace_member, TraceRow};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{simulate_trajectory, Simulator};
use crate::error::{Error, Result};
use crate::geometry::{GeometryId, Table};
use crate::reduced::{MushroomModel, ReducedState, RobModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    #[default]
    Billiard,
    Reduced,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Billiard => "billiard",
            ModelKind::Reduced => "reduced",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "billiard" => Ok(ModelKind::Billiard),
            "reduced" => Ok(ModelKind::Reduced),
            _ => Err(Error::InvalidSpec(format!("unknown model '{s}' (billiard|reduced)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleSpec {
    pub geometry: GeometryId,
    pub model: ModelKind,
    pub n_particles: usize,
    /// Particle to bar mass ratio; billiard only.
    pub m: f64,
    /// Initial bar energy as a fraction of the total energy.
    pub e_b0: f64,
    pub t_end: f64,
    pub sample_dt: f64,
    pub seed: u64,
    pub runs: u32,
    /// Member failures tolerated per run before the run aborts.
    pub failure_budget: usize,
    /// Fermi-limit start: particle energy `E m^(1-2a)` for this exponent `a`.
    pub fermi_exponent: Option<f64>,
    /// Common initial bar phase; uniform on `[0, 2 pi)` when absent.
    pub bar_phase: Option<f64>,
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        Self {
            geometry: GeometryId::Rob,
            model: ModelKind::Billiard,
            n_particles: 6000,
            m: 1e-5,
            e_b0: 0.9,
            t_end: 100.0,
            sample_dt: 0.05,
            seed: 1,
            runs: 10,
            failure_budget: 0,
            fermi_exponent: None,
            bar_phase: None,
        }
    }
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        if !(0.0..=1.0).contains(&self.e_b0) {
            return bad(format!("e_b0 must lie in [0, 1] (got {})", self.e_b0));
        }
        if self.n_particles == 0 {
            return bad("n_particles must be at least 1".into());
        }
        if !(self.sample_dt > 0.0 && self.sample_dt.is_finite()) {
            return bad(format!("sample_dt must be positive (got {})", self.sample_dt));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be positive (got {})", self.t_end));
        }
        if self.runs == 0 {
            return bad("runs must be at least 1".into());
        }
        if self.model == ModelKind::Billiard && !(self.m > 0.0 && self.m < 1.0) {
            return bad(format!("m must lie in (0, 1) for billiard runs (got {})", self.m));
        }
        if let Some(a) = self.fermi_exponent {
            if !(0.0..0.5).contains(&a) {
                return bad(format!("fermi_exponent must lie in [0, 1/2) (got {a})"));
            }
            if !(self.m > 0.0 && self.m < 1.0) {
                return bad("a Fermi-limit start needs m in (0, 1)".into());
            }
        }
        Ok(())
    }

    pub fn check_table(&self, table: &Table) -> Result<()> {
        self.validate()?;
        table.validate()?;
        if table.id() != self.geometry {
            return Err(Error::InvalidSpec(format!(
                "geometry '{}' does not match the table '{}'",
                self.geometry.as_str(),
                table.id().as_str()
            )));
        }
        Ok(())
    }

    /// Initial `(E_b, E_p)`.
    pub fn initial_energies(&self, e: f64) -> (f64, f64) {
        match self.fermi_exponent {
            Some(a) => {
                let e_p = e * self.m.powf(1.0 - 2.0 * a);
                (e - e_p, e_p)
            }
            None => (self.e_b0 * e, (1.0 - self.e_b0) * e),
        }
    }

    pub fn n_samples(&self) -> usize {
        (self.t_end / self.sample_dt - 1e-9).ceil().max(0.0) as usize + 1
    }
}

/// Ensemble-averaged energies on the sample grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeSeries {
    pub t: Vec<f64>,
    pub delta_ke: Vec<f64>,
    /// Standard error of `delta_ke`.
    pub stderr: Vec<f64>,
    pub mean_eb: Vec<f64>,
    pub mean_ep: Vec<f64>,
    pub members: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleOutcome {
    pub runs: Vec<KeSeries>,
    /// All successful members of all runs together.
    pub pooled: KeSeries,
}

/// Per-sample sums in member order.
#[derive(Debug, Clone)]
struct Sums {
    /// `[sum dKE, sum dKE^2, sum E_b, sum E_p]` per sample.
    acc: Vec<[f64; 4]>,
    members: usize,
    failures: Vec<(u64, Error)>,
}

impl Sums {
    fn new(n: usize) -> Self {
        Self {
            acc: vec![[0.0; 4]; n],
            members: 0,
            failures: vec![],
        }
    }

    fn absorb(&mut self, other: Sums) {
        for (a, b) in self.acc.iter_mut().zip(&other.acc) {
            for q in 0..4 {
                a[q] += b[q];
            }
        }
        self.members += other.members;
        self.failures.extend(other.failures);
    }

    fn series(&self, t: &[f64]) -> KeSeries {
        let n = self.members as f64;
        let mut out = KeSeries {
            t: t.to_vec(),
            delta_ke: Vec::with_capacity(t.len()),
            stderr: Vec::with_capacity(t.len()),
            mean_eb: Vec::with_capacity(t.len()),
            mean_ep: Vec::with_capacity(t.len()),
            members: self.members,
            failures: self.failures.len(),
        };
        for a in &self.acc {
            let mean = a[0] / n;
            let var = if self.members > 1 {
                ((a[1] - n * mean * mean) / (n - 1.0)).max(0.0)
            } else {
                0.0
            };
            out.delta_ke.push(mean);
            out.stderr.push((var / n).sqrt());
            out.mean_eb.push(a[2] / n);
            out.mean_ep.push(a[3] / n);
        }
        out
    }
}

/// One sample of one member: `(1/2 M v_b^2, E_b, E_p)` with `E_p` over the
/// counted degrees of freedom.
type MemberSample = (f64, f64, f64);

/// Prepared per-ensemble machinery shared read-only by all members.
enum Engine {
    Billiard(Table),
    Rob(RobModel),
    Mushroom(MushroomModel),
}

impl Engine {
    fn new(spec: &EnsembleSpec, table: &Table) -> Result<Self> {
        Ok(match (spec.model, table) {
            (ModelKind::Billiard, _) => Engine::Billiard(table.clone()),
            (ModelKind::Reduced, Table::Rob(g)) => Engine::Rob(RobModel::new(*g)),
            (ModelKind::Reduced, Table::Mushroom(g)) => Engine::Mushroom(MushroomModel::new(g)?),
        })
    }

    fn run_member(&self, spec: &EnsembleSpec, table: &Table, run: u32, member: u64, sink: &mut dyn FnMut(MemberSample)) -> Result<()> {
        let mut rng = member_rng(spec.seed, run, member);
        let init = initial_member(spec, table, &mut rng)?;
        let (mass, k, e) = (table.bar_mass(), table.spring(), table.energy());
        let reduced = |s: &ReducedState| {
            let e_b = 0.5 * (mass * s.v_b * s.v_b + k * s.y_b * s.y_b);
            (0.5 * mass * s.v_b * s.v_b, e_b, e - e_b)
        };
        match (self, init) {
            (Engine::Billiard(tab), Member::Billiard(state)) => {
                let mut sim = Simulator::new(tab.clone())?;
                simulate_trajectory(&mut sim, state, spec.t_end, spec.sample_dt, |s| {
                    sink((0.5 * mass * s.v_b * s.v_b, s.e_b, s.e_p))
                })?;
            }
            (Engine::Rob(model), Member::Reduced(state)) => {
                model.run(state, &mut rng, spec.t_end, spec.sample_dt, |s| sink(reduced(s)))?;
            }
            (Engine::Mushroom(model), Member::Reduced(state)) => {
                let mut obs = |s: &ReducedState| sink(reduced(s));
                model.run(state, &mut rng, spec.t_end, spec.sample_dt, &mut obs)?;
            }
            _ => unreachable!("member kind follows the model"),
        }
        Ok(())
    }
}

const BLOCK: u64 = 32;

/// Runs every realization of every run. Results are bit-identical for any
/// worker count: blocks of members are summed in member order and blocks are
/// folded in block order.
pub fn run_ensemble(spec: &EnsembleSpec, table: &Table, workers: usize) -> Result<EnsembleOutcome> {
    spec.check_table(table)?;
    let engine = Engine::new(spec, table)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidSpec(format!("thread pool: {e}")))?;
    let n = spec.n_samples();
    let t: Vec<f64> = (0..n).map(|j| j as f64 * spec.sample_dt).collect();
    let dof = table.particle_dof() as f64;
    let n_blocks = (spec.n_particles as u64).div_ceil(BLOCK);
    let wave = (pool.current_num_threads() as u64 * 4).max(1);
    let mut runs = Vec::with_capacity(spec.runs as usize);
    let mut pooled = Sums::new(n);
    for run in 0..spec.runs {
        let mut total = Sums::new(n);
        let mut b0 = 0;
        while b0 < n_blocks {
            let b1 = (b0 + wave).min(n_blocks);
            let blocks: Vec<Sums> = pool.install(|| {
                (b0..b1)
                    .into_par_iter()
                    .map(|b| {
                        let mut sums = Sums::new(n);
                        let lo = b * BLOCK;
                        let hi = ((b + 1) * BLOCK).min(spec.n_particles as u64);
                        let mut rows = Vec::with_capacity(n);
                        for member in lo..hi {
                            rows.clear();
                            let res = engine.run_member(spec, table, run, member, &mut |s| rows.push(s));
                            match res {
                                Ok(()) if rows.len() == n => {
                                    for (a, &(ke_b, e_b, e_p)) in sums.acc.iter_mut().zip(&rows) {
                                        let d = ke_b - e_p / dof;
                                        a[0] += d;
                                        a[1] += d * d;
                                        a[2] += e_b;
                                        a[3] += e_p;
                                    }
                                    sums.members += 1;
                                }
                                Ok(()) => sums.failures.push((
                                    member,
                                    Error::Integrator {
                                        t: spec.t_end,
                                        reason: format!("{} samples recorded, expected {n}", rows.len()),
                                    },
                                )),
                                Err(e) => sums.failures.push((member, e)),
                            }
                        }
                        sums
                    })
                    .collect()
            });
            for block in blocks {
                total.absorb(block);
            }
            if total.failures.len() > spec.failure_budget {
                let (member, source) = total.failures.swap_remove(0);
                return Err(Error::Member {
                    run,
                    member,
                    source: Box::new(source),
                });
            }
            b0 = b1;
        }
        if total.members == 0 {
            return Err(Error::InvalidSpec(format!("run {run}: every member failed")));
        }
        runs.push(total.series(&t));
        pooled.absorb(total);
    }
    Ok(EnsembleOutcome {
        runs,
        pooled: pooled.series(&t),
    })
}
