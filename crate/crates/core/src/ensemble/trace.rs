use std::mem::discriminant;

use serde::Serialize;

use super::{initial_member, invariant_trace, member_rng, EnsembleSpec, Member};
use crate::dynamics::{simulate_trajectory, Simulator, TraceSample};
use crate::error::Result;
use crate::geometry::Table;
use crate::reduced::{Branch, MushroomModel, ReducedState, RobModel};

/// One sample of a single realization with its branch invariant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub t: f64,
    pub y_b: f64,
    pub v_b: f64,
    pub e_b: f64,
    pub e_p: f64,
    pub j: f64,
    /// Billiard sub-region; for reduced models the branch name.
    pub region: &'static str,
    pub branch: Branch,
    pub switch: bool,
}

/// Follows member `member` of run `run` from the same initial condition the
/// ensemble would use.
pub fn trace_member(spec: &EnsembleSpec, table: &Table, run: u32, member: u64) -> Result<Vec<TraceRow>> {
    spec.check_table(table)?;
    let mut rng = member_rng(spec.seed, run, member);
    match initial_member(spec, table, &mut rng)? {
        Member::Billiard(state) => {
            let mut sim = Simulator::new(*table)?;
            let mut samples: Vec<TraceSample> = Vec::with_capacity(spec.n_samples());
            simulate_trajectory(&mut sim, state, spec.t_end, spec.sample_dt, |s| samples.push(*s))?;
            let inv = invariant_trace(&samples, table)?;
            Ok(samples
                .iter()
                .zip(inv)
                .map(|(s, p)| TraceRow {
                    t: s.t,
                    y_b: s.y_b,
                    v_b: s.v_b,
                    e_b: s.e_b,
                    e_p: s.e_p,
                    j: p.j,
                    region: s.region.as_str(),
                    branch: p.branch,
                    switch: p.switch,
                })
                .collect())
        }
        Member::Reduced(state) => {
            let mut states: Vec<ReducedState> = Vec::with_capacity(spec.n_samples());
            match table {
                Table::Rob(g) => {
                    RobModel::new(*g).run(state, &mut rng, spec.t_end, spec.sample_dt, |s| states.push(*s))?;
                }
                Table::Mushroom(g) => {
                    let mut obs = |s: &ReducedState| states.push(*s);
                    MushroomModel::new(g)?.run(state, &mut rng, spec.t_end, spec.sample_dt, &mut obs)?;
                }
            }
            let (k, e) = (table.spring(), table.energy());
            let mut prev: Option<Branch> = None;
            Ok(states
                .iter()
                .map(|s| {
                    let e_b = s.bar_energy(k);
                    let switch = prev.is_some_and(|b| discriminant(&b) != discriminant(&s.branch));
                    prev = Some(s.branch);
                    TraceRow {
                        t: s.t,
                        y_b: s.y_b,
                        v_b: s.v_b,
                        e_b,
                        e_p: e - e_b,
                        j: s.j,
                        region: s.branch.as_str(),
                        branch: s.branch,
                        switch,
                    }
                })
                .collect())
        }
    }
}
