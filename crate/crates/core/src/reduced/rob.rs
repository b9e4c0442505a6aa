use rand::Rng;

use super::{check_energy, Branch, ReducedState, SampleGrid};
use crate::dynamics::BarState;
use crate::error::Result;
use crate::geometry::{ChamberSide, RobGeometry};
use crate::ode::{Dop853, OdeOptions};

/// How the chamber side is chosen at each period boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SidePolicy {
    /// Up with probability equal to the upper gap fraction.
    Random,
    Always(ChamberSide),
}

/// Periodic hybrid model of the ROB bar: at each multiple of `T_p` a chamber
/// is drawn, the bar then follows that chamber's invariant level for `tau T_p`
/// and moves freely for the rest of the period.
#[derive(Debug, Clone)]
pub struct RobModel {
    pub geom: RobGeometry,
    pub tau: f64,
    pub policy: SidePolicy,
    pub opts: OdeOptions,
}

impl RobModel {
    pub fn new(geom: RobGeometry) -> Self {
        Self {
            tau: geom.tau(),
            geom,
            policy: SidePolicy::Random,
            opts: OdeOptions {
                h_max: geom.bar_period() / 4.0,
                ..OdeOptions::default()
            },
        }
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    pub fn with_policy(mut self, policy: SidePolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn period(&self) -> f64 {
        self.geom.passage_period()
    }

    pub fn initial_state(&self, y_b: f64, v_b: f64) -> ReducedState {
        ReducedState {
            y_b,
            v_b,
            t: 0.0,
            branch: Branch::Free,
            j: 0.5 * (v_b * v_b + self.geom.spring * y_b * y_b),
            hazard_left: None,
        }
    }

    fn bar(&self, y_b: f64, v_b: f64) -> BarState {
        BarState {
            y_b,
            v_b,
            k: self.geom.spring,
            mass: self.geom.bar_mass,
        }
    }

    /// Chamber side and invariant level chosen at a period boundary.
    pub fn draw_side<R: Rng + ?Sized>(&self, y_b: f64, v_b: f64, rng: &mut R) -> Result<(ChamberSide, f64)> {
        let g = &self.geom;
        let e_b = 0.5 * (g.bar_mass * v_b * v_b + g.spring * y_b * y_b);
        check_energy(e_b, g.energy)?;
        let side = match self.policy {
            SidePolicy::Always(side) => side,
            SidePolicy::Random => {
                if rng.random::<f64>() < g.up_probability(y_b) {
                    ChamberSide::Up
                } else {
                    ChamberSide::Down
                }
            }
        };
        let j = (g.energy - e_b).max(0.0).sqrt() * g.chamber_volume(y_b, side);
        Ok((side, j))
    }

    /// Advances exactly one period from a period boundary.
    pub fn step<R: Rng + ?Sized>(&self, state: ReducedState, rng: &mut R) -> Result<ReducedState> {
        let mut out = state;
        let t_end = state.t + self.period();
        self.run_grid(state, rng, &mut SampleGrid::new(state.t, t_end, self.period())?, |s| out = *s)?;
        Ok(out)
    }

    /// Runs to the first sample time at or after `t_end`, calling `recorder` at
    /// every multiple of `sample_dt` after the start time.
    pub fn run<R, F>(
        &self,
        state: ReducedState,
        rng: &mut R,
        t_end: f64,
        sample_dt: f64,
        recorder: F,
    ) -> Result<ReducedState>
    where
        R: Rng + ?Sized,
        F: FnMut(&ReducedState),
    {
        let mut grid = SampleGrid::new(state.t, state.t + t_end, sample_dt)?;
        self.run_grid(state, rng, &mut grid, recorder)
    }

    fn run_grid<R, F>(
        &self,
        state: ReducedState,
        rng: &mut R,
        grid: &mut SampleGrid,
        mut recorder: F,
    ) -> Result<ReducedState>
    where
        R: Rng + ?Sized,
        F: FnMut(&ReducedState),
    {
        let g = self.geom;
        let k = g.spring / g.bar_mass;
        let t_stop = grid.end();
        let period = self.period();
        let chamber_len = self.tau * period;
        let mut s = state;
        let mut ode: Option<Dop853<2>> = None;
        while s.t < t_stop {
            let (side, j) = self.draw_side(s.y_b, s.v_b, rng)?;
            let sigma = side.sign();
            let half = 0.5 * g.height;
            let j2 = j * j;
            let mut rhs = |_t: f64, y: &[f64; 2]| {
                let vc = half - sigma * y[0];
                [y[1], -k * y[0] - sigma * 2.0 * j2 / (g.bar_mass * vc * vc * vc)]
            };
            let branch = match side {
                ChamberSide::Up => Branch::ChamberUp,
                ChamberSide::Down => Branch::ChamberDown,
            };
            let t_start = s.t;
            let t_mid = (t_start + chamber_len).min(t_stop);
            if chamber_len > 0.0 {
                let integ = match ode.as_mut() {
                    Some(o) => {
                        o.reset(&mut rhs, t_start, [s.y_b, s.v_b]);
                        o
                    }
                    None => ode.insert(Dop853::new(&mut rhs, t_start, [s.y_b, s.v_b], self.opts)),
                };
                let at = |t, y: [f64; 2]| ReducedState {
                    y_b: y[0],
                    v_b: y[1],
                    t,
                    branch,
                    j,
                    hazard_left: None,
                };
                grid.emit_until(t_start, true, |ts| recorder(&at(ts, [s.y_b, s.v_b])));
                while integ.t() < t_mid {
                    let t_new = integ.step(&mut rhs, t_mid)?;
                    if grid.peek().is_some_and(|ts| ts < t_new) {
                        integ.prepare_dense(&mut rhs);
                        grid.emit_until(t_new, false, |ts| recorder(&at(ts, integ.interpolate(ts))));
                    }
                }
                let y = *integ.y();
                s = at(t_mid, y);
                let last_chamber_sample = t_mid < t_start + chamber_len || chamber_len >= period;
                grid.emit_until(t_mid, last_chamber_sample, |ts| recorder(&at(ts, y)));
            }
            if s.t >= t_stop {
                s.t = t_stop;
                break;
            }
            let t_next = (t_start + period).min(t_stop);
            let free_from = s;
            let e_b = 0.5 * (g.bar_mass * s.v_b * s.v_b + g.spring * s.y_b * s.y_b);
            let bar = self.bar(s.y_b, s.v_b);
            let at = |ts: f64| {
                let b = bar.free_flight(ts - free_from.t);
                ReducedState {
                    y_b: b.y_b,
                    v_b: b.v_b,
                    t: ts,
                    branch: Branch::Free,
                    j: e_b,
                    hazard_left: None,
                }
            };
            grid.emit_until(t_next, t_next >= t_stop, |ts| recorder(&at(ts)));
            s = at(t_next);
            // pin the boundary exactly so periods do not drift
            if t_next < t_stop {
                s.t = t_start + period;
            }
        }
        Ok(s)
    }
}
