use rand::Rng;

use super::{check_energy, Branch, GTable, ReducedState, SampleGrid};
use crate::dynamics::BarState;
use crate::error::{Error, Result};
use crate::geometry::MushroomGeometry;
use crate::ode::{Dop853, OdeOptions};
use crate::roots::brent;

/// Instantaneous capture rate `max(0, V_ell' v / V_c)` of the leaky model.
pub fn capture_hazard(geom: &MushroomGeometry, y_b: f64, v_b: f64) -> f64 {
    (geom.elliptic_volume_slope(y_b) * v_b / geom.chaotic_volume(y_b)).max(0.0)
}

/// Callbacks fired while a mushroom model realization runs.
pub trait ModelObserver {
    fn sample(&mut self, _state: &ReducedState) {}
    fn capture(&mut self, _state: &ReducedState) {}
    fn release(&mut self, _state: &ReducedState) {}
}

pub struct NoObserver;

impl ModelObserver for NoObserver {}

impl<F: FnMut(&ReducedState)> ModelObserver for F {
    fn sample(&mut self, state: &ReducedState) {
        self(state)
    }
}

/// Leaky adiabatic model of the mushroom bar: the chaotic branch follows the
/// averaged pressure of the chaotic component, captures happen at the rate
/// the elliptic island grows, and a captured particle is released once the
/// throat returns to its capture width.
#[derive(Debug, Clone)]
pub struct MushroomModel {
    table: GTable,
    pub opts: OdeOptions,
}

#[derive(Debug, Clone, Copy)]
struct Leg {
    t0: f64,
    t1: f64,
    y0: f64,
    y1: f64,
}

impl MushroomModel {
    pub fn new(geom: &MushroomGeometry) -> Result<Self> {
        geom.validate()?;
        Ok(Self {
            table: GTable::new(geom)?,
            opts: OdeOptions {
                h_max: geom.bar_period() / 8.0,
                ..OdeOptions::default()
            },
        })
    }

    pub fn geometry(&self) -> &MushroomGeometry {
        self.table.geometry()
    }

    pub fn g_table(&self) -> &GTable {
        &self.table
    }

    fn bar_energy(&self, y: f64, v: f64) -> f64 {
        let g = self.geometry();
        0.5 * (g.bar_mass * v * v + g.spring * y * y)
    }

    /// Chaotic-branch state with `J = (E - E_b) G`.
    pub fn initial_state(&self, y_b: f64, v_b: f64) -> Result<ReducedState> {
        let g = self.geometry();
        let e_b = self.bar_energy(y_b, v_b);
        check_energy(e_b, g.energy)?;
        Ok(self.chaotic(0.0, y_b, v_b, None))
    }

    fn chaotic(&self, t: f64, y_b: f64, v_b: f64, hazard_left: Option<f64>) -> ReducedState {
        let e_p = self.geometry().energy - self.bar_energy(y_b, v_b);
        ReducedState {
            y_b,
            v_b,
            t,
            branch: Branch::Chaotic,
            j: e_p * self.table.g(y_b),
            hazard_left,
        }
    }

    fn captured(&self, t: f64, y_b: f64, v_b: f64, w_c: f64) -> ReducedState {
        ReducedState {
            y_b,
            v_b,
            t,
            branch: Branch::Captured { w_c },
            j: self.bar_energy(y_b, v_b),
            hazard_left: None,
        }
    }

    fn phi(&self, y: f64) -> f64 {
        self.table.log_g_over_vc(y)
    }

    /// Hazard accumulated along a y-monotone leg: the rises of `phi`, which
    /// peaks at `y_f` and is monotone on either side of it.
    fn leg_hazard(&self, y0: f64, y1: f64) -> f64 {
        let g = self.geometry();
        if g.stadium_mode {
            return 0.0;
        }
        let (lo, hi) = g.throat.clamp_points();
        if (y0 <= lo && y1 <= lo) || (y0 >= hi && y1 >= hi) {
            return 0.0;
        }
        let y_f = g.throat.y_f;
        let rise = |a: f64, b: f64| (self.phi(b) - self.phi(a)).max(0.0);
        if (y0 - y_f) * (y1 - y_f) < 0.0 {
            rise(y0, y_f) + rise(y_f, y1)
        } else {
            rise(y0, y1)
        }
    }

    /// Position on the leg where the accumulated hazard reaches `budget`
    /// (`budget` must not exceed the leg total).
    fn capture_point(&self, y0: f64, y1: f64, budget: f64) -> Result<f64> {
        let y_f = self.geometry().throat.y_f;
        let mut start = y0;
        let mut left = budget;
        let mut pieces = vec![];
        if (y0 - y_f) * (y1 - y_f) < 0.0 {
            pieces.push((y0, y_f));
            pieces.push((y_f, y1));
        } else {
            pieces.push((y0, y1));
        }
        for (a, b) in pieces {
            let gain = (self.phi(b) - self.phi(a)).max(0.0);
            if gain >= left && gain > 0.0 {
                let target = self.phi(a) + left;
                return brent(|y| self.phi(y) - target, a, b, 1e-14, 200)
                    .or_else(|_| Ok(if (self.phi(a) - target).abs() < (self.phi(b) - target).abs() { a } else { b }));
            }
            left -= gain;
            start = b;
        }
        Ok(start)
    }

    /// Time after which a captured orbit through `(y, v)` first returns to a
    /// bar position where the throat width is again `w_c`, moving outward.
    pub fn release_delay(&self, y: f64, v: f64, w_c: f64) -> Option<f64> {
        let g = self.geometry();
        let bar = BarState {
            y_b: y,
            v_b: v,
            k: g.spring,
            mass: g.bar_mass,
        };
        let (a, omega) = (bar.amplitude(), bar.omega());
        let (lo, hi) = g.throat.level_points(w_c)?;
        let tau = std::f64::consts::TAU;
        // y = A cos(theta), v = -A omega sin(theta)
        let theta0 = (-v / omega).atan2(y);
        let mut best: Option<f64> = None;
        let mut consider = |theta: f64| {
            let mut d = (theta - theta0).rem_euclid(tau);
            if d == 0.0 {
                d = tau;
            }
            best = Some(best.map_or(d, |b: f64| b.min(d)));
        };
        if hi.abs() <= a {
            consider(-(hi / a).acos());
        }
        if lo.abs() <= a {
            consider((lo / a).acos());
        }
        best.map(|d| d / omega)
    }

    /// Runs to the first sample time at or after `t_end` past the start,
    /// sampling every `sample_dt`.
    pub fn run<R, O>(
        &self,
        state: ReducedState,
        rng: &mut R,
        t_end: f64,
        sample_dt: f64,
        observer: &mut O,
    ) -> Result<ReducedState>
    where
        R: Rng + ?Sized,
        O: ModelObserver + ?Sized,
    {
        let mut grid = SampleGrid::new(state.t, state.t + t_end, sample_dt)?;
        let t_stop = grid.end();
        let mut s = state;
        let mut ode: Option<Dop853<2>> = None;
        while s.t < t_stop {
            s = match s.branch {
                Branch::Captured { w_c } => self.run_captured(s, w_c, t_stop, &mut grid, observer)?,
                _ => self.run_chaotic(s, rng, t_stop, &mut grid, &mut ode, observer)?,
            };
        }
        grid.emit_until(t_stop, true, |_| {});
        Ok(s)
    }

    fn run_captured<O: ModelObserver + ?Sized>(
        &self,
        s: ReducedState,
        w_c: f64,
        t_stop: f64,
        grid: &mut SampleGrid,
        observer: &mut O,
    ) -> Result<ReducedState> {
        let g = self.geometry();
        let bar = BarState {
            y_b: s.y_b,
            v_b: s.v_b,
            k: g.spring,
            mass: g.bar_mass,
        };
        let delay = self
            .release_delay(s.y_b, s.v_b, w_c)
            .ok_or(Error::NoRelease { t: s.t, w_c })?;
        let t_rel = s.t + delay;
        let at = |t: f64| {
            let b = bar.free_flight(t - s.t);
            self.captured(t, b.y_b, b.v_b, w_c)
        };
        if t_rel >= t_stop {
            grid.emit_until(t_stop, true, |ts| observer.sample(&at(ts)));
            return Ok(at(t_stop));
        }
        grid.emit_until(t_rel, false, |ts| observer.sample(&at(ts)));
        let b = bar.free_flight(delay);
        let out = self.chaotic(t_rel, b.y_b, b.v_b, None);
        observer.release(&out);
        Ok(out)
    }

    fn run_chaotic<R, O>(
        &self,
        s: ReducedState,
        rng: &mut R,
        t_stop: f64,
        grid: &mut SampleGrid,
        ode: &mut Option<Dop853<2>>,
        observer: &mut O,
    ) -> Result<ReducedState>
    where
        R: Rng + ?Sized,
        O: ModelObserver + ?Sized,
    {
        let g = *self.geometry();
        let k = g.spring / g.bar_mass;
        let m = g.bar_mass;
        let e = g.energy;
        let table = &self.table;
        let mut rhs = |_t: f64, y: &[f64; 2]| {
            let e_p = e - 0.5 * (m * y[1] * y[1] + g.spring * y[0] * y[0]);
            [y[1], -k * y[0] + table.leaky_log_slope(y[0]) * e_p / m]
        };
        let integ = match ode.as_mut() {
            Some(o) => {
                o.reset(&mut rhs, s.t, [s.y_b, s.v_b]);
                o
            }
            None => ode.insert(Dop853::new(&mut rhs, s.t, [s.y_b, s.v_b], self.opts)),
        };
        let mut budget = match s.hazard_left {
            Some(h) => h,
            None => -(1.0 - rng.random::<f64>()).ln(),
        };
        let at = |t: f64, y: [f64; 2], budget: f64| self.chaotic(t, y[0], y[1], Some(budget));
        grid.emit_until(s.t, true, |ts| observer.sample(&at(ts, [s.y_b, s.v_b], budget)));
        while integ.t() < t_stop {
            let t_a = integ.t();
            let [y_a, v_a] = *integ.y();
            let t_b = integ.step(&mut rhs, t_stop)?;
            let [y_b, v_b] = *integ.y();
            let mut dense = false;
            let mut legs = [None, None];
            if v_a * v_b < 0.0 {
                integ.prepare_dense(&mut rhs);
                dense = true;
                let t_turn = brent(|t| integ.interpolate(t)[1], t_a, t_b, 1e-15 * t_b.abs().max(1.0), 200)?;
                let y_turn = integ.interpolate(t_turn)[0];
                legs[0] = Some(Leg { t0: t_a, t1: t_turn, y0: y_a, y1: y_turn });
                legs[1] = Some(Leg { t0: t_turn, t1: t_b, y0: y_turn, y1: y_b });
            } else {
                legs[0] = Some(Leg { t0: t_a, t1: t_b, y0: y_a, y1: y_b });
            }
            for leg in legs.into_iter().flatten() {
                let gain = self.leg_hazard(leg.y0, leg.y1);
                if gain < budget {
                    budget -= gain;
                    continue;
                }
                if !dense {
                    integ.prepare_dense(&mut rhs);
                }
                let y_star = self.capture_point(leg.y0, leg.y1, budget)?;
                let t_star = if y_star == leg.y0 {
                    leg.t0
                } else if y_star == leg.y1 {
                    leg.t1
                } else {
                    brent(|t| integ.interpolate(t)[0] - y_star, leg.t0, leg.t1, 1e-15 * leg.t1.abs().max(1.0), 200)?
                };
                let final_budget = budget;
                grid.emit_until(t_star, false, |ts| {
                    let y = integ.interpolate(ts);
                    // hazard spent up to ts is not tracked per sample
                    observer.sample(&at(ts, y, final_budget))
                });
                let v_star = integ.interpolate(t_star)[1];
                let w_c = g.throat_width(y_star);
                let out = self.captured(t_star, y_star, v_star, w_c);
                observer.capture(&out);
                return Ok(out);
            }
            if grid.peek().is_some_and(|ts| ts < t_b) {
                if !dense {
                    integ.prepare_dense(&mut rhs);
                }
                grid.emit_until(t_b, false, |ts| observer.sample(&at(ts, integ.interpolate(ts), budget)));
            }
            check_energy(self.bar_energy(y_b, v_b), e)?;
        }
        let y = *integ.y();
        let out = at(t_stop, y, budget);
        grid.emit_until(t_stop, true, |_| observer.sample(&out));
        Ok(out)
    }
}
