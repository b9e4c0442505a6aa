//! Exact event-driven motion of one particle and the spring-mounted bar.
//!
//! The particle flies in straight lines and reflects specularly off static walls;
//! the bar moves harmonically between impacts. Bar impact times are found by a
//! certified search that uses the curvature bound `|f''| <= omega^2 A` of the gap
//! function, so no grazing contact is skipped.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{classify_region, MushroomGeometry, Region, RobGeometry, Table};

/// Penetration tolerance in billiard units.
pub const EPS_PEN: f64 = 1e-9;
/// Projections allowed per trajectory before aborting.
pub const MAX_PROJECTIONS: usize = 1000;
/// Events allowed without time advancing by `tol_t`.
pub const N_CHAIN: usize = 1_000_000;

/// Elastic impact of a particle of mass ratio `mu = m/M` on the bar.
/// Returns `(v_p', v_b')`.
#[inline]
pub fn elastic_bar_collision(v_p: f64, v_b: f64, mu: f64) -> (f64, f64) {
    let inv = 1.0 / (1.0 + mu);
    (
        (2.0 * v_b - (1.0 - mu) * v_p) * inv,
        ((1.0 - mu) * v_b + 2.0 * mu * v_p) * inv,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParticleState {
    pub x: f64,
    pub y: f64,
    pub u: f64,
    pub v: f64,
    pub m: f64,
}

impl ParticleState {
    /// Kinetic energy over `dof` velocity components (1: vertical only).
    #[inline]
    pub fn energy(&self, dof: usize) -> f64 {
        if dof == 1 {
            0.5 * self.m * self.v * self.v
        } else {
            0.5 * self.m * (self.u * self.u + self.v * self.v)
        }
    }

    #[inline]
    fn fly(&mut self, s: f64) {
        self.x += self.u * s;
        self.y += self.v * s;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarState {
    pub y_b: f64,
    pub v_b: f64,
    pub k: f64,
    pub mass: f64,
}

impl BarState {
    #[inline]
    pub fn omega(&self) -> f64 {
        (self.k / self.mass).sqrt()
    }

    #[inline]
    pub fn energy(&self) -> f64 {
        0.5 * (self.mass * self.v_b * self.v_b + self.k * self.y_b * self.y_b)
    }

    /// Oscillation amplitude of the free motion.
    #[inline]
    pub fn amplitude(&self) -> f64 {
        let w = self.omega();
        (self.y_b * self.y_b + (self.v_b / w) * (self.v_b / w)).sqrt()
    }

    /// Position and velocity after free harmonic flight of duration `dt`.
    #[inline]
    pub fn free_flight(&self, dt: f64) -> BarState {
        let w = self.omega();
        let (sn, cs) = (w * dt).sin_cos();
        BarState {
            y_b: self.y_b * cs + self.v_b / w * sn,
            v_b: self.v_b * cs - self.y_b * w * sn,
            ..*self
        }
    }
}

/// Exact harmonic advance of the bar.
pub fn bar_free_flight(bar: BarState, dt: f64) -> BarState {
    bar.free_flight(dt)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemState {
    pub particle: ParticleState,
    pub bar: BarState,
    pub t: f64,
    pub region: Region,
}

impl SystemState {
    /// Builds a state and tags its region.
    pub fn new(table: &Table, particle: ParticleState, bar: BarState, t: f64) -> Result<Self> {
        let region = classify_region(
            table,
            (particle.x, particle.y),
            (particle.u, particle.v),
            bar.y_b,
        )?;
        Ok(Self {
            particle,
            bar,
            t,
            region,
        })
    }

    pub fn particle_energy(&self, table: &Table) -> f64 {
        self.particle.energy(table.particle_dof())
    }

    pub fn total_energy(&self, table: &Table) -> f64 {
        self.particle_energy(table) + self.bar.energy()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Wall {
    Left,
    Right,
    Top,
    Bottom,
    Arc,
    StemLeft,
    StemRight,
}

/// Direction of a throat crossing: `Up` enters the cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Up,
    Down,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    StaticWallHit(Wall),
    BarHit,
    ThroatCross(Direction),
    LipHit,
    /// ROB particle passing `x = lambda` between the free span and a chamber.
    GapCross,
    SampleTick,
    HorizonReached,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub kind: EventKind,
    pub t: f64,
}

/// Earliest static-boundary event `(delay, kind)` for the particle in `region`.
/// Moving pieces (the bar face, the throat extent) are resolved by the caller.
pub fn time_to_static_boundary(
    table: &Table,
    p: &ParticleState,
    region: Region,
) -> Option<(f64, EventKind)> {
    let mut best: Option<(f64, EventKind)> = None;
    let mut offer = |s: f64, kind: EventKind| {
        let s = s.max(0.0);
        if best.is_none_or(|(b, _)| s < b) {
            best = Some((s, kind));
        }
    };
    match table {
        Table::Rob(g) => {
            let half = 0.5 * g.height;
            match region {
                Region::FreeSpan => {
                    if p.u > 0.0 {
                        offer((g.length - p.x) / p.u, EventKind::StaticWallHit(Wall::Right));
                    } else if p.u < 0.0 {
                        offer((g.bar_length - p.x) / p.u, EventKind::GapCross);
                    }
                    if p.v > 0.0 {
                        offer((half - p.y) / p.v, EventKind::StaticWallHit(Wall::Top));
                    } else if p.v < 0.0 {
                        offer((-half - p.y) / p.v, EventKind::StaticWallHit(Wall::Bottom));
                    }
                }
                Region::ChamberUp | Region::ChamberDown => {
                    if p.u < 0.0 {
                        offer(-p.x / p.u, EventKind::StaticWallHit(Wall::Left));
                    } else if p.u > 0.0 {
                        offer((g.bar_length - p.x) / p.u, EventKind::GapCross);
                    }
                    if region == Region::ChamberUp && p.v > 0.0 {
                        offer((half - p.y) / p.v, EventKind::StaticWallHit(Wall::Top));
                    }
                    if region == Region::ChamberDown && p.v < 0.0 {
                        offer((-half - p.y) / p.v, EventKind::StaticWallHit(Wall::Bottom));
                    }
                }
                _ => {}
            }
        }
        Table::Mushroom(g) => match region {
            Region::Cap => {
                offer(arc_exit_time(g.cap_radius, p), EventKind::StaticWallHit(Wall::Arc));
                if p.v < 0.0 {
                    offer(-p.y / p.v, EventKind::ThroatCross(Direction::Down));
                }
            }
            Region::Stem => {
                let t = g.tan_theta;
                let h = g.cap_radius;
                let ur = p.u - p.v * t;
                if ur > 0.0 {
                    offer(
                        (h - p.x + p.y * t) / ur,
                        EventKind::StaticWallHit(Wall::StemRight),
                    );
                }
                let ul = p.u + p.v * t;
                if ul < 0.0 {
                    offer(
                        -(p.x + p.y * t + h) / ul,
                        EventKind::StaticWallHit(Wall::StemLeft),
                    );
                }
                if p.v > 0.0 {
                    offer(-p.y / p.v, EventKind::ThroatCross(Direction::Up));
                }
            }
            _ => {}
        },
    }
    best
}

/// Time for a particle inside a disc of radius `r` to reach the circle.
#[inline]
fn arc_exit_time(r: f64, p: &ParticleState) -> f64 {
    let a = p.u * p.u + p.v * p.v;
    if a == 0.0 {
        return f64::INFINITY;
    }
    let b = p.x * p.u + p.y * p.v;
    let c = p.x * p.x + p.y * p.y - r * r;
    let disc = (b * b - a * c).max(0.0).sqrt();
    if b > 0.0 {
        -c / (b + disc)
    } else {
        (disc - b) / a
    }
}

/// Gap between the particle and the bar face along a free flight:
/// `f(s) = sigma (y0 + v s - offset - Y(s))` with `Y` the harmonic bar position.
#[derive(Debug, Clone, Copy)]
struct Gap {
    y0: f64,
    v: f64,
    sigma: f64,
    offset: f64,
    y_b: f64,
    v_b: f64,
    omega: f64,
    /// Bound on `|f''|`.
    curvature: f64,
}

impl Gap {
    fn new(p: &ParticleState, bar: &BarState, sigma: f64, offset: f64) -> Self {
        let omega = bar.omega();
        Self {
            y0: p.y,
            v: p.v,
            sigma,
            offset,
            y_b: bar.y_b,
            v_b: bar.v_b,
            omega,
            curvature: omega * omega * bar.amplitude() * (1.0 + 1e-9) + 1e-300,
        }
    }

    #[inline]
    fn eval(&self, s: f64) -> (f64, f64) {
        let (sn, cs) = (self.omega * s).sin_cos();
        let y = self.y_b * cs + self.v_b / self.omega * sn;
        let dy = self.v_b * cs - self.y_b * self.omega * sn;
        (
            self.sigma * (self.y0 + self.v * s - self.offset - y),
            self.sigma * (self.v - dy),
        )
    }

    /// Earliest contact in `[0, s_max]`; `Some(0)` when touching and approaching.
    fn first_contact(&self, s_max: f64, tol: f64) -> Option<f64> {
        let (f0, d0) = self.eval(0.0);
        if f0 <= 0.0 && d0 < 0.0 {
            return Some(0.0);
        }
        if !(s_max > 0.0) {
            return None;
        }
        let f0 = f0.max(0.0);
        let c = self.curvature;
        let (fb, db) = self.eval(s_max);
        let mut stack: Vec<[f64; 6]> = Vec::with_capacity(64);
        stack.push([0.0, f0, d0, s_max, fb, db]);
        while let Some([a, fa, da, b, fb, db]) = stack.pop() {
            let width = b - a;
            if fb <= 0.0 {
                let monotone = 0.5 * (da + db + c * width) < 0.0;
                if monotone || width <= tol {
                    return Some(self.refine(a, fa, b, tol));
                }
            } else {
                let chord = fa > 0.0 && fa.min(fb) - c * width * width / 8.0 > 0.0;
                let from_a =
                    (fa > 0.0 || da > 0.0) && fa + da * width - 0.5 * c * width * width > 0.0;
                let from_b = fa > 0.0 && fb - db * width - 0.5 * c * width * width > 0.0;
                if chord || from_a || from_b || width <= tol {
                    continue;
                }
            }
            let m = 0.5 * (a + b);
            let (fm, dm) = self.eval(m);
            stack.push([m, fm, dm, b, fb, db]);
            stack.push([a, fa, da, m, fm, dm]);
        }
        None
    }

    /// Safeguarded Newton on a bracket with `f(a) >= 0 >= f(b)`.
    fn refine(&self, a: f64, fa: f64, b: f64, tol: f64) -> f64 {
        if fa <= 0.0 {
            return a;
        }
        let (mut lo, mut hi) = (a, b);
        let mut x = 0.5 * (lo + hi);
        for _ in 0..200 {
            let (fx, dx) = self.eval(x);
            if fx == 0.0 {
                return x;
            }
            if fx > 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            if hi - lo <= tol {
                return hi;
            }
            let newton = x - fx / dx;
            let next = if dx < 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if (next - x).abs() <= 0.25 * tol {
                return if fx > 0.0 { (next + 0.25 * tol).min(hi) } else { next };
            }
            x = next;
        }
        hi
    }
}

/// How the bar bounds the particle's current region: `(sigma, offset)`.
#[inline]
fn bar_face(table: &Table, region: Region) -> Option<(f64, f64)> {
    match (table, region) {
        (Table::Rob(_), Region::ChamberUp) => Some((1.0, 0.0)),
        (Table::Rob(_), Region::ChamberDown) => Some((-1.0, 0.0)),
        (Table::Mushroom(g), Region::Stem) => Some((1.0, -g.stem_length)),
        _ => None,
    }
}

/// Earliest bar impact within `s_max`, found to absolute time tolerance `tol_t`.
pub fn time_to_bar(
    table: &Table,
    state: &SystemState,
    s_max: f64,
    tol_t: f64,
) -> Option<f64> {
    let (sigma, offset) = bar_face(table, state.region)?;
    Gap::new(&state.particle, &state.bar, sigma, offset).first_contact(s_max, tol_t)
}

/// Whether a cap particle is on an orbit that cannot reach the current throat.
pub fn is_captured(g: &MushroomGeometry, p: &ParticleState, region: Region, y_b: f64) -> bool {
    if region != Region::Cap || g.stadium_mode {
        return false;
    }
    let speed = (p.u * p.u + p.v * p.v).sqrt();
    if speed == 0.0 {
        return false;
    }
    (p.x * p.v - p.y * p.u).abs() / speed >= g.throat_width(y_b)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub events: u64,
    pub bar_hits: u64,
    pub grazing_touches: u64,
    pub projections: usize,
    pub throat_crossings: u64,
}

/// Event loop for one trajectory.
#[derive(Debug, Clone)]
pub struct Simulator {
    table: Table,
    tol_t: f64,
    chain: usize,
    pub counters: Counters,
}

impl Simulator {
    pub fn new(table: Table) -> Result<Self> {
        table.validate()?;
        Ok(Self {
            tol_t: 1e-12 * table.bar_period(),
            table,
            chain: 0,
            counters: Counters::default(),
        })
    }

    pub fn table(&self) -> &Table {
        &self.table
    }

    pub fn tol_t(&self) -> f64 {
        self.tol_t
    }

    /// Advances to the earliest event, or to `horizon` if nothing happens first.
    pub fn advance(&mut self, state: &mut SystemState, horizon: f64) -> Result<Event> {
        let max_dt = horizon - state.t;
        if max_dt <= 0.0 {
            return Ok(Event {
                kind: EventKind::HorizonReached,
                t: state.t,
            });
        }
        let (mut s, mut kind) = match time_to_static_boundary(&self.table, &state.particle, state.region)
        {
            Some((s, k)) if s <= max_dt => (s, k),
            _ => (max_dt, EventKind::HorizonReached),
        };
        if let Some(sb) = time_to_bar(&self.table, state, s, self.tol_t) {
            if sb <= s {
                s = sb;
                kind = EventKind::BarHit;
            }
        }
        let t_new = if kind == EventKind::HorizonReached {
            horizon
        } else {
            state.t + s
        };
        state.particle.fly(s);
        state.bar = state.bar.free_flight(s);
        state.t = t_new;
        let kind = self.handle(state, kind);
        self.guard(state)?;
        if kind != EventKind::HorizonReached {
            self.counters.events += 1;
            if s <= self.tol_t {
                self.chain += 1;
                if self.chain > N_CHAIN {
                    return Err(Error::EventStall {
                        t: state.t,
                        events: self.chain,
                    });
                }
            } else {
                self.chain = 0;
            }
        }
        Ok(Event { kind, t: t_new })
    }

    /// Runs events until `state.t == t_end`.
    pub fn run_until(&mut self, state: &mut SystemState, t_end: f64) -> Result<()> {
        while state.t < t_end {
            self.advance(state, t_end)?;
        }
        Ok(())
    }

    /// Applies the event and reports what actually happened.
    fn handle(&mut self, state: &mut SystemState, kind: EventKind) -> EventKind {
        let p = &mut state.particle;
        match (kind, &self.table) {
            (EventKind::HorizonReached | EventKind::SampleTick, _) => {}
            (EventKind::StaticWallHit(wall), Table::Rob(g)) => match wall {
                Wall::Left => {
                    p.x = 0.0;
                    p.u = -p.u;
                }
                Wall::Right => {
                    p.x = g.length;
                    p.u = -p.u;
                }
                Wall::Top => {
                    p.y = 0.5 * g.height;
                    p.v = -p.v;
                }
                Wall::Bottom => {
                    p.y = -0.5 * g.height;
                    p.v = -p.v;
                }
                _ => unreachable!("mushroom wall in rectangle"),
            },
            (EventKind::StaticWallHit(wall), Table::Mushroom(g)) => match wall {
                Wall::Arc => {
                    let r = (p.x * p.x + p.y * p.y).sqrt();
                    let (nx, ny) = (p.x / r, p.y / r);
                    p.x = nx * g.cap_radius;
                    p.y = ny * g.cap_radius;
                    let dot = p.u * nx + p.v * ny;
                    if dot > 0.0 {
                        p.u -= 2.0 * dot * nx;
                        p.v -= 2.0 * dot * ny;
                    }
                }
                Wall::StemLeft | Wall::StemRight => {
                    let side = if wall == Wall::StemRight { 1.0 } else { -1.0 };
                    // wall: side * x - y tan = h, outward normal (side, -tan)/norm
                    let t = g.tan_theta;
                    let norm = (1.0 + t * t).sqrt();
                    let (nx, ny) = (side / norm, -t / norm);
                    let excess = (side * p.x - p.y * t - g.cap_radius) / norm;
                    p.x -= excess * nx;
                    p.y -= excess * ny;
                    let dot = p.u * nx + p.v * ny;
                    if dot > 0.0 {
                        p.u -= 2.0 * dot * nx;
                        p.v -= 2.0 * dot * ny;
                    }
                }
                _ => unreachable!("rectangle wall in mushroom"),
            },
            (EventKind::ThroatCross(dir), Table::Mushroom(g)) => {
                p.y = 0.0;
                let w = g.throat_width(state.bar.y_b);
                if p.x.abs() <= w {
                    state.region = match dir {
                        Direction::Up => Region::Cap,
                        Direction::Down => Region::Stem,
                    };
                    self.counters.throat_crossings += 1;
                } else {
                    p.v = -p.v;
                    return EventKind::LipHit;
                }
            }
            (EventKind::GapCross, Table::Rob(g)) => {
                p.x = g.bar_length;
                state.region = if p.u > 0.0 {
                    Region::FreeSpan
                } else if p.y >= state.bar.y_b {
                    Region::ChamberUp
                } else {
                    Region::ChamberDown
                };
            }
            (EventKind::BarHit, _) => {
                let (sigma, offset) =
                    bar_face(&self.table, state.region).expect("bar hit outside a bar region");
                let bar = &mut state.bar;
                p.y = bar.y_b + offset;
                self.counters.bar_hits += 1;
                if sigma * (p.v - bar.v_b) < 0.0 {
                    let (vp, vb) = elastic_bar_collision(p.v, bar.v_b, p.m / bar.mass);
                    p.v = vp;
                    bar.v_b = vb;
                } else {
                    self.counters.grazing_touches += 1;
                }
            }
            (EventKind::ThroatCross(_) | EventKind::LipHit, Table::Rob(_))
            | (EventKind::GapCross, Table::Mushroom(_)) => {
                unreachable!("event kind does not exist for this table")
            }
            (EventKind::LipHit, _) => {}
        }
        kind
    }

    /// Penetration check; deep violations are projected back and counted.
    fn guard(&mut self, state: &mut SystemState) -> Result<()> {
        let depth = penetration(&self.table, state);
        if depth > EPS_PEN {
            self.counters.projections += 1;
            if self.counters.projections > MAX_PROJECTIONS {
                return Err(Error::PenetrationBudget {
                    t: state.t,
                    projections: self.counters.projections,
                });
            }
            project(&self.table, state);
        }
        Ok(())
    }
}

/// Largest distance by which the particle lies outside its region.
pub fn penetration(table: &Table, state: &SystemState) -> f64 {
    let p = &state.particle;
    let y_b = state.bar.y_b;
    match table {
        Table::Rob(g) => {
            let half = 0.5 * g.height;
            let mut d = (-p.x).max(p.x - g.length).max(p.y.abs() - half);
            match state.region {
                Region::ChamberUp => d = d.max(y_b - p.y).max(p.x - g.bar_length),
                Region::ChamberDown => d = d.max(p.y - y_b).max(p.x - g.bar_length),
                _ => d = d.max(g.bar_length - p.x),
            }
            d
        }
        Table::Mushroom(g) => match state.region {
            Region::Cap => (-p.y).max((p.x * p.x + p.y * p.y).sqrt() - g.cap_radius),
            _ => p
                .y
                .max(g.floor(y_b) - p.y)
                .max(p.x.abs() - g.stem_half_width(p.y)),
        },
    }
}

fn project(table: &Table, state: &mut SystemState) {
    let y_b = state.bar.y_b;
    let region = state.region;
    let p = &mut state.particle;
    match table {
        Table::Rob(g) => {
            let half = 0.5 * g.height;
            p.x = p.x.clamp(0.0, g.length);
            p.y = p.y.clamp(-half, half);
            match region {
                Region::ChamberUp => {
                    p.y = p.y.max(y_b);
                    p.x = p.x.min(g.bar_length);
                }
                Region::ChamberDown => {
                    p.y = p.y.min(y_b);
                    p.x = p.x.min(g.bar_length);
                }
                _ => p.x = p.x.max(g.bar_length),
            }
        }
        Table::Mushroom(g) => match region {
            Region::Cap => {
                p.y = p.y.max(0.0);
                let r = (p.x * p.x + p.y * p.y).sqrt();
                if r > g.cap_radius {
                    p.x *= g.cap_radius / r;
                    p.y *= g.cap_radius / r;
                }
            }
            _ => {
                p.y = p.y.min(0.0).max(g.floor(y_b));
                let hw = g.stem_half_width(p.y);
                p.x = p.x.clamp(-hw, hw);
            }
        },
    }
}

/// One recorded sample of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub t: f64,
    pub y_b: f64,
    pub v_b: f64,
    pub e_b: f64,
    pub e_p: f64,
    pub region: Region,
    /// Particle sits on a cap orbit that misses the throat.
    pub captured: bool,
}

impl TraceSample {
    pub fn of(table: &Table, state: &SystemState) -> Self {
        let captured = match table {
            Table::Mushroom(g) => is_captured(g, &state.particle, state.region, state.bar.y_b),
            Table::Rob(_) => false,
        };
        Self {
            t: state.t,
            y_b: state.bar.y_b,
            v_b: state.bar.v_b,
            e_b: state.bar.energy(),
            e_p: state.particle_energy(table),
            region: state.region,
            captured,
        }
    }
}

/// Runs one trajectory, emitting a sample at `t0 + j * sample_dt` up to the
/// first grid time at or after `t_end`.
pub fn simulate_trajectory<R>(
    sim: &mut Simulator,
    initial: SystemState,
    t_end: f64,
    sample_dt: f64,
    mut recorder: R,
) -> Result<SystemState>
where
    R: FnMut(&TraceSample),
{
    if !(t_end > 0.0) || !(sample_dt > 0.0) {
        return Err(Error::InvalidSpec(format!(
            "t_end and sample_dt must be positive (got {t_end}, {sample_dt})"
        )));
    }
    let mut state = initial;
    let t0 = state.t;
    let n = (t_end / sample_dt - 1e-9).ceil().max(0.0) as usize;
    recorder(&TraceSample::of(&sim.table, &state));
    for j in 1..=n {
        let t_sample = t0 + j as f64 * sample_dt;
        sim.run_until(&mut state, t_sample).map_err(|e| Error::Trajectory {
            t: state.t,
            source: Box::new(e),
        })?;
        recorder(&TraceSample::of(&sim.table, &state));
    }
    Ok(state)
}

/// Bar at rest in its spring equilibrium (testing convenience).
pub fn bar_at(table: &Table, y_b: f64, v_b: f64) -> BarState {
    BarState {
        y_b,
        v_b,
        k: table.spring(),
        mass: table.bar_mass(),
    }
}

/// Vertical-only ROB particle moving with the configured horizontal speed.
pub fn rob_particle(g: &RobGeometry, x: f64, y: f64, v: f64, m: f64, rightward: bool) -> ParticleState {
    let u = if rightward {
        g.horizontal_speed
    } else {
        -g.horizontal_speed
    };
    ParticleState { x, y, u, v, m }
}
