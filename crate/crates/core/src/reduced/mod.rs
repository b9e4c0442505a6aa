//! Averaged (adiabatic) bar dynamics and the two stochastic reduced models.

mod gtable;
mod mushroom;
mod rob;

pub use gtable::{g_factor, log_g_direct, GTable};
pub use mushroom::{capture_hazard, MushroomModel, ModelObserver, NoObserver};
pub use rob::{RobModel, SidePolicy};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ChamberSide, MushroomGeometry, RobGeometry};
use crate::roots::brent;

/// Phase-space volume of the fast component available to the particle.
pub trait PhaseVolume {
    fn value(&self, y_b: f64) -> f64;
    fn slope(&self, y_b: f64) -> f64;
}

/// `V_c` of the mushroom/stadium chaotic zone.
#[derive(Debug, Clone, Copy)]
pub struct ChaoticVolume<'a>(pub &'a MushroomGeometry);

impl PhaseVolume for ChaoticVolume<'_> {
    fn value(&self, y_b: f64) -> f64 {
        self.0.chaotic_volume(y_b)
    }
    fn slope(&self, y_b: f64) -> f64 {
        self.0.chaotic_volume_slope(y_b)
    }
}

/// One-dimensional chamber length of the ROB.
#[derive(Debug, Clone, Copy)]
pub struct ChamberVolume<'a>(pub &'a RobGeometry, pub ChamberSide);

impl PhaseVolume for ChamberVolume<'_> {
    fn value(&self, y_b: f64) -> f64 {
        self.0.chamber_volume(y_b, self.1)
    }
    fn slope(&self, _y_b: f64) -> f64 {
        -self.1.sign()
    }
}

/// Which adiabatic quantity a value refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InvariantKind {
    Ergodic { d: u32 },
    RobUp,
    RobDown,
    RobFree,
    MushroomLeaky,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdiabaticInvariant {
    pub value: f64,
    pub kind: InvariantKind,
}

/// Branch of a reduced model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    ChamberUp,
    ChamberDown,
    Free,
    Chaotic,
    Captured { w_c: f64 },
}

impl Branch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::ChamberUp => "chamber-up",
            Branch::ChamberDown => "chamber-down",
            Branch::Free => "free",
            Branch::Chaotic => "chaotic",
            Branch::Captured { .. } => "captured",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedState {
    pub y_b: f64,
    pub v_b: f64,
    pub t: f64,
    pub branch: Branch,
    /// Invariant level of the current branch.
    pub j: f64,
    /// Unspent exponential capture budget; `None` until drawn.
    pub hazard_left: Option<f64>,
}

impl ReducedState {
    pub fn bar_energy(&self, k: f64) -> f64 {
        0.5 * (self.v_b * self.v_b + k * self.y_b * self.y_b)
    }
}

fn check_energy(e_b: f64, e: f64) -> Result<()> {
    if e_b > e * (1.0 + 1e-12) {
        Err(Error::EnergyExceeded { e_b, e })
    } else {
        Ok(())
    }
}

/// Sample grid `t0 + n dt`, `n = 0..=last`, with the last point at or after `t_end`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SampleGrid {
    t0: f64,
    dt: f64,
    next: usize,
    last: usize,
}

impl SampleGrid {
    pub(crate) fn new(t0: f64, t_end: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !(t_end > t0) {
            return Err(Error::InvalidSpec(format!(
                "need t_end > t0 and sample_dt > 0 (got t0={t0}, t_end={t_end}, dt={dt})"
            )));
        }
        Ok(Self {
            t0,
            dt,
            next: 0,
            last: ((t_end - t0) / dt - 1e-9).ceil().max(0.0) as usize,
        })
    }

    /// Final grid time; runs stop here.
    pub(crate) fn end(&self) -> f64 {
        self.t0 + self.last as f64 * self.dt
    }

    /// Next pending sample time.
    pub(crate) fn peek(&self) -> Option<f64> {
        (self.next <= self.last).then(|| self.t0 + self.next as f64 * self.dt)
    }

    /// Emits every pending sample with time `<= t` (strictly `< t` if `!inclusive`).
    pub(crate) fn emit_until(&mut self, t: f64, inclusive: bool, mut at: impl FnMut(f64)) {
        while let Some(ts) = self.peek() {
            if ts < t || (inclusive && ts <= t) {
                at(ts);
                self.next += 1;
            } else {
                break;
            }
        }
    }
}

/// Averaged bar acceleration for an ergodic fast subsystem of dimension `d`:
/// `-k y + (2/d)(E - E_b) V_c'/V_c` (unit bar mass).
pub fn ergodic_rhs<V: PhaseVolume>(
    vol: &V,
    k: f64,
    y_b: f64,
    v_b: f64,
    e: f64,
    d: u32,
) -> Result<f64> {
    let e_b = 0.5 * (v_b * v_b + k * y_b * y_b);
    check_energy(e_b, e)?;
    Ok(-k * y_b + 2.0 / d as f64 * (e - e_b) * vol.slope(y_b) / vol.value(y_b))
}

/// Ergodic invariant `(E - E_b)^{d/2} V_c`.
pub fn ergodic_invariant<V: PhaseVolume>(vol: &V, k: f64, y_b: f64, v_b: f64, e: f64, d: u32) -> f64 {
    let e_p = (e - 0.5 * (v_b * v_b + k * y_b * y_b)).max(0.0);
    e_p.powf(d as f64 / 2.0) * vol.value(y_b)
}

/// `k y^2 / 2 + (J / V_c)^{2/d}`.
pub fn u_effective<V: PhaseVolume>(vol: &V, k: f64, y_b: f64, j: f64, d: u32) -> f64 {
    0.5 * k * y_b * y_b + (j / vol.value(y_b)).powf(2.0 / d as f64)
}

/// Force law of the averaged motion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForceLaw {
    /// `(2/d) E_p V_c'/V_c`.
    Ergodic { d: u32 },
    /// `E_p V'/V_c`.
    Leaky,
}

/// Bar position where the averaged particle pressure balances the spring at
/// zero bar velocity.
pub fn pressure_equilibrium(geom: &MushroomGeometry, e: f64, law: ForceLaw) -> Result<f64> {
    let k = geom.spring;
    let a = (2.0 * e / k).sqrt();
    let residual = |y: f64| pressure_residual(geom, e, law, y);
    let lo = -a * (1.0 - 1e-12);
    let hi = a * (1.0 - 1e-12);
    // the pressure pushes the bar down, so the balance lies below 0
    let (a0, b0) = if residual(0.0) < 0.0 { (lo, 0.0) } else { (0.0, hi) };
    brent(residual, a0, b0, 1e-14, 200)
        .map_err(|_| Error::NoRoot(format!("no pressure equilibrium in [{lo}, {hi}]")))
}

/// Residual `F(y) - k y` of the equilibrium condition.
pub fn pressure_residual(geom: &MushroomGeometry, e: f64, law: ForceLaw, y: f64) -> f64 {
    let k = geom.spring;
    let e_p = e - 0.5 * k * y * y;
    let force = match law {
        ForceLaw::Ergodic { d } => {
            2.0 / d as f64 * e_p * geom.chaotic_volume_slope(y) / geom.chaotic_volume(y)
        }
        ForceLaw::Leaky => e_p * geom.leaky_log_slope(y),
    };
    force - k * y
}
