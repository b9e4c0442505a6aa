//! Billiard tables and their phase-space volume functions.
//!
//! Two families are supported:
//!
//! * the rectangle with an oscillating bar (ROB): a rectangle `[0, L] x [-h/2, h/2]`
//!   partially split by a zero-thickness horizontal bar spanning `x in [0, lambda]`
//!   at height `y_b`;
//! * the slanted mushroom / slanted half-stadium: a half-disc cap of radius `h`
//!   sitting on the line `y = 0`, joined through a throat `|x| < w(y_b)` to a
//!   symmetric trapezoidal stem whose side walls lean inward by `theta` and whose
//!   floor is the bar at `y = y_b - ell0`.
//!
//! Everything here is a pure function of the bar position.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack used when deciding whether a point is inside the closed domain.
pub const DOMAIN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RobGeometry {
    /// Horizontal length `L`.
    pub length: f64,
    /// Total height `h`.
    pub height: f64,
    /// Bar length `lambda`.
    pub bar_length: f64,
    /// Spring constant `k`.
    pub spring: f64,
    pub bar_mass: f64,
    /// Conserved vertical energy (particle vertical + bar).
    pub energy: f64,
    /// Particle horizontal speed `|u_p|`; fixes the passage period.
    pub horizontal_speed: f64,
}

impl Default for RobGeometry {
    fn default() -> Self {
        Self {
            length: 2.0,
            height: 2.0,
            bar_length: 1.0,
            spring: 81.0,
            bar_mass: 1.0,
            energy: 1.0,
            horizontal_speed: 18.0 / 5f64.sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChamberSide {
    Up,
    Down,
}

impl ChamberSide {
    /// `+1` above the bar, `-1` below.
    #[inline]
    pub fn sign(self) -> f64 {
        match self {
            ChamberSide::Up => 1.0,
            ChamberSide::Down => -1.0,
        }
    }
}

impl RobGeometry {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidGeometry(msg));
        if !(self.length > 0.0) {
            return bad(format!("length must be positive (got {})", self.length));
        }
        if !(self.bar_length > 0.0 && self.bar_length < self.length) {
            return bad(format!(
                "bar_length must lie in (0, length) (got {} with length {})",
                self.bar_length, self.length
            ));
        }
        if !(self.height > 0.0) {
            return bad(format!("height must be positive (got {})", self.height));
        }
        if !(self.spring > 0.0) {
            return bad(format!("spring must be positive (got {})", self.spring));
        }
        if !(self.bar_mass > 0.0) {
            return bad(format!("bar_mass must be positive (got {})", self.bar_mass));
        }
        if !(self.energy > 0.0) {
            return bad(format!("energy must be positive (got {})", self.energy));
        }
        if !(self.horizontal_speed > 0.0) {
            return bad(format!(
                "horizontal_speed must be positive (got {})",
                self.horizontal_speed
            ));
        }
        if self.max_amplitude() >= 0.5 * self.height {
            return bad(format!(
                "bar amplitude bound {} reaches the top/bottom walls (height {})",
                self.max_amplitude(),
                self.height
            ));
        }
        Ok(())
    }

    /// `sqrt(2E/k)`: largest reachable `|y_b|`.
    pub fn max_amplitude(&self) -> f64 {
        (2.0 * self.energy / self.spring).sqrt()
    }

    pub fn omega(&self) -> f64 {
        (self.spring / self.bar_mass).sqrt()
    }

    pub fn bar_period(&self) -> f64 {
        2.0 * PI / self.omega()
    }

    /// Fraction of the horizontal period spent over/under the bar.
    pub fn tau(&self) -> f64 {
        self.bar_length / self.length
    }

    /// Horizontal bounce period `2L/|u_p|`.
    pub fn passage_period(&self) -> f64 {
        2.0 * self.length / self.horizontal_speed
    }

    /// One-dimensional configuration length of the chamber on `side`.
    #[inline]
    pub fn chamber_volume(&self, y_b: f64, side: ChamberSide) -> f64 {
        0.5 * self.height - side.sign() * y_b
    }

    /// Probability of entering the upper chamber: its share of the total gap.
    #[inline]
    pub fn up_probability(&self, y_b: f64) -> f64 {
        self.chamber_volume(y_b, ChamberSide::Up) / self.height
    }
}

/// Quadratic throat-opening protocol with its minimum at the pressure equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThroatProtocol {
    pub y_f: f64,
    pub w_min: f64,
    pub c_below: f64,
    pub c_above: f64,
    pub w_max: f64,
}

impl Default for ThroatProtocol {
    fn default() -> Self {
        Self {
            y_f: -0.2436,
            w_min: 0.7,
            c_below: 0.6,
            c_above: 6.0,
            w_max: 1.0,
        }
    }
}

impl ThroatProtocol {
    #[inline]
    fn coefficient(&self, y_b: f64) -> f64 {
        if y_b < self.y_f {
            self.c_below
        } else {
            self.c_above
        }
    }

    #[inline]
    pub fn width(&self, y_b: f64) -> f64 {
        let d = y_b - self.y_f;
        (self.w_min + self.coefficient(y_b) * d * d).min(self.w_max)
    }

    /// `dw/dy_b`; zero inside the clamped zones.
    #[inline]
    pub fn slope(&self, y_b: f64) -> f64 {
        let d = y_b - self.y_f;
        let c = self.coefficient(y_b);
        if self.w_min + c * d * d >= self.w_max {
            0.0
        } else {
            2.0 * c * d
        }
    }

    /// Bar positions where the protocol meets the clamp, `(below, above)`.
    pub fn clamp_points(&self) -> (f64, f64) {
        let span = (self.w_max - self.w_min).max(0.0);
        (
            self.y_f - (span / self.c_below).sqrt(),
            self.y_f + (span / self.c_above).sqrt(),
        )
    }

    /// Bar positions where the width equals `w`, `(below, above)`.
    pub fn level_points(&self, w: f64) -> Option<(f64, f64)> {
        if w < self.w_min || w > self.w_max {
            return None;
        }
        let span = w - self.w_min;
        Some((
            self.y_f - (span / self.c_below).sqrt(),
            self.y_f + (span / self.c_above).sqrt(),
        ))
    }

    pub fn validate(&self, cap_radius: f64) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidGeometry(msg));
        if !(self.w_min > 0.0 && self.w_min <= self.w_max) {
            return bad(format!(
                "throat.w_min must lie in (0, w_max] (got {} with w_max {})",
                self.w_min, self.w_max
            ));
        }
        if self.w_max > cap_radius {
            return bad(format!(
                "throat.w_max {} exceeds cap radius {}",
                self.w_max, cap_radius
            ));
        }
        if !(self.c_below > 0.0 && self.c_above > 0.0) {
            return bad("throat coefficients must be positive".into());
        }
        if !self.y_f.is_finite() {
            return bad("throat.y_f must be finite".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MushroomGeometry {
    /// Cap radius `h`; also the stem half-width at the throat line.
    pub cap_radius: f64,
    /// Reference stem length `ell0`; the stem length is `ell0 - y_b`.
    pub stem_length: f64,
    /// Inward slant of the stem walls.
    pub tan_theta: f64,
    pub spring: f64,
    pub bar_mass: f64,
    pub energy: f64,
    pub throat: ThroatProtocol,
    /// Throat pinned fully open (`w = h`): the ergodic half-stadium.
    pub stadium_mode: bool,
}

impl Default for MushroomGeometry {
    fn default() -> Self {
        Self {
            cap_radius: 1.0,
            stem_length: 2.0,
            tan_theta: 0.17,
            spring: 1.0,
            bar_mass: 1.0,
            energy: 1.0,
            throat: ThroatProtocol::default(),
            stadium_mode: false,
        }
    }
}

impl MushroomGeometry {
    pub fn stadium() -> Self {
        Self {
            stadium_mode: true,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidGeometry(msg));
        for (name, value) in [
            ("cap_radius", self.cap_radius),
            ("stem_length", self.stem_length),
            ("spring", self.spring),
            ("bar_mass", self.bar_mass),
            ("energy", self.energy),
        ] {
            if !(value > 0.0) {
                return bad(format!("{name} must be positive (got {value})"));
            }
        }
        if !(self.tan_theta >= 0.0) {
            return bad(format!(
                "tan_theta must be non-negative (got {})",
                self.tan_theta
            ));
        }
        let a = self.max_amplitude();
        let ell_min = self.stem_length - a;
        if ell_min <= 0.0 {
            return bad(format!(
                "stem length ell0 - y_b vanishes at reachable y_b = {a} (ell0 = {})",
                self.stem_length
            ));
        }
        let ell_max = self.stem_length + a;
        if self.cap_radius - ell_max * self.tan_theta <= 0.0 {
            return bad(format!(
                "stem bottom width closes at reachable y_b = {} (tan_theta = {})",
                -a, self.tan_theta
            ));
        }
        if !self.stadium_mode {
            self.throat.validate(self.cap_radius)?;
        }
        Ok(())
    }

    /// `sqrt(2E/k)`: largest reachable `|y_b|`.
    pub fn max_amplitude(&self) -> f64 {
        (2.0 * self.energy / self.spring).sqrt()
    }

    pub fn omega(&self) -> f64 {
        (self.spring / self.bar_mass).sqrt()
    }

    pub fn bar_period(&self) -> f64 {
        2.0 * PI / self.omega()
    }

    #[inline]
    pub fn ell(&self, y_b: f64) -> f64 {
        self.stem_length - y_b
    }

    /// Height of the bar face (stem floor).
    #[inline]
    pub fn floor(&self, y_b: f64) -> f64 {
        y_b - self.stem_length
    }

    /// Half-width of the stem at height `y <= 0`.
    #[inline]
    pub fn stem_half_width(&self, y: f64) -> f64 {
        self.cap_radius + y * self.tan_theta
    }

    #[inline]
    pub fn throat_width(&self, y_b: f64) -> f64 {
        if self.stadium_mode {
            self.cap_radius
        } else {
            self.throat.width(y_b)
        }
    }

    #[inline]
    pub fn throat_slope(&self, y_b: f64) -> f64 {
        if self.stadium_mode {
            0.0
        } else {
            self.throat.slope(y_b)
        }
    }

    /// Total phase-space volume at unit particle energy, without domain checks.
    #[inline]
    pub fn total_volume(&self, y_b: f64) -> f64 {
        let h = self.cap_radius;
        let ell = self.ell(y_b);
        PI * PI * h * h + 2.0 * PI * (2.0 * h * ell - ell * ell * self.tan_theta)
    }

    /// `dV/dy_b = -2 pi (2h - 2 ell tan(theta))`.
    #[inline]
    pub fn total_volume_slope(&self, y_b: f64) -> f64 {
        let ell = self.ell(y_b);
        -2.0 * PI * (2.0 * self.cap_radius - 2.0 * ell * self.tan_theta)
    }

    #[inline]
    pub fn elliptic_volume_of_width(&self, w: f64) -> f64 {
        let h = self.cap_radius;
        let r = (w / h).clamp(0.0, 1.0);
        if r == 1.0 {
            return 0.0;
        }
        2.0 * PI * h * h * (r.acos() - r * (1.0 - r * r).sqrt())
    }

    /// `dV_ell/dw = -4 pi h sqrt(1 - (w/h)^2)`.
    #[inline]
    pub fn elliptic_volume_width_slope(&self, w: f64) -> f64 {
        let h = self.cap_radius;
        let r = (w / h).clamp(0.0, 1.0);
        -4.0 * PI * h * (1.0 - r * r).sqrt()
    }

    #[inline]
    pub fn elliptic_volume(&self, y_b: f64) -> f64 {
        if self.stadium_mode {
            0.0
        } else {
            self.elliptic_volume_of_width(self.throat.width(y_b))
        }
    }

    /// `dV_ell/dy_b`, through the throat protocol.
    #[inline]
    pub fn elliptic_volume_slope(&self, y_b: f64) -> f64 {
        if self.stadium_mode {
            return 0.0;
        }
        let slope = self.throat.slope(y_b);
        if slope == 0.0 {
            0.0
        } else {
            self.elliptic_volume_width_slope(self.throat.width(y_b)) * slope
        }
    }

    #[inline]
    pub fn chaotic_volume(&self, y_b: f64) -> f64 {
        self.total_volume(y_b) - self.elliptic_volume(y_b)
    }

    #[inline]
    pub fn chaotic_volume_slope(&self, y_b: f64) -> f64 {
        self.total_volume_slope(y_b) - self.elliptic_volume_slope(y_b)
    }

    /// `V'(y_b) / V_c(y_b)`: the leaky-law logarithmic derivative.
    #[inline]
    pub fn leaky_log_slope(&self, y_b: f64) -> f64 {
        self.total_volume_slope(y_b) / self.chaotic_volume(y_b)
    }

    /// Bar positions where the volume functions lose smoothness.
    pub fn kinks(&self) -> Vec<f64> {
        if self.stadium_mode {
            return Vec::new();
        }
        let (lo, hi) = self.throat.clamp_points();
        vec![lo, self.throat.y_f, hi]
    }

    fn check_ell(&self, y_b: f64) -> Result<()> {
        let ell = self.ell(y_b);
        if ell <= 0.0 {
            Err(Error::DegenerateGeometry { y_b, ell })
        } else {
            Ok(())
        }
    }

    /// Half-disc plus trapezoid area, times `2 pi`.
    pub fn v_total(&self, y_b: f64) -> Result<f64> {
        self.check_ell(y_b)?;
        Ok(self.total_volume(y_b))
    }

    /// Phase-space volume of cap orbits that never reach a throat of width `w`.
    pub fn v_ell(&self, w: f64) -> Result<f64> {
        let h = self.cap_radius;
        if !(w >= 0.0 && w <= h) {
            return Err(Error::WidthOutOfRange { w, h });
        }
        Ok(self.elliptic_volume_of_width(w))
    }

    pub fn v_chaotic(&self, y_b: f64) -> Result<f64> {
        let total = self.v_total(y_b)?;
        let ell = if self.stadium_mode {
            0.0
        } else {
            self.v_ell(self.throat.width(y_b))?
        };
        Ok(total - ell)
    }

    /// Whether `(x, y)` lies in the closed table for bar position `y_b`.
    pub fn contains(&self, x: f64, y: f64, y_b: f64, tol: f64) -> bool {
        let h = self.cap_radius;
        if y >= 0.0 {
            x * x + y * y <= (h + tol) * (h + tol)
        } else {
            y >= self.floor(y_b) - tol && x.abs() <= self.stem_half_width(y) + tol
        }
    }
}

/// Which table a configuration refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeometryId {
    Rob,
    Stadium,
    Mushroom,
}

impl GeometryId {
    pub fn as_str(self) -> &'static str {
        match self {
            GeometryId::Rob => "rob",
            GeometryId::Stadium => "stadium",
            GeometryId::Mushroom => "mushroom",
        }
    }

    /// The table with its default parameters.
    pub fn default_table(self) -> Table {
        match self {
            GeometryId::Rob => Table::Rob(RobGeometry::default()),
            GeometryId::Stadium => Table::Mushroom(MushroomGeometry::stadium()),
            GeometryId::Mushroom => Table::Mushroom(MushroomGeometry::default()),
        }
    }
}

impl std::str::FromStr for GeometryId {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "rob" => Ok(GeometryId::Rob),
            "stadium" => Ok(GeometryId::Stadium),
            "mushroom" => Ok(GeometryId::Mushroom),
            other => Err(format!("unknown geometry '{other}' (rob|stadium|mushroom)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Table {
    Rob(RobGeometry),
    Mushroom(MushroomGeometry),
}

impl Table {
    pub fn id(&self) -> GeometryId {
        match self {
            Table::Rob(_) => GeometryId::Rob,
            Table::Mushroom(g) if g.stadium_mode => GeometryId::Stadium,
            Table::Mushroom(_) => GeometryId::Mushroom,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Table::Rob(g) => g.validate(),
            Table::Mushroom(g) => g.validate(),
        }
    }

    pub fn spring(&self) -> f64 {
        match self {
            Table::Rob(g) => g.spring,
            Table::Mushroom(g) => g.spring,
        }
    }

    pub fn bar_mass(&self) -> f64 {
        match self {
            Table::Rob(g) => g.bar_mass,
            Table::Mushroom(g) => g.bar_mass,
        }
    }

    pub fn energy(&self) -> f64 {
        match self {
            Table::Rob(g) => g.energy,
            Table::Mushroom(g) => g.energy,
        }
    }

    pub fn bar_period(&self) -> f64 {
        match self {
            Table::Rob(g) => g.bar_period(),
            Table::Mushroom(g) => g.bar_period(),
        }
    }

    /// Number of particle velocity components that carry energy.
    pub fn particle_dof(&self) -> usize {
        match self {
            Table::Rob(_) => 1,
            Table::Mushroom(_) => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Region {
    FreeSpan,
    ChamberUp,
    ChamberDown,
    Cap,
    Stem,
}

impl Region {
    pub fn as_str(self) -> &'static str {
        match self {
            Region::FreeSpan => "free-span",
            Region::ChamberUp => "chamber-up",
            Region::ChamberDown => "chamber-down",
            Region::Cap => "cap",
            Region::Stem => "stem",
        }
    }
}

/// Tags the sub-region holding the particle. Points on internal boundaries are
/// resolved deterministically: at the ROB bar tip by the side of the bar the
/// particle is on, on the mushroom throat line by the sign of `v`.
pub fn classify_region(
    table: &Table,
    (x, y): (f64, f64),
    (_u, v): (f64, f64),
    y_b: f64,
) -> Result<Region> {
    let outside = || Error::OutsideDomain { x, y, y_b };
    match table {
        Table::Rob(g) => {
            let half = 0.5 * g.height;
            if x < -DOMAIN_TOL
                || x > g.length + DOMAIN_TOL
                || y.abs() > half + DOMAIN_TOL
            {
                return Err(outside());
            }
            if x > g.bar_length {
                Ok(Region::FreeSpan)
            } else if y >= y_b {
                Ok(Region::ChamberUp)
            } else {
                Ok(Region::ChamberDown)
            }
        }
        Table::Mushroom(g) => {
            if !g.contains(x, y, y_b, DOMAIN_TOL) {
                return Err(outside());
            }
            if y > 0.0 {
                Ok(Region::Cap)
            } else if y < 0.0 {
                Ok(Region::Stem)
            } else if v > 0.0 {
                Ok(Region::Cap)
            } else {
                Ok(Region::Stem)
            }
        }
    }
}
