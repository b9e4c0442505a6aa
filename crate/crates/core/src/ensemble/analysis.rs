use std::mem::discriminant;

use serde::{Deserialize, Serialize};

use crate::dynamics::TraceSample;
use crate::error::{Error, Result};
use crate::geometry::{ChamberSide, Region, Table};
use crate::reduced::{Branch, GTable};

/// Centered moving average whose window shrinks symmetrically near the ends,
/// so the first and last points are left unsmoothed.
pub fn moving_average(x: &[f64], half: usize) -> Vec<f64> {
    let n = x.len();
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for &v in x {
        prefix.push(prefix.last().unwrap() + v);
    }
    (0..n)
        .map(|i| {
            let h = half.min(i).min(n - 1 - i);
            // direct sum for short windows keeps exact values exact
            if h <= 8 {
                x[i - h..=i + h].iter().sum::<f64>() / (2 * h + 1) as f64
            } else {
                (prefix[i + h + 1] - prefix[i - h]) / (2 * h + 1) as f64
            }
        })
        .collect()
}

/// Samples of half a window of length `period` on a grid of spacing `dt`.
fn half_window(period: f64, dt: f64) -> usize {
    (period / dt / 2.0 + 1e-9).floor() as usize
}

fn grid_step(t: &[f64]) -> Result<f64> {
    match t {
        [a, b, ..] if b > a => Ok(b - a),
        _ => Err(Error::SingularFit("need at least two increasing sample times".into())),
    }
}

/// Equilibration rate of one ΔKE series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub rate: f64,
    /// First time the smoothed series has fallen by a factor e.
    pub t_fold: Option<f64>,
    /// RMS residual of the log-linear fit.
    pub residual: f64,
    pub points: usize,
    pub no_decay: bool,
    pub smoothed: Vec<f64>,
}

/// Smooths `|ΔKE|` over one bar period, finds the first e-fold time `T` and
/// fits `-ln|ΔKE|` on `[0, T]` by least squares. The fit and the reference
/// level start at the first sample whose window is complete, and points below
/// twice the smoothed standard error are left out.
pub fn fit_rate(t: &[f64], delta_ke: &[f64], stderr: Option<&[f64]>, bar_period: f64) -> Result<RateFit> {
    if t.len() != delta_ke.len() || stderr.is_some_and(|s| s.len() != t.len()) {
        return Err(Error::SingularFit("series lengths differ".into()));
    }
    let dt = grid_step(t)?;
    let half = half_window(bar_period, dt);
    let abs: Vec<f64> = delta_ke.iter().map(|d| d.abs()).collect();
    let smoothed = moving_average(&abs, half);
    let noise = stderr.map(|s| moving_average(s, half));
    let no_decay = |smoothed: Vec<f64>| RateFit {
        rate: 0.0,
        t_fold: None,
        residual: 0.0,
        points: 0,
        no_decay: true,
        smoothed,
    };
    // the first sample with a full window is the reference level
    let start = half.min(t.len() - 1);
    let s0 = smoothed[start];
    if !(s0 > 0.0 && s0.is_finite()) {
        return Ok(no_decay(smoothed));
    }
    let Some(end) = smoothed[start..]
        .iter()
        .position(|&s| s <= 0.0 || (s0 / s).ln() >= 1.0 - 1e-12)
        .map(|i| i + start)
    else {
        return Ok(no_decay(smoothed));
    };
    let (mut xs, mut ys) = (vec![], vec![]);
    for j in start..=end {
        let s = smoothed[j];
        let floor = noise.as_ref().map_or(0.0, |n| 2.0 * n[j]);
        if s > 0.0 && s >= floor {
            xs.push(t[j]);
            ys.push(-s.ln());
        }
    }
    if xs.len() < 2 {
        return Err(Error::SingularFit(format!(
            "{} usable points before the e-fold time",
            xs.len()
        )));
    }
    let (slope, intercept) = least_squares(&xs, &ys);
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum::<f64>()
        / xs.len() as f64)
        .sqrt();
    Ok(RateFit {
        rate: slope,
        t_fold: Some(t[end]),
        residual,
        points: xs.len(),
        no_decay: false,
        smoothed,
    })
}

fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Rate statistics over repeated runs; runs without an e-fold are counted
/// but left out of the mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateSummary {
    pub mean: f64,
    /// Sample standard deviation over runs.
    pub std: f64,
    /// `std / sqrt(runs used)`.
    pub stderr: f64,
    pub runs: usize,
    pub no_decay: usize,
    pub mean_t_fold: f64,
}

pub fn aggregate_rates(fits: &[RateFit]) -> RateSummary {
    let used: Vec<&RateFit> = fits.iter().filter(|f| !f.no_decay).collect();
    let n = used.len() as f64;
    let no_decay = fits.len() - used.len();
    if used.is_empty() {
        return RateSummary {
            mean: 0.0,
            std: 0.0,
            stderr: 0.0,
            runs: fits.len(),
            no_decay,
            mean_t_fold: f64::NAN,
        };
    }
    let mean = used.iter().map(|f| f.rate).sum::<f64>() / n;
    let std = if used.len() > 1 {
        (used.iter().map(|f| (f.rate - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    RateSummary {
        mean,
        std,
        stderr: std / n.sqrt(),
        runs: fits.len(),
        no_decay,
        mean_t_fold: used.iter().filter_map(|f| f.t_fold).sum::<f64>() / n,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extrapolation {
    pub intercept: f64,
    pub slope: f64,
    pub intercept_std: f64,
    pub slope_std: f64,
    /// Weighted residual sum of squares.
    pub chi2: f64,
}

/// Weighted straight-line fit of rate against `sqrt(m)`, evaluated at `m = 0`.
/// Weights are `1/std^2` when every point has a positive std; the covariance
/// is inflated by the reduced chi-square when that exceeds one.
pub fn sqrt_m_extrapolation(points: &[(f64, f64, f64)]) -> Result<Extrapolation> {
    let mut ms: Vec<f64> = points.iter().map(|p| p.0).collect();
    ms.sort_by(f64::total_cmp);
    ms.dedup();
    if ms.len() < 2 {
        return Err(Error::SingularFit("need at least two distinct mass ratios".into()));
    }
    if points.iter().any(|p| !(p.0 >= 0.0) || !p.1.is_finite() || !(p.2 >= 0.0)) {
        return Err(Error::SingularFit("mass ratios and stds must be non-negative".into()));
    }
    let weighted = points.iter().all(|p| p.2 > 0.0);
    let w = |p: &(f64, f64, f64)| if weighted { 1.0 / (p.2 * p.2) } else { 1.0 };
    let (mut s, mut sx, mut sxx, mut sy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for p in points {
        let (x, y, wi) = (p.0.sqrt(), p.1, w(p));
        s += wi;
        sx += wi * x;
        sxx += wi * x * x;
        sy += wi * y;
        sxy += wi * x * y;
    }
    let det = s * sxx - sx * sx;
    if !(det > 0.0) {
        return Err(Error::SingularFit("degenerate design".into()));
    }
    let slope = (s * sxy - sx * sy) / det;
    let intercept = (sxx * sy - sx * sxy) / det;
    let chi2: f64 = points
        .iter()
        .map(|p| w(p) * (p.1 - intercept - slope * p.0.sqrt()).powi(2))
        .sum();
    let dof = points.len() as f64 - 2.0;
    let scale = match (weighted, dof > 0.0) {
        (true, true) => (chi2 / dof).max(1.0),
        (true, false) => 1.0,
        (false, true) => chi2 / dof,
        (false, false) => 0.0,
    };
    Ok(Extrapolation {
        intercept,
        slope,
        intercept_std: (scale * sxx / det).sqrt(),
        slope_std: (scale * s / det).sqrt(),
        chi2,
    })
}

/// Time at which smoothed `|ΔKE|` first falls to half its initial value,
/// interpolated linearly between samples.
pub fn transient_time(t: &[f64], delta_ke: &[f64], bar_period: f64) -> Result<f64> {
    let dt = grid_step(t)?;
    let abs: Vec<f64> = delta_ke.iter().map(|d| d.abs()).collect();
    let s = moving_average(&abs, half_window(bar_period, dt));
    let target = 0.5 * s[0];
    if s[0] <= target {
        return Ok(t[0]);
    }
    let i = s
        .iter()
        .position(|&v| v <= target)
        .ok_or(Error::NoCrossing {
            t_end: *t.last().unwrap(),
        })?;
    let frac = (s[i - 1] - target) / (s[i - 1] - s[i]);
    Ok(t[i - 1] + frac * (t[i] - t[i - 1]))
}

/// Adiabatic invariant along a recorded billiard trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantPoint {
    pub t: f64,
    pub j: f64,
    pub branch: Branch,
    /// The branch differs from the previous sample's.
    pub switch: bool,
}

/// Branch invariant at each sample: `E_b` on a free bar or a captured orbit,
/// `sqrt(E_p) V_side` in a ROB chamber and `E_p G(y_b)` on the chaotic part of
/// a mushroom or stadium.
pub fn invariant_trace(samples: &[TraceSample], table: &Table) -> Result<Vec<InvariantPoint>> {
    let g_table = match table {
        Table::Mushroom(g) => Some(GTable::new(g)?),
        Table::Rob(_) => None,
    };
    let mut out: Vec<InvariantPoint> = Vec::with_capacity(samples.len());
    for s in samples {
        let (branch, j) = match table {
            Table::Rob(g) => match s.region {
                Region::ChamberUp => (Branch::ChamberUp, s.e_p.sqrt() * g.chamber_volume(s.y_b, ChamberSide::Up)),
                Region::ChamberDown => (
                    Branch::ChamberDown,
                    s.e_p.sqrt() * g.chamber_volume(s.y_b, ChamberSide::Down),
                ),
                _ => (Branch::Free, s.e_b),
            },
            Table::Mushroom(g) => {
                if s.captured {
                    (Branch::Captured { w_c: g.throat_width(s.y_b) }, s.e_b)
                } else {
                    (Branch::Chaotic, s.e_p * g_table.as_ref().unwrap().g(s.y_b))
                }
            }
        };
        let switch = out
            .last()
            .is_some_and(|p| discriminant(&p.branch) != discriminant(&branch));
        out.push(InvariantPoint { t: s.t, j, branch, switch });
    }
    Ok(out)
}
