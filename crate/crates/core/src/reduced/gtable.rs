use crate::error::Result;
use crate::geometry::MushroomGeometry;
use crate::quadrature::integrate;

const QUAD_TOL: f64 = 1e-12;

/// `ln G(y) = int_0^y V'/V_c`, by adaptive quadrature split at the kinks.
pub fn log_g_direct(geom: &MushroomGeometry, y_b: f64) -> Result<f64> {
    integrate_split(geom, 0.0, y_b)
}

/// `G(y) = exp(int_0^y V'/V_c)`.
pub fn g_factor(geom: &MushroomGeometry, y_b: f64) -> Result<f64> {
    Ok(log_g_direct(geom, y_b)?.exp())
}

fn integrate_split(geom: &MushroomGeometry, a: f64, b: f64) -> Result<f64> {
    let (lo, hi, sign) = if a <= b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut cuts = vec![lo];
    cuts.extend(geom.kinks().into_iter().filter(|&k| k > lo && k < hi));
    cuts.push(hi);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        total += integrate(|s| geom.leaky_log_slope(s), w[0], w[1], QUAD_TOL)?;
    }
    Ok(sign * total)
}

/// Cached `ln G` and `V'/V_c` on a uniform grid with cubic Hermite
/// interpolation. A cell containing a kink of `V'/V_c` is split at the kink.
#[derive(Debug, Clone)]
pub struct GTable {
    geom: MushroomGeometry,
    y0: f64,
    step: f64,
    log_g: Vec<f64>,
    /// `V'/V_c` at the nodes.
    slope: Vec<f64>,
    /// `d(V'/V_c)/dy` at the nodes.
    curvature: Vec<f64>,
    /// Per cell: kink position with `ln G` there.
    kink: Vec<Option<(f64, f64)>>,
    /// Cells near a kink, where `V'/V_c` is evaluated directly.
    exact: Vec<bool>,
}

/// Cells on either side of a kink cell evaluated without interpolation.
const NEAR_KINK: usize = 16;

#[inline]
fn hermite(s: f64, h: f64, p0: f64, p1: f64, d0: f64, d1: f64) -> f64 {
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * p0
        + (s3 - 2.0 * s2 + s) * h * d0
        + (-2.0 * s3 + 3.0 * s2) * p1
        + (s3 - s2) * h * d1
}

impl GTable {
    pub const DEFAULT_POINTS: usize = 2048;

    /// Covers the reachable bar range `|y_b| <= sqrt(2E/k)` plus a small margin.
    pub fn new(geom: &MushroomGeometry) -> Result<Self> {
        Self::with_points(geom, Self::DEFAULT_POINTS)
    }

    pub fn with_points(geom: &MushroomGeometry, n: usize) -> Result<Self> {
        let reach = geom.max_amplitude() * 1.001;
        let y0 = -reach;
        let step = 2.0 * reach / (n - 1) as f64;
        let nodes: Vec<f64> = (0..n).map(|i| y0 + i as f64 * step).collect();
        // accumulate from the node nearest 0 outward so that G(0) = 1 exactly
        let i0 = ((0.0 - y0) / step).round() as usize;
        let mut log_g = vec![0.0; n];
        log_g[i0] = log_g_direct(geom, nodes[i0])?;
        for i in i0 + 1..n {
            log_g[i] = log_g[i - 1] + integrate_split(geom, nodes[i - 1], nodes[i])?;
        }
        for i in (0..i0).rev() {
            log_g[i] = log_g[i + 1] - integrate_split(geom, nodes[i], nodes[i + 1])?;
        }
        let slope: Vec<f64> = nodes.iter().map(|&y| geom.leaky_log_slope(y)).collect();
        let curvature = nodes
            .iter()
            .zip(&slope)
            .map(|(&y, &s)| slope_derivative(geom, y, s))
            .collect();
        let kinks = geom.kinks();
        let kink = nodes
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                kinks
                    .iter()
                    .find(|&&k| k > w[0] && k < w[1])
                    .map(|&k| Ok((k, log_g[i] + integrate_split(geom, w[0], k)?)))
                    .transpose()
            })
            .collect::<Result<Vec<_>>>()?;
        let mut exact = vec![false; n - 1];
        for (i, _) in kink.iter().enumerate().filter(|(_, k)| k.is_some()) {
            let hi = (i + NEAR_KINK).min(n - 2);
            exact[i.saturating_sub(NEAR_KINK)..=hi].fill(true);
        }
        Ok(Self {
            geom: *geom,
            y0,
            step,
            log_g,
            slope,
            curvature,
            kink,
            exact,
        })
    }

    pub fn geometry(&self) -> &MushroomGeometry {
        &self.geom
    }

    pub fn range(&self) -> (f64, f64) {
        (self.y0, self.y0 + self.step * (self.log_g.len() - 1) as f64)
    }

    #[inline]
    fn cell(&self, y: f64) -> (usize, f64) {
        let n = self.log_g.len();
        let pos = ((y - self.y0) / self.step).clamp(0.0, (n - 1) as f64);
        let i = (pos.floor() as usize).min(n - 2);
        (i, self.y0 + i as f64 * self.step)
    }

    pub fn log_g(&self, y: f64) -> f64 {
        let (i, ya) = self.cell(y);
        let yb = ya + self.step;
        match self.kink[i] {
            Some((k, at_k)) => {
                let s_k = self.geom.leaky_log_slope(k);
                if y <= k {
                    hermite((y - ya) / (k - ya), k - ya, self.log_g[i], at_k, self.slope[i], s_k)
                } else {
                    hermite((y - k) / (yb - k), yb - k, at_k, self.log_g[i + 1], s_k, self.slope[i + 1])
                }
            }
            None => hermite(
                (y - ya) / self.step,
                self.step,
                self.log_g[i],
                self.log_g[i + 1],
                self.slope[i],
                self.slope[i + 1],
            ),
        }
    }

    /// Interpolated `V'/V_c`; exact close to the kinks.
    pub fn leaky_log_slope(&self, y: f64) -> f64 {
        let (i, ya) = self.cell(y);
        if self.exact[i] {
            return self.geom.leaky_log_slope(y);
        }
        hermite(
            (y - ya) / self.step,
            self.step,
            self.slope[i],
            self.slope[i + 1],
            self.curvature[i],
            self.curvature[i + 1],
        )
    }

    pub fn g(&self, y: f64) -> f64 {
        self.log_g(y).exp()
    }

    /// `ln(G / V_c)`: its increase along a leg is the capture probability mass.
    pub fn log_g_over_vc(&self, y: f64) -> f64 {
        self.log_g(y) - self.geom.chaotic_volume(y).ln()
    }
}

/// `d/dy (V'/V_c)` with `V'' = -4 pi tan(theta)` (one-sided at kinks).
fn slope_derivative(geom: &MushroomGeometry, y: f64, s: f64) -> f64 {
    let vc = geom.chaotic_volume(y);
    let v2 = -4.0 * std::f64::consts::PI * geom.tan_theta;
    (v2 - s * geom.chaotic_volume_slope(y)) / vc
}
