//! J-function, EXIT curves of the variable- and check-node decoders, tunnel
//! analysis and decoding thresholds.

use crate::codec::ReceptionProfile;
use crate::construct::CodeSpec;
use crate::degdist::{regular_bracket, variable_dist_empirical, DegreeDistribution};
use crate::error::{Error, Result};
use crate::quad::integrate;
use std::f64::consts::{LN_2, PI};
use std::sync::OnceLock;

pub const DEFAULT_GRID_POINTS: usize = 201;
/// J is taken as exactly 1 from here on.
pub const J_SIGMA_MAX: f64 = 25.0;
const TABLE_SEGMENTS: usize = 10_000;
const THRESHOLD_LOW: f64 = 0.05;
const THRESHOLD_TOL: f64 = 1e-4;

fn log2_one_plus_exp_neg(x: f64) -> f64 {
    let v = if x > 0.0 { (-x).exp().ln_1p() } else { -x + x.exp().ln_1p() };
    v / LN_2
}

/// Mutual information between a bit and a consistent Gaussian LLR with
/// standard deviation `sigma`, by adaptive quadrature.
pub fn j_function(sigma: f64) -> f64 {
    assert!(sigma >= 0.0, "sigma must be nonnegative");
    if sigma == 0.0 {
        return 0.0;
    }
    let mean = 0.5 * sigma * sigma;
    let norm = 1.0 / (sigma * (2.0 * PI).sqrt());
    let loss = integrate(
        |m| norm * (-(m - mean) * (m - mean) / (2.0 * sigma * sigma)).exp() * log2_one_plus_exp_neg(m),
        mean - 14.0 * sigma,
        mean + 14.0 * sigma,
        1e-13,
    );
    (1.0 - loss).clamp(0.0, 1.0)
}

/// Exact inverse of [`j_function`] by bisection, to `1e-10` in `J`.
pub fn j_inverse(info: f64) -> f64 {
    assert!((0.0..1.0).contains(&info), "J^-1 needs 0 <= I < 1, got {info}");
    if info == 0.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = j_table().bracket(info);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let v = j_function(mid);
        if (v - info).abs() <= 1e-10 {
            return mid;
        }
        if v < info {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Tabulated J on `[0, 25]` with Catmull-Rom interpolation.
pub struct JTable {
    step: f64,
    values: Vec<f64>,
}

impl JTable {
    fn build() -> Self {
        let step = J_SIGMA_MAX / TABLE_SEGMENTS as f64;
        // Two extra points past the end feed the last segment's spline.
        let values = (0..=TABLE_SEGMENTS + 2).map(|i| j_function(step * i as f64)).collect();
        Self { step, values }
    }

    fn at(&self, i: isize) -> f64 {
        // J is even in sigma, which supplies the point left of zero.
        self.values[i.unsigned_abs()]
    }

    pub fn eval(&self, sigma: f64) -> f64 {
        if sigma >= J_SIGMA_MAX {
            return 1.0;
        }
        let x = sigma.abs() / self.step;
        let i = (x.floor() as isize).min(TABLE_SEGMENTS as isize - 1);
        let t = x - i as f64;
        let (p0, p1, p2, p3) = (self.at(i - 1), self.at(i), self.at(i + 1), self.at(i + 2));
        let v = p1
            + 0.5 * t * (p2 - p0 + t * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + t * (3.0 * (p1 - p2) + p3 - p0)));
        v.clamp(0.0, 1.0)
    }

    /// Table nodes enclosing the level `info`.
    fn bracket(&self, info: f64) -> (f64, f64) {
        let n = TABLE_SEGMENTS + 1;
        let i = self.values[..n].partition_point(|&v| v < info);
        if i >= n {
            return (J_SIGMA_MAX, 2.0 * J_SIGMA_MAX);
        }
        let lo = i.saturating_sub(1) as f64 * self.step;
        (lo, i as f64 * self.step)
    }

    /// Inverse of the interpolated J.
    pub fn inverse(&self, info: f64) -> f64 {
        if info <= 0.0 {
            return 0.0;
        }
        if info >= 1.0 {
            return f64::INFINITY;
        }
        let (mut lo, mut hi) = self.bracket(info);
        if lo >= J_SIGMA_MAX {
            return J_SIGMA_MAX;
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.eval(mid) < info {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

pub fn j_table() -> &'static JTable {
    static TABLE: OnceLock<JTable> = OnceLock::new();
    TABLE.get_or_init(JTable::build)
}

/// Interpolated J used inside curve evaluations.
pub fn j_fast(sigma: f64) -> f64 {
    j_table().eval(sigma)
}

pub fn j_inverse_fast(info: f64) -> f64 {
    j_table().inverse(info)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    Vnd,
    CndInverted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExitCurve {
    pub kind: CurveKind,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

pub fn uniform_grid(points: usize) -> Vec<f64> {
    assert!(points >= 2);
    (0..points).map(|i| i as f64 / (points - 1) as f64).collect()
}

pub fn default_grid() -> Vec<f64> {
    uniform_grid(DEFAULT_GRID_POINTS)
}

/// VND transfer curve with a fraction `rho0` of variables lacking channel
/// evidence. At `I_A = 1` the analytic limit is used.
pub fn vnd_curve(lambda: &DegreeDistribution, sigma_ch: f64, rho0: f64, grid: &[f64]) -> ExitCurve {
    let entries = lambda.node_to_edge().entries().to_vec();
    let values = grid
        .iter()
        .map(|&ia| {
            if ia >= 1.0 {
                let with_ch: f64 = entries.iter().map(|&(d, w)| if d >= 2 { w } else { w * j_fast(sigma_ch) }).sum();
                let without: f64 = entries.iter().filter(|&&(d, _)| d >= 2).map(|&(_, w)| w).sum();
                return (1.0 - rho0) * with_ch + rho0 * without;
            }
            let s = j_inverse_fast(ia);
            let mut with_ch = 0.0;
            let mut without = 0.0;
            for &(d, w) in &entries {
                let dm1 = (d - 1) as f64;
                with_ch += w * j_fast((dm1 * s * s + sigma_ch * sigma_ch).sqrt());
                without += w * j_fast(dm1.sqrt() * s);
            }
            (1.0 - rho0) * with_ch + rho0 * without
        })
        .collect();
    ExitCurve { kind: CurveKind::Vnd, grid: grid.to_vec(), values }
}

/// VND curve for a decoder where every variable has channel evidence.
pub fn vnd_curve_full_reception(lambda: &DegreeDistribution, sigma_ch: f64, grid: &[f64]) -> ExitCurve {
    let entries = lambda.node_to_edge().entries().to_vec();
    let values = grid
        .iter()
        .map(|&ia| {
            if ia >= 1.0 {
                return entries.iter().map(|&(d, w)| if d >= 2 { w } else { w * j_fast(sigma_ch) }).sum();
            }
            let s2 = j_inverse_fast(ia).powi(2);
            entries.iter().map(|&(d, w)| w * j_fast(((d - 1) as f64 * s2 + sigma_ch * sigma_ch).sqrt())).sum()
        })
        .collect();
    ExitCurve { kind: CurveKind::Vnd, grid: grid.to_vec(), values }
}

/// `J(J^-1(1 - I_E) / sqrt(i - 1))` on the grid: the inverted CND curve is
/// `1 - sum_i omega_i * basis_i`.
pub fn cnd_basis(degree: u32, grid: &[f64]) -> Vec<f64> {
    assert!(degree >= 2, "check degree must be at least 2");
    let root = ((degree - 1) as f64).sqrt();
    grid.iter()
        .map(|&ie| {
            let rest = 1.0 - ie;
            if rest <= 0.0 {
                0.0
            } else {
                j_fast(j_inverse_fast(rest) / root)
            }
        })
        .collect()
}

pub fn cnd_inverted_curve(omega: &DegreeDistribution, grid: &[f64]) -> ExitCurve {
    let edge = omega.node_to_edge();
    let mut values = vec![1.0; grid.len()];
    for &(i, w) in edge.entries() {
        for (v, b) in values.iter_mut().zip(cnd_basis(i, grid)) {
            *v -= w * b;
        }
    }
    for v in &mut values {
        *v = v.clamp(0.0, 1.0);
    }
    ExitCurve { kind: CurveKind::CndInverted, grid: grid.to_vec(), values }
}

/// Smallest `vnd - cnd` over the grid excluding `I = 1`, where both curves
/// meet by construction. The tunnel is open when that gap is positive.
pub fn tunnel_gap(vnd: &ExitCurve, cnd: &ExitCurve) -> Result<(bool, f64)> {
    if vnd.grid != cnd.grid {
        return Err(Error::GridMismatch);
    }
    let min_gap = vnd
        .grid
        .iter()
        .zip(vnd.values.iter().zip(&cnd.values))
        .filter(|(&i, _)| i < 1.0)
        .map(|(_, (v, c))| v - c)
        .fold(f64::INFINITY, f64::min);
    Ok((min_gap > 0.0, min_gap))
}

/// Largest absolute difference between two curves on the same grid.
pub fn sup_distance(a: &ExitCurve, b: &ExitCurve) -> Result<f64> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch);
    }
    Ok(a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
}

/// How the variable-node degree distribution at a reception state is obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaModel {
    /// Histogram over `trials` constructions with `k` message symbols.
    Empirical { k: usize, trials: usize, seed: u64, d_max: u32 },
    /// Two-point distribution matching the mean degree.
    Regular,
}

impl Default for LambdaModel {
    fn default() -> Self {
        LambdaModel::Empirical { k: 1000, trials: 8, seed: 0x5eed, d_max: crate::construct::DEFAULT_D_MAX }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisSettings {
    pub grid: Vec<f64>,
    pub lambda: LambdaModel,
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        Self { grid: default_grid(), lambda: LambdaModel::default() }
    }
}

impl AnalysisSettings {
    pub fn regular() -> Self {
        Self { lambda: LambdaModel::Regular, ..Self::default() }
    }
}

/// Edge-view variable distribution for check distribution `omega` after
/// `profile.l * K` encoded symbols.
pub fn lambda_for(omega: &DegreeDistribution, profile: &ReceptionProfile, model: &LambdaModel) -> Result<DegreeDistribution> {
    match *model {
        LambdaModel::Regular => {
            let alpha = omega.average_degree() * profile.l / (1.0 + profile.l);
            Ok(regular_bracket(alpha)?.1)
        }
        LambdaModel::Empirical { k, trials, seed, d_max } => {
            let l = profile.l_count(k);
            let spec = CodeSpec::new(k, 1.0, omega.clone(), seed).with_d_max(d_max).with_l_total(l.max(k));
            Ok(variable_dist_empirical(&spec, l, trials)?.node_to_edge())
        }
    }
}

/// VND and inverted CND curves for one operating point.
pub fn curves_at(
    omega: &DegreeDistribution,
    lambda: &DegreeDistribution,
    sigma_n: f64,
    rho0: f64,
    grid: &[f64],
) -> (ExitCurve, ExitCurve) {
    (vnd_curve(lambda, 2.0 / sigma_n, rho0, grid), cnd_inverted_curve(omega, grid))
}

/// Largest noise level with an open tunnel when decoding at rate `rate`.
pub fn threshold(omega: &DegreeDistribution, rate: f64, delta: f64, settings: &AnalysisSettings) -> Result<f64> {
    assert!(rate > 0.0 && rate < 1.0, "rate must lie in (0, 1)");
    let profile = ReceptionProfile::from_rate(rate, delta);
    let lambda = lambda_for(omega, &profile, &settings.lambda)?;
    let cnd = cnd_inverted_curve(omega, &settings.grid);
    let rho0 = profile.rho0();
    let open = |sigma: f64| -> Result<bool> {
        let vnd = vnd_curve(&lambda, 2.0 / sigma, rho0, &settings.grid);
        Ok(tunnel_gap(&vnd, &cnd)?.0)
    };
    if !open(THRESHOLD_LOW)? {
        return Err(Error::Infeasible(THRESHOLD_LOW));
    }
    let mut lo = THRESHOLD_LOW;
    let mut hi = 3.0;
    while open(hi)? {
        lo = hi;
        hi *= 2.0;
        if hi > 1e3 {
            return Ok(lo);
        }
    }
    while hi - lo > THRESHOLD_TOL {
        let mid = 0.5 * (lo + hi);
        if open(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}
