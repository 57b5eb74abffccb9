//! Robust check-node degree distribution search.
//!
//! With the variable degree tied to the check degree through
//! `alpha = beta (1 + delta) / (2 + delta)`, the design rate at an SNR point
//! is `1 / ((2 + delta)(1 - rho0))`, so `chi = C (2 + delta)(1 - rho0)` only
//! depends on `(delta, rho0)`. The search therefore walks `(delta, rho0)`
//! combinations in order of increasing `max chi` and asks, for each, whether
//! some `omega` keeps every tunnel open. That question is answered by a
//! linear program at a fixed average check degree `beta`, maximizing the
//! smallest gap with the VND curves frozen, followed by a fixed point on the
//! empirical variable distribution.

use crate::channel::capacity;
use crate::codec::ReceptionProfile;
use crate::degdist::{DegreeDistribution, NodeKind, View};
use crate::error::{Error, Result};
use crate::exitchart::{
    cnd_basis, cnd_inverted_curve, default_grid, lambda_for, sup_distance, tunnel_gap, vnd_curve, AnalysisSettings,
    ExitCurve, LambdaModel,
};
use minilp::{ComparisonOp, OptimizationDirection, Problem};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::fmt;

/// Slack allowed on the LP gap under the regular-approximation VND before a
/// `beta` is worth refining with the empirical distribution.
const SCREEN_SLACK: f64 = 0.005;
const REFINE_TOP: usize = 3;
const FIXED_POINT_ROUNDS: usize = 20;
const FIXED_POINT_TOL: f64 = 1e-4;
const COEF_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LambdaChoice {
    #[default]
    Empirical,
    Regular,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptProblem {
    /// Noise levels, lowest SNR (largest sigma) first.
    pub snr_points: Vec<f64>,
    pub i_max: u32,
    /// Allowed check degrees; `2..=i_max` when absent.
    #[serde(default)]
    pub degrees: Option<Vec<u32>>,
    #[serde(default = "default_delta_grid")]
    pub delta_grid: Vec<f64>,
    #[serde(default = "default_rho0_grid")]
    pub rho0_grid: Vec<f64>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_gap_min")]
    pub gap_min: f64,
    #[serde(default)]
    pub lambda: LambdaChoice,
    #[serde(default = "default_beta_step")]
    pub beta_step: f64,
}

pub fn default_delta_grid() -> Vec<f64> {
    (1..=20).map(|i| i as f64 / 20.0).collect()
}

pub fn default_rho0_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 20.0).collect()
}

fn default_epsilon() -> f64 {
    0.05
}

fn default_gap_min() -> f64 {
    1e-4
}

fn default_beta_step() -> f64 {
    0.05
}

impl OptProblem {
    pub fn new(snr_points: Vec<f64>, i_max: u32) -> Self {
        Self {
            snr_points,
            i_max,
            degrees: None,
            delta_grid: default_delta_grid(),
            rho0_grid: default_rho0_grid(),
            epsilon: default_epsilon(),
            gap_min: default_gap_min(),
            lambda: LambdaChoice::default(),
            beta_step: default_beta_step(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.snr_points.is_empty() || self.delta_grid.is_empty() || self.rho0_grid.is_empty() {
            return bad("snr_points, delta_grid and rho0_grid must be nonempty");
        }
        if self.snr_points.iter().any(|&s| !(s > 0.0)) {
            return bad("noise levels must be positive");
        }
        if self.snr_points.windows(2).any(|w| w[1] >= w[0]) {
            return bad("snr_points must run from low to high SNR (strictly decreasing sigma_n)");
        }
        if self.delta_grid.iter().any(|&d| !(d > 0.0)) {
            return bad("delta values must be positive");
        }
        if self.rho0_grid.iter().any(|&r| !(0.0..1.0).contains(&r)) {
            return bad("rho0 values must lie in [0, 1)");
        }
        if self.degree_set().is_empty() || self.degree_set().iter().any(|&d| d < 2) {
            return bad("allowed check degrees must be nonempty and at least 2");
        }
        if !(self.beta_step > 0.0) || !(self.epsilon > 0.0) {
            return bad("beta_step and epsilon must be positive");
        }
        Ok(())
    }

    pub fn degree_set(&self) -> Vec<u32> {
        let mut d = self.degrees.clone().unwrap_or_else(|| (2..=self.i_max).collect());
        d.sort_unstable();
        d.dedup();
        d
    }

    pub fn settings(&self) -> AnalysisSettings {
        match self.lambda {
            LambdaChoice::Empirical => AnalysisSettings::default(),
            LambdaChoice::Regular => AnalysisSettings::regular(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptResult {
    pub omega: DegreeDistribution,
    pub delta: f64,
    pub rho0: Vec<f64>,
    pub chi: Vec<f64>,
    pub max_chi: f64,
}

#[derive(Serialize)]
struct OptResultFile {
    omega: BTreeMap<u32, f64>,
    #[serde(rename = "Omega")]
    omega_node: String,
    delta: f64,
    rho0: Vec<f64>,
    chi: Vec<f64>,
    max_chi: f64,
}

impl OptResult {
    pub fn node_view(&self) -> DegreeDistribution {
        self.omega.edge_to_node()
    }

    pub fn to_json(&self) -> Result<String> {
        let file = OptResultFile {
            omega: self.omega.entries().iter().copied().collect(),
            omega_node: self.node_view().to_string(),
            delta: self.delta,
            rho0: self.rho0.clone(),
            chi: self.chi.clone(),
            max_chi: self.max_chi,
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }
}

/// Rate of the code after the reception state `(delta, rho0)` with mean
/// variable degree `alpha`.
pub fn code_rate(omega: &DegreeDistribution, delta: f64, rho0: f64, alpha: f64) -> f64 {
    let inv_beta: f64 = omega.node_to_edge().entries().iter().map(|&(i, w)| w / i as f64).sum();
    alpha / ((1.0 + delta) * (1.0 - rho0)) * inv_beta
}

/// Mean variable degree once sub-codes A and B are in.
pub fn alpha_for(beta: f64, delta: f64) -> f64 {
    beta * (1.0 + delta) / (2.0 + delta)
}

/// Rate at `(delta, rho0)`, which no longer depends on the check distribution.
pub fn design_rate(delta: f64, rho0: f64) -> f64 {
    1.0 / ((2.0 + delta) * (1.0 - rho0))
}

pub fn chi(capacity: f64, rate: f64) -> f64 {
    capacity / rate
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Constraint {
    SumToOne,
    NonNegative,
    CurveCloseness,
    TunnelOpen,
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Constraint::SumToOne => "coefficients sum to one",
            Constraint::NonNegative => "coefficients nonnegative",
            Constraint::CurveCloseness => "VND curves within epsilon",
            Constraint::TunnelOpen => "tunnel open with margin",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Feasibility {
    pub feasible: bool,
    pub violated: Vec<Constraint>,
    /// Largest pairwise VND sup-distance.
    pub vnd_distance: f64,
    /// Smallest tunnel gap per SNR point.
    pub gaps: Vec<f64>,
}

/// Checks the four design constraints for edge-view coefficients `omega`.
pub fn feasible(omega: &[(u32, f64)], delta: f64, rho0: &[f64], problem: &OptProblem) -> Result<Feasibility> {
    if rho0.len() != problem.snr_points.len() {
        return Err(Error::InvalidConfig("one rho0 per SNR point is required".into()));
    }
    let mut violated = Vec::new();
    let total: f64 = omega.iter().map(|&(_, w)| w).sum();
    if (total - 1.0).abs() > 1e-9 {
        violated.push(Constraint::SumToOne);
    }
    if omega.iter().any(|&(_, w)| w < 0.0) {
        violated.push(Constraint::NonNegative);
    }
    if !violated.is_empty() {
        return Ok(Feasibility { feasible: false, violated, vnd_distance: f64::NAN, gaps: Vec::new() });
    }
    let dist = DegreeDistribution::check_edge(omega)?;
    let settings = problem.settings();
    let cnd = cnd_inverted_curve(&dist, &settings.grid);
    let node = dist.edge_to_node();
    let vnds: Vec<ExitCurve> = problem
        .snr_points
        .iter()
        .zip(rho0)
        .map(|(&sigma, &r)| {
            let lambda = lambda_for(&node, &ReceptionProfile::from_rho0(r, delta), &settings.lambda)?;
            Ok(vnd_curve(&lambda, 2.0 / sigma, r, &settings.grid))
        })
        .collect::<Result<_>>()?;
    let vnd_distance = max_pairwise_distance(&vnds)?;
    if !(vnd_distance < problem.epsilon) {
        violated.push(Constraint::CurveCloseness);
    }
    let gaps: Vec<f64> = vnds.iter().map(|v| tunnel_gap(v, &cnd).map(|g| g.1)).collect::<Result<_>>()?;
    if gaps.iter().any(|&g| !(g > problem.gap_min)) {
        violated.push(Constraint::TunnelOpen);
    }
    Ok(Feasibility { feasible: violated.is_empty(), violated, vnd_distance, gaps })
}

fn max_pairwise_distance(curves: &[ExitCurve]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for i in 0..curves.len() {
        for j in i + 1..curves.len() {
            worst = worst.max(sup_distance(&curves[i], &curves[j])?);
        }
    }
    Ok(worst)
}

/// Frozen-VND linear program: maximize the smallest gap `t` over `omega`
/// with `sum omega = 1` and `sum omega_i / i = 1 / beta`.
struct GapLp<'a> {
    degrees: &'a [u32],
    basis: &'a [Vec<f64>],
    rows: Vec<usize>,
}

impl<'a> GapLp<'a> {
    fn new(degrees: &'a [u32], basis: &'a [Vec<f64>], grid: &[f64]) -> Self {
        let rows = (0..grid.len()).filter(|&k| grid[k] < 1.0).collect();
        Self { degrees, basis, rows }
    }

    fn solve(&self, beta: f64, vnds: &[ExitCurve]) -> Option<(Vec<f64>, f64)> {
        let mut lp = Problem::new(OptimizationDirection::Maximize);
        let w: Vec<_> = self.degrees.iter().map(|_| lp.add_var(0.0, (0.0, 1.0))).collect();
        let t = lp.add_var(1.0, (-1.0, 1.0));
        let ones: Vec<_> = w.iter().map(|&v| (v, 1.0)).collect();
        lp.add_constraint(&ones, ComparisonOp::Eq, 1.0);
        let inv: Vec<_> = w.iter().zip(self.degrees).map(|(&v, &d)| (v, 1.0 / d as f64)).collect();
        lp.add_constraint(&inv, ComparisonOp::Eq, 1.0 / beta);
        for vnd in vnds {
            for &k in &self.rows {
                let mut row: Vec<_> = w.iter().zip(self.basis).map(|(&v, b)| (v, b[k])).collect();
                row.push((t, -1.0));
                lp.add_constraint(&row, ComparisonOp::Ge, 1.0 - vnd.values[k]);
            }
        }
        let sol = lp.solve().ok()?;
        let coefs = w.iter().map(|&v| sol.var_value(v).max(0.0)).collect();
        Some((coefs, *sol.var_value(t)))
    }
}

fn clean(degrees: &[u32], coefs: &[f64]) -> Vec<(u32, f64)> {
    let kept: Vec<(u32, f64)> =
        degrees.iter().zip(coefs).filter(|&(_, &w)| w > COEF_FLOOR).map(|(&d, &w)| (d, w)).collect();
    let total: f64 = kept.iter().map(|&(_, w)| w).sum();
    kept.into_iter().map(|(d, w)| (d, w / total)).collect()
}

#[derive(Debug, Clone)]
struct Candidate {
    delta: f64,
    rho0: Vec<f64>,
    chi: Vec<f64>,
    max_chi: f64,
}

struct Search<'a> {
    problem: &'a OptProblem,
    degrees: Vec<u32>,
    grid: Vec<f64>,
    basis: Vec<Vec<f64>>,
    caps: Vec<f64>,
    betas: Vec<f64>,
}

impl<'a> Search<'a> {
    fn new(problem: &'a OptProblem) -> Self {
        let degrees = problem.degree_set();
        let grid = default_grid();
        let basis = degrees.iter().map(|&d| cnd_basis(d, &grid)).collect();
        let caps = problem.snr_points.iter().map(|&s| capacity(s)).collect();
        let (lo, hi) = (degrees[0] as f64, *degrees.last().unwrap() as f64);
        let steps = ((hi - lo) / problem.beta_step).floor() as usize;
        let mut betas: Vec<f64> = (0..=steps).map(|i| lo + i as f64 * problem.beta_step).collect();
        if hi - betas.last().unwrap() > 1e-9 {
            betas.push(hi);
        }
        Self { problem, degrees, grid, basis, caps, betas }
    }

    fn candidates(&self) -> Vec<Candidate> {
        let p = self.problem;
        let tau = p.snr_points.len();
        let mut out = Vec::new();
        for &delta in &p.delta_grid {
            let mut idx = vec![0usize; tau];
            loop {
                let rho0: Vec<f64> = idx.iter().map(|&i| p.rho0_grid[i]).collect();
                let chi: Vec<f64> =
                    self.caps.iter().zip(&rho0).map(|(&c, &r)| chi(c, design_rate(delta, r))).collect();
                let max_chi = chi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                // Rates above capacity cannot have an open tunnel.
                if chi.iter().all(|&c| c >= 1.0) && self.start_points_close(&rho0) {
                    out.push(Candidate { delta, rho0, chi, max_chi });
                }
                let mut pos = 0;
                loop {
                    if pos == tau {
                        break;
                    }
                    idx[pos] += 1;
                    if idx[pos] < p.rho0_grid.len() {
                        break;
                    }
                    idx[pos] = 0;
                    pos += 1;
                }
                if pos == tau {
                    break;
                }
            }
        }
        out.sort_by(|a, b| {
            a.max_chi
                .total_cmp(&b.max_chi)
                .then(a.delta.total_cmp(&b.delta))
                .then_with(|| a.rho0.iter().zip(&b.rho0).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal))
        });
        out
    }

    /// The VND value at `I_A = 0` is `(1 - rho0) J(sigma_ch)` whatever the
    /// degrees, so curves that start too far apart can be skipped early.
    fn start_points_close(&self, rho0: &[f64]) -> bool {
        let starts: Vec<f64> = self
            .problem
            .snr_points
            .iter()
            .zip(rho0)
            .map(|(&s, &r)| (1.0 - r) * crate::exitchart::j_fast(2.0 / s))
            .collect();
        starts.iter().all(|a| starts.iter().all(|b| (a - b).abs() < self.problem.epsilon))
    }

    fn regular_vnds(&self, beta: f64, delta: f64, points: &[(f64, f64)]) -> Option<Vec<ExitCurve>> {
        points
            .iter()
            .map(|&(sigma, r)| {
                let profile = ReceptionProfile::from_rho0(r, delta);
                let alpha = beta * profile.l / (1.0 + profile.l);
                let lambda = crate::degdist::regular_bracket(alpha).ok()?.1;
                Some(vnd_curve(&lambda, 2.0 / sigma, r, &self.grid))
            })
            .collect()
    }

    /// LP gap per beta under the regular approximation, in beta order.
    fn scan(&self, delta: f64, points: &[(f64, f64)]) -> Vec<(f64, Vec<f64>, f64)> {
        let lp = GapLp::new(&self.degrees, &self.basis, &self.grid);
        self.betas
            .par_iter()
            .filter_map(|&beta| {
                let vnds = self.regular_vnds(beta, delta, points)?;
                if max_pairwise_distance(&vnds).ok()? >= self.problem.epsilon {
                    return None;
                }
                let (coefs, t) = lp.solve(beta, &vnds)?;
                Some((beta, coefs, t))
            })
            .collect()
    }

    /// Fixed point of the LP with the VND taken from the empirical variable
    /// distribution of the current `omega`.
    fn refine(&self, beta: f64, start: Vec<f64>, cand: &Candidate) -> Result<Option<Vec<(u32, f64)>>> {
        let settings = self.problem.settings();
        let LambdaModel::Empirical { .. } = settings.lambda else {
            return Ok(Some(clean(&self.degrees, &start)));
        };
        let lp = GapLp::new(&self.degrees, &self.basis, &self.grid);
        let mut coefs = start;
        let mut last_max_chi = f64::INFINITY;
        for _ in 0..FIXED_POINT_ROUNDS {
            let omega = DegreeDistribution::check_edge(&clean(&self.degrees, &coefs))?;
            let node = omega.edge_to_node();
            let vnds: Vec<ExitCurve> = self
                .problem
                .snr_points
                .iter()
                .zip(&cand.rho0)
                .map(|(&sigma, &r)| {
                    let lambda = lambda_for(&node, &ReceptionProfile::from_rho0(r, cand.delta), &settings.lambda)?;
                    Ok(vnd_curve(&lambda, 2.0 / sigma, r, &self.grid))
                })
                .collect::<Result<_>>()?;
            let Some((next, _)) = lp.solve(beta, &vnds) else {
                return Ok(None);
            };
            // chi is fixed by (delta, rho0), so it cannot rise between rounds.
            assert!(cand.max_chi <= last_max_chi);
            last_max_chi = cand.max_chi;
            let change = next.iter().zip(&coefs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            coefs = next;
            if change < FIXED_POINT_TOL {
                break;
            }
        }
        Ok(Some(clean(&self.degrees, &coefs)))
    }

    fn try_candidate(&self, cand: &Candidate) -> Result<Option<OptResult>> {
        let points: Vec<(f64, f64)> = self.problem.snr_points.iter().copied().zip(cand.rho0.iter().copied()).collect();
        let mut scanned: Vec<(f64, Vec<f64>, f64)> =
            self.scan(cand.delta, &points).into_iter().filter(|(_, _, t)| *t > -SCREEN_SLACK).collect();
        scanned.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.total_cmp(&b.0)));
        for (beta, coefs, _) in scanned.into_iter().take(REFINE_TOP) {
            let Some(omega) = self.refine(beta, coefs, cand)? else {
                continue;
            };
            if feasible(&omega, cand.delta, &cand.rho0, self.problem)?.feasible {
                return Ok(Some(OptResult {
                    omega: DegreeDistribution::check_edge(&omega)?,
                    delta: cand.delta,
                    rho0: cand.rho0.clone(),
                    chi: cand.chi.clone(),
                    max_chi: cand.max_chi,
                }));
            }
        }
        Ok(None)
    }

    /// Single-point version of the scan, cached per (point, delta, rho0).
    fn screen(&self, cache: &mut HashMap<(usize, u64, u64), bool>, cand: &Candidate) -> bool {
        for (z, (&sigma, &r)) in self.problem.snr_points.iter().zip(&cand.rho0).enumerate() {
            let key = (z, cand.delta.to_bits(), r.to_bits());
            let ok = *cache
                .entry(key)
                .or_insert_with(|| self.scan(cand.delta, &[(sigma, r)]).iter().any(|(_, _, t)| *t > -SCREEN_SLACK));
            if !ok {
                return false;
            }
        }
        true
    }
}

/// Finds the distribution with the smallest `max chi` whose tunnels are all
/// open. Ties go to the smaller delta, then the lexicographically smaller
/// rho0 list.
pub fn optimize(problem: &OptProblem) -> Result<OptResult> {
    problem.validate()?;
    let search = Search::new(problem);
    let mut cache = HashMap::new();
    for cand in search.candidates() {
        if !search.screen(&mut cache, &cand) {
            continue;
        }
        if let Some(result) = search.try_candidate(&cand)? {
            return Ok(result);
        }
    }
    Err(Error::NoFeasible)
}

/// Exhaustive search over two-degree node distributions `a x^i + (1-a) x^j`
/// with `a` on a grid of the given step. Returns every feasible one.
pub fn two_degree_search(
    problem: &OptProblem,
    delta: f64,
    rho0: &[f64],
    step: f64,
) -> Result<Vec<DegreeDistribution>> {
    let degrees = problem.degree_set();
    let n = (1.0 / step).round() as usize;
    let mut trials = Vec::new();
    for (x, &i) in degrees.iter().enumerate() {
        for &j in &degrees[x + 1..] {
            for s in 1..n {
                let a = s as f64 / n as f64;
                trials.push(DegreeDistribution::new(View::Node, NodeKind::Check, &[(i, a), (j, 1.0 - a)])?);
            }
        }
    }
    let found: Vec<Option<DegreeDistribution>> = trials
        .into_par_iter()
        .map(|node| {
            let edge = node.node_to_edge();
            let ok = feasible(edge.entries(), delta, rho0, problem)?.feasible;
            Ok(ok.then_some(node))
        })
        .collect::<Result<_>>()?;
    Ok(found.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eq25() -> DegreeDistribution {
        "0.475*x^3 + 0.525*x^6".parse().unwrap()
    }

    fn paper_problem() -> OptProblem {
        OptProblem::new(vec![0.977, 0.5], 6)
    }

    #[test]
    fn code_rate_examples() {
        let om = eq25().node_to_edge();
        let alpha = alpha_for(om.average_degree(), 0.3);
        assert!((alpha - 2.586).abs() < 1e-3);
        let r = code_rate(&om, 0.3, 0.0, alpha);
        assert!((r - 0.435).abs() < 1e-3);
        assert!((code_rate(&om, 0.3, 0.45, alpha) - 0.79).abs() < 1e-3);
        assert!((r - design_rate(0.3, 0.0)).abs() < 1e-12);
        let single = DegreeDistribution::check_edge(&[(4, 1.0)]).unwrap();
        assert!((code_rate(&single, 0.5, 0.2, 3.0) - 3.0 / (1.5 * 0.8 * 4.0)).abs() < 1e-12);
    }

    #[test]
    fn chi_examples() {
        assert_eq!(chi(0.7, 0.7), 1.0);
        assert!((chi(0.501, 0.435) - 1.152).abs() < 1e-3);
        assert!((chi(0.912, 0.79) - 1.154).abs() < 1e-3);
    }

    #[test]
    fn eq25_is_feasible_at_paper_point() {
        let f = feasible(eq25().node_to_edge().entries(), 0.3, &[0.0, 0.45], &paper_problem()).unwrap();
        assert!(f.feasible, "{f:?}");
        assert!(f.vnd_distance < 0.05);
    }

    #[test]
    fn negative_mass_violates_nonnegativity() {
        let f = feasible(&[(2, 1.2), (3, -0.2)], 0.3, &[0.0, 0.45], &paper_problem()).unwrap();
        assert!(!f.feasible);
        assert_eq!(f.violated, vec![Constraint::NonNegative]);
    }

    #[test]
    fn dd3_fails_the_tunnel_at_a_noisy_point() {
        let dd3: DegreeDistribution = "0.6*x^3 + 0.4*x^6".parse().unwrap();
        let problem = OptProblem::new(vec![0.6], 6);
        let rho = ReceptionProfile::from_rate(0.8, 0.3).rho0();
        let f = feasible(dd3.node_to_edge().entries(), 0.3, &[rho], &problem).unwrap();
        assert!(f.violated.contains(&Constraint::TunnelOpen));
    }

    #[test]
    fn problem_json_defaults() {
        let p: OptProblem = serde_json::from_str(r#"{"snr_points":[0.977,0.5],"i_max":6}"#).unwrap();
        assert_eq!(p.epsilon, 0.05);
        assert_eq!(p.delta_grid.len(), 20);
        assert_eq!(p.rho0_grid.len(), 11);
        assert_eq!(p.lambda, LambdaChoice::Empirical);
        let unsorted = OptProblem::new(vec![0.5, 0.977], 6);
        assert!(unsorted.validate().is_err());
    }

    #[test]
    fn impossible_margin_is_rejected() {
        let mut p = paper_problem();
        p.gap_min = 0.5;
        p.lambda = LambdaChoice::Regular;
        assert!(matches!(optimize(&p), Err(Error::NoFeasible)));
    }

    #[test]
    fn single_degree_problem() {
        let mut p = OptProblem::new(vec![0.5], 6);
        p.degrees = Some(vec![3]);
        p.lambda = LambdaChoice::Regular;
        match optimize(&p) {
            Ok(r) => {
                assert_eq!(r.omega.entries(), &[(3, 1.0)]);
                assert!(feasible(r.omega.entries(), r.delta, &r.rho0, &p).unwrap().feasible);
            }
            Err(Error::NoFeasible) => {
                for &d in &p.delta_grid {
                    for &r in &p.rho0_grid {
                        assert!(!feasible(&[(3, 1.0)], d, &[r], &p).unwrap().feasible);
                    }
                }
            }
            Err(e) => panic!("{e}"),
        }
    }

    #[test]
    fn regular_model_result_is_self_consistent() {
        let mut p = paper_problem();
        p.lambda = LambdaChoice::Regular;
        p.delta_grid = vec![0.2, 0.25, 0.3, 0.35];
        let r = optimize(&p).unwrap();
        assert!(feasible(r.omega.entries(), r.delta, &r.rho0, &p).unwrap().feasible);
        assert_eq!(r.max_chi, r.chi.iter().copied().fold(f64::MIN, f64::max));
        // Raising the margin can only make the answer worse.
        let mut tighter = p.clone();
        tighter.gap_min = 2e-3;
        if let Ok(t) = optimize(&tighter) {
            assert!(t.max_chi >= r.max_chi);
        }
    }

    #[test]
    fn result_json_shape() {
        let r = OptResult {
            omega: eq25().node_to_edge(),
            delta: 0.3,
            rho0: vec![0.0, 0.45],
            chi: vec![1.15, 1.15],
            max_chi: 1.15,
        };
        let v: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert!(v["omega"]["3"].as_f64().unwrap() > 0.31);
        assert!(v["Omega"].as_str().unwrap().contains("x^6"));
        assert_eq!(v["rho0"][1], 0.45);
    }
}
