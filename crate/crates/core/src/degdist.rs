//! Check and variable node degree distributions.
//!
//! A distribution is stored as sorted `(degree, probability)` pairs in either
//! the node view (fraction of nodes with a degree) or the edge view (fraction
//! of edges attached to nodes of a degree). The text form used on the command
//! line and in config files is `"0.475*x^3 + 0.525*x^6"`, where the exponent
//! is the node degree.

use crate::construct::{build_graph, CodeSpec};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, CodeRng};
use rand::Rng;
use rayon::prelude::*;
use std::fmt;
use std::str::FromStr;

/// Tolerance accepted on the probability sum before renormalizing.
const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum View {
    Node,
    Edge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    /// Check nodes; minimum degree 2.
    Check,
    /// Variable nodes; minimum degree 1.
    Variable,
}

impl NodeKind {
    fn min_degree(self) -> u32 {
        match self {
            NodeKind::Check => 2,
            NodeKind::Variable => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegreeDistribution {
    view: View,
    kind: NodeKind,
    entries: Vec<(u32, f64)>,
}

impl DegreeDistribution {
    /// Validates and normalizes a distribution. Zero-probability entries are
    /// dropped.
    pub fn new(view: View, kind: NodeKind, entries: &[(u32, f64)]) -> Result<Self> {
        let mut entries: Vec<(u32, f64)> = entries.to_vec();
        entries.sort_by_key(|&(d, _)| d);
        if entries.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidDistribution("repeated degree".into()));
        }
        for &(d, p) in &entries {
            if d < kind.min_degree() {
                return Err(Error::InvalidDistribution(format!(
                    "degree {d} below minimum {} for {kind:?} nodes",
                    kind.min_degree()
                )));
            }
            if !p.is_finite() || p < 0.0 {
                return Err(Error::InvalidDistribution(format!("probability {p} for degree {d}")));
            }
        }
        entries.retain(|&(_, p)| p > 0.0);
        let total: f64 = entries.iter().map(|&(_, p)| p).sum();
        if entries.is_empty() || (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("probabilities sum to {total}")));
        }
        for e in &mut entries {
            e.1 /= total;
        }
        Ok(Self { view, kind, entries })
    }

    pub fn check_node(entries: &[(u32, f64)]) -> Result<Self> {
        Self::new(View::Node, NodeKind::Check, entries)
    }

    pub fn check_edge(entries: &[(u32, f64)]) -> Result<Self> {
        Self::new(View::Edge, NodeKind::Check, entries)
    }

    pub fn variable_node(entries: &[(u32, f64)]) -> Result<Self> {
        Self::new(View::Node, NodeKind::Variable, entries)
    }

    pub fn variable_edge(entries: &[(u32, f64)]) -> Result<Self> {
        Self::new(View::Edge, NodeKind::Variable, entries)
    }

    /// Builds a distribution from unnormalized nonnegative weights.
    pub fn from_weights(view: View, kind: NodeKind, weights: &[(u32, f64)]) -> Result<Self> {
        let total: f64 = weights.iter().map(|&(_, w)| w).sum();
        if !(total > 0.0) {
            return Err(Error::InvalidDistribution("weights have no mass".into()));
        }
        let scaled: Vec<(u32, f64)> = weights.iter().map(|&(d, w)| (d, w / total)).collect();
        Self::new(view, kind, &scaled)
    }

    pub fn view(&self) -> View {
        self.view
    }

    pub fn kind(&self) -> NodeKind {
        self.kind
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn degrees(&self) -> impl Iterator<Item = u32> + '_ {
        self.entries.iter().map(|&(d, _)| d)
    }

    pub fn max_degree(&self) -> u32 {
        self.entries.last().map_or(0, |&(d, _)| d)
    }

    pub fn min_degree(&self) -> u32 {
        self.entries.first().map_or(0, |&(d, _)| d)
    }

    /// Probability attached to `degree`, zero when absent.
    pub fn prob(&self, degree: u32) -> f64 {
        self.entries
            .binary_search_by_key(&degree, |&(d, _)| d)
            .map_or(0.0, |i| self.entries[i].1)
    }

    /// Edge view: each degree weighted by `degree / average_degree`.
    pub fn node_to_edge(&self) -> Self {
        if self.view == View::Edge {
            return self.clone();
        }
        let beta = self.average_degree();
        let entries = self.entries.iter().map(|&(d, p)| (d, p * d as f64 / beta)).collect();
        Self { view: View::Edge, kind: self.kind, entries }
    }

    /// Node view: each degree weighted by `1 / degree`, renormalized.
    pub fn edge_to_node(&self) -> Self {
        if self.view == View::Node {
            return self.clone();
        }
        let total: f64 = self.entries.iter().map(|&(d, p)| p / d as f64).sum();
        let entries = self.entries.iter().map(|&(d, p)| (d, p / d as f64 / total)).collect();
        Self { view: View::Node, kind: self.kind, entries }
    }

    /// Average node degree, whichever view is stored.
    pub fn average_degree(&self) -> f64 {
        match self.view {
            View::Node => self.entries.iter().map(|&(d, p)| p * d as f64).sum(),
            View::Edge => 1.0 / self.entries.iter().map(|&(d, p)| p / d as f64).sum::<f64>(),
        }
    }

    /// Largest absolute probability difference against `other` in the same view.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut degrees: Vec<u32> = self.degrees().chain(other.degrees()).collect();
        degrees.sort_unstable();
        degrees.dedup();
        degrees
            .into_iter()
            .map(|d| (self.prob(d) - other.prob(d)).abs())
            .fold(0.0, f64::max)
    }

    /// Total-variation distance against `other`.
    pub fn total_variation(&self, other: &Self) -> f64 {
        let mut degrees: Vec<u32> = self.degrees().chain(other.degrees()).collect();
        degrees.sort_unstable();
        degrees.dedup();
        0.5 * degrees.into_iter().map(|d| (self.prob(d) - other.prob(d)).abs()).sum::<f64>()
    }
}

impl fmt::Display for DegreeDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (d, p)) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{p}*x^{d}")?;
        }
        Ok(())
    }
}

/// Parses a node-view check distribution such as `"0.475*x^3 + 0.525 x^6"`.
impl FromStr for DegreeDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(Error::Parse("empty degree polynomial".into()));
        }
        let mut entries = Vec::new();
        for term in compact.split('+') {
            entries.push(parse_term(term)?);
        }
        Self::check_node(&entries)
    }
}

fn parse_term(term: &str) -> Result<(u32, f64)> {
    let bad = || Error::Parse(format!("cannot parse term '{term}'"));
    let xpos = term.find(['x', 'X']).ok_or_else(bad)?;
    let coef_part = term[..xpos].trim_end_matches('*');
    let coef = if coef_part.is_empty() { 1.0 } else { coef_part.parse::<f64>().map_err(|_| bad())? };
    let exp_part = &term[xpos + 1..];
    let degree = if exp_part.is_empty() {
        1
    } else {
        exp_part.strip_prefix('^').ok_or_else(bad)?.parse::<u32>().map_err(|_| bad())?
    };
    Ok((degree, coef))
}

/// Inverse-CDF sampler over a node-view distribution.
#[derive(Debug, Clone)]
pub struct DegreeSampler {
    degrees: Vec<u32>,
    cumulative: Vec<f64>,
}

impl DegreeSampler {
    pub fn new(dist: &DegreeDistribution) -> Self {
        let node = dist.edge_to_node();
        let mut acc = 0.0;
        let mut cumulative = Vec::with_capacity(node.entries.len());
        let mut degrees = Vec::with_capacity(node.entries.len());
        for &(d, p) in &node.entries {
            acc += p;
            cumulative.push(acc);
            degrees.push(d);
        }
        if let Some(last) = cumulative.last_mut() {
            *last = f64::INFINITY;
        }
        Self { degrees, cumulative }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let u: f64 = rng.random();
        let i = self.cumulative.partition_point(|&c| c <= u);
        self.degrees[i.min(self.degrees.len() - 1)]
    }
}

/// Draws one degree with probability equal to its node-view mass.
pub fn sample_degree(dist: &DegreeDistribution, rng: &mut CodeRng) -> u32 {
    DegreeSampler::new(dist).sample(rng)
}

/// Two-point variable distribution bracketing `alpha = beta L / (K + L)`,
/// weighted so its mean is exactly `alpha`. Returns `(node, edge)` views.
pub fn variable_dist_regular_approx(
    omega: &DegreeDistribution,
    k: usize,
    l: usize,
) -> Result<(DegreeDistribution, DegreeDistribution)> {
    if l == 0 {
        return Err(Error::InvalidDistribution("regular approximation needs L >= 1".into()));
    }
    let alpha = omega.average_degree() * l as f64 / (k + l) as f64;
    regular_bracket(alpha)
}

/// Two-point node distribution with mean `alpha` on `floor(alpha)` and the next integer.
pub fn regular_bracket(alpha: f64) -> Result<(DegreeDistribution, DegreeDistribution)> {
    if !(alpha >= 1.0) {
        return Err(Error::InvalidDistribution(format!("average variable degree {alpha} < 1")));
    }
    let lo = alpha.floor();
    let frac = alpha - lo;
    let lo = lo as u32;
    let node = DegreeDistribution::variable_node(&[(lo, 1.0 - frac), (lo + 1, frac)])?;
    let edge = node.node_to_edge();
    Ok((node, edge))
}

/// Mean variable-degree histogram over `trials` constructions restricted to
/// the first `l` checks. Trial `t` uses seed `derive_seed(spec.seed, t)`.
///
/// Nodes that end up with no checks (possible only when `l < K`) carry no
/// edges and are left out.
pub fn variable_dist_empirical(spec: &CodeSpec, l: usize, trials: usize) -> Result<DegreeDistribution> {
    if trials == 0 {
        return Err(Error::InvalidConfig("empirical distribution needs at least one trial".into()));
    }
    let histograms: Vec<Vec<u64>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut trial_spec = spec.clone();
            trial_spec.seed = derive_seed(spec.seed, t as u64);
            trial_spec.l_total = l.max(spec.k);
            let graph = build_graph(&trial_spec)?.truncated(l);
            let mut hist = vec![0u64; spec.d_max as usize + 2];
            for d in graph.var_degrees() {
                hist[d] += 1;
            }
            Ok(hist)
        })
        .collect::<Result<_>>()?;
    let mut total = vec![0u64; spec.d_max as usize + 2];
    for h in &histograms {
        for (acc, c) in total.iter_mut().zip(h) {
            *acc += c;
        }
    }
    let weights: Vec<(u32, f64)> = total
        .iter()
        .enumerate()
        .skip(1)
        .filter(|&(_, &c)| c > 0)
        .map(|(d, &c)| (d as u32, c as f64))
        .collect();
    DegreeDistribution::from_weights(View::Node, NodeKind::Variable, &weights)
}
