//! Ball-into-bin graph construction.
//!
//! Every variable node is a ball sitting in the bin of its current degree.
//! Check `l` is formed by drawing a degree `i`, taking `i - 1` balls from the
//! lowest nonempty bins and attaching the new encoded ball `K + l - 1`.
//! During the first `K` steps one selected message ball per step is parked in
//! a buffer, which makes the message part of the first `K` rows triangular
//! and therefore full rank. At step `K + 1` the buffered balls return to
//! the bins they were parked from.

use crate::degdist::{DegreeDistribution, DegreeSampler};
use crate::error::{Error, Result};
use crate::gf2::SparseBinMatrix;
use crate::rng::{from_seed, CodeRng, RNG_NAME};
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

pub const DEFAULT_D_MAX: u32 = 50;

/// Everything needed to rebuild a code at either end of the link.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeSpec {
    pub k: usize,
    pub delta: f64,
    pub omega: DegreeDistribution,
    pub seed: u64,
    pub d_max: u32,
    pub l_total: usize,
}

#[derive(Serialize, Deserialize)]
struct CodeSpecFile {
    #[serde(rename = "K")]
    k: usize,
    delta: f64,
    omega: String,
    seed: u64,
    #[serde(default = "default_d_max")]
    d_max: u32,
    #[serde(rename = "L_total", default)]
    l_total: Option<usize>,
    #[serde(default = "default_rng")]
    rng: String,
}

fn default_d_max() -> u32 {
    DEFAULT_D_MAX
}

fn default_rng() -> String {
    RNG_NAME.to_string()
}

impl CodeSpec {
    /// Spec with `d_max = 50` and `L_total = floor(K(1 + delta))`.
    pub fn new(k: usize, delta: f64, omega: DegreeDistribution, seed: u64) -> Self {
        let l_total = n_ab(k, delta).max(k);
        Self { k, delta, omega: omega.edge_to_node(), seed, d_max: DEFAULT_D_MAX, l_total }
    }

    pub fn with_l_total(mut self, l_total: usize) -> Self {
        self.l_total = l_total;
        self
    }

    pub fn with_d_max(mut self, d_max: u32) -> Self {
        self.d_max = d_max;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Number of encoded symbols in sub-codes A and B.
    pub fn n_ab(&self) -> usize {
        n_ab(self.k, self.delta)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::SpecInvalid(format!("K = {} < 2", self.k)));
        }
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(Error::SpecInvalid(format!("delta = {} must be positive", self.delta)));
        }
        if self.l_total < self.k {
            return Err(Error::SpecInvalid(format!("L_total = {} < K = {}", self.l_total, self.k)));
        }
        if self.d_max < 2 {
            return Err(Error::SpecInvalid(format!("d_max = {} < 2", self.d_max)));
        }
        if self.omega.max_degree() as usize - 1 > self.k {
            return Err(Error::SpecInvalid(format!(
                "maximum check degree {} needs more than K = {} message symbols",
                self.omega.max_degree(),
                self.k
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let file = CodeSpecFile {
            k: self.k,
            delta: self.delta,
            omega: self.omega.to_string(),
            seed: self.seed,
            d_max: self.d_max,
            l_total: Some(self.l_total),
            rng: RNG_NAME.to_string(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: CodeSpecFile = serde_json::from_str(text)?;
        if file.rng != RNG_NAME {
            return Err(Error::SpecInvalid(format!(
                "spec was built with rng '{}', only '{RNG_NAME}' is supported",
                file.rng
            )));
        }
        let omega: DegreeDistribution = file.omega.parse()?;
        let mut spec = CodeSpec::new(file.k, file.delta, omega, file.seed).with_d_max(file.d_max);
        if let Some(l) = file.l_total {
            spec.l_total = l;
        }
        spec.validate()?;
        Ok(spec)
    }
}

/// `floor(K (1 + delta))`, guarded against representation error in `delta`.
pub fn n_ab(k: usize, delta: f64) -> usize {
    (k as f64 * (1.0 + delta) + 1e-9).floor() as usize
}

/// One Phase I buffering event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BufferRecord {
    /// 1-based check index.
    pub step: usize,
    pub ball: usize,
    /// Degree bin the ball returns to after Phase I.
    pub bin: u32,
}

/// The constructed code. Variables `0..K` are message symbols and
/// `K..K+L` are encoded symbols; check `l` (0-based) owns variable `K + l`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TannerGraph {
    k: usize,
    checks: Vec<Vec<usize>>,
    var_checks: Vec<Vec<usize>>,
    buffer_log: Vec<BufferRecord>,
}

impl TannerGraph {
    /// Assembles a graph from explicit check supports, verifying the
    /// self-connection and lower-triangular encoded part.
    pub fn from_checks(k: usize, checks: Vec<Vec<usize>>) -> Result<Self> {
        let l = checks.len();
        let mut sorted = Vec::with_capacity(l);
        for (row, mut c) in checks.into_iter().enumerate() {
            c.sort_unstable();
            if c.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidMatrix(format!("check {row} repeats a variable")));
            }
            if c.last().copied() != Some(k + row) {
                return Err(Error::InvalidMatrix(format!(
                    "check {row} must contain encoded variable {} and no later one",
                    k + row
                )));
            }
            sorted.push(c);
        }
        Ok(Self::assemble(k, sorted, Vec::new()))
    }

    fn assemble(k: usize, checks: Vec<Vec<usize>>, buffer_log: Vec<BufferRecord>) -> Self {
        let mut var_checks = vec![Vec::new(); k + checks.len()];
        for (c, support) in checks.iter().enumerate() {
            for &v in support {
                var_checks[v].push(c);
            }
        }
        Self { k, checks, var_checks, buffer_log }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn l(&self) -> usize {
        self.checks.len()
    }

    pub fn n_vars(&self) -> usize {
        self.k + self.checks.len()
    }

    pub fn checks(&self) -> &[Vec<usize>] {
        &self.checks
    }

    pub fn check(&self, c: usize) -> &[usize] {
        &self.checks[c]
    }

    /// Checks containing variable `v`, ascending.
    pub fn var_checks(&self, v: usize) -> &[usize] {
        &self.var_checks[v]
    }

    pub fn var_degrees(&self) -> impl Iterator<Item = usize> + '_ {
        self.var_checks.iter().map(Vec::len)
    }

    pub fn buffer_log(&self) -> &[BufferRecord] {
        &self.buffer_log
    }

    /// The first `l` checks with their `K + l` variables.
    pub fn truncated(&self, l: usize) -> Self {
        let l = l.min(self.l());
        let log = self.buffer_log.iter().copied().filter(|r| r.step <= l).collect();
        Self::assemble(self.k, self.checks[..l].to_vec(), log)
    }

    /// L x (K + L) parity-check matrix.
    pub fn parity_matrix(&self) -> SparseBinMatrix {
        SparseBinMatrix::new(self.l(), self.n_vars(), self.checks.clone())
            .expect("graph checks are sorted and in range")
    }

    /// Text dump: header `K L`, then one `row: c1 c2 ...` line per check.
    pub fn dump(&self) -> String {
        format!("{} {}\n{}", self.k, self.l(), self.parity_matrix().dump_rows())
    }

    pub fn parse_dump(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty dump".into()))?;
        let nums: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad header '{header}'"))))
            .collect::<Result<_>>()?;
        let [k, l] = nums[..] else {
            return Err(Error::Parse(format!("bad header '{header}'")));
        };
        let body: Vec<&str> = lines.collect();
        let m = SparseBinMatrix::parse_rows(&body.join("\n"), k + l)?;
        if m.rows() != l {
            return Err(Error::Parse(format!("header declares {l} rows, found {}", m.rows())));
        }
        Self::from_checks(k, m.row_supports().to_vec())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Absent,
    InBin,
    Buffered(u32),
}

/// Degree bins `0..=d_max` plus the Phase I buffer.
#[derive(Debug, Clone)]
pub struct BinState {
    k: usize,
    d_max: u32,
    bins: Vec<Vec<usize>>,
    degree: Vec<u32>,
    pos: Vec<usize>,
    slot: Vec<Slot>,
    buffered: Vec<usize>,
}

impl BinState {
    /// All `k` message balls in bin 0; room for `capacity` balls in total.
    pub fn new(k: usize, capacity: usize, d_max: u32) -> Self {
        let mut s = Self {
            k,
            d_max,
            bins: vec![Vec::new(); d_max as usize + 1],
            degree: vec![0; capacity],
            pos: vec![0; capacity],
            slot: vec![Slot::Absent; capacity],
            buffered: Vec::new(),
        };
        for b in 0..k {
            s.insert(b, 0);
        }
        s
    }

    /// Explicit layout, e.g. for reproducing a hand-worked example.
    pub fn from_bins(k: usize, d_max: u32, layout: &[(u32, &[usize])]) -> Self {
        let capacity = layout.iter().flat_map(|(_, b)| b.iter()).max().map_or(k, |&m| (m + 1).max(k));
        let mut s = Self {
            k,
            d_max,
            bins: vec![Vec::new(); d_max as usize + 1],
            degree: vec![0; capacity],
            pos: vec![0; capacity],
            slot: vec![Slot::Absent; capacity],
            buffered: Vec::new(),
        };
        for &(d, balls) in layout {
            for &b in balls {
                s.insert(b, d);
            }
        }
        s
    }

    pub fn bin(&self, degree: u32) -> &[usize] {
        &self.bins[degree as usize]
    }

    pub fn degree(&self, ball: usize) -> u32 {
        self.degree[ball]
    }

    pub fn buffered(&self) -> &[usize] {
        &self.buffered
    }

    pub fn is_buffered(&self, ball: usize) -> bool {
        matches!(self.slot[ball], Slot::Buffered(_))
    }

    fn insert(&mut self, ball: usize, degree: u32) {
        let bin = &mut self.bins[degree as usize];
        self.pos[ball] = bin.len();
        bin.push(ball);
        self.degree[ball] = degree;
        self.slot[ball] = Slot::InBin;
    }

    fn remove(&mut self, ball: usize) {
        let bin = &mut self.bins[self.degree[ball] as usize];
        let p = self.pos[ball];
        bin.swap_remove(p);
        if let Some(&moved) = bin.get(p) {
            self.pos[moved] = p;
        }
        self.slot[ball] = Slot::Absent;
    }

    fn bump(&mut self, ball: usize) {
        self.remove(ball);
        let d = (self.degree[ball] + 1).min(self.d_max);
        self.insert(ball, d);
    }

    fn buffer(&mut self, ball: usize) -> u32 {
        debug_assert!(ball < self.k, "only message balls can be buffered");
        self.remove(ball);
        let d = self.degree[ball];
        self.slot[ball] = Slot::Buffered(d);
        self.buffered.push(ball);
        d
    }

    fn release_buffer(&mut self) {
        for ball in std::mem::take(&mut self.buffered) {
            if let Slot::Buffered(d) = self.slot[ball] {
                self.insert(ball, d);
            }
        }
    }

    /// Uniform pick among message balls of the lowest selectable bin holding one.
    fn lowest_message_ball(&self, rng: &mut CodeRng) -> Option<usize> {
        self.bins[..self.d_max as usize].iter().find_map(|bin| {
            let msgs: Vec<usize> = bin.iter().copied().filter(|&b| b < self.k).collect();
            (!msgs.is_empty()).then(|| msgs[rng.random_range(0..msgs.len())])
        })
    }
}

/// Lowest-degree-first selection of `want` balls. Bins are drained in degree
/// order; inside the last, partially used bin the balls are a uniform
/// subset. The capped `d_max` bin is never used.
pub fn select_neighbors(bins: &BinState, want: usize, rng: &mut CodeRng) -> Vec<usize> {
    let mut out = Vec::with_capacity(want);
    for bin in &bins.bins[..bins.d_max as usize] {
        let need = want - out.len();
        if need == 0 {
            break;
        }
        if bin.len() <= need {
            out.extend_from_slice(bin);
        } else {
            out.extend(index::sample(rng, bin.len(), need).into_iter().map(|i| bin[i]));
        }
    }
    out
}

/// Runs the construction for `spec.l_total` steps.
pub fn build_graph(spec: &CodeSpec) -> Result<TannerGraph> {
    spec.validate()?;
    let k = spec.k;
    let mut rng = from_seed(spec.seed);
    let sampler = DegreeSampler::new(&spec.omega);
    let mut bins = BinState::new(k, k + spec.l_total, spec.d_max);
    let mut checks = Vec::with_capacity(spec.l_total);
    let mut log = Vec::with_capacity(k);

    for step in 1..=spec.l_total {
        if step == k + 1 {
            bins.release_buffer();
        }
        let degree = sampler.sample(&mut rng) as usize;
        let mut selected = select_neighbors(&bins, degree - 1, &mut rng);
        if selected.is_empty() {
            return Err(Error::SpecInvalid(format!("no selectable balls at step {step}")));
        }
        let phase_one = step <= k;
        if phase_one && selected.iter().all(|&b| b >= k) {
            let evict = (0..selected.len())
                .max_by_key(|&i| (bins.degree(selected[i]), selected[i]))
                .expect("selection is nonempty");
            selected[evict] = bins
                .lowest_message_ball(&mut rng)
                .ok_or_else(|| Error::SpecInvalid(format!("no message ball left at step {step}")))?;
        }
        for &b in &selected {
            bins.bump(b);
        }
        let own = k + step - 1;
        bins.insert(own, 1);
        if phase_one {
            let msgs: Vec<usize> = selected.iter().copied().filter(|&b| b < k).collect();
            let pick = msgs[rng.random_range(0..msgs.len())];
            let bin = bins.buffer(pick);
            log.push(BufferRecord { step, ball: pick, bin });
        }
        selected.push(own);
        selected.sort_unstable();
        checks.push(selected);
    }
    Ok(TannerGraph::assemble(k, checks, log))
}
