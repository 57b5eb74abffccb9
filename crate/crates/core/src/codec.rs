//! Encoding, reverse-systematic transmission, incremental reception and the
//! sum-product decoder.

use crate::channel::{channel_llr, modulate, transmit, ChannelParams};
use crate::construct::{n_ab, CodeSpec, TannerGraph};
use crate::error::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

/// Magnitude cap applied inside tanh/atanh, also used for "known" bits.
pub const LLR_MAX: f64 = 30.0;
pub const DEFAULT_MAX_ITERS: usize = 100;

/// Encoded bits for every check, computed in order thanks to the
/// lower-triangular encoded part.
pub fn encode_all(graph: &TannerGraph, message: &[u8]) -> Vec<u8> {
    assert_eq!(message.len(), graph.k(), "message length must equal K");
    let k = graph.k();
    let mut word = message.to_vec();
    word.resize(graph.n_vars(), 0);
    for (l, check) in graph.checks().iter().enumerate() {
        let own = k + l;
        word[own] = check.iter().filter(|&&v| v != own).fold(0, |acc, &v| acc ^ word[v]);
    }
    word.split_off(k)
}

/// Message followed by encoded bits, indexed like the graph's variables.
pub fn codeword(graph: &TannerGraph, message: &[u8]) -> Vec<u8> {
    let mut word = message.to_vec();
    word.extend(encode_all(graph, message));
    word
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Subcode {
    A,
    B,
    C,
    D,
}

impl fmt::Display for Subcode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for Subcode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A" => Ok(Subcode::A),
            "B" => Ok(Subcode::B),
            "C" => Ok(Subcode::C),
            "D" => Ok(Subcode::D),
            other => Err(Error::Parse(format!("unknown sub-code '{other}'"))),
        }
    }
}

/// Transmission order: encoded `1..=K` (A), encoded up to `floor(K(1+delta))`
/// (B), the `K` message symbols (C), then the remaining encoded symbols (D).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransmissionSchedule {
    k: usize,
    n_ab: usize,
    l_total: usize,
    block_size: usize,
}

impl TransmissionSchedule {
    pub fn new(spec: &CodeSpec) -> Self {
        Self::with_sizes(spec.k, n_ab(spec.k, spec.delta), spec.l_total)
    }

    pub fn with_sizes(k: usize, n_ab: usize, l_total: usize) -> Self {
        let n_ab = n_ab.max(k).min(l_total.max(k));
        Self { k, n_ab, l_total, block_size: 1 }
    }

    pub fn with_block_size(mut self, block_size: usize) -> Self {
        self.block_size = block_size.max(1);
        self
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn len(&self) -> usize {
        self.k + self.l_total
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn size(&self, sub: Subcode) -> usize {
        match sub {
            Subcode::A => self.k.min(self.l_total),
            Subcode::B => self.n_ab - self.k,
            Subcode::C => self.k,
            Subcode::D => self.l_total.saturating_sub(self.n_ab),
        }
    }

    /// Variable index and sub-code of the symbol sent at position `pos`.
    pub fn symbol(&self, pos: usize) -> Option<(usize, Subcode)> {
        let (k, nab) = (self.k, self.n_ab);
        if pos < k {
            Some((k + pos, Subcode::A))
        } else if pos < nab {
            Some((k + pos, Subcode::B))
        } else if pos < nab + k {
            Some((pos - nab, Subcode::C))
        } else if pos < k + self.l_total {
            Some((pos, Subcode::D))
        } else {
            None
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, Subcode)> + '_ {
        (0..self.len()).map_while(|p| self.symbol(p))
    }

    /// Positions covered by transmission block `b`.
    pub fn block(&self, b: usize) -> std::ops::Range<usize> {
        let start = (b * self.block_size).min(self.len());
        start..(start + self.block_size).min(self.len())
    }
}

/// Channel evidence gathered so far.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceptionState {
    k: usize,
    llr: Vec<f64>,
    received: Vec<bool>,
    l_rx: usize,
    k_prime: usize,
}

impl ReceptionState {
    pub fn new(k: usize, l: usize) -> Self {
        Self { k, llr: vec![0.0; k + l], received: vec![false; k + l], l_rx: 0, k_prime: k }
    }

    pub fn for_graph(graph: &TannerGraph) -> Self {
        Self::new(graph.k(), graph.l())
    }

    pub fn receive(&mut self, var: usize, llr: f64) -> Result<()> {
        if var >= self.llr.len() {
            return Err(Error::SymbolOutOfRange(var));
        }
        if self.received[var] {
            return Err(Error::Duplicate(var));
        }
        self.received[var] = true;
        self.llr[var] = llr;
        if var < self.k {
            self.k_prime -= 1;
        } else {
            self.l_rx += 1;
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn llr(&self) -> &[f64] {
        &self.llr
    }

    pub fn is_received(&self, var: usize) -> bool {
        self.received[var]
    }

    pub fn l_rx(&self) -> usize {
        self.l_rx
    }

    pub fn k_prime(&self) -> usize {
        self.k_prime
    }

    /// Fraction of decoder variables with no channel evidence, `K' / (K + L_rx)`.
    pub fn rho0(&self) -> f64 {
        self.k_prime as f64 / (self.k + self.l_rx) as f64
    }
}

/// Reception state expressed as ratios to `K`: `l` encoded symbols received
/// and `k_prime` message symbols still missing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceptionProfile {
    pub l: f64,
    pub k_prime: f64,
}

impl ReceptionProfile {
    /// State after `K / rate` symbols of the schedule with sub-code B sized by `delta`.
    pub fn from_rate(rate: f64, delta: f64) -> Self {
        let m = 1.0 / rate;
        let nab = 1.0 + delta;
        if m <= nab {
            Self { l: m, k_prime: 1.0 }
        } else if m <= nab + 1.0 {
            Self { l: nab, k_prime: 1.0 - (m - nab) }
        } else {
            Self { l: m - 1.0, k_prime: 0.0 }
        }
    }

    /// State with the given `rho0`, reached either inside sub-codes A/B or
    /// while sub-code C is arriving.
    pub fn from_rho0(rho0: f64, delta: f64) -> Self {
        let nab = 1.0 + delta;
        if rho0 <= 0.0 {
            Self { l: nab, k_prime: 0.0 }
        } else if rho0 < 1.0 / (1.0 + nab) {
            Self { l: nab, k_prime: rho0 * (1.0 + nab) }
        } else {
            Self { l: (1.0 - rho0) / rho0, k_prime: 1.0 }
        }
    }

    pub fn rho0(&self) -> f64 {
        self.k_prime / (1.0 + self.l)
    }

    /// Encoded symbols received for message length `k`, at least one.
    pub fn l_count(&self, k: usize) -> usize {
        ((self.l * k as f64).round() as usize).max(1)
    }
}

/// Sends the first `m` scheduled symbols of `word` through the channel.
pub fn receive_prefix<R: Rng + ?Sized>(
    schedule: &TransmissionSchedule,
    word: &[u8],
    m: usize,
    channel: &ChannelParams,
    rng: &mut R,
) -> Result<ReceptionState> {
    let l = schedule.len() - schedule.size(Subcode::C);
    let mut state = ReceptionState::new(schedule.size(Subcode::C), l);
    if m > schedule.len() {
        return Err(Error::InvalidConfig(format!("{m} symbols requested, schedule holds {}", schedule.len())));
    }
    for (var, _) in schedule.iter().take(m) {
        let y = transmit(modulate(word[var]), channel, rng);
        state.receive(var, channel_llr(y, channel))?;
    }
    Ok(state)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BpConfig {
    pub max_iters: usize,
    /// Stop as soon as the hard decisions satisfy every active check.
    pub early_stop: bool,
}

impl Default for BpConfig {
    fn default() -> Self {
        Self { max_iters: DEFAULT_MAX_ITERS, early_stop: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BpOutput {
    /// Hard decisions on the message symbols.
    pub bits: Vec<u8>,
    pub converged: bool,
    pub iters: usize,
    /// A-posteriori LLRs for every variable.
    pub posterior: Vec<f64>,
}

pub fn bp_decode(graph: &TannerGraph, state: &ReceptionState, max_iters: usize) -> BpOutput {
    bp_decode_with(graph, state, &BpConfig { max_iters, ..BpConfig::default() })
}

/// Flooding sum-product over the checks whose encoded symbol was received.
pub fn bp_decode_with(graph: &TannerGraph, state: &ReceptionState, cfg: &BpConfig) -> BpOutput {
    assert!(cfg.max_iters >= 1, "max_iters must be at least 1");
    let k = graph.k();
    let n = graph.n_vars();
    let llr = &state.llr()[..n];

    // Compact edge layout over active checks.
    let mut check_start = vec![0usize];
    let mut edge_var = Vec::new();
    for (c, support) in graph.checks().iter().enumerate() {
        if state.is_received(k + c) {
            edge_var.extend_from_slice(support);
            check_start.push(edge_var.len());
        }
    }
    let mut var_edges: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (e, &v) in edge_var.iter().enumerate() {
        var_edges[v].push(e);
    }

    let mut v2c: Vec<f64> = edge_var.iter().map(|&v| llr[v]).collect();
    let mut c2v = vec![0.0; edge_var.len()];
    let mut posterior = llr.to_vec();
    let mut hard: Vec<u8> = posterior.iter().map(|&p| u8::from(p < 0.0)).collect();
    let mut tanh_buf = Vec::new();
    let mut suffix = Vec::new();
    let mut iters = 0;
    let mut converged = false;

    for it in 1..=cfg.max_iters {
        iters = it;
        for w in check_start.windows(2) {
            check_update(&v2c[w[0]..w[1]], &mut c2v[w[0]..w[1]], &mut tanh_buf, &mut suffix);
        }
        for v in 0..n {
            let edges = &var_edges[v];
            if edges.is_empty() {
                continue;
            }
            let total = llr[v] + edges.iter().map(|&e| c2v[e]).sum::<f64>();
            posterior[v] = total;
            hard[v] = u8::from(total < 0.0);
            for &e in edges {
                v2c[e] = total - c2v[e];
            }
        }
        converged = syndrome_is_zero(&check_start, &edge_var, &hard);
        if converged && cfg.early_stop {
            break;
        }
    }
    BpOutput { bits: hard[..k].to_vec(), converged, iters, posterior }
}

fn check_update(incoming: &[f64], outgoing: &mut [f64], tanh_buf: &mut Vec<f64>, suffix: &mut Vec<f64>) {
    let deg = incoming.len();
    tanh_buf.clear();
    tanh_buf.extend(incoming.iter().map(|&m| (0.5 * m.clamp(-LLR_MAX, LLR_MAX)).tanh()));
    suffix.clear();
    suffix.resize(deg + 1, 1.0);
    for j in (0..deg).rev() {
        suffix[j] = suffix[j + 1] * tanh_buf[j];
    }
    let limit = (0.5 * LLR_MAX).tanh();
    let mut prefix = 1.0;
    for j in 0..deg {
        let p = (prefix * suffix[j + 1]).clamp(-limit, limit);
        outgoing[j] = 2.0 * p.atanh();
        prefix *= tanh_buf[j];
        debug_assert!({
            let bound = incoming
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != j)
                .map(|(_, m)| m.abs().min(LLR_MAX))
                .fold(f64::INFINITY, f64::min);
            outgoing[j].abs() <= bound * (1.0 + 1e-9) + 1e-9
        });
    }
}

fn syndrome_is_zero(check_start: &[usize], edge_var: &[usize], hard: &[u8]) -> bool {
    check_start
        .windows(2)
        .all(|w| edge_var[w[0]..w[1]].iter().fold(0u8, |acc, &v| acc ^ hard[v]) == 0)
}

/// One received symbol in a stream file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StreamRecord {
    /// Variable index: `0..K` message, `K..K+L` encoded.
    pub index: usize,
    pub subcode: Subcode,
    pub y_value: f64,
}

pub fn write_stream<W: Write>(out: W, records: &[StreamRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_stream<R: Read>(input: R) -> Result<Vec<StreamRecord>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize().map(|rec| rec.map_err(Error::from)).collect()
}

/// Applies a stream to a fresh reception state.
pub fn state_from_stream(graph: &TannerGraph, records: &[StreamRecord], channel: &ChannelParams) -> Result<ReceptionState> {
    let mut state = ReceptionState::for_graph(graph);
    for r in records {
        state.receive(r.index, channel_llr(r.y_value, channel))?;
    }
    Ok(state)
}
