//! Monte Carlo bit-error-rate experiments over the overhead axis.

use crate::channel::{symbols_for_overhead, ChannelParams};
use crate::codec::{bp_decode, codeword, receive_prefix, TransmissionSchedule, DEFAULT_MAX_ITERS};
use crate::construct::{build_graph, n_ab, CodeSpec, TannerGraph, DEFAULT_D_MAX};
use crate::degdist::DegreeDistribution;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, from_seed};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::time::Instant;

/// Trials per batch; early abort is only considered between batches so the
/// stopping point does not depend on thread scheduling.
pub const BATCH: usize = 64;
const ABORT_MIN_ERRORS: u64 = 30;
const ABORT_REL_HALF_WIDTH: f64 = 0.1;
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeParams {
    pub delta: f64,
    pub omega: String,
    #[serde(default = "default_d_max")]
    pub d_max: u32,
}

fn default_d_max() -> u32 {
    DEFAULT_D_MAX
}

fn default_max_iters() -> usize {
    DEFAULT_MAX_ITERS
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(rename = "K")]
    pub k: usize,
    pub sigma_n: f64,
    pub overheads: Vec<f64>,
    pub trials: usize,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    pub spec: CodeParams,
    pub master_seed: u64,
    /// Stop a point once at least 30 errors are seen and the 95% half-width
    /// is under 10% of the estimate.
    #[serde(default = "default_true")]
    pub early_abort: bool,
    /// Reuse one graph for every trial instead of a fresh one per trial.
    #[serde(default)]
    pub fixed_graph: bool,
    /// Transmit the all-zero codeword instead of random messages.
    #[serde(default)]
    pub all_zero: bool,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if !(self.sigma_n > 0.0) {
            return bad(format!("sigma_n = {} must be positive", self.sigma_n));
        }
        if let Some(d) = self.overheads.iter().find(|&&d| !(d >= -0.5)) {
            return bad(format!("overhead {d} below -0.5"));
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1".into());
        }
        self.base_spec(0)?.validate()
    }

    fn omega(&self) -> Result<DegreeDistribution> {
        self.spec.omega.parse()
    }

    fn base_spec(&self, l_total: usize) -> Result<CodeSpec> {
        let spec = CodeSpec::new(self.k, self.spec.delta, self.omega()?, 0).with_d_max(self.spec.d_max);
        let l = l_total.max(spec.l_total);
        Ok(spec.with_l_total(l))
    }
}

/// One row of results.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub sigma_n: f64,
    pub overhead: f64,
    #[serde(rename = "M")]
    pub m: usize,
    pub trials: usize,
    pub bit_errors: u64,
    pub ber: f64,
    pub ci95: f64,
    pub mean_iters: f64,
    pub wall_s: f64,
}

/// Half-width of the Wilson score interval for `errors` out of `n`.
pub fn wilson_half_width(errors: u64, n: u64) -> f64 {
    if n == 0 {
        return f64::NAN;
    }
    let n = n as f64;
    let p = errors as f64 / n;
    let z2 = Z95 * Z95;
    Z95 / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt()
}

struct Trial {
    errors: u64,
    iters: usize,
}

fn run_trial(
    cfg: &ExperimentConfig,
    spec: &CodeSpec,
    fixed: Option<&TannerGraph>,
    m: usize,
    channel: &ChannelParams,
    t: usize,
) -> Result<Trial> {
    let seed = derive_seed(cfg.master_seed, t as u64);
    let built;
    let graph = match fixed {
        Some(g) => g,
        None => {
            built = build_graph(&spec.clone().with_seed(derive_seed(seed, 0)))?;
            &built
        }
    };
    let mut rng = from_seed(derive_seed(seed, 1));
    let message: Vec<u8> = if cfg.all_zero {
        vec![0; cfg.k]
    } else {
        (0..cfg.k).map(|_| rng.random_range(0..2u8)).collect()
    };
    let word = codeword(graph, &message);
    let schedule = TransmissionSchedule::new(spec);
    let state = receive_prefix(&schedule, &word, m, channel, &mut rng)?;
    let out = bp_decode(graph, &state, cfg.max_iters);
    let errors = out.bits.iter().zip(&message).filter(|(a, b)| a != b).count() as u64;
    Ok(Trial { errors, iters: out.iters })
}

/// Runs the trials for one overhead value.
pub fn run_point(cfg: &ExperimentConfig, overhead: f64) -> Result<SimResult> {
    cfg.validate()?;
    let start = Instant::now();
    let m = symbols_for_overhead(cfg.k, cfg.sigma_n, overhead);
    let l_total = m.saturating_sub(cfg.k).max(n_ab(cfg.k, cfg.spec.delta));
    let spec = cfg.base_spec(l_total)?;
    let fixed = if cfg.fixed_graph {
        Some(build_graph(&spec.clone().with_seed(derive_seed(cfg.master_seed, u64::MAX)))?)
    } else {
        None
    };
    let channel = ChannelParams::new(cfg.sigma_n);

    let mut done = 0;
    let mut errors = 0u64;
    let mut iters = 0usize;
    while done < cfg.trials {
        let end = (done + BATCH).min(cfg.trials);
        let batch: Vec<Trial> = (done..end)
            .into_par_iter()
            .map(|t| run_trial(cfg, &spec, fixed.as_ref(), m, &channel, t))
            .collect::<Result<_>>()?;
        errors += batch.iter().map(|r| r.errors).sum::<u64>();
        iters += batch.iter().map(|r| r.iters).sum::<usize>();
        done = end;
        if cfg.early_abort && errors >= ABORT_MIN_ERRORS {
            let bits = (done * cfg.k) as u64;
            let ber = errors as f64 / bits as f64;
            if wilson_half_width(errors, bits) < ABORT_REL_HALF_WIDTH * ber {
                break;
            }
        }
    }
    let bits = (done * cfg.k) as u64;
    Ok(SimResult {
        sigma_n: cfg.sigma_n,
        overhead,
        m,
        trials: done,
        bit_errors: errors,
        ber: errors as f64 / bits as f64,
        ci95: wilson_half_width(errors, bits),
        mean_iters: iters as f64 / done as f64,
        wall_s: start.elapsed().as_secs_f64(),
    })
}

/// One row per overhead, in input order.
pub fn sweep(cfg: &ExperimentConfig) -> Result<Vec<SimResult>> {
    cfg.overheads.iter().map(|&d| run_point(cfg, d)).collect()
}

pub fn write_results<W: Write>(out: W, rows: &[SimResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(["sigma_n", "overhead", "M", "trials", "bit_errors", "ber", "ci95", "mean_iters", "wall_s"])?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(k: usize, sigma_n: f64, overheads: Vec<f64>, trials: usize) -> ExperimentConfig {
        ExperimentConfig {
            k,
            sigma_n,
            overheads,
            trials,
            max_iters: 100,
            spec: CodeParams { delta: 0.3, omega: "0.475*x^3 + 0.525*x^6".into(), d_max: 50 },
            master_seed: 2024,
            early_abort: false,
            fixed_graph: false,
            all_zero: false,
        }
    }

    #[test]
    fn wilson_closed_form() {
        // Reference Wilson intervals: 10/100 -> [0.055229, 0.174366],
        // 3/200000 -> [5.10137e-6, 4.41050e-5].
        assert!((wilson_half_width(10, 100) - (0.174_365_66 - 0.055_229_14) / 2.0).abs() < 1e-7);
        assert!((wilson_half_width(3, 200_000) - (4.410_498e-5 - 5.101_366e-6) / 2.0).abs() < 1e-10);
        assert!(wilson_half_width(0, 1000) > 0.0);
    }

    #[test]
    fn near_noiseless_sub_code_a_decodes() {
        let mut cfg = config(200, 0.01, vec![], 50);
        // Overhead that asks for exactly K symbols.
        let c = crate::channel::capacity(0.01);
        let d = c - 1.0;
        cfg.overheads = vec![d];
        let r = run_point(&cfg, d).unwrap();
        assert_eq!(r.m, 200);
        assert_eq!(r.bit_errors, 0);
        assert_eq!(r.trials, 50);
    }

    #[test]
    fn single_trial_is_reproducible() {
        let cfg = config(300, 0.8, vec![0.1], 1);
        let a = run_point(&cfg, 0.1).unwrap();
        let b = run_point(&cfg, 0.1).unwrap();
        assert_eq!((a.bit_errors, a.mean_iters), (b.bit_errors, b.mean_iters));
    }

    #[test]
    fn thread_count_does_not_matter() {
        let cfg = config(200, 0.9, vec![0.2], 70);
        let a = run_point(&cfg, 0.2).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| run_point(&cfg, 0.2).unwrap());
        assert_eq!((a.bit_errors, a.trials), (b.bit_errors, b.trials));
    }

    #[test]
    fn early_abort_stops_between_batches() {
        let mut cfg = config(200, 1.2, vec![0.0], 1000);
        cfg.early_abort = true;
        let r = run_point(&cfg, 0.0).unwrap();
        assert!(r.trials < 1000 && r.trials.is_multiple_of(BATCH));
        assert!(r.bit_errors >= ABORT_MIN_ERRORS);
    }

    #[test]
    fn empty_sweep_is_empty() {
        let cfg = config(100, 0.8, vec![], 5);
        assert!(sweep(&cfg).unwrap().is_empty());
        let mut buf = Vec::new();
        write_results(&mut buf, &[]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "sigma_n,overhead,M,trials,bit_errors,ber,ci95,mean_iters,wall_s\n");
    }

    #[test]
    fn invalid_configs() {
        assert!(config(100, 0.8, vec![-0.6], 5).validate().is_err());
        assert!(config(100, 0.8, vec![0.1], 0).validate().is_err());
        let json = r#"{"K": 100, "sigma_n": 0.8, "overheads": [0.1], "trials": 3,
            "spec": {"delta": 0.3, "omega": "0.5*x + 0.5*x^3"}, "master_seed": 1}"#;
        assert!(ExperimentConfig::from_json(json).is_err());
    }

    #[test]
    fn fixed_graph_and_all_zero_run() {
        let mut cfg = config(200, 0.7, vec![0.3], 20);
        cfg.fixed_graph = true;
        cfg.all_zero = true;
        let r = run_point(&cfg, 0.3).unwrap();
        assert_eq!(r.trials, 20);
    }
}
