//! Equal-gain transmission baseline for two receive antennas.
//!
//! The beamformer is restricted to `|f_i| = 1/√N_T` and its phases are
//! improved one coordinate at a time over a `2^b`-point phase grid, starting
//! from the phases of the optimal (unconstrained) beamformer.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{draw_channel, CorrelationSpec, FadingSpec, RngStream};
use crate::error::{Error, Result};
use crate::gains::{optimal_beamformer_mimo, summarize_gains, AveragingMode, GainSummary};
use crate::linalg::{norm_sqr, CMatrix, LineVector, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct EgtOutcome {
    /// Final incumbent `‖H f‖²`.
    pub gain: f64,
    /// Gain of the phase-of-`f_opt` initialization.
    pub initial_gain: f64,
    /// Final equal-gain beamformer.
    pub beamformer: Vec<C64>,
    /// Incumbent gain after every accepted update, in order.
    pub accepted: Vec<f64>,
}

/// Options for [`iterative_egt`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EgtParams {
    /// Phase bits; the grid has `2^bits` levels starting at phase 0.
    pub bits: u32,
    /// Number of full sweeps over the coordinates.
    pub sweeps: usize,
    /// Re-impose the initialization phases on coordinates after `m` before
    /// each coordinate search, as the original listing does.
    pub faithful_reset: bool,
}

impl EgtParams {
    pub fn new(bits: u32, sweeps: usize) -> Self {
        Self { bits, sweeps, faithful_reset: false }
    }

    fn validate(&self) -> Result<()> {
        if self.bits < 1 || self.bits > 20 {
            return Err(Error::Parameter(format!("phase bits {} must lie in 1..=20", self.bits)));
        }
        if self.sweeps < 1 {
            return Err(Error::Parameter("at least one sweep is required".into()));
        }
        Ok(())
    }
}

/// Coordinate ascent on `‖H f‖²` over equal-gain beamformers.
pub fn iterative_egt(h: &CMatrix, f_opt: &LineVector, params: EgtParams) -> Result<EgtOutcome> {
    params.validate()?;
    let nt = h.cols();
    if f_opt.len() != nt {
        return Err(Error::Parameter(format!(
            "beamformer length {} does not match {nt} transmit antennas",
            f_opt.len()
        )));
    }
    let amp = 1.0 / (nt as f64).sqrt();
    let init: Vec<C64> = f_opt
        .entries()
        .iter()
        .map(|z| if z.norm() > 0.0 { z / z.norm() * amp } else { C64::new(amp, 0.0) })
        .collect();
    let levels = 1usize << params.bits;
    let grid: Vec<C64> =
        (0..levels).map(|w| C64::from_polar(amp, 2.0 * PI * w as f64 / levels as f64)).collect();
    let columns: Vec<Vec<C64>> = (0..nt).map(|j| h.column(j)).collect();

    let mut incumbent = init.clone();
    let mut best = norm_sqr(&h.mul_vec(&incumbent)?);
    let initial_gain = best;
    let mut accepted = Vec::new();

    for _ in 0..params.sweeps {
        for m in 0..nt {
            let mut trial = incumbent.clone();
            if params.faithful_reset {
                trial[m + 1..].copy_from_slice(&init[m + 1..]);
            }
            let base = h.mul_vec(&trial)?;
            let col = &columns[m];
            let old = trial[m];
            let mut choice = None;
            for (w, &cand) in grid.iter().enumerate() {
                let delta = cand - old;
                let g: f64 = base.iter().zip(col).map(|(b, c)| (b + c * delta).norm_sqr()).sum();
                if g > best {
                    best = g;
                    choice = Some(w);
                }
            }
            if let Some(w) = choice {
                trial[m] = grid[w];
                incumbent = trial;
                accepted.push(best);
            }
        }
    }
    Ok(EgtOutcome { gain: best, initial_gain, beamformer: incumbent, accepted })
}

/// Returns only the final gain of [`iterative_egt`] with plain coordinate ascent.
pub fn iterative_egt_gain(h: &CMatrix, f_opt: &LineVector, bits: u32, sweeps: usize) -> Result<f64> {
    Ok(iterative_egt(h, f_opt, EgtParams::new(bits, sweeps))?.gain)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EgtConfig {
    pub bits: u32,
    pub sweeps: usize,
    pub trials: usize,
    pub fading: FadingSpec,
    #[serde(default)]
    pub correlation: Option<CorrelationSpec>,
    #[serde(default)]
    pub averaging_mode: AveragingMode,
    #[serde(default)]
    pub faithful_reset: bool,
}

impl EgtConfig {
    /// Reference settings: `b = 8`, `N = 10`.
    pub fn standard(fading: FadingSpec, trials: usize) -> Self {
        Self {
            bits: 8,
            sweeps: 10,
            trials,
            fading,
            correlation: None,
            averaging_mode: AveragingMode::Linear,
            faithful_reset: false,
        }
    }
}

/// Per-trial equal-gain baseline for a `2 × n_t` channel on stream `(seed, trial)`.
pub fn egt_trial(
    cfg: &EgtConfig,
    factors: Option<&(CMatrix, CMatrix)>,
    n_t: usize,
    seed: u64,
    trial: u64,
) -> Result<f64> {
    let h = draw_channel(&cfg.fading, factors, 2, n_t, RngStream::new(seed, trial))?;
    let f_opt = optimal_beamformer_mimo(h.matrix())?;
    let params = EgtParams { bits: cfg.bits, sweeps: cfg.sweeps, faithful_reset: cfg.faithful_reset };
    Ok(iterative_egt(h.matrix(), &f_opt, params)?.gain)
}

/// Monte Carlo average of the iterative EGT baseline over `2 × n_t` channels.
pub fn egt_baseline_mc(cfg: &EgtConfig, n_t: usize, seed: u64) -> Result<GainSummary> {
    cfg.fading.validate()?;
    if n_t == 0 || cfg.trials == 0 {
        return Err(Error::Parameter("need at least one transmit antenna and one trial".into()));
    }
    let factors = match &cfg.correlation {
        Some(c) => {
            c.validate()?;
            Some(c.factors(2, n_t)?)
        }
        None => None,
    };
    let gains: Vec<f64> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| egt_trial(cfg, factors.as_ref(), n_t, seed, t))
        .collect::<Result<_>>()?;
    summarize_gains(&gains, cfg.averaging_mode)
}
