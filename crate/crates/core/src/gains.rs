//! Beamformers, realized gains, companding, and gain statistics.

use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::codebook::{CpCodebook, QuantizeMode};
use crate::error::{Error, Result};
use crate::linalg::{norm_sqr, CMatrix, LineVector, C64};

/// Optimal MISO beamformer `h† / ‖h‖`.
pub fn optimal_beamformer_miso(h: &[C64]) -> Result<LineVector> {
    LineVector::normalize(h.iter().map(|z| z.conj()).collect())
        .map_err(|_| Error::Degenerate("zero MISO channel has no beamforming direction".into()))
}

/// Dominant eigenpair of the 2×2 Hermitian matrix `[[a, b], [b*, d]]`.
fn hermitian2_dominant(a: f64, b: C64, d: f64) -> (f64, [C64; 2]) {
    let half_gap = 0.5 * (a - d);
    let lambda = 0.5 * (a + d) + (half_gap * half_gap + b.norm_sqr()).sqrt();
    // Two algebraically equivalent eigenvector forms; keep the better conditioned one.
    let v1 = [b, C64::new(lambda - a, 0.0)];
    let v2 = [C64::new(lambda - d, 0.0), b.conj()];
    let n1 = v1[0].norm_sqr() + v1[1].norm_sqr();
    let n2 = v2[0].norm_sqr() + v2[1].norm_sqr();
    let (v, n) = if n1 >= n2 { (v1, n1) } else { (v2, n2) };
    if n == 0.0 {
        // b = 0 and a = d: any unit vector is dominant.
        return (lambda, [C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
    }
    let s = 1.0 / n.sqrt();
    (lambda, [v[0] * s, v[1] * s])
}

/// Rotates `v` so that its first non-negligible entry is real positive.
fn pin_phase(v: &mut [C64]) {
    let scale = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if let Some(z) = v.iter().find(|z| z.norm() > 1e-12 * scale).copied() {
        let w = z.conj() / z.norm();
        v.iter_mut().for_each(|x| *x *= w);
    }
}

fn check_receive(h: &CMatrix) -> Result<()> {
    match h.rows() {
        1 | 2 => Ok(()),
        r => Err(Error::Unsupported(format!("{r} receive antennas; only 1 or 2 are supported"))),
    }
}

/// Dominant right singular vector of a 1×n or 2×n channel.
///
/// For two receive antennas the dominant eigenvector `z` of `H H†` is found
/// in closed form and `f = H† z / σ_max`. The global phase is pinned so the
/// first nonzero entry is real positive.
pub fn optimal_beamformer_mimo(h: &CMatrix) -> Result<LineVector> {
    check_receive(h)?;
    if h.frobenius_sqr() == 0.0 {
        return Err(Error::Degenerate("zero channel has no beamforming direction".into()));
    }
    let mut f = if h.rows() == 1 {
        h.row(0).iter().map(|z| z.conj()).collect::<Vec<_>>()
    } else {
        let a = norm_sqr(h.row(0));
        let d = norm_sqr(h.row(1));
        let b: C64 = h.row(0).iter().zip(h.row(1)).map(|(x, y)| x * y.conj()).sum();
        let (_, z) = hermitian2_dominant(a, b, d);
        (0..h.cols()).map(|j| h[(0, j)].conj() * z[0] + h[(1, j)].conj() * z[1]).collect()
    };
    pin_phase(&mut f);
    LineVector::normalize(f)
}

/// Largest squared singular value; `‖h‖²` for MISO.
pub fn mrt_gain(h: &CMatrix) -> Result<f64> {
    check_receive(h)?;
    if h.rows() == 1 {
        return Ok(norm_sqr(h.row(0)));
    }
    let a = norm_sqr(h.row(0));
    let d = norm_sqr(h.row(1));
    let b: C64 = h.row(0).iter().zip(h.row(1)).map(|(x, y)| x * y.conj()).sum();
    Ok(hermitian2_dominant(a, b, d).0)
}

/// `(Σ|h_i|)² / N_T`.
pub fn egt_gain_miso(h: &[C64]) -> f64 {
    let l1: f64 = h.iter().map(|z| z.norm()).sum();
    l1 * l1 / h.len() as f64
}

/// `‖H f‖²`, the gain with a maximum-ratio combiner.
pub fn realized_gain(h: &CMatrix, f: &LineVector) -> Result<f64> {
    Ok(norm_sqr(&h.mul_vec(f.entries())?))
}

/// How the CP codeword is chosen for a channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// Nearest codeword to the dominant right singular vector.
    #[default]
    Chordal,
    /// Codeword maximizing `‖H c‖²` directly (exhaustive oracle).
    DirectGain,
}

/// Quantizes the channel's optimal beamformer with `cb` and returns
/// `(index, ‖H c‖²)`.
pub fn cp_beamforming_gain(
    h: &ChannelRealization,
    cb: &CpCodebook,
    mode: QuantizeMode,
    selection: Selection,
) -> Result<(u64, f64)> {
    let m = h.matrix();
    if m.cols() != cb.n() {
        return Err(Error::Parameter(format!(
            "channel has {} transmit antennas but the codebook has length {}",
            m.cols(),
            cb.n()
        )));
    }
    let index = match selection {
        Selection::Chordal => cb.quantize(&optimal_beamformer_mimo(m)?, mode)?.index,
        Selection::DirectGain => cb.argmax_gain(m, None)?.0,
    };
    Ok((index, realized_gain(m, &cb.codeword(index))?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompandingMode {
    /// Quantize the correlated channel's optimal beamformer, then rotate.
    #[default]
    PaperLiteral,
    /// Pick the codeword whose rotated version maximizes the realized gain.
    EffectiveGain,
}

/// Rotates codeword `c` by the transmit correlation factor and renormalizes:
/// `L_tx c / ‖L_tx c‖`.
///
/// With the channel model `H̃ = L_rx H L_tx†`, the transmit factor that
/// right-multiplies the channel is `L_tx†`, and its adjoint `L_tx` is the
/// rotation that maps the uncorrelated beamforming direction `h†` onto the
/// correlated one `h̃† = L_tx h†`.
pub fn compand(c: &LineVector, l_tx: &CMatrix) -> Result<LineVector> {
    let n = c.len();
    if l_tx.rows() != n || l_tx.cols() != n {
        return Err(Error::Parameter(format!(
            "transmit factor is {}x{}, codeword has length {n}",
            l_tx.rows(),
            l_tx.cols()
        )));
    }
    // Triangular factor: singular iff a diagonal entry vanishes.
    let is_lower = (0..n).all(|i| (i + 1..n).all(|j| l_tx[(i, j)] == C64::new(0.0, 0.0)));
    if is_lower {
        if let Some(i) = (0..n).find(|&i| l_tx[(i, i)].norm() < 1e-14) {
            return Err(Error::Numerical { pivot: i, reason: "singular transmit factor".into() });
        }
    }
    let v = l_tx.mul_vec(c.entries())?;
    LineVector::normalize(v)
        .map_err(|_| Error::Numerical { pivot: 0, reason: "transmit factor annihilates codeword".into() })
}

/// CP gain on a correlated channel with companded codewords. Returns
/// `(index, gain)`.
pub fn companded_cp_gain(
    h_corr: &ChannelRealization,
    l_tx: &CMatrix,
    cb: &CpCodebook,
    mode: CompandingMode,
    quantize_mode: QuantizeMode,
) -> Result<(u64, f64)> {
    let m = h_corr.matrix();
    let index = match mode {
        CompandingMode::PaperLiteral => cb.quantize(&optimal_beamformer_mimo(m)?, quantize_mode)?.index,
        CompandingMode::EffectiveGain => {
            let g = m.matmul(l_tx)?;
            cb.argmax_gain(&g, Some(l_tx))?.0
        }
    };
    let f = compand(&cb.codeword(index), l_tx)?;
    Ok((index, realized_gain(m, &f)?))
}

/// `(E[Γ_EGT] − E[Γ_CP]) / E[Γ_EGT]` on linear means.
pub fn normalized_distortion(mean_egt: f64, mean_cp: f64) -> Result<f64> {
    if !(mean_egt > 0.0) {
        return Err(Error::Parameter(format!("mean EGT gain {mean_egt} must be positive")));
    }
    Ok((mean_egt - mean_cp) / mean_egt)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AveragingMode {
    /// Mean of linear gains, then dB.
    #[default]
    Linear,
    /// Mean of per-sample dB values.
    Db,
}

impl AveragingMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            AveragingMode::Linear => "linear",
            AveragingMode::Db => "db",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainSummary {
    pub mean_linear: f64,
    pub mean_db: f64,
    pub trials: usize,
    pub averaging_mode: AveragingMode,
}

pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn summarize_gains(samples: &[f64], mode: AveragingMode) -> Result<GainSummary> {
    if samples.is_empty() {
        return Err(Error::Parameter("cannot summarize an empty gain sample".into()));
    }
    if let Some(g) = samples.iter().find(|g| !(**g >= 0.0)) {
        return Err(Error::Parameter(format!("gain {g} is negative or NaN")));
    }
    let n = samples.len() as f64;
    let mean_linear = samples.iter().sum::<f64>() / n;
    let mean_db = match mode {
        AveragingMode::Linear => to_db(mean_linear),
        AveragingMode::Db => {
            if samples.iter().any(|&g| g <= 0.0) {
                return Err(Error::Parameter("dB averaging needs strictly positive gains".into()));
            }
            samples.iter().map(|&g| to_db(g)).sum::<f64>() / n
        }
    };
    Ok(GainSummary { mean_linear, mean_db, trials: samples.len(), averaging_mode: mode })
}
