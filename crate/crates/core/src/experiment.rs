//! Declarative Monte Carlo experiments and the figure/table presets.
//!
//! Every trial draws its channel from stream `(master_seed, trial)`, so all
//! codebooks in one run see the same channels and the output does not depend
//! on how trials are scheduled across threads.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{distortion_bound, fading_abs_moments, qe_bound};
use crate::channel::{draw_channel, CorrelationSpec, FadingSpec, RngStream};
use crate::codebook::{CpCodebook, MessageSpace, PskCodebook, QuantizeMode};
use crate::egt::{iterative_egt, EgtParams};
use crate::error::{Error, Result};
use crate::field::PrimeModulus;
use crate::gains::{
    companded_cp_gain, cp_beamforming_gain, egt_gain_miso, mrt_gain, normalized_distortion,
    optimal_beamformer_mimo, realized_gain, summarize_gains, AveragingMode, CompandingMode, GainSummary,
    Selection,
};
use crate::linalg::CMatrix;

/// Codebooks larger than this need `allow_long`.
pub const LONG_RUN_CODEWORDS: u64 = 200_000;

pub const CSV_HEADER: [&str; 16] = [
    "model",
    "n_r",
    "n_t",
    "p",
    "k",
    "B",
    "M",
    "trials",
    "seed",
    "avg_gain_db",
    "egt_db",
    "mrt_db",
    "distortion",
    "qe_bound",
    "distortion_bound",
    "averaging_mode",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum System {
    Miso,
    Mimo2,
}

impl System {
    pub fn n_r(&self) -> usize {
        match self {
            System::Miso => 1,
            System::Mimo2 => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum CodebookKind {
    Cp,
    Psk { m: u32 },
}

fn default_trials() -> usize {
    300
}

fn default_egt_bits() -> u32 {
    8
}

fn default_egt_sweeps() -> usize {
    10
}

fn default_codebook() -> CodebookKind {
    CodebookKind::Cp
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: System,
    pub p: u32,
    #[serde(default)]
    pub k_list: Vec<usize>,
    /// Defaults to `p − 1`.
    #[serde(default)]
    pub n_t: Option<usize>,
    pub fading: FadingSpec,
    #[serde(default)]
    pub correlation: Option<CorrelationSpec>,
    #[serde(default = "default_codebook")]
    pub codebook: CodebookKind,
    #[serde(default)]
    pub message_space: MessageSpace,
    #[serde(default)]
    pub companding_mode: CompandingMode,
    #[serde(default)]
    pub averaging_mode: AveragingMode,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub selection: Selection,
    #[serde(default = "default_egt_bits")]
    pub egt_bits: u32,
    #[serde(default = "default_egt_sweeps")]
    pub egt_sweeps: usize,
}

impl ExperimentConfig {
    pub fn new(system: System, p: u32, k_list: Vec<usize>, fading: FadingSpec) -> Self {
        Self {
            system,
            p,
            k_list,
            n_t: None,
            fading,
            correlation: None,
            codebook: CodebookKind::Cp,
            message_space: MessageSpace::default(),
            companding_mode: CompandingMode::default(),
            averaging_mode: AveragingMode::default(),
            trials: default_trials(),
            master_seed: 1,
            selection: Selection::default(),
            egt_bits: default_egt_bits(),
            egt_sweeps: default_egt_sweeps(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn n_t(&self) -> usize {
        self.n_t.unwrap_or((self.p as usize).saturating_sub(1))
    }

    pub fn is_correlated(&self) -> bool {
        self.correlation.is_some_and(|c| c.rho_tx != 0.0 || c.rho_rx != 0.0)
    }

    /// Schema-level checks; infeasible numeric parameters surface later as
    /// parameter errors.
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be positive".into()));
        }
        if self.egt_bits == 0 || self.egt_sweeps == 0 {
            return Err(Error::Config("egt_bits and egt_sweeps must be positive".into()));
        }
        if matches!(self.codebook, CodebookKind::Cp) && self.k_list.is_empty() {
            return Err(Error::Config("k_list must not be empty for a cp codebook".into()));
        }
        Ok(())
    }

    pub fn model_label(&self) -> String {
        match self.correlation {
            Some(c) if self.is_correlated() => format!("{}+corr:{}:{}", self.fading.label(), c.rho_tx, c.rho_rx),
            _ => self.fading.label(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
    pub allow_long: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub model: String,
    pub n_r: usize,
    pub n_t: usize,
    pub p: Option<u32>,
    pub k: Option<usize>,
    pub bits: Option<u32>,
    pub m: Option<u32>,
    pub trials: usize,
    pub seed: u64,
    pub avg_gain_db: f64,
    pub egt_db: f64,
    pub mrt_db: f64,
    pub distortion: Option<f64>,
    pub qe_bound: Option<f64>,
    pub distortion_bound: Option<f64>,
    pub averaging_mode: AveragingMode,
}

impl ResultRow {
    pub fn record(&self) -> Vec<String> {
        fn opt<T: ToString>(v: Option<T>) -> String {
            v.map(|x| x.to_string()).unwrap_or_default()
        }
        vec![
            self.model.clone(),
            self.n_r.to_string(),
            self.n_t.to_string(),
            opt(self.p),
            opt(self.k),
            opt(self.bits),
            opt(self.m),
            self.trials.to_string(),
            self.seed.to_string(),
            self.avg_gain_db.to_string(),
            self.egt_db.to_string(),
            self.mrt_db.to_string(),
            opt(self.distortion),
            opt(self.qe_bound),
            opt(self.distortion_bound),
            self.averaging_mode.as_str().to_string(),
        ]
    }
}

pub fn write_rows<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record(r.record())?;
    }
    w.flush()?;
    Ok(())
}

pub fn rows_to_csv(rows: &[ResultRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_rows(rows, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
}

fn in_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(Error::Config("thread count must be positive".into())),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::Config(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

enum Book {
    Cp(CpCodebook),
    Psk(PskCodebook),
}

struct TrialOut {
    mrt: f64,
    egt: f64,
    gains: Vec<f64>,
}

fn run_trial(
    cfg: &ExperimentConfig,
    books: &[Book],
    factors: Option<&(CMatrix, CMatrix)>,
    trial: u64,
) -> Result<TrialOut> {
    let n_t = cfg.n_t();
    let h = draw_channel(&cfg.fading, factors, cfg.system.n_r(), n_t, RngStream::new(cfg.master_seed, trial))?;
    let m = h.matrix();
    let mrt = mrt_gain(m)?;
    let f_opt = optimal_beamformer_mimo(m)?;
    let egt = match cfg.system {
        System::Miso => egt_gain_miso(m.row(0)),
        System::Mimo2 => {
            let params = EgtParams::new(cfg.egt_bits, cfg.egt_sweeps);
            iterative_egt(m, &f_opt, params)?.gain
        }
    };
    let mut gains = Vec::with_capacity(books.len());
    for book in books {
        let g = match book {
            Book::Cp(cb) => match factors {
                Some((_, l_tx)) if cfg.is_correlated() => {
                    companded_cp_gain(&h, l_tx, cb, cfg.companding_mode, QuantizeMode::Pruned)?.1
                }
                _ => cp_beamforming_gain(&h, cb, QuantizeMode::Pruned, cfg.selection)?.1,
            },
            Book::Psk(psk) => realized_gain(m, &psk.quantize(&f_opt)?)?,
        };
        gains.push(g);
    }
    Ok(TrialOut { mrt, egt, gains })
}

fn check_long_run(p: u32, k: usize, allow_long: bool) -> Result<()> {
    let size = (p as u64).checked_pow(k as u32).unwrap_or(u64::MAX);
    if size > LONG_RUN_CODEWORDS && !allow_long {
        return Err(Error::LongRun(format!(
            "p = {p}, k = {k} has {size} codewords (limit {LONG_RUN_CODEWORDS} without allow_long)"
        )));
    }
    Ok(())
}

/// Runs one experiment and returns one row per codebook, ordered by `k`.
pub fn run_experiment(cfg: &ExperimentConfig, opts: RunOptions) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    cfg.fading.validate()?;
    let p = PrimeModulus::new(cfg.p)?;
    let n_t = cfg.n_t();
    let n_r = cfg.system.n_r();

    let mut k_list = cfg.k_list.clone();
    k_list.sort_unstable();
    k_list.dedup();
    let books: Vec<Book> = match cfg.codebook {
        CodebookKind::Cp => k_list
            .iter()
            .map(|&k| {
                if k == 0 || k > n_t || n_t > cfg.p as usize - 1 {
                    return Err(Error::Parameter(format!(
                        "need 1 <= k <= n_t <= p - 1, got k = {k}, n_t = {n_t}, p = {}",
                        cfg.p
                    )));
                }
                check_long_run(cfg.p, k, opts.allow_long)?;
                Ok(Book::Cp(CpCodebook::with_space(p, k, n_t, cfg.message_space)?))
            })
            .collect::<Result<_>>()?,
        CodebookKind::Psk { m } => vec![Book::Psk(PskCodebook::new(n_t, m)?)],
    };
    let factors = match &cfg.correlation {
        Some(c) => {
            c.validate()?;
            Some(c.factors(n_r, n_t)?)
        }
        None => None,
    };

    let outs: Vec<TrialOut> = in_pool(opts.threads, || {
        (0..cfg.trials as u64)
            .into_par_iter()
            .map(|t| run_trial(cfg, &books, factors.as_ref(), t))
            .collect::<Result<Vec<_>>>()
    })??;

    let summary = |xs: Vec<f64>| -> Result<GainSummary> { summarize_gains(&xs, cfg.averaging_mode) };
    let mrt = summary(outs.iter().map(|o| o.mrt).collect())?;
    let egt = summary(outs.iter().map(|o| o.egt).collect())?;
    let moments = match (&cfg.system, cfg.is_correlated()) {
        (System::Miso, false) => fading_abs_moments(&cfg.fading).ok(),
        _ => None,
    };

    books
        .iter()
        .enumerate()
        .map(|(i, book)| {
            let g = summary(outs.iter().map(|o| o.gains[i]).collect())?;
            let (k, bits, m) = match book {
                Book::Cp(cb) => (Some(cb.k()), cb.feedback_bits(), None),
                Book::Psk(psk) => (None, psk.feedback_bits(), Some(psk.order())),
            };
            // Bounds are stated for the constant-free code holding the same lines.
            let k_free = match (k, cfg.message_space) {
                (Some(k), MessageSpace::ConstantFree) => Some(k),
                (Some(k), MessageSpace::WithConstant) => k.checked_sub(1).filter(|&k| k > 0),
                (None, _) => None,
            };
            let (qe, db) = match (moments, k_free) {
                (Some(mo), Some(k)) => (qe_bound(p, n_t, k, mo).ok(), distortion_bound(p, n_t, k, mo).ok()),
                _ => (None, None),
            };
            Ok(ResultRow {
                model: cfg.model_label(),
                n_r,
                n_t,
                p: matches!(book, Book::Cp(_)).then_some(cfg.p),
                k,
                bits: Some(bits),
                m,
                trials: cfg.trials,
                seed: cfg.master_seed,
                avg_gain_db: g.mean_db,
                egt_db: egt.mean_db,
                mrt_db: mrt.mean_db,
                distortion: Some(normalized_distortion(egt.mean_linear, g.mean_linear)?),
                qe_bound: qe,
                distortion_bound: db,
                averaging_mode: cfg.averaging_mode,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    Fig8,
    Fig9,
    Table1,
    Table2,
}

impl Preset {
    pub const ALL: [Preset; 10] = [
        Preset::Fig2,
        Preset::Fig3,
        Preset::Fig4,
        Preset::Fig5,
        Preset::Fig6,
        Preset::Fig7,
        Preset::Fig8,
        Preset::Fig9,
        Preset::Table1,
        Preset::Table2,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Fig2 => "fig2",
            Preset::Fig3 => "fig3",
            Preset::Fig4 => "fig4",
            Preset::Fig5 => "fig5",
            Preset::Fig6 => "fig6",
            Preset::Fig7 => "fig7",
            Preset::Fig8 => "fig8",
            Preset::Fig9 => "fig9",
            Preset::Table1 => "table1",
            Preset::Table2 => "table2",
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown preset '{s}'")))
    }
}

/// Rician factor used for table 2, which does not state one.
pub const TABLE2_KAPPA: f64 = 0.1;

fn k_range(p: u32, allow_long: bool) -> Vec<usize> {
    let top = (p as usize - 1).min(7);
    (1..=top).filter(|&k| allow_long || (p as u64).pow(k as u32) <= LONG_RUN_CODEWORDS).collect()
}

/// The experiments behind a preset, in output order. Table presets are
/// handled by [`reproduce`] directly. CP sweeps use the message space with
/// a constant term.
pub fn preset_configs(preset: Preset, allow_long: bool) -> Vec<ExperimentConfig> {
    let rayleigh = FadingSpec::Rayleigh;
    let tx = Some(CorrelationSpec { rho_tx: 0.2, rho_rx: 0.0 });
    let txrx = Some(CorrelationSpec { rho_tx: 0.2, rho_rx: 0.1 });
    let sweep = |system: System, primes: &[u32], fading: FadingSpec, corr: Option<CorrelationSpec>| {
        primes
            .iter()
            .map(|&p| ExperimentConfig {
                correlation: corr,
                message_space: MessageSpace::WithConstant,
                ..ExperimentConfig::new(system, p, k_range(p, allow_long), fading)
            })
            .collect::<Vec<_>>()
    };
    match preset {
        Preset::Fig2 => sweep(System::Miso, &[5, 7, 11], rayleigh, None),
        Preset::Fig3 => sweep(System::Miso, &[5, 7], rayleigh, tx),
        Preset::Fig4 => sweep(System::Miso, &[5, 7, 11], FadingSpec::Rician { kappa: 0.1 }, None),
        Preset::Fig5 => sweep(System::Miso, &[5, 7], FadingSpec::Rician { kappa: 0.25 }, tx),
        Preset::Fig6 => {
            let mut out = Vec::new();
            for fading in [rayleigh, FadingSpec::Rician { kappa: 0.25 }] {
                out.extend(sweep(System::Miso, &[11], fading, None));
                for m in [2, 4, 6, 8] {
                    out.push(ExperimentConfig {
                        codebook: CodebookKind::Psk { m },
                        k_list: Vec::new(),
                        ..ExperimentConfig::new(System::Miso, 11, Vec::new(), fading)
                    });
                }
            }
            out
        }
        Preset::Fig7 => sweep(System::Mimo2, &[5, 7, 11], rayleigh, None),
        Preset::Fig8 => sweep(System::Mimo2, &[5, 7], rayleigh, txrx),
        Preset::Fig9 => sweep(System::Mimo2, &[5, 7], FadingSpec::Rician { kappa: 0.05 }, txrx),
        Preset::Table1 | Preset::Table2 => Vec::new(),
    }
}

/// One row per table entry: the iterative equal-gain baseline for `2 × N_T`.
fn table_rows(fading: FadingSpec, trials: usize, seed: u64, threads: Option<usize>) -> Result<Vec<ResultRow>> {
    [4usize, 6]
        .iter()
        .map(|&n_t| {
            let cfg = ExperimentConfig {
                n_t: Some(n_t),
                trials,
                master_seed: seed,
                ..ExperimentConfig::new(System::Mimo2, n_t as u32 + 1, Vec::new(), fading)
            };
            let factors = None;
            let outs: Vec<(f64, f64)> = in_pool(threads, || {
                (0..trials as u64)
                    .into_par_iter()
                    .map(|t| run_trial(&cfg, &[], factors, t).map(|o| (o.egt, o.mrt)))
                    .collect::<Result<Vec<_>>>()
            })??;
            let egt = summarize_gains(&outs.iter().map(|o| o.0).collect::<Vec<_>>(), cfg.averaging_mode)?;
            let mrt = summarize_gains(&outs.iter().map(|o| o.1).collect::<Vec<_>>(), cfg.averaging_mode)?;
            Ok(ResultRow {
                model: cfg.model_label(),
                n_r: 2,
                n_t,
                p: None,
                k: None,
                bits: None,
                m: None,
                trials,
                seed,
                avg_gain_db: egt.mean_db,
                egt_db: egt.mean_db,
                mrt_db: mrt.mean_db,
                distortion: None,
                qe_bound: None,
                distortion_bound: None,
                averaging_mode: cfg.averaging_mode,
            })
        })
        .collect()
}

/// Runs every experiment of a preset and concatenates the rows.
pub fn reproduce(
    preset: Preset,
    trials: Option<usize>,
    seed: Option<u64>,
    opts: RunOptions,
) -> Result<Vec<ResultRow>> {
    let seed = seed.unwrap_or(1);
    let trials = trials.unwrap_or_else(default_trials);
    match preset {
        Preset::Table1 => return table_rows(FadingSpec::Rayleigh, trials, seed, opts.threads),
        Preset::Table2 => return table_rows(FadingSpec::Rician { kappa: TABLE2_KAPPA }, trials, seed, opts.threads),
        _ => {}
    }
    let mut rows = Vec::new();
    for cfg in preset_configs(preset, opts.allow_long) {
        let cfg = ExperimentConfig { trials, master_seed: seed, ..cfg };
        rows.extend(run_experiment(&cfg, opts)?);
    }
    Ok(rows)
}
