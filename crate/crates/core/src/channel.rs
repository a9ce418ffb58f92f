//! Reproducible Rayleigh/Rician channel sampling with Kronecker correlation.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};

/// A per-trial random stream keyed by `(master_seed, stream_index)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        Self { master_seed, stream_index }
    }

    pub fn source(&self) -> GaussianSource {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_index);
        GaussianSource { rng }
    }
}

/// Box–Muller complex Gaussians on a ChaCha8 stream.
#[derive(Debug, Clone)]
pub struct GaussianSource {
    rng: ChaCha8Rng,
}

impl GaussianSource {
    /// Uniform on `(0, 1]` with 53 random bits.
    fn open_unit(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// One `CN(0, 1)` draw: independent `N(0, 1/2)` real and imaginary parts.
    pub fn complex_normal(&mut self) -> C64 {
        let r = (-2.0 * self.open_unit().ln()).sqrt();
        let theta = 2.0 * PI * self.open_unit();
        C64::new(r * theta.cos(), r * theta.sin()) * FRAC_1_SQRT_2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum FadingSpec {
    Rayleigh,
    /// `kappa` is the linear LOS-to-scatter power ratio.
    Rician { kappa: f64 },
}

impl FadingSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            FadingSpec::Rician { kappa } if !(kappa >= 0.0 && kappa.is_finite()) => {
                Err(Error::Parameter(format!("Rician kappa {kappa} must be finite and >= 0")))
            }
            _ => Ok(()),
        }
    }

    pub fn sample(&self, n_r: usize, n_t: usize, src: &mut GaussianSource) -> Result<ChannelRealization> {
        match *self {
            FadingSpec::Rayleigh => sample_rayleigh(n_r, n_t, src),
            FadingSpec::Rician { kappa } => sample_rician(n_r, n_t, kappa, src),
        }
    }

    pub fn label(&self) -> String {
        match self {
            FadingSpec::Rayleigh => "rayleigh".into(),
            FadingSpec::Rician { kappa } => format!("rician:{kappa}"),
        }
    }
}

/// Exponential transmit/receive correlation coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSpec {
    #[serde(default)]
    pub rho_tx: f64,
    #[serde(default)]
    pub rho_rx: f64,
}

impl CorrelationSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, rho) in [("rho_tx", self.rho_tx), ("rho_rx", self.rho_rx)] {
            if !(0.0..1.0).contains(&rho) {
                return Err(Error::Parameter(format!("{name} = {rho} must lie in [0, 1)")));
            }
        }
        Ok(())
    }

    /// Cholesky factors `(L_rx, L_tx)` of the exponential correlation matrices.
    pub fn factors(&self, n_r: usize, n_t: usize) -> Result<(CMatrix, CMatrix)> {
        let l_rx = cholesky_factor(&exp_correlation_matrix(n_r, self.rho_rx)?)?;
        let l_tx = cholesky_factor(&exp_correlation_matrix(n_t, self.rho_tx)?)?;
        Ok((l_rx, l_tx))
    }
}

/// An `n_r × n_t` channel matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    matrix: CMatrix,
}

impl ChannelRealization {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.rows() == 0 || matrix.cols() == 0 {
            return Err(Error::Parameter("channel must have at least one antenna per side".into()));
        }
        if !matrix.is_finite() {
            return Err(Error::Numerical { pivot: 0, reason: "channel has non-finite entries".into() });
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn n_r(&self) -> usize {
        self.matrix.rows()
    }

    pub fn n_t(&self) -> usize {
        self.matrix.cols()
    }
}

fn check_dims(n_r: usize, n_t: usize) -> Result<()> {
    if n_r == 0 || n_t == 0 {
        return Err(Error::Parameter(format!("antenna counts must be positive, got {n_r}x{n_t}")));
    }
    Ok(())
}

/// i.i.d. `CN(0, 1)` entries, drawn row by row.
pub fn sample_rayleigh(n_r: usize, n_t: usize, src: &mut GaussianSource) -> Result<ChannelRealization> {
    check_dims(n_r, n_t)?;
    let data = (0..n_r * n_t).map(|_| src.complex_normal()).collect();
    ChannelRealization::new(CMatrix::from_vec(n_r, n_t, data)?)
}

/// `√(κ/(κ+1)) · 1 + √(1/(κ+1)) · H_NLOS` with an all-ones LOS component.
pub fn sample_rician(
    n_r: usize,
    n_t: usize,
    kappa: f64,
    src: &mut GaussianSource,
) -> Result<ChannelRealization> {
    FadingSpec::Rician { kappa }.validate()?;
    let nlos = sample_rayleigh(n_r, n_t, src)?;
    let los = (kappa / (kappa + 1.0)).sqrt();
    let scatter = (1.0 / (kappa + 1.0)).sqrt();
    let data = nlos.matrix.data().iter().map(|z| C64::new(los, 0.0) + z * scatter).collect();
    ChannelRealization::new(CMatrix::from_vec(n_r, n_t, data)?)
}

/// `R[i][j] = rho^|i−j|`.
pub fn exp_correlation_matrix(n: usize, rho: f64) -> Result<CMatrix> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::Parameter(format!("correlation coefficient {rho} must lie in [0, 1)")));
    }
    if n == 0 {
        return Err(Error::Parameter("correlation matrix dimension must be positive".into()));
    }
    let mut r = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            r[(i, j)] = C64::new(rho.powi((i as i32 - j as i32).abs()), 0.0);
        }
    }
    Ok(r)
}

/// Lower-triangular `L` with positive real diagonal and `L L† = R`.
pub fn cholesky_factor(r: &CMatrix) -> Result<CMatrix> {
    let n = r.rows();
    if r.cols() != n {
        return Err(Error::Parameter(format!("cannot factor a {}x{} matrix", n, r.cols())));
    }
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = r[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::Numerical {
                pivot: j,
                reason: format!("matrix is not positive definite (pivot value {d})"),
            });
        }
        let djj = d.sqrt();
        l[(j, j)] = C64::new(djj, 0.0);
        for i in j + 1..n {
            let mut s = r[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// `H̃ = L_rx · H · L_tx†`.
pub fn apply_correlation(
    h: &ChannelRealization,
    l_rx: &CMatrix,
    l_tx: &CMatrix,
) -> Result<ChannelRealization> {
    let (n_r, n_t) = (h.n_r(), h.n_t());
    if l_rx.rows() != n_r || l_rx.cols() != n_r || l_tx.rows() != n_t || l_tx.cols() != n_t {
        return Err(Error::Parameter(format!(
            "correlation factors {}x{} and {}x{} do not fit a {n_r}x{n_t} channel",
            l_rx.rows(),
            l_rx.cols(),
            l_tx.rows(),
            l_tx.cols()
        )));
    }
    let m = l_rx.matmul(h.matrix())?.matmul(&l_tx.adjoint())?;
    ChannelRealization::new(m)
}

/// Draws one channel for `stream`, applying correlation factors when given.
pub fn draw_channel(
    fading: &FadingSpec,
    factors: Option<&(CMatrix, CMatrix)>,
    n_r: usize,
    n_t: usize,
    stream: RngStream,
) -> Result<ChannelRealization> {
    let mut src = stream.source();
    let h = fading.sample(n_r, n_t, &mut src)?;
    match factors {
        Some((l_rx, l_tx)) => apply_correlation(&h, l_rx, l_tx),
        None => Ok(h),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a = sample_rayleigh(2, 4, &mut RngStream::new(7, 3).source()).unwrap();
        let b = sample_rayleigh(2, 4, &mut RngStream::new(7, 3).source()).unwrap();
        let c = sample_rayleigh(2, 4, &mut RngStream::new(7, 4).source()).unwrap();
        let d = sample_rayleigh(2, 4, &mut RngStream::new(8, 3).source()).unwrap();
        assert_eq!(a, b);
        for (x, y) in a.matrix().data().iter().zip(b.matrix().data()) {
            assert_eq!(x.re.to_bits(), y.re.to_bits());
            assert_eq!(x.im.to_bits(), y.im.to_bits());
        }
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn rayleigh_moments() {
        let mut src = RngStream::new(1, 0).source();
        let n = 100_000;
        let (mut p, mut m) = (0.0, C64::new(0.0, 0.0));
        for _ in 0..n {
            let z = src.complex_normal();
            p += z.norm_sqr();
            m += z;
        }
        let (p, m) = (p / n as f64, m / n as f64);
        assert!((p - 1.0).abs() < 0.02, "power {p}");
        assert!(m.re.abs() < 0.02 && m.im.abs() < 0.02, "mean {m}");
    }

    #[test]
    fn rician_limits_and_power() {
        let mut src = RngStream::new(2, 0).source();
        let h = sample_rician(3, 4, 1e12, &mut src).unwrap();
        for z in h.matrix().data() {
            assert!((z - C64::new(1.0, 0.0)).norm() < 1e-5);
        }
        // kappa = 0 consumes the same draws as Rayleigh.
        let a = sample_rician(2, 3, 0.0, &mut RngStream::new(5, 1).source()).unwrap();
        let b = sample_rayleigh(2, 3, &mut RngStream::new(5, 1).source()).unwrap();
        assert!(a.matrix().max_abs_diff(b.matrix()) < 1e-15);

        let mut src = RngStream::new(3, 0).source();
        let trials = 100_000;
        let mut p = 0.0;
        for _ in 0..trials {
            p += sample_rician(1, 1, 0.25, &mut src).unwrap().matrix()[(0, 0)].norm_sqr();
        }
        assert!((p / trials as f64 - 1.0).abs() < 0.02);
        assert!(sample_rician(1, 1, -0.1, &mut src).is_err());
    }

    #[test]
    fn exp_correlation_examples() {
        assert_eq!(exp_correlation_matrix(3, 0.0).unwrap(), CMatrix::identity(3));
        let r = exp_correlation_matrix(2, 0.2).unwrap();
        assert_eq!(r[(0, 1)].re, 0.2);
        assert_eq!(r[(1, 0)].re, 0.2);
        let r = exp_correlation_matrix(4, 0.2).unwrap();
        assert!((r[(0, 3)].re - 0.008).abs() < 1e-15);
        assert!(exp_correlation_matrix(3, 1.0).is_err());
        assert!(exp_correlation_matrix(3, -0.1).is_err());
    }

    #[test]
    fn cholesky_examples() {
        assert_eq!(cholesky_factor(&CMatrix::identity(3)).unwrap(), CMatrix::identity(3));
        let l = cholesky_factor(&exp_correlation_matrix(2, 0.2).unwrap()).unwrap();
        assert!((l[(0, 0)].re - 1.0).abs() < 1e-15);
        assert!((l[(1, 0)].re - 0.2).abs() < 1e-15);
        assert!((l[(1, 1)].re - 0.96f64.sqrt()).abs() < 1e-15);
        assert_eq!(l[(0, 1)], C64::new(0.0, 0.0));
    }

    #[test]
    fn cholesky_reconstructs_random_spd() {
        let mut src = RngStream::new(9, 0).source();
        for _ in 0..20 {
            let a = sample_rayleigh(6, 6, &mut src).unwrap();
            let mut r = a.matrix().matmul(&a.matrix().adjoint()).unwrap();
            for i in 0..6 {
                r[(i, i)] += C64::new(0.5, 0.0);
            }
            let l = cholesky_factor(&r).unwrap();
            for i in 0..6 {
                assert!(l[(i, i)].re > 0.0 && l[(i, i)].im == 0.0);
                for j in i + 1..6 {
                    assert_eq!(l[(i, j)], C64::new(0.0, 0.0));
                }
            }
            let back = l.matmul(&l.adjoint()).unwrap();
            assert!(back.max_abs_diff(&r) < 1e-12);
        }
    }

    #[test]
    fn cholesky_reports_failing_pivot() {
        let r = CMatrix::from_real_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(cholesky_factor(&r), Err(Error::Numerical { pivot: 1, .. })));
    }

    #[test]
    fn identity_correlation_is_a_no_op() {
        let h = sample_rayleigh(2, 4, &mut RngStream::new(1, 1).source()).unwrap();
        let out = apply_correlation(&h, &CMatrix::identity(2), &CMatrix::identity(4)).unwrap();
        assert!(out.matrix().max_abs_diff(h.matrix()) < 1e-15);
        assert!(apply_correlation(&h, &CMatrix::identity(3), &CMatrix::identity(4)).is_err());
    }

    #[test]
    fn correlation_spec_validation() {
        assert!(CorrelationSpec { rho_tx: 0.2, rho_rx: 0.1 }.validate().is_ok());
        assert!(CorrelationSpec { rho_tx: 1.0, rho_rx: 0.1 }.validate().is_err());
    }
}
