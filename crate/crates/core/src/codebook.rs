//! Character-polynomial and PSK line codebooks and nearest-line quantization.
//!
//! A CP codeword for message `f` is `(χ(f(α_1)), ..., χ(f(α_n))) / √n` with
//! `α_i = i` and `χ(x) = exp(2πi x / p)`. Every entry is a scaled `p`-th root
//! of unity, so a codeword is stored as its exponent vector
//! `e_j = f(α_j) ∈ F_p` and expanded on demand.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{eval_raw, index_digits, message_space_size, FieldElement, PrimeModulus};
use crate::linalg::{inner, CMatrix, LineVector, C64};

/// Slack used when skipping codewords by the triangle inequality. Large
/// against rounding in computed distances, small against real gaps.
const PRUNE_SLACK: f64 = 1e-6;

/// `√(1 − |⟨u, v⟩|²)` for unit vectors, clamped to `[0, 1]`.
pub fn chordal_distance(u: &LineVector, v: &LineVector) -> Result<f64> {
    let ip = u.inner(v)?;
    Ok(distance_from_overlap(ip.norm_sqr()))
}

#[inline]
fn distance_from_overlap(overlap_sqr: f64) -> f64 {
    (1.0 - overlap_sqr).clamp(0.0, 1.0).sqrt()
}

/// Smallest `B` with `2^B >= base^exp`, i.e. `⌈exp · log2 base⌉` without
/// floating-point rounding at exact powers of two.
pub fn ceil_log2_pow(base: u64, exp: u32) -> u32 {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        match acc.checked_mul(base as u128) {
            Some(v) => acc = v,
            None => return (exp as f64 * (base as f64).log2()).ceil() as u32,
        }
    }
    if acc <= 1 {
        0
    } else {
        128 - (acc - 1).leading_zeros()
    }
}

/// Search strategy for [`quantize_line`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QuantizeMode {
    /// Scan every codeword.
    Exhaustive,
    /// Scan only codewords inside a chordal ball around a prequantized
    /// anchor; returns the same index as `Exhaustive`.
    #[default]
    Pruned,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Quantized {
    pub index: u64,
    pub codeword: LineVector,
    pub distance: f64,
}

/// Which `k` polynomial coefficients carry the message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageSpace {
    /// `f_1 X + ... + f_k X^k`, no constant term.
    #[default]
    ConstantFree,
    /// `f_0 + f_1 X + ... + f_{k-1} X^{k-1}`. The constant only rotates
    /// the codeword, so for `k >= 2` this holds the lines of the
    /// constant-free code of dimension `k - 1`, each repeated `p` times, and
    /// for `k = 1` the single all-ones line.
    WithConstant,
}

impl MessageSpace {
    fn lowest_degree(&self) -> u64 {
        match self {
            MessageSpace::ConstantFree => 1,
            MessageSpace::WithConstant => 0,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            MessageSpace::ConstantFree => "constant_free",
            MessageSpace::WithConstant => "with_constant",
        }
    }
}

/// The full CP codebook for `(p, k, n)`.
#[derive(Debug)]
pub struct CpCodebook {
    p: PrimeModulus,
    k: usize,
    n: usize,
    space: MessageSpace,
    alphas: Vec<FieldElement>,
    size: u64,
    /// `size × n` exponents, row-major by message index.
    exponents: Vec<u8>,
    /// `ω^e / √n` for `e ∈ [0, p)`.
    roots: Vec<C64>,
    feedback_bits: u32,
    prune: OnceLock<PruneIndex>,
}

/// Distances from the zero codeword to every codeword, sorted ascending.
/// Because the code is linear in the exponent domain, `d(c_a, c_{a+d})`
/// equals `d(c_0, c_d)`, so one table serves every anchor.
#[derive(Debug)]
struct PruneIndex {
    order: Vec<u32>,
    dist: Vec<f64>,
}

impl CpCodebook {
    /// Builds the codebook with `α_i = i` and `χ(x) = exp(2πi x/p)`.
    pub fn new(p: PrimeModulus, k: usize, n: usize) -> Result<Self> {
        Self::with_space(p, k, n, MessageSpace::ConstantFree)
    }

    pub fn with_space(p: PrimeModulus, k: usize, n: usize, space: MessageSpace) -> Result<Self> {
        let q = p.get();
        if q > 255 {
            return Err(Error::Unsupported(format!("p = {q} exceeds the supported maximum 255")));
        }
        if k < 1 || k > n || n as u64 > q as u64 - 1 {
            return Err(Error::Unsupported(format!(
                "need 1 <= k <= n <= p - 1, got p = {q}, k = {k}, n = {n}"
            )));
        }
        let size = message_space_size(p, k)?;
        let bytes = size.checked_mul(n as u64).filter(|&b| b <= (1u64 << 33)).ok_or_else(|| {
            Error::Unsupported(format!("{q}^{k} codewords of length {n} are too many to store"))
        })?;
        let alphas: Vec<FieldElement> = (1..=n as u64).map(|i| p.element(i)).collect();

        let mut exponents = Vec::with_capacity(bytes as usize);
        let mut coeffs = vec![0u32; k];
        for m in 0..size {
            if m > 0 {
                increment_digits(&mut coeffs, q);
            }
            for a in &alphas {
                let e = match space {
                    MessageSpace::ConstantFree => eval_raw(&coeffs, a.value(), q),
                    MessageSpace::WithConstant => (coeffs[0] + eval_raw(&coeffs[1..], a.value(), q)) % q,
                };
                exponents.push(e as u8);
            }
        }

        let scale = 1.0 / (n as f64).sqrt();
        let roots = (0..q).map(|e| C64::from_polar(scale, 2.0 * PI * e as f64 / q as f64)).collect();

        Ok(Self {
            p,
            k,
            n,
            space,
            alphas,
            size,
            exponents,
            roots,
            feedback_bits: ceil_log2_pow(q as u64, k as u32),
            prune: OnceLock::new(),
        })
    }

    pub fn p(&self) -> PrimeModulus {
        self.p
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn message_space(&self) -> MessageSpace {
        self.space
    }

    pub fn alphas(&self) -> &[FieldElement] {
        &self.alphas
    }

    /// Number of codewords, `p^k`.
    pub fn len(&self) -> u64 {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    pub fn feedback_bits(&self) -> u32 {
        self.feedback_bits
    }

    /// Character exponents `f_m(α_1), ..., f_m(α_n)` of codeword `m`.
    pub fn exponents(&self, index: u64) -> &[u8] {
        let i = index as usize * self.n;
        &self.exponents[i..i + self.n]
    }

    pub fn codeword(&self, index: u64) -> LineVector {
        LineVector::from_unit_unchecked(
            self.exponents(index).iter().map(|&e| self.roots[e as usize]).collect(),
        )
    }

    pub fn codewords(&self) -> impl Iterator<Item = LineVector> + '_ {
        (0..self.size).map(move |i| self.codeword(i))
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::Parameter(format!(
                "vector length {len} does not match codebook length {}",
                self.n
            )));
        }
        Ok(())
    }

    /// `table[j·p + e] = conj(y_j) · ω^e / √n`, so that
    /// `⟨y, c_m⟩ = Σ_j table[j·p + e_j(m)]`.
    fn overlap_table(&self, y: &[C64]) -> Vec<C64> {
        let q = self.p.get() as usize;
        let mut table = Vec::with_capacity(self.n * q);
        for yj in y {
            let c = yj.conj();
            table.extend(self.roots.iter().map(|r| c * r));
        }
        table
    }

    /// Same as [`Self::overlap_table`] but for `Σ_j m_j c_j` with `m` a
    /// matrix row (no conjugation).
    fn row_table(&self, row: &[C64]) -> Vec<C64> {
        let q = self.p.get() as usize;
        let mut table = Vec::with_capacity(self.n * q);
        for &m in row {
            table.extend(self.roots.iter().map(|r| m * r));
        }
        table
    }

    #[inline]
    fn table_sum(&self, table: &[C64], exps: &[u8]) -> C64 {
        let q = self.p.get() as usize;
        let mut acc = C64::new(0.0, 0.0);
        for (j, &e) in exps.iter().enumerate() {
            acc += table[j * q + e as usize];
        }
        acc
    }

    fn prune_index(&self) -> &PruneIndex {
        self.prune.get_or_init(|| {
            let mut dist: Vec<f64> = (0..self.size)
                .map(|m| {
                    let s: C64 = self.exponents(m).iter().map(|&e| self.roots[e as usize]).sum();
                    // roots carry 1/√n, so |Σ|/√n is the overlap with c_0.
                    distance_from_overlap(s.norm_sqr() / self.n as f64)
                })
                .collect();
            let mut order: Vec<u32> = (0..self.size as u32).collect();
            order.sort_by(|&a, &b| dist[a as usize].total_cmp(&dist[b as usize]).then(a.cmp(&b)));
            dist = order.iter().map(|&i| dist[i as usize]).collect();
            PruneIndex { order, dist }
        })
    }

    /// Interpolates the message that takes the prescribed exponents on the
    /// given `k` coordinates. The coordinates' evaluation points are
    /// distinct and nonzero, so the system is always solvable.
    fn interpolate(&self, coords: &[usize], targets: &[u32]) -> u64 {
        let q = self.p.get() as u64;
        let k = self.k;
        let d0 = self.space.lowest_degree();
        // Augmented matrix rows: [α^d0 .. α^(d0+k-1) | t].
        let mut a: Vec<Vec<u64>> = coords
            .iter()
            .zip(targets)
            .map(|(&j, &t)| {
                let alpha = self.alphas[j];
                let mut row: Vec<u64> =
                    (d0..d0 + k as u64).map(|d| alpha.pow(d).value() as u64).collect();
                row.push(t as u64 % q);
                row
            })
            .collect();
        for col in 0..k {
            let pivot = (col..k).find(|&r| a[r][col] != 0).expect("Vandermonde system is regular");
            a.swap(col, pivot);
            let inv = self.p.element(a[col][col]).inv().expect("nonzero pivot").value() as u64;
            for v in a[col].iter_mut() {
                *v = *v * inv % q;
            }
            for r in 0..k {
                if r != col && a[r][col] != 0 {
                    let factor = a[r][col];
                    for c in 0..=k {
                        a[r][c] = (a[r][c] + q * q - factor * a[col][c]) % q;
                    }
                }
            }
        }
        a.iter().fold(0u64, |acc, row| acc * q + row[k])
    }

    /// Nearest codeword to `y` in chordal distance; ties go to the smallest index.
    pub fn quantize(&self, y: &LineVector, mode: QuantizeMode) -> Result<Quantized> {
        self.check_len(y.len())?;
        let table = self.overlap_table(y.entries());
        let (index, overlap) = match mode {
            QuantizeMode::Exhaustive => self.scan_all(&table),
            QuantizeMode::Pruned => self.scan_ball(y, &table),
        };
        Ok(Quantized { index, codeword: self.codeword(index), distance: distance_from_overlap(overlap) })
    }

    fn scan_all(&self, table: &[C64]) -> (u64, f64) {
        let mut best = (0u64, f64::NEG_INFINITY);
        for (m, exps) in self.exponents.chunks_exact(self.n).enumerate() {
            let s = self.table_sum(table, exps).norm_sqr();
            if s > best.1 {
                best = (m as u64, s);
            }
        }
        best
    }

    fn scan_ball(&self, y: &LineVector, table: &[C64]) -> (u64, f64) {
        let q = self.p.get();
        let pre = prequantized_exponents(y.entries(), self.p);

        // Anchor candidates: interpolate through the k strongest coordinates
        // of the prequantized point, for every global root-of-unity shift.
        let mut coords: Vec<usize> = (0..self.n).collect();
        coords.sort_by(|&a, &b| y.entries()[b].norm_sqr().total_cmp(&y.entries()[a].norm_sqr()).then(a.cmp(&b)));
        coords.truncate(self.k);
        let mut best: Option<(u64, f64)> = None;
        for shift in 0..q {
            let targets: Vec<u32> = coords.iter().map(|&j| (pre[j] + shift) % q).collect();
            let m = self.interpolate(&coords, &targets);
            let s = self.table_sum(table, self.exponents(m)).norm_sqr();
            best = Some(better((m, s), best));
        }
        let (anchor, anchor_overlap) = best.expect("p >= 3 anchors");
        let anchor_dist = distance_from_overlap(anchor_overlap);
        let mut best = (anchor, anchor_overlap);

        // Shift the table by the anchor's exponents so that codeword a ⊕ d
        // is scored from d's exponents with the identical summands.
        let qs = q as usize;
        let a_exps = self.exponents(anchor);
        let mut shifted = vec![C64::new(0.0, 0.0); table.len()];
        for j in 0..self.n {
            for e in 0..qs {
                shifted[j * qs + e] = table[j * qs + (e + a_exps[j] as usize) % qs];
            }
        }
        let a_digits = index_digits(q, self.k, anchor);

        let prune = self.prune_index();
        for (&d, &dd) in prune.order.iter().zip(&prune.dist) {
            if dd > anchor_dist + distance_from_overlap(best.1) + PRUNE_SLACK {
                break;
            }
            let s = self.table_sum(&shifted, self.exponents(d as u64)).norm_sqr();
            if s >= best.1 {
                let m = add_indices(&a_digits, d as u64, q);
                best = better((m, s), Some(best));
            }
        }
        best
    }

    /// Codeword maximizing `‖G c‖² / ‖W c‖²` over the whole codebook, where
    /// `W = I` when `weight` is `None`. Returns `(index, ratio)`.
    pub fn argmax_gain(&self, g: &CMatrix, weight: Option<&CMatrix>) -> Result<(u64, f64)> {
        self.check_len(g.cols())?;
        if let Some(w) = weight {
            self.check_len(w.cols())?;
        }
        let g_tables: Vec<Vec<C64>> = (0..g.rows()).map(|r| self.row_table(g.row(r))).collect();
        let w_tables: Option<Vec<Vec<C64>>> =
            weight.map(|w| (0..w.rows()).map(|r| self.row_table(w.row(r))).collect());
        let mut best = (0u64, f64::NEG_INFINITY);
        for (m, exps) in self.exponents.chunks_exact(self.n).enumerate() {
            let num: f64 = g_tables.iter().map(|t| self.table_sum(t, exps).norm_sqr()).sum();
            let val = match &w_tables {
                Some(ws) => {
                    let den: f64 = ws.iter().map(|t| self.table_sum(t, exps).norm_sqr()).sum();
                    num / den
                }
                None => num,
            };
            if val > best.1 {
                best = (m as u64, val);
            }
        }
        Ok(best)
    }
}

/// Prefers the larger overlap, then the smaller index.
#[inline]
fn better(cand: (u64, f64), best: Option<(u64, f64)>) -> (u64, f64) {
    match best {
        None => cand,
        Some(b) if cand.1 > b.1 || (cand.1 == b.1 && cand.0 < b.0) => cand,
        Some(b) => b,
    }
}

fn increment_digits(digits: &mut [u32], p: u32) {
    for d in digits.iter_mut().rev() {
        *d += 1;
        if *d < p {
            return;
        }
        *d = 0;
    }
}

fn add_indices(a_digits: &[u32], d: u64, p: u32) -> u64 {
    let d_digits = index_digits(p, a_digits.len(), d);
    a_digits
        .iter()
        .zip(&d_digits)
        .fold(0u64, |acc, (&x, &y)| acc * p as u64 + ((x + y) % p) as u64)
}

pub fn build_cp_codebook(p: PrimeModulus, k: usize, n: usize) -> Result<CpCodebook> {
    CpCodebook::new(p, k, n)
}

pub fn quantize_line(y: &LineVector, cb: &CpCodebook, mode: QuantizeMode) -> Result<Quantized> {
    cb.quantize(y, mode)
}

/// `⌊p θ_j / 2π + 1/2⌋ mod p` with `θ_j = arg y_j ∈ [0, 2π)`; zero entries map to 0.
pub fn prequantized_exponents(y: &[C64], p: PrimeModulus) -> Vec<u32> {
    let q = p.get();
    y.iter()
        .map(|z| {
            if z.re == 0.0 && z.im == 0.0 {
                return 0;
            }
            let theta = z.im.atan2(z.re).rem_euclid(2.0 * PI);
            ((q as f64 * theta / (2.0 * PI) + 0.5).floor() as u64 % q as u64) as u32
        })
        .collect()
}

/// Entry-wise nearest `p`-th root of unity, scaled by `1/√n`.
pub fn prequantize_phases(y: &LineVector, p: PrimeModulus) -> LineVector {
    let scale = 1.0 / (y.len() as f64).sqrt();
    let q = p.get() as f64;
    LineVector::from_unit_unchecked(
        prequantized_exponents(y.entries(), p)
            .into_iter()
            .map(|e| C64::from_polar(scale, 2.0 * PI * e as f64 / q))
            .collect(),
    )
}

/// Equal-gain `M`-PSK codebook with the first entry pinned to phase 0.
/// The `M^(n−1)` codewords are implicit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PskCodebook {
    n: usize,
    order: u32,
    feedback_bits: u32,
}

impl PskCodebook {
    pub fn new(n: usize, order: u32) -> Result<Self> {
        if n < 2 {
            return Err(Error::Parameter(format!("PSK codebook length {n} must be at least 2")));
        }
        if order < 2 {
            return Err(Error::Parameter(format!("PSK order {order} must be at least 2")));
        }
        Ok(Self { n, order, feedback_bits: ceil_log2_pow(order as u64, n as u32 - 1) })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn feedback_bits(&self) -> u32 {
        self.feedback_bits
    }

    /// Implicit codeword from its `n − 1` phase indices (entries 2..n).
    pub fn codeword(&self, phases: &[u32]) -> Result<LineVector> {
        if phases.len() != self.n - 1 {
            return Err(Error::Parameter(format!(
                "expected {} phase indices, got {}",
                self.n - 1,
                phases.len()
            )));
        }
        let scale = 1.0 / (self.n as f64).sqrt();
        let step = 2.0 * PI / self.order as f64;
        let entries = std::iter::once(C64::new(scale, 0.0))
            .chain(phases.iter().map(|&m| C64::from_polar(scale, step * (m % self.order) as f64)))
            .collect();
        Ok(LineVector::from_unit_unchecked(entries))
    }

    fn check_len(&self, y: &LineVector) -> Result<()> {
        if y.len() != self.n {
            return Err(Error::Parameter(format!(
                "vector length {} does not match PSK codebook length {}",
                y.len(),
                self.n
            )));
        }
        Ok(())
    }

    fn round_phases(&self, e: &[C64], rot: f64) -> Vec<u32> {
        let m = self.order as f64;
        e.iter()
            .map(|z| {
                if z.norm_sqr() == 0.0 {
                    return 0;
                }
                let theta = (z.im.atan2(z.re) - rot).rem_euclid(2.0 * PI);
                ((theta * m / (2.0 * PI)).round() as u64 % self.order as u64) as u32
            })
            .collect()
    }

    /// Derotates by the first entry's phase, then rounds each remaining
    /// entry's phase to the nearest of the `M` grid phases. This is optimal
    /// for that one rotation only; see [`Self::quantize_exact`].
    pub fn quantize(&self, y: &LineVector) -> Result<LineVector> {
        self.check_len(y)?;
        let e = y.entries();
        let rot = if e[0].norm_sqr() > 0.0 { e[0].im.atan2(e[0].re) } else { 0.0 };
        let phases = self.round_phases(&e[1..], rot);
        self.codeword(&phases)
    }

    /// Nearest implicit codeword in chordal distance.
    ///
    /// For a fixed common rotation the best phases are per-entry roundings,
    /// and the rounding pattern only changes at `n` breakpoints inside one
    /// grid step, so one rotation per interval covers every candidate.
    pub fn quantize_exact(&self, y: &LineVector) -> Result<LineVector> {
        self.check_len(y)?;
        let e = y.entries();
        let step = 2.0 * PI / self.order as f64;
        let mut breaks: Vec<f64> = e
            .iter()
            .filter(|z| z.norm_sqr() > 0.0)
            .map(|z| (z.im.atan2(z.re) - step / 2.0).rem_euclid(step))
            .collect();
        breaks.sort_by(f64::total_cmp);
        if breaks.is_empty() {
            breaks.push(0.0);
        }
        let mut best: Option<(f64, Vec<u32>)> = None;
        for (i, &b) in breaks.iter().enumerate() {
            let next = breaks.get(i + 1).copied().unwrap_or(breaks[0] + step);
            let m = self.round_phases(e, (b + next) / 2.0);
            let score = e
                .iter()
                .zip(&m)
                .map(|(z, &k)| z * C64::from_polar(1.0, -step * k as f64))
                .sum::<C64>()
                .norm_sqr();
            if best.as_ref().is_none_or(|(s, _)| score > *s) {
                best = Some((score, m));
            }
        }
        let m = best.map(|(_, m)| m).unwrap_or_default();
        let phases: Vec<u32> = m[1..].iter().map(|&k| (k + self.order - m[0]) % self.order).collect();
        self.codeword(&phases)
    }
}

pub fn build_psk_codebook(n: usize, order: u32) -> Result<PskCodebook> {
    PskCodebook::new(n, order)
}

pub fn psk_quantize(y: &LineVector, order: u32) -> Result<LineVector> {
    PskCodebook::new(y.len(), order)?.quantize(y)
}

/// Overlap `|⟨y, c⟩|²` between raw slices; both assumed unit norm.
pub fn overlap_sqr(y: &[C64], c: &[C64]) -> f64 {
    inner(y, c).norm_sqr()
}
