//! Prime-field arithmetic and the message space of character-polynomial codes.
//!
//! Messages are polynomials `f(X) = f_1 X + ... + f_k X^k` over `F_p` with no
//! constant term. The message index is the base-`p` number whose digits are
//! `(f_1, ..., f_k)` with `f_1` most significant, so index 0 is the zero
//! polynomial and the order is lexicographic in the coefficient tuple.

use std::fmt;

use crate::error::{Error, Result};

/// A prime modulus `p >= 3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PrimeModulus(u32);

impl PrimeModulus {
    pub fn new(p: u32) -> Result<Self> {
        if p < 3 {
            return Err(Error::Unsupported(format!("modulus {p} must be at least 3")));
        }
        if !is_prime(p) {
            return Err(Error::Unsupported(format!(
                "modulus {p} is not prime; only prime fields are supported"
            )));
        }
        Ok(Self(p))
    }

    #[inline]
    pub fn get(self) -> u32 {
        self.0
    }

    pub fn element(self, value: u64) -> FieldElement {
        FieldElement {
            value: (value % self.0 as u64) as u32,
            modulus: self,
        }
    }

    pub fn zero(self) -> FieldElement {
        self.element(0)
    }

    pub fn one(self) -> FieldElement {
        self.element(1)
    }

    /// All `p` residues in increasing order.
    pub fn elements(self) -> impl Iterator<Item = FieldElement> {
        (0..self.0).map(move |v| FieldElement { value: v, modulus: self })
    }
}

impl fmt::Display for PrimeModulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Deterministic trial division; moduli here are tiny.
pub fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3u32;
    while (d as u64) * (d as u64) <= n as u64 {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// A canonical residue in `[0, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElement {
    value: u32,
    modulus: PrimeModulus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldOp {
    Add,
    Sub,
    Mul,
    /// `b.value()` is read as a nonnegative integer exponent.
    Pow,
}

impl FieldElement {
    #[inline]
    pub fn value(self) -> u32 {
        self.value
    }

    #[inline]
    pub fn modulus(self) -> PrimeModulus {
        self.modulus
    }

    fn check(self, other: Self) -> Result<u64> {
        if self.modulus != other.modulus {
            return Err(Error::Parameter(format!(
                "modulus mismatch: {} vs {}",
                self.modulus, other.modulus
            )));
        }
        Ok(self.modulus.0 as u64)
    }

    pub fn add(self, other: Self) -> Result<Self> {
        let p = self.check(other)?;
        Ok(self.modulus.element((self.value as u64 + other.value as u64) % p))
    }

    pub fn sub(self, other: Self) -> Result<Self> {
        let p = self.check(other)?;
        Ok(self.modulus.element((self.value as u64 + p - other.value as u64) % p))
    }

    pub fn mul(self, other: Self) -> Result<Self> {
        let p = self.check(other)?;
        Ok(self.modulus.element(self.value as u64 * other.value as u64 % p))
    }

    pub fn neg(self) -> Self {
        let p = self.modulus.0 as u64;
        self.modulus.element((p - self.value as u64) % p)
    }

    /// `self^exp` by square-and-multiply. `0^0 = 1`.
    pub fn pow(self, mut exp: u64) -> Self {
        let p = self.modulus.0 as u64;
        let mut base = self.value as u64;
        let mut acc = 1 % p;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc * base % p;
            }
            base = base * base % p;
            exp >>= 1;
        }
        self.modulus.element(acc)
    }

    /// Multiplicative inverse via Fermat; `None` for zero.
    pub fn inv(self) -> Option<Self> {
        if self.value == 0 {
            None
        } else {
            Some(self.pow(self.modulus.0 as u64 - 2))
        }
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod {})", self.value, self.modulus)
    }
}

pub fn field_arith(a: FieldElement, b: FieldElement, op: FieldOp) -> Result<FieldElement> {
    match op {
        FieldOp::Add => a.add(b),
        FieldOp::Sub => a.sub(b),
        FieldOp::Mul => a.mul(b),
        FieldOp::Pow => {
            a.check(b)?;
            Ok(a.pow(b.value as u64))
        }
    }
}

/// A polynomial `f_1 X + ... + f_k X^k` over `F_p` with zero constant term.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MessagePolynomial {
    modulus: PrimeModulus,
    /// `coefficients[j]` is the coefficient of `X^(j+1)`.
    coefficients: Vec<u32>,
}

impl MessagePolynomial {
    /// Builds a message from the coefficients of `X^1..X^k`.
    ///
    /// Coefficients at degrees divisible by `p` must be zero; for `k < p`
    /// there are none.
    pub fn new(modulus: PrimeModulus, coefficients: &[FieldElement]) -> Result<Self> {
        let p = modulus.get();
        let mut coeffs = Vec::with_capacity(coefficients.len());
        for (j, c) in coefficients.iter().enumerate() {
            if c.modulus() != modulus {
                return Err(Error::Parameter(format!(
                    "coefficient {} has modulus {}, expected {}",
                    j + 1,
                    c.modulus(),
                    modulus
                )));
            }
            if (j as u32 + 1).is_multiple_of(p) && c.value() != 0 {
                return Err(Error::Parameter(format!(
                    "coefficient of X^{} must vanish in the character-polynomial message space",
                    j + 1
                )));
            }
            coeffs.push(c.value());
        }
        Ok(Self { modulus, coefficients: coeffs })
    }

    /// Inverse of [`MessagePolynomial::index`].
    pub fn from_index(modulus: PrimeModulus, k: usize, index: u64) -> Result<Self> {
        let size = message_space_size(modulus, k)?;
        if index >= size {
            return Err(Error::Parameter(format!(
                "message index {index} out of range for {size} messages"
            )));
        }
        Ok(Self {
            modulus,
            coefficients: index_digits(modulus.get(), k, index),
        })
    }

    pub fn modulus(&self) -> PrimeModulus {
        self.modulus
    }

    /// Degree bound `k` (length of the coefficient list).
    pub fn k(&self) -> usize {
        self.coefficients.len()
    }

    pub fn coefficients(&self) -> impl Iterator<Item = FieldElement> + '_ {
        self.coefficients.iter().map(|&c| self.modulus.element(c as u64))
    }

    /// Coefficient of `X^degree`; zero for degree 0 or beyond `k`.
    pub fn coefficient(&self, degree: usize) -> FieldElement {
        let v = if degree == 0 {
            0
        } else {
            self.coefficients.get(degree - 1).copied().unwrap_or(0)
        };
        self.modulus.element(v as u64)
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.iter().all(|&c| c == 0)
    }

    /// Base-`p` positional index with `f_1` as the most significant digit.
    pub fn index(&self) -> u64 {
        let p = self.modulus.get() as u64;
        self.coefficients.iter().fold(0u64, |acc, &c| acc * p + c as u64)
    }

    /// Horner evaluation of `f(x) = x (f_1 + x (f_2 + ... + x f_k))`.
    pub fn eval(&self, x: FieldElement) -> Result<FieldElement> {
        if x.modulus() != self.modulus {
            return Err(Error::Parameter(format!(
                "evaluation point modulus {} does not match polynomial modulus {}",
                x.modulus(),
                self.modulus
            )));
        }
        Ok(self.modulus.element(eval_raw(&self.coefficients, x.value(), self.modulus.get()) as u64))
    }
}

pub fn poly_eval(f: &MessagePolynomial, x: FieldElement) -> Result<FieldElement> {
    f.eval(x)
}

/// Horner evaluation on raw residues.
#[inline]
pub(crate) fn eval_raw(coefficients: &[u32], x: u32, p: u32) -> u32 {
    let (x, p) = (x as u64, p as u64);
    let mut acc = 0u64;
    for &c in coefficients.iter().rev() {
        acc = (acc + c as u64) * x % p;
    }
    acc as u32
}

pub(crate) fn index_digits(p: u32, k: usize, mut index: u64) -> Vec<u32> {
    let mut digits = vec![0u32; k];
    for slot in digits.iter_mut().rev() {
        *slot = (index % p as u64) as u32;
        index /= p as u64;
    }
    digits
}

/// Number of messages `p^k`, for `1 <= k < p`.
pub fn message_space_size(modulus: PrimeModulus, k: usize) -> Result<u64> {
    let p = modulus.get();
    if k == 0 {
        return Err(Error::Unsupported("message dimension k must be at least 1".into()));
    }
    if k as u64 >= p as u64 {
        return Err(Error::Unsupported(format!(
            "message dimension k = {k} must be below p = {p}"
        )));
    }
    (p as u64)
        .checked_pow(k as u32)
        .ok_or_else(|| Error::Unsupported(format!("{p}^{k} messages overflow u64")))
}

/// All `p^k` messages in index order.
pub fn enumerate_cp_messages(
    modulus: PrimeModulus,
    k: usize,
) -> Result<impl Iterator<Item = MessagePolynomial>> {
    let size = message_space_size(modulus, k)?;
    Ok((0..size).map(move |i| MessagePolynomial {
        modulus,
        coefficients: index_digits(modulus.get(), k, i),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use std::collections::HashSet;

    fn p(v: u32) -> PrimeModulus {
        PrimeModulus::new(v).unwrap()
    }

    #[test]
    fn arith_examples() {
        let f5 = p(5);
        assert_eq!(field_arith(f5.element(3), f5.element(4), FieldOp::Add).unwrap().value(), 2);
        assert_eq!(field_arith(f5.element(3), f5.element(4), FieldOp::Mul).unwrap().value(), 2);
        let f7 = p(7);
        assert_eq!(field_arith(f7.element(3), f7.element(6), FieldOp::Pow).unwrap().value(), 1);
        assert_eq!(field_arith(f5.element(1), f5.element(3), FieldOp::Sub).unwrap().value(), 3);
    }

    #[test]
    fn modulus_mismatch_is_rejected() {
        let a = p(5).element(1);
        let b = p(7).element(1);
        assert!(matches!(a.add(b), Err(Error::Parameter(_))));
        assert!(matches!(field_arith(a, b, FieldOp::Pow), Err(Error::Parameter(_))));
    }

    #[test]
    fn non_primes_and_small_moduli_rejected() {
        for bad in [0, 1, 2, 4, 9, 15, 25, 121] {
            assert!(PrimeModulus::new(bad).is_err(), "{bad}");
        }
        for good in [3, 5, 7, 11, 13, 101] {
            assert!(PrimeModulus::new(good).is_ok(), "{good}");
        }
    }

    #[test]
    fn field_axioms_exhaustive() {
        for q in [3, 5, 7] {
            let f = p(q);
            let els: Vec<_> = f.elements().collect();
            for &a in &els {
                assert_eq!(a.add(f.zero()).unwrap(), a);
                assert_eq!(a.mul(f.one()).unwrap(), a);
                assert_eq!(a.add(a.neg()).unwrap(), f.zero());
                if a.value() != 0 {
                    assert_eq!(a.mul(a.inv().unwrap()).unwrap(), f.one());
                }
                for &b in &els {
                    assert_eq!(a.add(b).unwrap(), b.add(a).unwrap());
                    assert_eq!(a.mul(b).unwrap(), b.mul(a).unwrap());
                    assert_eq!(a.sub(b).unwrap().add(b).unwrap(), a);
                    for &c in &els {
                        assert_eq!(
                            a.add(b).unwrap().add(c).unwrap(),
                            a.add(b.add(c).unwrap()).unwrap()
                        );
                        assert_eq!(
                            a.mul(b).unwrap().mul(c).unwrap(),
                            a.mul(b.mul(c).unwrap()).unwrap()
                        );
                        assert_eq!(
                            a.mul(b.add(c).unwrap()).unwrap(),
                            a.mul(b).unwrap().add(a.mul(c).unwrap()).unwrap()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn poly_eval_examples() {
        let f5 = p(5);
        let sq = MessagePolynomial::new(f5, &[f5.zero(), f5.one()]).unwrap();
        assert_eq!(poly_eval(&sq, f5.element(2)).unwrap().value(), 4);
        let zero = MessagePolynomial::from_index(f5, 3, 0).unwrap();
        for x in f5.elements() {
            assert_eq!(zero.eval(x).unwrap().value(), 0);
        }
        let f7 = p(7);
        let g = MessagePolynomial::new(f7, &[f7.element(2), f7.element(3)]).unwrap();
        assert_eq!(g.eval(f7.element(3)).unwrap().value(), 5);
        assert!(g.eval(f5.element(1)).is_err());
    }

    #[test]
    fn poly_eval_matches_power_sum() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for q in [5u32, 7, 11, 13] {
            let f = p(q);
            for _ in 0..1000 {
                let k = rng.random_range(1..q as usize);
                let idx = rng.random_range(0..(q as u64).pow(k as u32));
                let poly = MessagePolynomial::from_index(f, k, idx).unwrap();
                let x = f.element(rng.random_range(0..q) as u64);
                let naive = (1..=k).fold(f.zero(), |acc, j| {
                    acc.add(poly.coefficient(j).mul(x.pow(j as u64)).unwrap()).unwrap()
                });
                assert_eq!(poly.eval(x).unwrap(), naive);
            }
        }
    }

    #[test]
    fn enumeration_sizes_and_order() {
        for (q, k, n) in [(5u32, 1usize, 5usize), (5, 2, 25), (7, 3, 343)] {
            let msgs: Vec<_> = enumerate_cp_messages(p(q), k).unwrap().collect();
            assert_eq!(msgs.len(), n);
            assert!(msgs[0].is_zero());
            let distinct: HashSet<_> = msgs.iter().map(|m| m.coefficients.clone()).collect();
            assert_eq!(distinct.len(), n);
            for (i, m) in msgs.iter().enumerate() {
                assert_eq!(m.index(), i as u64);
                assert_eq!(m.coefficient(0).value(), 0);
                assert_eq!(m.k(), k);
            }
        }
        // f_1 is the most significant digit.
        let m = MessagePolynomial::from_index(p(5), 2, 5).unwrap();
        assert_eq!(m.coefficient(1).value(), 1);
        assert_eq!(m.coefficient(2).value(), 0);
    }

    #[test]
    fn enumeration_rejects_k_at_or_above_p() {
        assert!(matches!(enumerate_cp_messages(p(5), 5), Err(Error::Unsupported(_))));
        assert!(matches!(enumerate_cp_messages(p(5), 0), Err(Error::Unsupported(_))));
    }

    #[test]
    fn constant_term_positions_enforced() {
        let f3 = p(3);
        let coeffs = [f3.zero(), f3.zero(), f3.one()];
        assert!(MessagePolynomial::new(f3, &coeffs).is_err());
        let ok = [f3.one(), f3.one(), f3.zero()];
        assert!(MessagePolynomial::new(f3, &ok).is_ok());
    }
}
