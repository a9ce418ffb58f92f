//! Codebook CSV files: `index,bits,re_1,im_1,...,re_n,im_n`.
//!
//! `bits` is the index as a `B`-bit big-endian binary string. Floats are
//! written in shortest round-trip form, so reloading reproduces every entry
//! bit for bit.

use std::io::{Read, Write};
use std::path::Path;

use crate::codebook::{CpCodebook, MessageSpace};
use crate::error::{Error, Result};
use crate::field::{is_prime, PrimeModulus};

pub fn header(n: usize) -> Vec<String> {
    let mut h = vec!["index".to_string(), "bits".to_string()];
    for j in 1..=n {
        h.push(format!("re_{j}"));
        h.push(format!("im_{j}"));
    }
    h
}

pub fn write_codebook<W: Write>(cb: &CpCodebook, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(cb.n()))?;
    let bits = cb.feedback_bits() as usize;
    for i in 0..cb.len() {
        let mut rec = vec![i.to_string(), format!("{i:0bits$b}")];
        for z in cb.codeword(i).entries() {
            rec.push(format!("{:?}", z.re));
            rec.push(format!("{:?}", z.im));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn export_codebook(p: PrimeModulus, k: usize, n: usize, path: &Path) -> Result<CpCodebook> {
    export_codebook_in(p, k, n, MessageSpace::ConstantFree, path)
}

pub fn export_codebook_in(
    p: PrimeModulus,
    k: usize,
    n: usize,
    space: MessageSpace,
    path: &Path,
) -> Result<CpCodebook> {
    let cb = CpCodebook::with_space(p, k, n, space)?;
    let file = std::fs::File::create(path)?;
    write_codebook(&cb, std::io::BufWriter::new(file))?;
    Ok(cb)
}

/// Writes `p^k` as `(p, k)` when the count is a prime power.
fn prime_power(count: u64) -> Option<(u32, usize)> {
    let p = (2..=count.min(255)).find(|d| count.is_multiple_of(*d))?;
    if !is_prime(p as u32) {
        return None;
    }
    let (mut rest, mut k) = (count, 0usize);
    while rest % p == 0 {
        rest /= p;
        k += 1;
    }
    (rest == 1).then_some((p as u32, k))
}

/// Reads a codebook file, recovers `(p, k, n)` from its shape, rebuilds
/// the codebook and checks every stored field against it exactly. Either
/// message space is accepted.
pub fn load_codebook<R: Read>(input: R) -> Result<CpCodebook> {
    let mut r = csv::Reader::from_reader(input);
    let head = r.headers()?.clone();
    if head.len() < 4 || head.len() % 2 != 0 {
        return Err(Error::Parameter(format!("unexpected codebook header with {} columns", head.len())));
    }
    let n = (head.len() - 2) / 2;
    if head.iter().ne(header(n).iter().map(String::as_str)) {
        return Err(Error::Parameter("codebook header does not match the expected layout".into()));
    }
    let records: Vec<csv::StringRecord> = r.records().collect::<std::result::Result<_, _>>()?;
    let (p, k) = prime_power(records.len() as u64).ok_or_else(|| {
        Error::Parameter(format!("{} rows is not a prime power p^k", records.len()))
    })?;
    let p = PrimeModulus::new(p)?;
    let free = CpCodebook::new(p, k, n)?;
    match verify(&free, &records) {
        Ok(()) => Ok(free),
        Err(first) => {
            let with = CpCodebook::with_space(p, k, n, MessageSpace::WithConstant)?;
            verify(&with, &records).map(|()| with).map_err(|_| first)
        }
    }
}

fn verify(cb: &CpCodebook, records: &[csv::StringRecord]) -> Result<()> {
    let (p, k, n) = (cb.p().get(), cb.k(), cb.n());
    let bits = cb.feedback_bits() as usize;
    for (i, rec) in records.iter().enumerate() {
        let i = i as u64;
        let expect_bits = format!("{i:0bits$b}");
        if rec.get(0) != Some(i.to_string().as_str()) || rec.get(1) != Some(expect_bits.as_str()) {
            return Err(Error::Parameter(format!("row {i} has a wrong index or bit label")));
        }
        for (j, z) in cb.codeword(i).entries().iter().enumerate() {
            let parse = |col: usize| -> Result<f64> {
                rec.get(col)
                    .and_then(|s| s.parse::<f64>().ok())
                    .ok_or_else(|| Error::Parameter(format!("row {i} column {col} is not a number")))
            };
            let (re, im) = (parse(2 + 2 * j)?, parse(3 + 2 * j)?);
            if re.to_bits() != z.re.to_bits() || im.to_bits() != z.im.to_bits() {
                return Err(Error::Parameter(format!(
                    "row {i} entry {} differs from the (p = {p}, k = {k}, n = {n}) codebook",
                    j + 1
                )));
            }
        }
    }
    Ok(())
}

pub fn load_codebook_file(path: &Path) -> Result<CpCodebook> {
    load_codebook(std::fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_flat_row() {
        let cb = CpCodebook::new(PrimeModulus::new(5).unwrap(), 1, 4).unwrap();
        let mut buf = Vec::new();
        write_codebook(&cb, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "index,bits,re_1,im_1,re_2,im_2,re_3,im_3,re_4,im_4");
        assert_eq!(lines.len(), 6);
        assert_eq!(lines[1], "0,000,0.5,0.0,0.5,0.0,0.5,0.0,0.5,0.0");
        assert!(lines[5].starts_with("4,100,"));
        for l in &lines[1..] {
            assert_eq!(l.split(',').count(), 10);
        }
        let back = load_codebook(buf.as_slice()).unwrap();
        assert_eq!((back.p().get(), back.k(), back.n()), (5, 1, 4));
    }

    #[test]
    fn tampered_file_rejected() {
        let cb = CpCodebook::new(PrimeModulus::new(5).unwrap(), 2, 3).unwrap();
        let mut buf = Vec::new();
        write_codebook(&cb, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap().replacen("0.5773502691896258", "0.5773502691896257", 1);
        assert!(load_codebook(text.as_bytes()).is_err());
        assert!(prime_power(24).is_none());
        assert_eq!(prime_power(343), Some((7, 3)));
    }

    #[test]
    fn with_constant_round_trip() {
        let cb = CpCodebook::with_space(PrimeModulus::new(7).unwrap(), 2, 5, MessageSpace::WithConstant).unwrap();
        let mut buf = Vec::new();
        write_codebook(&cb, &mut buf).unwrap();
        let back = load_codebook(buf.as_slice()).unwrap();
        assert_eq!(back.message_space(), MessageSpace::WithConstant);
        assert_eq!(back.exponents(30), cb.exponents(30));
    }
}
