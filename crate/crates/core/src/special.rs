//! Bernoulli numbers as exact rationals.

use alloc::vec::Vec;

use num_rational::Ratio;

use crate::{Error, Result};

/// Largest index served by [`bernoulli`].
pub const MAX_BERNOULLI_INDEX: usize = 24;

/// `B_m` as an exact fraction (with the `B₁ = +1/2` convention of the
/// Akiyama–Tanigawa algorithm; only even indices matter downstream).
pub fn bernoulli(m: usize) -> Result<Ratio<i128>> {
    if m > MAX_BERNOULLI_INDEX {
        return Err(Error::Domain("Bernoulli index too large for exact i128 arithmetic"));
    }
    let mut a: Vec<Ratio<i128>> = Vec::with_capacity(m + 1);
    for k in 0..=m {
        a.push(Ratio::new(1, k as i128 + 1));
        for j in (1..=k).rev() {
            a[j - 1] = Ratio::from_integer(j as i128) * (a[j - 1] - a[j]);
        }
    }
    Ok(a[0])
}

/// `B_m` rounded to the nearest double.
pub fn bernoulli_f64(m: usize) -> Result<f64> {
    let b = bernoulli(m)?;
    Ok(*b.numer() as f64 / *b.denom() as f64)
}
