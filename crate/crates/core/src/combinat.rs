//! Exact combinatorial quantities: binomials, power sums and multinomials divided by `p`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::fp::{check_prime, Fp};

/// Exact binomial coefficient.
pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

pub fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * i)
}

fn to_fp(x: &BigInt, p: u32) -> Fp {
    let r = x.mod_floor(&BigInt::from(p)).to_u32().expect("residue fits");
    Fp::from_raw(r, p)
}

/// `binom(n, k) mod p`, computed from the exact integer.
pub fn binom_mod_p(n: u64, k: u64, p: u32) -> Result<Fp> {
    check_prime(p as u64)?;
    if k > n {
        return Err(Error::Domain(format!("binomial({n}, {k}) with k > n")));
    }
    Ok(to_fp(&binomial(n, k), p))
}

/// `S_k = sum_{n=0}^{p-1} n^k mod p`, by literal summation over the integers
/// (with the convention `0^0 = 1`).
pub fn power_sum_mod_p(k: u32, p: u32) -> Result<Fp> {
    check_prime(p as u64)?;
    let sum: BigInt = (0..p).map(|n| num_traits::pow(BigInt::from(n), k as usize)).sum();
    Ok(to_fp(&sum, p))
}

/// `p! / (k_1! ... k_p!) / p` for a composition of `p` into `p` parts, each `< p`.
pub fn multinomial_div_p(p: u32, parts: &[u32]) -> Result<BigInt> {
    check_prime(p as u64)?;
    if parts.len() != p as usize {
        return Err(Error::Domain(format!("expected {p} parts, got {}", parts.len())));
    }
    if parts.iter().map(|&k| k as u64).sum::<u64>() != p as u64 || parts.iter().any(|&k| k >= p) {
        return Err(Error::Domain(format!("{parts:?} is not a composition of {p} with parts < {p}")));
    }
    let denom = parts.iter().fold(BigInt::one(), |acc, &k| acc * factorial(k as u64));
    let (multinomial, rem) = factorial(p as u64).div_rem(&denom);
    debug_assert!(rem.is_zero());
    let (q, r) = multinomial.div_rem(&BigInt::from(p));
    if !r.is_zero() {
        return Err(Error::NotDivisible(format!("multinomial {multinomial} by {p}")));
    }
    Ok(q)
}

/// All compositions of `total` into `parts` nonnegative parts, in lexicographic order.
pub fn compositions(total: u32, parts: usize) -> Vec<Vec<u32>> {
    fn go(total: u32, parts: usize, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if parts == 1 {
            prefix.push(total);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in (0..=total).rev() {
            prefix.push(first);
            go(total - first, parts - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if parts > 0 {
        go(total, parts, &mut Vec::with_capacity(parts), &mut out);
    }
    out
}
