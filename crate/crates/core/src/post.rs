//! Classical post-processing for the algorithm drivers: binary fractions,
//! continued fractions, GF(2) elimination, Grover iteration counts and
//! number theory.

use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use num_rational::Ratio;

use crate::error::{ErrorCode, RuntimeError};

pub type Rational = Ratio<i64>;

/// Bits, most significant first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString(pub Vec<bool>);

impl BitString {
    pub fn from_value(v: u64, width: usize) -> BitString {
        BitString((0..width).rev().map(|k| (v >> k) & 1 == 1).collect())
    }

    pub fn width(&self) -> usize {
        self.0.len()
    }

    pub fn value(&self) -> u64 {
        self.0.iter().fold(0, |acc, b| (acc << 1) | u64::from(*b))
    }

    /// GF(2) inner product.
    pub fn dot(&self, other: &BitString) -> bool {
        self.0.iter().zip(&other.0).filter(|(a, b)| **a && **b).count() % 2 == 1
    }
}

impl FromStr for BitString {
    type Err = RuntimeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(RuntimeError::new(ErrorCode::WidthMismatch, format!("`{s}` is not a bit string"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        if bits.is_empty() {
            return Err(RuntimeError::new(ErrorCode::WidthMismatch, "empty bit string"));
        }
        Ok(BitString(bits))
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().try_for_each(|b| f.write_str(if *b { "1" } else { "0" }))
    }
}

/// `Σ b_k 2^-(k+1)`, reduced.
pub fn as_bin_frac(b: &BitString) -> Rational {
    Rational::new(b.value() as i64, 1i64 << b.width())
}

/// Convergents of the continued-fraction expansion of `x`, in order.
pub fn cfrac_convergents(x: Rational) -> Vec<Rational> {
    let (mut n, mut d) = (*x.numer(), *x.denom());
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1i64, 0i64);
    let mut out = Vec::new();
    loop {
        let (a, r) = n.div_mod_floor(&d);
        let h = a * h1 + h0;
        let k = a * k1 + k0;
        out.push(Rational::new(h, k));
        (h0, h1, k0, k1) = (h1, h, k1, k);
        if r == 0 {
            return out;
        }
        (n, d) = (d, r);
    }
}

/// Last convergent whose denominator is below `n`.
pub fn last_convergent_with_denominator_below(cs: &[Rational], n: i64) -> Result<Rational, RuntimeError> {
    cs.iter()
        .rev()
        .find(|c| *c.denom() < n)
        .copied()
        .ok_or_else(|| RuntimeError::new(ErrorCode::NoConvergent, format!("no convergent has a denominator below {n}")))
}

/// The unique nonzero vector orthogonal to every row over GF(2), or
/// `NeedMoreRows` when the rows do not have rank `N - 1`.
pub fn gf2_solve_nullspace(rows: &[BitString]) -> Result<BitString, RuntimeError> {
    let n = rows.first().map_or(0, BitString::width);
    if n == 0 || rows.iter().any(|r| r.width() != n) {
        return Err(RuntimeError::new(ErrorCode::WidthMismatch, "rows must share a nonzero width"));
    }
    let mut m: Vec<Vec<bool>> = rows.iter().map(|r| r.0.clone()).collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..n {
        let Some(p) = (r..m.len()).find(|&i| m[i][c]) else { continue };
        m.swap(r, p);
        for i in 0..m.len() {
            if i != r && m[i][c] {
                let pivot = m[r].clone();
                m[i].iter_mut().zip(pivot).for_each(|(x, y)| *x ^= y);
            }
        }
        pivots.push(c);
        r += 1;
    }
    if pivots.len() + 1 != n {
        return Err(RuntimeError::new(
            ErrorCode::NeedMoreRows,
            format!("rank {} of {} rows, need {}", pivots.len(), rows.len(), n - 1),
        ));
    }
    let free = (0..n).find(|c| !pivots.contains(c)).unwrap();
    let mut s = vec![false; n];
    s[free] = true;
    for (row, &c) in pivots.iter().enumerate() {
        s[c] = m[row][free];
    }
    Ok(BitString(s))
}

fn grover_angle(n_qubits: u32, n_answers: u64) -> f64 {
    (n_answers as f64 / (1u64 << n_qubits) as f64).sqrt().asin()
}

fn check_grover(n_qubits: u32, n_answers: u64) -> Result<(), RuntimeError> {
    if n_qubits == 0 || n_qubits > 62 || n_answers == 0 || n_answers > 1u64 << n_qubits {
        return Err(RuntimeError::new(ErrorCode::DimMismatch, "need 1 <= answers <= 2^qubits"));
    }
    Ok(())
}

/// Success probability after `k` Grover iterations.
pub fn grover_success(n_qubits: u32, n_answers: u64, k: u64) -> f64 {
    ((2 * k + 1) as f64 * grover_angle(n_qubits, n_answers)).sin().powi(2)
}

/// Iteration count `k` closest to `π/(4θ) - 1/2`, `sin θ = √(M/2^n)`: the
/// closest integer to `arccos √(M/N) / (2θ)`.
pub fn grover_iterations(n_qubits: u32, n_answers: u64) -> Result<u64, RuntimeError> {
    check_grover(n_qubits, n_answers)?;
    let theta = grover_angle(n_qubits, n_answers);
    let k = std::f64::consts::FRAC_PI_4 / theta - 0.5;
    Ok(k.round().max(0.0) as u64)
}

/// Smallest `k` within the first rise of the success curve that maximizes
/// `sin²((2k+1)θ)`.
pub fn grover_iterations_brute_force(n_qubits: u32, n_answers: u64) -> Result<u64, RuntimeError> {
    check_grover(n_qubits, n_answers)?;
    let theta = grover_angle(n_qubits, n_answers);
    let hi = (std::f64::consts::FRAC_PI_4 / theta).ceil() as u64;
    let mut best = 0;
    for k in 1..=hi {
        if grover_success(n_qubits, n_answers, k) > grover_success(n_qubits, n_answers, best) + 1e-12 {
            best = k;
        }
    }
    Ok(best)
}

pub fn gcd(a: i64, b: i64) -> i64 {
    a.gcd(&b)
}

pub fn lcm(a: i64, b: i64) -> i64 {
    a.lcm(&b)
}

/// Inverse of `a` modulo `m`.
pub fn modinv(a: i64, m: i64) -> Result<i64, RuntimeError> {
    let e = a.rem_euclid(m).extended_gcd(&m);
    if e.gcd != 1 {
        return Err(RuntimeError::new(ErrorCode::NotABijection, format!("{a} has no inverse modulo {m}")));
    }
    Ok(e.x.rem_euclid(m))
}

/// `base^exp mod m` without overflow for 64-bit moduli.
pub fn mod_pow(base: u64, mut exp: u64, m: u64) -> u64 {
    let mut b = (base % m) as u128;
    let mut acc = 1u128 % m as u128;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % m as u128;
        }
        b = b * b % m as u128;
        exp >>= 1;
    }
    acc as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn binary_fractions() {
        assert_eq!(as_bin_frac(&bs("0110")), r(3, 8));
        assert_eq!(as_bin_frac(&bs("0000")), r(0, 1));
        assert_eq!(as_bin_frac(&bs("1")), r(1, 2));
    }

    #[test]
    fn convergents() {
        assert_eq!(cfrac_convergents(r(1, 4)), vec![r(0, 1), r(1, 4)]);
        assert_eq!(cfrac_convergents(r(3, 8)), vec![r(0, 1), r(1, 2), r(1, 3), r(3, 8)]);
        assert_eq!(cfrac_convergents(r(0, 1)), vec![r(0, 1)]);
        let cs = cfrac_convergents(r(3, 8));
        assert_eq!(last_convergent_with_denominator_below(&cs, 15).unwrap(), r(3, 8));
        assert_eq!(last_convergent_with_denominator_below(&cs, 3).unwrap(), r(1, 2));
        let err = last_convergent_with_denominator_below(&[r(0, 1)], 1).unwrap_err();
        assert_eq!(err.code, ErrorCode::NoConvergent);
    }

    #[test]
    fn nullspace() {
        let rows = [bs("110"), bs("011")];
        let brute: Vec<u64> =
            (1..8u64).filter(|v| rows.iter().all(|r| !r.dot(&BitString::from_value(*v, 3)))).collect();
        assert_eq!(brute, vec![0b111]);
        assert_eq!(gf2_solve_nullspace(&rows).unwrap(), bs("111"));
        assert_eq!(gf2_solve_nullspace(&[bs("111"), bs("010")]).unwrap(), bs("101"));
        assert_eq!(gf2_solve_nullspace(&[bs("110")]).unwrap_err().code, ErrorCode::NeedMoreRows);
        let full = [bs("100"), bs("010"), bs("001")];
        assert_eq!(gf2_solve_nullspace(&full).unwrap_err().code, ErrorCode::NeedMoreRows);
    }

    #[test]
    fn grover_counts() {
        assert_eq!(grover_iterations(3, 1).unwrap(), 2);
        assert_eq!(grover_iterations(2, 1).unwrap(), 1);
        for n in 1..=6u32 {
            for m in 1..=1u64 << n {
                assert_eq!(
                    grover_iterations(n, m).unwrap(),
                    grover_iterations_brute_force(n, m).unwrap(),
                    "n={n} m={m}"
                );
            }
        }
    }

    #[test]
    fn number_theory() {
        assert_eq!(lcm(4, 6), 12);
        assert_eq!(modinv(7, 15).unwrap(), 13);
        assert_eq!(gcd(48, 15), 3);
        assert!(modinv(5, 15).is_err());
        assert_eq!(mod_pow(7, 4, 15), 1);
    }
}
