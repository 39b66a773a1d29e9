//! Poisson–Charlier polynomials for the Poisson(1) distribution.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::chaos::wi_joint_moment;
use crate::error::{Error, Result};
use crate::measure::{AtomSpace, SymmetricKernel};
use crate::partitions::Guard;

/// Polynomial with integer coefficients, lowest degree first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntPoly {
    coeffs: Vec<BigInt>,
}

impl IntPoly {
    pub fn new(coeffs: Vec<BigInt>) -> Self {
        let mut p = Self { coeffs };
        p.trim();
        p
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        Self::new(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn one() -> Self {
        Self::from_i64(&[1])
    }

    fn trim(&mut self) {
        while self.coeffs.len() > 1 && self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
        if self.coeffs.is_empty() {
            self.coeffs.push(BigInt::zero());
        }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    /// Coefficients as `i64`, if they all fit.
    pub fn coeffs_i64(&self) -> Option<Vec<i64>> {
        self.coeffs.iter().map(|c| c.to_i64()).collect()
    }

    /// `p(x + a)`.
    pub fn shift(&self, a: i64) -> Self {
        // Horner in the shifted variable: p(x + a) = (...(c_d (x+a) + c_{d-1})(x+a) ...)
        let step = Self::from_i64(&[a, 1]);
        let mut acc = Self::new(vec![BigInt::zero()]);
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(&step);
            acc.coeffs[0] += c;
        }
        acc.trim();
        acc
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = vec![BigInt::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let zero = BigInt::zero();
        let out = (0..n)
            .map(|i| self.coeffs.get(i).unwrap_or(&zero) - other.coeffs.get(i).unwrap_or(&zero))
            .collect();
        Self::new(out)
    }

    pub fn pow(&self, m: u32) -> Self {
        (0..m).fold(Self::one(), |acc, _| acc.mul(self))
    }

    /// `x · p(x)`.
    pub fn mul_x(&self) -> Self {
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(BigInt::zero());
        coeffs.extend(self.coeffs.iter().cloned());
        Self::new(coeffs)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c.to_f64().unwrap_or(f64::NAN))
    }

    pub fn eval_int(&self, x: &BigInt) -> BigInt {
        self.coeffs.iter().rev().fold(BigInt::zero(), |acc, c| acc * x + c)
    }

    /// Sum of absolute coefficients, so that `|p(x)| <= C (1 + x)^d` for `x >= 0`.
    fn envelope(&self) -> f64 {
        self.coeffs.iter().map(|c| c.abs().to_f64().unwrap_or(f64::INFINITY)).sum()
    }
}

impl fmt::Display for IntPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() && !(i == 0 && first) {
                continue;
            }
            let sign = if c.is_negative() { "-" } else { "+" };
            let mag = c.abs();
            if first {
                if c.is_negative() {
                    f.write_str("-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            match i {
                0 => write!(f, "{mag}")?,
                _ if mag.is_one() => {}
                _ => write!(f, "{mag}")?,
            }
            match i {
                0 => {}
                1 => f.write_str("x")?,
                _ => write!(f, "x^{i}")?,
            }
        }
        Ok(())
    }
}

/// `H_q` from `H_0 = 1`, `H_{q+1}(x) = x H_q(x - 1) - H_q(x)`.
pub fn charlier(q: usize) -> IntPoly {
    let mut h = IntPoly::one();
    for _ in 0..q {
        h = h.shift(-1).mul_x().sub(&h);
    }
    h
}

/// `E p(Z)` for `Z ~ Poisson(1)`, truncating the series once the remaining
/// terms are provably below `tol`. The partial sum is accumulated exactly as
/// a rational number; only the final value and the factor `e^{-1}` are
/// rounded.
pub fn poisson_moment(p: &IntPoly, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidConfig(format!("truncation tolerance must be positive, got {tol}")));
    }
    let cut = truncation_point(p, tol);
    // Σ_{x <= X} p(x) X!/x!, built backwards so every term stays integral
    let mut sum = BigInt::zero();
    let mut falling = BigInt::one();
    for x in (0..=cut).rev() {
        sum += p.eval_int(&BigInt::from(x)) * &falling;
        falling *= BigInt::from(x.max(1));
    }
    // falling = X! after the loop (the x = 0 step multiplies by 1)
    let ratio: BigRational = Ratio::new(sum, falling);
    Ok(ratio.to_f64().unwrap_or(f64::NAN) * (-1f64).exp())
}

/// Smallest `X >= deg p` such that `Σ_{y > X} |p(y)| e^{-1} / y! < tol`,
/// using `|p(y)| <= C (1 + y)^d` and a geometric bound on the tail.
fn truncation_point(p: &IntPoly, tol: f64) -> u64 {
    let c = p.envelope();
    let d = p.degree() as i32;
    let mut x = p.degree() as u64;
    let mut log_fact: f64 = (1..=x + 1).map(|k| (k as f64).ln()).sum();
    loop {
        let y = (x + 1) as f64;
        let first = c.ln() + d as f64 * (1.0 + y).ln() - log_fact - 1.0;
        let ratio = ((2.0 + y) / (1.0 + y)).powi(d) / (y + 1.0);
        if ratio < 0.5 && first + 2f64.ln() < tol.ln() {
            return x;
        }
        x += 1;
        log_fact += ((x + 1) as f64).ln();
    }
}

/// `|E H_q(Z)^m - E[I_q(1_B^{⊗q})^m]|` with `μ(B) = 1`; the right side is the
/// diagram sum over `Π≥2` on a single atom of weight one.
pub fn chaos_identity_check(q: usize, m: usize, tol: f64, guard: Guard) -> Result<ChaosIdentity> {
    if q == 0 || m == 0 {
        return Err(Error::InvalidConfig("q and m must be positive".into()));
    }
    let series = poisson_moment(&charlier(q).pow(m as u32), tol)?;
    let space = AtomSpace::from_weights(vec![1.0])?;
    let g = SymmetricKernel::constant(q, 1, 1.0)?;
    let diagram = wi_joint_moment(&vec![&g; m], &space, guard)?;
    Ok(ChaosIdentity { q, m, series, diagram, residual: (series - diagram).abs() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChaosIdentity {
    pub q: usize,
    pub m: usize,
    pub series: f64,
    pub diagram: f64,
    pub residual: f64,
}

/// Scale `a_n = c n^θ (log n)^ρ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scale {
    pub c: f64,
    pub theta: Ratio<i64>,
    pub rho: Ratio<i64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// The moderate deviation principle holds at this scale.
    MdpHolds,
    /// No moderate deviation principle with a good rate function.
    MdpFails,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::MdpHolds => "mdp-holds",
            Regime::MdpFails => "mdp-fails",
        }
    }
}

/// Classifies a scale for sums of `H_q(Z_k)` by the limit of
/// `a_n^{-2+1/q} n^{1/(2q)} log(a_n √n)`.
///
/// For `a_n = c n^θ (log n)^ρ` inside the admissible window the logarithm
/// behaves like `(θ + 1/2) log n`, so the expression is
/// `n^e (log n)^{l}` up to a positive constant with
/// `e = (-2 + 1/q) θ + 1/(2q)` and `l = (-2 + 1/q) ρ + 1`.
pub fn scale_classifier(q: usize, scale: &Scale) -> Result<Regime> {
    if q == 0 {
        return Err(Error::InvalidConfig("q must be positive".into()));
    }
    let zero = Ratio::from_integer(0);
    let half = Ratio::new(1, 2);
    if !(scale.c > 0.0 && scale.c.is_finite()) {
        return Err(Error::OutOfRange(format!("constant must be positive, got {}", scale.c)));
    }
    let grows = scale.theta > zero || (scale.theta == zero && scale.rho > zero);
    if !grows {
        return Err(Error::OutOfRange("a_n does not tend to infinity".into()));
    }
    let below_sqrt = scale.theta < half || (scale.theta == half && scale.rho < zero);
    if !below_sqrt {
        return Err(Error::OutOfRange("a_n / sqrt(n) does not tend to zero".into()));
    }
    let q = q as i64;
    let power = Ratio::new(1 - 2 * q, q);
    let e = power * scale.theta + Ratio::new(1, 2 * q);
    let l = power * scale.rho + Ratio::from_integer(1);
    Ok(if e > zero || (e == zero && l > zero) { Regime::MdpHolds } else { Regime::MdpFails })
}

/// Parses `"3"`, `"-1/4"` or a finite decimal such as `"0.2"`.
pub fn parse_rational(s: &str) -> Result<Ratio<i64>> {
    let t = s.trim();
    let bad = || Error::InvalidConfig(format!("cannot read {s:?} as a rational number"));
    if t.contains('/') {
        return Ratio::<i64>::from_str(t).map_err(|_| bad());
    }
    let (neg, digits) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t),
    };
    let (whole, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if frac.len() > 15 {
        return Err(bad());
    }
    let parse = |x: &str| if x.is_empty() { Ok(0) } else { x.parse::<i64>().map_err(|_| bad()) };
    let denom = 10i64.pow(frac.len() as u32);
    let numer = parse(whole)?.checked_mul(denom).ok_or_else(bad)? + parse(frac)?;
    Ok(Ratio::new(if neg { -numer } else { numer }, denom))
}
