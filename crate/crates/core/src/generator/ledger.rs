//! Exponent bookkeeping for the elliptic bootstrap and for Sobolev products.
//!
//! Starting from `v` in `H^s` with coefficient regularity `r`, the first
//! step gives `H^{s+r}`; the second raises the exponent along
//! `r + min(1, t_j)`, `t_j = s + j r / 2`, until it reaches `r + 1`; the
//! third along `min(s + 2, 1 + (j + 1) r / 2)` until it reaches `s + 2`.

use num_rational::Ratio;
use serde::Serialize;

use crate::error::{Error, Result};

pub type Rational = Ratio<i64>;

const CEIL_GUARD: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BootstrapLedger {
    pub s: f64,
    pub r: f64,
    /// Whether the ledger was computed in exact rational arithmetic.
    pub exact: bool,
    pub claim1: f64,
    /// Exponents `r + min(1, t_j)` for `j = 0..=claim2_count`.
    pub claim2_steps: Vec<f64>,
    /// `r_j = min(r + 1, t_j + 3r/2)`.
    pub claim2_r: Vec<f64>,
    pub claim2_count: usize,
    /// Exponents `min(s + 2, 1 + (j + 1) r / 2)` for `j = 1..=claim3_count`.
    pub claim3_steps: Vec<f64>,
    /// `s_j = (j + 1) r / 2`.
    pub claim3_s: Vec<f64>,
    /// `q_j = s_j + r/2 - 1`.
    pub claim3_q: Vec<f64>,
    pub claim3_count: usize,
    pub final_exponent: f64,
    /// Exact values as `p/q` strings, when available.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rational: Option<RationalLedger>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RationalLedger {
    pub claim1: String,
    pub claim2_steps: Vec<String>,
    pub claim3_steps: Vec<String>,
    pub final_exponent: String,
    #[serde(skip)]
    pub claim2_values: Vec<Rational>,
    #[serde(skip)]
    pub claim3_values: Vec<Rational>,
}

/// Parses `"p/q"`, an integer, or a finite decimal such as `"0.75"` exactly.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let t = text.trim();
    if let Some((p, q)) = t.split_once('/') {
        let p: i64 = p.trim().parse().ok()?;
        let q: i64 = q.trim().parse().ok()?;
        return (q != 0).then(|| Rational::new(p, q));
    }
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if (int.is_empty() && frac.is_empty())
        || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit())
        || frac.len() > 15
    {
        return None;
    }
    let den = 10i64.checked_pow(frac.len() as u32)?;
    let num: i64 = format!("{int}{frac}")
        .trim_start_matches('0')
        .parse()
        .unwrap_or(0);
    let v = Rational::new(num, den);
    Some(if neg { -v } else { v })
}

fn to_f64(q: Rational) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

fn check_domain(s: f64, r: f64) -> Result<()> {
    if !(s >= 0.0 && s < r && r > 0.0 && r < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "bootstrap requires 0 <= s < r < 1, got s = {s}, r = {r}"
        )));
    }
    Ok(())
}

fn ceil_rational(q: Rational) -> usize {
    q.ceil().to_integer().max(0) as usize
}

/// `ceil` that ignores excess below `CEIL_GUARD`, so that `2.00000000000002`
/// counts as 2.
fn ceil_guarded(x: f64) -> usize {
    let f = x.floor();
    if x - f <= CEIL_GUARD {
        f.max(0.0) as usize
    } else {
        (f + 1.0).max(0.0) as usize
    }
}

/// Exact ledger for rational `(s, r)`.
pub fn bootstrap_ledger(s: Rational, r: Rational) -> Result<BootstrapLedger> {
    check_domain(to_f64(s), to_f64(r))?;
    if !(s >= Rational::from(0) && s < r && r < Rational::from(1)) {
        return Err(Error::InvalidArgument(
            "bootstrap requires 0 <= s < r < 1".into(),
        ));
    }
    let one = Rational::from(1);
    let two = Rational::from(2);
    let half_r = r / two;
    let n2 = ceil_rational(two * (one - s) / r);
    let n3 = ceil_rational(two * (one + s) / r - one);
    let t: Vec<Rational> = (0..=n2)
        .map(|j| s + Rational::from(j as i64) * half_r)
        .collect();
    let c2: Vec<Rational> = t.iter().map(|&tj| r + tj.min(one)).collect();
    let r2: Vec<Rational> = t
        .iter()
        .map(|&tj| (r + one).min(tj + Rational::from(3) * half_r))
        .collect();
    let sj: Vec<Rational> = (1..=n3)
        .map(|j| Rational::from(j as i64 + 1) * half_r)
        .collect();
    let c3: Vec<Rational> = sj.iter().map(|&x| (s + two).min(one + x)).collect();
    let q3: Vec<Rational> = sj.iter().map(|&x| x + half_r - one).collect();
    let strs = |v: &[Rational]| v.iter().map(|q| q.to_string()).collect::<Vec<_>>();
    let fl = |v: &[Rational]| v.iter().map(|&q| to_f64(q)).collect::<Vec<_>>();
    Ok(BootstrapLedger {
        s: to_f64(s),
        r: to_f64(r),
        exact: true,
        claim1: to_f64(s + r),
        claim2_steps: fl(&c2),
        claim2_r: fl(&r2),
        claim2_count: n2,
        claim3_steps: fl(&c3),
        claim3_s: fl(&sj),
        claim3_q: fl(&q3),
        claim3_count: n3,
        final_exponent: to_f64(s + two),
        rational: Some(RationalLedger {
            claim1: (s + r).to_string(),
            claim2_steps: strs(&c2),
            claim3_steps: strs(&c3),
            final_exponent: (s + two).to_string(),
            claim2_values: c2,
            claim3_values: c3,
        }),
    })
}

/// Floating-point ledger for inputs without an exact rational form.
pub fn bootstrap_ledger_f64(s: f64, r: f64) -> Result<BootstrapLedger> {
    check_domain(s, r)?;
    let n2 = ceil_guarded(2.0 * (1.0 - s) / r);
    let n3 = ceil_guarded(2.0 * (1.0 + s) / r - 1.0);
    let t: Vec<f64> = (0..=n2).map(|j| s + j as f64 * r / 2.0).collect();
    let sj: Vec<f64> = (1..=n3).map(|j| (j as f64 + 1.0) * r / 2.0).collect();
    Ok(BootstrapLedger {
        s,
        r,
        exact: false,
        claim1: s + r,
        claim2_steps: t.iter().map(|&tj| r + tj.min(1.0)).collect(),
        claim2_r: t.iter().map(|&tj| (r + 1.0).min(tj + 1.5 * r)).collect(),
        claim2_count: n2,
        claim3_steps: sj.iter().map(|&x| (s + 2.0).min(1.0 + x)).collect(),
        claim3_s: sj.clone(),
        claim3_q: sj.iter().map(|&x| x + r / 2.0 - 1.0).collect(),
        claim3_count: n3,
        final_exponent: s + 2.0,
        rational: None,
    })
}

/// Product exponent `min(s1, s2, s1 + s2 - 1)`, lowered by `r/4` at the
/// excluded configurations `s_i = ±1` or `s1 + s2 = 0`.
pub fn product_exponent(s1: f64, s2: f64, r: f64) -> f64 {
    let base = s1.min(s2).min(s1 + s2 - 1.0);
    let excluded =
        [s1, s2].iter().any(|s| (s.abs() - 1.0).abs() < 1e-12) || (s1 + s2).abs() < 1e-12;
    if excluded {
        base - r / 4.0
    } else {
        base
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(p: i64, d: i64) -> Rational {
        Rational::new(p, d)
    }

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!(parse_rational("1/2"), Some(q(1, 2)));
        assert_eq!(parse_rational(" 3 / 4 "), Some(q(3, 4)));
        assert_eq!(parse_rational("0.75"), Some(q(3, 4)));
        assert_eq!(parse_rational("0"), Some(q(0, 1)));
        assert_eq!(parse_rational(".5"), Some(q(1, 2)));
        assert_eq!(parse_rational("-0.25"), Some(q(-1, 4)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("abc"), None);
        assert_eq!(parse_rational("1e-3"), None);
    }

    #[test]
    fn guarded_ceiling() {
        assert_eq!(ceil_guarded(2.0 + 2e-14), 2);
        assert_eq!(ceil_guarded(2.1), 3);
        assert_eq!(ceil_guarded(3.0), 3);
    }

    #[test]
    fn quarter_half_claim2_sequence() {
        let l = bootstrap_ledger(q(1, 4), q(1, 2)).unwrap();
        let rl = l.rational.as_ref().unwrap();
        assert_eq!(l.claim2_count, 3);
        assert_eq!(rl.claim2_values, vec![q(3, 4), q(1, 1), q(5, 4), q(3, 2)]);
        assert_eq!(rl.claim2_steps, vec!["3/4", "1", "5/4", "3/2"]);
        assert_eq!(l.claim3_count, 4);
        assert_eq!(*rl.claim3_values.last().unwrap(), q(9, 4));
    }

    #[test]
    fn product_rule() {
        assert!((product_exponent(0.8, 0.8, 0.5) - 0.6).abs() < 1e-15);
        assert_eq!(product_exponent(2.0, 0.5, 0.5), 0.5);
        assert_eq!(product_exponent(1.0, 1.5, 0.5), 1.0 - 0.125);
        assert_eq!(product_exponent(0.5, -0.5, 0.5), -1.0 - 0.125);
    }
}
