//! q-series primitives: q-shifted factorials, terminating basic
//! hypergeometric sums and the q-numbers `e_n`.
//!
//! Series convention: the k-th term of `r phi s` carries
//! `[(-1)^k q^{k(k-1)/2}]^{1+s-r}`. For `2 phi 0` that factor is
//! `[(-1)^k q^{k(k-1)/2}]^{-1}`; for `3 phi 2` it is 1. The `2 phi 0` choice
//! is what makes `c_1(x) = (mu + q - q x)/mu` come out of the explicit form.

use num_complex::Complex64;

use crate::error::{QError, Result};
use crate::scaled::Scaled;

pub type CNum = Complex64;

/// Factor deviation below which infinite products stop.
pub const DEFAULT_PRODUCT_TOL: f64 = 1e-16;

/// Relative tolerance for recognising a parameter as `q^{-n}`.
pub const TERMINATION_REL_TOL: f64 = 1e-12;

const POLE_TOL: f64 = 1e-13;
const SERIES_CAP: usize = 10_000;
const PRODUCT_CAP: usize = 1_000_000;

pub fn check_base(q: f64) -> Result<()> {
    if q.is_finite() && q > 0.0 && q < 1.0 {
        Ok(())
    } else {
        Err(QError::invalid("q", format!("q outside (0,1): {q}")))
    }
}

/// `(a;q)_n` for complex `a`.
///
/// Exactly zero when `a = q^{-m}` with `m < n`, even when the floating point
/// factor `1 - a q^m` would round to something tiny but nonzero.
pub fn qpochhammer_finite(a: CNum, q: f64, n: usize) -> Result<CNum> {
    check_base(q)?;
    if let Some(m) = negative_q_power(a, q) {
        if m < n {
            return Ok(CNum::new(0.0, 0.0));
        }
    }
    let mut acc = CNum::new(1.0, 0.0);
    let mut qk = 1.0;
    for _ in 0..n {
        acc *= 1.0 - a * qk;
        qk *= q;
    }
    Ok(acc)
}

/// `(a;q)_n` for real `a`, no validation.
pub fn qpochhammer_real(a: f64, q: f64, n: usize) -> f64 {
    let mut acc = 1.0;
    let mut qk = 1.0;
    for _ in 0..n {
        acc *= 1.0 - a * qk;
        qk *= q;
    }
    acc
}

/// `(a;q)_n` for real `a` with an extended exponent range.
pub fn qpochhammer_scaled(a: f64, q: f64, n: usize) -> Scaled {
    let mut acc = Scaled::ONE;
    let mut qk = 1.0;
    for _ in 0..n {
        acc = acc.mul_f64(1.0 - a * qk);
        qk *= q;
    }
    acc
}

/// `(a;q)_inf`, truncated once `|a| q^k < tol`.
pub fn qpochhammer_infinite(a: CNum, q: f64, tol: f64) -> Result<CNum> {
    check_base(q)?;
    if tol.is_nan() || tol <= 0.0 {
        return Err(QError::invalid(
            "tol",
            format!("must be positive, got {tol}"),
        ));
    }
    let mut acc = CNum::new(1.0, 0.0);
    let mut f = a;
    let mut k = 0;
    while f.norm() >= tol {
        acc *= 1.0 - f;
        f *= q;
        k += 1;
        if k > PRODUCT_CAP {
            return Err(QError::NoConvergence { cap: PRODUCT_CAP });
        }
    }
    Ok(acc)
}

/// `(a;q)_inf` for real `a` at the default tolerance; `q` must already be
/// known to lie in (0,1).
pub fn qpochhammer_infinite_real(a: f64, q: f64) -> f64 {
    debug_assert!(q > 0.0 && q < 1.0);
    let mut acc = 1.0;
    let mut f = a;
    while f.abs() >= DEFAULT_PRODUCT_TOL {
        acc *= 1.0 - f;
        f *= q;
    }
    acc
}

/// Returns `Some(n)` when `a = q^{-n}` for a nonnegative integer `n`, to
/// relative tolerance [`TERMINATION_REL_TOL`].
pub fn negative_q_power(a: CNum, q: f64) -> Option<usize> {
    if a.re <= 0.0 || a.im.abs() > TERMINATION_REL_TOL * a.re {
        return None;
    }
    let n = -(a.re.ln() / q.ln()).round();
    if !(0.0..=1e6).contains(&n) {
        return None;
    }
    let n = n as usize;
    let target = q.powi(-(n as i32));
    if (a.re - target).abs() <= TERMINATION_REL_TOL * target {
        Some(n)
    } else {
        None
    }
}

/// Terminating `2 phi 0(a, b; -; q, z)`.
///
/// Sums `(a;q)_k (b;q)_k / (q;q)_k * (-1)^k q^{-k(k-1)/2} z^k` up to the
/// termination index of whichever of `a`, `b` is a negative power of `q`.
pub fn phi20_terminating(a: CNum, b: CNum, q: f64, z: CNum) -> Result<CNum> {
    check_base(q)?;
    let last = match (negative_q_power(a, q), negative_q_power(b, q)) {
        (Some(m), Some(n)) => m.min(n),
        (Some(m), None) | (None, Some(m)) => m,
        (None, None) => return Err(QError::NotTerminating),
    };
    Ok(phi20_sum(a, b, q, z, last))
}

/// `2 phi 0` partial sum over k = 0..=last, for callers that know the
/// termination index exactly.
pub(crate) fn phi20_sum(a: CNum, b: CNum, q: f64, z: CNum, last: usize) -> CNum {
    let mut term = CNum::new(1.0, 0.0);
    let mut sum = term;
    let mut qk = 1.0;
    for _ in 0..last {
        term *= (1.0 - a * qk) * (1.0 - b * qk) / (1.0 - qk * q) * (-z / qk);
        sum += term;
        qk *= q;
    }
    sum
}

/// A series value together with the number of terms that were summed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesSum {
    pub value: CNum,
    pub terms: usize,
}

/// `3 phi 2(a1, a2, a3; b1, b2; q, z)`, balanced convention (no extra
/// sign/power factor).
pub fn phi32(upper: [CNum; 3], lower: [CNum; 2], q: f64, z: CNum) -> Result<CNum> {
    phi32_counted(upper, lower, q, z).map(|s| s.value)
}

/// [`phi32`] that also reports how many terms were summed.
///
/// Terminates at the smallest `n` among upper parameters equal to `q^{-n}`;
/// otherwise sums until terms fall below machine precision relative to the
/// partial sum, failing after a fixed cap.
pub fn phi32_counted(upper: [CNum; 3], lower: [CNum; 2], q: f64, z: CNum) -> Result<SeriesSum> {
    check_base(q)?;
    let last = upper.iter().filter_map(|&a| negative_q_power(a, q)).min();
    phi32_sum(upper, lower, q, z, last)
}

pub(crate) fn phi32_sum(
    upper: [CNum; 3],
    lower: [CNum; 2],
    q: f64,
    z: CNum,
    last: Option<usize>,
) -> Result<SeriesSum> {
    let mut term = CNum::new(1.0, 0.0);
    let mut sum = term;
    let mut qk = 1.0; // q^{k-1} for the step to term k
    let mut small_run = 0;
    let cap = last.unwrap_or(SERIES_CAP);
    for k in 1..=cap {
        let mut den = CNum::new(1.0 - qk * q, 0.0);
        for &b in &lower {
            let f = 1.0 - b * qk;
            if f.norm() <= POLE_TOL * (b * qk).norm().max(1.0) {
                return Err(QError::DenominatorPole { index: k });
            }
            den *= f;
        }
        let num = upper
            .iter()
            .fold(CNum::new(1.0, 0.0), |acc, &a| acc * (1.0 - a * qk));
        term *= num / den * z;
        sum += term;
        qk *= q;
        if last.is_none() {
            if term.norm() <= 1e-17 * sum.norm() {
                small_run += 1;
                if small_run >= 3 {
                    return Ok(SeriesSum {
                        value: sum,
                        terms: k + 1,
                    });
                }
            } else {
                small_run = 0;
            }
        }
    }
    match last {
        Some(n) => Ok(SeriesSum {
            value: sum,
            terms: n + 1,
        }),
        None => Err(QError::NoConvergence { cap: SERIES_CAP }),
    }
}

/// q-number `e_n = (1 - q^n)/(1 - q)`.
pub fn e_number(n: usize, q: f64) -> f64 {
    (1.0 - q.powi(n as i32)) / (1.0 - q)
}

/// `e_n! = e_1 e_2 ... e_n`, with `e_0! = 1`.
pub fn e_factorial(n: usize, q: f64) -> f64 {
    (1..=n).map(|k| e_number(k, q)).product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64) -> CNum {
        CNum::new(re, 0.0)
    }

    #[test]
    fn finite_products() {
        assert_eq!(qpochhammer_finite(c(0.7), 0.5, 0).unwrap(), c(1.0));
        assert_eq!(qpochhammer_finite(c(0.5), 0.5, 2).unwrap(), c(0.375));
        // (1 - .5)(1 - .25)(1 - .125) = 0.328125
        assert_eq!(qpochhammer_finite(c(0.5), 0.5, 3).unwrap(), c(0.328125));
    }

    #[test]
    fn finite_product_hits_exact_zero() {
        let q = 0.3;
        let a = c(1.0 / (q * q));
        assert_eq!(qpochhammer_finite(a, q, 3).unwrap(), c(0.0));
        assert_ne!(qpochhammer_finite(a, q, 2).unwrap(), c(0.0));
    }

    #[test]
    fn rejects_bad_base() {
        for q in [0.0, 1.0, 1.5, -0.2, f64::NAN] {
            assert!(qpochhammer_finite(c(0.1), q, 3).is_err());
            assert!(qpochhammer_infinite(c(0.1), q, 1e-16).is_err());
        }
        assert!(qpochhammer_infinite(c(0.1), 0.5, 0.0).is_err());
    }

    #[test]
    fn infinite_products() {
        assert_eq!(qpochhammer_infinite(c(0.0), 0.5, 1e-16).unwrap(), c(1.0));
        assert_eq!(qpochhammer_infinite(c(1.0), 0.5, 1e-16).unwrap(), c(0.0));
        let v = qpochhammer_infinite(c(0.5), 0.5, 1e-16).unwrap();
        assert!((v.re - 0.288_788_095_086_602_4).abs() < 1e-15, "{v}");
    }

    #[test]
    fn infinite_product_truncation_is_consistent() {
        for a in [0.3, -0.9, 0.99] {
            let coarse = qpochhammer_infinite(c(a), 0.7, 1e-8).unwrap();
            let fine = qpochhammer_infinite(c(a), 0.7, 1e-9).unwrap();
            assert!((coarse - fine).norm() < 10.0 * 1e-8 * fine.norm(), "{a}");
        }
    }

    #[test]
    fn recognises_negative_powers() {
        assert_eq!(negative_q_power(c(1.0), 0.3), Some(0));
        let mut x = 1.0;
        for n in 0..40 {
            assert_eq!(negative_q_power(c(x), 0.3), Some(n));
            x /= 0.3;
        }
        assert_eq!(negative_q_power(c(2.5), 0.5), None);
        assert_eq!(negative_q_power(c(0.5), 0.5), None);
        assert_eq!(negative_q_power(CNum::new(2.0, 0.1), 0.5), None);
    }

    #[test]
    fn phi20_reproduces_c1() {
        let (q, mu, x) = (0.5, 0.3, 2.0);
        let v = phi20_terminating(c(1.0 / q), c(x), q, c(q * q / mu)).unwrap();
        assert!((v.re - (mu + q - q * x) / mu).abs() < 1e-15);
        assert_eq!(
            phi20_terminating(c(1.0), c(7.0), q, c(3.0)).unwrap(),
            c(1.0)
        );
    }

    #[test]
    fn phi20_three_terms() {
        let q = 0.5;
        let (a, b, z) = (c(4.0), c(8.0), c(0.3));
        // direct expansion, k = 0, 1, 2
        let t1 = (1.0 - 4.0) * (1.0 - 8.0) / (1.0 - 0.5) * -0.3;
        let t2 = (1.0 - 4.0) * (1.0 - 2.0) * (1.0 - 8.0) * (1.0 - 4.0)
            / ((1.0 - 0.5) * (1.0 - 0.25))
            * 0.09
            / 0.5;
        let v = phi20_terminating(a, b, q, z).unwrap();
        assert!((v.re - (1.0 + t1 + t2)).abs() < 1e-13, "{v}");
        assert!(phi20_terminating(c(0.3), c(0.7), q, z).is_err());
    }

    #[test]
    fn phi32_truncates_on_unit_parameter() {
        let q = 0.6;
        for pos in 0..3 {
            let mut up = [c(0.3), CNum::new(0.2, 0.5), c(-1.7)];
            up[pos] = c(1.0);
            let s = phi32_counted(up, [c(0.4), c(0.9)], q, c(0.8)).unwrap();
            assert_eq!(s.value, c(1.0));
            assert_eq!(s.terms, 1);
        }
    }

    #[test]
    fn phi32_two_terms() {
        let q = 0.5;
        let (a1, a2, a3, b1, b2, z) = (2.0, 2.0, 0.2, 0.4, 0.3, 0.7);
        let expect =
            1.0 + (1.0 - a1) * (1.0 - a2) * (1.0 - a3) / ((1.0 - q) * (1.0 - b1) * (1.0 - b2)) * z;
        let s = phi32_counted([c(a1), c(a2), c(a3)], [c(b1), c(b2)], q, c(z)).unwrap();
        assert_eq!(s.terms, 2);
        assert!((s.value.re - expect).abs() < 1e-14);
    }

    #[test]
    fn phi32_detects_pole() {
        let q = 0.5;
        // (b;q)_k vanishes at k = 2 for b = q^{-1}
        let r = phi32([c(8.0), c(0.3), c(0.4)], [c(2.0), c(0.7)], q, c(0.1));
        assert_eq!(r, Err(QError::DenominatorPole { index: 2 }));
    }

    #[test]
    fn phi32_nonterminating_converges() {
        // q-Gauss: 2phi1(a,b;c;q,c/ab) = (c/a, c/b; q)_inf / (c, c/ab; q)_inf,
        // written as a 3phi2 with a matching upper/lower pair.
        let (q, a, b, cc) = (0.5, 0.3, 0.2, 0.4);
        let v = phi32([c(a), c(b), c(0.9)], [c(cc), c(0.9)], q, c(cc / (a * b))).unwrap_err();
        assert!(
            matches!(v, QError::NoConvergence { .. }),
            "|z| > 1 cannot converge"
        );
        let (a, b, cc) = (0.3, 0.2, 0.05);
        let z = cc / (a * b);
        let v = phi32([c(a), c(b), c(0.9)], [c(cc), c(0.9)], q, c(z)).unwrap();
        let p = |x: f64| qpochhammer_infinite_real(x, q);
        let expect = p(cc / a) * p(cc / b) / (p(cc) * p(z));
        assert!((v.re - expect).abs() < 1e-14, "{} vs {}", v.re, expect);
    }

    #[test]
    fn e_numbers() {
        assert_eq!(e_number(0, 0.5), 0.0);
        assert_eq!(e_number(1, 0.5), 1.0);
        assert_eq!(e_number(2, 0.5), 1.5);
        assert_eq!(e_factorial(0, 0.5), 1.0);
        assert_eq!(e_factorial(3, 0.5), 1.0 * 1.5 * 1.75);
        let q = 0.37;
        // q^n falls below half an ulp of 1 near n = 36
        for n in 0..30 {
            assert!(e_number(n + 1, q) > e_number(n, q));
            assert!(e_number(n, q) < 1.0 / (1.0 - q));
        }
    }

    proptest! {
        #[test]
        fn pochhammer_step(re in -3.0f64..3.0, im in -3.0f64..3.0, q in 0.05f64..0.95, n in 0usize..40) {
            let a = CNum::new(re, im);
            let lhs = qpochhammer_finite(a, q, n + 1).unwrap();
            let rhs = qpochhammer_finite(a, q, n).unwrap() * (1.0 - a * q.powi(n as i32));
            prop_assert!((lhs - rhs).norm() <= 1e-14 * lhs.norm().max(1e-300));
        }

        #[test]
        fn c1_reproduction(x in 1.0f64..50.0, mu in 0.01f64..0.99, q in 0.01f64..0.99) {
            let v = phi20_terminating(c(1.0 / q), c(x), q, c(q * q / mu)).unwrap().re;
            let expect = (mu + q - q * x) / mu;
            prop_assert!((v - expect).abs() <= 1e-13 * expect.abs().max(1.0));
        }

        #[test]
        fn phi32_unit_upper(re in -2.0f64..2.0, b in 0.1f64..0.9, z in -0.9f64..0.9, q in 0.1f64..0.9) {
            let v = phi32([c(re), c(1.0), c(0.5)], [c(b), c(0.25)], q, c(z)).unwrap();
            prop_assert_eq!(v, c(1.0));
        }
    }
}
