//! Biorthogonal rational functions `u_m`, `v_n` of `3 phi 2` type.

use serde::Serialize;

use crate::error::{QError, Result};
use crate::qcore::{
    check_base, phi32_sum, qpochhammer_infinite_real, qpochhammer_real, CNum, SeriesSum,
};

/// Lattice points scanned when checking that the weight decays.
pub const WEIGHT_SCAN: usize = 500;
const WEIGHT_DECAY: f64 = 1e-15;

/// `(q, mu1, mu2, t1, t2)` with `t1 t2 = mu1 mu2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BiorthoParams {
    q: f64,
    mu1: f64,
    mu2: f64,
    t1: f64,
    t2: f64,
}

impl BiorthoParams {
    pub fn new(q: f64, mu1: f64, mu2: f64, t1: f64, t2: f64) -> Result<Self> {
        check_base(q)?;
        for (name, v) in [("mu1", mu1), ("mu2", mu2)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(QError::invalid(name, format!("{name} outside (0,1): {v}")));
            }
        }
        for (name, v) in [("t1", t1), ("t2", t2)] {
            if !v.is_finite() || v == 0.0 {
                return Err(QError::invalid(
                    name,
                    format!("{name} must be finite and nonzero"),
                ));
            }
        }
        let m = mu1 * mu2;
        if (t1 * t2 - m).abs() >= 1e-12 * m {
            return Err(QError::invalid(
                "t2",
                format!("t1 t2 = {} differs from mu1 mu2 = {m}", t1 * t2),
            ));
        }
        Ok(BiorthoParams {
            q,
            mu1,
            mu2,
            t1,
            t2,
        })
    }

    /// `q = 0.5, mu1 = 0.3, mu2 = 0.4, t1 = 0.2, t2 = 0.6`.
    ///
    /// Here `mu2 / t1 = 1/q`, so the weight is supported on `s = 0, 1` only
    /// while `u_m(s)` has poles for `s >= 2`; sums over the lattice are
    /// taken in the regularized form of [`biortho_summand`].
    pub fn reference() -> Self {
        BiorthoParams {
            q: 0.5,
            mu1: 0.3,
            mu2: 0.4,
            t1: 0.2,
            t2: 0.6,
        }
    }

    pub fn q(&self) -> f64 {
        self.q
    }
    pub fn mu1(&self) -> f64 {
        self.mu1
    }
    pub fn mu2(&self) -> f64 {
        self.mu2
    }
    pub fn t1(&self) -> f64 {
        self.t1
    }
    pub fn t2(&self) -> f64 {
        self.t2
    }

    fn swapped_t(&self) -> Self {
        BiorthoParams {
            t1: self.t2,
            t2: self.t1,
            ..*self
        }
    }

    fn swapped_mu(&self) -> Self {
        BiorthoParams {
            mu1: self.mu2,
            mu2: self.mu1,
            ..*self
        }
    }
}

/// `d_n^2` of the biorthogonality relation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BiorthoNorm {
    pub n: usize,
    pub d_squared: f64,
}

fn neg_power(k: usize, q: f64) -> CNum {
    CNum::new((0..k).fold(1.0, |x, _| x / q), 0.0)
}

/// `u_m(s) = 3 phi 2(q^{-m}, q^{-s}, t1; (t1/mu1) q^{1-m}, (t1/mu2) q^{1-s}; q, q^2/t2)`
/// with the number of summed terms.
pub fn u_counted(m: usize, s: usize, p: &BiorthoParams) -> Result<SeriesSum> {
    let q = p.q;
    let (qm, qs) = (neg_power(m, q), neg_power(s, q));
    let t1 = CNum::new(p.t1, 0.0);
    phi32_sum(
        [qm, qs, t1],
        [t1 / p.mu1 * q * qm, t1 / p.mu2 * q * qs],
        q,
        CNum::new(q * q / p.t2, 0.0),
        Some(m.min(s)),
    )
}

pub fn u(m: usize, s: usize, p: &BiorthoParams) -> Result<f64> {
    u_counted(m, s, p).map(|v| v.value.re)
}

/// `v_n(s)`: `u_n(s)` with `t1` and `t2` exchanged.
pub fn v_counted(n: usize, s: usize, p: &BiorthoParams) -> Result<SeriesSum> {
    u_counted(n, s, &p.swapped_t())
}

pub fn v(n: usize, s: usize, p: &BiorthoParams) -> Result<f64> {
    v_counted(n, s, p).map(|r| r.value.re)
}

/// `u_m(s)` with `m <-> s` and `mu1 <-> mu2`. Our reading of the
/// self-duality of these functions is that this equals `u_m(s)`.
pub fn u_dual(m: usize, s: usize, p: &BiorthoParams) -> Result<f64> {
    u(s, m, &p.swapped_mu())
}

/// `rho(s) = (mu2/t1, mu2/t2; q)_s / (q, mu2; q)_s * mu1^s q^s`.
pub fn biortho_weight(s: usize, p: &BiorthoParams) -> f64 {
    let q = p.q;
    qpochhammer_real(p.mu2 / p.t1, q, s) * qpochhammer_real(p.mu2 / p.t2, q, s)
        / (qpochhammer_real(q, q, s) * qpochhammer_real(p.mu2, q, s))
        * (p.mu1 * q).powi(s as i32)
}

/// `d_n^2 = (t1, t2; q)_inf / (mu1, mu2; q)_inf * (q, mu1; q)_n / (mu1/t1, mu1/t2; q)_n * mu2^{-n}`.
pub fn biortho_norm(n: usize, p: &BiorthoParams) -> Result<BiorthoNorm> {
    let q = p.q;
    let den_n = qpochhammer_real(p.mu1 / p.t1, q, n) * qpochhammer_real(p.mu1 / p.t2, q, n);
    if den_n == 0.0 {
        return Err(QError::Domain(format!("(mu1/t1, mu1/t2; q)_{n} vanishes")));
    }
    let inf = qpochhammer_infinite_real(p.t1, q) * qpochhammer_infinite_real(p.t2, q)
        / (qpochhammer_infinite_real(p.mu1, q) * qpochhammer_infinite_real(p.mu2, q));
    let fin = qpochhammer_real(q, q, n) * qpochhammer_real(p.mu1, q, n) / den_n;
    Ok(BiorthoNorm {
        n,
        d_squared: inf * fin * p.mu2.powi(-(n as i32)),
    })
}

/// `u_m(s) (mu2/ta; q)_s` written so that it stays finite where
/// `(mu2/ta; q)_s` vanishes and `u_m(s)` has a pole:
///
/// ```text
/// sum_k (q^{-m}, ta; q)_k / (q, (ta/mu1) q^{1-m}; q)_k (q^2/tb)^k (r/q)^k (q^{s-k+1}; q)_k (r; q)_{s-k},
/// r = mu2/ta
/// ```
fn regularized(m: usize, s: usize, ta: f64, tb: f64, p: &BiorthoParams) -> Result<f64> {
    let q = p.q;
    let r = p.mu2 / ta;
    let qm = neg_power(m, q).re;
    let lower = ta / p.mu1 * q * qm;
    let z = q * q / tb * r / q;
    let mut coef = 1.0;
    let mut sum = 0.0;
    let mut qprev = 1.0; // q^{k-1}
    for k in 0..=m.min(s) {
        if k > 0 {
            let den = (1.0 - qprev * q) * (1.0 - lower * qprev);
            if den == 0.0 {
                return Err(QError::DenominatorPole { index: k });
            }
            coef *= (1.0 - qm * qprev) * (1.0 - ta * qprev) / den * z;
            qprev *= q;
        }
        let tail =
            qpochhammer_real(q.powi((s - k) as i32 + 1), q, k) * qpochhammer_real(r, q, s - k);
        sum += coef * tail;
    }
    Ok(sum)
}

/// `u_m(s) v_n(s) rho(s) q^{-s}`, finite at every lattice point.
pub fn biortho_summand(m: usize, n: usize, s: usize, p: &BiorthoParams) -> Result<f64> {
    let q = p.q;
    let base = p.mu1.powi(s as i32) / (qpochhammer_real(q, q, s) * qpochhammer_real(p.mu2, q, s));
    Ok(base * regularized(m, s, p.t1, p.t2, p)? * regularized(n, s, p.t2, p.t1, p)?)
}

/// First `s` at which `|rho(s) q^{-s}|` drops below `1e-15` of its
/// running maximum, scanning at most [`WEIGHT_SCAN`] points.
pub fn weight_decay_index(p: &BiorthoParams) -> Result<usize> {
    let mut peak: f64 = 0.0;
    for s in 0..WEIGHT_SCAN {
        let w = (biortho_weight(s, p) / p.q.powi(s as i32)).abs();
        peak = peak.max(w);
        if w < WEIGHT_DECAY * peak {
            return Ok(s);
        }
    }
    Err(QError::NoConvergence { cap: WEIGHT_SCAN })
}

/// Whether `rho(s) >= 0` for `s < WEIGHT_SCAN`. Positivity depends on the
/// parameters and is reported, not assumed.
pub fn weight_is_nonnegative(p: &BiorthoParams) -> bool {
    (0..WEIGHT_SCAN).all(|s| biortho_weight(s, p) >= 0.0)
}

/// `sum_s u_m(s) v_n(s) rho(s) q^{-s}` over the lattice, stopped once
/// twenty consecutive summands past `max(m, n)` are below `1e-18` of the
/// largest one.
pub fn biortho_sum(m: usize, n: usize, p: &BiorthoParams) -> Result<f64> {
    weight_decay_index(p)?;
    let mut sum = 0.0;
    let mut peak: f64 = 0.0;
    let mut quiet = 0;
    for s in 0..4 * WEIGHT_SCAN {
        let term = biortho_summand(m, n, s, p)?;
        sum += term;
        peak = peak.max(term.abs());
        if s > m.max(n) && term.abs() <= 1e-18 * peak {
            quiet += 1;
            if quiet >= 20 {
                return Ok(sum);
            }
        } else {
            quiet = 0;
        }
    }
    Err(QError::NoConvergence {
        cap: 4 * WEIGHT_SCAN,
    })
}

/// `|sum_s u_m v_n rho q^{-s} - d_n^2 delta_{mn}| / max(1, |d_n^2|)`.
pub fn biorthogonality_residual(m: usize, n: usize, p: &BiorthoParams) -> Result<f64> {
    let d2 = biortho_norm(n, p)?.d_squared;
    let target = if m == n { d2 } else { 0.0 };
    Ok((biortho_sum(m, n, p)? - target).abs() / d2.abs().max(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn generic() -> BiorthoParams {
        BiorthoParams::new(0.5, 0.3, 0.4, 0.17, 0.12 / 0.17).unwrap()
    }

    #[test]
    fn validation() {
        assert!(BiorthoParams::new(0.5, 0.3, 0.4, 0.2, 0.61).is_err());
        assert!(BiorthoParams::new(0.5, 0.3, 0.4, 0.0, 0.6).is_err());
        assert!(BiorthoParams::new(1.5, 0.3, 0.4, 0.2, 0.6).is_err());
        assert!(BiorthoParams::new(0.5, 1.3, 0.4, 0.2, 0.6).is_err());
        assert_eq!(
            BiorthoParams::new(0.5, 0.3, 0.4, 0.2, 0.6).unwrap(),
            BiorthoParams::reference()
        );
    }

    #[test]
    fn trivial_values() {
        let p = generic();
        for s in 0..8 {
            assert_eq!(u(0, s, &p).unwrap(), 1.0);
            assert_eq!(v(0, s, &p).unwrap(), 1.0);
            assert_eq!(u(s, 0, &p).unwrap(), 1.0);
        }
        assert_eq!(biortho_weight(0, &p), 1.0);
    }

    #[test]
    fn two_term_expansion() {
        let p = generic();
        let (q, t1, t2, mu1, mu2) = (0.5, p.t1, p.t2, 0.3, 0.4);
        let x = 1.0 / q;
        let term = (1.0 - x) * (1.0 - x) * (1.0 - t1)
            / ((1.0 - q) * (1.0 - t1 / mu1) * (1.0 - t1 / mu2))
            * q
            * q
            / t2;
        assert!((u(1, 1, &p).unwrap() - (1.0 + term)).abs() < 1e-15);
        assert!((u(1, 1, &p).unwrap() - v(1, 1, &p).unwrap()).abs() > 1e-3);
    }

    #[test]
    fn equal_t_makes_v_equal_u() {
        let t = (0.3f64 * 0.4).sqrt();
        let p = BiorthoParams::new(0.5, 0.3, 0.4, t, t).unwrap();
        for n in 0..5 {
            for s in 0..5 {
                assert_eq!(u(n, s, &p).unwrap(), v(n, s, &p).unwrap());
            }
        }
    }

    #[test]
    fn term_count() {
        let p = generic();
        for m in 0..7 {
            for s in 0..7 {
                assert_eq!(u_counted(m, s, &p).unwrap().terms, m.min(s) + 1);
            }
        }
    }

    #[test]
    fn reference_point_poles() {
        let p = BiorthoParams::reference();
        assert!(u(1, 1, &p).is_ok());
        assert!(matches!(u(3, 3, &p), Err(QError::DenominatorPole { .. })));
        assert!(u(0, 5, &p).is_ok());
        assert_eq!(biortho_weight(2, &p), 0.0);
        assert!(!weight_is_nonnegative(&p));
    }

    #[test]
    fn regularized_matches_direct() {
        let p = generic();
        let q = p.q;
        for m in 0..6 {
            for n in 0..6 {
                for s in 0..10 {
                    let direct =
                        u(m, s, &p).unwrap() * v(n, s, &p).unwrap() * biortho_weight(s, &p)
                            / q.powi(s as i32);
                    let reg = biortho_summand(m, n, s, &p).unwrap();
                    assert!(
                        (direct - reg).abs() <= 1e-12 * direct.abs().max(1e-300),
                        "{m} {n} {s}"
                    );
                }
            }
        }
    }

    #[test]
    fn norms_at_reference() {
        let p = BiorthoParams::reference();
        let d: Vec<f64> = (0..4)
            .map(|n| biortho_norm(n, &p).unwrap().d_squared)
            .collect();
        for (got, want) in d.iter().zip([
            2.0 / 3.0,
            -7.0 / 3.0,
            -19.833333333333332,
            -73.38333333333334,
        ]) {
            assert!((got - want).abs() < 1e-12 * want.abs(), "{got} vs {want}");
        }
    }

    #[test]
    fn biorthogonality() {
        for p in [BiorthoParams::reference(), generic()] {
            for m in 0..=8 {
                for n in 0..=8 {
                    let r = biorthogonality_residual(m, n, &p).unwrap();
                    assert!(r < 1e-8, "{p:?} m={m} n={n}: {r}");
                }
            }
        }
    }

    #[test]
    fn self_duality() {
        let p = generic();
        for m in 0..=6 {
            for s in 0..=6 {
                let (a, b) = (u(m, s, &p).unwrap(), u_dual(m, s, &p).unwrap());
                assert!((a - b).abs() < 1e-13 * a.abs().max(1.0), "{m} {s}: {a} {b}");
            }
        }
    }

    #[test]
    fn weight_decays() {
        assert!(weight_decay_index(&generic()).unwrap() < 100);
        assert_eq!(weight_decay_index(&BiorthoParams::reference()).unwrap(), 2);
    }
}
