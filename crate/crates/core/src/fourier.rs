//! The kernel `K_t(s, p) = sum_n t^n psi_n(s) psi_n(p)` and the discrete
//! q-Fourier transform it defines at `t = i`.

use rayon::prelude::*;

use crate::charlier::{charlier_explicit_scaled, QContext};
use crate::error::{QError, Result};
use crate::oscillator::{wave_value, GridFunction};
use crate::qcore::{
    phi32_counted, phi32_sum, qpochhammer_infinite, qpochhammer_infinite_real, qpochhammer_scaled,
    CNum, DEFAULT_PRODUCT_TOL,
};

const SERIES_CAP: usize = 5000;

fn check_t(t: CNum) -> Result<()> {
    if t.re.is_finite() && t.im.is_finite() {
        Ok(())
    } else {
        Err(QError::invalid("t", "non-finite"))
    }
}

fn check_site(s: usize, ctx: &QContext) -> Result<()> {
    if s > ctx.s_max() {
        return Err(QError::invalid(
            "s",
            format!("{s} exceeds s_max = {}", ctx.s_max()),
        ));
    }
    Ok(())
}

/// Sums `t^n psi_n(s) psi_n(p)` until five consecutive terms sit below
/// `1e-17` of the larger of the running sum and the largest term seen.
///
/// The terms decay roughly like `(mu |t|)^n`, so `|mu t| < 1` is required.
pub fn kernel_series(t: CNum, s: usize, p: usize, ctx: &QContext) -> Result<CNum> {
    check_t(t)?;
    check_site(s, ctx)?;
    check_site(p, ctx)?;
    if (t * ctx.mu()).norm() >= 1.0 {
        return Err(QError::Domain(format!(
            "|mu t| = {} is not below 1",
            (t * ctx.mu()).norm()
        )));
    }
    let mut sum = CNum::new(0.0, 0.0);
    let mut tn = CNum::new(1.0, 0.0);
    let mut biggest: f64 = 0.0;
    let mut quiet = 0;
    for n in 0..SERIES_CAP {
        let term = tn * (wave_value(n, s, ctx) * wave_value(n, p, ctx));
        sum += term;
        biggest = biggest.max(term.norm());
        if term.norm() <= 1e-17 * sum.norm().max(biggest) {
            quiet += 1;
            if quiet >= 5 && n > s.max(p) {
                return Ok(sum);
            }
        } else {
            quiet = 0;
        }
        tn *= t;
        if tn == CNum::new(0.0, 0.0) {
            return Ok(sum);
        }
    }
    Err(QError::NoConvergence { cap: SERIES_CAP })
}

/// `sqrt(mu^s / (q, mu; q)_s) prod_{m<s} (q^m - t)`.
fn edge_factor(t: CNum, s: usize, ctx: &QContext) -> CNum {
    let (q, mu) = (ctx.q(), ctx.mu());
    let mut acc = CNum::new(1.0, 0.0);
    let mut qm = 1.0;
    for _ in 0..s {
        let qm1 = qm * q;
        acc *= (mu / ((1.0 - qm1) * (1.0 - mu * qm))).sqrt() * (qm - t);
        qm = qm1;
    }
    acc
}

/// Closed form of the kernel:
///
/// ```text
/// K_t(s,p) = sqrt(rho(s) rho(p) q^{-s-p}) (t q^{1-s}, t q^{1-p}; q)_inf / (qt, qt, mu t; q)_inf
///            * 3 phi 2(q^{-s}, q^{-p}, mu t; t q^{1-s}, t q^{1-p}; q, q^2 t / mu)
/// ```
///
/// The `(qt; q)_inf` factors cancel against the tails of
/// `(t q^{1-s}; q)_inf`; what is left is a finite product per index.
pub fn kernel_closed(t: CNum, s: usize, p: usize, ctx: &QContext) -> Result<CNum> {
    check_t(t)?;
    check_site(s, ctx)?;
    check_site(p, ctx)?;
    // one argument order for both (s,p) and (p,s), so the result is
    // symmetric bit for bit
    let (s, p) = (s.min(p), s.max(p));
    let (q, mu) = (ctx.q(), ctx.mu());
    let (xs, xp) = (ctx.lattice(s).x(), ctx.lattice(p).x());
    let series = phi32_sum(
        [CNum::new(xs, 0.0), CNum::new(xp, 0.0), t * mu],
        [t * q * xs, t * q * xp],
        q,
        t * q * q / mu,
        Some(s.min(p)),
    )?;
    let rho0 = qpochhammer_infinite_real(mu, q);
    let pre = rho0 * edge_factor(t, s, ctx) * edge_factor(t, p, ctx)
        / qpochhammer_infinite(t * mu, q, DEFAULT_PRODUCT_TOL)?;
    Ok(pre * series.value)
}

/// The right side of the bilinear generating function
///
/// ```text
/// sum_n c_n^{mu1}(x) c_n^{mu2}(y) t^n / (q;q)_n
///   = (qtx/mu1, qty/mu2; q)_inf / (t, qt/mu1, qt/mu2; q)_inf
///     * 3 phi 2(x, y, t; qtx/mu1, qty/mu2; q, q^2 t / (mu1 mu2))
/// ```
///
/// `x` or `y` has to be a negative power of `q` so that the series
/// terminates.
pub fn bilinear_generating(mu1: f64, mu2: f64, x: f64, y: f64, t: CNum, q: f64) -> Result<CNum> {
    check_t(t)?;
    let qp = |a: CNum| qpochhammer_infinite(a, q, DEFAULT_PRODUCT_TOL);
    let den = qp(t)? * qp(t * q / mu1)? * qp(t * q / mu2)?;
    if den.norm() == 0.0 {
        return Err(QError::Domain("vanishing product prefactor".into()));
    }
    let num = qp(t * q * x / mu1)? * qp(t * q * y / mu2)?;
    let upper = [CNum::new(x, 0.0), CNum::new(y, 0.0), t];
    let lower = [t * q * x / mu1, t * q * y / mu2];
    let series = phi32_counted(upper, lower, q, t * q * q / (mu1 * mu2))?;
    if series.terms > 1
        && crate::qcore::negative_q_power(upper[0], q).is_none()
        && crate::qcore::negative_q_power(upper[1], q).is_none()
    {
        return Err(QError::NotTerminating);
    }
    Ok(num / den * series.value)
}

/// `sum_{n<=n_max} c_n^{mu1}(q^{-s}) c_n^{mu2}(q^{-p}) t^n / (q;q)_n`.
pub fn bilinear_partial_sum(
    mu1: f64,
    mu2: f64,
    s: usize,
    p: usize,
    t: CNum,
    q: f64,
    n_max: usize,
) -> Result<CNum> {
    let c1 = QContext::new(q, mu1, s.max(1), 1e-10)?;
    let c2 = QContext::new(q, mu2, p.max(1), 1e-10)?;
    let mut sum = CNum::new(0.0, 0.0);
    let mut tn = CNum::new(1.0, 0.0);
    for n in 0..=n_max {
        let c = charlier_explicit_scaled(n, s, &c1) * charlier_explicit_scaled(n, p, &c2)
            / qpochhammer_scaled(q, q, n);
        sum += tn * c.to_f64();
        tn *= t;
    }
    Ok(sum)
}

/// The left side summed until twenty consecutive terms fall below `1e-17`
/// of the sum.
pub fn bilinear_series(mu1: f64, mu2: f64, s: usize, p: usize, t: CNum, q: f64) -> Result<CNum> {
    if t.norm() >= 1.0 {
        return Err(QError::Domain(format!("|t| = {} is not below 1", t.norm())));
    }
    let c1 = QContext::new(q, mu1, s.max(1), 1e-10)?;
    let c2 = QContext::new(q, mu2, p.max(1), 1e-10)?;
    let mut sum = CNum::new(0.0, 0.0);
    let mut tn = CNum::new(1.0, 0.0);
    let mut quiet = 0;
    for n in 0..SERIES_CAP {
        let c = charlier_explicit_scaled(n, s, &c1) * charlier_explicit_scaled(n, p, &c2)
            / qpochhammer_scaled(q, q, n);
        let term = tn * c.to_f64();
        sum += term;
        tn *= t;
        if term.norm() <= 1e-17 * sum.norm() {
            quiet += 1;
            if quiet >= 20 {
                return Ok(sum);
            }
        } else {
            quiet = 0;
        }
    }
    Err(QError::NoConvergence { cap: SERIES_CAP })
}

/// Dense `K_t(s, p)` on the lattice of one context. Entries come from
/// [`kernel_closed`]; the upper triangle is computed and mirrored.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    t: CNum,
    ctx: QContext,
    entries: Vec<CNum>,
}

impl KernelMatrix {
    pub fn new(t: CNum, ctx: &QContext) -> Result<Self> {
        Self::build(t, ctx, kernel_closed)
    }

    /// Entries from [`kernel_series`]. Needed where the closed form is a
    /// `0 * pole` limit, e.g. `t = q^j` (including `t = 1`).
    pub fn from_series(t: CNum, ctx: &QContext) -> Result<Self> {
        Self::build(t, ctx, kernel_series)
    }

    fn build(
        t: CNum,
        ctx: &QContext,
        entry: impl Fn(CNum, usize, usize, &QContext) -> Result<CNum> + Sync,
    ) -> Result<Self> {
        let n = ctx.len();
        let rows: Vec<Vec<CNum>> = (0..n)
            .into_par_iter()
            .map(|s| {
                (s..n)
                    .map(|p| entry(t, s, p, ctx))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        let mut entries = vec![CNum::new(0.0, 0.0); n * n];
        for (s, row) in rows.into_iter().enumerate() {
            for (k, v) in row.into_iter().enumerate() {
                let p = s + k;
                entries[s * n + p] = v;
                entries[p * n + s] = v;
            }
        }
        Ok(KernelMatrix {
            t,
            ctx: *ctx,
            entries,
        })
    }

    pub fn t(&self) -> CNum {
        self.t
    }

    pub fn ctx(&self) -> &QContext {
        &self.ctx
    }

    pub fn dim(&self) -> usize {
        self.ctx.len()
    }

    pub fn get(&self, s: usize, p: usize) -> CNum {
        self.entries[s * self.dim() + p]
    }

    pub fn row(&self, s: usize) -> &[CNum] {
        let n = self.dim();
        &self.entries[s * n..(s + 1) * n]
    }

    /// Entrywise complex conjugate.
    pub fn conj(&self) -> KernelMatrix {
        KernelMatrix {
            t: self.t.conj(),
            ctx: self.ctx,
            entries: self.entries.iter().map(|v| v.conj()).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &KernelMatrix) -> Result<f64> {
        if self.ctx != other.ctx {
            return Err(QError::ContextMismatch);
        }
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }
}

/// `(K f)(s) = sum_p K(s, p) f(p)`.
pub fn apply_transform(k: &KernelMatrix, f: &GridFunction) -> Result<GridFunction> {
    if k.ctx != *f.ctx() {
        return Err(QError::ContextMismatch);
    }
    let values = (0..k.dim())
        .into_par_iter()
        .map(|s| k.row(s).iter().zip(f.values()).map(|(a, b)| a * b).sum())
        .collect();
    GridFunction::from_values(&k.ctx, values)
}

/// Default distance from `s_max` kept out of unitarity checks. Rows of `K`
/// at `|t| = 1` decay only geometrically in `p`, so half the lattice is held
/// back.
pub fn default_margin(ctx: &QContext) -> usize {
    ctx.s_max() / 2
}

/// `max_{s, s' <= s_max - margin} |sum_p K(s,p) conj(K(s',p)) - delta_{s s'}|`.
pub fn unitarity_residual(k: &KernelMatrix, margin: usize) -> f64 {
    let last = k.ctx.s_max().saturating_sub(margin);
    (0..=last)
        .into_par_iter()
        .map(|s| {
            (0..=last)
                .map(|s2| {
                    let dot: CNum = k
                        .row(s)
                        .iter()
                        .zip(k.row(s2))
                        .map(|(a, b)| a * b.conj())
                        .sum();
                    let target = if s == s2 { 1.0 } else { 0.0 };
                    (dot - target).norm()
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}
