//! q-Charlier polynomials `c_n^mu(x|q)` on the lattice
//! `x = q^{-s}`, their orthogonality weight, and the identities tying them
//! together (Pearson relation, difference-differentiation formulas,
//! classical `q -> 1` limit).

use serde::Serialize;

use crate::dd::Dd;
use crate::error::{QError, Result};
use crate::qcore::{check_base, phi20_sum, qpochhammer_infinite_real, qpochhammer_real, CNum};
use crate::scaled::Scaled;

/// Model parameters plus the lattice truncation and tolerance policy.
///
/// Every evaluation in the crate is relative to one context.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QContext {
    q: f64,
    mu: f64,
    s_max: usize,
    tol: f64,
}

impl QContext {
    pub fn new(q: f64, mu: f64, s_max: usize, tol: f64) -> Result<Self> {
        check_base(q)?;
        if !(mu.is_finite() && mu > 0.0 && mu < 1.0) {
            return Err(QError::invalid("mu", format!("mu outside (0,1): {mu}")));
        }
        if s_max < 1 {
            return Err(QError::invalid("s_max", "must be at least 1"));
        }
        if !(tol.is_finite() && tol > 0.0) {
            return Err(QError::invalid(
                "tol",
                format!("must be positive, got {tol}"),
            ));
        }
        Ok(QContext { q, mu, s_max, tol })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn s_max(&self) -> usize {
        self.s_max
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Number of lattice sites, `s_max + 1`.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.s_max + 1
    }

    pub fn with_s_max(self, s_max: usize) -> Result<Self> {
        QContext::new(self.q, self.mu, s_max, self.tol)
    }

    pub fn with_mu(self, mu: f64) -> Result<Self> {
        QContext::new(self.q, mu, self.s_max, self.tol)
    }

    pub fn lattice(&self, s: usize) -> LatticePoint {
        LatticePoint::new(s, self.q)
    }
}

impl Default for QContext {
    fn default() -> Self {
        QContext {
            q: 0.5,
            mu: 0.3,
            s_max: 60,
            tol: 1e-10,
        }
    }
}

/// A lattice site `s` and its coordinate `x = q^{-s}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticePoint {
    s: usize,
    x: f64,
}

impl LatticePoint {
    /// `x` is built by repeated division so that the explicit form sees the
    /// same value of `q^{-s}` everywhere.
    pub fn new(s: usize, q: f64) -> Self {
        let mut x = 1.0;
        for _ in 0..s {
            x /= q;
        }
        LatticePoint { s, x }
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn x(&self) -> f64 {
        self.x
    }
}

/// `c_n(x)` by the three-term recurrence, run forward from `c_0 = 1`,
/// `c_1 = (mu + q - q x)/mu`.
///
/// The recurrence has a parasitic solution growing like `(q/mu)^n`, which
/// dominates at small `s` when `q > mu`; the arithmetic is carried in
/// double-double so that the amplified rounding stays below `1e-14` for the
/// parameter ranges the crate targets.
pub fn charlier_recurrence(n: usize, x: f64, ctx: &QContext) -> f64 {
    charlier_recurrence_all(n, x, ctx)[n]
}

/// `[c_0(x), ..., c_{n_max}(x)]` from one recurrence run.
pub fn charlier_recurrence_all(n_max: usize, x: f64, ctx: &QContext) -> Vec<f64> {
    let one = Dd::new(1.0);
    let (q, mu, x) = (Dd::new(ctx.q), Dd::new(ctx.mu), Dd::new(x));
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(1.0);
    if n_max == 0 {
        return out;
    }
    let mut prev = one;
    let mut cur = (mu + q - q * x) / mu;
    out.push(cur.to_f64());
    let mut qn = q; // q^n at step n
    for _ in 1..n_max {
        let qn1 = qn * q;
        let a = mu + q - qn1 * x;
        let b = q * (one - qn);
        let next = (a * cur - b * prev) / mu;
        out.push(next.to_f64());
        prev = cur;
        cur = next;
        qn = qn1;
    }
    out
}

/// `c_n(x) = 2 phi 0(q^{-n}, x; -; q, q^{n+1}/mu)`, summed over exactly
/// `min(n, s) + 1` terms.
pub fn charlier_explicit(n: usize, pt: LatticePoint, ctx: &QContext) -> f64 {
    let a = LatticePoint::new(n, ctx.q).x;
    let z = ctx.q.powi(n as i32 + 1) / ctx.mu;
    phi20_sum(
        CNum::new(a, 0.0),
        CNum::new(pt.x, 0.0),
        ctx.q,
        CNum::new(z, 0.0),
        n.min(pt.s),
    )
    .re
}

/// The explicit form with an extended exponent, usable where `c_n(q^{-s})`
/// leaves the `f64` range (large `n` and `s`).
pub fn charlier_explicit_scaled(n: usize, s: usize, ctx: &QContext) -> Scaled {
    let q = ctx.q;
    let a = LatticePoint::new(n, q).x;
    let x = LatticePoint::new(s, q).x;
    let z = q.powi(n as i32 + 1) / ctx.mu;
    let mut term = Scaled::ONE;
    let mut sum = Scaled::ONE;
    let mut qk = 1.0;
    for _ in 0..n.min(s) {
        let r = (1.0 - a * qk) * (1.0 - x * qk) / (1.0 - qk * q) * (-z / qk);
        term = term.mul_f64(r);
        sum = sum + term;
        qk *= q;
    }
    sum
}

/// `rho(s) = (mu;q)_inf mu^s q^{s^2} / (q, mu; q)_s`, carried with an
/// extended exponent (built from the ratio `rho(s+1)/rho(s)`).
pub fn weight_rho_scaled(s: usize, ctx: &QContext) -> Scaled {
    let (q, mu) = (ctx.q, ctx.mu);
    let mut acc = Scaled::new(qpochhammer_infinite_real(mu, q));
    let mut qj = 1.0;
    for _ in 0..s {
        acc = acc.mul_f64(mu * qj * qj * q / ((1.0 - qj * q) * (1.0 - mu * qj)));
        qj *= q;
    }
    acc
}

/// `rho(s)` as an `f64`; underflows to zero far out on the lattice, use
/// [`weight_rho_scaled`] when that matters.
pub fn weight_rho(s: usize, ctx: &QContext) -> f64 {
    weight_rho_scaled(s, ctx).to_f64()
}

/// The alternative product form
/// `rho(s) = (q;q)_inf^{-1} (q^{s+1}, mu q^s; q)_inf mu^s q^{s^2}`.
pub fn weight_rho_product_form(s: usize, ctx: &QContext) -> Scaled {
    let (q, mu) = (ctx.q, ctx.mu);
    let qs = q.powi(s as i32);
    let inf = qpochhammer_infinite_real(qs * q, q) * qpochhammer_infinite_real(mu * qs, q)
        / qpochhammer_infinite_real(q, q);
    let qs2 = Scaled::new(q).powi((s * s) as u32);
    Scaled::new(inf) * Scaled::new(mu).powi(s as u32) * qs2
}

/// `d_n^2 = (q;q)_n / mu^n`.
pub fn norm_squared(n: usize, ctx: &QContext) -> Scaled {
    Scaled::new(qpochhammer_real(ctx.q, ctx.q, n)) / Scaled::new(ctx.mu).powi(n as u32)
}

/// `sigma(s) = (1 - q^{-s})(mu - q^{1-s})`.
pub fn sigma(s: usize, ctx: &QContext) -> f64 {
    let x = LatticePoint::new(s, ctx.q).x;
    (1.0 - x) * (ctx.mu - ctx.q * x)
}

/// `sigma(s+1) rho(s+1) - mu rho(s)`, the Pearson equation with
/// `sigma + tau nabla x_1 = mu` substituted. Vanishes identically.
pub fn pearson_residual(s: usize, ctx: &QContext) -> Scaled {
    weight_rho_scaled(s + 1, ctx).mul_f64(sigma(s + 1, ctx))
        - weight_rho_scaled(s, ctx).mul_f64(ctx.mu)
}

/// Classical Charlier polynomial `c_n^mu(s) = 2F0(-n, -s; -; -1/mu)`.
pub fn charlier_classical(n: usize, s: usize, mu: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 0..n.min(s) {
        let k = k as f64;
        term *= (k - n as f64) * (k - s as f64) / (k + 1.0) * (-1.0 / mu);
        sum += term;
    }
    sum
}

/// `|c_n^{(1-q) mu}(q^{-s}|q) - c_n^mu(s)|`, which tends to zero as `q -> 1`.
pub fn classical_limit_error(n: usize, s: usize, mu: f64, q: f64) -> Result<f64> {
    let ctx = QContext::new(q, (1.0 - q) * mu, s.max(1), 1e-10)?;
    Ok((charlier_explicit(n, ctx.lattice(s), &ctx) - charlier_classical(n, s, mu)).abs())
}

fn relative_spread(terms: &[Scaled], residual: Scaled) -> f64 {
    let scale = terms
        .iter()
        .map(|t| t.abs())
        .fold(Scaled::ZERO, |a, b| if b > a { b } else { a });
    if scale.is_zero() {
        0.0
    } else {
        residual.abs().ratio(scale)
    }
}

/// Relative residual of `mu q^s Delta c_n(x) = (q^n - 1) c_{n-1}(x)`,
/// normalised by the largest of the three terms.
pub fn diff_lowering_residual(n: usize, s: usize, ctx: &QContext) -> Result<f64> {
    if n == 0 {
        return Err(QError::invalid("n", "lowering identity needs n >= 1"));
    }
    if s + 1 > ctx.s_max {
        return Err(QError::invalid(
            "s",
            format!("forward difference needs s + 1 <= s_max = {}", ctx.s_max),
        ));
    }
    let qs = Scaled::new(ctx.q).powi(s as u32).mul_f64(ctx.mu);
    let t_next = qs * charlier_explicit_scaled(n, s + 1, ctx);
    let t_here = qs * charlier_explicit_scaled(n, s, ctx);
    let t_low = charlier_explicit_scaled(n - 1, s, ctx).mul_f64(ctx.q.powi(n as i32) - 1.0);
    Ok(relative_spread(
        &[t_next, t_here, t_low],
        t_next - t_here - t_low,
    ))
}

/// Relative residual of `q^s nabla[rho(s) c_n(x)] = rho(s) c_{n+1}(x)`, with
/// `rho(-1) = 0` at the boundary.
pub fn diff_raising_residual(n: usize, s: usize, ctx: &QContext) -> Result<f64> {
    if s > ctx.s_max {
        return Err(QError::invalid(
            "s",
            format!("outside lattice 0..={}", ctx.s_max),
        ));
    }
    let qs = Scaled::new(ctx.q).powi(s as u32);
    let rho = weight_rho_scaled(s, ctx);
    let t_here = qs * rho * charlier_explicit_scaled(n, s, ctx);
    let t_prev = if s == 0 {
        Scaled::ZERO
    } else {
        qs * weight_rho_scaled(s - 1, ctx) * charlier_explicit_scaled(n, s - 1, ctx)
    };
    let t_up = rho * charlier_explicit_scaled(n + 1, s, ctx);
    Ok(relative_spread(
        &[t_here, t_prev, t_up],
        t_here - t_prev - t_up,
    ))
}
