//! Coherent states: normalized eigenvectors of the annihilation operator.

use crate::charlier::{charlier_explicit_scaled, QContext};
use crate::error::{QError, Result};
use crate::oscillator::{wavefunction, GridFunction};
use crate::qcore::{
    e_number, qpochhammer_infinite, qpochhammer_infinite_real, qpochhammer_scaled, CNum,
    DEFAULT_PRODUCT_TOL,
};

/// Series coefficients `|alpha|^n / sqrt(e_n!)` are dropped below this.
/// Far out on the lattice the state is tiny while individual `psi_n` are
/// not, so the cut has to sit well under `ctx.tol`.
pub const SERIES_COEFF_CUTOFF: f64 = 1e-22;
const SERIES_CAP: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherentParams {
    alpha: CNum,
    ctx: QContext,
}

impl CoherentParams {
    /// Requires `(1-q)|alpha|^2 < 1`.
    pub fn new(alpha: CNum, ctx: QContext) -> Result<Self> {
        if !(alpha.re.is_finite() && alpha.im.is_finite()) {
            return Err(QError::invalid("alpha", "non-finite"));
        }
        let r = (1.0 - ctx.q()) * alpha.norm_sqr();
        if r >= 1.0 {
            return Err(QError::invalid(
                "alpha",
                format!("(1-q)|alpha|^2 = {r} must be below 1"),
            ));
        }
        Ok(CoherentParams { alpha, ctx })
    }

    pub fn alpha(&self) -> CNum {
        self.alpha
    }

    pub fn ctx(&self) -> &QContext {
        &self.ctx
    }

    /// `t = alpha sqrt(mu (1-q))`.
    pub fn t(&self) -> CNum {
        self.alpha * (self.ctx.mu() * (1.0 - self.ctx.q())).sqrt()
    }

    /// `f_alpha = ((1-q)|alpha|^2; q)_inf^{1/2}`.
    pub fn normalization(&self) -> f64 {
        let q = self.ctx.q();
        qpochhammer_infinite_real((1.0 - q) * self.alpha.norm_sqr(), q).sqrt()
    }
}

/// `f_alpha sum_n alpha^n psi_n / sqrt(e_n!)`, truncated once the
/// coefficient drops below [`SERIES_COEFF_CUTOFF`].
pub fn coherent_series(p: &CoherentParams) -> Result<GridFunction> {
    let ctx = p.ctx;
    let q = ctx.q();
    let mut acc = vec![CNum::new(0.0, 0.0); ctx.len()];
    let mut coef = CNum::new(p.normalization(), 0.0);
    let mut n = 0;
    loop {
        let psi = wavefunction(n, &ctx);
        for (a, v) in acc.iter_mut().zip(psi.values()) {
            *a += coef * v.re;
        }
        n += 1;
        coef *= p.alpha / e_number(n, q).sqrt();
        if coef.norm() < SERIES_COEFF_CUTOFF * p.normalization() {
            break;
        }
        if n >= SERIES_CAP {
            return Err(QError::NoConvergence { cap: SERIES_CAP });
        }
    }
    GridFunction::from_values(&ctx, acc)
}

/// Checks `|t| < 1` and `|q t / mu| < 1`, the region where the product form
/// of the generating function holds.
pub fn check_closed_domain(t: CNum, ctx: &QContext) -> Result<()> {
    if t.norm() >= 1.0 {
        return Err(QError::Domain(format!("|t| = {} is not below 1", t.norm())));
    }
    let r = (t * ctx.q() / ctx.mu()).norm();
    if r >= 1.0 {
        return Err(QError::Domain(format!("|q t / mu| = {r} is not below 1")));
    }
    Ok(())
}

/// Product form of the coherent state:
///
/// ```text
/// |alpha>(s) = f_alpha (qtx/mu; q)_inf / (t, qt/mu; q)_inf * psi_0(s),  x = q^{-s}
/// ```
///
/// evaluated as `f_alpha sqrt(rho(0) mu^s / (q, mu; q)_s) prod_{m<s} (q^m - beta) / (t; q)_inf`
/// with `beta = alpha sqrt((1-q)/mu)`, which is the same expression after
/// cancelling `(qt/mu; q)_inf` and pulling `q^{s(s-1)/2}` into the product.
pub fn coherent_closed(p: &CoherentParams) -> Result<GridFunction> {
    let ctx = p.ctx;
    let (q, mu) = (ctx.q(), ctx.mu());
    let t = p.t();
    check_closed_domain(t, &ctx)?;
    let beta = p.alpha * ((1.0 - q) / mu).sqrt();
    let rho0 = qpochhammer_infinite_real(mu, q);
    let mut val =
        p.normalization() * rho0.sqrt() / qpochhammer_infinite(t, q, DEFAULT_PRODUCT_TOL)?;
    let mut out = Vec::with_capacity(ctx.len());
    out.push(val);
    let mut qm = 1.0; // q^{s-1}
    for _ in 1..ctx.len() {
        let qs = qm * q;
        val *= (mu / ((1.0 - qs) * (1.0 - mu * qm))).sqrt() * (qm - beta);
        out.push(val);
        qm = qs;
    }
    GridFunction::from_values(&ctx, out)
}

/// `<alpha|beta> = ((1-q)|alpha|^2, (1-q)|beta|^2; q)_inf^{1/2} / ((1-q) conj(alpha) beta; q)_inf`,
/// i.e. `sum_s conj(|alpha>(s)) |beta>(s)`.
pub fn coherent_overlap(alpha: CNum, beta: CNum, ctx: &QContext) -> Result<CNum> {
    let pa = CoherentParams::new(alpha, *ctx)?;
    let pb = CoherentParams::new(beta, *ctx)?;
    let q = ctx.q();
    let den = qpochhammer_infinite(alpha.conj() * beta * (1.0 - q), q, DEFAULT_PRODUCT_TOL)?;
    Ok(pa.normalization() * pb.normalization() / den)
}

/// Partial sum `sum_{n<=n_max} t^n c_n(q^{-s}) / (q;q)_n` of the
/// generating function.
pub fn generating_partial_sum(t: CNum, s: usize, n_max: usize, ctx: &QContext) -> CNum {
    let q = ctx.q();
    let mut sum = CNum::new(0.0, 0.0);
    let mut tn = CNum::new(1.0, 0.0);
    for n in 0..=n_max {
        let c = charlier_explicit_scaled(n, s, ctx) / qpochhammer_scaled(q, q, n);
        sum += tn * c.to_f64();
        tn *= t;
    }
    sum
}

/// Generating function summed until terms stay below `1e-17` of the sum.
pub fn generating_series(t: CNum, s: usize, ctx: &QContext) -> Result<CNum> {
    check_closed_domain(t, ctx)?;
    let q = ctx.q();
    let mut sum = CNum::new(0.0, 0.0);
    let mut tn = CNum::new(1.0, 0.0);
    let mut quiet = 0;
    for n in 0..SERIES_CAP {
        let c = charlier_explicit_scaled(n, s, ctx) / qpochhammer_scaled(q, q, n);
        let term = tn * c.to_f64();
        sum += term;
        tn *= t;
        if term.norm() <= 1e-17 * sum.norm() {
            quiet += 1;
            if quiet >= 5 {
                return Ok(sum);
            }
        } else {
            quiet = 0;
        }
    }
    Err(QError::NoConvergence { cap: SERIES_CAP })
}

/// Closed form `(q t x / mu; q)_inf / (t, q t / mu; q)_inf` with `x = q^{-s}`.
pub fn generating_closed(t: CNum, s: usize, ctx: &QContext) -> Result<CNum> {
    check_closed_domain(t, ctx)?;
    let (q, mu) = (ctx.q(), ctx.mu());
    let x = ctx.lattice(s).x();
    let num = qpochhammer_infinite(t * q * x / mu, q, DEFAULT_PRODUCT_TOL)?;
    let den = qpochhammer_infinite(t, q, DEFAULT_PRODUCT_TOL)?
        * qpochhammer_infinite(t * q / mu, q, DEFAULT_PRODUCT_TOL)?;
    Ok(num / den)
}

/// Largest pointwise relative difference over entries where either side
/// exceeds `floor` in magnitude.
pub fn relative_gap(f: &GridFunction, g: &GridFunction, floor: f64) -> Result<f64> {
    if f.ctx() != g.ctx() {
        return Err(QError::ContextMismatch);
    }
    Ok(f.values()
        .iter()
        .zip(g.values())
        .filter_map(|(a, b)| {
            let m = a.norm().max(b.norm());
            (m > floor).then(|| (a - b).norm() / m)
        })
        .fold(0.0, f64::max))
}

/// `sup_s |(a f)(s) - alpha f(s)|`.
pub fn eigen_residual(state: &GridFunction, alpha: CNum) -> f64 {
    let af = crate::oscillator::apply_annihilation(state);
    af.sub(&state.scale(alpha))
        .expect("same context")
        .sup_norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oscillator::inner_product;

    fn ctx() -> QContext {
        QContext::default()
    }

    fn c(re: f64, im: f64) -> CNum {
        CNum::new(re, im)
    }

    #[test]
    fn params_validation() {
        assert!(CoherentParams::new(c(1.5, 0.0), ctx()).is_err());
        assert!(CoherentParams::new(c(1.4, 0.0), ctx()).is_ok());
        assert!(CoherentParams::new(c(f64::NAN, 0.0), ctx()).is_err());
    }

    #[test]
    fn vacuum() {
        let p = CoherentParams::new(c(0.0, 0.0), ctx()).unwrap();
        let psi0 = wavefunction(0, &ctx());
        assert_eq!(coherent_series(&p).unwrap(), psi0);
        let closed = coherent_closed(&p).unwrap();
        assert!(closed.sub(&psi0).unwrap().sup_norm() < 1e-15);
    }

    #[test]
    fn eigenvector_and_norm() {
        let p = CoherentParams::new(c(0.4, 0.2), ctx()).unwrap();
        let st = coherent_series(&p).unwrap();
        assert!(eigen_residual(&st, p.alpha()) < 1e-8);
        let n = inner_product(&st, &st).unwrap();
        assert!((n.re - 1.0).abs() < 1e-8);
    }

    #[test]
    fn series_matches_closed() {
        for a in [c(0.4, 0.2), c(-0.7, 0.5), c(0.0, -0.9), c(0.95, 0.1)] {
            let p = CoherentParams::new(a, ctx()).unwrap();
            let gap = relative_gap(
                &coherent_series(&p).unwrap(),
                &coherent_closed(&p).unwrap(),
                1e-12,
            )
            .unwrap();
            assert!(gap < 1e-9, "alpha={a}: {gap}");
        }
    }

    #[test]
    fn closed_domain_guard() {
        // (1-q)|alpha|^2 < 1 holds but |q t / mu| does not
        let c2 = QContext::new(0.5, 0.05, 60, 1e-10).unwrap();
        let p = CoherentParams::new(c(1.3, 0.0), c2).unwrap();
        assert!(matches!(coherent_closed(&p), Err(QError::Domain(_))));
    }

    #[test]
    fn overlap() {
        let cx = ctx();
        assert!((coherent_overlap(c(0.4, 0.2), c(0.4, 0.2), &cx).unwrap() - 1.0).norm() < 1e-15);
        let f = qpochhammer_infinite_real(0.5 * 0.09, 0.5).sqrt();
        assert!((coherent_overlap(c(0.3, 0.0), c(0.0, 0.0), &cx).unwrap() - f).norm() < 1e-15);

        let (a, b) = (c(0.4, 0.2), c(0.1, -0.5));
        let sa = coherent_series(&CoherentParams::new(a, cx).unwrap()).unwrap();
        let sb = coherent_series(&CoherentParams::new(b, cx).unwrap()).unwrap();
        let numeric = inner_product(&sb, &sa).unwrap();
        let closed = coherent_overlap(a, b, &cx).unwrap();
        assert!((numeric - closed).norm() < 1e-8, "{numeric} vs {closed}");
        assert!(closed.norm() <= 1.0);
    }

    #[test]
    fn generating_function() {
        let cx = ctx();
        let t = c(0.4, 0.0);
        let closed = generating_closed(t, 3, &cx).unwrap();
        let series = generating_series(t, 3, &cx).unwrap();
        assert!((closed - series).norm() < 1e-9 * closed.norm());
        let partial = generating_partial_sum(t, 3, 5, &cx);
        assert!((partial - series).norm() > 1e-6);
        assert!(generating_closed(c(0.7, 0.0), 0, &cx).is_err());
    }
}
