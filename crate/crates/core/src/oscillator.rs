//! q-wave functions on the lattice and the ladder operators acting on them.

use rayon::prelude::*;

use crate::charlier::{charlier_explicit_scaled, norm_squared, weight_rho_scaled, QContext};
use crate::error::{QError, Result};
use crate::qcore::{e_factorial, e_number, CNum};
use crate::scaled::Scaled;

/// A complex function on the lattice `s = 0..=s_max` of its context.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    ctx: QContext,
    values: Vec<CNum>,
}

impl GridFunction {
    pub fn zeros(ctx: &QContext) -> Self {
        GridFunction {
            ctx: *ctx,
            values: vec![CNum::new(0.0, 0.0); ctx.len()],
        }
    }

    pub fn from_values(ctx: &QContext, values: Vec<CNum>) -> Result<Self> {
        if values.len() != ctx.len() {
            return Err(QError::invalid(
                "values",
                format!("expected {} entries, got {}", ctx.len(), values.len()),
            ));
        }
        if values
            .iter()
            .any(|v| !(v.re.is_finite() && v.im.is_finite()))
        {
            return Err(QError::invalid("values", "non-finite entry"));
        }
        Ok(GridFunction { ctx: *ctx, values })
    }

    pub fn from_real(ctx: &QContext, values: Vec<f64>) -> Result<Self> {
        Self::from_values(ctx, values.into_iter().map(|v| CNum::new(v, 0.0)).collect())
    }

    fn from_fn(ctx: &QContext, f: impl Fn(usize) -> CNum) -> Self {
        GridFunction {
            ctx: *ctx,
            values: (0..ctx.len()).map(f).collect(),
        }
    }

    pub fn ctx(&self) -> &QContext {
        &self.ctx
    }

    pub fn values(&self) -> &[CNum] {
        &self.values
    }

    /// Value at `s`, zero outside the lattice.
    pub fn at(&self, s: isize) -> CNum {
        if s < 0 {
            return CNum::new(0.0, 0.0);
        }
        self.values
            .get(s as usize)
            .copied()
            .unwrap_or(CNum::new(0.0, 0.0))
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, c: CNum) -> GridFunction {
        GridFunction {
            ctx: self.ctx,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    fn zip_with(
        &self,
        other: &GridFunction,
        f: impl Fn(CNum, CNum) -> CNum,
    ) -> Result<GridFunction> {
        if self.ctx != other.ctx {
            return Err(QError::ContextMismatch);
        }
        Ok(GridFunction {
            ctx: self.ctx,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &GridFunction) -> Result<GridFunction> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        self.zip_with(other, |a, b| a - b)
    }

    /// `sum_i c_i f_i`; all terms must share one context.
    pub fn combination(ctx: &QContext, terms: &[(CNum, &GridFunction)]) -> Result<GridFunction> {
        terms
            .iter()
            .try_fold(GridFunction::zeros(ctx), |acc, (c, f)| {
                acc.add(&f.scale(*c))
            })
    }
}

/// `d_n^2 = (q;q)_n / mu^n`, the squared norm of `c_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormConstant {
    pub n: usize,
    pub d_squared: f64,
}

impl NormConstant {
    pub fn new(n: usize, ctx: &QContext) -> Self {
        NormConstant {
            n,
            d_squared: norm_squared(n, ctx).to_f64(),
        }
    }
}

/// `sqrt(rho(s) q^{-s})`, the factor that turns `c_n / d_n` into `psi_n`.
fn lattice_amplitude(s: usize, ctx: &QContext) -> Scaled {
    (weight_rho_scaled(s, ctx) / Scaled::new(ctx.q()).powi(s as u32)).sqrt()
}

/// `psi_n(s) = d_n^{-1} q^{-s/2} rho(s)^{1/2} c_n(q^{-s})` at one site (any
/// `s`, on or beyond the lattice).
pub fn wave_value(n: usize, s: usize, ctx: &QContext) -> f64 {
    let inv_d = Scaled::ONE / norm_squared(n, ctx).sqrt();
    (lattice_amplitude(s, ctx) * inv_d * charlier_explicit_scaled(n, s, ctx)).to_f64()
}

pub fn wavefunction(n: usize, ctx: &QContext) -> GridFunction {
    let inv_d = Scaled::ONE / norm_squared(n, ctx).sqrt();
    GridFunction::from_fn(ctx, |s| {
        let v = lattice_amplitude(s, ctx) * inv_d * charlier_explicit_scaled(n, s, ctx);
        CNum::new(v.to_f64(), 0.0)
    })
}

/// Precomputed `psi_0..=psi_{n_max}` for one context; immutable once built.
#[derive(Debug, Clone)]
pub struct WaveBasis {
    ctx: QContext,
    funcs: Vec<GridFunction>,
}

impl WaveBasis {
    pub fn new(ctx: &QContext, n_max: usize) -> Self {
        let funcs = (0..=n_max)
            .into_par_iter()
            .map(|n| wavefunction(n, ctx))
            .collect();
        WaveBasis { ctx: *ctx, funcs }
    }

    pub fn ctx(&self) -> &QContext {
        &self.ctx
    }

    pub fn n_max(&self) -> usize {
        self.funcs.len() - 1
    }

    pub fn get(&self, n: usize) -> &GridFunction {
        &self.funcs[n]
    }

    pub fn iter(&self) -> impl Iterator<Item = &GridFunction> {
        self.funcs.iter()
    }
}

/// Smallest `S` beyond which `psi_n(s)^2 < eps` for every `n <= n_max`
/// (ten consecutive sites past the oscillatory region are required).
pub fn wave_tail_index(ctx: &QContext, n_max: usize, eps: f64) -> usize {
    let mut last_big = 0;
    let mut quiet = 0;
    let mut s = 0;
    loop {
        let big = (0..=n_max).any(|n| wave_value(n, s, ctx).powi(2) >= eps);
        if big {
            last_big = s;
            quiet = 0;
        } else if s > n_max {
            quiet += 1;
            if quiet >= 10 {
                return last_big + 1;
            }
        }
        s += 1;
    }
}

fn hop_up(s: usize, ctx: &QContext) -> f64 {
    // sqrt((1 - q^{s+1})(1 - mu q^s))
    let qs = ctx.q().powi(s as i32);
    ((1.0 - qs * ctx.q()) * (1.0 - ctx.mu() * qs)).sqrt()
}

/// `(a f)(s) = (1-q)^{-1/2} [mu^{1/2} q^s f(s) - sqrt((1-q^{s+1})(1-mu q^s)) f(s+1)]`,
/// with `f(s_max + 1) = 0`.
pub fn apply_annihilation(f: &GridFunction) -> GridFunction {
    let ctx = *f.ctx();
    let pre = (1.0 - ctx.q()).powf(-0.5);
    let smu = ctx.mu().sqrt();
    GridFunction::from_fn(&ctx, |s| {
        let qs = ctx.q().powi(s as i32);
        (f.at(s as isize) * (smu * qs) - f.at(s as isize + 1) * hop_up(s, &ctx)) * pre
    })
}

/// `(a^+ f)(s) = (1-q)^{-1/2} [mu^{1/2} q^s f(s) - sqrt((1-q^s)(1-mu q^{s-1})) f(s-1)]`.
/// At `s = 0` the shift coefficient vanishes and `f(-1)` is never read.
pub fn apply_creation(f: &GridFunction) -> GridFunction {
    let ctx = *f.ctx();
    let pre = (1.0 - ctx.q()).powf(-0.5);
    let smu = ctx.mu().sqrt();
    GridFunction::from_fn(&ctx, |s| {
        let qs = ctx.q().powi(s as i32);
        let diag = f.at(s as isize) * (smu * qs);
        if s == 0 {
            diag * pre
        } else {
            (diag - f.at(s as isize - 1) * hop_up(s - 1, &ctx)) * pre
        }
    })
}

/// `H = a^+ a`.
pub fn apply_hamiltonian(f: &GridFunction) -> GridFunction {
    apply_creation(&apply_annihilation(f))
}

/// The Hamiltonian written out as a second-order difference operator:
///
/// ```text
/// H = (1-q)^{-1} [ mu q^{2s} + (1-q^s)(1-mu q^{s-1})
///       - mu^{1/2} q^s     sqrt((1-q^{s+1})(1-mu q^s))   e^{+d/ds}
///       - mu^{1/2} q^{s-1} sqrt((1-q^s)(1-mu q^{s-1}))   e^{-d/ds} ]
/// ```
///
/// The last square root covers both factors; that reading is the one that
/// makes `H = a^+ a` hold.
pub fn hamiltonian_direct(f: &GridFunction) -> GridFunction {
    let ctx = *f.ctx();
    let (q, mu) = (ctx.q(), ctx.mu());
    let smu = mu.sqrt();
    GridFunction::from_fn(&ctx, |s| {
        let qs = q.powi(s as i32);
        let si = s as isize;
        let diag = mu * qs * qs + (1.0 - qs) * (1.0 - mu * qs / q);
        let up = smu * qs * ((1.0 - qs * q) * (1.0 - mu * qs)).sqrt();
        let down = smu * qs / q * ((1.0 - qs) * (1.0 - mu * qs / q)).sqrt();
        let mut v = f.at(si) * diag - f.at(si + 1) * up;
        if s > 0 {
            v -= f.at(si - 1) * down;
        }
        v / (1.0 - q)
    })
}

/// `[a, a^+] f = a a^+ f - a^+ a f`.
pub fn commutator(f: &GridFunction) -> GridFunction {
    let aad = apply_annihilation(&apply_creation(f));
    let ada = apply_hamiltonian(f);
    aad.sub(&ada).expect("same context")
}

/// `(a a^+ - q a^+ a) f - f`.
pub fn q_commutator_residual(f: &GridFunction) -> GridFunction {
    let q = f.ctx().q();
    let aad = apply_annihilation(&apply_creation(f));
    let ada = apply_hamiltonian(f);
    GridFunction::from_fn(f.ctx(), |s| aad.values[s] - ada.values[s] * q - f.values[s])
}

/// `|log_q(1 - (1-q) e_n) - n|`: the number operator
/// `N = log_q(1 - (1-q) H)` evaluated on the spectrum of `H`.
pub fn number_operator_eigencheck(n: usize, q: f64) -> Result<f64> {
    crate::qcore::check_base(q)?;
    let arg = 1.0 - (1.0 - q) * e_number(n, q);
    if arg.is_nan() || arg <= 0.0 {
        return Err(QError::Domain(format!(
            "1 - (1-q) e_{n} = {arg} is not positive"
        )));
    }
    Ok((arg.ln() / q.ln() - n as f64).abs())
}

/// Spectral number operator `N f = sum_n n <f, psi_n> psi_n` over the basis.
pub fn apply_number_operator(f: &GridFunction, basis: &WaveBasis) -> Result<GridFunction> {
    let mut out = GridFunction::zeros(f.ctx());
    for (n, psi) in basis.iter().enumerate().skip(1) {
        let c = inner_product(f, psi)?;
        if c.norm() < f.ctx().tol() * 1e-6 {
            continue;
        }
        out = out.add(&psi.scale(c * n as f64))?;
    }
    Ok(out)
}

/// Sup-norm residuals of `[a, N] psi_n = a psi_n` and
/// `[N, a^+] psi_n = a^+ psi_n` with the spectral `N`. Needs `n + 1` in the
/// basis.
pub fn number_commutator_residuals(n: usize, basis: &WaveBasis) -> Result<(f64, f64)> {
    if n + 1 > basis.n_max() {
        return Err(QError::invalid(
            "n",
            format!("basis holds psi_0..psi_{}", basis.n_max()),
        ));
    }
    let psi = basis.get(n);
    let a_psi = apply_annihilation(psi);
    let ad_psi = apply_creation(psi);
    let n_psi = apply_number_operator(psi, basis)?;

    let lhs = apply_annihilation(&n_psi).sub(&apply_number_operator(&a_psi, basis)?)?;
    let r1 = lhs.sub(&a_psi)?.sup_norm();

    let lhs = apply_number_operator(&ad_psi, basis)?.sub(&apply_creation(&n_psi))?;
    let r2 = lhs.sub(&ad_psi)?.sup_norm();
    Ok((r1, r2))
}

/// `<f, g> = sum_s f(s) conj(g(s))`.
pub fn inner_product(f: &GridFunction, g: &GridFunction) -> Result<CNum> {
    if f.ctx != g.ctx {
        return Err(QError::ContextMismatch);
    }
    Ok(f.values
        .iter()
        .zip(&g.values)
        .map(|(a, b)| a * b.conj())
        .sum())
}

/// `psi_n = (e_n!)^{-1/2} (a^+)^n psi_0`.
pub fn ladder_construct(n: usize, ctx: &QContext) -> GridFunction {
    let mut f = wavefunction(0, ctx);
    for _ in 0..n {
        f = apply_creation(&f);
    }
    f.scale(CNum::new(e_factorial(n, ctx.q()).powf(-0.5), 0.0))
}

/// `e_n^{1/2} psi_{n-1}` assembled from the lowering identity
/// `c_{n-1}(x) = mu q^s (c_n(q^{-s-1}) - c_n(q^{-s})) / (q^n - 1)`.
/// Numerically the same grid function as `a psi_n`.
pub fn lowering_via_difference(n: usize, ctx: &QContext) -> Result<GridFunction> {
    if n == 0 {
        return Err(QError::invalid("n", "lowering needs n >= 1"));
    }
    let q = ctx.q();
    let coef = Scaled::new(e_number(n, q).sqrt() * ctx.mu() / (q.powi(n as i32) - 1.0))
        / norm_squared(n - 1, ctx).sqrt();
    Ok(GridFunction::from_fn(ctx, |s| {
        let diff = charlier_explicit_scaled(n, s + 1, ctx) - charlier_explicit_scaled(n, s, ctx);
        let v = coef * lattice_amplitude(s, ctx) * Scaled::new(q).powi(s as u32) * diff;
        CNum::new(v.to_f64(), 0.0)
    }))
}

/// `e_{n+1}^{1/2} psi_{n+1}` assembled from the raising identity
/// `rho(s) c_{n+1}(x) = q^s nabla[rho(s) c_n(x)]` (with `rho(-1) = 0`).
pub fn raising_via_difference(n: usize, ctx: &QContext) -> GridFunction {
    let q = ctx.q();
    let coef = Scaled::new(e_number(n + 1, q).sqrt()) / norm_squared(n + 1, ctx).sqrt();
    GridFunction::from_fn(ctx, |s| {
        let rho = weight_rho_scaled(s, ctx);
        let mut nabla = rho * charlier_explicit_scaled(n, s, ctx);
        if s > 0 {
            nabla = nabla - weight_rho_scaled(s - 1, ctx) * charlier_explicit_scaled(n, s - 1, ctx);
        }
        let v = coef * lattice_amplitude(s, ctx) * Scaled::new(q).powi(s as u32) * nabla / rho;
        CNum::new(v.to_f64(), 0.0)
    })
}
