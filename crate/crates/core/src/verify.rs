//! Verification suites: each check evaluates one identity numerically and
//! records its largest residual against a tolerance.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::biortho::{self, BiorthoParams};
use crate::charlier::{
    charlier_explicit, charlier_recurrence_all, classical_limit_error, diff_lowering_residual,
    diff_raising_residual, pearson_residual, weight_rho_product_form, weight_rho_scaled,
    LatticePoint, QContext,
};
use crate::coherent::{self, CoherentParams};
use crate::error::{QError, Result};
use crate::fourier::{self, KernelMatrix};
use crate::oscillator::{self, inner_product, GridFunction, WaveBasis};
use crate::qcore::{e_number, CNum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Text,
    Json,
    Csv,
}

/// Parameters shared by all suites.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub q: f64,
    pub mu: f64,
    pub n_max: usize,
    pub s_max: usize,
    pub tol: f64,
    pub output_format: OutputFormat,
    pub seed: u64,
    /// Fill `runtime_ms`; off by default so that reports are reproducible
    /// byte for byte.
    pub timings: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            q: 0.5,
            mu: 0.3,
            n_max: 20,
            s_max: 60,
            tol: 1e-10,
            output_format: OutputFormat::Text,
            seed: 1,
            timings: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<QContext> {
        if self.n_max < 1 {
            return Err(QError::invalid("n_max", "must be at least 1"));
        }
        QContext::new(self.q, self.mu, self.s_max, self.tol)
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub check_name: String,
    pub parameters: BTreeMap<String, String>,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub runtime_ms: u64,
}

type Params = Vec<(&'static str, String)>;

fn report(
    cfg: &RunConfig,
    name: &str,
    tolerance: f64,
    params: Params,
    body: impl FnOnce() -> Result<f64>,
) -> VerificationReport {
    let start = Instant::now();
    let outcome = body();
    let elapsed = start.elapsed().as_millis() as u64;
    let mut parameters: BTreeMap<String, String> = params
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
    let max_residual = match outcome {
        Ok(r) => r,
        Err(e) => {
            parameters.insert("error".into(), e.to_string());
            f64::INFINITY
        }
    };
    VerificationReport {
        check_name: name.to_string(),
        parameters,
        max_residual,
        tolerance,
        pass: max_residual < tolerance,
        runtime_ms: if cfg.timings { elapsed } else { 0 },
    }
}

fn ctx_params(ctx: &QContext) -> Params {
    vec![
        ("q", ctx.q().to_string()),
        ("mu", ctx.mu().to_string()),
        ("s_max", ctx.s_max().to_string()),
    ]
}

fn with(mut base: Params, extra: Params) -> Params {
    base.extend(extra);
    base
}

fn sup_dist(f: &GridFunction, g: &GridFunction) -> Result<f64> {
    Ok(f.sub(g)?.sup_norm())
}

fn real(x: f64) -> CNum {
    CNum::new(x, 0.0)
}

fn random_span(basis: &WaveBasis, upto: usize, rng: &mut ChaCha8Rng) -> Result<GridFunction> {
    let terms: Vec<(CNum, &GridFunction)> = (0..=upto)
        .map(|n| {
            (
                CNum::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                basis.get(n),
            )
        })
        .collect();
    GridFunction::combination(basis.ctx(), &terms)
}

/// A suite: its CLI name, the identities it checks, and its runner.
pub struct Suite {
    pub name: &'static str,
    pub identities: &'static str,
    run: fn(&RunConfig, &QContext) -> Vec<VerificationReport>,
}

pub const SUITES: &[Suite] = &[
    Suite {
        name: "orthogonality",
        identities: "sum_s psi_m psi_n = delta_mn; sum_s rho(s) q^-s = 1; product form of rho; rho > 0",
        run: orthogonality,
    },
    Suite {
        name: "recurrence",
        identities: "three-term recurrence = explicit 2phi0 form of c_n",
        run: recurrence,
    },
    Suite {
        name: "pearson",
        identities: "sigma(s+1) rho(s+1) = mu rho(s)",
        run: pearson,
    },
    Suite {
        name: "ladder",
        identities: "a psi_n = e_n^1/2 psi_n-1; a+ psi_n = e_n+1^1/2 psi_n+1; psi_n = (e_n!)^-1/2 (a+)^n psi_0; <af,g> = <f,a+g>",
        run: ladder,
    },
    Suite {
        name: "hamiltonian",
        identities: "H = a+ a; H psi_n = e_n psi_n; a+ a = written-out difference operator",
        run: hamiltonian,
    },
    Suite {
        name: "commutator",
        identities: "a a+ - q a+ a = 1; [a,a+] = q^N; N = log_q(1 - (1-q) H); [a,N] = a; [N,a+] = a+",
        run: commutator,
    },
    Suite {
        name: "diffform",
        identities: "mu q^s Delta c_n = (q^n - 1) c_n-1; q^s nabla(rho c_n) = rho c_n+1; same grid functions as a, a+",
        run: diffform,
    },
    Suite {
        name: "generating",
        identities: "sum t^n c_n/(q;q)_n = product form; bilinear sum = 3phi2 form",
        run: generating,
    },
    Suite {
        name: "coherent",
        identities: "a|alpha> = alpha|alpha>; <alpha|alpha> = 1; series = product form; overlap formula",
        run: coherent_suite,
    },
    Suite {
        name: "kernel",
        identities: "sum t^n psi_n(s) psi_n(p) = 3phi2 closed form; symmetry; K_-i = conj K_i; K_1 = identity",
        run: kernel,
    },
    Suite {
        name: "transform",
        identities: "K_i psi_m = i^m psi_m; K_i^4 = 1",
        run: transform,
    },
    Suite {
        name: "unitarity",
        identities: "sum_p K_i(s,p) conj K_i(s',p) = delta_ss'",
        run: unitarity,
    },
    Suite {
        name: "limit",
        identities: "c_n^((1-q)mu)(q^-s|q) -> classical Charlier c_n^mu(s) as q -> 1",
        run: limit,
    },
    Suite {
        name: "biortho",
        identities: "sum_s u_m v_n rho q^-s = d_n^2 delta_mn; self-duality; termination",
        run: biortho_suite,
    },
];

pub fn suite_names() -> Vec<&'static str> {
    std::iter::once("all")
        .chain(SUITES.iter().map(|s| s.name))
        .collect()
}

/// Runs the named suite (or every suite for `"all"`), in parallel, with
/// reports sorted by check name.
pub fn run(suite: &str, cfg: &RunConfig) -> Result<Vec<VerificationReport>> {
    let ctx = cfg.validate()?;
    let chosen: Vec<&Suite> = if suite == "all" {
        SUITES.iter().collect()
    } else {
        let s = SUITES
            .iter()
            .find(|s| s.name == suite)
            .ok_or_else(|| QError::invalid("suite", format!("unknown suite {suite}")))?;
        vec![s]
    };
    let mut reports: Vec<VerificationReport> =
        chosen.par_iter().flat_map(|s| (s.run)(cfg, &ctx)).collect();
    reports.sort_by(|a, b| a.check_name.cmp(&b.check_name));
    Ok(reports)
}

fn orthogonality(cfg: &RunConfig, ctx: &QContext) -> Vec<VerificationReport> {
    let n_max = cfg.n_max;
    let mut out = vec![report(
        cfg,
        "orthogonality.wavefunctions",
        1e-9,
        with(ctx_params(ctx), vec![("n_max", n_max.to_string())]),
        || {
            let basis = WaveBasis::new(ctx, n_max);
            let mut worst: f64 = 0.0;
            for m in 0..=n_max {
                for n in m..=n_max {
                    let ip = inner_product(basis.get(m), basis.get(n))?;
                    let target = if m == n { 1.0 } else { 0.0 };
                    worst = worst.max((ip - target).norm());
                }
            }
            Ok(worst)
        },
    )];
    out.push(report(
        cfg,
        "orthogonality.total_mass",
        1e-10,
        ctx_params(ctx),
        || {
            let mass: f64 = (0..ctx.len())
                .map(|s| {
                    (weight_rho_scaled(s, ctx) / crate::Scaled::new(ctx.q()).powi(s as u32))
                        .to_f64()
                })
                .sum();
            Ok((mass - 1.0).abs())
        },
    ));
    out.push(report(
        cfg,
        "orthogonality.weight_product_form",
        1e-12,
        ctx_params(ctx),
        || {
            Ok((0..ctx.len())
                .map(|s| {
                    let a = weight_rho_scaled(s, ctx);
                    let b = weight_rho_product_form(s, ctx);
                    ((a - b) / a).abs().to_f64()
                })
                .fold(0.0, f64::max))
        },
    ));
    out.push(report(
        cfg,
        "orthogonality.weight_positive",
        0.5,
        ctx_params(ctx),
        || {
            Ok((0..ctx.len())
                .filter(|&s| weight_rho_scaled(s, ctx).signum() <= 0.0)
                .count() as f64)
        },
    ));
    out
}

fn recurrence(cfg: &RunConfig, _ctx: &QContext) -> Vec<VerificationReport> {
    let mut rng = cfg.rng(2);
    let pairs: Vec<(f64, f64)> = (0..5)
        .map(|_| (rng.gen_range(0.3..0.6), rng.gen_range(0.2..0.9)))
        .collect();
    let desc = pairs
        .iter()
        .map(|(q, m)| format!("({q:.6},{m:.6})"))
        .collect::<Vec<_>>()
        .join(" ");
    vec![report(
        cfg,
        "recurrence.explicit_vs_recurrence",
        1e-10,
        vec![
            ("pairs", desc),
            ("n_max", "30".into()),
            ("s_max", "30".into()),
        ],
        || {
            let mut worst: f64 = 0.0;
            for &(q, mu) in &pairs {
                let c = QContext::new(q, mu, 30, 1e-10)?;
                for s in 0..=30 {
                    let pt = LatticePoint::new(s, q);
                    let rec = charlier_recurrence_all(30, pt.x(), &c);
                    for (n, r) in rec.iter().enumerate() {
                        let e = charlier_explicit(n, pt, &c);
                        let scale = e.abs().max(r.abs());
                        if scale > 0.0 {
                            worst = worst.max((e - r).abs() / scale);
                        }
                    }
                }
            }
            Ok(worst)
        },
    )]
}

fn pearson(cfg: &RunConfig, ctx: &QContext) -> Vec<VerificationReport> {
    vec![report(
        cfg,
        "pearson.relation",
        1e-12,
        ctx_params(ctx),
        || {
            Ok((0..=ctx.s_max())
                .map(|s| {
                    pearson_residual(s, ctx)
                        .ratio(weight_rho_scaled(s, ctx))
                        .abs()
                })
                .fold(0.0, f64::max))
        },
    )]
}

fn ladder(cfg: &RunConfig, ctx: &QContext) -> Vec<VerificationReport> {
    let n_max = cfg.n_max;
    let basis = WaveBasis::new(ctx, n_max + 1);
    let q = ctx.q();
    let p = with(ctx_params(ctx), vec![("n_max", n_max.to_string())]);
    let mut rng = cfg.rng(4);
    let spans = (
        random_span(&basis, 10.min(n_max), &mut rng),
        random_span(&basis, 10.min(n_max), &mut rng),
    );
    vec![
        report(cfg, "ladder.annihilation", 1e-10, p.clone(), || {
            let mut worst = oscillator::apply_annihilation(basis.get(0)).sup_norm();
            for n in 1..=n_max {
                let a = oscillator::apply_annihilation(basis.get(n));
                worst = worst.max(sup_dist(
                    &a,
                    &basis.get(n - 1).scale(real(e_number(n, q).sqrt())),
                )?);
            }
            Ok(worst)
        }),
        report(cfg, "ladder.creation", 1e-10, p.clone(), || {
            let mut worst: f64 = 0.0;
            for n in 0..=n_max {
                let a = oscillator::apply_creation(basis.get(n));
                worst = worst.max(sup_dist(
                    &a,
                    &basis.get(n + 1).scale(real(e_number(n + 1, q).sqrt())),
                )?);
            }
            Ok(worst)
        }),
        report(
            cfg,
            "ladder.construction",
            1e-9,
            with(ctx_params(ctx), vec![("n_max", "10".into())]),
            || {
                let mut worst: f64 = 0.0;
                for n in 0..=10.min(n_max) {
                    worst = worst.max(sup_dist(
                        &oscillator::ladder_construct(n, ctx),
                        basis.get(n),
                    )?);
                }
                Ok(worst)
            },
        ),
        report(
            cfg,
            "ladder.adjointness",
            1e-10,
            with(ctx_params(ctx), vec![("seed", cfg.seed.to_string())]),
            || {
                let (f, g) = (spans.0.clone()?, spans.1.clone()?);
                let lhs = inner_product(&oscillator::apply_annihilation(&f), &g)?;
                let rhs = inner_product(&f, &oscillator::apply_creation(&g))?;
                Ok((lhs - rhs).norm())
            },
        ),
    ]
}

fn hamiltonian(cfg: &RunConfig, ctx: &QContext) -> Vec<VerificationReport> {
    let n_max = cfg.n_max;
    let p = with(ctx_params(ctx), vec![("n_max", n_max.to_string())]);
    let mut rng = cfg.rng(5);
    let randoms: Vec<GridFunction> = (0..5)
        .map(|_| {
            let vals = (0..ctx.len())
                .map(|_| CNum::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            GridFunction::from_values(ctx, vals).expect("finite values")
        })
        .collect();
    vec![
        report(cfg, "hamiltonian.spectrum", 1e-10, p, || {
            let basis = WaveBasis::new(ctx, n_max);
            let mut worst: f64 = 0.0;
            for n in 0..=n_max {
                let h = oscillator::apply_hamiltonian(basis.get(n));
                worst = worst.max(sup_dist(
                    &h,
                    &basis.get(n).scale(real(e_number(n, ctx.q()))),
                )?);
            }
            Ok(worst)
        }),
        report(
            cfg,
            "hamiltonian.direct_form",
            1e-12,
            with(
                ctx_params(ctx),
                vec![("samples", "5".into()), ("seed", cfg.seed.to_string())],
            ),
            || {
                let mut worst: f64 = 0.0;
                for f in &randoms {
                    let a = oscillator::apply_hamiltonian(f);
                    worst =
                        worst.max(sup_dist(&a, &oscillator::hamiltonian_direct(f))? / f.sup_norm());
                }
                Ok(worst)
            },
        ),
    ]
}

fn commutator(cfg: &RunConfig, ctx: &QContext) -> Vec<VerificationReport> {
    let n_max = cfg.n_max;
    let span_top = 15.min(n_max);
    let basis = WaveBasis::new(ctx, n_max.max(span_top) + 1);
    let mut rng = cfg.rng(6);
    let spans: Vec<Result<GridFunction>> = (0..5)
        .map(|_| random_span(&basis, span_top, &mut rng))
        .collect();
    let q = ctx.q();
    vec![
        report(
            cfg,
            "commutator.q_deformed",
            1e-10,
            with(
                ctx_params(ctx),
                vec![
                    ("span", format!("psi_0..psi_{span_top}")),
                    ("seed", cfg.seed.to_string()),
                ],
            ),
            || {
                let mut worst: f64 = 0.0;
                for n in 0..=span_top {
                    worst = worst.max(oscillator::q_commutator_residual(basis.get(n)).sup_norm());
                }
                for f in &spans {
                    let f = f.clone()?;
                    worst =
                        worst.max(oscillator::q_commutator_residual(&f).sup_norm() / f.sup_norm());
                }
                Ok(worst)
            },
        ),
        report(
            cfg,
            "commutator.bracket",
            1e-10,
            with(ctx_params(ctx), vec![("n_max", span_top.to_string())]),
            || {
                let mut worst: f64 = 0.0;
                for n in 0..=span_top {
                    let c = oscillator::commutator(basis.get(n));
                    worst = worst.max(sup_dist(&c, &basis.get(n).scale(real(q.powi(n as i32))))?);
                }
                Ok(worst)
            },
        ),
        report(
            cfg,
            "commutator.number_spectrum",
            1e-10,
            vec![("q", q.to_string()), ("n_max", n_max.to_string())],
            || {
                let mut worst: f64 = 0.0;
                for n in 0..=n_max {
                    worst = worst.max(oscillator::number_operator_eigencheck(n, q)?);
                }
                Ok(worst)
            },
        ),
        report(
            cfg,
            "commutator.number_relations",
            1e-9,
            with(ctx_params(ctx), vec![("n_max", n_max.to_string())]),
            || {
                let mut worst: f64 = 0.0;
                for n in 0..=n_max {
                    let (r1, r2) = oscillator::number_commutator_residuals(n, &basis)?;
                    worst = worst.max(r1).max(r2);
                }
                Ok(worst)
            },
        ),
    ]
}

fn diffform(cfg: &RunConfig, ctx: &QContext) -> Vec<VerificationReport> {
    let n_max = cfg.n_max;
    let p = with(ctx_params(ctx), vec![("n_max", n_max.to_string())]);
    vec![
        report(cfg, "diffform.lowering", 1e-10, p.clone(), || {
            let mut worst: f64 = 0.0;
            for n in 1..=n_max {
                for s in 0..ctx.s_max() {
                    worst = worst.max(diff_lowering_residual(n, s, ctx)?);
                }
            }
            Ok(worst)
        }),
        report(cfg, "diffform.raising", 1e-10, p.clone(), || {
            let mut worst: f64 = 0.0;
            for n in 0..=n_max {
                for s in 0..=ctx.s_max() {
                    worst = worst.max(diff_raising_residual(n, s, ctx)?);
                }
            }
            Ok(worst)
        }),
        report(cfg, "diffform.matches_ladder", 1e-12, p, || {
            let mut worst: f64 = 0.0;
            for n in 0..=n_max {
                let psi = oscillator::wavefunction(n, ctx);
                if n > 0 {
                    let a = oscillator::apply_annihilation(&psi);
                    worst = worst.max(sup_dist(&a, &oscillator::lowering_via_difference(n, ctx)?)?);
                }
                let a = oscillator::apply_creation(&psi);
                worst = worst.max(sup_dist(&a, &oscillator::raising_via_difference(n, ctx))?);
            }
            Ok(worst)
        }),
    ]
}

fn generating(cfg: &RunConfig, ctx: &QContext) -> Vec<VerificationReport> {
    // points inside |t| < 1, |q t / mu| < 1
    let reach = (ctx.mu() / ctx.q()).min(1.0);
    let points: Vec<(CNum, usize)> = vec![
        (CNum::from_polar(0.8 * reach, 0.0), 3),
        (CNum::from_polar(0.5 * reach, 2.0), 0),
        (CNum::from_polar(0.6 * reach, -1.0), 5),
        (CNum::from_polar(0.3 * reach, 1.3), 7),
        (CNum::from_polar(0.9 * reach, 3.0), 10),
    ];
    let bilinear: Vec<(f64, f64, usize, usize, CNum)> = vec![
        (0.3, 0.4, 0, 0, CNum::new(0.3, 0.0)),
        (0.3, 0.4, 3, 2, CNum::new(0.1, 0.2)),
        (0.2, 0.7, 5, 1, CNum::new(-0.4, 0.0)),
        (0.5, 0.5, 4, 4, CNum::new(0.0, 0.6)),
        (0.3, 0.6, 6, 3, CNum::new(0.25, -0.25)),
    ];
    let q = ctx.q();
    vec![
        report(
            cfg,
            "generating.polynomial_product_form",
            1e-9,
            with(ctx_params(ctx), vec![("points", format!("{points:?}"))]),
            || {
                let mut worst: f64 = 0.0;
                for &(t, s) in &points {
                    let series = coherent::generating_series(t, s, ctx)?;
                    let closed = coherent::generating_closed(t, s, ctx)?;
                    worst = worst.max((series - closed).norm() / closed.norm());
                }
                Ok(worst)
            },
        ),
        report(
            cfg,
            "generating.bilinear",
            1e-9,
            vec![("q", q.to_string()), ("points", format!("{bilinear:?}"))],
            || {
                let mut worst: f64 = 0.0;
                for &(m1, m2, s, p, t) in &bilinear {
                    let lhs = fourier::bilinear_series(m1, m2, s, p, t, q)?;
                    let x = LatticePoint::new(s, q).x();
                    let y = LatticePoint::new(p, q).x();
                    let rhs = fourier::bilinear_generating(m1, m2, x, y, t, q)?;
                    worst = worst.max((lhs - rhs).norm() / rhs.norm());
                }
                Ok(worst)
            },
        ),
    ]
}

/// Ten points with `|alpha| <= 0.95`, drawn from the seed.
pub fn alpha_sample(cfg: &RunConfig) -> Vec<CNum> {
    let mut rng = cfg.rng(8);
    (0..10)
        .map(|_| {
            let r = rng.gen_range(0.05..0.95);
            let th = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
            CNum::from_polar(r, th)
        })
        .collect()
}

fn coherent_suite(cfg: &RunConfig, ctx: &QContext) -> Vec<VerificationReport> {
    let alphas = alpha_sample(cfg);
    let states: Vec<Result<(CoherentParams, GridFunction)>> = alphas
        .par_iter()
        .map(|&a| {
            let p = CoherentParams::new(a, *ctx)?;
            Ok((p, coherent::coherent_series(&p)?))
        })
        .collect();
    let p = with(ctx_params(ctx), vec![("alphas", format!("{alphas:?}"))]);
    let each = |f: &dyn Fn(&CoherentParams, &GridFunction) -> Result<f64>| -> Result<f64> {
        let mut worst: f64 = 0.0;
        for st in &states {
            let (p, g) = st.as_ref().map_err(|e| e.clone())?;
            worst = worst.max(f(p, g)?);
        }
        Ok(worst)
    };
    vec![
        report(cfg, "coherent.eigenvector", 1e-8, p.clone(), || {
            each(&|p, g| Ok(coherent::eigen_residual(g, p.alpha())))
        }),
        report(cfg, "coherent.normalization", 1e-8, p.clone(), || {
            each(&|_, g| Ok((inner_product(g, g)? - 1.0).norm()))
        }),
        report(cfg, "coherent.series_vs_closed", 1e-9, p.clone(), || {
            each(&|p, g| coherent::relative_gap(g, &coherent::coherent_closed(p)?, 1e-12))
        }),
        report(cfg, "coherent.overlap", 1e-8, p.clone(), || {
            let mut worst: f64 = 0.0;
            for (i, a) in states.iter().enumerate() {
                let (pa, ga) = a.as_ref().map_err(|e| e.clone())?;
                let (pb, gb) = states[(i + 1) % states.len()]
                    .as_ref()
                    .map_err(|e| e.clone())?;
                let numeric = inner_product(gb, ga)?;
                let closed = coherent::coherent_overlap(pa.alpha(), pb.alpha(), ctx)?;
                worst = worst.max((numeric - closed).norm());
            }
            Ok(worst)
        }),
        report(cfg, "coherent.overlap_bound", 1e-12, p, || {
            let mut worst: f64 = 0.0;
            for &a in &alphas {
                for &b in &alphas {
                    worst = worst.max(coherent::coherent_overlap(a, b, ctx)?.norm() - 1.0);
                }
            }
            Ok(worst.max(0.0))
        }),
    ]
}

fn kernel(cfg: &RunConfig, ctx: &QContext) -> Vec<VerificationReport> {
    let ts = [
        CNum::new(0.3, 0.0),
        CNum::new(0.0, 0.7),
        CNum::new(0.0, 1.0),
        CNum::new(0.0, -1.0),
    ];
    let top = 12.min(ctx.s_max());
    let p = with(
        ctx_params(ctx),
        vec![("t", format!("{ts:?}")), ("s_p_max", top.to_string())],
    );
    let i = CNum::new(0.0, 1.0);
    vec![
        report(cfg, "kernel.series_vs_closed", 1e-9, p, || {
            let rows: Vec<Result<f64>> = ts
                .par_iter()
                .map(|&t| {
                    let mut worst: f64 = 0.0;
                    for s in 0..=top {
                        for p in 0..=top {
                            let a = fourier::kernel_series(t, s, p, ctx)?;
                            let b = fourier::kernel_closed(t, s, p, ctx)?;
                            worst = worst.max((a - b).norm() / a.norm().max(b.norm()));
                        }
                    }
                    Ok(worst)
                })
                .collect();
            rows.into_iter().try_fold(0.0, |w, r| Ok(f64::max(w, r?)))
        }),
        report(
            cfg,
            "kernel.symmetry",
            f64::MIN_POSITIVE,
            ctx_params(ctx),
            || {
                let mut worst: f64 = 0.0;
                for s in 0..=top {
                    for p in 0..=top {
                        let d = fourier::kernel_closed(i, s, p, ctx)?
                            - fourier::kernel_closed(i, p, s, ctx)?;
                        worst = worst.max(d.norm());
                    }
                }
                Ok(worst)
            },
        ),
        report(cfg, "kernel.conjugate_pair", 1e-13, ctx_params(ctx), || {
            let kp = KernelMatrix::new(i, ctx)?;
            let km = KernelMatrix::new(-i, ctx)?;
            km.max_abs_diff(&kp.conj())
        }),
        report(
            cfg,
            "kernel.completeness",
            1e-10,
            with(ctx_params(ctx), vec![("s_p_max", top.to_string())]),
            || {
                let mut worst: f64 = 0.0;
                for s in 0..=top {
                    for p in 0..=top {
                        let v = fourier::kernel_series(CNum::new(1.0, 0.0), s, p, ctx)?;
                        worst = worst.max((v - if s == p { 1.0 } else { 0.0 }).norm());
                    }
                }
                Ok(worst)
            },
        ),
    ]
}

fn transform(cfg: &RunConfig, ctx: &QContext) -> Vec<VerificationReport> {
    let i = CNum::new(0.0, 1.0);
    let k = KernelMatrix::new(i, ctx);
    let basis = WaveBasis::new(ctx, 10);
    let mut rng = cfg.rng(11);
    let spans: Vec<Result<GridFunction>> =
        (0..3).map(|_| random_span(&basis, 8, &mut rng)).collect();
    vec![
        report(
            cfg,
            "transform.eigenfunctions",
            1e-8,
            with(ctx_params(ctx), vec![("m_max", "10".into())]),
            || {
                let k = k.clone()?;
                let mut worst: f64 = 0.0;
                let mut phase = CNum::new(1.0, 0.0);
                for m in 0..=10 {
                    let kf = fourier::apply_transform(&k, basis.get(m))?;
                    worst = worst.max(sup_dist(&kf, &basis.get(m).scale(phase))?);
                    phase *= i;
                }
                Ok(worst)
            },
        ),
        report(
            cfg,
            "transform.fourth_power",
            1e-7,
            with(
                ctx_params(ctx),
                vec![
                    ("span", "psi_0..psi_8".into()),
                    ("seed", cfg.seed.to_string()),
                ],
            ),
            || {
                let k = k.clone()?;
                let mut worst: f64 = 0.0;
                for f in &spans {
                    let f = f.clone()?;
                    let mut g = f.clone();
                    for _ in 0..4 {
                        g = fourier::apply_transform(&k, &g)?;
                    }
                    worst = worst.max(sup_dist(&g, &f)?);
                }
                Ok(worst)
            },
        ),
    ]
}

/// Unitarity residuals at `t = i` for the lattice sizes 40, 50, 60, each
/// with the default margin.
pub fn unitarity_sweep(ctx: &QContext) -> Result<Vec<(usize, f64)>> {
    [40, 50, 60]
        .par_iter()
        .map(|&s_max| {
            let c = ctx.with_s_max(s_max)?;
            let k = KernelMatrix::new(CNum::new(0.0, 1.0), &c)?;
            Ok((
                s_max,
                fourier::unitarity_residual(&k, fourier::default_margin(&c)),
            ))
        })
        .collect()
}

fn unitarity(cfg: &RunConfig, ctx: &QContext) -> Vec<VerificationReport> {
    let margin = fourier::default_margin(ctx);
    let sweep = unitarity_sweep(ctx);
    let sweep_desc = match &sweep {
        Ok(v) => v
            .iter()
            .map(|(s, r)| format!("{s}:{r:e}"))
            .collect::<Vec<_>>()
            .join(" "),
        Err(e) => e.to_string(),
    };
    vec![
        report(
            cfg,
            "unitarity.t_i",
            1e-8,
            with(ctx_params(ctx), vec![("margin", margin.to_string())]),
            || {
                let k = KernelMatrix::new(CNum::new(0.0, 1.0), ctx)?;
                Ok(fourier::unitarity_residual(&k, margin))
            },
        ),
        report(
            cfg,
            "unitarity.t_one",
            1e-8,
            with(ctx_params(ctx), vec![("margin", margin.to_string())]),
            || {
                let k = KernelMatrix::from_series(CNum::new(1.0, 0.0), ctx)?;
                Ok(fourier::unitarity_residual(&k, margin))
            },
        ),
        // residual = largest ratio between consecutive sizes; below 1 means
        // strictly decreasing
        report(
            cfg,
            "unitarity.decreasing_in_s_max",
            1.0,
            vec![("residuals", sweep_desc)],
            || {
                let v = sweep.clone()?;
                Ok(v.windows(2).map(|w| w[1].1 / w[0].1).fold(0.0, f64::max))
            },
        ),
    ]
}

fn limit(cfg: &RunConfig, _ctx: &QContext) -> Vec<VerificationReport> {
    let qs = [0.9, 0.99, 0.999];
    let errs: Vec<Result<f64>> = qs
        .iter()
        .map(|&q| classical_limit_error(3, 4, 1.5, q))
        .collect();
    let desc = errs
        .iter()
        .zip(qs)
        .map(|(e, q)| match e {
            Ok(e) => format!("{q}:{e:e}"),
            Err(err) => format!("{q}:{err}"),
        })
        .collect::<Vec<_>>()
        .join(" ");
    vec![report(
        cfg,
        "limit.classical_decreasing",
        1.0,
        vec![
            ("n", "3".into()),
            ("s", "4".into()),
            ("mu", "1.5".into()),
            ("errors", desc),
        ],
        || {
            let e: Vec<f64> = errs.into_iter().collect::<Result<_>>()?;
            Ok(e.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max))
        },
    )]
}

fn biortho_suite(cfg: &RunConfig, _ctx: &QContext) -> Vec<VerificationReport> {
    let reference = BiorthoParams::reference();
    let generic = BiorthoParams::new(0.5, 0.3, 0.4, 0.17, 0.12 / 0.17).expect("valid parameters");
    let describe = |p: &BiorthoParams| {
        vec![
            ("q", p.q().to_string()),
            ("mu1", p.mu1().to_string()),
            ("mu2", p.mu2().to_string()),
            ("t1", p.t1().to_string()),
            ("t2", p.t2().to_string()),
        ]
    };
    let relation = |p: &BiorthoParams| -> Result<f64> {
        let rows: Vec<Result<f64>> = (0..=8usize)
            .into_par_iter()
            .map(|m| {
                (0..=8).try_fold(0.0, |w: f64, n| {
                    Ok(w.max(biortho::biorthogonality_residual(m, n, p)?))
                })
            })
            .collect();
        rows.into_iter().try_fold(0.0, |w, r| Ok(f64::max(w, r?)))
    };
    vec![
        report(
            cfg,
            "biortho.relation",
            1e-8,
            with(describe(&reference), vec![("mn_max", "8".into())]),
            || relation(&reference),
        ),
        report(
            cfg,
            "biortho.relation_generic",
            1e-8,
            with(describe(&generic), vec![("mn_max", "8".into())]),
            || relation(&generic),
        ),
        report(
            cfg,
            "biortho.self_duality",
            1e-12,
            with(describe(&generic), vec![("ms_max", "6".into())]),
            || {
                let mut worst: f64 = 0.0;
                for m in 0..=6 {
                    for s in 0..=6 {
                        let a = biortho::u(m, s, &generic)?;
                        let b = biortho::u_dual(m, s, &generic)?;
                        worst = worst.max((a - b).abs() / a.abs().max(1.0));
                    }
                }
                Ok(worst)
            },
        ),
        report(
            cfg,
            "biortho.termination",
            0.5,
            with(describe(&generic), vec![("ms_max", "8".into())]),
            || {
                let mut bad = 0;
                for m in 0..=8 {
                    for s in 0..=8 {
                        if biortho::u_counted(m, s, &generic)?.terms != m.min(s) + 1
                            || biortho::v_counted(m, s, &generic)?.terms != m.min(s) + 1
                        {
                            bad += 1;
                        }
                    }
                }
                Ok(bad as f64)
            },
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invalid_config_is_rejected() {
        let cfg = RunConfig {
            q: 1.5,
            ..RunConfig::default()
        };
        let err = run("all", &cfg).unwrap_err();
        assert!(err.to_string().contains("q outside (0,1)"));
        assert!(run("nope", &RunConfig::default()).is_err());
    }

    #[test]
    fn reports_are_sorted_and_reproducible() {
        let cfg = RunConfig::default();
        let a = run("pearson", &cfg).unwrap();
        let b = run("pearson", &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|r| r.pass && r.runtime_ms == 0));
        let names: Vec<_> = run("ladder", &cfg)
            .unwrap()
            .into_iter()
            .map(|r| r.check_name)
            .collect();
        let mut sorted = names.clone();
        sorted.sort();
        assert_eq!(names, sorted);
    }

    #[test]
    fn failed_body_fails_report() {
        let cfg = RunConfig::default();
        let r = report(&cfg, "x", 1.0, vec![], || Err(QError::NotTerminating));
        assert!(!r.pass);
        assert!(r.parameters.contains_key("error"));
    }

    #[test]
    fn suite_list_covers_names() {
        let names = suite_names();
        assert_eq!(names[0], "all");
        assert_eq!(names.len(), SUITES.len() + 1);
    }
}
