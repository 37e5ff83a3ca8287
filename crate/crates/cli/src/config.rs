use finiteband::elliptic::curve_from_bands;
use finiteband::linalg::{self, c, cr, CMatrix};
use finiteband::potential::spec_from_divisor;
use finiteband::weyl::{Divisor, DivisorPoint};
use finiteband::{BandStructure, HochstadtSpec, Tolerances};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::error::CliError;

pub const SCHEMA: &str = "finiteband/1";

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub schema: String,
    pub bands: Vec<f64>,
    pub m: usize,
    #[serde(default)]
    pub spec: Option<RawSpec>,
    #[serde(default)]
    pub divisor_seed: Option<u64>,
    #[serde(default)]
    pub x_grid: Option<XGrid>,
    #[serde(default)]
    pub z_grid: Option<ZGrid>,
    #[serde(default)]
    pub tolerances: Option<Tolerances>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSpec {
    #[serde(default)]
    pub alphas: Option<Vec<f64>>,
    #[serde(default)]
    pub u: Option<UMatrix>,
    #[serde(default)]
    pub bands: Option<Vec<f64>>,
}

/// Either "random:<seed>" or rows of [re, im] pairs.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum UMatrix {
    Named(String),
    Rows(Vec<Vec<[f64; 2]>>),
}

/// x-grid; `end` defaults to one period (n = 1) or start + 1 (n = 0).
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XGrid {
    #[serde(default)]
    pub start: f64,
    #[serde(default)]
    pub end: Option<f64>,
    #[serde(default = "default_x_points")]
    pub points: usize,
}

/// Real λ-grid; sampled z = λ + i·eps.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZGrid {
    pub re_min: f64,
    pub re_max: f64,
    #[serde(default = "default_z_points")]
    pub points: usize,
    #[serde(default = "default_eps")]
    pub eps: f64,
}

fn default_x_points() -> usize {
    257
}

fn default_z_points() -> usize {
    101
}

fn default_eps() -> f64 {
    1e-6
}

/// Validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub bands: BandStructure,
    pub m: usize,
    pub spec: Option<HochstadtSpec>,
    pub xs: Vec<f64>,
    pub period: Option<f64>,
    pub lambdas: Vec<f64>,
    pub eps: f64,
    pub tol: Tolerances,
    pub seed: u64,
}

impl RunConfig {
    pub fn n(&self) -> usize {
        self.bands.n()
    }

    pub fn x0(&self) -> f64 {
        self.xs[0]
    }
}

fn cfg(path: &str, msg: impl Into<String>) -> CliError {
    CliError::Config {
        path: path.to_string(),
        msg: msg.into(),
    }
}

pub fn parse(text: &str, tol_overrides: &[(String, f64)], seed: Option<u64>) -> Result<RunConfig, CliError> {
    let raw: RawConfig = serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
    validate(raw, tol_overrides, seed)
}

fn parse_u(u: &UMatrix, m: usize) -> Result<CMatrix, CliError> {
    match u {
        UMatrix::Named(s) => {
            let seed = s
                .strip_prefix("random:")
                .and_then(|v| v.parse::<u64>().ok())
                .ok_or_else(|| cfg("spec.u", format!("expected \"random:<seed>\" or a matrix, got {s:?}")))?;
            Ok(linalg::random_unitary(m, seed))
        }
        UMatrix::Rows(rows) => {
            if rows.len() != m || rows.iter().any(|r| r.len() != m) {
                return Err(cfg("spec.u", format!("expected {m}×{m} entries")));
            }
            Ok(CMatrix::from_fn(m, m, |i, j| c(rows[i][j][0], rows[i][j][1])))
        }
    }
}

/// Random admissible divisor: μ in the open gap, random signs, Γ along a random unitary frame.
fn random_divisor(b: &BandStructure, m: usize, seed: u64) -> Divisor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = b.gaps()[0];
    let u = linalg::random_unitary(m, rng.random());
    let points = (0..m)
        .map(|k| {
            let mu = lo + (hi - lo) * rng.random_range(0.05..0.95);
            let eps = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let v = u.column(k).clone_owned();
            let w = b.eval_r(cr(mu)).norm().sqrt();
            DivisorPoint {
                mu,
                eps,
                gamma: &v * v.adjoint() * cr(w),
            }
        })
        .collect();
    Divisor { points }
}

fn validate(raw: RawConfig, tol_overrides: &[(String, f64)], seed: Option<u64>) -> Result<RunConfig, CliError> {
    if raw.schema != SCHEMA {
        return Err(cfg("schema", format!("expected {SCHEMA:?}, got {:?}", raw.schema)));
    }
    let bands = BandStructure::new(raw.bands.clone()).map_err(|e| cfg("bands", e.to_string()))?;
    if bands.n() > 1 {
        return Err(cfg("bands", "only one or three band edges are supported"));
    }
    if raw.m == 0 {
        return Err(cfg("m", "must be positive"));
    }
    let mut tol = raw.tolerances.unwrap_or_default();
    for (k, v) in tol_overrides {
        tol.set(k, *v).map_err(|e| cfg(&format!("tolerances.{k}"), e.to_string()))?;
    }
    let seed = seed.unwrap_or(raw.seed);
    let x = raw.x_grid.clone().unwrap_or(XGrid {
        start: 0.0,
        end: None,
        points: default_x_points(),
    });
    if x.points < 2 {
        return Err(cfg("x_grid.points", "need at least 2 points"));
    }
    let m = raw.m;
    let (spec, period) = match bands.n() {
        0 => {
            if raw.spec.is_some() {
                return Err(cfg("spec", "a single-band run takes no spec"));
            }
            if raw.divisor_seed.is_some() {
                return Err(cfg("divisor_seed", "a single-band run has no divisor"));
            }
            (None, None)
        }
        _ => {
            let curve = curve_from_bands(&bands).map_err(|e| cfg("bands", e.to_string()))?;
            let spec = match (&raw.spec, raw.divisor_seed) {
                (Some(s), _) => {
                    if let Some(sb) = &s.bands {
                        if sb != &raw.bands {
                            return Err(cfg("spec.bands", "differs from top-level bands"));
                        }
                    }
                    let alphas = s.alphas.clone().ok_or_else(|| cfg("spec.alphas", "required for three band edges"))?;
                    if alphas.len() != m {
                        return Err(cfg("spec.alphas", format!("expected {m} phases, got {}", alphas.len())));
                    }
                    let u = match &s.u {
                        Some(u) => parse_u(u, m)?,
                        None => linalg::eye(m),
                    };
                    HochstadtSpec::new(bands.clone(), alphas, u).map_err(|e| cfg("spec.u", e.to_string()))?
                }
                (None, Some(ds)) => {
                    let d = random_divisor(&bands, m, ds);
                    spec_from_divisor(&curve, &bands, x.start, &d).map_err(|e| cfg("divisor_seed", e.to_string()))?
                }
                (None, None) => return Err(cfg("spec.alphas", "required for three band edges (or give divisor_seed)")),
            };
            (Some(spec), Some(curve.period()))
        }
    };
    let end = match x.end {
        Some(e) => e,
        None => x.start + period.unwrap_or(1.0),
    };
    if !(end > x.start) {
        return Err(cfg("x_grid.end", "must exceed x_grid.start"));
    }
    let xs: Vec<f64> = (0..x.points)
        .map(|k| x.start + (end - x.start) * k as f64 / (x.points - 1) as f64)
        .collect();
    let z = raw.z_grid.clone().unwrap_or(ZGrid {
        re_min: bands.bottom() - 1.0,
        re_max: bands.top() + 2.0,
        points: default_z_points(),
        eps: default_eps(),
    });
    if z.points < 1 || !(z.re_max >= z.re_min) {
        return Err(cfg("z_grid", "need points ≥ 1 and re_max ≥ re_min"));
    }
    if !(z.eps > 0.0) {
        return Err(cfg("z_grid.eps", "must be positive"));
    }
    let lambdas = if z.points == 1 {
        vec![z.re_min]
    } else {
        (0..z.points)
            .map(|k| z.re_min + (z.re_max - z.re_min) * k as f64 / (z.points - 1) as f64)
            .collect()
    };
    Ok(RunConfig {
        bands,
        m,
        spec,
        xs,
        period,
        lambdas,
        eps: z.eps,
        tol,
        seed,
    })
}
