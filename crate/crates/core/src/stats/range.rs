//! Studentized range distribution: CDF by nested quadrature and quantile
//! by bracketing plus bisection.

use std::collections::HashMap;
use std::sync::{OnceLock, RwLock};

use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

use super::quadrature::integrate;
use super::StatsError;

/// Degrees of freedom above this are treated as infinite.
pub const DF_INFINITE: f64 = 1e4;

const INNER_LIMIT: f64 = 8.0;
const INNER_TOL: f64 = 1e-10;
const OUTER_TOL: f64 = 1e-9;

fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn upper_tail(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

/// `Phi(b) - Phi(a)` for `a <= b`, computed in whichever tail avoids
/// cancellation.
fn normal_mass(a: f64, b: f64) -> f64 {
    if a >= 0.0 {
        upper_tail(a) - upper_tail(b)
    } else if b <= 0.0 {
        upper_tail(-b) - upper_tail(-a)
    } else {
        1.0 - upper_tail(-a) - upper_tail(b)
    }
}

fn check_domain(q: f64, k: u32, df: f64) -> Result<(), StatsError> {
    if q.is_nan() || q < 0.0 {
        return Err(StatsError::Domain(format!("q must be non-negative, got {q}")));
    }
    if k < 2 {
        return Err(StatsError::Domain(format!("k must be at least 2, got {k}")));
    }
    if df.is_nan() || df <= 0.0 {
        return Err(StatsError::Domain(format!("df must be positive, got {df}")));
    }
    Ok(())
}

/// Range CDF of `k` independent standard normals (infinite df).
fn range_cdf_normal(w: f64, k: u32) -> f64 {
    if w <= 0.0 {
        return 0.0;
    }
    let km1 = (k - 1) as i32;
    let v = integrate(
        |z| std_normal_pdf(z) * normal_mass(z, z + w).powi(km1),
        -INNER_LIMIT,
        INNER_LIMIT,
        16,
        INNER_TOL,
    );
    (k as f64 * v).clamp(0.0, 1.0)
}

/// `ln` of the density of `S = sqrt(chi2_df / df)`.
fn ln_scale_density(s: f64, df: f64) -> f64 {
    let half = df / 2.0;
    std::f64::consts::LN_2 + half * half.ln() - ln_gamma(half) + (df - 1.0) * s.ln() - half * s * s
}

/// `P(Q <= q)` for the studentized range with `k` means and `df` degrees of
/// freedom. Pass `f64::INFINITY` (or anything above [`DF_INFINITE`]) for the
/// known-variance case.
pub fn studentized_range_cdf(q: f64, k: u32, df: f64) -> Result<f64, StatsError> {
    check_domain(q, k, df)?;
    if q <= 0.0 {
        return Ok(0.0);
    }
    if q == f64::INFINITY {
        return Ok(1.0);
    }
    if df > DF_INFINITE {
        return Ok(range_cdf_normal(q, k));
    }
    let spread = (1.0 / (2.0 * df)).sqrt();
    let lo = (1.0 - 12.0 * spread).max(0.0);
    let hi = 1.0 + 12.0 * spread.max(0.5);
    let v = integrate(
        |s| {
            if s <= 0.0 {
                return 0.0;
            }
            let dens = ln_scale_density(s, df).exp();
            if dens == 0.0 {
                0.0
            } else {
                dens * range_cdf_normal(q * s, k)
            }
        },
        lo,
        hi,
        8,
        OUTER_TOL,
    );
    Ok(v.clamp(0.0, 1.0))
}

type MemoKey = (u64, u32, u64);

fn memo() -> &'static RwLock<HashMap<MemoKey, f64>> {
    static MEMO: OnceLock<RwLock<HashMap<MemoKey, f64>>> = OnceLock::new();
    MEMO.get_or_init(Default::default)
}

/// Upper-`alpha` critical value: the `q` with `CDF(q) = 1 - alpha`.
pub fn studentized_range_quantile(alpha: f64, k: u32, df: f64) -> Result<f64, StatsError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(StatsError::Domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    check_domain(1.0, k, df)?;
    let df = if df > DF_INFINITE { f64::INFINITY } else { df };
    let key = (alpha.to_bits(), k, df.to_bits());
    if let Some(q) = memo().read().expect("quantile memo poisoned").get(&key) {
        return Ok(*q);
    }

    let target = 1.0 - alpha;
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut expansions = 0;
    while studentized_range_cdf(hi, k, df)? < target {
        lo = hi;
        hi *= 2.0;
        expansions += 1;
        if expansions > 60 {
            return Err(StatsError::NonConvergence { alpha, k, df, lo, hi, residual: f64::NAN });
        }
    }
    let mut residual = f64::INFINITY;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let c = studentized_range_cdf(mid, k, df)?;
        residual = c - target;
        if residual < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-10 {
            break;
        }
    }
    let q = 0.5 * (lo + hi);
    if residual.abs() > 1e-6 && hi - lo >= 1e-10 {
        return Err(StatsError::NonConvergence { alpha, k, df, lo, hi, residual });
    }
    memo().write().expect("quantile memo poisoned").insert(key, q);
    Ok(q)
}
