//! Closed-form first eigenvalues on one or two disjoint Wulff sets.
//!
//! Conventions: `ν = n/2 - 1`, `j_ν = j_{ν,1}`. A pair is stored with
//! `R1 ≤ R2`; `R1 = 0` is the single Wulff set of radius `R2`.
//!
//! The nonlocal eigenvalue on a pair is the smallest `η` solving
//!
//! ```text
//! 1/α = -(κ_n/η) Σ_i R_i^n J_{ν+2}(√η R_i) / J_ν(√η R_i)
//! ```
//!
//! which is an algebraic rearrangement of the `α_η` relation (see
//! [`alpha_for_eta`]) using `J_{ν+2}(x) = (2(ν+1)/x) J_{ν+1}(x) - J_ν(x)`. Its
//! zero set is exactly the twisted coupling equation solved by
//! [`theta_root`]. Written through the entire function
//! [`reduced_bessel`](crate::specfun), it extends to `η ≤ 0` (negative weights).
//!
//! The radial reduction only sees radial eigenfunctions. The second Dirichlet
//! eigenvalue `(j_{n/2,1}/R2)²` of the larger set has a zero-mean
//! (non-radial) eigenfunction, so it is an eigenvalue for every `α` and caps
//! the radial branch.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{invalid, Error, Result};
use crate::roots::brent;
use crate::specfun::{
    bessel_j_zero, bessel_ratio, j_triple, j_unchecked, reduced_bessel, BesselOrder,
};
use crate::variational::RadialProfile;

/// Ratio `R1/R2` above which the pair is treated as equal-radii.
pub const NEAR_EQUAL_RATIO: f64 = 1.0 - 1e-6;
/// Relative margin used to step off a Bessel pole when bracketing.
const POLE_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WulffPair {
    n: usize,
    r1: f64,
    r2: f64,
    kappa_n: f64,
}

impl WulffPair {
    /// Builds a pair from two radii in either order; at least one must be
    /// positive.
    pub fn new(n: usize, kappa_n: f64, ra: f64, rb: f64) -> Result<Self> {
        check_n(n)?;
        if !(kappa_n > 0.0 && kappa_n.is_finite()) {
            return Err(invalid(format!("kappa_n must be positive, got {kappa_n}")));
        }
        let (r1, r2) = ordered(ra, rb)?;
        Ok(Self { n, r1, r2, kappa_n })
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn r1(&self) -> f64 {
        self.r1
    }
    pub fn r2(&self) -> f64 {
        self.r2
    }
    pub fn kappa_n(&self) -> f64 {
        self.kappa_n
    }

    pub fn volume(&self) -> f64 {
        let n = self.n as i32;
        self.kappa_n * (self.r1.powi(n) + self.r2.powi(n))
    }

    /// The homothetic pair `(t R1, t R2)`.
    pub fn scaled(&self, t: f64) -> Self {
        Self {
            r1: t * self.r1,
            r2: t * self.r2,
            ..*self
        }
    }

    pub fn eigenvalue(&self, alpha: f64) -> Result<EigenResult> {
        nonlocal_pair_eigenvalue(self.n, self.kappa_n, self.r1, self.r2, alpha)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Local,
    TwistedLargeBall,
    TwistedTheta,
    Nonlocal,
    Saturated,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Local => "local",
            Regime::TwistedLargeBall => "twisted-large-ball",
            Regime::TwistedTheta => "twisted-theta",
            Regime::Nonlocal => "nonlocal",
            Regime::Saturated => "saturated",
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenResult {
    pub lambda: f64,
    pub regime: Regime,
    /// Amplitude of the eigenfunction on the smaller set.
    pub c1: Option<f64>,
    /// Amplitude of the eigenfunction on the larger set.
    pub c2: Option<f64>,
    /// Constant right-hand side of the radial equation `u'' + (n-1)/ρ u' + λu = c`.
    pub c: Option<f64>,
    pub zero_average: bool,
    /// Computed outside the parameter range covered by the closed-form
    /// theory (negative weight on a two-set domain).
    pub extended: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaStar {
    /// `2^{1/n} j_{n/2-1,1}`.
    pub theta_star: f64,
    /// Ratio `R1/R2` separating the twisted regimes.
    pub c_n: f64,
}

/// Whether [`alpha_for_eta`] accepts `η` outside the interval on which the
/// closed-form relation is certified.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EtaRange {
    Strict,
    Extended,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaEta {
    pub alpha: f64,
    pub inv_alpha: f64,
    /// Set when `η` was outside the certified interval.
    pub extended: bool,
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(invalid(format!("dimension must be >= 2, got {n}")));
    }
    Ok(())
}

fn ordered(ra: f64, rb: f64) -> Result<(f64, f64)> {
    if !(ra >= 0.0 && rb >= 0.0 && ra.is_finite() && rb.is_finite()) {
        return Err(invalid(format!(
            "radii must be finite and >= 0, got {ra}, {rb}"
        )));
    }
    let (r1, r2) = if ra <= rb { (ra, rb) } else { (rb, ra) };
    if r2 <= 0.0 {
        return Err(invalid("at least one radius must be positive"));
    }
    Ok((r1, r2))
}

fn nu_of(n: usize) -> f64 {
    n as f64 / 2.0 - 1.0
}

/// `j_{n/2-1+shift, k}`.
fn zero(n: usize, shift: f64, k: u32) -> Result<f64> {
    bessel_j_zero(BesselOrder::half_dim(n, shift - 1.0)?, k)
}

/// Faber–Krahn level `κ_n^{2/n} j²_{n/2-1,1} / V^{2/n}`.
pub fn local_level(n: usize, kappa_n: f64, volume: f64) -> Result<f64> {
    let j = zero(n, 0.0, 1)?;
    Ok(j * j * (kappa_n / volume).powf(2.0 / n as f64))
}

/// Saturated level `2^{2/n} κ_n^{2/n} j²_{n/2-1,1} / V^{2/n}`.
pub fn saturated_level(n: usize, kappa_n: f64, volume: f64) -> Result<f64> {
    Ok(2f64.powf(2.0 / n as f64) * local_level(n, kappa_n, volume)?)
}

/// First Dirichlet eigenvalue of a single Wulff set of radius `r`.
pub fn local_wulff_eigenvalue(n: usize, kappa_n: f64, r: f64) -> Result<EigenResult> {
    check_n(n)?;
    if !(r > 0.0 && r.is_finite()) {
        return Err(invalid(format!("radius must be positive, got {r}")));
    }
    if !(kappa_n > 0.0) {
        return Err(invalid("kappa_n must be positive"));
    }
    let j = zero(n, 0.0, 1)?;
    Ok(EigenResult {
        lambda: (j / r).powi(2),
        regime: Regime::Local,
        c1: None,
        c2: None,
        c: Some(0.0),
        zero_average: false,
        extended: false,
    })
}

/// `R^n J_{ν+2}(√η R) / (η J_ν(√η R))`, continued through `η ≤ 0`.
/// The flag is set next to a zero of `J_ν`.
fn weighted_ratio(nu: f64, n: usize, eta: f64, r: f64) -> (f64, bool) {
    if r == 0.0 {
        return (0.0, false);
    }
    let s = 0.25 * eta * r * r;
    if s > 4.0 {
        let x = 2.0 * s.sqrt();
        let [j0, _, j2] = j_triple(nu, x);
        (
            r.powi(n as i32) * j2 / (eta * j0),
            j0.abs() < crate::specfun::POLE_THRESHOLD,
        )
    } else {
        let b = reduced_bessel(nu, s);
        let c = reduced_bessel(nu + 2.0, s);
        (
            0.25 * r.powi(n as i32 + 2) * c / b,
            b.abs() < crate::specfun::POLE_THRESHOLD,
        )
    }
}

/// `1/α` as a function of the candidate eigenvalue `η` (radial branch).
fn inverse_weight(n: usize, kappa_n: f64, r1: f64, r2: f64, eta: f64) -> f64 {
    let nu = nu_of(n);
    let (q1, _) = weighted_ratio(nu, n, eta, r1);
    let (q2, _) = weighted_ratio(nu, n, eta, r2);
    -kappa_n * (q1 + q2)
}

/// Left-hand side of the twisted coupling equation at `θ`.
fn coupling(n: usize, r1: f64, r2: f64, theta: f64) -> f64 {
    let nu = nu_of(n);
    let term = |r: f64| {
        if r == 0.0 {
            return 0.0;
        }
        let [j0, _, j2] = j_triple(nu, theta * r);
        r.powi(n as i32) * j2 / j0
    };
    term(r1) + term(r2)
}

/// First positive root `θ(R1, R2)` of
/// `R1^n J_{ν+2}(θR1)/J_ν(θR1) + R2^n J_{ν+2}(θR2)/J_ν(θR2) = 0`.
///
/// Radii are normalized to `R1^n + R2^n = 1` internally and the root is
/// scaled back.
pub fn theta_root(n: usize, r1: f64, r2: f64) -> Result<f64> {
    check_n(n)?;
    let (r1, r2) = ordered(r1, r2)?;
    if r1 == 0.0 {
        return Err(invalid(
            "theta_root is undefined for R1 = 0; use the single-set twisted value",
        ));
    }
    let nf = n as f64;
    let t = (r1.powf(nf) + r2.powf(nf)).powf(1.0 / nf);
    let (a, b) = (r1 / t, r2 / t);
    let j1 = zero(n, 0.0, 1)?;
    if a / b > NEAR_EQUAL_RATIO {
        return Ok(2f64.powf(1.0 / nf) * j1 / t);
    }
    let j2 = zero(n, 0.0, 2)?;
    let lo = j1 / b * (1.0 + POLE_MARGIN);
    let hi = (j1 / a).min(j2 / b) * (1.0 - POLE_MARGIN);
    let theta = brent(
        |th| coupling(n, a, b, th),
        lo,
        hi,
        0.0,
        "twisted coupling equation",
    )?;
    Ok(theta / t)
}

fn threshold_cache() -> &'static Mutex<HashMap<usize, f64>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, f64>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// The ratio `c_n < 1` at which `θ²(R1,R2) = (j_{n/2,1}/R2)²` on normalized
/// pairs.
pub fn threshold_ratio(n: usize) -> Result<f64> {
    check_n(n)?;
    if let Some(c) = threshold_cache().lock().unwrap().get(&n) {
        return Ok(*c);
    }
    let jn = zero(n, 1.0, 1)?;
    let nf = n as f64;
    let gap = |r: f64| -> f64 {
        let r2 = (1.0 + r.powf(nf)).powf(-1.0 / nf);
        match theta_root(n, r * r2, r2) {
            Ok(th) => th * r2 - jn,
            Err(_) => f64::NAN,
        }
    };
    let c = brent(gap, 1e-6, 1.0 - 1e-5, 1e-14, "twisted regime threshold")?;
    threshold_cache().lock().unwrap().insert(n, c);
    Ok(c)
}

pub fn theta_star(n: usize) -> Result<ThetaStar> {
    check_n(n)?;
    Ok(ThetaStar {
        theta_star: 2f64.powf(1.0 / n as f64) * zero(n, 0.0, 1)?,
        c_n: threshold_ratio(n)?,
    })
}

/// First eigenvalue of the zero-average (twisted) problem on two Wulff sets.
pub fn twisted_pair_eigenvalue(n: usize, r1: f64, r2: f64) -> Result<EigenResult> {
    check_n(n)?;
    let (r1, r2) = ordered(r1, r2)?;
    let nf = n as f64;
    let nu = nu_of(n);
    let ratio = r1 / r2;
    let c_n = threshold_ratio(n)?;
    if ratio < c_n {
        let jn = zero(n, 1.0, 1)?;
        return Ok(EigenResult {
            lambda: (jn / r2).powi(2),
            regime: Regime::TwistedLargeBall,
            c1: None,
            c2: None,
            c: Some(0.0),
            zero_average: true,
            extended: false,
        });
    }
    let theta = theta_root(n, r1, r2)?;
    let lambda = theta * theta;
    let c1 = r2.powf(nf / 2.0 + 1.0) * j_unchecked(nu + 2.0, theta * r2);
    let c2 = r1.powf(nf / 2.0 + 1.0) * j_unchecked(nu + 2.0, theta * r1);
    let c = -c1 * lambda * r1.powf(1.0 - nf / 2.0) * j_unchecked(nu, theta * r1);
    Ok(EigenResult {
        lambda,
        regime: Regime::TwistedTheta,
        c1: Some(c1),
        c2: Some(c2),
        c: Some(c),
        zero_average: true,
        extended: false,
    })
}

/// The weight `α_η` for which `η` is the first eigenvalue of the pair:
///
/// ```text
/// 1/α_η = κ_n(R1^n+R2^n)/η - (nκ_n/η^{3/2}) Σ_i R_i^{n-1} J_{n/2}(√η R_i)/J_{n/2-1}(√η R_i)
/// ```
///
/// In [`EtaRange::Strict`] mode `η` must lie strictly between the
/// Faber–Krahn and saturated levels of the pair's volume.
pub fn alpha_for_eta(
    n: usize,
    kappa_n: f64,
    r1: f64,
    r2: f64,
    eta: f64,
    range: EtaRange,
) -> Result<AlphaEta> {
    check_n(n)?;
    let pair = WulffPair::new(n, kappa_n, r1, r2)?;
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(invalid(format!("eta must be positive, got {eta}")));
    }
    let v = pair.volume();
    let lo = local_level(n, kappa_n, v)?;
    let hi = saturated_level(n, kappa_n, v)?;
    let inside = eta > lo && eta < hi;
    if !inside && range == EtaRange::Strict {
        return Err(Error::EtaOutOfRange { eta, lo, hi });
    }
    let nf = n as f64;
    let num = BesselOrder::half_dim(n, 0.0)?;
    let den = BesselOrder::half_dim(n, -1.0)?;
    let k = eta.sqrt();
    let mut bracket = 0.0;
    for r in [pair.r1, pair.r2] {
        if r == 0.0 {
            continue;
        }
        let ratio = bessel_ratio(num, den, k * r);
        if ratio.pole {
            return Err(Error::PoleEncountered {
                what: "alpha_for_eta".into(),
                at: eta,
            });
        }
        bracket += r.powf(nf - 1.0) * ratio.value;
    }
    let inv_alpha = v / eta - nf * kappa_n / eta.powf(1.5) * bracket;
    Ok(AlphaEta {
        alpha: 1.0 / inv_alpha,
        inv_alpha,
        extended: !inside,
    })
}

/// First eigenvalue `λ(α, W_{R1} ∪ W_{R2})` of the nonlocal problem.
pub fn nonlocal_pair_eigenvalue(
    n: usize,
    kappa_n: f64,
    r1: f64,
    r2: f64,
    alpha: f64,
) -> Result<EigenResult> {
    let pair = WulffPair::new(n, kappa_n, r1, r2)?;
    if alpha.is_nan() {
        return Err(invalid("alpha is NaN"));
    }
    let (r1, r2) = (pair.r1, pair.r2);
    let nu = nu_of(n);
    let v = pair.volume();

    if r1 == r2 && alpha >= 0.0 {
        return Ok(EigenResult {
            lambda: saturated_level(n, kappa_n, v)?,
            regime: Regime::Saturated,
            c1: None,
            c2: None,
            c: Some(0.0),
            zero_average: true,
            extended: false,
        });
    }
    let j1 = zero(n, 0.0, 1)?;
    let ell2 = (j1 / r2).powi(2);
    if alpha == 0.0 {
        return local_wulff_eigenvalue(n, kappa_n, r2);
    }

    let target = 1.0 / alpha;
    let g = |eta: f64| inverse_weight(n, kappa_n, r1, r2, eta) - target;
    let eta = if alpha > 0.0 {
        let j2 = zero(n, 0.0, 2)?;
        let pole_hi = if r1 > 0.0 {
            ((j1 / r1).powi(2)).min((j2 / r2).powi(2))
        } else {
            (j2 / r2).powi(2)
        };
        let lo = step_off(ell2, pole_hi, |e| g(e) > 0.0);
        let hi = step_off(pole_hi, ell2, |e| g(e) < 0.0);
        match (lo, hi) {
            (Some(lo), Some(hi)) => brent(g, lo, hi, 0.0, "nonlocal pair eigenvalue")?,
            // weight below resolution: the eigenvalue sits on the pole
            (None, _) => ell2,
            (_, None) => {
                return Err(Error::BracketFailure {
                    what: "nonlocal pair eigenvalue (upper pole)".into(),
                })
            }
        }
    } else {
        // λ(α) ≥ λ(0) + α V
        let lo = ell2 + alpha * v - 1.0;
        let hi = step_off(ell2, lo, |e| g(e) < 0.0);
        match hi {
            Some(hi) => brent(g, lo, hi, 0.0, "nonlocal pair eigenvalue")?,
            None => ell2,
        }
    };

    if alpha > 0.0 {
        let jn = zero(n, 1.0, 1)?;
        let cap = (jn / r2).powi(2);
        if eta >= cap {
            return Ok(EigenResult {
                lambda: cap,
                regime: Regime::TwistedLargeBall,
                c1: None,
                c2: None,
                c: Some(0.0),
                zero_average: true,
                extended: false,
            });
        }
    }

    // amplitudes in the reduced normalization φ(ρ) = (√η ρ/2)^{-ν} J_ν(√η ρ)
    let phi = |r: f64| reduced_bessel(nu, 0.25 * eta * r * r);
    let (p1, p2) = (phi(r1), phi(r2));
    Ok(EigenResult {
        lambda: eta,
        regime: Regime::Nonlocal,
        c1: if r1 > 0.0 { Some(p2) } else { None },
        c2: Some(if r1 > 0.0 { p1 } else { 1.0 }),
        c: Some(-eta * p1 * p2),
        zero_average: false,
        extended: alpha < 0.0 && r1 > 0.0,
    })
}

/// Walks from `pole` toward `other` with geometrically shrinking offsets
/// until `ok` holds; `None` when the pole must be approached closer than
/// machine resolution.
fn step_off<F: Fn(f64) -> bool>(pole: f64, other: f64, ok: F) -> Option<f64> {
    let dir = (other - pole).signum();
    let mut delta = 1e-3;
    while delta > 1e-16 {
        let e = pole + dir * delta * pole.abs().max(1e-300);
        if (e - pole) * dir > 0.0 && (other - e) * dir > 0.0 && ok(e) {
            return Some(e);
        }
        delta *= 0.1;
    }
    None
}

/// `α_c` from the closed-form expression
/// `2^{3/n} κ^{2/n} j³ J_ν(θ*) / (θ* J_ν(θ*) - n J_{n/2}(θ*))` with
/// `θ* = 2^{1/n} j`, `j = j_{n/2-1,1}`.
pub fn critical_alpha(n: usize, kappa_n: f64) -> Result<f64> {
    check_n(n)?;
    let nf = n as f64;
    let nu = nu_of(n);
    let j = zero(n, 0.0, 1)?;
    let ts = 2f64.powf(1.0 / nf) * j;
    let jnu = j_unchecked(nu, ts);
    let jn2 = j_unchecked(nu + 1.0, ts);
    let den = ts * jnu - nf * jn2;
    if den.abs() < 1e-12 {
        return Err(Error::SingularDenominator {
            what: "critical alpha".into(),
        });
    }
    Ok(2f64.powf(3.0 / nf) * kappa_n.powf(2.0 / nf) * j.powi(3) * jnu / den)
}

/// `α_c` as the `R2 → 0` limit of [`alpha_for_eta`] at the saturated level of
/// a unit-volume single Wulff set (`κ_n R1^n = 1`), extrapolated in `R2`.
pub fn critical_alpha_oracle(n: usize, kappa_n: f64) -> Result<f64> {
    check_n(n)?;
    let nf = n as f64;
    let r1 = kappa_n.powf(-1.0 / nf);
    let eta = saturated_level(n, kappa_n, 1.0)?;
    let at = |h: f64| -> Result<f64> {
        Ok(alpha_for_eta(n, kappa_n, r1, h, eta, EtaRange::Extended)?.alpha)
    };
    // the R2 term vanishes like R2^{n+2}
    let h = 0.05 * r1;
    let p = 2f64.powf(nf + 2.0);
    let (a0, a1, a2) = (at(h)?, at(h / 2.0)?, at(h / 4.0)?);
    let r01 = (p * a1 - a0) / (p - 1.0);
    let r12 = (p * a2 - a1) / (p - 1.0);
    let p2 = 2f64.powf(nf + 4.0);
    Ok((p2 * r12 - r01) / (p2 - 1.0))
}

/// Samples `u(ρ) = A (ρ^{1-n/2} J_ν(√λ ρ) - R^{1-n/2} J_ν(√λ R))` on a uniform
/// grid of `[0, R]` with `grid_points` nodes including both ends.
pub fn radial_eigenfunction_profile(
    n: usize,
    r: f64,
    lambda: f64,
    amplitude: f64,
    grid_points: usize,
) -> Result<RadialProfile> {
    check_n(n)?;
    if grid_points < 2 {
        return Err(invalid("grid_points must be >= 2"));
    }
    if !(r > 0.0 && lambda > 0.0) {
        return Err(invalid("R and lambda must be positive"));
    }
    let nu = nu_of(n);
    let k = lambda.sqrt();
    let radial = |rho: f64| -> f64 {
        if rho == 0.0 {
            (0.5 * k).powf(nu) / gamma(nu + 1.0)
        } else {
            rho.powf(-nu) * j_unchecked(nu, k * rho)
        }
    };
    let edge = radial(r);
    let h = r / (grid_points - 1) as f64;
    let rho: Vec<f64> = (0..grid_points).map(|i| i as f64 * h).collect();
    let mut values: Vec<f64> = rho
        .iter()
        .map(|&p| amplitude * (radial(p) - edge))
        .collect();
    *values.last_mut().unwrap() = 0.0;
    Ok(RadialProfile { rho, values })
}

/// Applies `λ(α, tΩ) = t^{-2} λ(t^{n+2} α, Ω)`: given `λ` evaluated at the
/// rescaled weight on `Ω`, returns the eigenvalue on `tΩ`.
pub fn rescale(n: usize, t: f64, _alpha: f64, lambda_of_rescaled_weight: f64) -> Result<f64> {
    check_n(n)?;
    if !(t > 0.0) {
        return Err(invalid(format!("scale factor must be positive, got {t}")));
    }
    Ok(lambda_of_rescaled_weight / (t * t))
}

/// The weight `t^{n+2} α` at which `Ω` must be evaluated to obtain
/// `λ(α, tΩ)` through [`rescale`].
pub fn rescaled_weight(n: usize, t: f64, alpha: f64) -> f64 {
    t.powi(n as i32 + 2) * alpha
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const J01: f64 = 2.404_825_557_695_773;
    const J11: f64 = 3.831_705_970_207_512;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn local_eigenvalues() {
        let l = local_wulff_eigenvalue(3, 4.0 * PI / 3.0, 1.0).unwrap();
        assert!((l.lambda - PI * PI).abs() < 1e-10);
        let l2 = local_wulff_eigenvalue(2, PI, 1.0).unwrap().lambda;
        assert!((l2 - 5.783_185_962_946_784).abs() < 1e-11);
        let l22 = local_wulff_eigenvalue(2, PI, 2.0).unwrap().lambda;
        assert!((l22 - l2 / 4.0).abs() < 1e-14);
        assert!(local_wulff_eigenvalue(2, PI, 0.0).is_err());
        // κ^{2/n} j² / |Ω|^{2/n} form
        assert!(
            rel(
                local_level(3, 4.0 * PI / 3.0, 4.0 * PI / 3.0).unwrap(),
                PI * PI
            ) < 1e-14
        );
    }

    #[test]
    fn theta_equal_radii_is_theta_star() {
        let r = 0.5f64.sqrt();
        let th = theta_root(2, r, r).unwrap();
        assert!((th - 2f64.sqrt() * J01).abs() < 1e-12);
        assert!((th - 3.400_936_918_834_804).abs() < 1e-12);
    }

    #[test]
    fn theta_root_residual_and_bracket() {
        let ratio: f64 = 0.9;
        let r2 = (1.0 + ratio.powi(2)).powf(-0.5);
        let r1 = ratio * r2;
        let th = theta_root(2, r1, r2).unwrap();
        assert!(th > J01 / r2 && th < J01 / r1);
        let res = coupling(2, r1, r2, th);
        // residual relative to the size of the individual terms
        let scale = coupling(2, 0.0, r2, th).abs();
        assert!(res.abs() < 1e-9 * scale.max(1.0), "{res}");
        assert!(th >= 2f64.sqrt() * J01);
    }

    #[test]
    fn theta_root_scales_inversely() {
        let a = theta_root(3, 0.4, 0.9).unwrap();
        let b = theta_root(3, 0.8, 1.8).unwrap();
        assert!(rel(b, a / 2.0) < 1e-12);
        assert!(theta_root(2, 0.0, 1.0).is_err());
    }

    #[test]
    fn threshold_ratio_defines_crossover() {
        for n in 2..=4 {
            let c = threshold_ratio(n).unwrap();
            assert!(c > 0.0 && c < 1.0, "n={n}: {c}");
            let nf = n as f64;
            let jn = zero(n, 1.0, 1).unwrap();
            let r2 = (1.0 + c.powf(nf)).powf(-1.0 / nf);
            let th = theta_root(n, c * r2, r2).unwrap();
            assert!((th * th - (jn / r2).powi(2)).abs() < 1e-8 * th * th);
            let above = c + 1e-3;
            let r2a = (1.0 + above.powf(nf)).powf(-1.0 / nf);
            let tha = theta_root(n, above * r2a, r2a).unwrap();
            assert!(tha * tha < (jn / r2a).powi(2));
        }
    }

    #[test]
    fn twisted_values() {
        let t = twisted_pair_eigenvalue(2, 0.0, 1.0).unwrap();
        assert_eq!(t.regime, Regime::TwistedLargeBall);
        assert!((t.lambda - J11 * J11).abs() < 1e-10);
        assert!((t.lambda - 14.681_970_642_123_89).abs() < 1e-9);
        // equal radii with total volume π
        let r = 0.5f64.sqrt();
        let e = twisted_pair_eigenvalue(2, r, r).unwrap();
        assert!((e.lambda - 2.0 * J01 * J01).abs() < 1e-10);
        assert!((e.lambda - 11.566_371_925_893_57).abs() < 1e-9);
    }

    #[test]
    fn twisted_dispatch_is_minimum_of_candidates() {
        let n = 2;
        let jn = zero(n, 1.0, 1).unwrap();
        for i in 1..40 {
            let ratio = i as f64 / 40.0;
            let r2 = 1.0;
            let r1 = ratio;
            let th = theta_root(n, r1, r2).unwrap();
            let want = (th * th).min((jn / r2).powi(2));
            let got = twisted_pair_eigenvalue(n, r1, r2).unwrap().lambda;
            assert!(rel(got, want) < 1e-12, "ratio={ratio}");
        }
    }

    #[test]
    fn twisted_multiplier_consistency() {
        for &(n, r1, r2) in &[(2usize, 0.8, 1.0), (3, 0.9, 1.1), (4, 0.95, 1.0)] {
            let t = twisted_pair_eigenvalue(n, r1, r2).unwrap();
            assert_eq!(t.regime, Regime::TwistedTheta);
            let nf = n as f64;
            let nu = nf / 2.0 - 1.0;
            let k = t.lambda.sqrt();
            let (c1, c2) = (t.c1.unwrap(), t.c2.unwrap());
            let from_u1 = -c1 * t.lambda * r1.powf(1.0 - nf / 2.0) * j_unchecked(nu, k * r1);
            let from_u2 = c2 * t.lambda * r2.powf(1.0 - nf / 2.0) * j_unchecked(nu, k * r2);
            assert!(rel(from_u1, from_u2) < 1e-9, "n={n}");
            let lhs = c1 * r1.powf(nf / 2.0 + 1.0) * j_unchecked(nu + 2.0, k * r1);
            let rhs = c2 * r2.powf(nf / 2.0 + 1.0) * j_unchecked(nu + 2.0, k * r2);
            assert!(rel(lhs, rhs) < 1e-9);
        }
    }

    #[test]
    fn twisted_eigenfunction_has_zero_mean() {
        // integrate the two radial profiles with the coarea weight n κ ρ^{n-1}
        let (n, kappa) = (2usize, PI);
        let (r1, r2) = (0.85, 1.0);
        let t = twisted_pair_eigenvalue(n, r1, r2).unwrap();
        let integral = |r: f64, amp: f64| {
            let k = t.lambda.sqrt();
            let edge = j_unchecked(0.0, k * r);
            let f = |rho: f64| amp * (j_unchecked(0.0, k * rho) - edge) * 2.0 * kappa * rho;
            quadrature::double_exponential::integrate(f, 0.0, r, 1e-14).integral
        };
        let i1 = integral(r1, t.c1.unwrap());
        let i2 = integral(r2, -t.c2.unwrap());
        assert!((i1 + i2).abs() < 1e-9 * i1.abs(), "{i1} {i2}");
    }

    #[test]
    fn alpha_for_eta_range_and_poles() {
        let (n, k) = (2usize, PI);
        let lo = local_level(n, k, PI).unwrap();
        let hi = saturated_level(n, k, PI).unwrap();
        assert!(matches!(
            alpha_for_eta(n, k, 0.0, 1.0, lo * 0.9, EtaRange::Strict),
            Err(Error::EtaOutOfRange { .. })
        ));
        assert!(matches!(
            alpha_for_eta(n, k, 0.0, 1.0, hi, EtaRange::Strict),
            Err(Error::EtaOutOfRange { .. })
        ));
        let a = alpha_for_eta(n, k, 0.0, 1.0, 8.0, EtaRange::Strict).unwrap();
        assert!(a.alpha > 0.0 && a.alpha.is_finite() && !a.extended);
        let b = alpha_for_eta(n, k, 0.0, 1.0, hi * 1.01, EtaRange::Extended).unwrap();
        assert!(b.extended);
        // pole: √η R at j_{0,1}
        let r2 = 1.0;
        let eta_pole = (J01 / 0.7).powi(2);
        assert!(matches!(
            alpha_for_eta(n, k, 0.7, r2, eta_pole, EtaRange::Extended),
            Err(Error::PoleEncountered { .. })
        ));
    }

    #[test]
    fn alpha_vanishes_at_local_level() {
        let (n, k) = (2usize, PI);
        let lo = local_level(n, k, PI).unwrap();
        let mut prev = f64::INFINITY;
        for e in [1e-2, 1e-4, 1e-6, 1e-8] {
            let a = alpha_for_eta(n, k, 0.0, 1.0, lo * (1.0 + e), EtaRange::Strict)
                .unwrap()
                .alpha;
            assert!(a > 0.0 && a < prev);
            prev = a;
        }
        assert!(prev < 1e-6);
    }

    #[test]
    fn alpha_eta_round_trip_single_ball() {
        let a = alpha_for_eta(2, PI, 0.0, 1.0, 8.0, EtaRange::Strict)
            .unwrap()
            .alpha;
        let back = nonlocal_pair_eigenvalue(2, PI, 0.0, 1.0, a).unwrap();
        assert!(rel(back.lambda, 8.0) < 1e-9);
        assert_eq!(back.regime, Regime::Nonlocal);
    }

    #[test]
    fn inverse_weight_matches_displayed_relation() {
        // the rearranged relation used for inversion agrees with the displayed one
        for &(n, r1, r2, eta) in &[
            (2usize, 0.3, 1.0, 7.0),
            (2, 0.9, 1.0, 6.5),
            (3, 0.5, 0.8, 18.0),
            (4, 0.2, 1.0, 16.0),
        ] {
            let kappa = 1.7;
            let a = alpha_for_eta(n, kappa, r1, r2, eta, EtaRange::Extended).unwrap();
            let b = inverse_weight(n, kappa, r1, r2, eta);
            assert!(
                (a.inv_alpha - b).abs() < 1e-11 * a.inv_alpha.abs().max(1e-3),
                "{a:?} {b}"
            );
        }
    }

    #[test]
    fn pair_special_cases() {
        let l = nonlocal_pair_eigenvalue(2, PI, 0.5, 1.0, 0.0).unwrap();
        assert!((l.lambda - 5.783_185_962_946_784).abs() < 1e-10);
        let r = 0.5f64.sqrt();
        for alpha in [0.0, 0.5, 10.0, 1e6] {
            let s = nonlocal_pair_eigenvalue(2, PI, r, r, alpha).unwrap();
            assert_eq!(s.regime, Regime::Saturated);
            assert!((s.lambda - 11.566_371_925_893_57).abs() < 1e-9);
        }
        assert!(nonlocal_pair_eigenvalue(2, PI, 0.0, 0.0, 1.0).is_err());
        assert!(nonlocal_pair_eigenvalue(2, PI, 0.5, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn pair_monotone_and_lipschitz() {
        let (n, k) = (2usize, PI);
        let (r1, r2) = (0.6, 1.0);
        let v = k * (r1 * r1 + r2 * r2);
        let mut prev = nonlocal_pair_eigenvalue(n, k, r1, r2, -5.0).unwrap().lambda;
        let mut a = -5.0;
        while a < 60.0 {
            let eps = 0.37;
            let next = nonlocal_pair_eigenvalue(n, k, r1, r2, a + eps)
                .unwrap()
                .lambda;
            assert!(
                next >= prev - 1e-10 && next - prev <= v * eps + 1e-10,
                "a={a}"
            );
            prev = next;
            a += eps;
        }
    }

    #[test]
    fn pair_large_alpha_tends_to_twisted() {
        for &(r1, r2) in &[(0.8, 1.0), (0.2, 1.0), (0.0, 1.0)] {
            let t = twisted_pair_eigenvalue(2, r1, r2).unwrap().lambda;
            let l = nonlocal_pair_eigenvalue(2, PI, r1, r2, 1e9).unwrap().lambda;
            assert!(l <= t + 1e-9 && rel(l, t) < 1e-6, "{r1}: {l} vs {t}");
        }
    }

    #[test]
    fn negative_alpha_goes_below_zero_eta() {
        let l = nonlocal_pair_eigenvalue(2, PI, 0.0, 1.0, -50.0).unwrap();
        assert!(l.lambda < 0.0);
        let back = alpha_inverse_at(2, PI, 0.0, 1.0, l.lambda);
        assert!(rel(back, -50.0) < 1e-9);
        let l3 = nonlocal_pair_eigenvalue(3, 4.0 * PI / 3.0, 0.4, 0.9, -3.0).unwrap();
        assert!(l3.extended);
    }

    fn alpha_inverse_at(n: usize, k: f64, r1: f64, r2: f64, eta: f64) -> f64 {
        1.0 / inverse_weight(n, k, r1, r2, eta)
    }

    #[test]
    fn critical_alpha_matches_limit_oracle() {
        for (n, kappa) in [(2usize, PI), (3, 4.0 * PI / 3.0), (4, PI * PI / 2.0)] {
            let a = critical_alpha(n, kappa).unwrap();
            let o = critical_alpha_oracle(n, kappa).unwrap();
            assert!(a > 0.0 && o > 0.0);
            assert!(rel(a, o) < 1e-6, "n={n}: {a} vs {o}");
        }
        // independent high-precision evaluation of the displayed expression
        assert!((critical_alpha(2, PI).unwrap() - 28.199_646_290_107_28).abs() < 1e-9);
        assert!((critical_alpha(3, 4.0 * PI / 3.0).unwrap() - 26.772_818_644_475_745).abs() < 1e-9);
    }

    #[test]
    fn critical_alpha_makes_single_ball_saturated() {
        let (n, k) = (2usize, PI);
        for v in [0.5, 1.0, PI, 7.0] {
            let alpha = critical_alpha(n, k).unwrap() / v.powf(1.0 + 2.0 / n as f64);
            let r = (v / k).sqrt();
            let l = nonlocal_pair_eigenvalue(n, k, 0.0, r, alpha)
                .unwrap()
                .lambda;
            assert!(rel(l, saturated_level(n, k, v).unwrap()) < 1e-10, "v={v}");
        }
    }

    #[test]
    fn profile_boundary_and_origin() {
        let p = radial_eigenfunction_profile(2, 1.0, J01 * J01, 1.0, 101).unwrap();
        assert_eq!(*p.values.last().unwrap(), 0.0);
        // J_0(0) - J_0(j01) = 1
        assert!((p.values[0] - 1.0).abs() < 1e-15);
        let p3 = radial_eigenfunction_profile(3, 1.0, PI * PI, 1.0, 11).unwrap();
        // ρ^{-1/2} J_{1/2}(πρ) → sqrt(π/2)/Γ(3/2) at 0, vanishes at R = 1
        assert!((p3.values[0] - (0.5 * PI).sqrt() / gamma(1.5)).abs() < 1e-14);
        assert!(radial_eigenfunction_profile(2, 1.0, 1.0, 1.0, 1).is_err());
    }

    #[test]
    fn profile_solves_radial_equation_with_constant_rhs() {
        let (n, r) = (3usize, 1.0);
        let lambda = 13.0;
        let amp = 0.7;
        let m = 2001;
        let p = radial_eigenfunction_profile(n, r, lambda, amp, m).unwrap();
        let h = r / (m - 1) as f64;
        let nu = 0.5;
        let c_exact = -lambda * amp * r.powf(-nu) * j_unchecked(nu, lambda.sqrt() * r);
        for i in (100..m - 100).step_by(150) {
            let (um, u0, up) = (p.values[i - 1], p.values[i], p.values[i + 1]);
            let rho = p.rho[i];
            let lhs = (up - 2.0 * u0 + um) / (h * h)
                + (n as f64 - 1.0) / rho * (up - um) / (2.0 * h)
                + lambda * u0;
            assert!(
                (lhs - c_exact).abs() < 1e-4 * c_exact.abs(),
                "rho={rho}: {lhs} vs {c_exact}"
            );
        }
    }

    #[test]
    fn rescale_helpers() {
        assert_eq!(rescale(2, 1.0, 3.0, 7.5).unwrap(), 7.5);
        assert!(rescale(2, 0.0, 1.0, 1.0).is_err());
        let base = local_wulff_eigenvalue(2, PI, 1.0).unwrap().lambda;
        let t = 1.7;
        let scaled = local_wulff_eigenvalue(2, PI, t).unwrap().lambda;
        assert!(rel(rescale(2, t, 0.0, base).unwrap(), scaled) < 1e-14);
        assert_eq!(rescaled_weight(2, 2.0, 1.0), 16.0);
    }
}
