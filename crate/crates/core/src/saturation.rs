//! Minimization of the pair eigenvalue over mass splits at fixed volume, the
//! piecewise lower bound, and the saturation curve.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::closedform::{
    critical_alpha, local_level, nonlocal_pair_eigenvalue, saturated_level, Regime,
};
use crate::error::{invalid, Error, Result};
use crate::roots::golden_section;

/// Number of uniform seeds in the dense scan over `s ∈ [0, 1/2]`.
pub const SPLIT_SEEDS: usize = 64;
/// Relative slack under which an interior minimum is snapped to an endpoint.
const ENDPOINT_SNAP: f64 = 1e-12;

/// Mass fraction `s ∈ [0, 1/2]` of the smaller set.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct ShapeSplit(f64);

impl ShapeSplit {
    pub fn new(s: f64) -> Result<Self> {
        if !(0.0..=0.5).contains(&s) {
            return Err(invalid(format!("split must lie in [0, 1/2], got {s}")));
        }
        Ok(Self(s))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_single(self) -> bool {
        self.0 == 0.0
    }

    pub fn is_equal(self) -> bool {
        self.0 == 0.5
    }

    /// `(R1, R2)` with `κ_n R1^n = sV` and `κ_n R2^n = (1-s)V`.
    pub fn radii(self, n: usize, kappa_n: f64, volume: f64) -> (f64, f64) {
        let inv = 1.0 / n as f64;
        let r1 = (self.0 * volume / kappa_n).powf(inv);
        let r2 = ((1.0 - self.0) * volume / kappa_n).powf(inv);
        if self.is_equal() {
            (r2, r2)
        } else {
            (r1, r2)
        }
    }
}

fn check_common(n: usize, kappa_n: f64, volume: f64) -> Result<()> {
    if n < 2 {
        return Err(invalid(format!("dimension must be >= 2, got {n}")));
    }
    if !(kappa_n > 0.0 && kappa_n.is_finite()) {
        return Err(invalid("kappa_n must be positive"));
    }
    if !(volume > 0.0 && volume.is_finite()) {
        return Err(invalid(format!("volume must be positive, got {volume}")));
    }
    Ok(())
}

/// Right-hand side of the lower bound for `λ(α, Ω)` at `|Ω| = V`:
/// `λ(α, Ω^#)` while `α V^{1+2/n} ≤ α_c`, the saturated level beyond.
/// For `α < 0` this is `λ(α, Ω^#)`.
pub fn theorem_bound(n: usize, kappa_n: f64, volume: f64, alpha: f64) -> Result<f64> {
    check_common(n, kappa_n, volume)?;
    if alpha.is_nan() {
        return Err(invalid("alpha is NaN"));
    }
    let scaled = alpha * volume.powf(1.0 + 2.0 / n as f64);
    if scaled <= critical_alpha(n, kappa_n)? {
        let r = (volume / kappa_n).powf(1.0 / n as f64);
        Ok(nonlocal_pair_eigenvalue(n, kappa_n, 0.0, r, alpha)?.lambda)
    } else {
        saturated_level(n, kappa_n, volume)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairMinimum {
    pub split: ShapeSplit,
    pub lambda_min: f64,
    pub regime: Regime,
}

fn eigen_at(n: usize, kappa_n: f64, volume: f64, alpha: f64, s: f64) -> Result<(f64, Regime)> {
    let (r1, r2) = ShapeSplit(s).radii(n, kappa_n, volume);
    nonlocal_pair_eigenvalue(n, kappa_n, r1, r2, alpha)
        .map(|e| (e.lambda, e.regime))
        .map_err(|e| Error::InvalidArgument(format!("pair eigenvalue failed at s = {s}: {e}")))
}

/// `min_s λ(α, W_{R1(s)} ∪ W_{R2(s)})` over `s ∈ [0, 1/2]` at volume `V`.
///
/// A dense scan over [`SPLIT_SEEDS`] uniform splits (plus both endpoints)
/// picks the best seed, which is refined by golden-section search on its
/// neighbouring interval.
pub fn min_over_pairs(n: usize, kappa_n: f64, volume: f64, alpha: f64) -> Result<PairMinimum> {
    check_common(n, kappa_n, volume)?;
    if alpha.is_nan() {
        return Err(invalid("alpha is NaN"));
    }
    let ds = 0.5 / SPLIT_SEEDS as f64;
    let scan: Vec<(f64, f64, Regime)> = (0..=SPLIT_SEEDS)
        .map(|k| {
            let s = if k == SPLIT_SEEDS { 0.5 } else { k as f64 * ds };
            eigen_at(n, kappa_n, volume, alpha, s).map(|(l, r)| (s, l, r))
        })
        .collect::<Result<_>>()?;
    let best = scan
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .map(|(k, _)| k)
        .expect("nonempty scan");
    let (mut s_opt, mut l_opt, mut regime) = scan[best];

    let lo = if best == 0 { 0.0 } else { scan[best - 1].0 };
    let hi = if best == SPLIT_SEEDS {
        0.5
    } else {
        scan[best + 1].0
    };
    let mut failure = None;
    let (s_ref, l_ref) = golden_section(
        |s| match eigen_at(n, kappa_n, volume, alpha, s) {
            Ok((l, _)) => l,
            Err(e) => {
                failure.get_or_insert(e);
                f64::INFINITY
            }
        },
        lo,
        hi,
        1e-10,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    if l_ref < l_opt * (1.0 - ENDPOINT_SNAP) {
        s_opt = s_ref;
        l_opt = l_ref;
        regime = eigen_at(n, kappa_n, volume, alpha, s_ref)?.1;
    }
    Ok(PairMinimum {
        split: ShapeSplit(s_opt),
        lambda_min: l_opt,
        regime,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSample {
    pub alpha: f64,
    pub lambda_min: f64,
    pub split_s: f64,
    pub regime: Regime,
    /// Set when this point failed; the numeric fields are then `NaN`.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaturationCurve {
    pub n: usize,
    pub kappa_n: f64,
    pub volume: f64,
    /// `α_c / V^{1+2/n}`.
    pub critical_alpha_scaled: f64,
    pub samples: Vec<CurveSample>,
    /// Curve invariants that failed to hold.
    pub violations: Vec<String>,
}

impl SaturationCurve {
    pub fn saturated_level(&self) -> Result<f64> {
        saturated_level(self.n, self.kappa_n, self.volume)
    }

    /// Smallest sampled `α` whose optimal split is the equal pair.
    pub fn first_saturated_alpha(&self) -> Option<f64> {
        self.samples
            .iter()
            .find(|s| s.error.is_none() && s.split_s == 0.5)
            .map(|s| s.alpha)
    }
}

/// [`min_over_pairs`] for every `α` (ascending), evaluated in parallel and
/// assembled in input order. Per-point failures are recorded in the sample.
pub fn saturation_curve(
    n: usize,
    kappa_n: f64,
    volume: f64,
    alphas: &[f64],
) -> Result<SaturationCurve> {
    check_common(n, kappa_n, volume)?;
    if alphas.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(invalid("alphas must be sorted ascending"));
    }
    let samples: Vec<CurveSample> = alphas
        .par_iter()
        .map(|&alpha| match min_over_pairs(n, kappa_n, volume, alpha) {
            Ok(m) => CurveSample {
                alpha,
                lambda_min: m.lambda_min,
                split_s: m.split.value(),
                regime: m.regime,
                error: None,
            },
            Err(e) => CurveSample {
                alpha,
                lambda_min: f64::NAN,
                split_s: f64::NAN,
                regime: Regime::Nonlocal,
                error: Some(e.to_string()),
            },
        })
        .collect();
    let critical = critical_alpha(n, kappa_n)? / volume.powf(1.0 + 2.0 / n as f64);
    let mut curve = SaturationCurve {
        n,
        kappa_n,
        volume,
        critical_alpha_scaled: critical,
        samples,
        violations: Vec::new(),
    };
    curve.violations = check_curve(&curve)?;
    Ok(curve)
}

fn check_curve(curve: &SaturationCurve) -> Result<Vec<String>> {
    let sat = curve.saturated_level()?;
    let floor = local_level(curve.n, curve.kappa_n, curve.volume)?;
    let mut out = Vec::new();
    let ok: Vec<&CurveSample> = curve.samples.iter().filter(|s| s.error.is_none()).collect();
    for s in curve.samples.iter().filter(|s| s.error.is_some()) {
        out.push(format!(
            "alpha = {}: {}",
            s.alpha,
            s.error.as_deref().unwrap_or("")
        ));
    }
    for w in ok.windows(2) {
        if w[1].lambda_min < w[0].lambda_min * (1.0 - 1e-12) {
            out.push(format!(
                "lambda_min decreases between alpha = {} and {}",
                w[0].alpha, w[1].alpha
            ));
        }
    }
    for s in &ok {
        if s.alpha >= curve.critical_alpha_scaled && (s.lambda_min - sat).abs() > 1e-8 * sat {
            out.push(format!(
                "alpha = {}: lambda_min {} off the plateau {sat}",
                s.alpha, s.lambda_min
            ));
        }
        if s.alpha >= 0.0 && s.lambda_min < floor * (1.0 - 1e-12) {
            out.push(format!(
                "alpha = {}: lambda_min below the Faber-Krahn level",
                s.alpha
            ));
        }
    }
    Ok(out)
}
