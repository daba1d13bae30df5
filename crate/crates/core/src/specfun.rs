//! Bessel functions of the first kind `J_ν` for real order `ν ≥ 0` and their
//! first positive zeros.
//!
//! Small arguments use the power series; larger arguments use Miller's
//! backward recurrence normalized by the Neumann-type identity
//!
//! ```text
//! (x/2)^μ / Γ(1+μ) = Σ_k c_k J_{μ+2k}(x),   c_0 = 1,
//! c_k = (μ+2k) (μ+1)(μ+2)…(μ+k-1) / k!
//! ```
//!
//! where `μ ∈ [0, 1)` is the fractional part of the order.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{invalid, Error, Result};
use crate::roots::bisect;

/// Below this argument the power series is used.
const SERIES_MAX_X: f64 = 4.0;
const SERIES_TERMS: usize = 30;
const SERIES_RTOL: f64 = 1e-16;

/// Magnitude of `J_den` below which a ratio is flagged as pole-adjacent.
pub const POLE_THRESHOLD: f64 = 1e-13;

/// Order `ν` of a Bessel function; finite and nonnegative.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct BesselOrder(f64);

impl BesselOrder {
    pub fn new(nu: f64) -> Result<Self> {
        if !nu.is_finite() || nu < 0.0 {
            return Err(invalid(format!(
                "Bessel order must be finite and >= 0, got {nu}"
            )));
        }
        Ok(Self(nu))
    }

    /// `n/2 + shift` for dimension `n`, e.g. `shift = -1` gives `n/2 - 1`.
    pub fn half_dim(n: usize, shift: f64) -> Result<Self> {
        Self::new(n as f64 / 2.0 + shift)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// `J_ν(x)` for `x ≥ 0`.
pub fn bessel_j(nu: BesselOrder, x: f64) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(invalid(format!("bessel_j requires finite x >= 0, got {x}")));
    }
    Ok(j_unchecked(nu.0, x))
}

/// `J_ν(x)` without argument validation; callers guarantee `ν ≥ 0`, `x ≥ 0`.
pub(crate) fn j_unchecked(nu: f64, x: f64) -> f64 {
    if x == 0.0 {
        return if nu == 0.0 { 1.0 } else { 0.0 };
    }
    if x <= SERIES_MAX_X {
        return j_series(nu, x);
    }
    let m = nu.floor();
    let mu = nu - m;
    let seq = miller_sequence(mu, x, m as usize);
    seq[m as usize]
}

/// `J_ν(x)` and `J_{ν+k}(x)` for `k = 1, 2` from a single recurrence.
pub(crate) fn j_triple(nu: f64, x: f64) -> [f64; 3] {
    if x <= SERIES_MAX_X {
        return [
            j_series(nu, x),
            j_series(nu + 1.0, x),
            j_series(nu + 2.0, x),
        ];
    }
    let m = nu.floor();
    let mu = nu - m;
    let m = m as usize;
    let seq = miller_sequence(mu, x, m + 2);
    [seq[m], seq[m + 1], seq[m + 2]]
}

fn j_series(nu: f64, x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..=SERIES_TERMS {
        let kf = k as f64;
        term *= q / (kf * (nu + kf));
        sum += term;
        if term.abs() < SERIES_RTOL * sum.abs() {
            break;
        }
    }
    (0.5 * x).powf(nu) / gamma(nu + 1.0) * sum
}

/// `J_{μ+k}(x)` for `k = 0..=kmax` by normalized backward recurrence.
fn miller_sequence(mu: f64, x: f64, kmax: usize) -> Vec<f64> {
    let start = kmax + x.ceil() as usize + 40 + (4.0 * x.sqrt()).ceil() as usize;
    let mut f = vec![0.0; start + 2];
    f[start + 1] = 0.0;
    f[start] = 1e-30;
    for k in (1..=start).rev() {
        let a = mu + k as f64;
        f[k - 1] = 2.0 * a / x * f[k] - f[k + 1];
        if f[k - 1].abs() > 1e250 {
            for v in f[k - 1..].iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    // normalization sum over even offsets
    let mut sum = f[0];
    let mut prod = 1.0; // (μ+1)…(μ+k-1)
    let mut fact = 1.0; // k!
    let mut k = 1;
    while 2 * k <= start {
        let kf = k as f64;
        if k >= 2 {
            prod *= mu + kf - 1.0;
        }
        fact *= kf;
        sum += (mu + 2.0 * kf) * prod / fact * f[2 * k];
        k += 1;
    }
    let scale = (0.5 * x).powf(mu) / gamma(1.0 + mu) / sum;
    f.truncate(kmax + 1);
    for v in f.iter_mut() {
        *v *= scale;
    }
    f
}

/// `Σ_m (-s)^m / (m! Γ(m+ν+1))`, an entire function of `s`.
///
/// For `s = x²/4 > 0` this equals `(x/2)^{-ν} J_ν(x)`; for `s = -y²/4 < 0`
/// it equals `(y/2)^{-ν} I_ν(y)`. Used where the eigenvalue parameter can
/// cross zero.
pub(crate) fn reduced_bessel(nu: f64, s: f64) -> f64 {
    if s > 0.25 * SERIES_MAX_X * SERIES_MAX_X {
        let x = 2.0 * s.sqrt();
        return j_unchecked(nu, x) / (0.5 * x).powf(nu);
    }
    let mut term = 1.0 / gamma(nu + 1.0);
    let mut sum = term;
    for m in 1..2000 {
        let mf = m as f64;
        term *= -s / (mf * (nu + mf));
        sum += term;
        if term.abs() <= SERIES_RTOL * sum.abs() && (s >= 0.0 || mf * mf > -s) {
            break;
        }
    }
    sum
}

/// Result of [`bessel_ratio`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ratio {
    pub value: f64,
    /// Set when `|J_den(x)| < POLE_THRESHOLD`; the value is then unreliable.
    pub pole: bool,
}

/// `J_num(x) / J_den(x)` with a pole-proximity flag.
pub fn bessel_ratio(num: BesselOrder, den: BesselOrder, x: f64) -> Ratio {
    let jn = j_unchecked(num.0, x);
    let jd = j_unchecked(den.0, x);
    Ratio {
        value: jn / jd,
        pole: jd.abs() < POLE_THRESHOLD,
    }
}

fn zero_cache() -> &'static Mutex<HashMap<(u64, u32), f64>> {
    static CACHE: OnceLock<Mutex<HashMap<(u64, u32), f64>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// First positive zero `j_{ν,1}`.
pub fn bessel_j_first_zero(nu: BesselOrder) -> Result<f64> {
    bessel_j_zero(nu, 1)
}

/// `k`-th positive zero of `J_ν` for `k ∈ {1, 2}` (the second zero only
/// serves as a bracketing endpoint).
pub fn bessel_j_zero(nu: BesselOrder, k: u32) -> Result<f64> {
    if !(1..=2).contains(&k) {
        return Err(invalid("only the first two zeros are supported"));
    }
    let key = (nu.0.to_bits(), k);
    if let Some(z) = zero_cache().lock().unwrap().get(&key) {
        return Ok(*z);
    }
    let z = if k == 1 {
        scan_zero(nu.0, nu.0, nu.0 + 10.0)?
    } else {
        let j1 = bessel_j_zero(nu, 1)?;
        scan_zero(nu.0, j1 + 0.5, j1 + 10.0)?
    };
    zero_cache().lock().unwrap().insert(key, z);
    Ok(z)
}

fn scan_zero(nu: f64, from: f64, to: f64) -> Result<f64> {
    const STEP: f64 = 0.25;
    let mut a = from.max(1e-3);
    let mut fa = j_unchecked(nu, a);
    while a < to {
        let b = a + STEP;
        let fb = j_unchecked(nu, b);
        if fa == 0.0 {
            return Ok(a);
        }
        if fa.signum() != fb.signum() {
            return bisect(|x| j_unchecked(nu, x), a, b, 0.0, "Bessel zero");
        }
        a = b;
        fa = fb;
    }
    Err(Error::BracketFailure {
        what: format!("zero of J_{nu} on [{from}, {to}]"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn ord(nu: f64) -> BesselOrder {
        BesselOrder::new(nu).unwrap()
    }

    #[test]
    fn values_at_origin() {
        assert_eq!(bessel_j(ord(0.0), 0.0).unwrap(), 1.0);
        assert_eq!(bessel_j(ord(1.0), 0.0).unwrap(), 0.0);
        assert_eq!(bessel_j(ord(2.5), 0.0).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(BesselOrder::new(-0.5).is_err());
        assert!(BesselOrder::new(f64::NAN).is_err());
        assert!(bessel_j(ord(1.0), -1.0).is_err());
    }

    #[test]
    fn half_order_matches_sine_form() {
        // oracle: J_{1/2}(x) = sqrt(2/(πx)) sin x
        for i in 0..100 {
            let x = 0.2 * i as f64 + 0.013;
            let exact = (2.0 / (PI * x)).sqrt() * x.sin();
            let got = bessel_j(ord(0.5), x).unwrap();
            assert!(
                (got - exact).abs() <= 1e-12 * exact.abs(),
                "x={x}: {got} vs {exact}"
            );
        }
    }

    #[test]
    #[allow(clippy::excessive_precision)]
    fn matches_reference_values() {
        // reference values from a 30-digit arbitrary-precision evaluation
        let cases = [
            (0.0, 0.5, 0.938_469_807_240_812_9),
            (0.0, 3.0, -0.260_051_954_901_933_44),
            (0.0, 10.0, -0.245_935_764_451_348_34),
            (0.0, 25.0, 0.096_266_783_275_958_12),
            (0.0, 45.0, 0.115_818_670_673_256_32),
            (2.3, 0.5, 0.015_077_421_611_416_075),
            (2.3, 3.0, 0.448_317_581_223_676_86),
            (2.3, 10.0, 0.232_317_644_478_494_65),
            (2.3, 25.0, -0.044_527_825_784_074_99),
            (2.3, 45.0, -0.117_029_749_775_905_88),
            (7.0, 0.5, 1.201_586_732_776_302_3e-8),
            (7.0, 3.0, 0.002_547_294_451_804_693_8),
            (7.0, 10.0, 0.216_710_917_685_051_5),
            (7.0, 25.0, -0.010_168_168_212_703_074),
            (7.0, 45.0, -0.083_727_351_754_599_59),
        ];
        for (nu, x, want) in cases {
            let got = bessel_j(ord(nu), x).unwrap();
            assert!(
                (got - want).abs() <= 1e-12 * want.abs().max(1e-3),
                "J_{nu}({x}) = {got}, want {want}"
            );
        }
    }

    #[test]
    fn first_zeros() {
        assert!((bessel_j_first_zero(ord(0.5)).unwrap() - PI).abs() < 1e-11);
        assert!((bessel_j_first_zero(ord(0.0)).unwrap() - 2.404_825_557_695_773).abs() < 1e-11);
        assert!((bessel_j_first_zero(ord(1.0)).unwrap() - 3.831_705_970_207_512).abs() < 1e-11);
        assert!((bessel_j_zero(ord(0.0), 2).unwrap() - 5.520_078_110_286_311).abs() < 1e-11);
        assert!((bessel_j_zero(ord(1.5), 2).unwrap() - 7.725_251_836_937_707).abs() < 1e-11);
    }

    #[test]
    fn large_order_zero_is_bracketed() {
        let z = bessel_j_first_zero(ord(50.0)).unwrap();
        assert!(z > 50.0 && z < 60.0);
        assert!(j_unchecked(50.0, z).abs() < 1e-12);
    }

    #[test]
    fn ratio_pole_flag() {
        let j01 = bessel_j_first_zero(ord(0.0)).unwrap();
        let r = bessel_ratio(ord(2.0), ord(0.0), j01);
        assert!(r.pole);
        let r = bessel_ratio(ord(1.0), ord(0.0), 1e-8);
        assert!(!r.pole);
        assert!(r.value.abs() < 1e-8);
    }

    #[test]
    fn triple_matches_single_evaluations() {
        for &(nu, x) in &[(0.0, 2.0), (0.5, 7.3), (1.0, 12.5), (2.5, 30.0)] {
            let t = j_triple(nu, x);
            for (k, v) in t.iter().enumerate() {
                let single = j_unchecked(nu + k as f64, x);
                assert!((v - single).abs() < 1e-14 * single.abs().max(1.0));
            }
        }
    }

    #[test]
    fn reduced_bessel_agrees_on_both_sides_of_the_switch() {
        for &nu in &[0.0, 0.5, 1.0, 3.0] {
            for &x in &[0.3, 2.0, 3.99, 4.01, 9.0] {
                let s = 0.25 * x * x;
                let want = j_unchecked(nu, x) / (0.5 * x).powf(nu);
                let got = reduced_bessel(nu, s);
                assert!(
                    (got - want).abs() < 1e-12 * want.abs().max(1e-3),
                    "nu={nu} x={x}"
                );
            }
        }
    }

    #[test]
    fn reduced_bessel_negative_argument_is_modified_bessel() {
        // I_{1/2}(y) = sqrt(2/(πy)) sinh y
        for &y in &[0.5f64, 3.0, 12.0, 40.0] {
            let i_half = (2.0 / (PI * y)).sqrt() * y.sinh();
            let want = i_half / (0.5 * y).sqrt();
            let got = reduced_bessel(0.5, -0.25 * y * y);
            assert!((got - want).abs() < 1e-12 * want, "y={y}: {got} vs {want}");
        }
    }
}
