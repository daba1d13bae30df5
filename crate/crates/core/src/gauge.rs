//! Anisotropic gauges `H`, their polars `H°`, and Wulff-set measures.
//!
//! Every gauge is normalized at construction so that `|{H < 1}| = ω_n`.
//! Only families with a closed-form polar are supported: Euclidean,
//! `ℓ^p` with `1 < p < ∞`, and quadratic (ellipse) gauges.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GaugeKind {
    Euclidean,
    PNorm {
        p: f64,
    },
    /// `H(ξ) = s·sqrt(ξᵀ A ξ)` with `A` symmetric positive definite, row-major.
    Ellipse {
        matrix: Vec<f64>,
    },
}

/// Closed-form description of the polar gauge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PolarDescriptor {
    SelfDual,
    ConjugateExponent { q: f64 },
    InverseMatrix { matrix: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarData {
    /// Measure of the unit Wulff set `{H° < 1}`.
    pub kappa_n: f64,
    /// Anisotropic perimeter of the unit Wulff set, `n·κ_n`.
    pub gamma_n: f64,
    pub polar: PolarDescriptor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gauge {
    n: usize,
    kind: GaugeKind,
    scale: f64,
    a_low: f64,
    a_high: f64,
    inverse: Option<Vec<f64>>,
    det: f64,
}

/// Volume of the Euclidean unit ball in `R^n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    let nf = n as f64;
    PI.powf(nf / 2.0) / gamma(nf / 2.0 + 1.0)
}

/// Volume of the unit `ℓ^p` ball in `R^n`.
fn lp_ball_volume(n: usize, p: f64) -> f64 {
    let nf = n as f64;
    (2.0 * gamma(1.0 + 1.0 / p)).powf(nf) / gamma(1.0 + nf / p)
}

fn lp_norm(x: &[f64], p: f64) -> f64 {
    let m = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if m == 0.0 {
        return 0.0;
    }
    m * x
        .iter()
        .map(|v| (v.abs() / m).powf(p))
        .sum::<f64>()
        .powf(1.0 / p)
}

/// Gradient of the `ℓ^p` norm at `x ≠ 0`.
fn lp_norm_gradient(x: &[f64], p: f64) -> Vec<f64> {
    let norm = lp_norm(x, p);
    x.iter()
        .map(|v| v.signum() * (v.abs() / norm).powf(p - 1.0))
        .collect()
}

fn quad_form(m: &[f64], x: &[f64]) -> f64 {
    let n = x.len();
    let mut acc = 0.0;
    for i in 0..n {
        let row = &m[i * n..(i + 1) * n];
        acc += x[i] * row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
    acc
}

fn mat_vec(m: &[f64], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|i| {
            m[i * n..(i + 1) * n]
                .iter()
                .zip(x)
                .map(|(a, b)| a * b)
                .sum()
        })
        .collect()
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

impl Gauge {
    pub fn euclidean(n: usize) -> Result<Self> {
        check_dim(n)?;
        Ok(Self {
            n,
            kind: GaugeKind::Euclidean,
            scale: 1.0,
            a_low: 1.0,
            a_high: 1.0,
            inverse: None,
            det: 1.0,
        })
    }

    pub fn p_norm(n: usize, p: f64) -> Result<Self> {
        check_dim(n)?;
        if !(p > 1.0 && p.is_finite()) {
            return Err(invalid(format!(
                "p-norm gauge requires 1 < p < inf, got {p}"
            )));
        }
        let nf = n as f64;
        let scale = (lp_ball_volume(n, p) / unit_ball_volume(n)).powf(1.0 / nf);
        // extremes of ||ξ||_p / |ξ| on the sphere
        let corner = nf.powf(1.0 / p - 0.5);
        let (lo, hi) = if p >= 2.0 {
            (corner, 1.0)
        } else {
            (1.0, corner)
        };
        Ok(Self {
            n,
            kind: GaugeKind::PNorm { p },
            scale,
            a_low: scale * lo,
            a_high: scale * hi,
            inverse: None,
            det: 1.0,
        })
    }

    /// Quadratic gauge from a symmetric positive-definite `n×n` matrix in
    /// row-major order.
    pub fn ellipse(n: usize, matrix: Vec<f64>) -> Result<Self> {
        check_dim(n)?;
        if matrix.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: matrix.len(),
            });
        }
        let a = DMatrix::from_row_slice(n, n, &matrix);
        if (&a - a.transpose()).amax() > 1e-12 * a.amax() {
            return Err(invalid("ellipse matrix must be symmetric"));
        }
        let chol = a
            .clone()
            .cholesky()
            .ok_or_else(|| invalid("ellipse matrix must be positive definite"))?;
        let det = chol.determinant();
        let inv = chol.inverse();
        let eig = a.symmetric_eigen();
        let lmin = eig.eigenvalues.min();
        let lmax = eig.eigenvalues.max();
        let scale = det.powf(-0.5 / n as f64);
        let inverse: Vec<f64> = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| inv[(i, j)])
            .collect();
        Ok(Self {
            n,
            kind: GaugeKind::Ellipse { matrix },
            scale,
            a_low: scale * lmin.sqrt(),
            a_high: scale * lmax.sqrt(),
            inverse: Some(inverse),
            det,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> &GaugeKind {
        &self.kind
    }

    /// Normalizing factor `s` multiplying the raw norm.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Constants with `a_low |ξ| ≤ H(ξ) ≤ a_high |ξ|`.
    pub fn bounds(&self) -> (f64, f64) {
        (self.a_low, self.a_high)
    }

    /// True when `H(ξ)²` is a quadratic form, so the anisotropic Dirichlet
    /// energy is quadratic.
    pub fn is_quadratic(&self) -> bool {
        match &self.kind {
            GaugeKind::Euclidean | GaugeKind::Ellipse { .. } => true,
            GaugeKind::PNorm { p } => *p == 2.0,
        }
    }

    /// Matrix `B` with `H(ξ)² = ξᵀ B ξ` for quadratic gauges.
    pub fn quadratic_matrix(&self) -> Option<Vec<f64>> {
        let n = self.n;
        let s2 = self.scale * self.scale;
        match &self.kind {
            GaugeKind::Euclidean => Some(identity(n)),
            GaugeKind::PNorm { p } if *p == 2.0 => Some(identity(n)),
            GaugeKind::Ellipse { matrix } => Some(matrix.iter().map(|v| v * s2).collect()),
            _ => None,
        }
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// `H(x)`.
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        Ok(self.value_unchecked(x))
    }

    pub(crate) fn value_unchecked(&self, x: &[f64]) -> f64 {
        match &self.kind {
            GaugeKind::Euclidean => norm2(x),
            GaugeKind::PNorm { p } => self.scale * lp_norm(x, *p),
            GaugeKind::Ellipse { matrix } => self.scale * quad_form(matrix, x).max(0.0).sqrt(),
        }
    }

    /// `∇H(x)`; errors at the origin.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        if x.iter().all(|v| *v == 0.0) {
            return Err(Error::GradientAtOrigin);
        }
        Ok(match &self.kind {
            GaugeKind::Euclidean => {
                let r = norm2(x);
                x.iter().map(|v| v / r).collect()
            }
            GaugeKind::PNorm { p } => lp_norm_gradient(x, *p)
                .into_iter()
                .map(|v| self.scale * v)
                .collect(),
            GaugeKind::Ellipse { matrix } => {
                let ax = mat_vec(matrix, x);
                let r = quad_form(matrix, x).sqrt();
                ax.into_iter().map(|v| self.scale * v / r).collect()
            }
        })
    }

    /// `H°(x) = sup_ξ ⟨x, ξ⟩ / H(ξ)`, in closed form.
    pub fn polar_value(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        Ok(self.polar_value_unchecked(x))
    }

    pub(crate) fn polar_value_unchecked(&self, x: &[f64]) -> f64 {
        match &self.kind {
            GaugeKind::Euclidean => norm2(x),
            GaugeKind::PNorm { p } => lp_norm(x, conjugate(*p)) / self.scale,
            GaugeKind::Ellipse { .. } => {
                let inv = self.inverse.as_ref().expect("ellipse inverse");
                quad_form(inv, x).max(0.0).sqrt() / self.scale
            }
        }
    }

    /// `∇H°(x)`; errors at the origin.
    pub fn polar_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        if x.iter().all(|v| *v == 0.0) {
            return Err(Error::GradientAtOrigin);
        }
        Ok(match &self.kind {
            GaugeKind::Euclidean => {
                let r = norm2(x);
                x.iter().map(|v| v / r).collect()
            }
            GaugeKind::PNorm { p } => lp_norm_gradient(x, conjugate(*p))
                .into_iter()
                .map(|v| v / self.scale)
                .collect(),
            GaugeKind::Ellipse { .. } => {
                let inv = self.inverse.as_ref().expect("ellipse inverse");
                let bx = mat_vec(inv, x);
                let r = quad_form(inv, x).sqrt();
                bx.into_iter().map(|v| v / (self.scale * r)).collect()
            }
        })
    }

    /// Measure `κ_n` of the unit Wulff set and the polar descriptor.
    pub fn wulff_measure(&self) -> PolarData {
        let n = self.n;
        let nf = n as f64;
        let (kappa_n, polar) = match &self.kind {
            GaugeKind::Euclidean => (unit_ball_volume(n), PolarDescriptor::SelfDual),
            GaugeKind::PNorm { p } => {
                let q = conjugate(*p);
                (
                    lp_ball_volume(n, q) * self.scale.powf(nf),
                    PolarDescriptor::ConjugateExponent { q },
                )
            }
            GaugeKind::Ellipse { .. } => (
                unit_ball_volume(n) * self.scale.powf(nf) * self.det.sqrt(),
                PolarDescriptor::InverseMatrix {
                    matrix: self.inverse.clone().expect("ellipse inverse"),
                },
            ),
        };
        PolarData {
            kappa_n,
            gamma_n: nf * kappa_n,
            polar,
        }
    }

    /// Residuals of the four duality identities
    /// `H(∇H°(x)) = 1`, `H°(∇H(x)) = 1`, `H°(x)∇H(∇H°(x)) = x` and
    /// `H(x)∇H°(∇H(x)) = x`.
    pub fn identity_residuals(&self, x: &[f64]) -> Result<[f64; 4]> {
        let gp = self.polar_gradient(x)?;
        let g = self.gradient(x)?;
        let r1 = (self.value(&gp)? - 1.0).abs();
        let r2 = (self.polar_value(&g)? - 1.0).abs();
        let hp = self.polar_value(x)?;
        let h = self.value(x)?;
        let ggp = self.gradient(&gp)?;
        let gpg = self.polar_gradient(&g)?;
        let r3 = norm2(
            &ggp.iter()
                .zip(x)
                .map(|(a, b)| hp * a - b)
                .collect::<Vec<_>>(),
        );
        let r4 = norm2(
            &gpg.iter()
                .zip(x)
                .map(|(a, b)| h * a - b)
                .collect::<Vec<_>>(),
        );
        Ok([r1, r2, r3, r4])
    }

    /// Measure of `{H < 1}` (`polar = false`) or `{H° < 1}` (`polar = true`)
    /// by double-exponential quadrature over the unit sphere; `n ∈ {2, 3}`.
    pub fn sublevel_measure_by_quadrature(&self, polar: bool, tol: f64) -> Result<f64> {
        let eval = |x: &[f64]| {
            if polar {
                self.polar_value_unchecked(x)
            } else {
                self.value_unchecked(x)
            }
        };
        let check = |out: quadrature::Output| -> Result<f64> {
            if out.error_estimate.is_finite() && out.integral.is_finite() {
                Ok(out.integral)
            } else {
                Err(Error::NonConvergence {
                    what: "sublevel measure quadrature".into(),
                    iterations: out.num_function_evaluations as usize,
                })
            }
        };
        match self.n {
            2 => {
                let f = |t: f64| eval(&[t.cos(), t.sin()]).powi(-2);
                let mut total = 0.0;
                for k in 0..4 {
                    let a = k as f64 * PI / 2.0;
                    total += check(quadrature::double_exponential::integrate(
                        f,
                        a,
                        a + PI / 2.0,
                        tol,
                    ))?;
                }
                Ok(0.5 * total)
            }
            3 => {
                let inner = |phi: f64| {
                    let g = |z: f64| {
                        let r = (1.0 - z * z).max(0.0).sqrt();
                        eval(&[r * phi.cos(), r * phi.sin(), z]).powi(-3)
                    };
                    quadrature::double_exponential::integrate(g, -1.0, 0.0, tol * 1e-2).integral
                        + quadrature::double_exponential::integrate(g, 0.0, 1.0, tol * 1e-2)
                            .integral
                };
                let mut total = 0.0;
                for k in 0..4 {
                    let a = k as f64 * PI / 2.0;
                    total += check(quadrature::double_exponential::integrate(
                        inner,
                        a,
                        a + PI / 2.0,
                        tol,
                    ))?;
                }
                Ok(total / 3.0)
            }
            n => Err(invalid(format!(
                "sublevel quadrature supports n = 2, 3; got {n}"
            ))),
        }
    }
}

fn identity(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
    }
    m
}

fn conjugate(p: f64) -> f64 {
    p / (p - 1.0)
}

fn check_dim(n: usize) -> Result<()> {
    if n < 2 {
        return Err(invalid(format!("dimension must be >= 2, got {n}")));
    }
    Ok(())
}

/// Textual gauge specification: `euclidean`, `p:<float>` or
/// `ellipse:<a11>,<a12>,<a22>` (two-dimensional), case-insensitive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GaugeSpec {
    Euclidean,
    PNorm(f64),
    Ellipse2([f64; 3]),
}

impl FromStr for GaugeSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        if lower == "euclidean" {
            return Ok(GaugeSpec::Euclidean);
        }
        if let Some(rest) = lower.strip_prefix("p:") {
            let p: f64 = rest
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad exponent in gauge spec '{s}'")))?;
            return Ok(GaugeSpec::PNorm(p));
        }
        if let Some(rest) = lower.strip_prefix("ellipse:") {
            let vals: Vec<f64> = rest
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Parse(format!("bad coefficients in gauge spec '{s}'")))?;
            if vals.len() != 3 {
                return Err(Error::Parse(format!(
                    "ellipse gauge needs three coefficients a11,a12,a22; got '{s}'"
                )));
            }
            return Ok(GaugeSpec::Ellipse2([vals[0], vals[1], vals[2]]));
        }
        Err(Error::Parse(format!("unknown gauge spec '{s}'")))
    }
}

impl fmt::Display for GaugeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GaugeSpec::Euclidean => write!(f, "euclidean"),
            GaugeSpec::PNorm(p) => write!(f, "p:{p}"),
            GaugeSpec::Ellipse2([a, b, c]) => write!(f, "ellipse:{a},{b},{c}"),
        }
    }
}

impl GaugeSpec {
    pub fn build(&self, n: usize) -> Result<Gauge> {
        match self {
            GaugeSpec::Euclidean => Gauge::euclidean(n),
            GaugeSpec::PNorm(p) => Gauge::p_norm(n, *p),
            GaugeSpec::Ellipse2([a11, a12, a22]) => {
                if n != 2 {
                    return Err(invalid("ellipse gauge spec is two-dimensional"));
                }
                Gauge::ellipse(2, vec![*a11, *a12, *a12, *a22])
            }
        }
    }
}
