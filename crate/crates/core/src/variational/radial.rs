//! Radial finite-volume eigensolvers on Wulff sets and pairs of Wulff sets.
//!
//! Unknowns sit at `ρ_j = j h`, `j = 0..=N`, with `h = R/(N+1)` and the
//! Dirichlet value `u(R) = 0`. Node `j` owns the annulus
//! `[ρ_j - h/2, ρ_j + h/2] ∩ [0, R]` of the Wulff set, so its mass is the
//! exact Wulff measure of that annulus; the flux between nodes `j` and `j+1`
//! is weighted by the Wulff perimeter `n κ_n ρ_{j+1/2}^{n-1}`. The symmetry
//! condition `u'(0) = 0` is the natural boundary condition of this scheme.
//!
//! The matrices scale exactly under `R ↦ tR` at fixed `N`, so the discrete
//! eigenvalues satisfy the continuous scaling law to rounding error.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub const MIN_RADIAL_NODES: usize = 16;
const MAX_ITERATIONS: usize = 20_000;
const EIGEN_RTOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    n: usize,
    kappa_n: f64,
    r: f64,
    interior: usize,
}

impl RadialGrid {
    pub fn new(n: usize, kappa_n: f64, r: f64, interior: usize) -> Result<Self> {
        if n < 2 {
            return Err(invalid(format!("dimension must be >= 2, got {n}")));
        }
        if !(kappa_n > 0.0 && kappa_n.is_finite()) {
            return Err(invalid("kappa_n must be positive"));
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(invalid(format!("radius must be positive, got {r}")));
        }
        if interior < MIN_RADIAL_NODES {
            return Err(invalid(format!(
                "at least {MIN_RADIAL_NODES} radial nodes required, got {interior}"
            )));
        }
        Ok(Self {
            n,
            kappa_n,
            r,
            interior,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn kappa_n(&self) -> f64 {
        self.kappa_n
    }
    pub fn radius(&self) -> f64 {
        self.r
    }
    pub fn interior(&self) -> usize {
        self.interior
    }
    pub fn spacing(&self) -> f64 {
        self.r / (self.interior + 1) as f64
    }

    /// Nodes `ρ_0 = 0, …, ρ_N`, excluding the boundary node `R`.
    pub fn nodes(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..=self.interior).map(|j| j as f64 * h).collect()
    }

    fn ball(&self, rho: f64) -> f64 {
        self.kappa_n * rho.max(0.0).powi(self.n as i32)
    }

    /// Wulff measure of the control volume of each unknown node.
    pub fn weights(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..=self.interior)
            .map(|j| {
                let rho = j as f64 * h;
                self.ball(rho + 0.5 * h) - self.ball(rho - 0.5 * h)
            })
            .collect()
    }

    /// Measure of the half cell attached to the Dirichlet node; together with
    /// [`weights`](Self::weights) it sums to `κ_n R^n`.
    pub fn boundary_weight(&self) -> f64 {
        self.ball(self.r) - self.ball(self.r - 0.5 * self.spacing())
    }

    /// Flux weights between node `j` and `j+1`, `j = 0..=N`
    /// (the last couples to the boundary).
    fn fluxes(&self) -> Vec<f64> {
        let h = self.spacing();
        let nf = self.n as f64;
        (0..=self.interior)
            .map(|j| nf * self.kappa_n * ((j as f64 + 0.5) * h).powi(self.n as i32 - 1) / h)
            .collect()
    }
}

/// Radial samples `u(ρ_j)`; the last node is the boundary `ρ = R` with value 0.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RadialProfile {
    pub rho: Vec<f64>,
    pub values: Vec<f64>,
}

impl RadialProfile {
    pub fn len(&self) -> usize {
        self.values.len()
    }
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Symmetric tridiagonal matrix `diag`, `off` (length `diag.len() - 1`).
#[derive(Debug, Clone)]
struct Tridiagonal {
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl Tridiagonal {
    fn len(&self) -> usize {
        self.diag.len()
    }

    #[cfg(test)]
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let m = self.len();
        for i in 0..m {
            let mut s = self.diag[i] * x[i];
            if i > 0 {
                s += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < m {
                s += self.off[i] * x[i + 1];
            }
            out[i] = s;
        }
    }

    /// Solves `(T - σ I) x = b` by the Thomas algorithm.
    fn solve_shifted(&self, sigma: f64, b: &[f64]) -> Result<Vec<f64>> {
        let m = self.len();
        let mut c = vec![0.0; m];
        let mut d = vec![0.0; m];
        let mut denom = self.diag[0] - sigma;
        if denom == 0.0 {
            return Err(Error::SingularDenominator {
                what: "tridiagonal solve".into(),
            });
        }
        c[0] = if m > 1 { self.off[0] / denom } else { 0.0 };
        d[0] = b[0] / denom;
        for i in 1..m {
            denom = self.diag[i] - sigma - self.off[i - 1] * c[i - 1];
            if denom == 0.0 {
                return Err(Error::SingularDenominator {
                    what: "tridiagonal solve".into(),
                });
            }
            c[i] = if i + 1 < m { self.off[i] / denom } else { 0.0 };
            d[i] = (b[i] - self.off[i - 1] * d[i - 1]) / denom;
        }
        for i in (0..m - 1).rev() {
            d[i] -= c[i] * d[i + 1];
        }
        Ok(d)
    }
}

/// One radial grid in symmetrized form: `T = M^{-1/2} K M^{-1/2}`.
#[derive(Debug, Clone)]
struct RadialBlock {
    t: Tridiagonal,
    sq: Vec<f64>,
    flux: Vec<f64>,
}

impl RadialBlock {
    fn new(grid: &RadialGrid) -> Self {
        let m = grid.weights();
        let flux = grid.fluxes();
        let len = m.len();
        let sq: Vec<f64> = m.iter().map(|v| v.sqrt()).collect();
        let diag = (0..len)
            .map(|j| {
                let left = if j > 0 { flux[j - 1] } else { 0.0 };
                (left + flux[j]) / m[j]
            })
            .collect();
        let off = (0..len - 1)
            .map(|j| -flux[j] / (sq[j] * sq[j + 1]))
            .collect();
        Self {
            t: Tridiagonal { diag, off },
            sq,
            flux,
        }
    }

    fn empty() -> Self {
        Self {
            t: Tridiagonal {
                diag: Vec::new(),
                off: Vec::new(),
            },
            sq: Vec::new(),
            flux: Vec::new(),
        }
    }

    /// `yᵀ T y` as a sum of squared differences (no cancellation).
    fn energy(&self, y: &[f64]) -> f64 {
        let len = self.sq.len();
        (0..len)
            .map(|j| {
                let here = y[j] / self.sq[j];
                let next = if j + 1 < len {
                    y[j + 1] / self.sq[j + 1]
                } else {
                    0.0
                };
                self.flux[j] * (next - here) * (next - here)
            })
            .sum()
    }
}

/// Block-diagonal tridiagonal system: the blocks are stored back to back with
/// a zero coupling at the seam.
fn concat(blocks: &[&Tridiagonal]) -> Tridiagonal {
    let mut diag = Vec::new();
    let mut off = Vec::new();
    for (k, b) in blocks.iter().enumerate() {
        if k > 0 && !b.diag.is_empty() && !diag.is_empty() {
            off.push(0.0);
        }
        diag.extend_from_slice(&b.diag);
        off.extend_from_slice(&b.off);
    }
    Tridiagonal { diag, off }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> f64 {
    let nrm = dot(v, v).sqrt();
    for x in v.iter_mut() {
        *x /= nrm;
    }
    nrm
}

/// Smallest eigenpair of `T + α b bᵀ` by inverse iteration with shift `σ`
/// below the spectrum, using Sherman–Morrison for the rank-one term.
fn smallest_eigenpair<E: Fn(&[f64]) -> f64>(
    t: &Tridiagonal,
    energy: E,
    b: &[f64],
    alpha: f64,
    sigma: f64,
    start: Vec<f64>,
) -> Result<(f64, Vec<f64>)> {
    let m = t.len();
    let tb = if alpha != 0.0 {
        t.solve_shifted(sigma, b)?
    } else {
        vec![0.0; m]
    };
    let denom = 1.0 + alpha * dot(b, &tb);
    if alpha != 0.0 && !(denom > 0.0) {
        return Err(invalid(
            "shift is not below the spectrum of the coupled operator",
        ));
    }
    let rayleigh = |y: &[f64]| {
        let by = dot(b, y);
        energy(y) + alpha * by * by
    };
    let mut y = start;
    normalize(&mut y);
    let mut lambda = rayleigh(&y);
    for _ in 0..MAX_ITERATIONS {
        let mut z = t.solve_shifted(sigma, &y)?;
        if alpha != 0.0 {
            let coef = alpha * dot(b, &z) / denom;
            for (zi, tbi) in z.iter_mut().zip(&tb) {
                *zi -= coef * tbi;
            }
        }
        normalize(&mut z);
        let next = rayleigh(&z);
        y = z;
        let change = (next - lambda).abs();
        lambda = next;
        if change <= EIGEN_RTOL * lambda.abs().max(1.0) {
            return Ok((lambda, y));
        }
    }
    Err(Error::NonConvergence {
        what: "radial inverse iteration".into(),
        iterations: MAX_ITERATIONS,
    })
}

fn profile(grid: &RadialGrid, sq: &[f64], y: &[f64]) -> RadialProfile {
    let mut rho = grid.nodes();
    rho.push(grid.radius());
    let mut values: Vec<f64> = y.iter().zip(sq).map(|(v, s)| v / s).collect();
    values.push(0.0);
    RadialProfile { rho, values }
}

/// First Dirichlet eigenpair of the radial operator on a Wulff set.
/// The eigenvector is positive and normalized by `Σ w_j u_j² = 1`.
pub fn radial_local_solve(grid: &RadialGrid) -> Result<(f64, RadialProfile)> {
    let block = RadialBlock::new(grid);
    let start = block.sq.clone();
    let (lambda, mut y) =
        smallest_eigenpair(&block.t, |y| block.energy(y), &block.sq, 0.0, 0.0, start)?;
    if y.iter().sum::<f64>() < 0.0 {
        y.iter_mut().for_each(|v| *v = -*v);
    }
    Ok((lambda, profile(grid, &block.sq, &y)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialPairSolution {
    pub lambda: f64,
    /// Eigenfunction on the smaller set (empty when `R1 = 0`).
    pub u: RadialProfile,
    /// Eigenfunction on the larger set.
    pub v: RadialProfile,
    /// Discrete `∫u + ∫v` for the normalization `Σ w u² + Σ w v² = 1`.
    pub mean: f64,
}

/// First eigenvalue of the radial pair problem
/// `min (∫H(∇w)² + α(∫w)²) / ∫w²` over `w = (u, v)` on `W_{R1} ∪ W_{R2}`,
/// with `N` unknowns per component.
pub fn radial_pair_nonlocal_solve(
    n: usize,
    kappa_n: f64,
    r1: f64,
    r2: f64,
    alpha: f64,
    interior: usize,
) -> Result<RadialPairSolution> {
    if !alpha.is_finite() {
        return Err(invalid("alpha must be finite"));
    }
    if !(r1 >= 0.0 && r2 >= 0.0) {
        return Err(invalid("radii must be >= 0"));
    }
    let (r1, r2) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
    let g2 = RadialGrid::new(n, kappa_n, r2, interior)?;
    let g1 = if r1 > 0.0 {
        Some(RadialGrid::new(n, kappa_n, r1, interior)?)
    } else {
        None
    };
    let b2 = RadialBlock::new(&g2);
    let b1 = g1
        .as_ref()
        .map(RadialBlock::new)
        .unwrap_or_else(RadialBlock::empty);
    let (sq1, sq2) = (&b1.sq, &b2.sq);
    let split = sq1.len();
    let t = concat(&[&b1.t, &b2.t]);
    let energy = |y: &[f64]| b1.energy(&y[..split]) + b2.energy(&y[split..]);
    let b: Vec<f64> = sq1.iter().chain(sq2).copied().collect();
    // unequal block weights keep both symmetric and antisymmetric components
    let start: Vec<f64> = sq1
        .iter()
        .map(|s| 0.3 * s)
        .chain(sq2.iter().copied())
        .collect();

    let sigma = if alpha >= 0.0 {
        0.0
    } else {
        // λ_1(T + α b bᵀ) ≥ λ_1(T) + α |b|²
        let (l0, _) = smallest_eigenpair(&t, energy, &b, 0.0, 0.0, start.clone())?;
        l0 + alpha * dot(&b, &b) - 1.0
    };
    let (lambda, mut y) = smallest_eigenpair(&t, energy, &b, alpha, sigma, start)?;

    let peak = y[split..]
        .iter()
        .copied()
        .fold(0.0f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
    if peak < 0.0 {
        y.iter_mut().for_each(|v| *v = -*v);
    }
    let mean = dot(&b, &y);
    let u = match &g1 {
        Some(g) => profile(g, sq1, &y[..split]),
        None => RadialProfile::default(),
    };
    let v = profile(&g2, sq2, &y[split..]);
    Ok(RadialPairSolution { lambda, u, v, mean })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const J01: f64 = 2.404_825_557_695_773;

    #[test]
    fn grid_weights_sum_to_volume() {
        let g = RadialGrid::new(3, 4.0 * PI / 3.0, 1.3, 100).unwrap();
        let total: f64 = g.weights().iter().sum::<f64>() + g.boundary_weight();
        assert!((total - 4.0 * PI / 3.0 * 1.3f64.powi(3)).abs() < 1e-12);
        assert!(RadialGrid::new(2, PI, 1.0, 8).is_err());
        assert!(RadialGrid::new(2, PI, -1.0, 100).is_err());
    }

    #[test]
    fn tridiagonal_solve_round_trip() {
        let t = Tridiagonal {
            diag: vec![4.0, 5.0, 6.0, 7.0],
            off: vec![-1.0, 2.0, -0.5],
        };
        let b = [1.0, -2.0, 0.5, 3.0];
        let x = t.solve_shifted(0.7, &b).unwrap();
        let mut r = vec![0.0; 4];
        t.apply(&x, &mut r);
        for i in 0..4 {
            assert!((r[i] - 0.7 * x[i] - b[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn disk_eigenvalue_and_sign() {
        let g = RadialGrid::new(2, PI, 1.0, 4000).unwrap();
        let (l, u) = radial_local_solve(&g).unwrap();
        assert!(((l - J01 * J01) / (J01 * J01)).abs() < 1e-5, "{l}");
        assert!(u.values[..u.len() - 1].iter().all(|v| *v > 0.0));
        let w = g.weights();
        let norm: f64 = w.iter().zip(&u.values).map(|(w, v)| w * v * v).sum();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn second_order_convergence_in_three_dimensions() {
        let err = |nodes| {
            let g = RadialGrid::new(3, 4.0 * PI / 3.0, 1.0, nodes).unwrap();
            (radial_local_solve(&g).unwrap().0 - PI * PI).abs()
        };
        let (e1, e2) = (err(200), err(401));
        let order = (e1 / e2).log2();
        assert!((1.8..=2.2).contains(&order), "order {order}");
    }

    #[test]
    fn pair_without_weight_decouples() {
        let s = radial_pair_nonlocal_solve(2, PI, 0.5, 1.0, 0.0, 400).unwrap();
        let g = RadialGrid::new(2, PI, 1.0, 400).unwrap();
        let (l, _) = radial_local_solve(&g).unwrap();
        assert!((s.lambda - l).abs() < 1e-12 * l);
    }

    #[test]
    fn equal_radii_keep_saturated_level() {
        let r = 0.5f64.sqrt();
        let g = RadialGrid::new(2, PI, r, 400).unwrap();
        let (l, _) = radial_local_solve(&g).unwrap();
        for alpha in [1.0, 100.0, 1e6] {
            let s = radial_pair_nonlocal_solve(2, PI, r, r, alpha, 400).unwrap();
            assert!(
                (s.lambda - l).abs() < 1e-9 * l,
                "alpha={alpha}: {} vs {l}",
                s.lambda
            );
            assert!(s.mean.abs() < 1e-6);
        }
    }

    #[test]
    fn negative_weight_lowers_eigenvalue() {
        let a = radial_pair_nonlocal_solve(2, PI, 0.4, 1.0, -5.0, 300).unwrap();
        let b = radial_pair_nonlocal_solve(2, PI, 0.4, 1.0, 0.0, 300).unwrap();
        assert!(a.lambda < b.lambda);
        // sign-definite on both components
        assert!(a.u.values[..a.u.len() - 1].iter().all(|v| *v > 0.0));
        assert!(a.v.values[..a.v.len() - 1].iter().all(|v| *v > 0.0));
    }

    #[test]
    fn single_set_pair_has_empty_small_component() {
        let s = radial_pair_nonlocal_solve(3, 4.0 * PI / 3.0, 0.0, 1.0, 2.0, 200).unwrap();
        assert!(s.u.is_empty());
        assert_eq!(s.v.len(), 202);
    }
}
