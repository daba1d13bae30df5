//! Decreasing and convex (Wulff-symmetric) rearrangements of grid functions.
//!
//! On a grid every cell carries the same measure, so the decreasing
//! rearrangement is the sorted list of `|u|` over masked cells, each value
//! occupying one cell measure of the interval `[0, |Ω|)`. The convex
//! rearrangement samples that step profile at `κ_n H°(x)²` of each target
//! cell centre, so norms are preserved only up to the staircase error of the
//! target mask.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::gauge::Gauge;

use super::grid2d::{CartesianGrid2D, GridFunction};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecreasingRearrangement {
    cell_measure: f64,
    /// `|u|` over masked cells, nonincreasing; ties keep cell-index order.
    levels: Vec<f64>,
}

impl DecreasingRearrangement {
    /// Total measure `|Ω|` of the support domain.
    pub fn measure(&self) -> f64 {
        self.cell_measure * self.levels.len() as f64
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// Distribution function `μ(t) = |{|u| > t}|`.
    pub fn mu(&self, t: f64) -> f64 {
        // levels are sorted nonincreasing
        let count = self.levels.partition_point(|&v| v > t);
        count as f64 * self.cell_measure
    }

    /// `u*(s)` for `s ∈ [0, |Ω|)`; right-continuous, zero beyond `|Ω|`.
    pub fn u_star(&self, s: f64) -> f64 {
        if !(s >= 0.0) {
            return self.levels.first().copied().unwrap_or(0.0);
        }
        let mut k = (s / self.cell_measure).floor() as usize;
        // guard against s/cm rounding just below an integer
        if (k + 1) as f64 * self.cell_measure <= s {
            k += 1;
        }
        self.levels.get(k).copied().unwrap_or(0.0)
    }
}

pub fn decreasing_rearrangement(u: &GridFunction) -> DecreasingRearrangement {
    let grid = u.grid();
    let mut cells: Vec<(usize, f64)> = grid
        .mask()
        .iter()
        .enumerate()
        .filter(|(_, &m)| m)
        .map(|(k, _)| (k, u.values()[k].abs()))
        .collect();
    // stable sort keeps lexicographic cell order among equal values
    cells.sort_by(|a, b| b.1.total_cmp(&a.1));
    DecreasingRearrangement {
        cell_measure: grid.cell_measure(),
        levels: cells.into_iter().map(|(_, v)| v).collect(),
    }
}

/// `u^#(x) = u*(κ_n H°(x)^n)` evaluated at the centres of the `target` cells.
pub fn convex_rearrangement(
    u: &GridFunction,
    gauge: &Gauge,
    target: &CartesianGrid2D,
) -> Result<GridFunction> {
    let star = decreasing_rearrangement(u);
    let h = u.grid().spacing().max(target.spacing());
    let kappa = gauge.wulff_measure().kappa_n;
    let perimeter = 2.0 * (kappa * star.measure()).sqrt();
    let mismatch = (target.area() - star.measure()).abs();
    if mismatch > 2.0 * h * perimeter {
        return Err(invalid(format!(
            "target mask measure {} differs from |Ω| = {} by more than the grid tolerance",
            target.area(),
            star.measure()
        )));
    }
    let nx = target.nx();
    let values: Vec<f64> = (0..target.mask().len())
        .map(|k| {
            if !target.mask()[k] {
                return 0.0;
            }
            let r = gauge.polar_value_unchecked(&target.center(k % nx, k / nx));
            star.u_star(kappa * r * r)
        })
        .collect();
    GridFunction::new(target.clone(), values)
}

/// Discrete Dirichlet energies `(∫H(∇u)², ∫H(∇u^#)²)`, with `u^#` placed on a
/// discrete Wulff set of exactly as many cells as the support of `u`.
pub fn polya_szego_gap(u: &GridFunction, gauge: &Gauge) -> Result<(f64, f64)> {
    let cells = u.grid().active_cells();
    let target = CartesianGrid2D::wulff_with_cells(gauge, cells, u.grid().spacing())?;
    let sharp = convex_rearrangement(u, gauge, &target)?;
    Ok((u.dirichlet_energy(gauge)?, sharp.dirichlet_energy(gauge)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn box_grid(n: usize, h: f64) -> CartesianGrid2D {
        CartesianGrid2D::from_mask(n, n, h, vec![true; n * n]).unwrap()
    }

    #[test]
    fn indicator_rearranges_to_step() {
        let g = box_grid(10, 0.1);
        let u = GridFunction::from_fn(g, |x, _| if x > 0.2 { 1.0 } else { 0.0 });
        let s = decreasing_rearrangement(&u);
        let m = 0.3 * 1.0;
        assert!((s.mu(0.5) - m).abs() < 1e-12);
        assert_eq!(s.u_star(0.0), 1.0);
        assert_eq!(s.u_star(m - 1e-9), 1.0);
        assert_eq!(s.u_star(m + 1e-9), 0.0);
        assert_eq!(s.u_star(5.0), 0.0);
    }

    #[test]
    fn two_level_function() {
        let g = box_grid(10, 0.1);
        let u = GridFunction::from_fn(g, |x, y| {
            if x < -0.3 {
                2.0
            } else if y > 0.25 {
                1.0
            } else {
                0.0
            }
        });
        let s = decreasing_rearrangement(&u);
        let a = 0.2;
        let b = 0.8 * 0.2;
        assert!((s.mu(1.5) - a).abs() < 1e-12);
        assert!((s.mu(0.5) - (a + b)).abs() < 1e-12);
        assert_eq!(s.u_star(a * 0.5), 2.0);
        assert_eq!(s.u_star(a + 0.5 * b), 1.0);
    }

    #[test]
    fn l2_norm_is_preserved() {
        let g = CartesianGrid2D::disk(PI, 0.05).unwrap();
        let u = GridFunction::from_fn(g.clone(), |x, y| (3.0 * x).sin() + y * y - 0.3);
        let s = decreasing_rearrangement(&u);
        let l2: f64 = s.levels().iter().map(|v| v * v).sum::<f64>() * g.cell_measure();
        assert!((l2 - u.l2_norm_squared()).abs() < 1e-12 * l2);
        let e = Gauge::euclidean(2).unwrap();
        let t = CartesianGrid2D::wulff_with_cells(&e, g.active_cells(), 0.05).unwrap();
        let sharp = convex_rearrangement(&u, &e, &t).unwrap();
        // staircase error only
        assert!((sharp.l2_norm_squared() - l2).abs() < 0.02 * l2);
    }

    #[test]
    fn radial_decreasing_function_is_fixed() {
        let e = Gauge::euclidean(2).unwrap();
        let t = CartesianGrid2D::wulff_with_cells(&e, 2000, 0.05).unwrap();
        let r2 = t.area() / PI;
        let u = GridFunction::from_fn(t.clone(), |x, y| (r2 - (x * x + y * y)).max(0.0));
        let sharp = convex_rearrangement(&u, &e, &t).unwrap();
        let max_diff = sharp
            .values()
            .iter()
            .zip(u.values())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        // |∇u| ≤ 2.6, so about one cell of displacement bounds the error
        assert!(max_diff < 0.05, "{max_diff}");
        let (lhs, rhs) = polya_szego_gap(&u, &e).unwrap();
        assert!((lhs - rhs).abs() < 0.02 * lhs, "{lhs} {rhs}");
    }

    #[test]
    fn eccentric_blob_becomes_centred_wulff_set() {
        let g = box_grid(40, 0.05);
        let p4 = Gauge::p_norm(2, 4.0).unwrap();
        let u = GridFunction::from_fn(g, |x, y| {
            if (x - 0.5).powi(2) + (y + 0.4).powi(2) < 0.09 {
                1.0
            } else {
                0.0
            }
        });
        let support = u.values().iter().filter(|v| **v > 0.0).count();
        let t = CartesianGrid2D::wulff(&p4, 4.0, 0.05).unwrap();
        let sharp = convex_rearrangement(&u, &p4, &t).unwrap();
        // an indicator of a centred sublevel set of H° with the blob's measure
        let cells: Vec<usize> = (0..t.mask().len()).filter(|&k| t.mask()[k]).collect();
        let order = t.polar_order(&p4, cells);
        let ones = order
            .iter()
            .take_while(|&&k| sharp.values()[k] == 1.0)
            .count();
        assert!(order[ones..].iter().all(|&k| sharp.values()[k] == 0.0));
        assert!(
            (ones as f64 - support as f64).abs() <= 2.0 * (support as f64).sqrt(),
            "{ones} vs {support}"
        );
    }

    #[test]
    fn mismatched_target_is_rejected() {
        let e = Gauge::euclidean(2).unwrap();
        let u = GridFunction::from_fn(CartesianGrid2D::disk(PI, 0.05).unwrap(), |_, _| 1.0);
        let small = CartesianGrid2D::disk(1.0, 0.05).unwrap();
        assert!(convex_rearrangement(&u, &e, &small).is_err());
    }

    #[test]
    fn ridge_has_strict_gap_for_p4() {
        let p4 = Gauge::p_norm(2, 4.0).unwrap();
        let gap = |h: f64| {
            let g = CartesianGrid2D::disk(PI, h).unwrap();
            let u = GridFunction::from_fn(g, |x, y| {
                (1.0 - x * x - y * y).max(0.0) * (-(4.0 * (x - 0.3 * y)).powi(2)).exp()
            });
            let (lhs, rhs) = polya_szego_gap(&u, &p4).unwrap();
            (lhs - rhs) / lhs
        };
        let (a, b) = (gap(1.0 / 32.0), gap(1.0 / 64.0));
        assert!(a > 0.05 && b > 0.05, "{a} {b}");
        assert!((a - b).abs() < 0.2 * a);
    }
}
