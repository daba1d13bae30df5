//! Invariant suites behind `wulff-spectra verify`.
//!
//! Each suite returns a one-line summary on success or the first violated
//! check. Sampling is seeded, so a given `--seed` always runs the same checks.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use wulff_spectra::closedform::{
    alpha_for_eta, critical_alpha, critical_alpha_oracle, local_level, nonlocal_pair_eigenvalue,
    rescale, rescaled_weight, saturated_level, theta_root, theta_star, threshold_ratio, EtaRange,
};
use wulff_spectra::gauge::Gauge;
use wulff_spectra::specfun::{bessel_j, bessel_j_first_zero, BesselOrder};
use wulff_spectra::variational::{
    polya_szego_gap, radial_pair_nonlocal_solve, CartesianGrid2D, GridFunction,
};

use crate::{Cli, CliError, CliResult, Context, VerifyArgs};

pub const SUITES: [&str; 8] = [
    "gauge",
    "bessel",
    "theta",
    "roundtrip",
    "scaling",
    "monotonicity",
    "oracle",
    "polya-szego",
];

/// Bound on the relative discrete Pólya–Szegő defect `(rhs - lhs)/(h·lhs)`
/// for the random bumps below; measured values stay under 0.35.
pub const POLYA_SZEGO_C: f64 = 1.0;

type Outcome = Result<String, String>;

struct Setup {
    n: usize,
    kappa: f64,
    /// κ used on the closed-form side of the perturbation-sensitive suites.
    kappa_closed: f64,
    gauge: Gauge,
    seed: u64,
}

impl Setup {
    fn rng(&self, salt: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15))
    }

    /// Random pair with `R2 = 1` scaled by a random factor, ratio in `[lo, 1)`.
    fn pair(&self, rng: &mut ChaCha8Rng, lo: f64) -> (f64, f64) {
        let s = rng.gen_range(0.5..2.0);
        let ratio = rng.gen_range(lo..0.98);
        (ratio * s, s)
    }

    fn volume(&self, r1: f64, r2: f64) -> f64 {
        let nf = self.n as f64;
        self.kappa * (r1.powf(nf) + r2.powf(nf))
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn fail(msg: impl Into<String>) -> Outcome {
    Err(msg.into())
}

fn gauges(n: usize) -> Vec<(String, Gauge)> {
    let mut out = vec![
        (
            "euclidean".to_string(),
            Gauge::euclidean(n).expect("euclidean"),
        ),
        ("p:4".to_string(), Gauge::p_norm(n, 4.0).expect("p-norm")),
        ("p:1.5".to_string(), Gauge::p_norm(n, 1.5).expect("p-norm")),
    ];
    if n == 2 {
        out.push((
            "ellipse:2,0.5,1".to_string(),
            Gauge::ellipse(2, vec![2.0, 0.5, 0.5, 1.0]).expect("ellipse"),
        ));
    }
    out
}

fn gauge_suite(s: &Setup) -> Outcome {
    let mut rng = s.rng(1);
    let mut worst = 0.0f64;
    for (name, g) in gauges(s.n)
        .into_iter()
        .chain([("selected".to_string(), s.gauge.clone())])
    {
        for _ in 0..1000 {
            let x: Vec<f64> = (0..s.n).map(|_| rng.gen_range(-3.0..3.0)).collect();
            if x.iter().all(|v| v.abs() < 1e-6) {
                continue;
            }
            let r = g
                .identity_residuals(&x)
                .map_err(|e| format!("{name}: {e}"))?;
            let m = r.iter().fold(0.0f64, |a, &b| a.max(b))
                / (1.0 + x.iter().map(|v| v * v).sum::<f64>().sqrt());
            worst = worst.max(m);
            if !(m <= 1e-9) {
                return fail(format!("{name}: duality residual {m:e} at {x:?}"));
            }
            let t = rng.gen_range(-4.0..4.0);
            let tx: Vec<f64> = x.iter().map(|v| t * v).collect();
            let (h, ht) = (g.value(&x).unwrap(), g.value(&tx).unwrap());
            if (ht - t.abs() * h).abs() > 1e-12 * h * t.abs().max(1.0) {
                return fail(format!("{name}: homogeneity fails at t = {t}"));
            }
        }
    }
    Ok(format!("duality identities max residual {worst:.1e}"))
}

fn bessel_suite(s: &Setup) -> Outcome {
    let mut rng = s.rng(2);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let nu = rng.gen_range(1.0..5.0);
        let x = rng.gen_range(0.05..30.0);
        let j = |v: f64| bessel_j(BesselOrder::new(v).unwrap(), x).unwrap();
        let r = (j(nu - 1.0) + j(nu + 1.0) - 2.0 * nu / x * j(nu)).abs() / j(nu).abs().max(1.0);
        worst = worst.max(r);
        if !(r <= 1e-10) {
            return fail(format!("recurrence residual {r:e} at nu = {nu}, x = {x}"));
        }
    }
    let half = bessel_j_first_zero(BesselOrder::new(0.5).unwrap()).map_err(|e| e.to_string())?;
    if (half - PI).abs() > 1e-11 {
        return fail(format!("j(1/2,1) = {half} is not pi"));
    }
    for n in 2..=8usize {
        let z = |shift: f64| bessel_j_first_zero(BesselOrder::half_dim(n, shift).unwrap()).unwrap();
        let (a, b, c) = (z(-1.0), z(0.0), z(1.0));
        if !(a < b && b < c) {
            return fail(format!("zeros not interlaced for n = {n}"));
        }
        if !(b > 2f64.powf(1.0 / n as f64) * a) {
            return fail(format!("j(n/2,1) <= 2^(1/n) j(n/2-1,1) for n = {n}"));
        }
    }
    // ∫₀^R J_{n/2-1}(kr) r^{n/2} dr = R^{n/2} J_{n/2}(kR) / k
    for n in 2..=4usize {
        for _ in 0..5 {
            let (k, r) = (rng.gen_range(0.5..6.0), rng.gen_range(0.2..2.0));
            let lo = BesselOrder::half_dim(n, -1.0).unwrap();
            let hi = BesselOrder::half_dim(n, 0.0).unwrap();
            let h = n as f64 / 2.0;
            let lhs = quadrature::double_exponential::integrate(
                |t| bessel_j(lo, k * t).unwrap() * t.powf(h),
                0.0,
                r,
                1e-12,
            )
            .integral;
            let rhs = r.powf(h) * bessel_j(hi, k * r).unwrap() / k;
            if (lhs - rhs).abs() > 1e-8 * rhs.abs().max(1e-3) {
                return fail(format!(
                    "integral identity off by {:e} (n = {n})",
                    lhs - rhs
                ));
            }
        }
    }
    Ok(format!(
        "recurrence max residual {worst:.1e}; zeros and integral identity hold"
    ))
}

fn theta_suite(_s: &Setup) -> Outcome {
    let mut min_gap = f64::INFINITY;
    for n in 2..=4usize {
        let ts = theta_star(n).map_err(|e| e.to_string())?.theta_star;
        let nf = n as f64;
        for i in 1..=40 {
            for k in 1..=40 {
                let (a, b) = (i as f64 / 40.0, k as f64 / 40.0);
                let t = (a.powf(nf) + b.powf(nf)).powf(1.0 / nf);
                let th = theta_root(n, a, b).map_err(|e| e.to_string())? * t;
                min_gap = min_gap.min(th - ts);
                if th < ts - 1e-9 {
                    return fail(format!(
                        "theta = {th} below theta* = {ts} at n = {n}, ({a}, {b})"
                    ));
                }
            }
        }
        // gap shrinks monotonically as the radii equalize
        let mut prev = f64::INFINITY;
        for k in 1..=12 {
            let ratio = 1.0 - 0.5f64.powi(k);
            let r2 = (1.0 + ratio.powf(nf)).powf(-1.0 / nf);
            let gap = theta_root(n, ratio * r2, r2).map_err(|e| e.to_string())? - ts;
            if gap > prev + 1e-12 {
                return fail(format!(
                    "theta gap not decreasing toward equal radii (n = {n})"
                ));
            }
            prev = gap;
        }
        if prev > 1e-5 {
            return fail(format!(
                "theta gap {prev:e} does not vanish at equal radii (n = {n})"
            ));
        }
    }
    Ok(format!(
        "theta >= theta* on 3 x 40 x 40 pairs (min gap {min_gap:.1e})"
    ))
}

fn roundtrip_suite(s: &Setup) -> Outcome {
    let mut rng = s.rng(4);
    let n = s.n;
    let jn = bessel_j_first_zero(BesselOrder::half_dim(n, 0.0).unwrap()).unwrap();
    let mut worst = 0.0f64;
    let mut done = 0;
    while done < 100 {
        let (r1, r2) = s.pair(&mut rng, 0.05);
        let v = s.volume(r1, r2);
        let lo = local_level(n, s.kappa, v).unwrap();
        let hi = saturated_level(n, s.kappa, v)
            .unwrap()
            .min((jn / r2).powi(2));
        let eta = lo + rng.gen_range(0.02..0.98) * (hi - lo);
        let Ok(a) = alpha_for_eta(n, s.kappa_closed, r1, r2, eta, EtaRange::Extended) else {
            continue;
        };
        if !a.alpha.is_finite() {
            continue;
        }
        let back =
            nonlocal_pair_eigenvalue(n, s.kappa, r1, r2, a.alpha).map_err(|e| e.to_string())?;
        let r = rel(back.lambda, eta);
        worst = worst.max(r);
        if !(r <= 1e-9) {
            return fail(format!(
                "eta = {eta} -> alpha = {} -> lambda = {} (pair {r1}, {r2})",
                a.alpha, back.lambda
            ));
        }
        done += 1;
    }
    Ok(format!(
        "100 alpha/eta round trips, max rel err {worst:.1e}"
    ))
}

fn scaling_suite(s: &Setup) -> Outcome {
    let mut rng = s.rng(5);
    let n = s.n;
    let mut worst = 0.0f64;
    for k in 0..50 {
        let (r1, r2) = s.pair(&mut rng, 0.05);
        let alpha = rng.gen_range(-5.0..60.0);
        let t = rng.gen_range(0.5..2.0);
        let big = nonlocal_pair_eigenvalue(n, s.kappa_closed, t * r1, t * r2, alpha)
            .map_err(|e| e.to_string())?
            .lambda;
        let small = nonlocal_pair_eigenvalue(n, s.kappa, r1, r2, rescaled_weight(n, t, alpha))
            .map_err(|e| e.to_string())?
            .lambda;
        let want = rescale(n, t, alpha, small).map_err(|e| e.to_string())?;
        let r = rel(big, want);
        worst = worst.max(r);
        if !(r <= 1e-9) {
            return fail(format!(
                "closed form: t = {t}, alpha = {alpha}: {big} vs {want}"
            ));
        }
        if k % 10 == 0 {
            let fd = |a: f64, b: f64, w: f64| {
                radial_pair_nonlocal_solve(n, s.kappa, a, b, w, 200).map(|x| x.lambda)
            };
            let big = fd(t * r1, t * r2, alpha).map_err(|e| e.to_string())?;
            let small = fd(r1, r2, rescaled_weight(n, t, alpha)).map_err(|e| e.to_string())?;
            let r = rel(big, small / (t * t));
            worst = worst.max(r);
            if !(r <= 1e-9) {
                return fail(format!(
                    "radial FD: t = {t}, alpha = {alpha}: rel err {r:e}"
                ));
            }
        }
    }
    Ok(format!("50 rescalings, max rel err {worst:.1e}"))
}

fn monotonicity_suite(s: &Setup) -> Outcome {
    let mut rng = s.rng(6);
    let n = s.n;
    for _ in 0..100 {
        let (r1, r2) = s.pair(&mut rng, 0.0);
        let alpha = rng.gen_range(-10.0..80.0);
        let eps = rng.gen_range(1e-3..5.0);
        let v = s.volume(r1, r2);
        let l = |a: f64| nonlocal_pair_eigenvalue(n, s.kappa, r1, r2, a).map(|e| e.lambda);
        let (a, b) = (
            l(alpha).map_err(|e| e.to_string())?,
            l(alpha + eps).map_err(|e| e.to_string())?,
        );
        if b < a - 1e-10 || b > a + v * eps + 1e-10 {
            return fail(format!(
                "alpha = {alpha}, eps = {eps}: {a} -> {b} (pair {r1}, {r2})"
            ));
        }
    }
    let r = 0.8;
    let sat = saturated_level(n, s.kappa, s.volume(r, r)).unwrap();
    for alpha in [0.0, 0.1, 1.0, 10.0, 1e3, 1e6] {
        let l = nonlocal_pair_eigenvalue(n, s.kappa, r, r, alpha)
            .map_err(|e| e.to_string())?
            .lambda;
        if (l - sat).abs() > 1e-10 * sat {
            return fail(format!(
                "equal radii not saturated at alpha = {alpha}: {l} vs {sat}"
            ));
        }
    }
    Ok("100 monotone/Lipschitz samples; equal radii saturated".into())
}

fn oracle_suite(s: &Setup) -> Outcome {
    for n in [2usize, 3] {
        let kappa = Gauge::euclidean(n).unwrap().wulff_measure().kappa_n;
        let a = critical_alpha(n, kappa).map_err(|e| e.to_string())?;
        let b = critical_alpha_oracle(n, kappa).map_err(|e| e.to_string())?;
        if !(a > 0.0 && b > 0.0 && rel(a, b) <= 1e-6) {
            return fail(format!("critical alpha {a} vs limit {b} (n = {n})"));
        }
    }
    let mut rng = s.rng(8);
    let c = threshold_ratio(s.n).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for _ in 0..6 {
        let (r1, r2) = s.pair(&mut rng, c);
        let alpha = rng.gen_range(-5.0..40.0);
        let exact = nonlocal_pair_eigenvalue(s.n, s.kappa, r1, r2, alpha)
            .map_err(|e| e.to_string())?
            .lambda;
        let fd = radial_pair_nonlocal_solve(s.n, s.kappa, r1, r2, alpha, 1000)
            .map_err(|e| e.to_string())?
            .lambda;
        let r = rel(fd, exact);
        worst = worst.max(r);
        if !(r <= 1e-4) {
            return fail(format!(
                "radial FD {fd} vs closed form {exact} at ({r1}, {r2}, {alpha})"
            ));
        }
    }
    Ok(format!(
        "critical alpha limits agree; radial FD max rel err {worst:.1e}"
    ))
}

/// Smooth positive bump supported in a random disk inside the unit disk.
pub fn random_bump(rng: &mut ChaCha8Rng) -> impl Fn(f64, f64) -> f64 {
    let rho = rng.gen_range(0.3..0.9);
    let off = 1.0 - rho;
    let (cx, cy) = (
        rng.gen_range(-off..off) * 0.7,
        rng.gen_range(-off..off) * 0.7,
    );
    let (a, b) = (rng.gen_range(-0.8..0.8), rng.gen_range(-0.8..0.8));
    move |x, y| {
        let d = ((x - cx).powi(2) + (y - cy).powi(2)) / (rho * rho);
        let w = 1.0 + a * (x - cx) / rho * 0.5 + b * (y - cy) / rho * 0.5;
        (1.0 - d).max(0.0).powi(2) * w
    }
}

fn polya_szego_suite(s: &Setup) -> Outcome {
    let gauge = if s.n == 2 {
        s.gauge.clone()
    } else {
        Gauge::euclidean(2).unwrap()
    };
    let h = 1.0 / 32.0;
    let grid = CartesianGrid2D::disk(PI, h).map_err(|e| e.to_string())?;
    let mut rng = s.rng(9);
    let bumps: Vec<_> = (0..20).map(|_| random_bump(&mut rng)).collect();
    let defects: Vec<Result<f64, String>> = bumps
        .par_iter()
        .map(|f| {
            let u = GridFunction::from_fn(grid.clone(), f);
            let (lhs, rhs) = polya_szego_gap(&u, &gauge).map_err(|e| e.to_string())?;
            Ok((rhs - lhs) / (h * lhs))
        })
        .collect();
    let mut worst = f64::NEG_INFINITY;
    for d in defects {
        worst = worst.max(d?);
    }
    if worst > POLYA_SZEGO_C {
        return fail(format!(
            "relative defect slope {worst} exceeds {POLYA_SZEGO_C}"
        ));
    }
    Ok(format!("20 bumps, worst (rhs - lhs)/(h lhs) = {worst:.3}"))
}

pub fn run(cli: &Cli, ctx: &Context, args: &VerifyArgs) -> CliResult<()> {
    for name in &args.suite {
        if !SUITES.contains(&name.as_str()) {
            return Err(CliError::Config(format!(
                "unknown suite `{name}`; expected one of {}",
                SUITES.join(", ")
            )));
        }
    }
    if !args.perturb_kappa.is_finite() || args.perturb_kappa <= -1.0 {
        return Err(CliError::Config(
            "perturbation must be finite and > -1".into(),
        ));
    }
    let setup = Setup {
        n: ctx.n,
        kappa: ctx.kappa_n,
        kappa_closed: ctx.kappa_n * (1.0 + args.perturb_kappa),
        gauge: ctx.gauge.clone(),
        seed: cli.seed,
    };
    let selected: Vec<&str> = SUITES
        .iter()
        .copied()
        .filter(|s| args.suite.is_empty() || args.suite.iter().any(|a| a == s))
        .collect();
    let mut first_failure = None;
    let mut report = String::new();
    for name in selected {
        let outcome = match name {
            "gauge" => gauge_suite(&setup),
            "bessel" => bessel_suite(&setup),
            "theta" => theta_suite(&setup),
            "roundtrip" => roundtrip_suite(&setup),
            "scaling" => scaling_suite(&setup),
            "monotonicity" => monotonicity_suite(&setup),
            "oracle" => oracle_suite(&setup),
            "polya-szego" => polya_szego_suite(&setup),
            _ => unreachable!("suite names validated above"),
        };
        let line = match &outcome {
            Ok(msg) => format!("PASS {name}: {msg}"),
            Err(msg) => format!("FAIL {name}: {msg}"),
        };
        println!("{line}");
        report.push_str(&line);
        report.push('\n');
        if outcome.is_err() && first_failure.is_none() {
            first_failure = Some(name);
        }
    }
    if let Some(path) = &cli.out {
        crate::output::emit(Some(path), &report)?;
    }
    match first_failure {
        Some(name) => Err(CliError::Verify(format!("suite `{name}` failed"))),
        None => Ok(()),
    }
}
