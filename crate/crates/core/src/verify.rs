//! Desk-scale verification battery. Each criterion returns its individual
//! checks with measured value and bound.

use std::f64::consts::PI;
use std::time::Instant;

use serde::Serialize;

use crate::decay::{
    a_star, decay_certificate, estimate_omega, omega_chain, omega_equals_astar, suggested_t_grid,
    Exponent, OmegaPath,
};
use crate::engine::{comparison_check, evolve_at, operator_norm_inf, Engine, EvolutionConfig};
use crate::error::Result;
use crate::grid::{
    fractional_laplacian_apply, free_semigroup_apply, Field, FractionalOrder, TorusGrid,
};
use crate::kernels::{build_profile_with, norm_one_to_inf, ProfileChecks};
use crate::potential::{
    approximability_profile, ball_criterion, counterexample_radius, make_counterexample,
    ring_criterion, truncate, Potential, PotentialSpec,
};
use crate::random::{gaussian_field, seeded, smooth_positive_field};
use crate::subordinator::{build_density, subordinate, DEFAULT_NODE_COUNT};

/// One measured quantity against its bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub label: String,
    pub value: f64,
    pub bound: f64,
    /// `"<="` or `">="`.
    pub relation: &'static str,
    pub passed: bool,
}

impl Check {
    pub fn le(label: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            label: label.into(),
            value,
            bound,
            relation: "<=",
            passed: value <= bound,
        }
    }

    pub fn ge(label: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            label: label.into(),
            value,
            bound,
            relation: ">=",
            passed: value >= bound,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub error: Option<String>,
    pub elapsed_s: f64,
}

impl CriterionResult {
    /// One-line summary: worst check or the error.
    pub fn summary(&self) -> String {
        let status = if self.passed { "PASS" } else { "FAIL" };
        let detail = match (&self.error, self.checks.iter().find(|c| !c.passed)) {
            (Some(e), _) => format!("error: {e}"),
            (None, Some(c)) => format!(
                "{}: {:e} {} {:e} violated",
                c.label, c.value, c.relation, c.bound
            ),
            (None, None) => format!("{} checks", self.checks.len()),
        };
        format!(
            "criterion {:>2} {:<38} {status} ({detail}; {:.1}s)",
            self.id, self.name, self.elapsed_s
        )
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SuiteOptions {
    pub seed: u64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self { seed: 20_240_601 }
    }
}

pub const CRITERIA: [(u8, &str); 12] = [
    (1, "kernel mass and closed forms"),
    (2, "subordination"),
    (3, "contraction/positivity/comparison"),
    (4, "engine agreement"),
    (5, "smoothing rate"),
    (6, "constant potential exactness"),
    (7, "omega chain"),
    (8, "omega_2 = a_*"),
    (9, "decay certificate"),
    (10, "counterexample reproduction"),
    (11, "no-decay trend"),
    (12, "discrete Strook-Varopoulos"),
];

pub fn run_criterion(id: u8, opts: &SuiteOptions) -> CriterionResult {
    let name = CRITERIA
        .iter()
        .find(|c| c.0 == id)
        .map(|c| c.1)
        .unwrap_or("unknown");
    let start = Instant::now();
    let outcome = match id {
        1 => kernel_closed_forms(),
        2 => subordination(),
        3 => comparison_battery(opts.seed),
        4 => engine_agreement(),
        5 => smoothing_rate(),
        6 => constant_potential(),
        7 => chain(),
        8 => omega_astar(),
        9 => certificate(),
        10 => counterexample(),
        11 => no_decay_trend(),
        12 => strook_varopoulos(opts.seed),
        _ => Err(crate::Error::Configuration(format!("no criterion {id}"))),
    };
    let elapsed_s = start.elapsed().as_secs_f64();
    match outcome {
        Ok(checks) => CriterionResult {
            id,
            name,
            passed: !checks.is_empty() && checks.iter().all(|c| c.passed),
            checks,
            error: None,
            elapsed_s,
        },
        Err(e) => CriterionResult {
            id,
            name,
            passed: false,
            checks: Vec::new(),
            error: Some(e.to_string()),
            elapsed_s,
        },
    }
}

pub fn run_all(opts: &SuiteOptions) -> Vec<CriterionResult> {
    CRITERIA.iter().map(|c| run_criterion(c.0, opts)).collect()
}

fn order(mu: f64) -> FractionalOrder {
    FractionalOrder::new(mu).expect("battery orders are valid")
}

/// `max |a - b| / max |b|` over samples with `|x| ≤ reach`.
fn sup_rel_on(grid: &TorusGrid, values: &Field, reference: impl Fn(f64) -> f64, reach: f64) -> f64 {
    let (mut err, mut scale) = (0.0f64, 0.0f64);
    for (j, v) in values.values().iter().enumerate() {
        let x = grid.coord(j);
        if x.abs() <= reach {
            let r = reference(x);
            err = err.max((v - r).abs());
            scale = scale.max(r.abs());
        }
    }
    err / scale
}

fn kernel_closed_forms() -> Result<Vec<Check>> {
    let grid = TorusGrid::new(1, 80.0, 2048)?;
    let mut checks = Vec::new();
    for mu in [0.25, 0.5, 0.75, 1.0] {
        let p = build_profile_with(order(mu), &grid, ProfileChecks::diagnostic())?;
        checks.push(Check::le(
            format!("mu={mu} |mass-1|"),
            (p.mass() - 1.0).abs(),
            1e-6,
        ));
        checks.push(Check::le(
            format!("mu={mu} evenness"),
            p.evenness_defect(),
            1e-12,
        ));
        if mu == 1.0 {
            let gauss = |x: f64| (4.0 * PI).powf(-0.5) * (-x * x / 4.0).exp();
            checks.push(Check::le(
                "mu=1 sup-rel vs Gaussian",
                sup_rel_on(&grid, p.values(), gauss, 20.0),
                1e-6,
            ));
        }
        if mu == 0.5 {
            let cauchy = |x: f64| 1.0 / (PI * (1.0 + x * x));
            checks.push(Check::le(
                "mu=0.5 sup-rel vs Cauchy",
                sup_rel_on(&grid, p.values(), cauchy, 20.0),
                1e-3,
            ));
        }
    }
    Ok(checks)
}

fn subordination() -> Result<Vec<Check>> {
    let grid = TorusGrid::new(1, 40.0, 512)?;
    let bump = Field::from_fn(&grid, |x| (-2.0 * x[0] * x[0]).exp())?;
    let heat = |f: &Field, s: f64| free_semigroup_apply(f, FractionalOrder::classical(), s);
    let mut checks = Vec::new();
    for mu in [0.25, 0.5, 0.75] {
        let d = build_density(mu, DEFAULT_NODE_COUNT)?;
        checks.push(Check::le(
            format!("mu={mu} |mass-1|"),
            (d.mass() - 1.0).abs(),
            1e-6,
        ));
        for lambda in [0.1, 1.0, 10.0] {
            let err = (d.laplace(lambda) - (-lambda.powf(mu)).exp()).abs();
            checks.push(Check::le(
                format!("mu={mu} laplace lambda={lambda}"),
                err,
                1e-5,
            ));
        }
        for t in [0.5, 1.0, 2.0] {
            let sub = subordinate(&bump, &d, t, heat)?;
            let spec = free_semigroup_apply(&bump, order(mu), t)?;
            checks.push(Check::le(
                format!("mu={mu} t={t} subordinate sup-diff"),
                sub.sup_distance(&spec),
                1e-4,
            ));
        }
    }
    Ok(checks)
}

fn comparison_battery(seed: u64) -> Result<Vec<Check>> {
    let grid = TorusGrid::new(1, 20.0, 256)?;
    let mus = [0.25, 0.5, 0.75, 1.0];
    let t = 1.0;
    let (mut contraction, mut negativity, mut chain) =
        (f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut rng = seeded(seed);
    for k in 0..50 {
        let mu = order(mus[k % mus.len()]);
        let u0 = smooth_positive_field(&grid, &mut rng, 3);
        let v = smooth_positive_field(&grid, &mut rng, 4);
        let vm = truncate(&Potential::custom(v.clone(), 1.0)?, 0.5 * v.max_value())?;
        let norms0 = [u0.lp_norm(1.0)?, u0.lp_norm(2.0)?, u0.sup_norm()];
        for engine in [Engine::Picard, Engine::Splitting, Engine::DenseOracle] {
            let cfg = EvolutionConfig::with_engine(engine);
            let u = &evolve_at(&u0, &v, mu, &[t], &cfg)?.0[0];
            let norms = [u.lp_norm(1.0)?, u.lp_norm(2.0)?, u.sup_norm()];
            for (a, b) in norms.iter().zip(&norms0) {
                contraction = contraction.max(a - b);
            }
            negativity = negativity.max(-u.min_value() / norms0[2]);
            let report = comparison_check(&u0, &v, vm.field(), mu, t, &cfg)?;
            chain = chain.max(report.max_violation / norms0[2]);
        }
    }
    Ok(vec![
        Check::le("max(‖u(t)‖_p - ‖u0‖_p)", contraction, 1e-8),
        Check::le("max(-min u)/‖u0‖_inf", negativity, 1e-10),
        Check::le("chain violation/‖u0‖_inf", chain, 1e-8),
    ])
}

fn well_on(grid: &TorusGrid) -> Result<Potential> {
    let spec = PotentialSpec::Well {
        height: 1.5,
        radius: 3.0,
        center: [1.0, 0.0],
    };
    Potential::from_spec(grid, &spec, 1.0)
}

fn engine_agreement() -> Result<Vec<Check>> {
    let grid = TorusGrid::new(1, 20.0, 256)?;
    let v = well_on(&grid)?;
    let u0 = Field::from_fn(&grid, |x| (-x[0] * x[0] / 2.0).exp())?;
    let mut checks = Vec::new();
    for mu in [0.5, 1.0] {
        let run = |cfg: EvolutionConfig| -> Result<Field> {
            Ok(evolve_at(&u0, v.field(), order(mu), &[1.0], &cfg)?
                .0
                .remove(0))
        };
        let dense = run(EvolutionConfig::with_engine(Engine::DenseOracle))?;
        let picard = run(EvolutionConfig::with_engine(Engine::Picard))?;
        let split = EvolutionConfig::with_engine(Engine::Splitting);
        let s1 = run(split.clone())?;
        let s2 = run(EvolutionConfig {
            dt: 0.5 * split.dt,
            ..split
        })?;
        let pairs = [
            ("picard-dense", &picard, &dense),
            ("splitting(dt)-dense", &s1, &dense),
            ("splitting(dt/2)-dense", &s2, &dense),
            ("picard-splitting(dt)", &picard, &s1),
            ("splitting(dt)-splitting(dt/2)", &s1, &s2),
        ];
        for (label, a, b) in pairs {
            checks.push(Check::le(
                format!("mu={mu} {label}"),
                a.sup_distance(b),
                1e-5,
            ));
        }
    }
    Ok(checks)
}

fn smoothing_rate() -> Result<Vec<Check>> {
    let grid = TorusGrid::new(1, 10.0, 4096)?;
    let times: Vec<f64> = (0..=10)
        .map(|k| 1e-2 * 10f64.powf(k as f64 / 10.0))
        .collect();
    let mut checks = Vec::new();
    for mu in [0.5, 1.0] {
        let o = order(mu);
        let xs: Vec<f64> = times.iter().map(|t| t.ln()).collect();
        let ys = times
            .iter()
            .map(|&t| Ok(norm_one_to_inf(&grid, o, t)?.ln()))
            .collect::<Result<Vec<f64>>>()?;
        let n = xs.len() as f64;
        let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
        let slope = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (x - mx) * (y - my))
            .sum::<f64>()
            / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
        let want = -1.0 / (2.0 * mu);
        checks.push(Check::le(
            format!("mu={mu} |slope/(-N/2mu) - 1|"),
            (slope / want - 1.0).abs(),
            0.05,
        ));
        // a nonnegative potential only lowers the spike peak
        let mut spike = vec![0.0; grid.len()];
        spike[grid.origin_flat()] = 1.0 / grid.cell_volume();
        let spike = Field::new(&grid, spike)?;
        let v = well_on(&grid)?;
        let cfg = EvolutionConfig {
            engine: Engine::Splitting,
            dt: 1e-3,
            ..Default::default()
        };
        let with_v = &evolve_at(&spike, v.field(), o, &[0.05], &cfg)?.0[0];
        let free = norm_one_to_inf(&grid, o, 0.05)?;
        checks.push(Check::le(
            format!("mu={mu} peak(V) - peak(0)"),
            with_v.sup_norm() - free,
            1e-8,
        ));
    }
    Ok(checks)
}

fn constant_potential() -> Result<Vec<Check>> {
    let grid = TorusGrid::new(1, 20.0, 256)?;
    let o = order(0.5);
    let v = Field::constant(&grid, 1.0);
    let mut checks = Vec::new();
    let times: Vec<f64> = (1..=20).map(|k| 0.25 * k as f64).collect();
    for engine in [Engine::Picard, Engine::Splitting, Engine::DenseOracle] {
        let cfg = EvolutionConfig::with_engine(engine);
        for t in [0.5, 1.0, 2.0] {
            let n = operator_norm_inf(&v, o, t, &cfg)?;
            checks.push(Check::le(
                format!("{} |‖S({t})1‖ - e^-t|", engine.name()),
                (n - (-t).exp()).abs(),
                1e-8,
            ));
        }
        for p in [Exponent::One, Exponent::Two, Exponent::Inf] {
            let w = estimate_omega(&v, o, p, &times, &cfg)?;
            checks.push(Check::le(
                format!("{} omega_{p:?} rel err", engine.name()),
                (w - 1.0).abs(),
                0.02,
            ));
        }
    }
    checks.push(Check::le("|a_* - 1|", (a_star(&v, o)? - 1.0).abs(), 1e-8));
    Ok(checks)
}

fn bump_array_on(grid: &TorusGrid) -> Result<Potential> {
    let spec = PotentialSpec::BumpArray {
        height: 1.0,
        spacing: 5.0,
        radius: 1.5,
    };
    Potential::from_spec(grid, &spec, 1.0)
}

fn chain() -> Result<Vec<Check>> {
    let grid = TorusGrid::new(1, 20.0, 256)?;
    let potentials = [
        ("well", well_on(&grid)?),
        ("bump_array", bump_array_on(&grid)?),
    ];
    let cfg = EvolutionConfig::with_engine(Engine::DenseOracle);
    let mut checks = Vec::new();
    for (name, v) in &potentials {
        for mu in [0.5, 1.0] {
            let o = order(mu);
            let w2 = a_star(v.field(), o)?;
            let times = suggested_t_grid(w2, 8.0, 40)?;
            let winf = estimate_omega(v.field(), o, Exponent::Inf, &times, &cfg)?;
            let w1 = estimate_omega(v.field(), o, Exponent::One, &times, &cfg)?;
            let c = omega_chain(w2, Some(w1), winf, grid.dim(), o);
            let tol = 0.05 * w2;
            checks.push(Check::le(
                format!("{name} mu={mu} (omega_inf - omega_2)/tol"),
                (winf - w2) / tol,
                1.0,
            ));
            checks.push(Check::le(
                format!("{name} mu={mu} (omega_1 - omega_2)/tol"),
                (w1 - w2) / tol,
                1.0,
            ));
            checks.push(Check::le(
                format!("{name} mu={mu} (omega_inf - omega_1)/tol"),
                (winf - w1) / tol,
                1.0,
            ));
            checks.push(Check::le(
                format!("{name} mu={mu} (factor*omega_2 - omega_inf)/tol"),
                (c.lower_factor * w2 - winf) / tol,
                1.0,
            ));
            if mu == 1.0 {
                checks.push(Check::le(
                    format!("{name} mu=1 |omega_2 - omega_inf|/tol"),
                    (w2 - winf).abs() / tol,
                    1.0,
                ));
            }
        }
    }
    Ok(checks)
}

fn omega_astar() -> Result<Vec<Check>> {
    let configs: Vec<(&str, TorusGrid, f64, PotentialSpec)> = vec![
        (
            "constant",
            TorusGrid::new(1, 20.0, 256)?,
            0.5,
            PotentialSpec::Constant { value: 0.4 },
        ),
        (
            "well",
            TorusGrid::new(1, 20.0, 256)?,
            0.5,
            PotentialSpec::Well {
                height: 1.5,
                radius: 3.0,
                center: [1.0, 0.0],
            },
        ),
        (
            "bump_array",
            TorusGrid::new(1, 20.0, 512)?,
            0.75,
            PotentialSpec::BumpArray {
                height: 1.0,
                spacing: 5.0,
                radius: 1.5,
            },
        ),
        (
            "well",
            TorusGrid::new(1, 20.0, 512)?,
            1.0,
            PotentialSpec::Well {
                height: 2.0,
                radius: 4.0,
                center: [0.0, 0.0],
            },
        ),
        (
            "bump_array",
            TorusGrid::new(1, 40.0, 1024)?,
            0.25,
            PotentialSpec::BumpArray {
                height: 0.5,
                spacing: 4.0,
                radius: 1.0,
            },
        ),
    ];
    let cfg = EvolutionConfig {
        engine: Engine::Splitting,
        dt: 1e-2,
        ..Default::default()
    };
    let mut checks = Vec::new();
    for (name, grid, mu, spec) in configs {
        let v = Potential::from_spec(&grid, &spec, 1.0)?;
        let r = omega_equals_astar(v.field(), order(mu), OmegaPath::TraceFit, &cfg)?;
        checks.push(Check::le(
            format!("{name} mu={mu} n={} rel gap", grid.points_per_axis()),
            r.rel_gap,
            0.02,
        ));
    }
    Ok(checks)
}

fn certificate() -> Result<Vec<Check>> {
    let grid = TorusGrid::new(1, 20.0, 1024)?;
    let spec = PotentialSpec::BumpArray {
        height: 4.0,
        spacing: 2.0,
        radius: 1.0,
    };
    let vm = truncate(&Potential::from_spec(&grid, &spec, 1.0)?, 2.0)?;
    let radius = 1.0;
    let c = ball_criterion(vm.field(), radius)?.inf_value;
    let cfg = EvolutionConfig::with_engine(Engine::DenseOracle);
    let mut checks = vec![Check::ge("ball constant c", c, f64::MIN_POSITIVE)];
    for mu in [0.5, 1.0] {
        let t = 0.5 / vm.sup();
        let cert = decay_certificate(vm.field(), order(mu), t, radius, c, &cfg)?;
        checks.push(Check::le(
            format!("mu={mu} bound - 1"),
            cert.bound_value - 1.0,
            -f64::EPSILON,
        ));
        checks.push(Check::le(
            format!("mu={mu} simulated - bound"),
            cert.simulated_value - cert.bound_value,
            1e-6,
        ));
    }
    Ok(checks)
}

fn counterexample() -> Result<Vec<Check>> {
    let grid = TorusGrid::new(2, 32.0, 1024)?;
    let v = make_counterexample(&grid, 1.0, 8)?;
    let worst = v
        .cube_integrals()
        .iter()
        .map(|s| (s - 1.0).abs())
        .fold(0.0, f64::max);
    let r = counterexample_radius(&v)?;
    let inf_v = ball_criterion(v.field(), r)?.inf_value;
    let vm = truncate(&v, 2.0)?;
    let rings = ring_criterion(&v, vm.field(), r)?;
    let near = rings[0].1;
    let far = rings.last().expect("eight rings").1;
    let defects = approximability_profile(&v, 1.0, &[1.0, 2.0, 4.0, 8.0])?;
    let plateau = defects.iter().map(|d| d.1).fold(f64::INFINITY, f64::min);
    let rising = defects
        .windows(2)
        .map(|w| w[1].1 - w[0].1)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(vec![
        Check::le("max |cube integral - 1|", worst, 1e-10),
        Check::ge("inf ball integral of V at r*", inf_v, 1.0 - 1e-10),
        Check::ge("near/far ball integral of V_2", near / far, 5.0),
        Check::ge("min defect over M in {1,2,4,8}", plateau, f64::MIN_POSITIVE),
        Check::le("defect increase along M", rising, 0.0),
    ])
}

fn no_decay_trend() -> Result<Vec<Check>> {
    let o = FractionalOrder::classical();
    let spec = PotentialSpec::Well {
        height: 10.0,
        radius: 2.0,
        center: [0.0, 0.0],
    };
    let values = [(20.0, 256), (40.0, 512), (80.0, 1024)]
        .iter()
        .map(|&(l, n)| {
            let grid = TorusGrid::new(1, l, n)?;
            a_star(Potential::from_spec(&grid, &spec, 1.0)?.field(), o)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(vec![
        Check::ge(
            "a_*(20) - a_*(40)",
            values[0] - values[1],
            f64::MIN_POSITIVE,
        ),
        Check::ge(
            "a_*(40) - a_*(80)",
            values[1] - values[2],
            f64::MIN_POSITIVE,
        ),
        Check::le("a_*(80) / a_*(20)", values[2] / values[0], 0.25),
    ])
}

fn strook_varopoulos(seed: u64) -> Result<Vec<Check>> {
    let grid = TorusGrid::new(1, 20.0, 256)?;
    let mut rng = seeded(seed ^ 0x5151);
    let mut checks = Vec::new();
    for mu in [0.25, 0.5, 0.75] {
        let o = order(mu);
        let mut worst = f64::INFINITY;
        for _ in 0..100 {
            let f = gaussian_field(&grid, &mut rng);
            let a = f.abs();
            let gap = f.inner(&fractional_laplacian_apply(&f, o))
                - a.inner(&fractional_laplacian_apply(&a, o));
            worst = worst.min(gap / f.lp_norm(2.0)?.powi(2));
        }
        checks.push(Check::ge(format!("mu={mu} min gap/‖f‖²"), worst, -1e-9));
    }
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checks_compare_inclusively() {
        assert!(Check::le("a", 1.0, 1.0).passed);
        assert!(!Check::le("a", 1.0 + 1e-15, 1.0).passed);
        assert!(Check::ge("b", 0.0, 0.0).passed);
        assert!(!Check::ge("b", f64::NAN, 0.0).passed);
    }

    #[test]
    fn unknown_criterion_fails_with_message() {
        let r = run_criterion(13, &SuiteOptions::default());
        assert!(!r.passed);
        assert!(r.error.as_deref().unwrap().contains("13"));
        assert!(r.summary().contains("FAIL"));
    }

    #[test]
    fn cheap_criteria_pass() {
        let opts = SuiteOptions { seed: 3 };
        for id in [6, 12] {
            let r = run_criterion(id, &opts);
            assert!(r.passed, "{}", r.summary());
        }
    }
}
