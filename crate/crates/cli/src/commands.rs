use anyhow::{bail, Context, Result};
use fracsemi::decay::{
    a_star, assemble_report, decay_certificate, estimate_omega_detailed, fit_rate, omega_chain,
    suggested_t_grid, Exponent, Measurements, Verdict,
};
use fracsemi::engine::{evolve, evolve_at, truncation_convergence, write_trace_csv, TracePoint};
use fracsemi::grid::Field;
use fracsemi::kernels::{build_profile, build_profile_with, norm_one_to_inf, ProfileChecks};
use fracsemi::potential::{
    approximability_profile, ball_criterion, counterexample_radius, ring_criterion, truncate,
    uniform_norm, write_field_csv,
};
use fracsemi::subordinator::{build_density, DEFAULT_NODE_COUNT};
use fracsemi::verify::{run_criterion, SuiteOptions, CRITERIA};
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, KernelChecks};
use crate::output::{num, Artifacts};

/// Summary for `report.json` and whether every property held.
pub struct Outcome {
    pub report: Value,
    pub property_ok: bool,
}

/// Slowest rate used to lay out a default fitting window.
const MIN_FIT_RATE: f64 = 0.05;
pub const CONTRACTION_TOL: f64 = 1e-8;
pub const POSITIVITY_TOL: f64 = 1e-10;

pub fn kernel(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<Outcome> {
    let s = cfg.setup()?;
    let profile = match cfg.kernel_checks {
        KernelChecks::Strict => build_profile(s.order, &s.grid),
        KernelChecks::Diagnostic => {
            build_profile_with(s.order, &s.grid, ProfileChecks::diagnostic())
        }
    }
    .context(
        "kernel profile (set \"kernel_checks\": \"diagnostic\" to skip the resolution checks)",
    )?;
    profile.write_csv(&out.path("kernel_profile.csv"))?;
    let density = if s.order.is_classical() {
        Value::Null
    } else {
        let d = build_density(s.order.value(), DEFAULT_NODE_COUNT)?;
        d.write_csv(&out.path("subordinator_density.csv"))?;
        json!({
            "mass": d.mass(),
            "mass_defect": d.mass_defect(),
            "tail_mass": d.tail_mass(),
            "clamped_nodes": d.clamped(),
            "clamp_mass": d.clamp_mass(),
        })
    };
    let mut smoothing = Vec::new();
    if let Some(ts) = &cfg.t_grid {
        for &t in ts {
            smoothing.push(vec![num(t), num(norm_one_to_inf(&s.grid, s.order, t)?)]);
        }
        out.table("smoothing.csv", &["t", "norm_1_to_inf"], &smoothing)?;
    }
    Ok(Outcome {
        report: json!({
            "grid": s.grid.spec(),
            "mu": s.order.value(),
            "mass": profile.mass(),
            "at_origin": profile.at_origin(),
            "evenness_defect": profile.evenness_defect(),
            "spectral_residual": profile.spectral_residual(),
            "tail_mass_estimate": profile.tail_mass_estimate(),
            "lower_c": profile.lower_c,
            "upper_c": profile.upper_c,
            "subordinator_density": density,
        }),
        property_ok: true,
    })
}

pub fn evolve_cmd(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<Outcome> {
    let s = cfg.setup()?;
    let v = cfg.potential(&s.grid)?;
    let u0 = cfg.initial_field(&s.grid)?;
    let (final_field, trace, diagnostics) = match (&cfg.t_grid, cfg.t_final) {
        (Some(ts), _) => {
            let (fields, diag) = evolve_at(&u0, v.field(), s.order, ts, &cfg.engine)?;
            let mut trace = vec![TracePoint::of(0.0, &u0)];
            trace.extend(ts.iter().zip(&fields).map(|(&t, f)| TracePoint::of(t, f)));
            let last = fields.into_iter().last().expect("nonempty t_grid");
            (last, trace, diag)
        }
        (None, Some(t)) => {
            let r = evolve(&u0, v.field(), s.order, t, &cfg.engine)?;
            (r.final_field, r.trace, r.diagnostics)
        }
        (None, None) => bail!("evolve needs config field `t_final` or `t_grid`"),
    };
    write_trace_csv(&trace, &out.path("trace.csv"))?;
    write_field_csv(&final_field, "u", &out.path("final_field.csv"))?;
    v.write_csv(&out.path("potential.csv"))?;

    let start = trace[0];
    let growth = trace
        .iter()
        .map(|p| {
            [(p.l1, start.l1), (p.l2, start.l2), (p.linf, start.linf)]
                .iter()
                .map(|(a, b)| (a - b) / b.max(f64::MIN_POSITIVE))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let negativity = -final_field.min_value() / start.linf.max(f64::MIN_POSITIVE);
    let contraction_ok = growth <= CONTRACTION_TOL;
    let positivity_ok = negativity <= POSITIVITY_TOL;
    Ok(Outcome {
        report: json!({
            "grid": s.grid.spec(),
            "mu": s.order.value(),
            "potential": v.spec(),
            "diagnostics": diagnostics,
            "trace": trace,
            "max_relative_norm_growth": growth,
            "relative_negativity": negativity,
            "contraction_ok": contraction_ok,
            "positivity_ok": positivity_ok,
        }),
        property_ok: contraction_ok && positivity_ok,
    })
}

pub fn decay(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<Outcome> {
    let s = cfg.setup()?;
    let v = cfg.potential(&s.grid)?;
    let mut hints = Vec::new();
    let a = a_star(v.field(), s.order)?;
    let times = match (&cfg.t_grid, cfg.t_final) {
        (Some(ts), _) => ts.clone(),
        (None, Some(t)) => (1..=40).map(|k| t * k as f64 / 40.0).collect(),
        (None, None) => {
            if a < MIN_FIT_RATE {
                hints.push(format!(
                    "a_* = {a:e} is small; the default t_grid spans 6/{MIN_FIT_RATE} only"
                ));
            }
            suggested_t_grid(a.max(MIN_FIT_RATE), 6.0, 40)?
        }
    };

    let one = Field::constant(&s.grid, 1.0);
    let (fields, _) = evolve_at(&one, v.field(), s.order, &times, &cfg.engine)?;
    let trace: Vec<TracePoint> = times
        .iter()
        .zip(&fields)
        .map(|(&t, f)| TracePoint::of(t, f))
        .collect();
    write_trace_csv(&trace, &out.path("norm_trace.csv"))?;
    let sup: Vec<f64> = trace.iter().map(|p| p.linf).collect();

    let omega_inf = match fit_rate(&times, &sup) {
        Ok(fit) => Some(fit.omega),
        Err(e) => {
            hints.push(format!("omega_inf fit failed: {e}"));
            None
        }
    };
    let mut estimate =
        |p: Exponent| match estimate_omega_detailed(v.field(), s.order, p, &times, &cfg.engine) {
            Ok(est) => Some(est.omega),
            Err(e) => {
                hints.push(format!("omega_{p:?} estimate failed: {e}"));
                None
            }
        };
    let omega_1 = estimate(Exponent::One);
    let omega_2 = estimate(Exponent::Two);
    let chain = match (omega_2, omega_inf) {
        (Some(w2), Some(wi)) => Some(omega_chain(w2, omega_1, wi, s.grid.dim(), s.order)),
        _ => None,
    };
    let omega_rows: Vec<Vec<String>> = [("1", omega_1), ("2", omega_2), ("inf", omega_inf)]
        .iter()
        .filter_map(|(p, w)| w.map(|w| vec![p.to_string(), num(w)]))
        .collect();
    out.table("omega_vs_p.csv", &["p", "omega"], &omega_rows)?;

    let table = cfg
        .radii(&s.grid)?
        .into_iter()
        .map(|r| ball_criterion(v.field(), r))
        .collect::<fracsemi::Result<Vec<_>>>()?;
    let rows: Vec<Vec<String>> = table
        .iter()
        .map(|b| vec![num(b.radius), num(b.inf_value)])
        .collect();
    out.table("criterion_vs_r.csv", &["r", "inf_value"], &rows)?;

    let certificate = match cfg.certificate {
        Some(spec) => {
            let vm = truncate(&v, spec.level).context("config field `certificate.level`")?;
            let c = ball_criterion(vm.field(), spec.radius)
                .context("config field `certificate.radius`")?
                .inf_value;
            let t = spec.t.unwrap_or(0.5 / vm.sup());
            Some(
                decay_certificate(vm.field(), s.order, t, spec.radius, c, &cfg.engine)
                    .context("config field `certificate`")?,
            )
        }
        None => None,
    };

    let mut report = assemble_report(Measurements {
        dim: s.grid.dim(),
        mu: s.order.value(),
        length: s.grid.length(),
        points: s.grid.points_per_axis(),
        potential_family: v.family().to_string(),
        omega_1,
        omega_2,
        omega_inf,
        a_star: Some(a),
        chain,
        certificate,
        ball_criterion_table: table,
        sup_trace: Some((times.clone(), sup)),
        threshold: cfg.threshold,
    })?;
    report.hints.extend(hints);
    let mut property_ok = report.chain_ok != Some(false) && report.certificate.is_none_or(|c| c.ok);
    if let Some(want) = cfg.expect {
        if want != report.verdict {
            report.hints.push(format!(
                "expected verdict {}, got {}",
                verdict_name(want),
                verdict_name(report.verdict)
            ));
            property_ok = false;
        }
    }
    let mut body = serde_json::to_value(&report)?;
    body["t_grid"] = json!(times);
    Ok(Outcome {
        report: body,
        property_ok,
    })
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Decay => "decay",
        Verdict::NoDecay => "no_decay",
        Verdict::Inconclusive => "inconclusive",
    }
}

pub fn audit(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<Outcome> {
    let spec = cfg.grid.context(
        "config field `grid` is required: {\"dim\": 1|2, \"length\": L, \"points\": 2^k}",
    )?;
    let grid = spec.build().context("config field `grid`")?;
    let v = cfg.potential(&grid)?;
    v.write_csv(&out.path("potential.csv"))?;
    let mut property_ok = true;

    let table = cfg
        .radii(&grid)?
        .into_iter()
        .map(|r| ball_criterion(v.field(), r))
        .collect::<fracsemi::Result<Vec<_>>>()?;
    let rows: Vec<Vec<String>> = table
        .iter()
        .map(|b| {
            vec![
                num(b.radius),
                num(b.inf_value),
                num(b.argmin[0]),
                num(b.argmin[1]),
            ]
        })
        .collect();
    out.table(
        "criterion_vs_r.csv",
        &["r", "inf_value", "argmin_x", "argmin_y"],
        &rows,
    )?;

    let ladder = cfg.ladder();
    let unit = 1.0f64.min(0.49 * grid.length());
    let defects =
        approximability_profile(&v, cfg.p0, &ladder).context("config field `m_ladder`")?;
    let truncation = match (cfg.mu, cfg.t_final) {
        (Some(_), Some(t)) => {
            let s = cfg.setup()?;
            let u0 = cfg.initial_field(&grid)?;
            let (deltas, rise) = truncation_convergence(&u0, &v, s.order, t, &ladder, &cfg.engine)?;
            let monotone = rise <= CONTRACTION_TOL * u0.sup_norm();
            property_ok &= monotone;
            Some((deltas, rise, monotone))
        }
        _ => None,
    };
    let ladder_rows: Vec<Vec<String>> = defects
        .iter()
        .enumerate()
        .map(|(k, &(m, defect))| {
            let mut row = vec![num(m), num(defect)];
            match &truncation {
                Some((d, _, _)) => {
                    row.extend([num(d[k].delta_p1), num(d[k].delta_p2), num(d[k].delta_pinf)])
                }
                None => row.extend(["nan".to_string(), "nan".into(), "nan".into()]),
            }
            row
        })
        .collect();
    out.table(
        "m_ladder.csv",
        &["M", "defect", "delta_p1", "delta_p2", "delta_pinf"],
        &ladder_rows,
    )?;

    let mut counterexample = Value::Null;
    if !v.cubes().is_empty() {
        let integrals = v.cube_integrals();
        let cube_rows: Vec<Vec<String>> = v
            .cubes()
            .iter()
            .zip(&integrals)
            .enumerate()
            .map(|(k, (cube, s))| vec![k.to_string(), cube.ring.to_string(), num(*s)])
            .collect();
        out.table(
            "cube_integrals.csv",
            &["cube", "ring", "integral"],
            &cube_rows,
        )?;
        let worst = integrals
            .iter()
            .map(|s| (s - 1.0).abs())
            .fold(0.0, f64::max);
        let r_star = counterexample_radius(&v)?;
        let mut ring_rows = Vec::new();
        for &m in &ladder {
            let vm = truncate(&v, m)?;
            for (ring, inf) in ring_criterion(&v, vm.field(), r_star)? {
                ring_rows.push(vec![ring.to_string(), num(m), num(inf)]);
            }
        }
        out.table(
            "ring_criterion.csv",
            &["ring", "M", "inf_value"],
            &ring_rows,
        )?;
        let masses_ok = worst <= 1e-10;
        property_ok &= masses_ok;
        counterexample = json!({
            "cubes": integrals.len(),
            "max_cube_integral_error": worst,
            "cube_masses_ok": masses_ok,
            "r_star": r_star,
            "ball_criterion_at_r_star": ball_criterion(v.field(), r_star)?.inf_value,
        });
    }

    Ok(Outcome {
        report: json!({
            "grid": grid.spec(),
            "potential": v.spec(),
            "p0": cfg.p0,
            "sup": v.sup(),
            "uniform_norm": uniform_norm(&v, cfg.p0, unit)?,
            "uniform_norm_ball_radius": unit,
            "ball_criterion_table": table,
            "approximability": defects,
            "truncation": truncation.as_ref().map(|(d, rise, ok)| json!({
                "deltas": d,
                "max_pointwise_rise": rise,
                "monotone_ok": ok,
            })),
            "counterexample": counterexample,
        }),
        property_ok,
    })
}

pub fn verify_suite(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<Outcome> {
    let opts = SuiteOptions {
        seed: cfg.seed.unwrap_or(SuiteOptions::default().seed),
    };
    let ids: Vec<u8> = match &cfg.criteria {
        Some(ids) => {
            if let Some(bad) = ids.iter().find(|id| !CRITERIA.iter().any(|c| c.0 == **id)) {
                bail!("config field `criteria`: no criterion {bad}; expected ids 1-12");
            }
            ids.clone()
        }
        None => CRITERIA.iter().map(|c| c.0).collect(),
    };
    let mut results = Vec::new();
    let mut timing = Vec::new();
    for id in ids {
        let r = run_criterion(id, &opts);
        eprintln!("{}", r.summary());
        timing.push(vec![
            r.id.to_string(),
            r.passed.to_string(),
            format!("{:.3}", r.elapsed_s),
        ]);
        results.push(r);
    }
    out.table(
        "criteria.csv",
        &["criterion", "passed", "elapsed_s"],
        &timing,
    )?;
    let passed = results.iter().all(|r| r.passed);
    // timings vary between runs; keep them out of the report
    let criteria: Vec<Value> = results
        .iter()
        .map(|r| {
            let mut v = serde_json::to_value(r).expect("criterion results serialize");
            if let Some(map) = v.as_object_mut() {
                map.remove("elapsed_s");
            }
            v
        })
        .collect();
    Ok(Outcome {
        report: json!({ "seed": opts.seed, "passed": passed, "criteria": criteria }),
        property_ok: passed,
    })
}
