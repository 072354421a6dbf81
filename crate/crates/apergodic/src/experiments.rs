//! Dispatch from a parsed config to the core operations.
//!
//! Seeds: every experiment uses the config seed directly for its main
//! stream; auxiliary runs use `Stream::new(seed).substream(i).key()` with
//! `i = 1` for the `g` run, `2` for the control run and `3` for the
//! Q-process approximation of a `qsd` experiment.

use apergodic_core::absorbed::{
    conditional_minorization_estimate, fleming_viot, q_process_approx, qed_comparison, FvConfig, FvResult,
};
use apergodic_core::ergodic::{run_as_experiment, ErgodicRun};
use apergodic_core::lyapunov::{
    check_drift, check_growth, doeblin_from_minorization, gaussian_class_minorization, ou_minorization, suggest_k,
    DoeblinReport, DriftCertificate, MinorizationCertificate, Nu, Psi,
};
use apergodic_core::ou::{asymptotic_periodicity_report, transition_params, OuSpec, OuStepper};
use apergodic_core::periodic::{
    invariant_gaussian, limiting_value, power_iteration_invariant, Mesh, MeshKernel, MeshMeasure,
};
use apergodic_core::{Stream, TimeGrid};
use serde_json::{json, Value};

use crate::config::{
    BoundaryChoice, DriftParams, ErgodicMode, ErgodicParams, Experiment, ExperimentConfig, MinorizationClass,
    MinorizationParams, PeriodicityParams, QsdParams, SurvivalParams,
};
use crate::error::Result;
use crate::output::{json_lines, mesh_measure_csv, Artifacts, Csv};
use crate::parallel;

/// Seed of auxiliary stream `i` derived from the config seed.
pub fn derived_seed(seed: u64, i: u64) -> u64 {
    Stream::new(seed).substream(i).key()
}

/// Run the experiment in the calling thread pool and collect its artifacts.
pub fn execute(cfg: &ExperimentConfig) -> Result<Artifacts> {
    match &cfg.experiment {
        Experiment::Ergodic(p) => ergodic(p, cfg.seed),
        Experiment::Drift(p) => drift(p),
        Experiment::Minorization(p) => minorization(p, cfg.seed),
        Experiment::Qsd(p) => qsd(p, cfg.seed),
        Experiment::Survival(p) => survival(p, cfg.seed),
        Experiment::AsymptoticPeriodicity(p) => periodicity(p),
    }
}

fn spec_json(spec: &OuSpec) -> Value {
    json!({ "lambda": spec.lambda.to_string(), "g": spec.g.to_string(), "gamma": spec.gamma })
}

fn ergodic(p: &ErgodicParams, seed: u64) -> Result<Artifacts> {
    let inputs = p.check()?;
    let limit = limiting_value(&inputs.spec, &inputs.f)?;
    let mut csv = Csv::new(&["t", "mean_avg", "l2_err", "var", "stderr"]);
    let mut summary = json!({ "record": "ergodic", "observable": p.observable, "limit": limit });
    match p.mode {
        ErgodicMode::L2 => {
            let run = ErgodicRun::new(&inputs.spec, false, inputs.f.clone(), inputs.initial, &p.t_values, p.dt, seed)?;
            let rep = parallel::ergodic_report(&run, p.replicas, limit)?;
            for i in 0..rep.t_values.len() {
                csv.row(&[&rep.t_values[i], &rep.mean_avg[i], &rep.l2_err[i], &rep.variance[i], &rep.stderr[i]]);
            }
            summary["replicas"] = json!(rep.n_replicas);
            if let Some(fit) = rep.variance_fit {
                summary["variance_slope"] = json!(fit.slope);
                summary["variance_fit_r_squared"] = json!(fit.r_squared);
            }
        }
        ErgodicMode::Pathwise => {
            let t_max = *p.t_values.last().expect("checked nonempty");
            let rep = run_as_experiment(&inputs.spec, &inputs.f, inputs.initial, t_max, Some(&p.t_values), p.dt, seed)?;
            for (t, a) in rep.checkpoints.iter().zip(&rep.averages) {
                csv.row(&[t, a, &((a - limit) * (a - limit)), &0.0, &0.0]);
            }
            summary["replicas"] = json!(1);
            summary["final_deviation"] = json!(rep.final_deviation());
        }
    }
    let mut out = Artifacts::default();
    out.push("report.csv", csv.finish());
    out.push("summary.jsonl", json_lines(&[summary]));
    if let Some(e) = &p.export_paths {
        let grid = TimeGrid::covering(0.0, e.t_end, p.dt)?;
        let stepper = OuStepper::new(&inputs.spec, false, &grid)?;
        let ens = parallel::ensemble(&stepper, &inputs.initial, &grid, e.replicas, seed)?;
        let mut paths = Csv::new(&["replica", "step", "time", "state"]);
        for r in 0..ens.n_replicas() {
            for (k, x) in ens.path(r).iter().enumerate().step_by(e.stride) {
                paths.row(&[&r, &k, &grid.time(k), x]);
            }
        }
        out.push("paths.csv", paths.finish());
        out.push(
            "paths.meta.jsonl",
            json_lines(&[json!({
                "record": "ensemble",
                "seed": seed,
                "model": spec_json(&inputs.spec),
                "initial": serde_json::to_value(p.initial).expect("serializes"),
                "grid": { "t0": grid.t0(), "dt": grid.dt(), "n_steps": grid.n_steps() },
                "stride": e.stride,
                "replicas": e.replicas,
            })]),
        );
    }
    Ok(out)
}

fn drift_json(c: &DriftCertificate, psi: &Psi) -> Value {
    json!({
        "record": "drift",
        "psi": psi.name(),
        "s": c.s,
        "t1": c.t1,
        "theta": c.theta,
        "c": c.c,
        "k_edge": c.k_edge,
        "max_residual": c.max_residual,
        "argmax": c.argmax,
        "valid": c.valid,
    })
}

fn drift(p: &DriftParams) -> Result<Artifacts> {
    let (spec, psi, mesh) = p.check()?;
    let kernel = spec.drift(p.auxiliary);
    let mut records = Vec::new();
    for &s in &p.s_values {
        let cert = check_drift(kernel, &psi, s, p.t1, p.theta, p.c, p.k_edge, &mesh)?;
        let mut rec = drift_json(&cert, &psi);
        if matches!(psi, Psi::Quadratic) {
            let tr = transition_params(kernel, s, s + p.t1)?;
            rec["m"] = json!(tr.m);
            rec["sigma"] = json!(tr.sigma);
            rec["suggested"] = match suggest_k(&tr, p.theta) {
                Ok(sug) => json!({ "k_edge": sug.k_edge, "c_min": sug.c_min }),
                Err(_) => Value::Null,
            };
        }
        if let Some(lags) = &p.growth_lags {
            rec["growth_sup"] = json!(check_growth(kernel, &psi, s, lags, &mesh)?);
        }
        records.push(rec);
    }
    let mut out = Artifacts::default();
    out.push("certificates.jsonl", json_lines(&records));
    Ok(out)
}

fn nu_json(nu: &Nu) -> Value {
    match nu {
        Nu::GaussianClass { a, b_minus, mass } => {
            json!({ "type": "gaussian-class", "a": a, "b_minus": b_minus, "mass": mass })
        }
        Nu::Mesh(m) => json!({ "type": "mesh", "lo": m.mesh().lo(), "hi": m.mesh().hi(), "cells": m.mesh().n_cells() }),
    }
}

fn minorization_json(c: &MinorizationCertificate) -> Value {
    json!({
        "record": "minorization",
        "c": c.c,
        "nu": nu_json(&c.nu),
        "n0": c.n0,
        "t1": c.t1,
        "checked": c.checked,
        "violations": c.violations,
        "min_ratio": c.min_ratio,
        "valid": c.valid(),
    })
}

fn doeblin_json(d: &DoeblinReport) -> Value {
    json!({
        "record": "doeblin",
        "valid": d.valid,
        "degenerate": d.degenerate,
        "worst_margin": d.worst_margin,
        "worst_s": d.worst_s,
        "worst_x": d.worst_x,
    })
}

fn nu_measure(nu: &Nu, mesh: Mesh) -> Result<MeshMeasure> {
    Ok(match nu {
        Nu::GaussianClass { .. } => MeshMeasure::from_density(mesh, |x| nu.density(x).unwrap_or(0.0))?,
        Nu::Mesh(m) => m.clone(),
    })
}

fn minorization(p: &MinorizationParams, seed: u64) -> Result<Artifacts> {
    let nu_mesh = p.check()?;
    let mut records = Vec::new();
    let nu = match &p.class {
        MinorizationClass::GaussianClass { a, b_minus, b_plus } => {
            let cert = gaussian_class_minorization(*a, *b_minus, *b_plus)?;
            records.push(minorization_json(&cert));
            Some(nu_measure(&cert.nu, nu_mesh)?)
        }
        MinorizationClass::Ou { model, s_values, t1, k_edge, probes, mesh } => {
            let horizon = s_values.iter().fold(0.0f64, |a, b| a.max(*b)) + t1 + 1.0;
            let spec = MinorizationParams::ou_spec(model, horizon)?;
            let cert = ou_minorization(&spec.lambda, s_values, *t1, *k_edge)?;
            let probes =
                probes.clone().unwrap_or_else(|| (0..21).map(|i| -k_edge + k_edge * i as f64 / 10.0).collect());
            let points = mesh.build("experiment.class.mesh")?;
            let rep = doeblin_from_minorization(&cert, &spec.lambda, s_values, &probes, &points)?;
            records.push(minorization_json(&cert));
            records.push(doeblin_json(&rep));
            Some(nu_measure(&cert.nu, nu_mesh)?)
        }
        MinorizationClass::Conditional { pair, s, lags, probes, paths, cells, dt } => {
            let pair = MinorizationParams::pair(pair, s + lags.last().copied().unwrap_or(0.0) + 1.0)?;
            let hs = pair.h.eval(*s);
            let mesh = Mesh::new(-hs, hs, *cells)?;
            let est = conditional_minorization_estimate(&pair.h, *s, lags, probes, *paths, mesh, *dt, seed)?;
            let hist: Vec<Value> = est
                .histograms
                .iter()
                .map(|(x, lag, h)| json!({ "probe": x, "lag": lag, "survivors": h.survivors, "paths": h.paths }))
                .collect();
            records.push(json!({
                "record": "conditional-minorization",
                "s": s,
                "c1": est.c1,
                "c1_lower": est.c1_lower,
                "histograms": hist,
            }));
            est.nu
        }
    };
    let mut out = Artifacts::default();
    out.push("certificates.jsonl", json_lines(&records));
    if let Some(nu) = nu {
        out.push("nu.csv", mesh_measure_csv(&nu));
    }
    Ok(out)
}

fn occupation_csv(res: &FvResult, empirical: bool) -> Result<Vec<u8>> {
    let m = if empirical { res.empirical.normalized()? } else { res.occupation.normalized()? };
    let mut w = Csv::new(&["bin_center", "mass"]);
    for (x, p) in m.mesh().centers().zip(m.weights()) {
        w.row(&[&x, p]);
    }
    Ok(w.finish())
}

fn qsd(p: &QsdParams, seed: u64) -> Result<Artifacts> {
    let pair = p.check()?;
    let cfg = FvConfig {
        n_particles: p.particles,
        dt: p.dt,
        t0: p.s,
        duration: p.duration,
        x0: p.x0,
        bins: p.bins,
        burn_in: p.burn_in,
        h_max: Some(pair.h_max(p.s + p.duration)),
        log_resampling: false,
        seed,
    };
    let (seed_g, seed_control) = (derived_seed(seed, 1), derived_seed(seed, 2));
    let mut records = Vec::new();
    let main = if p.compare {
        let cmp = qed_comparison(&pair, &cfg, (seed, seed_g))?;
        let control = fleming_viot(&pair.g, &FvConfig { seed: seed_control, ..cfg.clone() })?;
        let control_tv = control.occupation.normalized()?.tv(&cmp.under_g.occupation.normalized()?)?;
        records.push(json!({
            "record": "qed-comparison",
            "tv": cmp.tv,
            "bootstrap_se": cmp.bootstrap_se,
            "control_tv": control_tv,
        }));
        match p.boundary {
            BoundaryChoice::H => (cmp.under_h, Some(cmp.under_g)),
            BoundaryChoice::G => (cmp.under_g, Some(cmp.under_h)),
        }
    } else {
        let (h, s) = match p.boundary {
            BoundaryChoice::H => (&pair.h, seed),
            BoundaryChoice::G => (&pair.g, seed_g),
        };
        (fleming_viot(h, &FvConfig { seed: s, ..cfg.clone() })?, None)
    };
    let (res, other) = main;
    let occ = res.occupation.normalized()?;
    records.insert(
        0,
        json!({
            "record": "fleming-viot",
            "boundary": match p.boundary { BoundaryChoice::H => "h", BoundaryChoice::G => "g" },
            "particles": p.particles,
            "final_time": res.system.time,
            "absorptions": res.system.n_absorptions,
            "mean": occ.mean(),
            "second_moment": occ.integrate(|x| x * x),
        }),
    );
    if let Some(q) = &p.q_process {
        let h = match p.boundary {
            BoundaryChoice::H => &pair.h,
            BoundaryChoice::G => &pair.g,
        };
        let rep = q_process_approx(h, p.s, p.x0, q.t, &q.horizons, p.particles, p.dt, q.bins, derived_seed(seed, 3))?;
        for (i, horizon) in rep.horizons.iter().enumerate() {
            records.push(json!({
                "record": "q-process",
                "t": q.t,
                "horizon": horizon,
                "lineages": rep.lineages[i],
                "flagged": rep.flagged[i],
                "tv_previous": if i == 0 { Value::Null } else { json!(rep.tv_consecutive[i - 1]) },
            }));
        }
    }
    let mut out = Artifacts::default();
    out.push("occ.csv", occupation_csv(&res, false)?);
    out.push("empirical.csv", occupation_csv(&res, true)?);
    if let Some(o) = &other {
        out.push("occ_other.csv", occupation_csv(o, false)?);
    }
    out.push("qsd.jsonl", json_lines(&records));
    Ok(out)
}

fn survival(p: &SurvivalParams, seed: u64) -> Result<Artifacts> {
    let pair = p.check()?;
    let mut csv = Csv::new(&["k", "gap", "stderr", "sandwich_prob"]);
    let mut records = Vec::new();
    for &k in &p.k_list {
        let row = parallel::gap_row(&pair, p.s, p.t, p.x, k, p.paths, p.dt, seed)?;
        csv.row(&[&row.k, &row.gap, &row.stderr, &row.sandwich_prob]);
        records.push(json!({
            "record": "survival",
            "k": k,
            "p_h": row.p_h,
            "p_g": row.p_g,
            "paths": p.paths,
        }));
    }
    let mut out = Artifacts::default();
    out.push("gaps.csv", csv.finish());
    out.push("survival.jsonl", json_lines(&records));
    Ok(out)
}

fn periodicity(p: &PeriodicityParams) -> Result<Artifacts> {
    let (spec, mesh) = p.check()?;
    let mut worst = vec![0.0f64; p.k_values.len()];
    for &x in &p.probes {
        for (w, row) in worst.iter_mut().zip(asymptotic_periodicity_report(&spec, p.s, p.n, &p.k_values, x)?) {
            *w = w.max(row.tv);
        }
    }
    let mut csv = Csv::new(&["k", "n", "s", "tv"]);
    for (k, tv) in p.k_values.iter().zip(&worst) {
        csv.row(&[k, &p.n, &p.s, tv]);
    }
    let kernel = MeshKernel::skeleton(&spec, mesh)?;
    let pi = power_iteration_invariant(&kernel, p.tol, p.max_iter)?;
    let exact = invariant_gaussian(&spec)?;
    let mut out = Artifacts::default();
    out.push("periodicity.csv", csv.finish());
    out.push("invariant.csv", mesh_measure_csv(&pi.measure));
    out.push(
        "skeleton.jsonl",
        json_lines(&[json!({
            "record": "skeleton-invariant",
            "model": spec_json(&spec),
            "analytic_mean": exact.mean,
            "analytic_variance": exact.variance,
            "mesh_mean": pi.measure.mean(),
            "mesh_variance": pi.measure.variance(),
            "iterations": pi.iterations,
            "residual": pi.residual,
        })]),
    );
    Ok(out)
}
