//! Acceptance suite. Prints one `PASS`/`FAIL` line per criterion and fails
//! if any criterion fails. Run with
//! `cargo test -p apergodic --test acceptance -- --nocapture`.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use apergodic::config::ExperimentConfig;
use apergodic::{execute, parallel, RunOptions};
use apergodic_core::absorbed::{
    fleming_viot, girsanov_weight, qed_comparison, BoundaryPair, FvConfig, GirsanovSampler, SurvivalSampler,
};
use apergodic_core::ergodic::{run_as_experiment, ErgodicRun};
use apergodic_core::lyapunov::{check_drift, gaussian_class_minorization, PointMesh, Psi};
use apergodic_core::ou::{transition_params, OuSpec};
use apergodic_core::periodic::{limiting_value, power_iteration_invariant, Mesh, MeshKernel, MeshMeasure};
use apergodic_core::process::{InitialLaw, Observable};
use apergodic_core::{Stream, TimeFunction};

type Outcome = (bool, String);

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn rel_close(a: f64, b: f64, rtol: f64) -> bool {
    (a - b).abs() <= rtol * b.abs()
}

fn transition_exactness() -> Outcome {
    let one = TimeFunction::constant(1.0);
    let tr = transition_params(&one, 0.0, 1.0).unwrap();
    let (m, var) = ((-1f64).exp(), (1.0 - (-2f64).exp()) / 2.0);
    let closed = rel_close(tr.m, m, 1e-9) && rel_close(tr.variance(), var, 1e-9);
    let lambda = OuSpec::default_experiment().lambda;
    let rng = Stream::new(1);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let s = 20.0 * rng.f64_at(3 * i);
        let u = s + 3.0 * rng.f64_at(3 * i + 1);
        let t = u + 3.0 * rng.f64_at(3 * i + 2);
        let direct = transition_params(&lambda, s, t).unwrap();
        let chain = transition_params(&lambda, u, t).unwrap().after(&transition_params(&lambda, s, u).unwrap());
        worst = worst.max((direct.m - chain.m).abs()).max((direct.variance() - chain.variance()).abs());
    }
    (closed && worst <= 1e-9, format!("m={:.10} sigma2={:.10}; max CK defect {worst:.2e}", tr.m, tr.variance()))
}

fn skeleton_invariant() -> Outcome {
    let kernel = MeshKernel::skeleton(&OuSpec::constant(1.0), Mesh::new(-6.0, 6.0, 400).unwrap()).unwrap();
    let pi = power_iteration_invariant(&kernel, 1e-12, 10_000).unwrap();
    let var = pi.measure.variance();
    ((var - 0.5).abs() <= 1e-3, format!("variance {var:.6} after {} iterations", pi.iterations))
}

fn ergodic_l2() -> Outcome {
    let spec = OuSpec::default_experiment();
    let f = Observable::square();
    let limit = limiting_value(&spec, &f).unwrap();
    let run = ErgodicRun::new(&spec, false, f, InitialLaw::Point(0.0), &[10.0, 100.0, 1000.0], 1e-2, 3).unwrap();
    let rep = parallel::ergodic_report(&run, 1000, limit).unwrap();
    let (mean, se) = (rep.mean_avg[2], rep.stderr[2]);
    let slope = rep.variance_fit.map_or(f64::NAN, |fit| fit.slope);
    let ok = (mean - limit).abs() <= 3.0 * se && (-1.3..=-0.7).contains(&slope);
    (ok, format!("mean {mean:.5} ± {se:.5} vs L={limit:.5}; variance slope {slope:.3}"))
}

fn ergodic_as() -> Outcome {
    let spec = OuSpec::default_experiment();
    let f = Observable::square();
    let run = |seed| run_as_experiment(&spec, &f, InitialLaw::Point(0.0), 1e4, Some(&[1e4]), 1e-2, seed).unwrap();
    let (a, b) = (run(41), run(42));
    let ok = a.final_deviation() <= 0.05 && (a.final_average() - b.final_average()).abs() <= 0.1;
    let detail = format!(
        "L={:.5}; seed 41: {:.5} (dev {:.4}); seed 42: {:.5}",
        a.limit,
        a.final_average(),
        a.final_deviation(),
        b.final_average()
    );
    (ok, detail)
}

fn drift_certificate() -> Outcome {
    let one = TimeFunction::constant(1.0);
    let mesh = PointMesh::default();
    let good = check_drift(&one, &Psi::Quadratic, 0.0, 1.0, 0.5, 0.94, 1.6, &mesh).unwrap();
    let bad = check_drift(&one, &Psi::Quadratic, 0.0, 1.0, 0.1, 0.94, 1.6, &mesh).unwrap();
    let ok = good.valid && good.max_residual <= 0.0 && !bad.valid;
    (ok, format!("theta=0.5 residual {:.5}; theta=0.1 residual {:.3}", good.max_residual, bad.max_residual))
}

fn gaussian_class() -> Outcome {
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for (bm, bp) in [(0.5, 1.0), (0.8, 1.3), (1.0, 2.5)] {
        let cert = gaussian_class_minorization(0.0, bm, bp).unwrap();
        worst = worst.max((cert.c - bm / bp).abs());
        ok &= cert.checked == 1000 && cert.violations == 0;
    }
    let shifted = gaussian_class_minorization(1.2, 0.6, 1.1).unwrap();
    ok &= shifted.violations == 0 && worst <= 1e-9;
    (ok, format!("max |c − b₋/b₊| {worst:.1e}; 1000 members per class, 0 violations"))
}

/// `P₀[τ > t]` on `(−1, 1)` from the sine series.
fn survival_series(t: f64) -> f64 {
    (0..200)
        .map(|j| {
            let k = (2 * j + 1) as f64;
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            sign * 4.0 / (PI * k) * (-k * k * PI * PI * t / 8.0).exp()
        })
        .sum()
}

fn constant_boundary_survival() -> Outcome {
    let h = TimeFunction::constant(1.0);
    let want = survival_series(2.0);
    let est = |bridge| parallel::survival(&SurvivalSampler::new(&h, 0.0, 0.0, 2.0, 1e-3, bridge, 7).unwrap(), 100_000);
    let (with, without) = (est(true).unwrap(), est(false).unwrap());
    let ok = (with.p - want).abs() <= 3.0 * with.stderr && without.p - want > 3.0 * without.stderr;
    let detail = format!(
        "bridge {:.5} ± {:.5}, no bridge {:.5} (upward bias {:+.4}); series {want:.5}",
        with.p,
        with.stderr,
        without.p,
        without.p - want
    );
    (ok, detail)
}

fn girsanov_identity() -> Outcome {
    let flat = TimeFunction::constant(1.7);
    let sampler = GirsanovSampler::new(&flat, 0.0, 0.3, 1.0, 1e-2, 3).unwrap();
    let end = sampler.grid().end();
    let mut unit = true;
    for r in 0..200 {
        let (path, alive) = sampler.path(&Stream::new(3).substream(r));
        if alive {
            unit &= girsanov_weight(&path, &flat, 0.0, end).unwrap() == 1.0;
        }
        let w = sampler.sample(r);
        unit &= w == 0.0 || w == 1.0;
    }
    let h = TimeFunction::parse("1 + 0.1*sin(2*pi*t)").unwrap();
    let n = 100_000;
    let weighted = parallel::girsanov_survival(&GirsanovSampler::new(&h, 0.0, 0.0, 1.0, 1e-3, 31).unwrap(), n).unwrap();
    let direct = parallel::survival(&SurvivalSampler::new(&h, 0.0, 0.0, 1.0, 1e-3, true, 32).unwrap(), n).unwrap();
    let se = weighted.stderr.hypot(direct.stderr);
    let ok = unit && (weighted.p - direct.p).abs() <= 3.0 * se;
    let detail = format!(
        "constant h weights all 1: {unit}; weighted {:.5}, direct {:.5}, 3·se {:.5}",
        weighted.p,
        direct.p,
        3.0 * se
    );
    (ok, detail)
}

fn cos2_cells(mesh: Mesh) -> MeshMeasure {
    let cdf = |x: f64| x / 2.0 + (PI * x).sin() / (2.0 * PI);
    let masses = (0..mesh.n_cells()).map(|i| cdf(mesh.edge(i + 1)) - cdf(mesh.edge(i))).collect();
    MeshMeasure::from_masses(mesh, masses).unwrap()
}

fn unit_interval_qed() -> Outcome {
    let h = TimeFunction::constant(1.0);
    let res = fleming_viot(&h, &FvConfig::new(2000, 1e-3, 50.0, 9)).unwrap();
    let occ = res.occupation.normalized().unwrap();
    let tv = occ.tv(&cos2_cells(*occ.mesh())).unwrap();
    let m2 = occ.integrate(|x| x * x);
    let want = 1.0 / 3.0 - 2.0 / (PI * PI);
    let ok = tv <= 0.05 && (m2 - want).abs() <= 0.01;
    (ok, format!("TV to cos² {tv:.4}; second moment {m2:.5} vs {want:.5}"))
}

fn boundary_pair_evidence() -> Outcome {
    let pair = BoundaryPair::default_pair();
    let rows: Vec<_> = [0u32, 5, 10, 20]
        .iter()
        .map(|&k| parallel::gap_row(&pair, 0.0, 1.0, 0.0, k, 20_000, 1e-3, 13).unwrap())
        .collect();
    let (first, last) = (&rows[0], &rows[3]);
    let gap_ok = first.gap - last.gap > 2.0 * first.stderr.hypot(last.stderr);

    let cfg = FvConfig::new(2000, 1e-3, 50.0, 0);
    let cmp = qed_comparison(&pair, &cfg, (101, 102)).unwrap();
    let control_pair = BoundaryPair { h: pair.g.clone(), ..pair.clone() };
    let control = qed_comparison(&control_pair, &cfg, (103, 104)).unwrap();
    let qed_ok = cmp.tv <= 0.07 && control.tv <= 0.03;
    let gaps: Vec<String> = rows.iter().map(|r| format!("k={}: {:.4}", r.k, r.gap)).collect();
    let detail = format!(
        "gaps [{}] (se {:.4}); QED TV {:.4} ± {:.4}, control {:.4}",
        gaps.join(", "),
        first.stderr.hypot(last.stderr),
        cmp.tv,
        cmp.bootstrap_se,
        control.tv
    );
    (gap_ok && qed_ok, detail)
}

fn brownian_scaling() -> Outcome {
    let (one, two) = (TimeFunction::constant(1.0), TimeFunction::constant(2.0));
    let cells = 20;
    let small =
        parallel::conditioned_histogram(&one, 0.0, 0.0, 0.25, 1e-3, Mesh::new(-1.0, 1.0, cells).unwrap(), 100_000, 51)
            .unwrap();
    let large =
        parallel::conditioned_histogram(&two, 0.0, 0.0, 1.0, 1e-3, Mesh::new(-2.0, 2.0, cells).unwrap(), 100_000, 52)
            .unwrap();
    let dilated = small.measure().unwrap().dilate(2.0).unwrap();
    let tv = large.measure().unwrap().tv(&dilated).unwrap();
    let detail =
        format!("TV {tv:.4}; survival {:.4} (z=2, t=1) vs {:.4} (z=1, t=1/4)", large.survival(), small.survival());
    (tv <= 0.02, detail)
}

const DETERMINISM_CONFIGS: &[&str] = &[
    r#"{"seed": 3, "experiment": {"kind": "ergodic", "observable": "x^2", "t_values": [1, 5], "replicas": 300,
        "export_paths": {"replicas": 2, "t_end": 1, "stride": 10}}}"#,
    r#"{"seed": 3, "experiment": {"kind": "drift", "t1": 1, "theta": 0.5, "c": 0.94, "k_edge": 1.6}}"#,
    r#"{"seed": 3, "experiment": {"kind": "minorization", "class": {"type": "conditional", "s": 0, "lags": [0.5],
        "probes": [-0.4, 0, 0.4], "paths": 2000, "cells": 10, "dt": 0.005}}}"#,
    r#"{"seed": 3, "experiment": {"kind": "qsd", "particles": 100, "duration": 2, "dt": 0.005, "bins": 12,
        "compare": true, "q_process": {"t": 0.5, "horizons": [1, 1.5]}}}"#,
    r#"{"seed": 3, "experiment": {"kind": "survival", "t": 0.5, "k_list": [0, 2], "paths": 2000, "dt": 0.005}}"#,
    r#"{"seed": 3, "experiment": {"kind": "asymptotic-periodicity", "k_values": [0, 1, 4]}}"#,
];

fn determinism() -> Outcome {
    let mut compared = 0;
    for text in DETERMINISM_CONFIGS {
        let cfg = ExperimentConfig::from_json(text).unwrap();
        let a = execute(&cfg, &RunOptions::default()).unwrap();
        let b = execute(&cfg, &RunOptions { threads: Some(1), ..Default::default() }).unwrap();
        for (x, y) in a.files.iter().zip(&b.files) {
            if x.name.ends_with(".csv") {
                if x != y {
                    return (false, format!("{} differs between identical runs", x.name));
                }
                compared += 1;
            }
        }
    }
    (true, format!("{compared} CSV artifacts over {} configs identical", DETERMINISM_CONFIGS.len()))
}

const CRITERIA: &[Criterion] = &[
    Criterion { id: 1, name: "OU transition exactness", budget: Duration::from_secs(1), run: transition_exactness },
    Criterion { id: 2, name: "skeleton invariant", budget: Duration::from_secs(10), run: skeleton_invariant },
    Criterion { id: 3, name: "ergodic averages (L2)", budget: Duration::from_secs(300), run: ergodic_l2 },
    Criterion { id: 4, name: "almost-sure convergence", budget: Duration::from_secs(120), run: ergodic_as },
    Criterion { id: 5, name: "drift certificate", budget: Duration::from_secs(1), run: drift_certificate },
    Criterion { id: 6, name: "Gaussian-class minorization", budget: Duration::from_secs(5), run: gaussian_class },
    Criterion {
        id: 7,
        name: "constant-boundary survival",
        budget: Duration::from_secs(120),
        run: constant_boundary_survival,
    },
    Criterion { id: 8, name: "Girsanov identity", budget: Duration::from_secs(180), run: girsanov_identity },
    Criterion { id: 9, name: "quasi-ergodic distribution", budget: Duration::from_secs(300), run: unit_interval_qed },
    Criterion { id: 10, name: "moving-boundary limits", budget: Duration::from_secs(600), run: boundary_pair_evidence },
    Criterion { id: 11, name: "Brownian scaling", budget: Duration::from_secs(180), run: brownian_scaling },
    Criterion { id: 12, name: "determinism", budget: Duration::from_secs(60), run: determinism },
];

#[test]
fn acceptance() {
    let mut failed = Vec::new();
    println!();
    for c in CRITERIA {
        let start = Instant::now();
        let (ok, detail) = (c.run)();
        let took = start.elapsed();
        let in_time = took <= c.budget;
        let pass = ok && in_time;
        let budget = if in_time { String::new() } else { format!(" OVER BUDGET {:?}", c.budget) };
        println!(
            "{} {:>2} {:<28} {:>7.2}s{budget}  {detail}",
            if pass { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            took.as_secs_f64()
        );
        if !pass {
            failed.push(c.id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
