//! One function per subcommand. Each writes its artifacts and returns the main table.

use crate::config::{RhoMethod, RunConfig};
use crate::output::{Sink, Table};
use crate::CliError;
use halfline::acceptance;
use halfline::amplitude::{a_from_m_smeared, a_march, amplitude_bound_report, closed_form, m_from_amplitude, AmplitudeFunction};
use halfline::hboundary::{b_h_extract, constant_b_h, h_reference, m_h, HValue};
use halfline::model::reference;
use halfline::oracle::fd_spectrum;
use halfline::quad::gl_composite;
use halfline::scattering::{a_from_scattering, scattering_data};
use halfline::spectral::{a_from_rho_abelian, convergence_probe, del_rio_trace, measure_for, smeared_identity_residual, SpectralMeasure};
use halfline::testfn::TestFunction;
use halfline::weyl::{bound_report, m_principal};
use halfline::{Complex64, Potential, Problem, ReferenceSet, VerificationReport};
use rayon::prelude::*;
use serde_json::{json, Value};

type Out = Result<Option<Table>, CliError>;

fn kappa_json(k: Complex64) -> Value {
    json!([k.re, k.im])
}

/// Comparison window used by the a-priori bounds.
fn default_window(problem: &Problem) -> (f64, f64) {
    match problem.b {
        Some(b) => (0.5 * b, 0.4 * b),
        None => (1.0, 0.5),
    }
}

/// Default amplitude range: 3, kept inside a finite interval.
fn default_reach(problem: &Problem) -> f64 {
    problem.b.map_or(3.0, |b| (0.9 * b).min(3.0))
}

fn amplitude_for(problem: &Problem, refs: Option<&ReferenceSet>, a: f64, d_alpha: f64, tol: Option<f64>) -> Result<AmplitudeFunction, CliError> {
    Ok(match refs {
        Some(r) => closed_form(r, problem, a, d_alpha)?,
        None => a_march(problem, a, d_alpha, tol)?,
    })
}

fn measure(cfg: &RunConfig, problem: &Problem) -> Result<(SpectralMeasure, &'static str, Option<Value>), CliError> {
    if cfg.rho.method == RhoMethod::Auto {
        if let Ok(r) = reference(problem) {
            return Ok((measure_for(r.family), "closed_form", None));
        }
    }
    let length = cfg.rho.length.unwrap_or(problem.b.unwrap_or(8.0));
    let spectrum = fd_spectrum(problem, length, cfg.rho.cells.unwrap_or(1600), cfg.rho.count.unwrap_or(80))?;
    let info = json!({ "length": spectrum.l, "cells": spectrum.n, "eigenvalues": spectrum.eigenvalues, "weights": spectrum.weights });
    Ok((SpectralMeasure::from_discrete(&spectrum), "finite_difference", Some(info)))
}

pub fn m(cfg: &RunConfig, sink: &mut Sink) -> Out {
    let problem = cfg.problem().map_err(CliError::Config)?;
    let refs = reference(&problem).ok();
    let (wa, wd) = default_window(&problem);
    let (a, delta) = (cfg.m.a.unwrap_or(wa), cfg.m.delta.unwrap_or(wd));
    let kappas = cfg.m.kappas();
    let values = kappas.par_iter().map(|&k| m_principal(&problem, k)).collect::<Result<Vec<_>, _>>()?;
    let mut table = Table::new(&["kappa_re", "kappa_im", "m_re", "m_im", "error", "method", "reference_re", "reference_im"]);
    let mut bounds = Vec::new();
    for (&k, v) in kappas.iter().zip(&values) {
        let r = refs.map(|r| r.m(k));
        table.push(vec![
            k.re.into(),
            k.im.into(),
            v.value.re.into(),
            v.value.im.into(),
            v.error.into(),
            json!(v.method).as_str().unwrap_or("").into(),
            r.map_or(f64::NAN, |r| r.re).into(),
            r.map_or(f64::NAN, |r| r.im).into(),
        ]);
        let reports = match bound_report(&problem, k, a, delta) {
            Ok(r) => json!(r),
            Err(e) => json!({ "skipped": e.to_string() }),
        };
        bounds.push(json!({ "kappa": kappa_json(k), "reports": reports }));
    }
    sink.table("m.csv", &table)?;
    sink.json("m_bounds.json", json!({ "problem": problem, "a": a, "delta": delta, "points": bounds }))?;
    Ok(Some(table))
}

pub fn amplitude(cfg: &RunConfig, sink: &mut Sink, tol: Option<f64>) -> Out {
    let problem = cfg.problem().map_err(CliError::Config)?;
    let a = cfg.amplitude.a.unwrap_or(default_reach(&problem));
    let d_alpha = cfg.amplitude.d_alpha.unwrap_or(1e-3);
    let f = a_march(&problem, a, d_alpha, tol)?;
    let refs = reference(&problem).ok();
    let mut table = Table::new(&["alpha", "A", "reference"]);
    for (alpha, v) in f.alphas().zip(&f.values) {
        let r = match (refs, alpha > 0.0) {
            (Some(r), true) => r.a(alpha),
            _ => f64::NAN,
        };
        table.push(vec![alpha.into(), (*v).into(), r.into()]);
    }
    sink.table("amplitude.csv", &table)?;
    sink.json("amplitude.json", f.sidecar_json())?;
    sink.json("amplitude_bounds.json", json!({ "reports": amplitude_bound_report(&f, &problem) }))?;
    Ok(Some(table))
}

pub fn laplace(cfg: &RunConfig, sink: &mut Sink, tol: Option<f64>) -> Out {
    let problem = cfg.problem().map_err(CliError::Config)?;
    let a = cfg.laplace.a.unwrap_or(default_reach(&problem));
    let f = a_march(&problem, a, cfg.laplace.d_alpha.unwrap_or(1e-3), tol)?;
    let kappas = cfg.laplace.kappas();
    let rows = kappas
        .par_iter()
        .map(|&k| Ok((m_principal(&problem, k)?, m_from_amplitude(&f, k)?)))
        .collect::<Result<Vec<_>, halfline::Error>>()?;
    let mut table = Table::new(&["kappa_re", "kappa_im", "m_re", "m_im", "from_amplitude_re", "from_amplitude_im", "residual", "bound", "verdict"]);
    let mut reports = Vec::new();
    for (&k, (m, from_a)) in kappas.iter().zip(&rows) {
        // marching error enters through ∫ e^{−2α Re κ} ≤ 1/(2 Re κ)
        let numerical = 2.0 * f.error_estimate.unwrap_or(0.0) / (2.0 * k.re) + m.error;
        let report = VerificationReport::le(format!("kappa={k}"), (m.value - from_a.value).norm(), from_a.error + numerical)
            .with_note(format!("tail bound {:e} plus numerical error {numerical:e}", from_a.error));
        table.push(vec![
            k.re.into(),
            k.im.into(),
            m.value.re.into(),
            m.value.im.into(),
            from_a.value.re.into(),
            from_a.value.im.into(),
            report.residual.into(),
            report.bound.into(),
            json!(report.verdict).as_str().unwrap_or("").into(),
        ]);
        reports.push(report);
    }
    sink.table("laplace.csv", &table)?;
    sink.json("laplace.json", json!({ "a": a, "error_estimate": f.error_estimate, "reports": reports }))?;
    Ok(Some(table))
}

pub fn invert(cfg: &RunConfig, sink: &mut Sink) -> Out {
    let problem = cfg.problem().map_err(CliError::Config)?;
    let width = cfg.invert.width.unwrap_or(0.4);
    let centers = if cfg.invert.centers.is_empty() { vec![0.5, 1.0, 1.5] } else { cfg.invert.centers.clone() };
    let refs = reference(&problem).ok();
    let values = centers
        .par_iter()
        .map(|&c| a_from_m_smeared(&problem, &TestFunction::Bump { center: c, width }, cfg.invert.kappa0))
        .collect::<Result<Vec<_>, _>>()?;
    let mut table = Table::new(&["center", "width", "value", "reference", "kappa0", "y_max", "truncation_estimate"]);
    for (&c, v) in centers.iter().zip(&values) {
        let f = TestFunction::Bump { center: c, width };
        let want = refs.map_or(f64::NAN, |r| {
            gl_composite(|x| f.eval(x) * r.a(x), (c - 0.5 * width).max(0.0), c + 0.5 * width, 32)
        });
        table.push(vec![c.into(), width.into(), v.value.into(), want.into(), v.kappa0.into(), v.y_max.into(), v.truncation_estimate.into()]);
    }
    sink.table("invert.csv", &table)?;
    Ok(Some(table))
}

pub fn rho(cfg: &RunConfig, sink: &mut Sink) -> Out {
    let problem = cfg.problem().map_err(CliError::Config)?;
    let (rho, source, info) = measure(cfg, &problem)?;
    let mut body = rho.to_json();
    body["source"] = json!(source);
    if let Some(info) = info {
        body["finite_difference"] = info;
    }
    sink.json("rho.json", body)?;
    let mut table = Table::new(&["lambda", "density", "mass_below"]);
    let lambdas = if cfg.rho.lambdas.is_empty() { vec![1.0, 4.0, 16.0, 64.0] } else { cfg.rho.lambdas.clone() };
    for l in lambdas {
        let d = rho.density.as_ref().map_or(0.0, |d| if l > d.start() { d.eval(l) } else { 0.0 });
        table.push(vec![l.into(), d.into(), rho.mass(f64::NEG_INFINITY, l).into()]);
    }
    sink.table("rho.csv", &table)?;
    Ok(Some(table))
}

pub fn bridge(cfg: &RunConfig, sink: &mut Sink, tol: Option<f64>) -> Out {
    let problem = cfg.problem().map_err(CliError::Config)?;
    let (rho, source, _) = measure(cfg, &problem)?;
    let refs = reference(&problem).ok();
    let alphas = if cfg.bridge.alphas.is_empty() { vec![0.25, 0.5, 1.0] } else { cfg.bridge.alphas.clone() };
    let values = alphas
        .par_iter()
        .map(|&a| a_from_rho_abelian(&rho, a, cfg.bridge.eps.as_deref()))
        .collect::<Result<Vec<_>, _>>()?;
    let mut table = Table::new(&["alpha", "A", "error_estimate", "reference"]);
    for (&a, v) in alphas.iter().zip(&values) {
        table.push(vec![a.into(), v.value.into(), v.error_estimate.into(), refs.map_or(f64::NAN, |r| r.a(a)).into()]);
    }
    let mut smeared = Vec::new();
    if !cfg.bridge.smeared.is_empty() {
        let a = cfg.bridge.a.unwrap_or(default_reach(&problem));
        let f = amplitude_for(&problem, refs.as_ref(), a, cfg.bridge.d_alpha.unwrap_or(1e-3), tol)?;
        for t in &cfg.bridge.smeared {
            smeared.push(json!({ "test_function": t, "residual": smeared_identity_residual(&rho, &f, t)? }));
        }
    }
    sink.table("bridge.csv", &table)?;
    sink.json("bridge.json", json!({ "measure": source, "abelian": values, "smeared_identity": smeared }))?;
    Ok(Some(table))
}

pub fn scatter(cfg: &RunConfig, sink: &mut Sink) -> Out {
    let problem = cfg.problem().map_err(CliError::Config)?;
    let data = scattering_data(&problem)?;
    let refs = reference(&problem).ok();
    let alphas = if cfg.scatter.alphas.is_empty() { vec![0.25, 0.5, 1.0] } else { cfg.scatter.alphas.clone() };
    let values = alphas
        .par_iter()
        .map(|&a| a_from_scattering(&data, a, cfg.scatter.eps.as_deref()))
        .collect::<Result<Vec<_>, _>>()?;
    let mut table = Table::new(&["alpha", "A", "error_estimate", "direct", "reference"]);
    for (&a, v) in alphas.iter().zip(&values) {
        table.push(vec![
            a.into(),
            v.abelian.value.into(),
            v.abelian.error_estimate.into(),
            v.direct.unwrap_or(f64::NAN).into(),
            refs.map_or(f64::NAN, |r| r.a(a)).into(),
        ]);
    }
    sink.table("scatter.csv", &table)?;
    sink.json(
        "scatter.json",
        json!({ "bound_states": data.bound_states, "q_vanishes_at_zero": data.q_vanishes_at_zero, "amplitudes": values }),
    )?;
    Ok(Some(table))
}

pub fn hbc(cfg: &RunConfig, sink: &mut Sink) -> Out {
    let problem = cfg.problem().map_err(CliError::Config)?;
    let h = HValue::new(cfg.hbc.h.unwrap_or(0.0))?;
    let free = h_reference(h);
    let kappas = cfg.hbc.kappas();
    let values = kappas.par_iter().map(|&k| m_h(&problem, h, k)).collect::<Result<Vec<_>, _>>()?;
    let mut table = Table::new(&["kappa_re", "kappa_im", "m_h_re", "m_h_im", "free_re", "free_im"]);
    for (&k, v) in kappas.iter().zip(&values) {
        let f = free.m0(k);
        table.push(vec![k.re.into(), k.im.into(), v.value.re.into(), v.value.im.into(), f.re.into(), f.im.into()]);
    }
    sink.table("hbc_m.csv", &table)?;

    let mut extra = json!({ "h": h.h0, "tauberian_ratio_1e6": free.tauberian_ratio(1e6) });
    if !cfg.hbc.centers.is_empty() {
        let width = cfg.hbc.width.unwrap_or(0.4);
        let got = b_h_extract(&problem, h, &cfg.hbc.centers, width)?;
        // closed form only for constant q on the half-line with h = 0
        let q0 = match (&problem.potential, problem.b, h.h0) {
            (Potential::Constant { q0 }, None, 0.0) => Some(*q0),
            _ => None,
        };
        let mut bh = Table::new(&["center", "width", "value", "reference"]);
        for (&c, v) in cfg.hbc.centers.iter().zip(&got) {
            let f = TestFunction::Bump { center: c, width };
            let want = q0.map_or(f64::NAN, |q0| gl_composite(|a| f.eval(a) * constant_b_h(q0, a), c - 0.5 * width, c + 0.5 * width, 32));
            bh.push(vec![c.into(), width.into(), v.value.into(), want.into()]);
        }
        sink.table("hbc_b.csv", &bh)?;
    }
    if cfg.hbc.fit {
        let q_at_zero = problem.potential.eval(0.0);
        let fit = free.fit(|k| Ok(m_h(&problem, h, k)?.value), q_at_zero)?;
        extra["fit"] = json!(fit);
    }
    sink.json("hbc.json", extra)?;
    Ok(Some(table))
}

pub fn probe(cfg: &RunConfig, sink: &mut Sink) -> Out {
    let problem = cfg.problem().map_err(CliError::Config)?;
    let (rho, source, _) = measure(cfg, &problem)?;
    let alpha = cfg.probe.alpha.unwrap_or(0.3);
    let grid = if cfg.probe.r_grid.is_empty() {
        (0..=24).map(|i| 10f64.powf(1.0 + 3.0 * i as f64 / 24.0)).collect()
    } else {
        cfg.probe.r_grid.clone()
    };
    let mut trace = convergence_probe(&rho, alpha, &grid)?;
    if let Some(d) = cfg.probe.del_rio {
        trace.del_rio = Some(del_rio_trace(d.b, d.a0, d.n_max));
    }
    let mut table = Table::new(&["R", "partial"]);
    for &(r, v) in &trace.partial {
        table.push(vec![r.into(), v.into()]);
    }
    sink.table("probe.csv", &table)?;
    sink.json("probe.json", json!({ "measure": source, "alpha": alpha, "verdict": trace.verdict, "del_rio": trace.del_rio }))?;
    Ok(Some(table))
}

/// Runs the acceptance criteria; the report is produced even when some fail.
pub fn verify(cfg: &RunConfig, sink: &mut Sink) -> Result<bool, CliError> {
    let ids: Vec<u32> = if cfg.verify.criteria.is_empty() {
        acceptance::CRITERIA.iter().map(|c| c.0).collect()
    } else {
        cfg.verify.criteria.clone()
    };
    if let Some(bad) = ids.iter().find(|&&i| !(1..=12).contains(&i)) {
        return Err(CliError::Config(format!("no acceptance criterion {bad}")));
    }
    let mut entries = Vec::new();
    let mut all = true;
    for id in ids {
        let entry = match acceptance::run(id) {
            Ok(c) => {
                println!("{}", c.line());
                all &= c.passed;
                json!({ "id": c.id, "title": c.title, "passed": c.passed, "checks": c.checks })
            }
            Err(e) => {
                println!("criterion {id:2}: FAIL {e}");
                all = false;
                let title = acceptance::CRITERIA.iter().find(|c| c.0 == id).map_or("", |c| c.1);
                json!({ "id": id, "title": title, "passed": false, "error": e })
            }
        };
        entries.push(entry);
    }
    sink.json("verify.json", json!({ "passed": all, "criteria": entries }))?;
    Ok(all)
}
