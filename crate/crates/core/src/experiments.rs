//! End-to-end pipelines: generate data, compute references, train, evaluate
//! and assemble a [`Report`] for every reproducible table and figure.

use std::time::Instant;

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::evaluator::{observed_order, speedup_extrapolated, speedup_refinement, Cell, Refinement, Report, SampleErrors, Table};
use crate::finite_volume::{euler_courant, euler_update_unchecked, scalar_update, Burgers, EulerGas, Primitive, SoundSpeed, WeightLayout};
use crate::grid::{block_average, Boundary, Layout, ScalarField, SpaceGrid, SystemField};
use crate::linear_pde::{adv_step, heat_step, AdvLevelParams, HeatLevelParams, NamedScheme};
use crate::ode_bdf::{
    exact_oscillator, loss_logistic, loss_oscillator, logistic_sample_loss, oscillator_levels,
    oscillator_sample_loss, Oscillator, OSCILLATOR_DT,
};
use crate::random_data::{sample_dataset, Dataset, Family, KLData, RoughData, SodData};
use crate::reference::{advection_reference, burgers_fine, euler_fine, euler_initial, ssprk2_solve, HeatPropagator, ReferenceConfig};
use crate::trainer::{
    minibatch_sgd, penalized, steepest_descent, train_sequential, ParamVector, SampleLoss, SequentialResult, TrainConfig,
    TrainResult,
};

/// Identifier and description of one reproducible experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExperimentInfo {
    pub id: &'static str,
    pub reproduces: &'static str,
}

/// All experiments, sorted by id.
pub const EXPERIMENTS: [ExperimentInfo; 14] = [
    ExperimentInfo { id: "fig1", reproduces: "Figure 1: E2(g) scan of the generalized BDF for the decay ODE" },
    ExperimentInfo { id: "fig3", reproduces: "Figure 3: oscillator trajectories (exact, SSP-RK2, BDF2, trained)" },
    ExperimentInfo { id: "fig5", reproduces: "Figure 5: heat equation solutions for one smooth test sample" },
    ExperimentInfo { id: "fig6", reproduces: "Figure 6: advection solutions for one test sample" },
    ExperimentInfo { id: "fig8", reproduces: "Figure 8: Burgers solutions for one rough test sample" },
    ExperimentInfo { id: "fig9", reproduces: "Figure 9: Sod shock tube with the trained Rusanov scheme" },
    ExperimentInfo { id: "table1", reproduces: "Table 1: trained BDF on the linear oscillator" },
    ExperimentInfo { id: "table2", reproduces: "Table 2: trained BDF on the logistic ODE" },
    ExperimentInfo { id: "table3", reproduces: "Table 3: trained heat scheme, smooth data" },
    ExperimentInfo { id: "table4", reproduces: "Table 4: trained heat scheme, rough data" },
    ExperimentInfo { id: "table5", reproduces: "Table 5: trained advection scheme" },
    ExperimentInfo { id: "table6", reproduces: "Table 6: trained Rusanov scheme for Burgers, smooth data" },
    ExperimentInfo { id: "table7", reproduces: "Table 7: trained Rusanov scheme for Burgers, rough data" },
    ExperimentInfo { id: "table8", reproduces: "Table 8: trained Rusanov scheme for the Euler equations" },
];

pub fn list_experiments() -> &'static [ExperimentInfo] {
    &EXPERIMENTS
}

/// Why a run did not produce a report.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("unknown experiment '{0}'")]
    UnknownExperiment(String),
    #[error("configuration error: {0}")]
    Config(Error),
    #[error("experiment failed: {0}")]
    Failed(Error),
}

/// Typed key-value settings; every key has a default that fixes its type.
#[derive(Clone, Debug, PartialEq)]
pub struct Settings {
    values: Map<String, Value>,
}

impl Settings {
    fn new(defaults: Value) -> Self {
        match defaults {
            Value::Object(values) => Settings { values },
            _ => unreachable!("settings defaults are objects"),
        }
    }

    pub fn keys(&self) -> impl Iterator<Item = &String> {
        self.values.keys()
    }

    pub fn to_json(&self) -> Value {
        Value::Object(self.values.clone())
    }

    /// Overrides `key` from command-line text, checked against the default's type.
    pub fn set(&mut self, key: &str, raw: &str) -> Result<()> {
        let current = self.values.get(key).ok_or_else(|| Error::InvalidArgument(format!("unknown setting '{key}'")))?;
        let bad = || Error::InvalidArgument(format!("setting '{key}' expects {}, got '{raw}'", type_name(current)));
        let raw = raw.trim();
        let value = match current {
            Value::Bool(_) => Value::Bool(raw.parse().map_err(|_| bad())?),
            Value::Number(n) if n.is_u64() => json!(raw.parse::<u64>().map_err(|_| bad())?),
            Value::Number(_) => json!(parse_f64(raw).ok_or_else(bad)?),
            Value::String(_) => Value::String(raw.to_string()),
            Value::Array(items) => {
                let ints = items.iter().all(|v| v.is_u64());
                let parts: Vec<&str> = raw.trim_matches(|c| c == '[' || c == ']').split(',').map(str::trim).collect();
                let parsed: Option<Vec<Value>> = parts
                    .iter()
                    .map(|p| if ints { p.parse::<u64>().ok().map(|v| json!(v)) } else { parse_f64(p).map(|v| json!(v)) })
                    .collect();
                match parsed {
                    Some(v) if !v.is_empty() => Value::Array(v),
                    _ => return Err(bad()),
                }
            }
            _ => return Err(bad()),
        };
        self.values.insert(key.to_string(), value);
        Ok(())
    }

    /// Overrides `key` from a JSON value of the same type.
    pub fn set_value(&mut self, key: &str, value: &Value) -> Result<()> {
        let text = match value {
            Value::String(s) => s.clone(),
            Value::Array(items) => items.iter().map(Value::to_string).collect::<Vec<_>>().join(","),
            other => other.to_string(),
        };
        self.set(key, &text)
    }

    fn f64(&self, key: &str) -> f64 {
        self.values[key].as_f64().expect("numeric setting")
    }

    fn usize(&self, key: &str) -> usize {
        self.values[key].as_u64().expect("integer setting") as usize
    }

    fn str(&self, key: &str) -> &str {
        self.values[key].as_str().expect("string setting")
    }

    fn f64_list(&self, key: &str) -> Vec<f64> {
        self.values[key].as_array().expect("list setting").iter().filter_map(Value::as_f64).collect()
    }

    fn usize_list(&self, key: &str) -> Vec<usize> {
        self.values[key].as_array().expect("list setting").iter().filter_map(|v| v.as_u64().map(|x| x as usize)).collect()
    }

    fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            learning_rate: self.f64("learning_rate"),
            max_iters: self.usize("max_iters"),
            grad_tol: self.f64("grad_tol"),
            batch_size: self.usize("batch_size"),
            seed,
            sequential_in_time: self.values.get("sequential_in_time").and_then(Value::as_bool).unwrap_or(false),
            fd_step: self.f64("fd_step"),
            lr_growth: self.f64("lr_growth"),
            bound_patience: self.usize("bound_patience"),
        }
    }

    fn reference(&self) -> ReferenceConfig {
        ReferenceConfig { fine_n: self.usize("fine_n"), cfl_safety: self.f64("cfl_safety") }
    }
}

fn parse_f64(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::Bool(_) => "a boolean",
        Value::Number(n) if n.is_u64() => "a non-negative integer",
        Value::Number(_) => "a number",
        Value::String(_) => "a string",
        Value::Array(_) => "a comma-separated list",
        _ => "a value",
    }
}

fn merge(mut base: Value, extra: Value) -> Value {
    if let (Value::Object(b), Value::Object(e)) = (&mut base, extra) {
        b.extend(e);
    }
    base
}

fn optimizer(max_iters: u64, batch_size: u64, grad_tol: f64) -> Value {
    json!({
        "learning_rate": 0.1,
        "max_iters": max_iters,
        "grad_tol": grad_tol,
        "batch_size": batch_size,
        "fd_step": 1e-6,
        "lr_growth": 1.5,
        "bound_patience": 10u64,
    })
}

/// Default settings of experiment `id`, or `None` for an unknown id.
pub fn default_settings(id: &str) -> Option<Settings> {
    let oscillator = merge(
        json!({"c_values": [1.0, 10.0, 100.0], "train_size": 10u64, "test_size": 50u64}),
        optimizer(2000, 1, 1e-12),
    );
    let heat = merge(
        json!({"c_values": [0.1, 1.0, 10.0], "train_size": 20u64, "test_size": 100u64, "cells": 10u64, "dt": 0.05,
               "fine_n": 1000u64, "cfl_safety": 0.9}),
        optimizer(300, 4, 1e-12),
    );
    let advection = merge(
        json!({"c_values": [0.5, 2.0], "train_size": 20u64, "test_size": 100u64, "cells": 10u64, "dt": 0.5,
               "fine_n": 1000u64, "cfl_safety": 0.9}),
        optimizer(300, 4, 1e-12),
    );
    let burgers = merge(
        json!({"train_size": 20u64, "test_size": 100u64, "cells": 10u64, "dt": 0.05, "steps": 2u64, "window": 3u64,
               "fine_n": 1000u64, "cfl_safety": 0.9, "refinements": [10u64, 20u64, 40u64, 50u64, 100u64, 200u64],
               "sequential_in_time": true}),
        optimizer(200, 4, 1e-10),
    );
    let euler = merge(
        json!({"train_size": 50u64, "test_size": 1000u64, "cells": 20u64, "dt": 0.03, "steps": 5u64, "window": 3u64,
               "fine_n": 960u64, "cfl_safety": 0.9, "gamma": 1.4, "sound_speed_convention": "standard",
               "order_resolutions": [20u64, 40u64, 80u64, 160u64], "contact_halfwidth": 0.1,
               "sequential_in_time": true}),
        optimizer(100, 5, 1e-10),
    );
    let v = match id {
        "fig1" => json!({"c_values": [1.0, 5.0], "dt": 0.5, "u0": 1.0, "g_min": 0.0, "g_max": 1.0, "g_step": 0.01}),
        "table1" => oscillator,
        "fig3" => merge(oscillator, json!({"c_values": [100.0], "rk_steps": 1000u64})),
        "table2" => merge(
            json!({"c_values": [0.2, 1.0, 5.0], "train_size": 10u64, "test_size": 50u64}),
            optimizer(2000, 1, 1e-12),
        ),
        "table3" | "table4" => heat,
        "fig5" => merge(heat, json!({"c_values": [1.0], "sample": 0u64})),
        "table5" => advection,
        "fig6" => merge(advection, json!({"sample": 0u64})),
        "table6" | "table7" => burgers,
        "fig8" => merge(burgers, json!({"sample": 0u64})),
        "table8" => euler,
        "fig9" => merge(euler, json!({"test_size": 1u64})),
        _ => return None,
    };
    Some(Settings::new(v))
}

/// Runs experiment `id` with command-line overrides applied on top of the defaults.
pub fn run_experiment(id: &str, seed: u64, overrides: &[(String, String)]) -> std::result::Result<Report, RunError> {
    let mut settings = default_settings(id).ok_or_else(|| RunError::UnknownExperiment(id.to_string()))?;
    for (k, v) in overrides {
        settings.set(k, v).map_err(RunError::Config)?;
    }
    run_with_settings(id, seed, &settings)
}

pub fn run_with_settings(id: &str, seed: u64, s: &Settings) -> std::result::Result<Report, RunError> {
    validate(id, s).map_err(RunError::Config)?;
    let start = Instant::now();
    let mut report = Report::new(id, seed, s.to_json());
    let r = match id {
        "fig1" => fig1(s, &mut report),
        "table1" => table1(s, seed, &mut report),
        "fig3" => fig3(s, seed, &mut report),
        "table2" => table2(s, seed, &mut report),
        "table3" => heat_table(s, seed, false, &mut report),
        "table4" => heat_table(s, seed, true, &mut report),
        "fig5" => fig5(s, seed, &mut report),
        "table5" => table5(s, seed, &mut report),
        "fig6" => fig6(s, seed, &mut report),
        "table6" => burgers_table(s, seed, false, &mut report),
        "table7" => burgers_table(s, seed, true, &mut report),
        "fig8" => fig8(s, seed, &mut report),
        "table8" => table8(s, seed, &mut report),
        "fig9" => fig9(s, seed, &mut report),
        _ => return Err(RunError::UnknownExperiment(id.to_string())),
    };
    r.map_err(RunError::Failed)?;
    report.timing.insert("total_seconds".into(), start.elapsed().as_secs_f64());
    Ok(report)
}

fn validate(id: &str, s: &Settings) -> Result<()> {
    let positive = |k: &str| {
        if s.values.contains_key(k) && !(s.f64(k) > 0.0) {
            return Err(Error::InvalidArgument(format!("setting '{k}' must be positive")));
        }
        Ok(())
    };
    for k in ["dt", "learning_rate", "fd_step", "g_step", "gamma", "cfl_safety"] {
        positive(k)?;
    }
    for k in ["train_size", "test_size", "batch_size", "cells", "steps", "window", "fine_n", "rk_steps"] {
        if s.values.contains_key(k) && s.usize(k) == 0 {
            return Err(Error::InvalidArgument(format!("setting '{k}' must be at least 1")));
        }
    }
    if s.values.contains_key("batch_size") && s.usize("batch_size") > s.usize("train_size") && id != "table1" && id != "table2" && id != "fig3" {
        return Err(Error::InvalidArgument("batch_size exceeds train_size".into()));
    }
    if s.values.contains_key("sound_speed_convention") {
        sound_speed(s)?;
    }
    if s.values.contains_key("sample") && s.usize("sample") >= s.usize("test_size") {
        return Err(Error::InvalidArgument("sample index outside the test set".into()));
    }
    Ok(())
}

fn sound_speed(s: &Settings) -> Result<SoundSpeed> {
    match s.str("sound_speed_convention") {
        "standard" => Ok(SoundSpeed::Standard),
        "printed" => Ok(SoundSpeed::Printed),
        other => Err(Error::InvalidArgument(format!("sound_speed_convention must be 'standard' or 'printed', got '{other}'"))),
    }
}

fn labels(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|k| format!("{prefix}{k}")).collect()
}

fn training_json(r: &TrainResult) -> Value {
    json!({
        "labels": r.theta_star.labels,
        "values": r.theta_star.values,
        "initial_loss": r.initial_loss,
        "final_loss": r.final_loss(),
        "termination": r.termination,
        "epochs": r.loss_history.len() - 1,
        "loss_history": r.loss_history,
    })
}

fn termination_name(r: &TrainResult) -> String {
    format!("{:?}", r.termination)
}

/// Closure-backed per-sample loss.
struct PerSample<F: Fn(&[f64], usize) -> f64> {
    n: usize,
    f: F,
}

impl<F: Fn(&[f64], usize) -> f64> SampleLoss for PerSample<F> {
    fn n_samples(&self) -> usize {
        self.n
    }

    fn sample_loss(&self, theta: &[f64], i: usize) -> f64 {
        (self.f)(theta, i)
    }
}

fn first_coords(d: &[Vec<f64>]) -> Vec<f64> {
    d.iter().map(|r| r[0]).collect()
}

// ---------------------------------------------------------------- ODEs

fn fig1(s: &Settings, report: &mut Report) -> Result<()> {
    let (dt, u0) = (s.f64("dt"), s.f64("u0"));
    let (lo, hi, step) = (s.f64("g_min"), s.f64("g_max"), s.f64("g_step"));
    let count = ((hi - lo) / step + 1e-9).floor() as usize;
    let grid: Vec<f64> = (0..=count).map(|i| lo + i as f64 * step).map(|g| (g / step).round() * step).collect();
    report.table = Table::new("fig1", &["c", "g", "e2"]);
    let mut summary = Table::new("argmin", &["c", "g_star", "error_ratio"]);
    for c in s.f64_list("c_values") {
        let scan = crate::ode_bdf::loss_scan_decay(c, dt, u0, &grid)?;
        for &(g, e2) in &scan {
            report.table.push(vec![c.into(), g.into(), e2.into()])?;
        }
        let &(g_star, e_star) = scan.iter().min_by(|a, b| a.1.total_cmp(&b.1)).expect("non-empty scan");
        let e_std = crate::ode_bdf::decay_error(c, dt, u0, 0.5)?;
        let ratio = e_std.abs() / e_star.sqrt();
        summary.push(vec![c.into(), g_star.into(), ratio.into()])?;
        report.gains.insert(format!("c={c}"), ratio);
    }
    report.figures.push(summary);
    Ok(())
}

fn ode_dataset(s: &Settings, family: Family, seed: u64) -> Result<Dataset> {
    sample_dataset(family, s.usize("train_size"), s.usize("test_size"), seed, &family.default_ranges())
}

/// Trained `(g2, g3)` for the oscillator with speed `c`.
fn train_oscillator(s: &Settings, seed: u64, data: &Dataset, c: f64) -> Result<TrainResult> {
    let train = first_coords(&data.train);
    let theta0 = ParamVector::new(vec![0.5, 0.5], vec!["g_2".into(), "g_3".into()])?;
    let loss = |x: &[f64]| penalized(loss_oscillator(x[0], x[1], &train, c));
    steepest_descent(&loss, &theta0, &s.train_config(seed))
}

fn table1(s: &Settings, seed: u64, report: &mut Report) -> Result<()> {
    let data = ode_dataset(s, Family::Oscillator, seed)?;
    let test = first_coords(&data.test);
    report.table = Table::new("table1", &["c", "g_2", "g_3", "gain", "termination"]);
    for c in s.f64_list("c_values") {
        let t0 = Instant::now();
        let r = train_oscillator(s, seed, &data, c)?;
        let (g2, g3) = (r.theta_star.values[0], r.theta_star.values[1]);
        let errs = |a: f64, b: f64| -> Result<SampleErrors> {
            Ok(SampleErrors::new(test.iter().map(|&u| oscillator_sample_loss(a, b, u, c)).collect::<Result<_>>()?))
        };
        let g = report.add_comparison(&format!("c={c}"), (&format!("bdf2 c={c}"), errs(0.5, 0.5)?), (&format!("trained c={c}"), errs(g2, g3)?));
        report.table.push(vec![c.into(), g2.into(), g3.into(), g.into(), termination_name(&r).into()])?;
        report.training.insert(format!("c={c}"), training_json(&r));
        report.timing.insert(format!("c={c}"), t0.elapsed().as_secs_f64());
    }
    Ok(())
}

fn fig3(s: &Settings, seed: u64, report: &mut Report) -> Result<()> {
    let data = ode_dataset(s, Family::Oscillator, seed)?;
    let c = s.f64_list("c_values")[0];
    let r = train_oscillator(s, seed, &data, c)?;
    let u0 = data.test[0][0];
    let (g2, g3) = (r.theta_star.values[0], r.theta_star.values[1]);
    report.table = Table::new("fig3", &["method", "t", "u", "v"]);
    let n_rk = s.usize("rk_steps");
    let dt_rk = 3.0 * OSCILLATOR_DT / n_rk as f64;
    for (k, st) in ssprk2_solve(&Oscillator { c }, &[u0, 0.0], dt_rk, n_rk).iter().enumerate() {
        let t = k as f64 * dt_rk;
        let (ue, ve) = exact_oscillator(u0, c, t);
        report.table.push(vec!["exact".into(), t.into(), ue.into(), ve.into()])?;
        report.table.push(vec!["ssprk2".into(), t.into(), st[0].into(), st[1].into()])?;
    }
    for (name, a, b) in [("bdf2", 0.5, 0.5), ("trained", g2, g3)] {
        let (e1u, e1v) = exact_oscillator(u0, c, OSCILLATOR_DT);
        let lv = oscillator_levels(u0, c, a, b)?;
        let pts = [[u0, 0.0], [e1u, e1v], lv[0], lv[1]];
        for (k, p) in pts.iter().enumerate() {
            report.table.push(vec![name.into(), (k as f64 * OSCILLATOR_DT).into(), p[0].into(), p[1].into()])?;
        }
    }
    report.training.insert(format!("c={c}"), training_json(&r));
    Ok(())
}

fn table2(s: &Settings, seed: u64, report: &mut Report) -> Result<()> {
    let data = ode_dataset(s, Family::Logistic, seed)?;
    let (train, test) = (first_coords(&data.train), first_coords(&data.test));
    report.table = Table::new("table2", &["c", "g_2", "gain", "unsolvable_test_samples", "termination"]);
    for c in s.f64_list("c_values") {
        let theta0 = ParamVector::new(vec![0.5], vec!["g_2".into()])?;
        let loss = |x: &[f64]| penalized(loss_logistic(x[0], &train, c));
        let r = steepest_descent(&loss, &theta0, &s.train_config(seed))?;
        let g2 = r.theta_star.values[0];
        // Samples where either implicit equation has no real root are left out of both means.
        let (mut std, mut dl, mut skipped) = (Vec::new(), Vec::new(), 0usize);
        for &u in &test {
            match (logistic_sample_loss(0.5, u, c), logistic_sample_loss(g2, u, c)) {
                (Ok(a), Ok(b)) => {
                    std.push(a);
                    dl.push(b);
                }
                (Err(Error::NewtonFailure { .. }), _) | (_, Err(Error::NewtonFailure { .. })) => skipped += 1,
                (Err(e), _) | (_, Err(e)) => return Err(e),
            }
        }
        if std.is_empty() {
            return Err(Error::InvalidArgument(format!("no solvable test samples at c={c}")));
        }
        let g = report.add_comparison(
            &format!("c={c}"),
            (&format!("bdf2 c={c}"), SampleErrors::new(std)),
            (&format!("trained c={c}"), SampleErrors::new(dl)),
        );
        report.table.push(vec![c.into(), g2.into(), g.into(), skipped.into(), termination_name(&r).into()])?;
        report.training.insert(format!("c={c}"), training_json(&r));
    }
    Ok(())
}

// ---------------------------------------------------------------- linear PDEs

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Linear {
    Heat,
    Advection,
}

struct LinearProblem {
    eq: Linear,
    c: f64,
    dt: f64,
    grid: SpaceGrid,
    train: Vec<(ScalarField, Vec<f64>)>,
    test: Vec<(ScalarField, Vec<f64>)>,
}

impl LinearProblem {
    fn step(&self, u: &ScalarField, theta: &[f64]) -> Result<ScalarField> {
        match self.eq {
            Linear::Heat => heat_step(u, &HeatLevelParams::from_slice(theta), self.c, self.dt),
            Linear::Advection => adv_step(u, &AdvLevelParams::from_slice(theta), self.c, self.dt),
        }
    }

    fn named(&self, s: NamedScheme) -> Vec<f64> {
        match self.eq {
            Linear::Heat => s.heat().to_vec(),
            Linear::Advection => s.advection().to_vec(),
        }
    }

    fn sample_error(&self, sample: &(ScalarField, Vec<f64>), theta: &[f64]) -> Result<f64> {
        let out = self.step(&sample.0, theta)?;
        let dx = self.grid.spacing();
        Ok(0.5 * dx * out.values.iter().zip(&sample.1).map(|(a, b)| (a - b).powi(2)).sum::<f64>())
    }

    fn test_errors(&self, theta: &[f64]) -> Result<SampleErrors> {
        Ok(SampleErrors::new(self.test.iter().map(|t| self.sample_error(t, theta)).collect::<Result<_>>()?))
    }

    fn train(&self, s: &Settings, seed: u64) -> Result<TrainResult> {
        let start = self.named(NamedScheme::S2);
        let names: Vec<String> = match self.eq {
            Linear::Heat => vec!["g^1".into(), "b^1_{-2}".into(), "b^1_{-1}".into()],
            Linear::Advection => vec!["g^1".into(), "b^1_{-1}".into()],
        };
        let theta0 = ParamVector::new(start, names)?;
        let loss = PerSample { n: self.train.len(), f: |x: &[f64], i: usize| penalized(self.sample_error(&self.train[i], x)) };
        minibatch_sgd(&loss, &theta0, &s.train_config(seed))
    }
}

fn linear_problem(s: &Settings, seed: u64, eq: Linear, rough: bool, c: f64) -> Result<LinearProblem> {
    let cells = s.usize("cells");
    let dt = s.f64("dt");
    let cfg = s.reference();
    let family = if rough { Family::Rough } else { Family::KarhunenLoeve };
    let data = sample_dataset(family, s.usize("train_size"), s.usize("test_size"), seed, &family.default_ranges())?;
    let boundary = if eq == Linear::Heat { Boundary::DirichletZero } else { Boundary::Periodic };
    let grid = SpaceGrid::unit(cells, Layout::NodeCentered, boundary)?;
    let propagator = if eq == Linear::Heat { Some(HeatPropagator::new(c, dt, &cfg, &grid)?) } else { None };
    let build = |recs: &[Vec<f64>]| -> Result<Vec<(ScalarField, Vec<f64>)>> {
        recs.iter()
            .map(|rec| {
                let u0 = initial_scalar(rec, rough)?;
                let reference = match &propagator {
                    Some(p) => p.apply_fn(&u0)?,
                    None => advection_reference(&u0, c, &[dt], &cfg, &grid)?.remove(0),
                };
                Ok((grid.sample(&u0), reference.values))
            })
            .collect()
    };
    Ok(LinearProblem { eq, c, dt, grid: grid.clone(), train: build(&data.train)?, test: build(&data.test)? })
}

/// Initial datum of a smooth (KL) or rough record.
fn initial_scalar(rec: &[f64], rough: bool) -> Result<Box<dyn Fn(f64) -> f64>> {
    if rough {
        let d = RoughData::from_record(rec)?;
        d.edges()?;
        Ok(Box::new(move |x| d.eval(x).expect("edges were validated")))
    } else {
        let d = KLData::from_record(rec)?;
        Ok(Box::new(move |x| d.eval(x)))
    }
}

fn heat_table(s: &Settings, seed: u64, rough: bool, report: &mut Report) -> Result<()> {
    let id = if rough { "table4" } else { "table3" };
    report.table = Table::new(
        id,
        &["c", "g^1", "b^1_{-2}", "b^1_{-1}", "gain_S1", "gain_S2", "gain_S3", "gain_S4", "termination"],
    );
    for c in s.f64_list("c_values") {
        let t0 = Instant::now();
        let p = linear_problem(s, seed, Linear::Heat, rough, c)?;
        let r = p.train(s, seed)?;
        let trained = p.test_errors(&r.theta_star.values)?;
        let mut row: Vec<Cell> = vec![c.into()];
        row.extend(r.theta_star.values.iter().map(|&v| Cell::from(v)));
        for named in NamedScheme::ALL {
            let std = p.test_errors(&p.named(named))?;
            let g = report.add_comparison(
                &format!("c={c} {}", named.label()),
                (&format!("{} c={c}", named.label()), std),
                (&format!("trained c={c}"), trained.clone()),
            );
            row.push(g.into());
        }
        row.push(termination_name(&r).into());
        report.table.push(row)?;
        report.training.insert(format!("c={c}"), training_json(&r));
        report.timing.insert(format!("c={c}"), t0.elapsed().as_secs_f64());
    }
    Ok(())
}

fn linear_figure(p: &LinearProblem, theta: &[f64], sample: usize, c: f64, table: &mut Table) -> Result<()> {
    let (u0, reference) = &p.test[sample];
    let mut outputs = Vec::new();
    for named in NamedScheme::ALL {
        outputs.push(p.step(u0, &p.named(named))?.values);
    }
    outputs.push(p.step(u0, theta)?.values);
    for j in 0..u0.values.len() {
        let mut row: Vec<Cell> = vec![c.into(), p.grid.x(j).into(), u0.values[j].into(), reference[j].into()];
        row.extend(outputs.iter().map(|o| Cell::from(o[j])));
        table.push(row)?;
    }
    Ok(())
}

const FIGURE_COLUMNS: [&str; 9] = ["c", "x", "u0", "reference", "S1", "S2", "S3", "S4", "trained"];

fn fig5(s: &Settings, seed: u64, report: &mut Report) -> Result<()> {
    report.table = Table::new("fig5", &FIGURE_COLUMNS);
    for c in s.f64_list("c_values") {
        let p = linear_problem(s, seed, Linear::Heat, false, c)?;
        let r = p.train(s, seed)?;
        linear_figure(&p, &r.theta_star.values, s.usize("sample"), c, &mut report.table)?;
        report.training.insert(format!("c={c}"), training_json(&r));
    }
    Ok(())
}

fn table5(s: &Settings, seed: u64, report: &mut Report) -> Result<()> {
    report.table = Table::new("table5", &["c", "g^1", "b^1_{-1}", "best_standard", "gain", "termination"]);
    for c in s.f64_list("c_values") {
        let t0 = Instant::now();
        let p = linear_problem(s, seed, Linear::Advection, false, c)?;
        let r = p.train(s, seed)?;
        let trained = p.test_errors(&r.theta_star.values)?;
        let mut best: Option<(NamedScheme, SampleErrors)> = None;
        for named in NamedScheme::ALL {
            let e = p.test_errors(&p.named(named))?;
            report.errors.insert(format!("{} c={c}", named.label()), e.clone());
            if best.as_ref().is_none_or(|(_, b)| e.mean < b.mean) {
                best = Some((named, e));
            }
        }
        let (named, e) = best.expect("four standard schemes");
        let g = report.add_comparison(&format!("c={c}"), (&format!("{} c={c}", named.label()), e), (&format!("trained c={c}"), trained));
        report.table.push(vec![
            c.into(),
            r.theta_star.values[0].into(),
            r.theta_star.values[1].into(),
            named.label().into(),
            g.into(),
            termination_name(&r).into(),
        ])?;
        report.training.insert(format!("c={c}"), training_json(&r));
        report.timing.insert(format!("c={c}"), t0.elapsed().as_secs_f64());
    }
    Ok(())
}

fn fig6(s: &Settings, seed: u64, report: &mut Report) -> Result<()> {
    report.table = Table::new("fig6", &FIGURE_COLUMNS);
    for c in s.f64_list("c_values") {
        let p = linear_problem(s, seed, Linear::Advection, false, c)?;
        let r = p.train(s, seed)?;
        linear_figure(&p, &r.theta_star.values, s.usize("sample"), c, &mut report.table)?;
        report.training.insert(format!("c={c}"), training_json(&r));
    }
    Ok(())
}

// ---------------------------------------------------------------- Burgers

struct BurgersProblem {
    cells: usize,
    dt: f64,
    steps: usize,
    layout: WeightLayout,
    fine_n: usize,
    /// Fine initial data and fine reference states at every level.
    train: Vec<FineRun>,
    test: Vec<FineRun>,
}

struct FineRun {
    initial: Vec<f64>,
    levels: Vec<Vec<f64>>,
}

impl BurgersProblem {
    fn new(s: &Settings, seed: u64, rough: bool) -> Result<Self> {
        let cells = s.usize("cells");
        let (dt, steps) = (s.f64("dt"), s.usize("steps"));
        let cfg = s.reference();
        let fine_n = cfg.fine_n;
        if !fine_n.is_multiple_of(cells) {
            return Err(Error::InvalidArgument(format!("fine_n {fine_n} is not a multiple of {cells} cells")));
        }
        let layout = WeightLayout::new(cells, s.usize("window"), Boundary::Periodic)?;
        let family = if rough { Family::Rough } else { Family::KarhunenLoeve };
        let data = sample_dataset(family, s.usize("train_size"), s.usize("test_size"), seed, &family.default_ranges())?;
        let fine = SpaceGrid::unit(fine_n, Layout::CellCentered, Boundary::Periodic)?;
        let times: Vec<f64> = (1..=steps).map(|n| n as f64 * dt).collect();
        let run = |rec: &Vec<f64>| -> Result<FineRun> {
            let u0 = fine.sample(initial_scalar(rec, rough)?);
            let levels = burgers_fine(&u0, &times, &cfg)?.into_iter().map(|f| f.values).collect();
            Ok(FineRun { initial: u0.values, levels })
        };
        let train = data.train.iter().map(run).collect::<Result<_>>()?;
        let test = data.test.iter().map(run).collect::<Result<_>>()?;
        Ok(BurgersProblem { cells, dt, steps, layout, fine_n, train, test })
    }

    fn groups(&self) -> usize {
        self.layout.n_groups()
    }

    fn coarse(&self, fine: &[f64], cells: usize) -> Vec<f64> {
        block_average(fine, 1, self.fine_n / cells)
    }

    fn step(&self, u: &[f64], pooled: &[f64]) -> Result<Vec<f64>> {
        let w = self.layout.expand_pooled(pooled)?;
        scalar_update(u, &w, &Burgers, self.dt * self.cells as f64, Boundary::Periodic)
    }

    fn level_error(&self, u: &[f64], run: &FineRun, level: usize, cells: usize) -> f64 {
        let r = self.coarse(&run.levels[level], cells);
        u.iter().zip(&r).map(|(a, b)| (a - b).abs()).sum::<f64>() / cells as f64
    }

    /// Coarse trajectory with `theta` holding one pooled vector per level.
    fn run(&self, run: &FineRun, theta: &[f64]) -> Result<Vec<Vec<f64>>> {
        let mut u = self.coarse(&run.initial, self.cells);
        let mut out = Vec::with_capacity(self.steps);
        for level in theta.chunks(self.groups()) {
            u = self.step(&u, level)?;
            out.push(u.clone());
        }
        Ok(out)
    }

    fn error(&self, run: &FineRun, theta: &[f64]) -> Result<f64> {
        let traj = self.run(run, theta)?;
        Ok(traj.iter().enumerate().map(|(n, u)| self.level_error(u, run, n, self.cells)).sum())
    }

    /// Standard Rusanov at `cells` cells with the coarse Courant ratio, measured like [`Self::error`].
    fn standard_error(&self, run: &FineRun, cells: usize) -> Result<f64> {
        if !self.fine_n.is_multiple_of(cells) || !cells.is_multiple_of(self.cells) {
            return Err(Error::InvalidArgument(format!("refinement {cells} does not nest")));
        }
        let sub = cells / self.cells;
        let w = vec![0.5; cells + 1];
        let mut u = self.coarse(&run.initial, cells);
        let mut total = 0.0;
        for n in 0..self.steps {
            for _ in 0..sub {
                u = scalar_update(&u, &w, &Burgers, self.dt * self.cells as f64, Boundary::Periodic)?;
            }
            total += self.level_error(&u, run, n, cells);
        }
        Ok(total)
    }

    fn test_errors(&self, theta: &[f64]) -> Result<SampleErrors> {
        Ok(SampleErrors::new(self.test.iter().map(|r| self.error(r, theta)).collect::<Result<_>>()?))
    }

    fn train(&self, s: &Settings, seed: u64) -> Result<SequentialResult> {
        let g = self.groups();
        let starts = (1..=self.steps)
            .map(|n| ParamVector::new(vec![0.5; g], labels(&format!("w^{n}_"), g)))
            .collect::<Result<Vec<_>>>()?;
        let cfg = s.train_config(seed);
        let run_levels = |level: usize, frozen: &[Vec<f64>]| -> Result<PerSample<_>> {
            let states = self
                .train
                .iter()
                .map(|r| {
                    let mut u = self.coarse(&r.initial, self.cells);
                    for p in frozen {
                        u = self.step(&u, p)?;
                    }
                    Ok(u)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(PerSample {
                n: self.train.len(),
                f: move |x: &[f64], i: usize| {
                    penalized(self.step(&states[i], x).map(|u| self.level_error(&u, &self.train[i], level, self.cells)))
                },
            })
        };
        if cfg.sequential_in_time {
            train_sequential(self.steps, &starts, run_levels, &cfg)
        } else {
            let all: Vec<f64> = vec![0.5; g * self.steps];
            let names: Vec<String> = starts.iter().flat_map(|p| p.labels.clone()).collect();
            let loss = PerSample { n: self.train.len(), f: |x: &[f64], i: usize| penalized(self.error(&self.train[i], x)) };
            let r = minibatch_sgd(&loss, &ParamVector::new(all, names)?, &cfg)?;
            Ok(SequentialResult { levels: vec![r] })
        }
    }

    fn full_train_loss(&self, theta: &[f64]) -> Result<f64> {
        self.train.iter().map(|r| self.error(r, theta)).sum()
    }
}

fn sequential_json(r: &SequentialResult) -> Value {
    json!({
        "labels": r.labels(),
        "values": r.theta(),
        "levels": r.levels.iter().map(training_json).collect::<Vec<_>>(),
    })
}

fn burgers_table(s: &Settings, seed: u64, rough: bool, report: &mut Report) -> Result<()> {
    let id = if rough { "table7" } else { "table6" };
    let t0 = Instant::now();
    let p = BurgersProblem::new(s, seed, rough)?;
    report.timing.insert("reference_seconds".into(), t0.elapsed().as_secs_f64());
    let t1 = Instant::now();
    let r = p.train(s, seed)?;
    report.timing.insert("training_seconds".into(), t1.elapsed().as_secs_f64());
    let theta = r.theta();
    let standard_theta = vec![0.5; theta.len()];
    let trained = p.test_errors(&theta)?;
    let standard = p.test_errors(&standard_theta)?;
    let g = report.add_comparison("rusanov", ("rusanov", standard.clone()), ("trained", trained.clone()));

    let levels = s
        .usize_list("refinements")
        .into_iter()
        .map(|n| {
            let errs = p.test.iter().map(|run| p.standard_error(run, n)).collect::<Result<Vec<_>>>()?;
            let steps = p.steps * n / p.cells;
            Ok(Refinement { resolution: n, error: SampleErrors::new(errs).mean, work: (n * steps) as f64 })
        })
        .collect::<Result<Vec<_>>>()?;
    let speedup = speedup_refinement(trained.mean, &levels, true)?;
    report.speedup = Some(speedup);

    let mut columns: Vec<String> = r.labels();
    columns.extend(["gain".to_string(), "speedup".to_string()]);
    let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
    report.table = Table::new(id, &cols);
    let mut row: Vec<Cell> = theta.iter().map(|&v| v.into()).collect();
    row.extend([g.into(), speedup.into()]);
    report.table.push(row)?;

    let mut refine = Table::new("refinement", &["cells", "steps", "mean_error", "work"]);
    for l in &levels {
        refine.push(vec![l.resolution.into(), (p.steps * l.resolution / p.cells).into(), l.error.into(), l.work.into()])?;
    }
    report.figures.push(refine);
    let mut tr = sequential_json(&r);
    tr["train_loss_standard"] = json!(p.full_train_loss(&standard_theta)?);
    tr["train_loss_trained"] = json!(p.full_train_loss(&theta)?);
    report.training.insert("weights".into(), tr);
    Ok(())
}

fn fig8(s: &Settings, seed: u64, report: &mut Report) -> Result<()> {
    let p = BurgersProblem::new(s, seed, true)?;
    let r = p.train(s, seed)?;
    let theta = r.theta();
    let run = &p.test[s.usize("sample")];
    let std = p.run(run, &vec![0.5; theta.len()])?;
    let dl = p.run(run, &theta)?;
    let reference = p.coarse(&run.levels[p.steps - 1], p.cells);
    let u0 = p.coarse(&run.initial, p.cells);
    report.table = Table::new("fig8", &["x", "u0", "reference", "rusanov", "trained"]);
    for j in 0..p.cells {
        let x = (j as f64 + 0.5) / p.cells as f64;
        report.table.push(vec![
            x.into(),
            u0[j].into(),
            reference[j].into(),
            std[p.steps - 1][j].into(),
            dl[p.steps - 1][j].into(),
        ])?;
    }
    report.training.insert("weights".into(), sequential_json(&r));
    Ok(())
}

// ---------------------------------------------------------------- Euler

type Rows = Vec<[f64; 3]>;

struct EulerRun {
    /// Fine conserved initial state.
    initial: Rows,
    /// Fine conserved states at every level.
    levels: Vec<Rows>,
    /// Initial interface location.
    interface: f64,
    left_density: f64,
}

struct EulerProblem {
    cells: usize,
    dt: f64,
    steps: usize,
    layout: WeightLayout,
    gas: EulerGas,
    fine_n: usize,
    train: Vec<EulerRun>,
    test: Vec<EulerRun>,
}

fn sod_primitive(d: &SodData) -> impl Fn(f64) -> Result<Primitive> + '_ {
    move |x| {
        let (rho, v, p) = d.eval(x)?;
        Ok(Primitive { rho, v, p })
    }
}

fn average_rows(rows: &[[f64; 3]], ratio: usize) -> Rows {
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    block_average(&flat, 3, ratio).chunks(3).map(|c| [c[0], c[1], c[2]]).collect()
}

impl EulerProblem {
    fn new(s: &Settings, seed: u64) -> Result<Self> {
        let cells = s.usize("cells");
        let (dt, steps) = (s.f64("dt"), s.usize("steps"));
        let cfg = s.reference();
        let fine_n = cfg.fine_n;
        if !fine_n.is_multiple_of(cells) {
            return Err(Error::InvalidArgument(format!("fine_n {fine_n} is not a multiple of {cells} cells")));
        }
        let gas = EulerGas::new(s.f64("gamma"), sound_speed(s)?)?;
        let layout = WeightLayout::new(cells, s.usize("window"), Boundary::Transparent)?;
        let data = sample_dataset(Family::Sod, s.usize("train_size"), s.usize("test_size"), seed, &Family::Sod.default_ranges())?;
        let fine = SpaceGrid::unit(fine_n, Layout::CellCentered, Boundary::Transparent)?;
        let times: Vec<f64> = (1..=steps).map(|n| n as f64 * dt).collect();
        let run = |rec: &Vec<f64>| -> Result<EulerRun> {
            let d = SodData::from_record(rec)?;
            let u0 = euler_initial(&fine, &gas, sod_primitive(&d))?;
            let levels = euler_fine(&u0, &gas, &times, &cfg)?.iter().map(|f| f.rows::<3>()).collect();
            let ((rho_l, _), _) = d.states()?;
            Ok(EulerRun { initial: u0.rows::<3>(), levels, interface: d.interface(), left_density: rho_l })
        };
        let train = data.train.iter().map(run).collect::<Result<_>>()?;
        let test = data.test.iter().map(run).collect::<Result<_>>()?;
        Ok(EulerProblem { cells, dt, steps, layout, gas, fine_n, train, test })
    }

    fn groups(&self) -> usize {
        self.layout.n_groups()
    }

    fn coarse(&self, fine: &[[f64; 3]], cells: usize) -> Rows {
        average_rows(fine, self.fine_n / cells)
    }

    fn step(&self, u: &[[f64; 3]], pooled: &[f64]) -> Result<Rows> {
        let w = self.layout.expand_pooled(pooled)?;
        self.advance(u, &w).map(|(next, _)| next)
    }

    /// One step at the fixed coarse Courant ratio, with the Courant number reached.
    fn advance(&self, u: &[[f64; 3]], weights: &[f64]) -> Result<(Rows, f64)> {
        let lambda = self.dt * self.cells as f64;
        let prims = self.gas.primitives(u)?;
        let next = euler_update_unchecked(u, &prims, weights, &self.gas, lambda, Boundary::Transparent)?;
        Ok((next, euler_courant(&self.gas, &prims, lambda)))
    }

    /// Largest Courant number met by standard Rusanov on the coarse grid.
    fn standard_courant(&self, run: &EulerRun) -> Result<f64> {
        let w = vec![0.5; self.cells + 1];
        let mut u = self.coarse(&run.initial, self.cells);
        let mut peak = 0.0f64;
        for _ in 0..self.steps {
            let (next, courant) = self.advance(&u, &w)?;
            peak = peak.max(courant);
            u = next;
        }
        Ok(peak)
    }

    /// `Δx Σ_j (|Δρ| + |Δv| + |Δp|)` over cells whose centre passes `keep`.
    fn primitive_error(&self, u: &[[f64; 3]], reference: &[[f64; 3]], keep: impl Fn(f64) -> bool) -> Result<f64> {
        let (a, b) = (self.gas.primitives(u)?, self.gas.primitives(reference)?);
        let n = u.len() as f64;
        Ok(a.iter()
            .zip(&b)
            .enumerate()
            .filter(|(j, _)| keep((*j as f64 + 0.5) / n))
            .map(|(_, (s, r))| (s.rho - r.rho).abs() + (s.v - r.v).abs() + (s.p - r.p).abs())
            .sum::<f64>()
            / n)
    }

    fn level_error(&self, u: &[[f64; 3]], run: &EulerRun, level: usize, cells: usize) -> Result<f64> {
        self.primitive_error(u, &self.coarse(&run.levels[level], cells), |_| true)
    }

    fn run(&self, run: &EulerRun, theta: &[f64]) -> Result<Vec<Rows>> {
        let mut u = self.coarse(&run.initial, self.cells);
        let mut out = Vec::with_capacity(self.steps);
        for level in theta.chunks(self.groups()) {
            u = self.step(&u, level)?;
            out.push(u.clone());
        }
        Ok(out)
    }

    fn error(&self, run: &EulerRun, theta: &[f64]) -> Result<f64> {
        let traj = self.run(run, theta)?;
        let mut total = 0.0;
        for (n, u) in traj.iter().enumerate() {
            total += self.level_error(u, run, n, self.cells)?;
        }
        Ok(total)
    }

    /// Standard Rusanov at `cells` cells with CFL-limited steps, measured like [`Self::error`].
    fn refined_error(&self, run: &EulerRun, cells: usize, cfg: &ReferenceConfig) -> Result<f64> {
        if !self.fine_n.is_multiple_of(cells) {
            return Err(Error::InvalidArgument(format!("resolution {cells} does not divide fine_n {}", self.fine_n)));
        }
        let grid = SpaceGrid::unit(cells, Layout::CellCentered, Boundary::Transparent)?;
        let start = SystemField::from_rows(grid, &self.coarse(&run.initial, cells))?;
        let times: Vec<f64> = (1..=self.steps).map(|n| n as f64 * self.dt).collect();
        let mut total = 0.0;
        for (n, field) in euler_fine(&start, &self.gas, &times, cfg)?.iter().enumerate() {
            total += self.level_error(&field.rows::<3>(), run, n, cells)?;
        }
        Ok(total)
    }

    /// Contact position at the final level, where the reference mass to the
    /// left equals the initial mass left of the interface.
    fn contact(&self, run: &EulerRun) -> f64 {
        let target = run.left_density * run.interface;
        let last = &run.levels[self.steps - 1];
        let h = 1.0 / last.len() as f64;
        let mut mass = 0.0;
        for (j, row) in last.iter().enumerate() {
            let next = mass + row[0] * h;
            if next >= target {
                return (j as f64 + (target - mass) / (row[0] * h)) * h;
            }
            mass = next;
        }
        1.0
    }

    /// Final-level primitive error away from the contact.
    fn wave_error(&self, run: &EulerRun, theta: &[f64], halfwidth: f64) -> Result<f64> {
        let traj = self.run(run, theta)?;
        let xc = self.contact(run);
        let reference = self.coarse(&run.levels[self.steps - 1], self.cells);
        self.primitive_error(&traj[self.steps - 1], &reference, |x| (x - xc).abs() > halfwidth)
    }

    fn test_errors(&self, theta: &[f64]) -> Result<SampleErrors> {
        Ok(SampleErrors::new(self.test.iter().map(|r| self.error(r, theta)).collect::<Result<_>>()?))
    }

    fn train(&self, s: &Settings, seed: u64) -> Result<SequentialResult> {
        let g = self.groups();
        let starts = (1..=self.steps)
            .map(|n| ParamVector::new(vec![0.5; g], labels(&format!("w^{n}_"), g)))
            .collect::<Result<Vec<_>>>()?;
        let cfg = s.train_config(seed);
        let level_loss = |level: usize, frozen: &[Vec<f64>]| -> Result<PerSample<_>> {
            let states = self
                .train
                .iter()
                .map(|r| {
                    let mut u = self.coarse(&r.initial, self.cells);
                    for p in frozen {
                        u = self.step(&u, p)?;
                    }
                    Ok(u)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(PerSample {
                n: self.train.len(),
                f: move |x: &[f64], i: usize| {
                    penalized(self.step(&states[i], x).and_then(|u| self.level_error(&u, &self.train[i], level, self.cells)))
                },
            })
        };
        if cfg.sequential_in_time {
            train_sequential(self.steps, &starts, level_loss, &cfg)
        } else {
            let names: Vec<String> = starts.iter().flat_map(|p| p.labels.clone()).collect();
            let loss = PerSample { n: self.train.len(), f: |x: &[f64], i: usize| penalized(self.error(&self.train[i], x)) };
            let r = minibatch_sgd(&loss, &ParamVector::new(vec![0.5; g * self.steps], names)?, &cfg)?;
            Ok(SequentialResult { levels: vec![r] })
        }
    }
}

fn table8(s: &Settings, seed: u64, report: &mut Report) -> Result<()> {
    let t0 = Instant::now();
    let p = EulerProblem::new(s, seed)?;
    report.timing.insert("reference_seconds".into(), t0.elapsed().as_secs_f64());
    let t1 = Instant::now();
    let r = p.train(s, seed)?;
    report.timing.insert("training_seconds".into(), t1.elapsed().as_secs_f64());
    let theta = r.theta();
    let standard_theta = vec![0.5; theta.len()];
    let trained = p.test_errors(&theta)?;
    let standard = p.test_errors(&standard_theta)?;
    let g = report.add_comparison("rusanov", ("rusanov", standard.clone()), ("trained", trained.clone()));

    let cfg = s.reference();
    let resolutions = s.usize_list("order_resolutions");
    let mut order_table = Table::new("order", &["cells", "mean_error"]);
    let mut means = Vec::new();
    for &n in &resolutions {
        let errs = p.test.iter().map(|run| p.refined_error(run, n, &cfg)).collect::<Result<Vec<_>>>()?;
        let m = SampleErrors::new(errs).mean;
        order_table.push(vec![n.into(), m.into()])?;
        means.push(m);
    }
    let order = observed_order(&means, &resolutions)?;
    let speedup = speedup_extrapolated(trained.mean, standard.mean, p.cells, order)?;
    report.order = Some(order);
    report.speedup = Some(speedup);

    let halfwidth = s.f64("contact_halfwidth");
    let mut waves = Table::new("waves", &["sample", "rusanov", "trained"]);
    let mut better = 0usize;
    for (i, run) in p.test.iter().enumerate() {
        let (a, b) = (p.wave_error(run, &standard_theta, halfwidth)?, p.wave_error(run, &theta, halfwidth)?);
        if b < a {
            better += 1;
        }
        waves.push(vec![i.into(), a.into(), b.into()])?;
    }
    let fraction = better as f64 / p.test.len() as f64;
    let courant = p.test.iter().map(|run| p.standard_courant(run)).collect::<Result<Vec<_>>>()?;
    let over = courant.iter().filter(|&&c| c > 1.0).count();

    let g_count = p.groups();
    let mut cols = vec!["n".to_string()];
    cols.extend(labels("w_", g_count));
    let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
    report.table = Table::new("table8", &cols);
    for (n, level) in theta.chunks(g_count).enumerate() {
        let mut row: Vec<Cell> = vec![(n + 1).into()];
        row.extend(level.iter().map(|&v| Cell::from(v)));
        report.table.push(row)?;
    }
    let mut summary = Table::new("summary", &["metric", "value"]);
    let peak = courant.iter().fold(0.0f64, |m, &c| m.max(c));
    for (k, v) in [
        ("gain", g),
        ("order", order),
        ("speedup", speedup),
        ("wave_improved_fraction", fraction),
        ("max_standard_courant", peak),
        ("test_samples_above_unit_courant", over as f64),
    ] {
        summary.push(vec![k.into(), v.into()])?;
    }
    report.figures.push(summary);
    report.figures.push(order_table);
    report.figures.push(waves);
    let mut tr = sequential_json(&r);
    tr["train_loss_standard"] = json!(p.train.iter().map(|x| p.error(x, &standard_theta)).sum::<Result<f64>>()?);
    tr["train_loss_trained"] = json!(p.train.iter().map(|x| p.error(x, &theta)).sum::<Result<f64>>()?);
    tr["moved_weights"] = json!(theta.iter().filter(|w| (*w - 0.5).abs() >= 0.01).count());
    report.training.insert("weights".into(), tr);
    report.gains.insert("wave_improved_fraction".into(), fraction);
    Ok(())
}

fn fig9(s: &Settings, seed: u64, report: &mut Report) -> Result<()> {
    let p = EulerProblem::new(s, seed)?;
    let r = p.train(s, seed)?;
    let theta = r.theta();
    let sod = SodData::standard();
    let cfg = s.reference();
    let fine = SpaceGrid::unit(p.fine_n, Layout::CellCentered, Boundary::Transparent)?;
    let exact_start = euler_initial(&fine, &p.gas, sod_primitive(&sod))?;
    let coarse_start = p.coarse(&exact_start.rows::<3>(), p.cells);
    // The reference starts from the coarse cell averages.
    let spread: Rows = coarse_start.iter().flat_map(|row| std::iter::repeat_n(*row, p.fine_n / p.cells)).collect();
    let start = crate::grid::SystemField::from_rows(fine.clone(), &spread)?;
    let t_final = p.steps as f64 * p.dt;
    let reference = euler_fine(&start, &p.gas, &[t_final], &cfg)?.remove(0).rows::<3>();
    let reference = p.gas.primitives(&p.coarse(&reference, p.cells))?;
    let run = EulerRun { initial: exact_start.rows::<3>(), levels: Vec::new(), interface: 0.5, left_density: 1.0 };
    let std = p.gas.primitives(&p.run(&run, &vec![0.5; theta.len()])?[p.steps - 1])?;
    let dl = p.gas.primitives(&p.run(&run, &theta)?[p.steps - 1])?;
    report.table = Table::new(
        "fig9",
        &["x", "rho_ref", "v_ref", "p_ref", "rho_rusanov", "v_rusanov", "p_rusanov", "rho_trained", "v_trained", "p_trained"],
    );
    for j in 0..p.cells {
        let x = (j as f64 + 0.5) / p.cells as f64;
        let (a, b, c) = (reference[j], std[j], dl[j]);
        report
            .table
            .push(vec![x.into(), a.rho.into(), a.v.into(), a.p.into(), b.rho.into(), b.v.into(), b.p.into(), c.rho.into(), c.v.into(), c.p.into()])?;
    }
    report.training.insert("weights".into(), sequential_json(&r));
    Ok(())
}
