use std::fmt::Write as _;

use crate::integrator::{Monitor, StepError, StepStats, TwoDerivativeSystem};
use crate::problems::Bgk1d;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MonitorKind {
    Positivity,
    Entropy,
    Conservation,
}

impl MonitorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MonitorKind::Positivity => "positivity",
            MonitorKind::Entropy => "entropy",
            MonitorKind::Conservation => "conservation",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub step: usize,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonitorReport {
    pub kind: MonitorKind,
    pub violations: Vec<Violation>,
    /// `(step, value)` of the monitored quantity: smallest component,
    /// entropy, or largest relative moment drift.
    pub trace: Vec<(usize, f64)>,
}

impl MonitorReport {
    fn new(kind: MonitorKind) -> Self {
        Self {
            kind,
            violations: Vec::new(),
            trace: Vec::new(),
        }
    }

    pub fn passes(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn first_violation_step(&self) -> Option<usize> {
        self.violations.first().map(|v| v.step)
    }

    /// Extremal value of the trace: minimum for positivity, maximum otherwise.
    pub fn extremum(&self) -> Option<f64> {
        let values = self.trace.iter().map(|t| t.1);
        match self.kind {
            MonitorKind::Positivity => values.reduce(f64::min),
            _ => values.reduce(f64::max),
        }
    }

    /// Line-oriented text form.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let status = if self.passes() { "PASS" } else { "FAIL" };
        let _ = writeln!(
            s,
            "monitor {} {} violations={} extremum={}",
            self.kind.as_str(),
            status,
            self.violations.len(),
            self.extremum().map_or("n/a".to_string(), |v| format!("{v:.6e}"))
        );
        for v in &self.violations {
            let _ = writeln!(s, "violation step={} {}", v.step, v.detail);
        }
        s
    }
}

fn argmin(u: &[f64]) -> (usize, f64) {
    u.iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |best, (i, v)| if v < best.1 || v.is_nan() { (i, v) } else { best })
}

/// Flags every nonpositive component of a step result and every nonpositive
/// stage predictor or stage value. For kinetic states it also checks that
/// density and temperature stay positive in every cell.
pub struct PositivityMonitor<'a> {
    report: MonitorReport,
    kinetic: Option<&'a Bgk1d>,
}

impl Default for PositivityMonitor<'_> {
    fn default() -> Self {
        Self::new()
    }
}

impl<'a> PositivityMonitor<'a> {
    pub fn new() -> Self {
        Self {
            report: MonitorReport::new(MonitorKind::Positivity),
            kinetic: None,
        }
    }

    pub fn kinetic(bgk: &'a Bgk1d) -> Self {
        Self {
            kinetic: Some(bgk),
            ..Self::new()
        }
    }

    pub fn report(&self) -> &MonitorReport {
        &self.report
    }

    pub fn into_report(self) -> MonitorReport {
        self.report
    }

    fn check_stages(&mut self, step: usize, stats: &StepStats) {
        for (i, &p) in stats.predictor_min.iter().enumerate() {
            if !(p > 0.0) {
                self.flag(step, format!("stage {} predictor min {p:e}", i + 1));
            }
        }
        for (i, &v) in stats.stage_min.iter().enumerate() {
            if !(v > 0.0) {
                self.flag(step, format!("stage {} value min {v:e}", i + 1));
            }
        }
    }

    fn flag(&mut self, step: usize, detail: String) {
        self.report.violations.push(Violation { step, detail });
    }
}

impl Monitor for PositivityMonitor<'_> {
    fn start(&mut self, _t0: f64, u0: &[f64]) {
        self.report.trace.push((0, argmin(u0).1));
    }

    fn observe(&mut self, step: usize, _t: f64, u: &[f64], stats: &StepStats) {
        self.check_stages(step, stats);
        let (i, v) = argmin(u);
        self.report.trace.push((step, v));
        if !(v > 0.0) {
            self.flag(step, format!("component {i} = {v:e}"));
        }
        if let Some(bgk) = self.kinetic {
            let nv = bgk.vgrid().nv();
            for (k, fk) in u.chunks(nv).enumerate() {
                let m = bgk.vgrid().moments(fk);
                if let Err(e) = Bgk1d::macroscopic_from_moments(k, &m) {
                    self.flag(step, e.to_string());
                }
            }
        }
    }

    fn observe_failure(&mut self, step: usize, stats: &StepStats, error: &StepError) {
        self.check_stages(step, stats);
        self.flag(step, format!("step failed: {error}"));
    }
}

/// Tracks the discrete kinetic entropy and flags any relative increase above
/// `rel_tol` between consecutive steps.
pub struct EntropyMonitor<'a> {
    bgk: &'a Bgk1d,
    rel_tol: f64,
    last: Option<f64>,
    report: MonitorReport,
}

impl<'a> EntropyMonitor<'a> {
    pub const DEFAULT_REL_TOL: f64 = 1e-10;

    pub fn new(bgk: &'a Bgk1d) -> Self {
        Self::with_tolerance(bgk, Self::DEFAULT_REL_TOL)
    }

    pub fn with_tolerance(bgk: &'a Bgk1d, rel_tol: f64) -> Self {
        Self {
            bgk,
            rel_tol,
            last: None,
            report: MonitorReport::new(MonitorKind::Entropy),
        }
    }

    pub fn report(&self) -> &MonitorReport {
        &self.report
    }

    pub fn into_report(self) -> MonitorReport {
        self.report
    }

    fn record(&mut self, step: usize, u: &[f64]) {
        match self.bgk.entropy(u) {
            Some(s) => {
                if let Some(prev) = self.last {
                    if s > prev + self.rel_tol * prev.abs() {
                        self.report.violations.push(Violation {
                            step,
                            detail: format!("entropy increased from {prev:.15e} to {s:.15e}"),
                        });
                    }
                }
                self.report.trace.push((step, s));
                self.last = Some(s);
            }
            None => {
                self.report.violations.push(Violation {
                    step,
                    detail: "entropy undefined: nonpositive distribution value".into(),
                });
                self.last = None;
            }
        }
    }
}

impl Monitor for EntropyMonitor<'_> {
    fn start(&mut self, _t0: f64, u0: &[f64]) {
        self.record(0, u0);
    }

    fn observe(&mut self, step: usize, _t: f64, u: &[f64], _stats: &StepStats) {
        self.record(step, u);
    }
}

/// Checks that the domain totals of the conserved moments stay at their
/// initial values. Drift of moment `q` is measured relative to the initial
/// total variation `sum_k |omega_q,k|`.
pub struct ConservationMonitor<'a> {
    sys: &'a dyn TwoDerivativeSystem,
    tol: f64,
    initial: Vec<f64>,
    scale: Vec<f64>,
    report: MonitorReport,
}

impl<'a> ConservationMonitor<'a> {
    /// Panics if `sys` has no relaxation structure.
    pub fn new(sys: &'a dyn TwoDerivativeSystem, tol: f64) -> Self {
        assert!(sys.relaxation().is_some(), "conservation needs a relaxation structure");
        Self {
            sys,
            tol,
            initial: Vec::new(),
            scale: Vec::new(),
            report: MonitorReport::new(MonitorKind::Conservation),
        }
    }

    pub fn report(&self) -> &MonitorReport {
        &self.report
    }

    pub fn into_report(self) -> MonitorReport {
        self.report
    }

    /// Domain totals and absolute totals of every moment.
    pub fn totals(sys: &dyn TwoDerivativeSystem, u: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let relax = sys.relaxation().expect("relaxation structure");
        let nm = relax.n_moments();
        let mut tot = vec![0.0; nm];
        let mut abs = vec![0.0; nm];
        let mut w = vec![0.0; nm];
        for block in u.chunks(sys.block_size()) {
            relax.moments(block, &mut w);
            for q in 0..nm {
                tot[q] += w[q];
                abs[q] += w[q].abs();
            }
        }
        (tot, abs)
    }

    fn drift(&self, u: &[f64]) -> Vec<f64> {
        let (tot, _) = Self::totals(self.sys, u);
        tot.iter()
            .zip(&self.initial)
            .zip(&self.scale)
            .map(|((a, b), s)| if *s > 0.0 { (a - b).abs() / s } else { (a - b).abs() })
            .collect()
    }
}

impl Monitor for ConservationMonitor<'_> {
    fn start(&mut self, _t0: f64, u0: &[f64]) {
        let (tot, abs) = Self::totals(self.sys, u0);
        self.initial = tot;
        self.scale = abs;
        self.report.trace.push((0, 0.0));
    }

    fn observe(&mut self, step: usize, _t: f64, u: &[f64], _stats: &StepStats) {
        let drift = self.drift(u);
        let worst = drift.iter().copied().fold(0.0, f64::max);
        self.report.trace.push((step, worst));
        for (q, d) in drift.iter().enumerate() {
            if !(*d <= self.tol) {
                self.report.violations.push(Violation {
                    step,
                    detail: format!("moment {q} relative drift {d:e} exceeds {:e}", self.tol),
                });
            }
        }
    }
}
