//! Unilateral-deviation probe for the approximate Nash property.
//!
//! Agent 0 switches to a perturbed strategy while agents 1..n keep the
//! candidate. All deviations of one replication share agent 0's Gaussian
//! increments and the other agents' paths, so objective differences are
//! computed under common random numbers.

use rayon::prelude::*;
use serde::Serialize;

use super::objective::{mean_stderr, path_objective};
use super::{AgentPath, CandidateModel, ClassAssignment, ClassModels};
use crate::error::{Error, Result};
use crate::numerics::cumulative_trapezoid;
use crate::rng::NoiseSource;

/// Relative perturbation of the candidate: investment scaled by
/// `investment_multiplier`, consumption scaled by `1 + consumption_tilt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Deviation {
    pub investment_multiplier: f64,
    pub consumption_tilt: f64,
}

impl Deviation {
    pub const CANDIDATE: Deviation = Deviation { investment_multiplier: 1.0, consumption_tilt: 0.0 };

    pub fn new(investment_multiplier: f64, consumption_tilt: f64) -> Self {
        Self { investment_multiplier, consumption_tilt }
    }

    pub fn is_candidate(&self) -> bool {
        *self == Self::CANDIDATE
    }
}

/// Multipliers {0.5, 0.8, 1, 1.25, 2} × tilts {−0.2, −0.1, 0, 0.1, 0.2}.
pub fn default_deviation_family() -> Vec<Deviation> {
    let mut out = Vec::with_capacity(25);
    for m in [0.5, 0.8, 1.0, 1.25, 2.0] {
        for t in [-0.2, -0.1, 0.0, 0.1, 0.2] {
            out.push(Deviation::new(m, t));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationGain {
    pub deviation: Deviation,
    /// `J(dev; empirical) − J(candidate; empirical)`, replication mean.
    pub gain: f64,
    pub gain_stderr: f64,
    /// Same difference with both objectives measured against the mean-field benchmark.
    pub mean_field_gain: f64,
    pub mean_field_gain_stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapEstimate {
    pub n: usize,
    pub replications: usize,
    /// `max(0, max_d gain_d)`.
    pub max_gain: f64,
    pub best_deviation: Deviation,
    /// `max_d |gain_d − mean_field_gain_d|`: the part of any gain explained
    /// only by the empirical benchmark differing from the mean field.
    pub benchmark_error: f64,
    /// Mean of `J(candidate; empirical) − J(candidate; mean field)`.
    pub candidate_benchmark_gap: f64,
    pub per_deviation: Vec<DeviationGain>,
    pub domain_errors: usize,
}

impl CandidateModel {
    /// Wealth and consumption of one agent playing `dev`, exact in distribution.
    pub fn deviation_path(&self, class: usize, dev: Deviation, xi: &[f64]) -> AgentPath {
        let n = self.grid.n_nodes();
        let h = self.grid.step();
        let t = self.grid.nodes();
        let cls = self.dist.classes[class];
        let m = dev.investment_multiplier;
        let tilt = 1.0 + dev.consumption_tilt;
        let mut wealth = vec![0.0; n];
        let mut consumption = vec![0.0; n];
        match &self.classes {
            ClassModels::Exp(cp) => {
                // d(φX) = φ(mΠ*μ − (1+τ)h)dt + φ mΠ*σ dW with φ = ((T+1)/(T+1−t))^{1+τ}
                let c = &cp[class];
                let t1 = self.params.horizon + 1.0;
                let phi: Vec<f64> = c.time_to_go.iter().map(|s| (t1 / s).powf(tilt)).collect();
                let drift: Vec<f64> =
                    (0..n).map(|j| phi[j] * (m * c.pi_star[j] * cls.mu - tilt * c.intercept[j])).collect();
                let det = cumulative_trapezoid(&drift, h);
                let ratio = cls.mu / cls.sigma;
                let scale = m * cls.risk * ratio * t1.powf(tilt);
                let e = 1.0 - 2.0 * dev.consumption_tilt;
                let mut y = 0.0;
                for j in 0..n {
                    if j > 0 {
                        let (a, b) = (c.time_to_go[j - 1], c.time_to_go[j]);
                        let cell = if e.abs() < 1e-12 { (a / b).ln() } else { (a.powf(e) - b.powf(e)) / e };
                        y += scale * cell.sqrt() * xi[j - 1];
                    }
                    let x = (self.params.x0 + det[j] + y) / phi[j];
                    wealth[j] = x;
                    consumption[j] = tilt * (x / c.time_to_go[j] + c.intercept[j]);
                }
            }
            ClassModels::Power(cp) => {
                let c = &cp[class];
                let pi = m * c.pi_star;
                let drift = pi * cls.mu - 0.5 * cls.sigma * cls.sigma * pi * pi;
                let cum = cumulative_trapezoid(&c.c_star, h);
                let vol = pi * cls.sigma;
                let sq = h.sqrt();
                let lx0 = self.params.x0.ln();
                let mut w = 0.0;
                for j in 0..n {
                    if j > 0 {
                        w += sq * xi[j - 1];
                    }
                    let x = (lx0 + drift * t[j] - tilt * cum[j] + vol * w).exp();
                    wealth[j] = x;
                    consumption[j] = tilt * c.c_star[j] * x;
                }
            }
        }
        AgentPath { class, wealth, consumption }
    }
}

/// Agent 0's objective under every family member for one replication, as
/// `(against empirical benchmark, against mean-field benchmark)`.
pub(crate) fn agent_zero_values(
    model: &CandidateModel,
    a: &ClassAssignment,
    family: &[Deviation],
    noise: &dyn NoiseSource,
    replication: u64,
) -> Result<Vec<(f64, f64)>> {
    model.check_assignment(a)?;
    let n = a.n_agents();
    let (others_rate, others_stat, _) = model.accumulate(a, noise, replication, 1, false);
    let mut xi = vec![0.0; model.grid.n_steps()];
    noise.fill(replication, 0, &mut xi);
    let class = a.labels[0];
    let cls = model.dist.classes[class];
    let regime = model.regime();
    let mut out = Vec::with_capacity(family.len());
    let mut rate = vec![0.0; model.grid.n_nodes()];
    for &dev in family {
        let path = model.deviation_path(class, dev, &xi);
        let x_t = path.wealth[path.wealth.len() - 1];
        for ((r, o), c) in rate.iter_mut().zip(&others_rate).zip(&path.consumption) {
            *r = o + c;
        }
        if regime == crate::model::Regime::Power && !(x_t > 0.0) {
            return Err(Error::domain("terminal wealth must be positive", x_t));
        }
        let (z_n, x_n) = model.empirical_benchmark(&rate, others_stat + model.terminal_stat(x_t), n);
        let emp = path_objective(regime, &cls, &model.grid, &path.consumption, x_t, &z_n, x_n)?;
        let mf = path_objective(regime, &cls, &model.grid, &path.consumption, x_t, &model.zbar, model.xbar_t)?;
        out.push((emp, mf));
    }
    Ok(out)
}

/// Deviation gains of agent 0 in a cohort of `assignment.n_agents()` players.
pub fn nash_gap_probe(
    model: &CandidateModel,
    assignment: &ClassAssignment,
    family: &[Deviation],
    replications: usize,
    noise: &dyn NoiseSource,
) -> Result<GapEstimate> {
    if family.is_empty() {
        return Err(Error::invalid("deviation_family", "must not be empty"));
    }
    if replications == 0 {
        return Err(Error::invalid("simulation.replications", "must be >= 1"));
    }
    let mut family = family.to_vec();
    if !family.iter().any(Deviation::is_candidate) {
        family.insert(0, Deviation::CANDIDATE);
    }
    let cand = family.iter().position(Deviation::is_candidate).unwrap_or(0);

    let per_rep: Vec<Result<Vec<(f64, f64)>>> = (0..replications as u64)
        .into_par_iter()
        .map(|r| agent_zero_values(model, assignment, &family, noise, r))
        .collect();

    let mut emp_diff: Vec<Vec<f64>> = vec![Vec::with_capacity(replications); family.len()];
    let mut mf_diff: Vec<Vec<f64>> = vec![Vec::with_capacity(replications); family.len()];
    let mut cand_gap = Vec::with_capacity(replications);
    let mut failed = 0;
    for rep in per_rep {
        let v = match rep {
            Ok(v) => v,
            Err(Error::Domain { .. }) => {
                failed += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let (ce, cm) = v[cand];
        cand_gap.push(ce - cm);
        for (d, &(e, m)) in v.iter().enumerate() {
            emp_diff[d].push(e - ce);
            mf_diff[d].push(m - cm);
        }
    }
    if cand_gap.is_empty() {
        return Err(Error::AllPathsFailed { failed });
    }

    let per_deviation: Vec<DeviationGain> = family
        .iter()
        .enumerate()
        .map(|(d, &deviation)| {
            let (gain, gain_stderr) = mean_stderr(&emp_diff[d]);
            let (mean_field_gain, mean_field_gain_stderr) = mean_stderr(&mf_diff[d]);
            DeviationGain { deviation, gain, gain_stderr, mean_field_gain, mean_field_gain_stderr }
        })
        .collect();
    let mut max_gain = 0.0;
    let mut best_deviation = Deviation::CANDIDATE;
    for g in &per_deviation {
        if g.gain > max_gain {
            max_gain = g.gain;
            best_deviation = g.deviation;
        }
    }
    let benchmark_error = per_deviation.iter().map(|g| (g.gain - g.mean_field_gain).abs()).fold(0.0, f64::max);
    Ok(GapEstimate {
        n: assignment.n_agents(),
        replications: cand_gap.len(),
        max_gain,
        best_deviation,
        benchmark_error,
        candidate_benchmark_gap: mean_stderr(&cand_gap).0,
        per_deviation,
        domain_errors: failed,
    })
}
