use rayon::prelude::*;
use serde::Serialize;

use super::nash::GapEstimate;
use super::{assign_classes, CandidateModel};
use crate::error::{Error, Result};
use crate::model::Regime;
use crate::rng::NoiseSource;

/// Ordinary least squares of `log y` on `log x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub regime: Regime,
    pub n_values: Vec<usize>,
    pub replications: usize,
    pub sup_z_mse: Vec<f64>,
    pub x_mse: Vec<f64>,
    /// Power regime only: class-weighted `Ê|(X̄ⁿ_T)^γ − X̄_T^γ|²` with `γ = −θ_T p`.
    pub x_gamma_mse: Option<Vec<f64>>,
    /// Filled by callers that also run the deviation probe.
    pub gap_estimates: Vec<GapEstimate>,
    pub z_fit: Option<LogLogFit>,
    pub x_fit: Option<LogLogFit>,
    pub x_gamma_fit: Option<LogLogFit>,
    /// True when every error statistic is exactly zero and no slope is fitted.
    pub exact_match: bool,
}

impl SimReport {
    pub fn slope(&self) -> Option<f64> {
        self.z_fit.map(|f| f.slope)
    }

    pub fn slope_stderr(&self) -> Option<f64> {
        self.z_fit.map(|f| f.slope_stderr)
    }
}

/// Fits `log err = c + s·log n`. Returns `None` when every error is zero.
pub fn fit_log_log(n: &[f64], err: &[f64]) -> Result<Option<LogLogFit>> {
    if n.len() != err.len() || n.len() < 2 {
        return Err(Error::invalid("regression", "need at least two matching points"));
    }
    if err.iter().all(|&e| e == 0.0) {
        return Ok(None);
    }
    if let Some(&bad) = err.iter().find(|&&e| !(e > 0.0 && e.is_finite())) {
        return Err(Error::domain("log-log regression needs positive errors", bad));
    }
    if let Some(&bad) = n.iter().find(|&&v| !(v > 0.0)) {
        return Err(Error::domain("log-log regression needs positive abscissae", bad));
    }
    let x: Vec<f64> = n.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = err.iter().map(|v| v.ln()).collect();
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if !(sxx > 0.0) {
        return Err(Error::invalid("regression", "abscissae must not all coincide"));
    }
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_stderr = if x.len() > 2 {
        let sse: f64 = x.iter().zip(&y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
        (sse / (m - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(Some(LogLogFit { slope, intercept, slope_stderr }))
}

struct RepErrors {
    z_sq: Vec<f64>,
    x_sq: f64,
    x_gamma_sq: f64,
}

/// Empirical-vs-mean-field error statistics across cohort sizes.
pub fn convergence_study(
    model: &CandidateModel,
    n_values: &[usize],
    replications: usize,
    noise: &dyn NoiseSource,
) -> Result<SimReport> {
    let mut sorted = n_values.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() < 3 || sorted.len() != n_values.len() || sorted != n_values {
        return Err(Error::invalid("simulation.n_values", "need at least 3 distinct, strictly increasing values"));
    }
    if sorted[0] == 0 {
        return Err(Error::invalid("simulation.n_values", "cohort sizes must be >= 1"));
    }
    if replications < 2 {
        return Err(Error::invalid("simulation.replications", "need at least 2 replications"));
    }
    let regime = model.regime();
    let zbar = model.zbar();
    let xbar = model.xbar_t();
    let dist = model.dist();
    // (weight, γ) per class for the power-regime wealth statistic
    let gammas: Vec<(f64, f64)> = dist.iter().map(|(c, w)| (w, -c.theta_terminal() * c.risk)).collect();

    let mut sup_z_mse = Vec::with_capacity(n_values.len());
    let mut x_mse = Vec::with_capacity(n_values.len());
    let mut x_gamma_mse = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let a = assign_classes(n, dist);
        let reps: Vec<Result<RepErrors>> = (0..replications as u64)
            .into_par_iter()
            .map(|r| {
                let out = model.simulate(&a, noise, r, false)?;
                let z_sq = out.zbar_n.values().iter().zip(zbar).map(|(e, m)| (e - m) * (e - m)).collect();
                let xn = out.xbar_n_t;
                let x_gamma_sq = match regime {
                    Regime::Power => gammas.iter().map(|&(w, g)| w * (xn.powf(g) - xbar.powf(g)).powi(2)).sum(),
                    Regime::Exponential => 0.0,
                };
                Ok(RepErrors { z_sq, x_sq: (xn - xbar) * (xn - xbar), x_gamma_sq })
            })
            .collect();
        let mut z_acc = vec![0.0; zbar.len()];
        let (mut x_acc, mut g_acc) = (0.0, 0.0);
        for rep in reps {
            let rep = rep?;
            for (acc, v) in z_acc.iter_mut().zip(&rep.z_sq) {
                *acc += v;
            }
            x_acc += rep.x_sq;
            g_acc += rep.x_gamma_sq;
        }
        let inv = 1.0 / replications as f64;
        sup_z_mse.push(z_acc.iter().fold(0.0, |m: f64, v| m.max(v * inv)));
        x_mse.push(x_acc * inv);
        x_gamma_mse.push(g_acc * inv);
    }

    let ns: Vec<f64> = n_values.iter().map(|&n| n as f64).collect();
    let z_fit = fit_log_log(&ns, &sup_z_mse)?;
    let x_fit = fit_log_log(&ns, &x_mse)?;
    let (x_gamma_mse, x_gamma_fit) = match regime {
        Regime::Power => {
            let fit = fit_log_log(&ns, &x_gamma_mse)?;
            (Some(x_gamma_mse), fit)
        }
        Regime::Exponential => (None, None),
    };
    let exact_match = z_fit.is_none() && x_fit.is_none();
    Ok(SimReport {
        regime,
        n_values: n_values.to_vec(),
        replications,
        sup_z_mse,
        x_mse,
        x_gamma_mse,
        gap_estimates: Vec::new(),
        z_fit,
        x_fit,
        x_gamma_fit,
        exact_match,
    })
}
