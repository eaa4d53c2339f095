use serde::Serialize;

use super::nash::{agent_zero_values, Deviation};
use super::{CandidateModel, ClassAssignment};
use crate::error::{Error, Result};
use crate::model::{AgentClass, Regime};
use crate::numerics::TimeGrid;
use crate::rng::NoiseSource;

/// Which benchmark pair `(Z̄, X̄_T)` the objective is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchmarkChoice {
    /// The deterministic mean-field pair.
    MeanField,
    /// The cohort's own empirical averages.
    Empirical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObjectiveEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
    pub domain_errors: usize,
}

/// Realized objective of one path against a benchmark.
///
/// Exponential: `∫ −exp(−(C − θZ̄)/β) dt − exp(−(X_T − θX̄_T)/β)`.
/// Power: `∫ C^p/(p Z̄^{pθ}) dt + X_T^p/(p X̄_T^{pθ_T})`.
pub fn path_objective(
    regime: Regime,
    cls: &AgentClass,
    grid: &TimeGrid,
    consumption: &[f64],
    terminal_wealth: f64,
    bench_z: &[f64],
    bench_x: f64,
) -> Result<f64> {
    let n = grid.n_nodes();
    if consumption.len() != n || bench_z.len() != n {
        return Err(Error::invalid("path", format!("expected {n} nodes")));
    }
    let h = grid.step();
    let mut running = 0.0;
    let mut prev = 0.0;
    for j in 0..n {
        let u = match regime {
            Regime::Exponential => -(-(consumption[j] - cls.theta * bench_z[j]) / cls.risk).exp(),
            Regime::Power => power_utility(consumption[j], bench_z[j], cls.risk, cls.theta)?,
        };
        if j > 0 {
            running += 0.5 * h * (prev + u);
        }
        prev = u;
    }
    let terminal = match regime {
        Regime::Exponential => -(-(terminal_wealth - cls.theta * bench_x) / cls.risk).exp(),
        Regime::Power => power_utility(terminal_wealth, bench_x, cls.risk, cls.theta_terminal())?,
    };
    let total = running + terminal;
    if !total.is_finite() {
        return Err(Error::domain("objective is not finite", total));
    }
    Ok(total)
}

fn power_utility(level: f64, bench: f64, p: f64, theta: f64) -> Result<f64> {
    if !(level > 0.0) {
        return Err(Error::domain("power utility needs a positive argument", level));
    }
    if !(bench > 0.0) {
        return Err(Error::domain("power utility needs a positive benchmark", bench));
    }
    Ok(level.powf(p) / (p * bench.powf(p * theta)))
}

/// Monte Carlo objective of agent 0 playing `strategy` while every other
/// agent of the cohort plays the candidate.
pub fn estimate_objective(
    model: &CandidateModel,
    assignment: &ClassAssignment,
    strategy: Deviation,
    benchmark: BenchmarkChoice,
    replications: usize,
    noise: &dyn NoiseSource,
) -> Result<ObjectiveEstimate> {
    use rayon::prelude::*;
    let family = [strategy];
    let per_rep: Vec<Result<Vec<(f64, f64)>>> = (0..replications as u64)
        .into_par_iter()
        .map(|r| agent_zero_values(model, assignment, &family, noise, r))
        .collect();
    let mut values = Vec::with_capacity(replications);
    let mut failed = 0;
    for rep in per_rep {
        match rep {
            Ok(v) => values.push(match benchmark {
                BenchmarkChoice::Empirical => v[0].0,
                BenchmarkChoice::MeanField => v[0].1,
            }),
            Err(Error::Domain { .. }) => failed += 1,
            Err(e) => return Err(e),
        }
    }
    if values.is_empty() {
        return Err(Error::AllPathsFailed { failed });
    }
    let (mean, stderr) = mean_stderr(&values);
    Ok(ObjectiveEstimate { mean, stderr, samples: values.len(), domain_errors: failed })
}

pub(crate) fn mean_stderr(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exponential_constant_argument() {
        let g = TimeGrid::new(10, 2.0).unwrap();
        let cls = AgentClass::new(0.2, 0.2, 1.5, 0.5);
        let z = vec![2.0; 11];
        // C − θZ̄ = 3 − 1 = 2 everywhere; terminal argument 4 − 0.5·2 = 3
        let j = path_objective(Regime::Exponential, &cls, &g, &[3.0; 11], 4.0, &z, 2.0).unwrap();
        assert_relative_eq!(j, -2.0 * (-2.0f64 / 1.5).exp() - (-3.0f64 / 1.5).exp(), epsilon = 1e-14);
    }

    #[test]
    fn power_constant_argument() {
        let g = TimeGrid::new(10, 1.0).unwrap();
        let cls = AgentClass::new(0.2, 0.2, 0.5, 0.0);
        let j = path_objective(Regime::Power, &cls, &g, &[4.0; 11], 9.0, &[3.0; 11], 7.0).unwrap();
        assert_relative_eq!(j, 1.0 * 4f64.sqrt() / 0.5 + 9f64.sqrt() / 0.5, epsilon = 1e-14);
    }

    #[test]
    fn power_domain_errors() {
        let g = TimeGrid::new(4, 1.0).unwrap();
        let cls = AgentClass::new(0.2, 0.2, 0.5, 1.0);
        let r = path_objective(Regime::Power, &cls, &g, &[1.0, 1.0, -1.0, 1.0, 1.0], 1.0, &[1.0; 5], 1.0);
        assert!(matches!(r, Err(Error::Domain { .. })));
        let r = path_objective(Regime::Power, &cls, &g, &[1.0; 5], 1.0, &[1.0; 5], 0.0);
        assert!(matches!(r, Err(Error::Domain { .. })));
    }

    #[test]
    fn sample_statistics() {
        let (m, s) = mean_stderr(&[1.0, 2.0, 3.0, 4.0]);
        assert_relative_eq!(m, 2.5);
        assert_relative_eq!(s, (5.0f64 / 3.0 / 4.0).sqrt(), epsilon = 1e-15);
    }
}
