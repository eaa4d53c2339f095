//! Market, agent-type and type-distribution parameters shared by both regimes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// CARA utility, risk field is the tolerance β.
    Exponential,
    /// CRRA utility, risk field is the exponent p ∈ (0,1).
    Power,
}

impl Regime {
    pub fn name(&self) -> &'static str {
        match self {
            Regime::Exponential => "exponential",
            Regime::Power => "power",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketParams {
    #[serde(rename = "T", alias = "horizon")]
    pub horizon: f64,
    pub delta: f64,
    pub x0: f64,
    pub z0: f64,
}

impl MarketParams {
    pub fn validate(&self, regime: Regime) -> Result<()> {
        positive("market.T", self.horizon)?;
        positive("market.delta", self.delta)?;
        positive("market.z0", self.z0)?;
        match regime {
            Regime::Power => positive("market.x0", self.x0)?,
            Regime::Exponential => finite("market.x0", self.x0)?,
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentClass {
    pub mu: f64,
    pub sigma: f64,
    /// β in the exponential regime, p in the power regime.
    #[serde(alias = "beta", alias = "p")]
    pub risk: f64,
    pub theta: f64,
    /// Competition weight on terminal wealth; defaults to `theta`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terminal_theta: Option<f64>,
}

impl AgentClass {
    pub fn new(mu: f64, sigma: f64, risk: f64, theta: f64) -> Self {
        Self { mu, sigma, risk, theta, terminal_theta: None }
    }

    pub fn with_terminal_theta(mut self, theta_t: f64) -> Self {
        self.terminal_theta = Some(theta_t);
        self
    }

    pub fn theta_terminal(&self) -> f64 {
        self.terminal_theta.unwrap_or(self.theta)
    }

    pub fn has_terminal_override(&self) -> bool {
        matches!(self.terminal_theta, Some(tt) if tt != self.theta)
    }

    /// Squared Sharpe ratio (μ/σ)².
    pub fn sharpe_sq(&self) -> f64 {
        let s = self.mu / self.sigma;
        s * s
    }

    pub fn validate(&self, regime: Regime, field: &str) -> Result<()> {
        positive(&format!("{field}.mu"), self.mu)?;
        positive(&format!("{field}.sigma"), self.sigma)?;
        match regime {
            Regime::Exponential => {
                positive(&format!("{field}.risk"), self.risk)?;
                if self.has_terminal_override() {
                    return Err(Error::invalid(
                        format!("{field}.terminal_theta"),
                        "terminal override is only supported in the power regime",
                    ));
                }
            }
            Regime::Power => {
                finite(&format!("{field}.risk"), self.risk)?;
                if !(self.risk > 0.0 && self.risk < 1.0) {
                    return Err(Error::invalid(
                        format!("{field}.risk"),
                        format!("power exponent p must lie in (0,1), got {}", self.risk),
                    ));
                }
            }
        }
        unit_interval(&format!("{field}.theta"), self.theta)?;
        if let Some(tt) = self.terminal_theta {
            unit_interval(&format!("{field}.terminal_theta"), tt)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TypeDistribution {
    pub classes: Vec<AgentClass>,
    pub weights: Vec<f64>,
}

impl TypeDistribution {
    pub fn new(classes: Vec<AgentClass>, weights: Vec<f64>) -> Result<Self> {
        let d = Self { classes, weights };
        d.validate_weights()?;
        Ok(d)
    }

    pub fn single(cls: AgentClass) -> Self {
        Self { classes: vec![cls], weights: vec![1.0] }
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&AgentClass, f64)> {
        self.classes.iter().zip(self.weights.iter().copied())
    }

    /// `E_m[f(o)]` over the type law.
    pub fn expect(&self, f: impl Fn(&AgentClass) -> f64) -> f64 {
        self.iter().map(|(c, w)| w * f(c)).sum()
    }

    pub fn mean_theta(&self) -> f64 {
        self.expect(|c| c.theta)
    }

    pub fn validate_weights(&self) -> Result<()> {
        if self.classes.is_empty() {
            return Err(Error::invalid("distribution.classes", "need at least one class"));
        }
        if self.classes.len() != self.weights.len() {
            return Err(Error::invalid(
                "distribution.weights",
                format!("{} weights for {} classes", self.weights.len(), self.classes.len()),
            ));
        }
        for (k, &w) in self.weights.iter().enumerate() {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::invalid(format!("distribution.weights[{k}]"), format!("must be >= 0, got {w}")));
            }
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("distribution.weights", format!("must sum to 1, sum is {total}")));
        }
        Ok(())
    }

    pub fn validate(&self, regime: Regime) -> Result<()> {
        self.validate_weights()?;
        for (k, c) in self.classes.iter().enumerate() {
            c.validate(regime, &format!("distribution.classes[{k}]"))?;
        }
        Ok(())
    }

    pub fn has_terminal_override(&self) -> bool {
        self.classes.iter().any(AgentClass::has_terminal_override)
    }
}

fn finite(field: &str, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::invalid(field, format!("must be finite, got {v}")));
    }
    Ok(())
}

fn positive(field: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::invalid(field, format!("must be > 0, got {v}")));
    }
    Ok(())
}

fn unit_interval(field: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && (0.0..=1.0).contains(&v)) {
        return Err(Error::invalid(field, format!("must lie in [0,1], got {v}")));
    }
    Ok(())
}
