use std::collections::BTreeMap;
use std::fmt;
use std::iter::Sum;
use std::ops::Add;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CascadeError;
use crate::dataset::ModelOutput;

/// Picodollars per USD.
const PICO: u128 = 1_000_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Small,
    Large,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Small => "small",
            Role::Large => "large",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelPrice {
    pub input_per_million_usd: f64,
    pub output_per_million_usd: f64,
}

impl ModelPrice {
    pub fn new(input_per_million_usd: f64, output_per_million_usd: f64) -> Self {
        Self { input_per_million_usd, output_per_million_usd }
    }
}

/// Per-role token prices.
///
/// Prices are converted to whole picodollars per token on use
/// (`per_million * 1e6`, rounded), so every cost below is an exact integer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PricingTable {
    roles: BTreeMap<Role, ModelPrice>,
}

impl PricingTable {
    pub fn new(small: ModelPrice, large: ModelPrice) -> Result<Self, CascadeError> {
        Self::from_roles([(Role::Small, small), (Role::Large, large)].into())
    }

    pub fn from_roles(roles: BTreeMap<Role, ModelPrice>) -> Result<Self, CascadeError> {
        for (role, p) in &roles {
            for v in [p.input_per_million_usd, p.output_per_million_usd] {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(CascadeError::InvalidPricing(format!("{role}: price {v} must be finite and >= 0")));
                }
            }
        }
        Ok(Self { roles })
    }

    pub fn from_json(text: &str) -> Result<Self, CascadeError> {
        let roles = serde_json::from_str(text).map_err(|e| CascadeError::InvalidPricing(e.to_string()))?;
        Self::from_roles(roles)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CascadeError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| CascadeError::InvalidPricing(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn roles(&self) -> &BTreeMap<Role, ModelPrice> {
        &self.roles
    }

    pub fn price(&self, role: Role) -> Result<&ModelPrice, CascadeError> {
        self.roles.get(&role).ok_or(CascadeError::MissingPricing(role))
    }

    /// Every price multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self, CascadeError> {
        let roles = self
            .roles
            .iter()
            .map(|(&r, p)| (r, ModelPrice::new(p.input_per_million_usd * factor, p.output_per_million_usd * factor)))
            .collect();
        Self::from_roles(roles)
    }

    /// Exact cost of one call in picodollars.
    pub fn call_cost(&self, role: Role, input_tokens: u64, output_tokens: u64) -> Result<Usd, CascadeError> {
        let p = self.price(role)?;
        let per_token = |per_million: f64| (per_million * 1e6).round() as u128;
        Ok(Usd::from_pico(
            u128::from(input_tokens) * per_token(p.input_per_million_usd)
                + u128::from(output_tokens) * per_token(p.output_per_million_usd),
        ))
    }
}

/// Token-weighted cost of one model output.
pub fn cost_per_decision(output: &ModelOutput, role: Role, pricing: &PricingTable) -> Result<Usd, CascadeError> {
    pricing.call_cost(role, output.input_tokens, output.output_tokens)
}

/// An exact amount of money in picodollars.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Usd(u128);

impl Usd {
    pub const ZERO: Usd = Usd(0);

    pub fn from_pico(pico: u128) -> Self {
        Usd(pico)
    }

    pub fn pico(self) -> u128 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64 / PICO as f64
    }

    /// `self / n` as a float in USD.
    pub fn per(self, n: usize) -> f64 {
        self.as_f64() / n as f64
    }

    /// Rendered with six fractional digits, rounding half up.
    pub fn to_fixed6(self) -> String {
        let micro = (self.0 + 500_000) / 1_000_000;
        format!("{}.{:06}", micro / 1_000_000, micro % 1_000_000)
    }
}

impl Add for Usd {
    type Output = Usd;

    fn add(self, rhs: Usd) -> Usd {
        Usd(self.0 + rhs.0)
    }
}

impl Sum for Usd {
    fn sum<I: Iterator<Item = Usd>>(iter: I) -> Usd {
        Usd(iter.map(|u| u.0).sum())
    }
}

impl fmt::Display for Usd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "${}", self.to_fixed6())
    }
}
