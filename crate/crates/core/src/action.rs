//! Optimal probabilistic action on a single edge.
//!
//! Changing the weight of edge `e` by `dw` changes the pseudoinverse by
//! `f * M_e` where `M_e` is fixed by the edge and
//! `f = -(dw/w) / (1 + (dw/w) x)`, `x = w_e Omega_e`. Deletion and
//! contraction are the limits `dw/w -> -1` and `dw/w -> +inf`, with
//! `f_d = 1/(1-x)` and `f_c = -1/x`.
//!
//! The action minimises `m_e^2 E[f^2] - beta^2 E[r]` subject to `E[f] = 0`.
//! The solution has three regimes in `beta`:
//!
//! ```text
//! beta <= min(b1d, b1c)        no action
//! min(b1d, b1c) < beta < b2    one of delete/contract with prob 1 - b1a/beta,
//!                              otherwise reweight so that E[f] = 0
//! beta >= b2                   delete w.p. 1-x, contract w.p. x
//!
//! b1d = m / ((1-x) sqrt(r_d))   b1c = m / (x sqrt(r_c))
//! b2  = m / (x (1-x) (sqrt(r_d) + sqrt(r_c)))
//! ```
//!
//! `b2` is a mediant of `b1d` and `b1c`, so the intermediate regime uses the
//! branch with the smaller threshold and never overlaps the larger one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `x` within this distance of 1 is treated as a bridge.
pub const BRIDGE_TOLERANCE: f64 = 1e-9;

/// Which items a reduction counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Priority {
    /// Deletion removes one edge; contraction removes `1 + tau_e`.
    Edges,
    /// Deletion removes nothing; contraction removes one node.
    Nodes,
}

impl Priority {
    pub fn r_delete(self) -> f64 {
        match self {
            Priority::Edges => 1.0,
            Priority::Nodes => 0.0,
        }
    }

    pub fn r_contract(self, triangles: usize) -> f64 {
        match self {
            Priority::Edges => 1.0 + triangles as f64,
            Priority::Nodes => 1.0,
        }
    }
}

impl std::str::FromStr for Priority {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "edges" => Ok(Priority::Edges),
            "nodes" => Ok(Priority::Nodes),
            other => Err(Error::InvalidParameter(format!("unknown priority '{other}'"))),
        }
    }
}

/// Per-edge inputs to the action solver.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeQuantities {
    /// `w_e Omega_e`, in `(0, 1]`.
    pub x: f64,
    pub m: f64,
    pub triangles: usize,
    pub priority: Priority,
}

impl EdgeQuantities {
    /// Validates the scalars, snapping `x` to 1 within [`BRIDGE_TOLERANCE`].
    pub fn new(x: f64, m: f64, triangles: usize, priority: Priority) -> Result<Self> {
        if !(x.is_finite() && x > 0.0 && x <= 1.0 + BRIDGE_TOLERANCE) {
            return Err(Error::InvalidParameter(format!(
                "w_e*Omega_e = {x} outside (0, 1]"
            )));
        }
        if !(m.is_finite() && m > 0.0) {
            return Err(Error::InvalidParameter(format!("m_e = {m} must be positive")));
        }
        let x = if x >= 1.0 - BRIDGE_TOLERANCE { 1.0 } else { x };
        Ok(Self {
            x,
            m,
            triangles,
            priority,
        })
    }

    pub fn r_delete(&self) -> f64 {
        self.priority.r_delete()
    }

    pub fn r_contract(&self) -> f64 {
        self.priority.r_contract(self.triangles)
    }

    pub fn is_bridge(&self) -> bool {
        self.x >= 1.0
    }

    /// `f` for deletion, infinite for a bridge.
    pub fn f_delete(&self) -> f64 {
        if self.is_bridge() {
            f64::INFINITY
        } else {
            1.0 / (1.0 - self.x)
        }
    }

    pub fn f_contract(&self) -> f64 {
        -1.0 / self.x
    }
}

/// `f(dw/w, x) = -(dw/w) / (1 + (dw/w) x)`, including both limits.
pub fn f_scalar(relative_change: f64, x: f64) -> Result<f64> {
    if relative_change.is_nan() || relative_change < -1.0 {
        return Err(Error::InvalidParameter(format!(
            "relative weight change {relative_change} below -1"
        )));
    }
    if relative_change == -1.0 {
        if x >= 1.0 {
            return Err(Error::InvalidParameter(
                "deleting a bridge (x = 1) makes f diverge".into(),
            ));
        }
        return Ok(1.0 / (1.0 - x));
    }
    if relative_change == f64::INFINITY {
        return Ok(-1.0 / x);
    }
    Ok(-relative_change / (1.0 + relative_change * x))
}

/// Inverse of [`f_scalar`] in its first argument.
pub fn relative_change_for(f: f64, x: f64) -> f64 {
    let denominator = 1.0 + f * x;
    if denominator <= 0.0 {
        f64::INFINITY
    } else {
        -f / denominator
    }
}

/// Values of `beta` separating the three regimes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeThresholds {
    pub beta_1d: f64,
    pub beta_1c: f64,
    pub beta_2: f64,
}

impl RegimeThresholds {
    pub fn beta_1(&self) -> f64 {
        self.beta_1d.min(self.beta_1c)
    }

    /// The intermediate regime contracts on ties.
    pub fn prefers_contraction(&self) -> bool {
        self.beta_1c <= self.beta_1d
    }
}

pub fn thresholds(eq: &EdgeQuantities) -> RegimeThresholds {
    let (x, m) = (eq.x, eq.m);
    let (rd, rc) = (eq.r_delete(), eq.r_contract());
    let beta_1d = if rd == 0.0 || eq.is_bridge() {
        f64::INFINITY
    } else {
        m / ((1.0 - x) * rd.sqrt())
    };
    let beta_1c = m / (x * rc.sqrt());
    let beta_2 = if eq.is_bridge() {
        f64::INFINITY
    } else {
        m / (x * (1.0 - x) * (rd.sqrt() + rc.sqrt()))
    };
    RegimeThresholds {
        beta_1d,
        beta_1c,
        beta_2,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    NoAction,
    DeleteOrReweight,
    ContractOrReweight,
    DeleteOrContract,
}

/// Outcomes available to the solver.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionSpace {
    /// Deletion, contraction and unbounded reweighting.
    Full,
    /// Sparsification only: no contraction, and reweights bounded by
    /// `dw/w <= max_reweight`, which caps `p_d` at
    /// `max_reweight (1-x) / (1 + max_reweight)`.
    DeletionOnly { max_reweight: f64 },
}

impl ActionSpace {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ActionSpace::Full => Ok(()),
            ActionSpace::DeletionOnly { max_reweight } if max_reweight > 0.0 && max_reweight.is_finite() => Ok(()),
            ActionSpace::DeletionOnly { max_reweight } => Err(Error::InvalidParameter(format!(
                "max_reweight = {max_reweight} must be positive and finite"
            ))),
        }
    }
}

/// What happens to a sampled edge.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeAction {
    Keep,
    Delete,
    Contract,
    /// Multiply the weight by `1 + factor`.
    Reweight(f64),
}

/// Probabilities of each outcome and the reweight used otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionDistribution {
    pub p_delete: f64,
    pub p_contract: f64,
    pub p_reweight: f64,
    /// `dw / w` applied when reweighting.
    pub reweight: f64,
    pub f_delete: f64,
    pub f_contract: f64,
    pub f_reweight: f64,
    pub regime: Regime,
}

impl ActionDistribution {
    pub fn none(eq: &EdgeQuantities) -> Self {
        Self {
            p_delete: 0.0,
            p_contract: 0.0,
            p_reweight: 1.0,
            reweight: 0.0,
            f_delete: eq.f_delete(),
            f_contract: eq.f_contract(),
            f_reweight: 0.0,
            regime: Regime::NoAction,
        }
    }

    /// Completes `(p_d, p_c)` with the reweight that makes `E[f] = 0`.
    pub fn from_probabilities(eq: &EdgeQuantities, p_delete: f64, p_contract: f64, regime: Regime) -> Self {
        let f_delete = eq.f_delete();
        let f_contract = eq.f_contract();
        let p_reweight = 1.0 - p_delete - p_contract;
        let mut drift = p_contract * f_contract;
        if p_delete > 0.0 {
            drift += p_delete * f_delete;
        }
        let (f_reweight, reweight) = if regime == Regime::DeleteOrContract || p_reweight <= 0.0 {
            (0.0, 0.0)
        } else {
            let f = -drift / p_reweight;
            (f, relative_change_for(f, eq.x))
        };
        Self {
            p_delete,
            p_contract,
            p_reweight: if regime == Regime::DeleteOrContract { 0.0 } else { p_reweight },
            reweight,
            f_delete,
            f_contract,
            f_reweight,
            regime,
        }
    }

    fn outcomes(&self) -> [(f64, f64); 3] {
        [
            (self.p_delete, self.f_delete),
            (self.p_contract, self.f_contract),
            (self.p_reweight, self.f_reweight),
        ]
    }

    /// `E[f]`, zero for every valid distribution.
    pub fn mean_f(&self) -> f64 {
        self.outcomes()
            .iter()
            .filter(|(p, _)| *p > 0.0)
            .map(|(p, f)| p * f)
            .sum()
    }

    pub fn mean_f_squared(&self) -> f64 {
        self.outcomes()
            .iter()
            .filter(|(p, _)| *p > 0.0)
            .map(|(p, f)| p * f * f)
            .sum()
    }

    /// `E[r] = r_d p_d + r_c p_c`.
    pub fn expected_reduction(&self, eq: &EdgeQuantities) -> f64 {
        eq.r_delete() * self.p_delete + eq.r_contract() * self.p_contract
    }

    /// `m_e^2 E[f^2] - beta^2 E[r]`.
    pub fn cost(&self, eq: &EdgeQuantities, beta: f64) -> f64 {
        eq.m * eq.m * self.mean_f_squared() - beta * beta * self.expected_reduction(eq)
    }

    /// Maps a uniform draw `u` in `[0, 1)` to an outcome.
    pub fn sample(&self, u: f64) -> EdgeAction {
        if u < self.p_delete {
            EdgeAction::Delete
        } else if self.regime == Regime::DeleteOrContract || u < self.p_delete + self.p_contract {
            EdgeAction::Contract
        } else if self.reweight == 0.0 {
            EdgeAction::Keep
        } else {
            EdgeAction::Reweight(self.reweight)
        }
    }
}

/// Minimiser of the single-edge cost over all outcomes.
pub fn optimal_action(eq: &EdgeQuantities, beta: f64) -> Result<ActionDistribution> {
    optimal_action_in(eq, beta, ActionSpace::Full)
}

pub fn optimal_action_in(eq: &EdgeQuantities, beta: f64, space: ActionSpace) -> Result<ActionDistribution> {
    if beta.is_nan() || beta < 0.0 {
        return Err(Error::InvalidParameter(format!("beta = {beta} must be >= 0")));
    }
    let t = thresholds(eq);
    match space {
        ActionSpace::Full => {
            if beta >= t.beta_2 {
                return Ok(ActionDistribution::from_probabilities(
                    eq,
                    1.0 - eq.x,
                    eq.x,
                    Regime::DeleteOrContract,
                ));
            }
            if beta <= t.beta_1() {
                return Ok(ActionDistribution::none(eq));
            }
            if t.prefers_contraction() {
                let p = 1.0 - t.beta_1c / beta;
                Ok(ActionDistribution::from_probabilities(eq, 0.0, p, Regime::ContractOrReweight))
            } else {
                let p = 1.0 - t.beta_1d / beta;
                Ok(ActionDistribution::from_probabilities(eq, p, 0.0, Regime::DeleteOrReweight))
            }
        }
        ActionSpace::DeletionOnly { max_reweight } => {
            space.validate()?;
            if beta <= t.beta_1d {
                return Ok(ActionDistribution::none(eq));
            }
            let cap = deletion_cap(eq, max_reweight);
            let p = (1.0 - t.beta_1d / beta).min(cap);
            Ok(ActionDistribution::from_probabilities(eq, p, 0.0, Regime::DeleteOrReweight))
        }
    }
}

fn deletion_cap(eq: &EdgeQuantities, max_reweight: f64) -> f64 {
    max_reweight * (1.0 - eq.x) / (1.0 + max_reweight)
}

/// Smallest `beta` at which the optimal action has `E[r] >= d`; infinite when
/// no `beta` reaches `d`.
pub fn beta_star(eq: &EdgeQuantities, d: f64) -> Result<f64> {
    beta_star_in(eq, d, ActionSpace::Full)
}

pub fn beta_star_in(eq: &EdgeQuantities, d: f64, space: ActionSpace) -> Result<f64> {
    if d.is_nan() || d <= 0.0 {
        return Err(Error::InvalidParameter(format!("d = {d} must be positive")));
    }
    let t = thresholds(eq);
    match space {
        ActionSpace::Full => {
            let (beta_1a, r_a) = if t.prefers_contraction() {
                (t.beta_1c, eq.r_contract())
            } else {
                (t.beta_1d, eq.r_delete())
            };
            if d < r_a {
                let candidate = beta_1a / (1.0 - d / r_a);
                if candidate < t.beta_2 {
                    return Ok(candidate);
                }
            }
            let saturated = if eq.is_bridge() {
                // p_c only approaches 1 as beta grows
                f64::NEG_INFINITY
            } else {
                eq.r_delete() * (1.0 - eq.x) + eq.r_contract() * eq.x
            };
            if d <= saturated {
                Ok(t.beta_2)
            } else {
                Ok(f64::INFINITY)
            }
        }
        ActionSpace::DeletionOnly { max_reweight } => {
            space.validate()?;
            let rd = eq.r_delete();
            if rd == 0.0 || d / rd > deletion_cap(eq, max_reweight) {
                Ok(f64::INFINITY)
            } else {
                Ok(t.beta_1d / (1.0 - d / rd))
            }
        }
    }
}

/// Expected squared Frobenius change `m_e^2 E[f^2]` of the lifted
/// pseudoinverse.
pub fn expected_error(eq: &EdgeQuantities, dist: &ActionDistribution) -> f64 {
    eq.m * eq.m * dist.mean_f_squared()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn triangle_edge() -> EdgeQuantities {
        EdgeQuantities::new(2.0 / 3.0, 2.0 / 9.0, 1, Priority::Edges).unwrap()
    }

    #[test]
    fn f_scalar_limits() {
        assert_eq!(f_scalar(0.0, 0.3).unwrap(), 0.0);
        assert_relative_eq!(f_scalar(-1.0, 0.5).unwrap(), 2.0);
        assert_relative_eq!(f_scalar(f64::INFINITY, 2.0 / 3.0).unwrap(), -1.5);
        assert!(f_scalar(-1.0, 1.0).is_err());
        assert!(f_scalar(-1.5, 0.5).is_err());
        // large finite changes approach the contraction limit
        assert_relative_eq!(f_scalar(1e12, 0.25).unwrap(), -4.0, epsilon = 1e-9);
    }

    #[test]
    fn relative_change_inverts_f() {
        for &(a, x) in &[(0.8, 0.25), (-0.5, 0.6), (3.0, 0.1)] {
            let f = f_scalar(a, x).unwrap();
            assert_relative_eq!(relative_change_for(f, x), a, epsilon = 1e-12);
        }
    }

    #[test]
    fn triangle_thresholds() {
        let t = thresholds(&triangle_edge());
        assert_relative_eq!(t.beta_1c, 1.0 / (3.0 * 2f64.sqrt()), epsilon = 1e-12);
        assert_relative_eq!(t.beta_1d, 2.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(t.beta_2, 1.0 / (1.0 + 2f64.sqrt()), epsilon = 1e-12);
    }

    #[test]
    fn symmetric_edge_has_empty_intermediate_regime() {
        let eq = EdgeQuantities::new(0.5, 1.0, 0, Priority::Edges).unwrap();
        let t = thresholds(&eq);
        assert_relative_eq!(t.beta_1d, 2.0);
        assert_relative_eq!(t.beta_1c, 2.0);
        assert_relative_eq!(t.beta_2, 2.0);
        assert!(t.prefers_contraction());
    }

    #[test]
    fn node_priority_never_deletes_in_between() {
        let eq = EdgeQuantities::new(0.3, 0.7, 4, Priority::Nodes).unwrap();
        let t = thresholds(&eq);
        assert!(t.beta_1d.is_infinite());
        let mid = 0.5 * (t.beta_1c + t.beta_2);
        let a = optimal_action(&eq, mid).unwrap();
        assert_eq!(a.regime, Regime::ContractOrReweight);
        assert_eq!(a.p_delete, 0.0);
    }

    #[test]
    fn deletion_branch_example() {
        let eq = EdgeQuantities::new(0.25, 1.0, 0, Priority::Edges).unwrap();
        let a = optimal_action(&eq, 2.0).unwrap();
        assert_eq!(a.regime, Regime::DeleteOrReweight);
        assert_relative_eq!(a.p_delete, 1.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(a.f_reweight, -2.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(a.reweight, 0.8, epsilon = 1e-12);
        assert!(a.mean_f().abs() < 1e-12);
        assert_relative_eq!(expected_error(&eq, &a), 8.0 / 9.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_beta_is_no_action() {
        let a = optimal_action(&triangle_edge(), 0.0).unwrap();
        assert_eq!(a.regime, Regime::NoAction);
        assert_eq!(a.sample(0.0), EdgeAction::Keep);
        assert_eq!(expected_error(&triangle_edge(), &a), 0.0);
    }

    #[test]
    fn large_beta_deletes_or_contracts() {
        let eq = triangle_edge();
        let a = optimal_action(&eq, 10.0).unwrap();
        assert_eq!(a.regime, Regime::DeleteOrContract);
        assert_relative_eq!(a.p_delete, 1.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(a.p_contract, 2.0 / 3.0, epsilon = 1e-12);
        assert_eq!(a.p_reweight, 0.0);
        assert_relative_eq!(expected_error(&eq, &a), 2.0 / 9.0, epsilon = 1e-12);
        assert_eq!(a.sample(0.2), EdgeAction::Delete);
        assert_eq!(a.sample(0.99999), EdgeAction::Contract);
    }

    #[test]
    fn bridges_are_never_deleted() {
        let eq = EdgeQuantities::new(1.0 - 1e-12, 0.4, 0, Priority::Edges).unwrap();
        assert!(eq.is_bridge());
        for beta in [0.1, 1.0, 10.0, 1e6] {
            let a = optimal_action(&eq, beta).unwrap();
            assert_eq!(a.p_delete, 0.0);
            assert!(a.mean_f().abs() < 1e-9);
        }
    }

    #[test]
    fn triangle_beta_star() {
        // frozen from an independent numerical minimisation + bisection
        let b = beta_star(&triangle_edge(), 0.25).unwrap();
        assert_relative_eq!(b, 0.269_374_012, epsilon = 1e-8);
        let a = optimal_action(&triangle_edge(), b).unwrap();
        assert_relative_eq!(a.expected_reduction(&triangle_edge()), 0.25, epsilon = 1e-12);
    }

    #[test]
    fn beta_star_small_d_approaches_beta_1() {
        let eq = triangle_edge();
        let b = beta_star(&eq, 1e-9).unwrap();
        assert_relative_eq!(b, thresholds(&eq).beta_1(), epsilon = 1e-8);
    }

    #[test]
    fn beta_star_unreachable_under_node_priority() {
        let eq = EdgeQuantities::new(0.1, 1.0, 0, Priority::Nodes).unwrap();
        assert!(beta_star(&eq, 0.25).unwrap().is_infinite());
        assert!(beta_star(&eq, 0.0).is_err());
        assert!(beta_star(&eq, -1.0).is_err());
    }

    #[test]
    fn beta_star_falls_back_to_beta_2() {
        // d just below the saturated reduction r_d(1-x) + r_c x
        let eq = triangle_edge();
        let t = thresholds(&eq);
        let saturated = 1.0 / 3.0 + 2.0 * 2.0 / 3.0;
        let b = beta_star(&eq, saturated - 1e-6).unwrap();
        assert_relative_eq!(b, t.beta_2, epsilon = 1e-12);
        assert!(beta_star(&eq, saturated + 1e-6).unwrap().is_infinite());
    }

    #[test]
    fn deletion_only_space() {
        let space = ActionSpace::DeletionOnly { max_reweight: 1.0 };
        let eq = EdgeQuantities::new(0.2, 1.0, 3, Priority::Edges).unwrap();
        let a = optimal_action_in(&eq, 1e6, space).unwrap();
        assert_eq!(a.p_contract, 0.0);
        assert_relative_eq!(a.p_delete, 0.4, epsilon = 1e-12);
        assert_relative_eq!(a.reweight, 1.0, epsilon = 1e-12);
        assert!(a.mean_f().abs() < 1e-12);
        let b = beta_star_in(&eq, 0.25, space).unwrap();
        assert_relative_eq!(b, thresholds(&eq).beta_1d / 0.75, epsilon = 1e-12);
        let wide = EdgeQuantities::new(0.6, 1.0, 0, Priority::Edges).unwrap();
        assert!(beta_star_in(&wide, 0.25, space).unwrap().is_infinite());
        assert!(ActionSpace::DeletionOnly { max_reweight: 0.0 }.validate().is_err());
    }

    #[test]
    fn rejects_invalid_quantities() {
        assert!(EdgeQuantities::new(0.0, 1.0, 0, Priority::Edges).is_err());
        assert!(EdgeQuantities::new(1.1, 1.0, 0, Priority::Edges).is_err());
        assert!(EdgeQuantities::new(0.5, 0.0, 0, Priority::Edges).is_err());
        assert!(optimal_action(&triangle_edge(), -1.0).is_err());
    }

    #[test]
    fn priority_counts() {
        assert_eq!(Priority::Edges.r_contract(3), 4.0);
        assert_eq!(Priority::Nodes.r_contract(3), 1.0);
        assert_eq!(Priority::Nodes.r_delete(), 0.0);
    }
}
