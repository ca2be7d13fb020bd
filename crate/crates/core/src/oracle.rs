//! Grid-search reference for the single-edge action.
//!
//! Evaluates the constrained cost directly on a grid over
//! `0 <= p_d <= 1 - x`, `0 <= p_c <= x`, with the reweight fixed by
//! `E[f] = 0`. It shares no code with the closed-form solver in
//! [`crate::action`] beyond the input type.

use rayon::prelude::*;

use crate::action::{ActionDistribution, EdgeQuantities, Regime};
use crate::error::{Error, Result};

/// Cost `m^2 (p_d f_d^2 + p_c f_c^2 + s^2 / p_r) - beta^2 (r_d p_d + r_c p_c)`
/// where `s = p_d f_d + p_c f_c` and `p_r = 1 - p_d - p_c`.
pub fn constrained_cost(eq: &EdgeQuantities, beta: f64, p_delete: f64, p_contract: f64) -> f64 {
    let x = eq.x;
    let fc = -1.0 / x;
    let (mut second, mut drift) = (p_contract * fc * fc, p_contract * fc);
    if p_delete > 0.0 {
        let fd = 1.0 / (1.0 - x);
        second += p_delete * fd * fd;
        drift += p_delete * fd;
    }
    let rest = 1.0 - p_delete - p_contract;
    let reweight_term = if rest.abs() < 1e-12 {
        if drift.abs() < 1e-9 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        drift * drift / rest
    };
    let reduction = eq.r_delete() * p_delete + eq.r_contract() * p_contract;
    eq.m * eq.m * (second + reweight_term) - beta * beta * reduction
}

/// Grid argmin of [`constrained_cost`] with `grid_n` points per axis.
pub fn brute_force_action_oracle(eq: &EdgeQuantities, beta: f64, grid_n: usize) -> Result<ActionDistribution> {
    if grid_n < 2 {
        return Err(Error::InvalidParameter("grid needs at least 2 points".into()));
    }
    let cap_d = if eq.is_bridge() { 0.0 } else { 1.0 - eq.x };
    let cap_c = eq.x;
    let nd = if cap_d == 0.0 { 1 } else { grid_n };
    let at = |cap: f64, i: usize, n: usize| {
        if n == 1 {
            0.0
        } else if i == n - 1 {
            cap
        } else {
            cap * i as f64 / (n - 1) as f64
        }
    };
    let min = (0..nd)
        .into_par_iter()
        .map(|i| {
            let pd = at(cap_d, i, nd);
            (0..grid_n)
                .map(|j| constrained_cost(eq, beta, pd, at(cap_c, j, grid_n)))
                .fold(f64::INFINITY, f64::min)
        })
        .reduce(|| f64::INFINITY, f64::min);
    // Near-ties (the flat segment at p_c = x when deletion reduces nothing,
    // or beta = b2 exactly) resolve towards the pure delete/contract corner,
    // the same convention as the closed form.
    let tie = 1e-12 * (min.abs() + eq.m * eq.m + beta * beta);
    let (_, best_i, best_j) = (0..nd)
        .flat_map(|i| (0..grid_n).map(move |j| (i, j)))
        .filter(|&(i, j)| constrained_cost(eq, beta, at(cap_d, i, nd), at(cap_c, j, grid_n)) <= min + tie)
        .map(|(i, j)| {
            let (pd, pc) = (at(cap_d, i, nd), at(cap_c, j, grid_n));
            (pd + pc, i, j)
        })
        .fold((f64::NEG_INFINITY, 0, 0), |a, b| if (b.0, b.1) > (a.0, a.1) { b } else { a });
    let pd = at(cap_d, best_i, nd);
    let pc = at(cap_c, best_j, grid_n);
    // No reweight mass left: both probabilities at their caps.
    let corner = best_i == nd - 1 && best_j == grid_n - 1;
    let regime = match (best_i == 0, best_j == 0) {
        _ if corner => Regime::DeleteOrContract,
        (true, true) => Regime::NoAction,
        (false, true) => Regime::DeleteOrReweight,
        (true, false) => Regime::ContractOrReweight,
        (false, false) => {
            return Err(Error::InvalidParameter(format!(
                "grid minimum at interior point ({pd}, {pc}) mixes all three outcomes"
            )))
        }
    };
    Ok(ActionDistribution::from_probabilities(eq, pd, pc, regime))
}
