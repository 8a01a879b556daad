//! Jet determinacy and order estimation.
//!
//! Level `j` perturbs a base section by `B·q` where `B` is a bump equal to
//! `1` near `x` and `q` only has monomials `(y - x)^I` with
//! `j + 1 <= |I| <= j + 2`. Such a perturbation leaves `j^k_x s` unchanged
//! for every `k <= j`, so the witnesses admissible at `k` are the union of
//! levels `j >= k`. Those sets are nested, which makes the pass table
//! monotone in `k`.

use rayon::prelude::*;
use serde::Serialize;

use super::{
    base_section, perturbation_trial, random_polynomial, stream, ProbeConfig, ProbeError, ProbeVerdict, Status,
    TAG_DETERMINACY,
};
use crate::expr::Expr;
use crate::operator::OperatorHandle;

/// Radii of the plateau and support of the determinacy bump.
const BUMP_INNER: f64 = 0.25;
const BUMP_OUTER: f64 = 0.5;

fn level_terms(x: &[f64], level: usize, trial: usize, rank: usize, cfg: &ProbeConfig) -> Vec<Expr> {
    let mut rng = stream(cfg.seed, TAG_DETERMINACY, level as u64, trial as u64);
    let bump = Expr::ball_bump(x, BUMP_INNER, BUMP_OUTER);
    (0..rank)
        .map(|_| Expr::mul(bump.clone(), random_polynomial(&mut rng, x, level + 1, level + 2)))
        .collect()
}

fn run_level(h: &OperatorHandle, x: &[f64], level: usize, cfg: &ProbeConfig) -> ProbeVerdict {
    let outcomes = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let s = base_section(h, trial, cfg);
            let terms = level_terms(x, level, trial, s.rank(), cfg);
            perturbation_trial(h, &s, x, &terms, trial, cfg)
        })
        .collect();
    ProbeVerdict::from_outcomes(outcomes)
}

fn check_order(k: usize, cfg: &ProbeConfig) -> Result<(), ProbeError> {
    cfg.validate()?;
    if k + 2 > cfg.working_order {
        return Err(ProbeError::OrderTooLarge { k, needed: k + 2 });
    }
    Ok(())
}

/// Does `h(s)(x)` depend only on `j^k_x s`? One level of perturbations.
pub fn check_jet_determinacy(
    h: &OperatorHandle,
    x: &[f64],
    k: usize,
    cfg: &ProbeConfig,
) -> Result<ProbeVerdict, ProbeError> {
    check_order(k, cfg)?;
    Ok(run_level(h, x, k, cfg))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelReport {
    pub k: usize,
    pub status: Status,
    /// A perturbation preserving `j^k_x s` that changed the value.
    pub witness: Option<super::Witness>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderEstimate {
    Order(usize),
    ExceedsKMax,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderVerdict {
    pub point: Vec<f64>,
    pub k_max: usize,
    pub table: Vec<LevelReport>,
    pub estimate: OrderEstimate,
}

impl OrderVerdict {
    pub fn order(&self) -> Option<usize> {
        match self.estimate {
            OrderEstimate::Order(k) => Some(k),
            _ => None,
        }
    }
}

/// Smallest `k <= k_max` at which every admissible witness agrees.
pub fn estimate_order(h: &OperatorHandle, x: &[f64], k_max: usize, cfg: &ProbeConfig) -> Result<OrderVerdict, ProbeError> {
    check_order(k_max, cfg)?;
    let levels: Vec<ProbeVerdict> = (0..=k_max).into_par_iter().map(|j| run_level(h, x, j, cfg)).collect();
    // fold from the top: k inherits every level above it
    let mut table = Vec::with_capacity(levels.len());
    let mut status = Status::Pass;
    let mut witness = None;
    for (k, level) in levels.iter().enumerate().rev() {
        match level.status {
            Status::Fail => {
                status = Status::Fail;
                witness = level.witnesses.first().cloned();
            }
            Status::Inconclusive if status == Status::Pass => status = Status::Inconclusive,
            _ => {}
        }
        table.push(LevelReport { k, status, witness: witness.clone() });
    }
    table.reverse();
    let estimate = match table.iter().find(|r| r.status != Status::Fail) {
        Some(r) if r.status == Status::Pass => OrderEstimate::Order(r.k),
        Some(_) => OrderEstimate::Inconclusive,
        None => OrderEstimate::ExceedsKMax,
    };
    Ok(OrderVerdict { point: x.to_vec(), k_max, table, estimate })
}

/// [`estimate_order`] at each point, in input order.
pub fn estimate_order_sweep(
    h: &OperatorHandle,
    points: &[Vec<f64>],
    k_max: usize,
    cfg: &ProbeConfig,
) -> Result<Vec<OrderVerdict>, ProbeError> {
    points.par_iter().map(|x| estimate_order(h, x, k_max, cfg)).collect()
}
