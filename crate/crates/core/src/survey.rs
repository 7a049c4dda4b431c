//! Exhaustive survey of controlled deterministic automata and the
//! classification of their autocorrelation behavior.

use rayon::prelude::*;

use crate::circuit::{Boundary, CircuitSpec};
use crate::correlator::{autocorrelation, period_values};
use crate::error::{Error, Result};
use crate::families::permutation_matrix;
use crate::fit::{fit_decay, FitFlag};
use crate::gate::{check_bcs, check_cs, traceless_basis, ControlledGate};
use crate::schmidt::operator_schmidt;

/// Autocorrelation behavior classes. Severity increases in declaration
/// order; a gate inherits the worst class over its observables and origins.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum BehaviorClass {
    /// `C(0, t) = 0` for every t >= 1 period.
    IdenticallyZero,
    /// Decays exponentially within the fit window.
    ExponentialDecay,
    /// Stabilizes at a nonzero constant: some local states never update.
    ConstantPlateau,
    /// Nothing above fits.
    Other,
}

impl std::fmt::Display for BehaviorClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BehaviorClass::IdenticallyZero => write!(f, "identically-zero"),
            BehaviorClass::ExponentialDecay => write!(f, "exponential-decay"),
            BehaviorClass::ConstantPlateau => write!(f, "constant-plateau"),
            BehaviorClass::Other => write!(f, "other"),
        }
    }
}

/// Classify one per-period autocorrelation series with the atlas thresholds,
/// applied in order: identically zero (max |C| < 1e-12 beyond t = 0), then
/// constant (|C(T) - C(T/2)| < 1e-10 at |C(T)| > 1e-8), then exponential
/// (log-scale fit residual < 0.1), else other.
pub fn classify_series(series: &[f64]) -> (BehaviorClass, Option<f64>, f64) {
    let fit = fit_decay(series);
    let n = series.len();
    let settled = n >= 3
        && (series[n - 1] - series[n / 2]).abs() < 1e-10
        && series[n - 1].abs() > 1e-8;
    let class = match fit.flag {
        FitFlag::IdenticallyZero => BehaviorClass::IdenticallyZero,
        _ if settled => BehaviorClass::ConstantPlateau,
        FitFlag::Constant => BehaviorClass::ConstantPlateau,
        FitFlag::Ok => {
            if fit.residual.unwrap_or(f64::INFINITY) < 0.1 {
                BehaviorClass::ExponentialDecay
            } else {
                BehaviorClass::Other
            }
        }
        FitFlag::Degenerate => BehaviorClass::Other,
    };
    let plateau = if settled { series[n - 1] } else { fit.plateau };
    (class, fit.rate, plateau)
}

/// Survey result for one gate and one origin sublattice, worst case over the
/// traceless-basis observables.
#[derive(Clone, Debug)]
pub struct SurveyRecord {
    /// Index of the gate in the enumeration order.
    pub gate_index: usize,
    /// The permutation assigned to each control value.
    pub perms: Vec<Vec<usize>>,
    pub origin: usize,
    pub class: BehaviorClass,
    pub rate: Option<f64>,
    pub plateau: f64,
    pub schmidt_rank: usize,
    pub cs: bool,
    pub bcs: bool,
}

/// All `(q!)^q` assignments of permutations to control values, in
/// lexicographic order of the per-control permutation indices.
pub fn enumerate_controlled_permutations(q: usize) -> Result<Vec<ControlledGate>> {
    let perms = all_permutations(q);
    let total = perms.len().checked_pow(q as u32).ok_or_else(|| {
        Error::InvalidParameters(format!("(q!)^q overflows for q={q}"))
    })?;
    if total > 100_000 {
        return Err(Error::InvalidParameters(format!(
            "exhaustive enumeration of {total} gates exceeds the budget; \
             survey larger q by sampling"
        )));
    }
    let mut gates = Vec::with_capacity(total);
    for mut idx in 0..total {
        let mut blocks = Vec::with_capacity(q);
        let mut assignment = vec![0usize; q];
        for slot in (0..q).rev() {
            assignment[slot] = idx % perms.len();
            idx /= perms.len();
        }
        for &a in &assignment {
            blocks.push(permutation_matrix(q, &perms[a])?);
        }
        gates.push(ControlledGate::new(blocks)?);
    }
    Ok(gates)
}

/// The permutation list behind the enumeration, lexicographically ordered.
pub fn all_permutations(q: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, rest: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest.is_empty() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..rest.len() {
            let x = rest.remove(i);
            prefix.push(x);
            rec(prefix, rest, out);
            prefix.pop();
            rest.insert(i, x);
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut (0..q).collect(), &mut out);
    out
}

/// Survey parameters; the default probes N = 10 sites for 8 full periods on
/// both sublattice origins.
#[derive(Clone, Debug)]
pub struct SurveyConfig {
    pub n_sites: usize,
    pub t_periods: usize,
    pub origins: Vec<usize>,
}

impl Default for SurveyConfig {
    fn default() -> Self {
        Self {
            n_sites: 10,
            t_periods: 8,
            origins: vec![0, 1],
        }
    }
}

/// Run the full atlas: every controlled permutation gate, every traceless
/// basis observable, every origin. Gates are independent jobs; the output is
/// ordered by gate index, then origin.
pub fn classify_all(q: usize, config: &SurveyConfig) -> Result<Vec<SurveyRecord>> {
    let gates = enumerate_controlled_permutations(q)?;
    let basis = traceless_basis(q)?;
    let records: Result<Vec<Vec<SurveyRecord>>> = gates
        .par_iter()
        .enumerate()
        .map(|(gate_index, cg)| {
            let gate = cg.assemble();
            let spec = CircuitSpec::new(gate.clone(), config.n_sites, Boundary::Periodic)?;
            let perms: Vec<Vec<usize>> = cg
                .blocks()
                .iter()
                .map(|b| (0..q).map(|j| (0..q).find(|&i| b[(i, j)] == 1.0).unwrap()).collect())
                .collect();
            let schmidt_rank = operator_schmidt(&gate).rank();
            let cs = check_cs(&gate).holds;
            let bcs = check_bcs(&gate).holds;
            let mut out = Vec::with_capacity(config.origins.len());
            for &origin in &config.origins {
                let mut class = BehaviorClass::IdenticallyZero;
                let mut rate = None;
                let mut plateau = 0.0;
                for d in &basis {
                    let series =
                        autocorrelation(&spec, d, origin as i64, 2 * config.t_periods)?;
                    let periods = period_values(&series);
                    let (c, r, p) = classify_series(&periods);
                    if c > class {
                        class = c;
                        rate = r;
                        plateau = p;
                    } else if c == class && rate.is_none() {
                        rate = r;
                        plateau = p;
                    }
                }
                out.push(SurveyRecord {
                    gate_index,
                    perms: perms.clone(),
                    origin,
                    class,
                    rate,
                    plateau,
                    schmidt_rank,
                    cs,
                    bcs,
                });
            }
            Ok(out)
        })
        .collect();
    Ok(records?.into_iter().flatten().collect())
}

/// Gate-level classes (worst case over a gate's records) and their counts,
/// ordered as [identically-zero, exponential-decay, constant-plateau, other].
pub fn class_counts(records: &[SurveyRecord]) -> [usize; 4] {
    use std::collections::BTreeMap;
    let mut per_gate: BTreeMap<usize, BehaviorClass> = BTreeMap::new();
    for r in records {
        per_gate
            .entry(r.gate_index)
            .and_modify(|c| *c = (*c).max(r.class))
            .or_insert(r.class);
    }
    let mut counts = [0usize; 4];
    for class in per_gate.values() {
        counts[*class as usize] += 1;
    }
    counts
}
