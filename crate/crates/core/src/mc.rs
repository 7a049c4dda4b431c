//! Monte-Carlo trajectory sampling of two-point correlators, an independent
//! statistical oracle for the exact contractions.
//!
//! The estimator reads the circuit as a classical Markov process on
//! configurations: `C(x, t) = E[ d(s_x(t)) d(s_0(0)) ]` over uniform initial
//! configurations. Sampling requires controlled structure and per-control
//! blocks that are genuine transition kernels under the matrix orientation
//! used everywhere in this crate: given control `i`, the probability of
//! target `j -> j'` is the `(j', j)` entry of `u_i`, so each block needs
//! nonnegative entries with unit column sums. A self-test pins this
//! orientation against the dense layer application.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::circuit::{Boundary, CircuitSpec, LayerParity};
use crate::error::{Error, Result};
use crate::gate::{ControlledGate, Observable};
use crate::EPS_NONNEG;

/// Sample mean and standard error of a trajectory estimate.
#[derive(Clone, Copy, Debug)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub n_samples: usize,
}

/// Cumulative transition tables per control value, addressed as
/// `cum[ctrl][tgt_in][tgt_out]`.
struct TransitionTable {
    q: usize,
    cum: Vec<f64>,
}

impl TransitionTable {
    fn build(gate: &ControlledGate) -> Result<Self> {
        let q = gate.q();
        let mut cum = vec![0.0; q * q * q];
        for (i, block) in gate.blocks().iter().enumerate() {
            for j_in in 0..q {
                let mut total = 0.0;
                for j_out in 0..q {
                    let p = block[(j_out, j_in)];
                    if p < -EPS_NONNEG {
                        return Err(Error::NotSamplable(format!(
                            "block {i} has negative entry {p:.3e}"
                        )));
                    }
                    total += p.max(0.0);
                    cum[(i * q + j_in) * q + j_out] = total;
                }
                if (total - 1.0).abs() > 1e-10 {
                    return Err(Error::NotSamplable(format!(
                        "block {i} does not conserve probability on input {j_in} \
                         (column sum {total})"
                    )));
                }
            }
        }
        Ok(Self { q, cum })
    }

    fn draw<R: Rng>(&self, ctrl: usize, tgt: usize, rng: &mut R) -> usize {
        let row = &self.cum[(ctrl * self.q + tgt) * self.q..][..self.q];
        let u: f64 = rng.gen();
        for (j, &c) in row.iter().enumerate() {
            if u < c {
                return j;
            }
        }
        self.q - 1
    }
}

/// Trajectory estimate of `C(x, t)`: `n_samples` trajectories from uniform
/// initial configurations, each evolved by sampling gate transitions layer by
/// layer. Trajectory `k` uses RNG stream `k` of the seeded generator, so runs
/// are reproducible and embarrassingly parallel.
pub fn sample_two_point(
    spec: &CircuitSpec,
    d: &Observable,
    origin: i64,
    dx: i64,
    layers: usize,
    n_samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    let q = spec.q();
    if d.q() != q {
        return Err(Error::DimensionMismatch(
            "observable dimension does not match the gate".into(),
        ));
    }
    if n_samples < 2 {
        return Err(Error::InvalidParameters("need at least 2 samples".into()));
    }
    let gate = ControlledGate::split(&spec.gate, 0.0).ok_or_else(|| {
        Error::NotSamplable("gate has no controlled block structure".into())
    })?;
    let table = TransitionTable::build(&gate)?;
    let n = spec.n_sites as i64;
    let (src, obs) = match spec.boundary {
        Boundary::Periodic => (origin.rem_euclid(n) as usize, (origin + dx).rem_euclid(n) as usize),
        Boundary::Open => {
            let x_obs = origin + dx;
            if !(0..n).contains(&origin) || !(0..n).contains(&x_obs) {
                return Err(Error::InvalidParameters(format!(
                    "operator sites ({origin}, {x_obs}) outside the open chain 0..{n}"
                )));
            }
            (origin as usize, x_obs as usize)
        }
    };
    let layer_pairs: Vec<Vec<(usize, usize)>> = (0..layers)
        .map(|l| spec.pairs(LayerParity::of_index(l)))
        .collect();

    let values: Vec<f64> = (0..n_samples)
        .into_par_iter()
        .map(|traj| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(traj as u64);
            let mut config: Vec<usize> =
                (0..spec.n_sites).map(|_| rng.gen_range(0..q)).collect();
            let d0 = d.d()[config[src]];
            for pairs in &layer_pairs {
                for &(ctrl, tgt) in pairs {
                    config[tgt] = table.draw(config[ctrl], config[tgt], &mut rng);
                }
            }
            d0 * d.d()[config[obs]]
        })
        .collect();

    let mean: f64 = values.iter().sum::<f64>() / n_samples as f64;
    let var: f64 =
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n_samples as f64 - 1.0);
    Ok(McEstimate {
        estimate: mean,
        std_error: (var / n_samples as f64).sqrt(),
        n_samples,
    })
}
