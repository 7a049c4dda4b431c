//! Operator-Schmidt decomposition of two-site gates and the constructive
//! factorization `U = sum_a c_a (x) u_a` of gates satisfying the generalized
//! controlled-stochastic condition.
//!
//! The factorization follows the constructive proof step by step: expand the
//! extracted `c` in the (Frobenius-orthonormal) left Schmidt operators,
//! read off `mu_a = beta_a / lambda_a`, split the Schmidt indices into
//! `S` (`mu_a != 0`, giving `u_a = B_a / mu_a`) and `S'` (`u_a = B_a + 1`),
//! and append the correction term `c_r = -sum_{S'} lambda_a A_a`, `u_r = 1`.
//! The resulting rank is at most `q^2 + 1`. Factorizations are gauge
//! dependent; the contract is reconstruction plus the stochasticity
//! constraints, never factor-by-factor equality.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::jacobi_svd;
use crate::gate::{check_bcs, check_generalized, flat_vec, LocalGate};
use crate::{MU_TOL, SIGMA_CUT_REL, TOL_COND};

/// Operator-Schmidt decomposition `U = sum_a lambda_a A_a (x) B_a` with
/// `lambda_a > 0` descending and `{A_a}`, `{B_a}` Frobenius-orthonormal.
#[derive(Clone, Debug)]
pub struct OperatorSchmidt {
    pub weights: Vec<f64>,
    pub left: Vec<DMatrix<f64>>,
    pub right: Vec<DMatrix<f64>>,
}

impl OperatorSchmidt {
    pub fn rank(&self) -> usize {
        self.weights.len()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        let q = self.left[0].nrows();
        let mut m = DMatrix::zeros(q * q, q * q);
        for ((w, a), b) in self.weights.iter().zip(&self.left).zip(&self.right) {
            m += a.kronecker(b) * *w;
        }
        m
    }
}

/// Compute the operator-Schmidt decomposition via SVD of the reshuffled
/// matrix `R[(i,i'),(j,j')] = U[(i,j),(i',j')]` (control indices grouped
/// against target indices). Singular values below `SIGMA_CUT_REL` relative
/// to the largest are discarded.
pub fn operator_schmidt(gate: &LocalGate) -> OperatorSchmidt {
    let q = gate.q();
    let r = DMatrix::from_fn(q * q, q * q, |row, col| {
        let (i, i_in) = (row / q, row % q);
        let (j, j_in) = (col / q, col % q);
        gate.entry(i, j, i_in, j_in)
    });
    let svd = jacobi_svd(&r);
    let cut = SIGMA_CUT_REL * svd.sigma.first().copied().unwrap_or(0.0);

    let mut weights = Vec::new();
    let mut left = Vec::new();
    let mut right = Vec::new();
    for (k, &sigma) in svd.sigma.iter().enumerate() {
        if sigma <= cut {
            break;
        }
        weights.push(sigma);
        left.push(unvec(q, &svd.u.column(k).into_owned()));
        right.push(unvec(q, &svd.v.column(k).into_owned()));
    }
    OperatorSchmidt {
        weights,
        left,
        right,
    }
}

// Column k of U holds vec(A) with index (out, in) = row-major over (i, i').
fn unvec(q: usize, v: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(q, q, |out, inp| v[out * q + inp])
}

/// The factorization `U = sum_a c_a (x) u_a` with stochastic `u_a` and
/// `sum_a c_a = c`.
#[derive(Clone, Debug)]
pub struct CsFactorization {
    q: usize,
    pub c_factors: Vec<DMatrix<f64>>,
    pub u_factors: Vec<DMatrix<f64>>,
    /// The generalized-condition matrix `c = sum_a c_a`.
    pub total_c: DMatrix<f64>,
    /// Schmidt indices with `mu_a != 0`.
    pub s_indices: Vec<usize>,
    /// Schmidt indices with `mu_a = 0` (shifted by the identity).
    pub s_prime_indices: Vec<usize>,
    /// Max-norm reconstruction residual.
    pub residual: f64,
}

impl CsFactorization {
    pub fn rank(&self) -> usize {
        self.c_factors.len()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        let q = self.q;
        let mut m = DMatrix::zeros(q * q, q * q);
        for (c, u) in self.c_factors.iter().zip(&self.u_factors) {
            m += c.kronecker(u);
        }
        m
    }

    pub fn assemble(&self) -> LocalGate {
        LocalGate::new(self.q, self.reconstruct()).expect("factor dimensions are consistent")
    }
}

/// Factorize a gate satisfying the (generalized) controlled-stochastic
/// condition into `sum_a c_a (x) u_a` with `u_a |-> = |->` and rank at most
/// `q^2 + 1`. Fails with [`Error::NotControlledStochastic`] otherwise.
pub fn cs_factorize(gate: &LocalGate) -> Result<CsFactorization> {
    let q = gate.q();
    let gen = check_generalized(gate).ok_or_else(|| {
        // Recompute the best-fit residual for the error report.
        let residual = best_fit_residual(gate);
        Error::NotControlledStochastic { residual }
    })?;
    let schmidt = operator_schmidt(gate);
    let flat = flat_vec(q);

    // beta_a = <A_a, c>_F; the proof needs c inside span{A_a}.
    let mut beta = Vec::with_capacity(schmidt.rank());
    let mut c_span = DMatrix::zeros(q, q);
    for a in &schmidt.left {
        let b: f64 = a.iter().zip(gen.c.iter()).map(|(x, y)| x * y).sum();
        c_span += a * b;
        beta.push(b);
    }
    let span_residual = (&c_span - &gen.c).amax();
    if span_residual > TOL_COND {
        return Err(Error::NotControlledStochastic {
            residual: span_residual,
        });
    }

    let mut c_factors = Vec::new();
    let mut u_factors = Vec::new();
    let mut s_indices = Vec::new();
    let mut s_prime_indices = Vec::new();
    for (idx, ((lambda, a), b)) in schmidt
        .weights
        .iter()
        .zip(&schmidt.left)
        .zip(&schmidt.right)
        .enumerate()
    {
        let mu = beta[idx] / lambda;
        // Consistency with B_a |-> = mu_a |->; violations mean the flat
        // state is not an eigenvector and the condition cannot hold.
        let dev = (b * &flat - &flat * mu).amax();
        if dev > TOL_COND {
            return Err(Error::NotControlledStochastic { residual: dev });
        }
        if mu.abs() > MU_TOL {
            s_indices.push(idx);
            c_factors.push(a * (*lambda * mu));
            u_factors.push(b / mu);
        } else {
            s_prime_indices.push(idx);
            c_factors.push(a * *lambda);
            u_factors.push(b + DMatrix::identity(q, q));
        }
    }
    if !s_prime_indices.is_empty() {
        let mut corr = DMatrix::zeros(q, q);
        for &idx in &s_prime_indices {
            corr -= &schmidt.left[idx] * schmidt.weights[idx];
        }
        c_factors.push(corr);
        u_factors.push(DMatrix::identity(q, q));
    }

    let mut fact = CsFactorization {
        q,
        c_factors,
        u_factors,
        total_c: gen.c,
        s_indices,
        s_prime_indices,
        residual: 0.0,
    };
    fact.residual = (fact.reconstruct() - gate.matrix()).amax();
    Ok(fact)
}

fn best_fit_residual(gate: &LocalGate) -> f64 {
    let q = gate.q();
    let flat = flat_vec(q);
    let sqrt_q = (q as f64).sqrt();
    let mut residual = 0.0f64;
    for i in 0..q {
        for i_in in 0..q {
            let mut mean = 0.0;
            let mut vals = vec![0.0; q];
            for j in 0..q {
                let mut acc = 0.0;
                for j_in in 0..q {
                    acc += gate.entry(i, j, i_in, j_in) * flat[j_in];
                }
                vals[j] = acc;
                mean += acc;
            }
            let c = mean * sqrt_q / q as f64;
            for (j, val) in vals.iter().enumerate() {
                let _ = j;
                residual = residual.max((val - c / sqrt_q).abs());
            }
        }
    }
    residual
}

/// For a gate that additionally satisfies the controlled-bistochastic
/// condition, every `u_a` in the factorization is bistochastic. Returns
/// whether that refinement holds; errors when the precondition fails.
pub fn verify_bistochastic_refinement(fact: &CsFactorization, gate: &LocalGate) -> Result<bool> {
    let bcs = check_bcs(gate);
    if !bcs.holds {
        return Err(Error::TheoremNotApplicable(format!(
            "gate does not satisfy the controlled-bistochastic condition (residual {:.3e})",
            bcs.residual
        )));
    }
    let q = fact.q;
    let flat = flat_vec(q);
    Ok(fact
        .u_factors
        .iter()
        .all(|u| (u.transpose() * &flat - &flat).amax() <= TOL_COND))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gate::{check_cs, ControlledGate};
    use crate::random;
    use approx::assert_abs_diff_eq;
    use nalgebra::dmatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn product_operator_has_rank_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let a = random::bistochastic(2, &mut rng);
        let b = random::stochastic(2, &mut rng);
        let gate = LocalGate::new(2, a.kronecker(&b)).unwrap();
        let schmidt = operator_schmidt(&gate);
        assert_eq!(schmidt.rank(), 1);
        assert_abs_diff_eq!(
            schmidt.weights[0],
            a.norm() * b.norm(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn cnot_schmidt_structure() {
        let cnot = ControlledGate::new(vec![
            DMatrix::identity(2, 2),
            dmatrix![0.0, 1.0; 1.0, 0.0],
        ])
        .unwrap()
        .assemble();
        let schmidt = operator_schmidt(&cnot);
        assert_eq!(schmidt.rank(), 2);
        for w in &schmidt.weights {
            assert_abs_diff_eq!(*w, 2.0f64.sqrt(), epsilon = 1e-12);
        }
        // The left operators live in span{|0><0|, |1><1|}: diagonal matrices.
        for a in &schmidt.left {
            assert!(a[(0, 1)].abs() < 1e-12);
            assert!(a[(1, 0)].abs() < 1e-12);
        }
        assert!((schmidt.reconstruct() - cnot.matrix()).amax() < 1e-12);
    }

    #[test]
    fn schmidt_reconstructs_random_gates() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..100 {
            let gate = random::generic_gate(2, &mut rng);
            let schmidt = operator_schmidt(&gate);
            assert!((schmidt.reconstruct() - gate.matrix()).amax() < 1e-10);
        }
    }

    #[test]
    fn schmidt_operators_are_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let gate = random::generic_gate(3, &mut rng);
        let schmidt = operator_schmidt(&gate);
        for (k, a) in schmidt.left.iter().enumerate() {
            for (l, b) in schmidt.left.iter().enumerate() {
                let dot: f64 = a.iter().zip(b.iter()).map(|(x, y)| x * y).sum();
                let expect = if k == l { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(dot, expect, epsilon = 1e-10);
            }
        }
        for (k, a) in schmidt.right.iter().enumerate() {
            for (l, b) in schmidt.right.iter().enumerate() {
                let dot: f64 = a.iter().zip(b.iter()).map(|(x, y)| x * y).sum();
                let expect = if k == l { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(dot, expect, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn identity_gate_factorizes_trivially() {
        let gate = LocalGate::new(2, DMatrix::identity(4, 4)).unwrap();
        let fact = cs_factorize(&gate).unwrap();
        assert_eq!(fact.rank(), 1);
        assert!((&fact.c_factors[0] - DMatrix::identity(2, 2)).amax() < 1e-12);
        assert!((&fact.u_factors[0] - DMatrix::identity(2, 2)).amax() < 1e-12);
    }

    #[test]
    fn factorization_round_trip_and_constraints() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let flat2 = flat_vec(2);
        let flat3 = flat_vec(3);
        for trial in 0..1000 {
            let q = 2 + trial % 2;
            let flat = if q == 2 { &flat2 } else { &flat3 };
            let terms = 1 + trial % (q * q);
            let gate = random::cs_form_gate(q, terms, &mut rng, random::stochastic);
            let fact = cs_factorize(&gate).unwrap_or_else(|e| panic!("trial {trial}: {e}"));
            assert!(fact.rank() <= q * q + 1, "rank {} at q={q}", fact.rank());
            assert!(fact.residual < 1e-10, "residual {}", fact.residual);
            for u in &fact.u_factors {
                assert!((u * flat - flat).amax() < TOL_COND);
            }
            let total: DMatrix<f64> = fact
                .c_factors
                .iter()
                .fold(DMatrix::zeros(q, q), |acc, c| acc + c);
            assert!((total - &fact.total_c).amax() < TOL_COND);
        }
    }

    #[test]
    fn generic_gates_are_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        for trial in 0..1000 {
            let q = 2 + trial % 2;
            let gate = random::generic_gate(q, &mut rng);
            match cs_factorize(&gate) {
                Err(Error::NotControlledStochastic { residual }) => {
                    assert!(residual > TOL_COND)
                }
                other => panic!("trial {trial}: expected rejection, got {other:?}"),
            }
        }
    }

    #[test]
    fn sufficiency_assembling_recovers_total_c() {
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        for q in 2..=3 {
            let gate = random::cs_form_gate(q, q, &mut rng, random::stochastic);
            let fact = cs_factorize(&gate).unwrap();
            let gen = check_generalized(&fact.assemble()).expect("assembled gate satisfies cs");
            assert!((&gen.c - &fact.total_c).amax() < 1e-9);
        }
    }

    #[test]
    fn bistochastic_refinement() {
        let mut rng = ChaCha8Rng::seed_from_u64(27);
        let eq_avg = ControlledGate::new(vec![
            DMatrix::identity(2, 2),
            DMatrix::from_element(2, 2, 0.5),
        ])
        .unwrap()
        .assemble();
        let fact = cs_factorize(&eq_avg).unwrap();
        assert!(verify_bistochastic_refinement(&fact, &eq_avg).unwrap());

        let bi3 = random::controlled(3, &mut rng, random::bistochastic).assemble();
        let fact3 = cs_factorize(&bi3).unwrap();
        assert!(verify_bistochastic_refinement(&fact3, &bi3).unwrap());

        // CS-only gate: the precondition fails and the check is skipped.
        let cs_only = random::controlled(2, &mut rng, random::stochastic).assemble();
        assert!(check_cs(&cs_only).holds);
        let fact_cs = cs_factorize(&cs_only).unwrap();
        assert!(matches!(
            verify_bistochastic_refinement(&fact_cs, &cs_only),
            Err(Error::TheoremNotApplicable(_))
        ));
    }
}
