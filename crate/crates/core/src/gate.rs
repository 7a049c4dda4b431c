//! Two-site gates, controlled gates, diagonal observables and the
//! controlled-(bi)stochastic condition checkers.
//!
//! Conventions, fixed once for the whole crate:
//!
//! - A two-site gate is a `q²×q²` real matrix. Row index = output
//!   configuration, column index = input configuration. The first tensor
//!   factor is the *control* site (left leg), the second the *target*.
//! - `u` is *stochastic* iff `u|-> = |->` (every row sums to 1), and
//!   *bistochastic* iff additionally `<-|u = <-|` (every column sums to 1),
//!   where `|->` is the flat state. Entry nonnegativity is tracked separately
//!   via [`LocalGate::is_probabilistic`]; the vanishing theorems never use it.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::{EPS_NONNEG, TOL_COND};

/// The flat state `|->` as a dense vector: every entry `1/sqrt(q)`.
pub fn flat_state(q: usize) -> Result<DVector<f64>> {
    if q < 2 {
        return Err(Error::InvalidDimension(format!(
            "local dimension must be >= 2, got {q}"
        )));
    }
    Ok(DVector::from_element(q, 1.0 / (q as f64).sqrt()))
}

pub(crate) fn flat_vec(q: usize) -> DVector<f64> {
    DVector::from_element(q, 1.0 / (q as f64).sqrt())
}

/// A diagonal traceless observable: a real `q`-vector `d` with `sum_i d_i = 0`.
/// The associated single-site state is `(1/sqrt(q)) sum_i d_i |i>`, orthogonal
/// to the flat state.
#[derive(Clone, Debug, PartialEq)]
pub struct Observable {
    q: usize,
    d: DVector<f64>,
}

impl Observable {
    pub fn new(d: DVector<f64>) -> Result<Self> {
        let q = d.len();
        if q < 2 {
            return Err(Error::InvalidDimension(format!(
                "observable needs at least 2 components, got {q}"
            )));
        }
        let scale = d.amax();
        if scale == 0.0 {
            return Err(Error::InvalidParameters("observable must be nonzero".into()));
        }
        let trace: f64 = d.iter().sum();
        if trace.abs() > 1e-12 * scale.max(1.0) {
            return Err(Error::InvalidParameters(format!(
                "observable coefficients must sum to zero (got {trace:.3e})"
            )));
        }
        Ok(Self { q, d })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn d(&self) -> &DVector<f64> {
        &self.d
    }

    /// The single-site state vector `(1/sqrt(q)) d`.
    pub fn site_state(&self) -> DVector<f64> {
        &self.d / (self.q as f64).sqrt()
    }
}

/// Deterministic orthogonal basis of the traceless subspace: rows `1..q` of
/// the DCT-II completion of the flat vector, scaled so that `|d|^2 = q`.
/// The Gram matrix of the returned vectors is `q * I`.
pub fn traceless_basis(q: usize) -> Result<Vec<Observable>> {
    if q < 2 {
        return Err(Error::InvalidDimension(format!(
            "local dimension must be >= 2, got {q}"
        )));
    }
    let mut basis = Vec::with_capacity(q - 1);
    for k in 1..q {
        let d = DVector::from_fn(q, |n, _| {
            (2.0f64).sqrt()
                * (std::f64::consts::PI * k as f64 * (2 * n + 1) as f64 / (2 * q) as f64).cos()
        });
        basis.push(Observable::new(d)?);
    }
    Ok(basis)
}

/// A dense two-site gate on a pair of `q`-state sites.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalGate {
    q: usize,
    matrix: DMatrix<f64>,
}

impl LocalGate {
    pub fn new(q: usize, matrix: DMatrix<f64>) -> Result<Self> {
        if q < 2 {
            return Err(Error::InvalidDimension(format!(
                "local dimension must be >= 2, got {q}"
            )));
        }
        let d = q * q;
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "expected {d}x{d} matrix for q={q}, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { q, matrix })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// Two-site dimension `q^2`.
    pub fn dim(&self) -> usize {
        self.q * self.q
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Entry `U[(i_out, j_out), (i_in, j_in)]` with `i` the control digit.
    pub fn entry(&self, i_out: usize, j_out: usize, i_in: usize, j_in: usize) -> f64 {
        self.matrix[(i_out * self.q + j_out, i_in * self.q + j_in)]
    }

    /// True when every entry is `>= -EPS_NONNEG`. Only trajectory sampling
    /// cares; the condition checks are linear and ignore signs.
    pub fn is_probabilistic(&self) -> bool {
        self.matrix.iter().all(|&x| x >= -EPS_NONNEG)
    }
}

/// A controlled gate given by its `q` single-site blocks `u_0..u_{q-1}`; the
/// two-site matrix is block diagonal, `sum_i |i><i| (x) u_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlledGate {
    q: usize,
    blocks: Vec<DMatrix<f64>>,
}

impl ControlledGate {
    pub fn new(blocks: Vec<DMatrix<f64>>) -> Result<Self> {
        let q = blocks.len();
        if q < 2 {
            return Err(Error::InvalidDimension(format!(
                "need at least 2 blocks, got {q}"
            )));
        }
        for (i, b) in blocks.iter().enumerate() {
            if b.nrows() != q || b.ncols() != q {
                return Err(Error::DimensionMismatch(format!(
                    "block {i} is {}x{}, expected {q}x{q}",
                    b.nrows(),
                    b.ncols()
                )));
            }
        }
        Ok(Self { q, blocks })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn blocks(&self) -> &[DMatrix<f64>] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &DMatrix<f64> {
        &self.blocks[i]
    }

    /// Assemble the block-diagonal two-site matrix. The round trip
    /// `assemble -> split` reproduces the blocks bit-exactly.
    pub fn assemble(&self) -> LocalGate {
        let q = self.q;
        let mut m = DMatrix::zeros(q * q, q * q);
        for (i, b) in self.blocks.iter().enumerate() {
            for j_out in 0..q {
                for j_in in 0..q {
                    m[(i * q + j_out, i * q + j_in)] = b[(j_out, j_in)];
                }
            }
        }
        LocalGate { q, matrix: m }
    }

    /// Extract the blocks of a gate that is block diagonal in the control
    /// index, i.e. whose control-off-diagonal blocks vanish within `tol`.
    pub fn split(gate: &LocalGate, tol: f64) -> Option<Self> {
        let q = gate.q;
        for i_out in 0..q {
            for i_in in 0..q {
                if i_out == i_in {
                    continue;
                }
                for j_out in 0..q {
                    for j_in in 0..q {
                        if gate.entry(i_out, j_out, i_in, j_in).abs() > tol {
                            return None;
                        }
                    }
                }
            }
        }
        let blocks = (0..q)
            .map(|i| DMatrix::from_fn(q, q, |j_out, j_in| gate.entry(i, j_out, i, j_in)))
            .collect();
        Some(Self { q, blocks })
    }
}

/// `u |-> = |->` within `tol`: every row sums to 1.
pub fn is_stochastic(u: &DMatrix<f64>, tol: f64) -> bool {
    (0..u.nrows()).all(|r| (u.row(r).sum() - 1.0).abs() <= tol)
}

/// Row and column sums all equal to 1 within `tol`.
pub fn is_bistochastic(u: &DMatrix<f64>, tol: f64) -> bool {
    is_stochastic(u, tol) && (0..u.ncols()).all(|c| (u.column(c).sum() - 1.0).abs() <= tol)
}

/// Outcome of a single condition check.
#[derive(Clone, Copy, Debug)]
pub struct CheckOutcome {
    pub holds: bool,
    /// Max-norm deviation from the condition.
    pub residual: f64,
}

/// Controlled-stochastic condition: `U (1 (x) |->) = 1 (x) |->`. A flat
/// target input passes through the gate untouched, with the control acting
/// as the identity.
pub fn check_cs(gate: &LocalGate) -> CheckOutcome {
    let q = gate.q;
    let flat = flat_vec(q);
    let mut residual = 0.0f64;
    // (U (1 (x) |->))[(i,j), i'] vs delta_{i,i'} flat_j
    for i in 0..q {
        for j in 0..q {
            for i_in in 0..q {
                let mut acc = 0.0;
                for j_in in 0..q {
                    acc += gate.entry(i, j, i_in, j_in) * flat[j_in];
                }
                let target = if i == i_in { flat[j] } else { 0.0 };
                residual = residual.max((acc - target).abs());
            }
        }
    }
    CheckOutcome {
        holds: residual <= TOL_COND,
        residual,
    }
}

/// Controlled-bistochastic condition: `(1 (x) <-|) U = 1 (x) <-|`, the
/// mirror of [`check_cs`] with the flat row vector acting from the left on
/// the target factor.
pub fn check_bcs(gate: &LocalGate) -> CheckOutcome {
    let q = gate.q;
    let flat = flat_vec(q);
    let mut residual = 0.0f64;
    for i in 0..q {
        for i_in in 0..q {
            for j_in in 0..q {
                let mut acc = 0.0;
                for j in 0..q {
                    acc += flat[j] * gate.entry(i, j, i_in, j_in);
                }
                let target = if i == i_in { flat[j_in] } else { 0.0 };
                residual = residual.max((acc - target).abs());
            }
        }
    }
    CheckOutcome {
        holds: residual <= TOL_COND,
        residual,
    }
}

/// Result of the generalized condition check: `U (1 (x) |->) = c (x) |->`
/// for some single-site matrix `c`.
#[derive(Clone, Debug)]
pub struct GeneralizedC {
    pub c: DMatrix<f64>,
    pub residual: f64,
    /// Whether `c` itself is bistochastic; only then do the light-cone
    /// simplifications carry over unchanged.
    pub c_bistochastic: bool,
}

/// Extract the best-fit `c` with `U (1 (x) |->) = c (x) |->` and accept when
/// the residual is below tolerance. The plain controlled-stochastic condition
/// is the `c = 1` special case.
pub fn check_generalized(gate: &LocalGate) -> Option<GeneralizedC> {
    let q = gate.q;
    let flat = flat_vec(q);
    // v[(i,j), i'] = sum_{j'} U[(i,j),(i',j')] flat_{j'}
    let mut v = DMatrix::zeros(q * q, q);
    for i in 0..q {
        for j in 0..q {
            for i_in in 0..q {
                let mut acc = 0.0;
                for j_in in 0..q {
                    acc += gate.entry(i, j, i_in, j_in) * flat[j_in];
                }
                v[(i * q + j, i_in)] = acc;
            }
        }
    }
    // Least-squares c: v[(i,j), i'] ~ c[i,i'] flat_j, so c = sqrt(q) * mean_j.
    let sqrt_q = (q as f64).sqrt();
    let c = DMatrix::from_fn(q, q, |i, i_in| {
        let mut acc = 0.0;
        for j in 0..q {
            acc += v[(i * q + j, i_in)];
        }
        acc * sqrt_q / q as f64
    });
    let mut residual = 0.0f64;
    for i in 0..q {
        for j in 0..q {
            for i_in in 0..q {
                residual = residual.max((v[(i * q + j, i_in)] - c[(i, i_in)] * flat[j]).abs());
            }
        }
    }
    if residual > TOL_COND {
        return None;
    }
    let c_bistochastic = is_bistochastic(&c, TOL_COND);
    Some(GeneralizedC {
        c,
        residual,
        c_bistochastic,
    })
}

/// Mirror of [`check_generalized`] for the left action:
/// `(1 (x) <-|) U = c (x) <-|`.
pub fn check_generalized_left(gate: &LocalGate) -> Option<GeneralizedC> {
    let q = gate.q;
    let flat = flat_vec(q);
    let mut v = DMatrix::zeros(q, q * q);
    for i in 0..q {
        for i_in in 0..q {
            for j_in in 0..q {
                let mut acc = 0.0;
                for j in 0..q {
                    acc += flat[j] * gate.entry(i, j, i_in, j_in);
                }
                v[(i, i_in * q + j_in)] = acc;
            }
        }
    }
    let sqrt_q = (q as f64).sqrt();
    let c = DMatrix::from_fn(q, q, |i, i_in| {
        let mut acc = 0.0;
        for j_in in 0..q {
            acc += v[(i, i_in * q + j_in)];
        }
        acc * sqrt_q / q as f64
    });
    let mut residual = 0.0f64;
    for i in 0..q {
        for i_in in 0..q {
            for j_in in 0..q {
                residual = residual.max((v[(i, i_in * q + j_in)] - c[(i, i_in)] * flat[j_in]).abs());
            }
        }
    }
    if residual > TOL_COND {
        return None;
    }
    let c_bistochastic = is_bistochastic(&c, TOL_COND);
    Some(GeneralizedC {
        c,
        residual,
        c_bistochastic,
    })
}

/// All condition checks in one report.
#[derive(Clone, Debug)]
pub struct ConditionReport {
    pub cs: CheckOutcome,
    pub bcs: CheckOutcome,
    pub generalized: Option<GeneralizedC>,
}

pub fn condition_report(gate: &LocalGate) -> ConditionReport {
    ConditionReport {
        cs: check_cs(gate),
        bcs: check_bcs(gate),
        generalized: check_generalized(gate),
    }
}

/// Rewrite a gate of the form `sum_a (a|α><α|b) (x) u_α` into the controlled
/// gate `sum_α |α><α| (x) (b u_α a)` by shifting the bistochastic pair `(a, b)`
/// onto the blocks.
///
/// The blocks `u_α` are recovered by a minimum-norm least-squares fit, so for
/// singular `a` or `b` a valid gauge is chosen among the solutions. Returns
/// [`Error::RewriteNotApplicable`] when the gate is not of the stated form.
pub fn rewrite_generalized(
    gate: &LocalGate,
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
) -> Result<ControlledGate> {
    let q = gate.q;
    if a.nrows() != q || a.ncols() != q || b.nrows() != q || b.ncols() != q {
        return Err(Error::DimensionMismatch(format!(
            "pairing matrices must be {q}x{q}"
        )));
    }
    // Design matrix m[(i,i'), α] = a[i,α] b[α,i'], shared by all (j,j').
    let design = DMatrix::from_fn(q * q, q, |row, alpha| {
        let (i, i_in) = (row / q, row % q);
        a[(i, alpha)] * b[(alpha, i_in)]
    });
    let pinv = crate::linalg::pseudo_inverse(&design, 1e-12);

    let mut blocks_u = vec![DMatrix::zeros(q, q); q];
    for j_out in 0..q {
        for j_in in 0..q {
            let rhs = DVector::from_fn(q * q, |row, _| {
                let (i, i_in) = (row / q, row % q);
                gate.entry(i, j_out, i_in, j_in)
            });
            let sol = &pinv * &rhs;
            for alpha in 0..q {
                blocks_u[alpha][(j_out, j_in)] = sol[alpha];
            }
        }
    }
    // Verify the extracted blocks reproduce the gate.
    let mut residual = 0.0f64;
    for i in 0..q {
        for j_out in 0..q {
            for i_in in 0..q {
                for j_in in 0..q {
                    let mut acc = 0.0;
                    for alpha in 0..q {
                        acc += a[(i, alpha)] * b[(alpha, i_in)] * blocks_u[alpha][(j_out, j_in)];
                    }
                    residual = residual.max((acc - gate.entry(i, j_out, i_in, j_in)).abs());
                }
            }
        }
    }
    if residual > TOL_COND {
        return Err(Error::RewriteNotApplicable(format!(
            "gate is not of the paired controlled form (residual {residual:.3e})"
        )));
    }
    let blocks = blocks_u.into_iter().map(|u| b * u * a).collect();
    ControlledGate::new(blocks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use approx::assert_abs_diff_eq;
    use nalgebra::dmatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn averaged_haar_gate() -> ControlledGate {
        ControlledGate::new(vec![
            DMatrix::identity(2, 2),
            DMatrix::from_element(2, 2, 0.5),
        ])
        .unwrap()
    }

    fn cnot() -> ControlledGate {
        ControlledGate::new(vec![
            DMatrix::identity(2, 2),
            dmatrix![0.0, 1.0; 1.0, 0.0],
        ])
        .unwrap()
    }

    #[test]
    fn flat_state_entries() {
        let f2 = flat_state(2).unwrap();
        assert_abs_diff_eq!(f2[0], 1.0 / 2.0f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(f2[1], 1.0 / 2.0f64.sqrt(), epsilon = 1e-15);
        let f3 = flat_state(3).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(f3[i], 1.0 / 3.0f64.sqrt(), epsilon = 1e-15);
        }
        let f5 = flat_state(5).unwrap();
        assert_abs_diff_eq!(f5.dot(&f5), 1.0, epsilon = 1e-14);
        assert!(flat_state(1).is_err());
    }

    #[test]
    fn traceless_basis_q2() {
        let basis = traceless_basis(2).unwrap();
        assert_eq!(basis.len(), 1);
        let d = basis[0].d();
        assert_abs_diff_eq!(d[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d[1], -1.0, epsilon = 1e-12);
    }

    #[test]
    fn traceless_basis_constraints_q3() {
        let basis = traceless_basis(3).unwrap();
        assert_eq!(basis.len(), 2);
        let flat = DVector::from_element(3, 1.0);
        for obs in &basis {
            assert!(obs.d().iter().sum::<f64>().abs() < 1e-12);
            assert!(obs.d().dot(&flat).abs() < 1e-12);
        }
    }

    #[test]
    fn traceless_basis_gram_q4() {
        // Oracle: direct Gram computation of the returned vectors.
        let basis = traceless_basis(4).unwrap();
        assert_eq!(basis.len(), 3);
        for (k, a) in basis.iter().enumerate() {
            for (l, b) in basis.iter().enumerate() {
                let gram = a.d().dot(b.d());
                let expect = if k == l { 4.0 } else { 0.0 };
                assert_abs_diff_eq!(gram, expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn traceless_orthogonal_to_flat() {
        for q in 2..=6 {
            let flat = flat_state(q).unwrap();
            for obs in traceless_basis(q).unwrap() {
                assert!(flat.dot(&obs.site_state()).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn observable_rejects_traceful_and_zero() {
        assert!(Observable::new(DVector::from_vec(vec![1.0, 1.0])).is_err());
        assert!(Observable::new(DVector::from_vec(vec![0.0, 0.0])).is_err());
        assert!(Observable::new(DVector::from_vec(vec![1.0, -1.0])).is_ok());
    }

    #[test]
    fn assemble_split_round_trip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for q in 2..=4 {
            let gate = random::controlled(q, &mut rng, random::stochastic);
            let assembled = gate.assemble();
            let back = ControlledGate::split(&assembled, 0.0).expect("block diagonal");
            assert_eq!(gate.blocks(), back.blocks());
        }
    }

    #[test]
    fn split_rejects_non_controlled() {
        // SWAP is not block diagonal in the control index.
        let swap = LocalGate::new(
            2,
            dmatrix![
                1.0, 0.0, 0.0, 0.0;
                0.0, 0.0, 1.0, 0.0;
                0.0, 1.0, 0.0, 0.0;
                0.0, 0.0, 0.0, 1.0
            ],
        )
        .unwrap();
        assert!(ControlledGate::split(&swap, 1e-12).is_none());
    }

    #[test]
    fn cs_holds_for_row_stochastic_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for q in 2..=3 {
            for _ in 0..50 {
                let gate = random::controlled(q, &mut rng, random::stochastic).assemble();
                let out = check_cs(&gate);
                assert!(out.holds, "residual {}", out.residual);
            }
        }
    }

    #[test]
    fn cs_and_bcs_hold_for_bistochastic_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for q in 2..=3 {
            for _ in 0..50 {
                let gate = random::controlled(q, &mut rng, random::bistochastic).assemble();
                assert!(check_cs(&gate).holds);
                assert!(check_bcs(&gate).holds);
            }
        }
    }

    #[test]
    fn averaged_gate_satisfies_both_conditions() {
        let gate = averaged_haar_gate().assemble();
        assert!(check_cs(&gate).holds);
        assert!(check_bcs(&gate).holds);
    }

    #[test]
    fn cs_fails_for_non_stochastic_block() {
        let gate = ControlledGate::new(vec![DMatrix::identity(2, 2), dmatrix![2.0, 0.0; 0.0, 0.0]])
            .unwrap()
            .assemble();
        let out = check_cs(&gate);
        assert!(!out.holds);
        assert!(out.residual > TOL_COND);
    }

    #[test]
    fn cnot_is_controlled_bistochastic() {
        let gate = cnot().assemble();
        assert!(check_cs(&gate).holds);
        assert!(check_bcs(&gate).holds);
    }

    #[test]
    fn row_only_stochastic_block_fails_bcs() {
        let gate = ControlledGate::new(vec![DMatrix::identity(2, 2), dmatrix![1.0, 0.0; 1.0, 0.0]])
            .unwrap()
            .assemble();
        assert!(check_cs(&gate).holds);
        assert!(!check_bcs(&gate).holds);
    }

    #[test]
    fn generalized_recovers_identity_for_cs_gates() {
        let gate = averaged_haar_gate().assemble();
        let gen = check_generalized(&gate).expect("cs gate has c");
        assert!((&gen.c - DMatrix::identity(2, 2)).amax() < 1e-12);
        assert!(gen.c_bistochastic);
    }

    #[test]
    fn generalized_agrees_with_cs_on_random_gates() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for trial in 0..1000 {
            let q = 2 + trial % 2;
            let gate = match trial % 4 {
                0 => random::generic_gate(q, &mut rng),
                1 => random::controlled(q, &mut rng, random::stochastic).assemble(),
                2 => random::cs_form_gate(q, q, &mut rng, random::stochastic),
                // product c (x) u with a non-identity c
                _ => {
                    let c = random::bistochastic(q, &mut rng);
                    let u = random::stochastic(q, &mut rng);
                    LocalGate::new(q, c.kronecker(&u)).unwrap()
                }
            };
            let cs = check_cs(&gate).holds;
            let gen_is_identity = check_generalized(&gate)
                .map(|g| (&g.c - DMatrix::identity(q, q)).amax() <= TOL_COND)
                .unwrap_or(false);
            assert_eq!(cs, gen_is_identity, "trial {trial}");
        }
    }

    #[test]
    fn generalized_extracts_product_c() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for q in 2..=3 {
            let c = random::bistochastic(q, &mut rng);
            let u = random::stochastic(q, &mut rng);
            let gate = LocalGate::new(q, c.kronecker(&u)).unwrap();
            let gen = check_generalized(&gate).expect("product form has c");
            assert!((&gen.c - &c).amax() < 1e-10);
            assert!(gen.c_bistochastic);
        }
    }

    #[test]
    fn generalized_absent_for_swap() {
        let swap = LocalGate::new(
            2,
            dmatrix![
                1.0, 0.0, 0.0, 0.0;
                0.0, 0.0, 1.0, 0.0;
                0.0, 1.0, 0.0, 0.0;
                0.0, 0.0, 0.0, 1.0
            ],
        )
        .unwrap();
        assert!(check_generalized(&swap).is_none());
    }

    #[test]
    fn rewrite_with_identity_pairing_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let gate = random::controlled(3, &mut rng, random::bistochastic);
        let id = DMatrix::identity(3, 3);
        let rewritten = rewrite_generalized(&gate.assemble(), &id, &id).unwrap();
        for (b0, b1) in gate.blocks().iter().zip(rewritten.blocks()) {
            assert!((b0 - b1).amax() < 1e-10);
        }
    }

    #[test]
    fn rewrite_with_permutation_pairing() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let q = 3;
        let perm = crate::families::permutation_matrix(q, &[1, 2, 0]).unwrap();
        let us: Vec<_> = (0..q).map(|_| random::bistochastic(q, &mut rng)).collect();
        // U = sum_a (P|a><a|P) (x) u_a
        let mut m = DMatrix::zeros(q * q, q * q);
        for (alpha, u) in us.iter().enumerate() {
            let mut e = DMatrix::zeros(q, q);
            e[(alpha, alpha)] = 1.0;
            let c = &perm * e * &perm;
            m += c.kronecker(u);
        }
        let gate = LocalGate::new(q, m).unwrap();
        let rewritten = rewrite_generalized(&gate, &perm, &perm).unwrap();
        for (alpha, u) in us.iter().enumerate() {
            let expected = &perm * u * &perm;
            assert!((&rewritten.blocks()[alpha] - expected).amax() < 1e-10);
        }
        let assembled = rewritten.assemble();
        assert!(check_cs(&assembled).holds);
        assert!(check_bcs(&assembled).holds);
    }

    #[test]
    fn rewrite_with_singular_flat_pairing() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let q = 2;
        let j = DMatrix::from_element(q, q, 0.5);
        let us: Vec<_> = (0..q)
            .map(|_| random::probabilistic_bistochastic(q, &mut rng))
            .collect();
        let mut m = DMatrix::zeros(q * q, q * q);
        for (alpha, u) in us.iter().enumerate() {
            let mut e = DMatrix::zeros(q, q);
            e[(alpha, alpha)] = 1.0;
            m += (&j * e * &j).kronecker(u);
        }
        let gate = LocalGate::new(q, m).unwrap();
        let rewritten = rewrite_generalized(&gate, &j, &j).unwrap();
        // b u a with a = b = J/2 collapses every bistochastic u to J/2.
        for b in rewritten.blocks() {
            assert!((b - &j).amax() < 1e-10);
            assert!(is_bistochastic(b, 1e-10));
        }
        let assembled = rewritten.assemble();
        assert!(check_cs(&assembled).holds);
        assert!(check_bcs(&assembled).holds);
    }

    #[test]
    fn rewrite_rejects_wrong_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let gate = random::generic_gate(2, &mut rng);
        let perm = crate::families::permutation_matrix(2, &[1, 0]).unwrap();
        assert!(matches!(
            rewrite_generalized(&gate, &perm, &perm),
            Err(Error::RewriteNotApplicable(_))
        ));
    }

    #[test]
    fn probabilistic_flag() {
        assert!(averaged_haar_gate().assemble().is_probabilistic());
        let signed =
            ControlledGate::new(vec![DMatrix::identity(2, 2), dmatrix![1.5, -0.5; -0.5, 1.5]])
                .unwrap();
        assert!(!signed.assemble().is_probabilistic());
    }
}
