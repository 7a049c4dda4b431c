//! Random gate and matrix generators used by the survey, the theorem
//! verifiers and the test suites. All generators take the RNG by value
//! reference so callers control seeding.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::gate::{ControlledGate, LocalGate};

/// Gaussian matrix with every row summing to 1 (`u|-> = |->`). Entries are
/// signed; nonnegativity is not required by any of the condition checks.
pub fn stochastic<R: Rng + ?Sized>(q: usize, rng: &mut R) -> DMatrix<f64> {
    let mut m = gaussian(q, rng);
    for r in 0..q {
        let shift = (1.0 - m.row(r).sum()) / q as f64;
        for c in 0..q {
            m[(r, c)] += shift;
        }
    }
    m
}

/// Gaussian matrix with every column summing to 1 (`<-|u = <-|`), rows free.
pub fn column_stochastic<R: Rng + ?Sized>(q: usize, rng: &mut R) -> DMatrix<f64> {
    stochastic(q, rng).transpose()
}

/// Gaussian matrix projected onto the affine subspace of row and column
/// sums 1.
pub fn bistochastic<R: Rng + ?Sized>(q: usize, rng: &mut R) -> DMatrix<f64> {
    let m = gaussian(q, rng);
    let j = DMatrix::from_element(q, q, 1.0 / q as f64);
    &m - &j * &m - &m * &j + &j * &m * &j + j
}

/// Convex combination of random permutation matrices: bistochastic with
/// nonnegative entries, suitable for trajectory sampling.
pub fn probabilistic_bistochastic<R: Rng + ?Sized>(q: usize, rng: &mut R) -> DMatrix<f64> {
    let terms = q + 1;
    let mut weights: Vec<f64> = (0..terms).map(|_| -rng.gen::<f64>().ln()).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    let mut m = DMatrix::zeros(q, q);
    for w in weights {
        let perm = random_permutation(q, rng);
        for (j, &p) in perm.iter().enumerate() {
            m[(p, j)] += w;
        }
    }
    m
}

pub fn random_permutation<R: Rng + ?Sized>(q: usize, rng: &mut R) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..q).collect();
    perm.shuffle(rng);
    perm
}

/// Controlled gate with blocks drawn from `block_gen`.
pub fn controlled<R, F>(q: usize, rng: &mut R, mut block_gen: F) -> ControlledGate
where
    R: Rng + ?Sized,
    F: FnMut(usize, &mut R) -> DMatrix<f64>,
{
    let blocks = (0..q).map(|_| block_gen(q, rng)).collect();
    ControlledGate::new(blocks).expect("generator produced valid blocks")
}

/// Dense Gaussian two-site gate with no structure at all.
pub fn generic_gate<R: Rng + ?Sized>(q: usize, rng: &mut R) -> LocalGate {
    LocalGate::new(q, gaussian(q * q, rng)).expect("square gaussian matrix")
}

/// Gate of the controlled-stochastic form `sum_a c_a (x) u_a` with `terms`
/// summands, gaussian `c_a` and blocks from `block_gen` (stochastic or
/// bistochastic). Such gates satisfy the generalized condition with
/// `c = sum_a c_a` by construction.
pub fn cs_form_gate<R, F>(q: usize, terms: usize, rng: &mut R, mut block_gen: F) -> LocalGate
where
    R: Rng + ?Sized,
    F: FnMut(usize, &mut R) -> DMatrix<f64>,
{
    let mut m = DMatrix::zeros(q * q, q * q);
    for _ in 0..terms {
        let c = gaussian(q, rng);
        let u = block_gen(q, rng);
        m += c.kronecker(&u);
    }
    LocalGate::new(q, m).expect("sum of kronecker products is square")
}

fn gaussian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |_, _| rng.sample(StandardNormal))
}
