//! Named controlled-gate families.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::gate::ControlledGate;

/// The built-in gate families.
#[derive(Clone, Debug)]
pub enum GateFamily {
    /// `u_i = 1` for every control value.
    Identity { q: usize },
    /// `u_0 = 1`, `u_1 = X` (qubits): the deterministic East automaton.
    Cnot,
    /// `u_0 = 1`, `u_1 = (1/2) [[1,1],[1,1]]`: the Haar-averaged random
    /// controlled qubit gate.
    AveragedHaar,
    /// `u_0 = 1`, `u_1 = [[1-p, p e^-s],[p e^-s, 1-p]]`: the tilted stochastic
    /// East gate. `s = 0` is the plain stochastic East model; for `s > 0` the
    /// blocks are no longer stochastic and the gate is admitted with its
    /// condition flags reported honestly.
    TiltedEast { p: f64, s: f64 },
    /// One permutation per control value.
    ControlledPermutation { q: usize, perms: Vec<Vec<usize>> },
    /// Arbitrary user-supplied blocks.
    Custom { blocks: Vec<DMatrix<f64>> },
}

/// Permutation matrix sending basis state `j` to `perm[j]`.
pub fn permutation_matrix(q: usize, perm: &[usize]) -> Result<DMatrix<f64>> {
    if perm.len() != q {
        return Err(Error::InvalidParameters(format!(
            "permutation length {} does not match q={q}",
            perm.len()
        )));
    }
    let mut seen = vec![false; q];
    for &p in perm {
        if p >= q || seen[p] {
            return Err(Error::InvalidParameters(format!(
                "{perm:?} is not a permutation of 0..{q}"
            )));
        }
        seen[p] = true;
    }
    let mut m = DMatrix::zeros(q, q);
    for (j, &p) in perm.iter().enumerate() {
        m[(p, j)] = 1.0;
    }
    Ok(m)
}

pub fn make_gate(family: &GateFamily) -> Result<ControlledGate> {
    match family {
        GateFamily::Identity { q } => {
            if *q < 2 {
                return Err(Error::InvalidDimension(format!("q must be >= 2, got {q}")));
            }
            ControlledGate::new(vec![DMatrix::identity(*q, *q); *q])
        }
        GateFamily::Cnot => ControlledGate::new(vec![
            DMatrix::identity(2, 2),
            permutation_matrix(2, &[1, 0])?,
        ]),
        GateFamily::AveragedHaar => ControlledGate::new(vec![
            DMatrix::identity(2, 2),
            DMatrix::from_element(2, 2, 0.5),
        ]),
        GateFamily::TiltedEast { p, s } => {
            if !(0.0..=1.0).contains(p) {
                return Err(Error::InvalidParameters(format!(
                    "tilted East flip probability must be in [0, 1], got {p}"
                )));
            }
            if *s < 0.0 || s.is_nan() {
                return Err(Error::InvalidParameters(format!(
                    "tilted East admits only nonnegative tilting, got s={s}"
                )));
            }
            let es = (-s).exp();
            let u1 = DMatrix::from_row_slice(2, 2, &[1.0 - p, p * es, p * es, 1.0 - p]);
            ControlledGate::new(vec![DMatrix::identity(2, 2), u1])
        }
        GateFamily::ControlledPermutation { q, perms } => {
            if perms.len() != *q {
                return Err(Error::InvalidParameters(format!(
                    "need {q} permutations, got {}",
                    perms.len()
                )));
            }
            let blocks = perms
                .iter()
                .map(|p| permutation_matrix(*q, p))
                .collect::<Result<Vec<_>>>()?;
            ControlledGate::new(blocks)
        }
        GateFamily::Custom { blocks } => ControlledGate::new(blocks.clone()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gate::{check_bcs, check_cs, is_stochastic};

    #[test]
    fn averaged_haar_blocks() {
        let gate = make_gate(&GateFamily::AveragedHaar).unwrap();
        assert_eq!(gate.block(0), &DMatrix::identity(2, 2));
        assert_eq!(gate.block(1), &DMatrix::from_element(2, 2, 0.5));
    }

    #[test]
    fn tilted_east_untilted_is_symmetric_east() {
        let gate = make_gate(&GateFamily::TiltedEast { p: 0.3, s: 0.0 }).unwrap();
        let u1 = gate.block(1);
        assert_eq!(u1[(0, 0)], 0.7);
        assert_eq!(u1[(0, 1)], 0.3);
        assert_eq!(u1[(1, 0)], 0.3);
        assert!(is_stochastic(u1, 1e-14));
        let assembled = gate.assemble();
        assert!(check_cs(&assembled).holds);
        assert!(check_bcs(&assembled).holds);
    }

    #[test]
    fn tilted_east_large_tilt_is_flagged_not_rejected() {
        // s -> infinity: u_1 -> (1-p) * 1, which is not stochastic. The gate
        // is still constructed; the condition checks report the failure.
        let gate = make_gate(&GateFamily::TiltedEast { p: 0.5, s: 1e6 }).unwrap();
        let u1 = gate.block(1);
        assert!((u1[(0, 0)] - 0.5).abs() < 1e-12);
        assert!(u1[(0, 1)].abs() < 1e-12);
        let assembled = gate.assemble();
        assert!(assembled.is_probabilistic());
        assert!(!check_cs(&assembled).holds);
    }

    #[test]
    fn tilted_east_rejects_bad_parameters() {
        assert!(make_gate(&GateFamily::TiltedEast { p: 1.5, s: 0.0 }).is_err());
        assert!(make_gate(&GateFamily::TiltedEast { p: 0.5, s: -0.1 }).is_err());
    }

    #[test]
    fn cnot_blocks_are_permutations() {
        let gate = make_gate(&GateFamily::Cnot).unwrap();
        assert_eq!(gate.block(1)[(0, 1)], 1.0);
        assert_eq!(gate.block(1)[(1, 0)], 1.0);
    }

    #[test]
    fn permutation_matrix_validates() {
        assert!(permutation_matrix(3, &[0, 0, 1]).is_err());
        assert!(permutation_matrix(3, &[0, 1]).is_err());
        let m = permutation_matrix(3, &[2, 0, 1]).unwrap();
        // sends |0> to |2>
        assert_eq!(m[(2, 0)], 1.0);
    }
}
