// Dev scratch probe; removed before release.
use bistoch::circuit::*;
use bistoch::correlator::*;
use bistoch::families::{make_gate, GateFamily};
use bistoch::gate::*;
use bistoch::linalg::jacobi_svd;
use nalgebra::DMatrix;

fn period_map(spec: &CircuitSpec) -> DMatrix<f64> {
    let q = spec.q();
    let n = spec.n_sites;
    let len = q.pow(n as u32);
    let mut ev = Evolver::new(spec).unwrap();
    let mut m = DMatrix::zeros(len, len);
    for col in 0..len {
        let mut config = vec![0usize; n];
        let mut idx = col;
        for site in (0..n).rev() {
            config[site] = idx % q;
            idx /= q;
        }
        let mut state = StateVector::basis(q, &config).unwrap();
        ev.step(&mut state, 0, 2);
        for row in 0..len {
            m[(row, col)] = state.data()[row];
        }
    }
    m
}

fn main() {
    let gate = make_gate(&GateFamily::AveragedHaar).unwrap().assemble();
    let d = traceless_basis(2).unwrap().remove(0);
    for n in [4usize, 6, 8] {
        let spec = CircuitSpec::new(gate.clone(), n, Boundary::Open).unwrap();
        let len = 1usize << n;
        let p = period_map(&spec);
        // kernel of P - I (right) and P^T - I (left)
        let id = DMatrix::identity(len, len);
        let a = &p - &id;
        let svd_r = jacobi_svd(&a);
        let svd_l = jacobi_svd(&a.transpose());
        let cut = 1e-8 * svd_r.sigma[0];
        let kr: Vec<usize> = (0..len).filter(|&k| svd_r.sigma[k] <= cut).collect();
        let kl: Vec<usize> = (0..len).filter(|&k| svd_l.sigma[k] <= cut).collect();
        println!("N={n}: right kernel dim {} left kernel dim {}", kr.len(), kl.len());
        println!("  smallest sigmas right: {:?}", &svd_r.sigma[len.saturating_sub(5)..]);
        // second-largest |eigenvalue| estimate via power iteration on deflated... skip; use complex_eigenvalues
        let eigs = p.clone().complex_eigenvalues();
        let mut mags: Vec<f64> = eigs.iter().map(|z| z.norm()).collect();
        mags.sort_by(|x, y| y.partial_cmp(x).unwrap());
        println!("  top |eig|: {:?}", &mags[..6.min(mags.len())]);
        // spectral projector plateau
        let r_mat = DMatrix::from_fn(len, kr.len(), |i, j| svd_r.v[(i, kr[j])]);
        let l_mat = DMatrix::from_fn(len, kl.len(), |i, j| svd_l.v[(i, kl[j])]);
        let lr = l_mat.transpose() * &r_mat;
        let lr_inv = lr.try_inverse().unwrap();
        // K = ket with obs at last site; B same
        let ket = StateVector::flat_with(2, n, &[(n - 1, d.site_state())]).unwrap();
        let kvec = DMatrix::from_fn(len, 1, |i, _| ket.data()[i]);
        let proj = &r_mat * lr_inv * l_mat.transpose() * &kvec;
        let plateau_oracle: f64 = ket.data().iter().zip(proj.iter()).map(|(b, v)| b * v).sum();
        // series plateau
        let series = autocorrelation(&spec, &d, n as i64 - 1, 400).unwrap();
        let tail = series[2 * 190].value;
        println!("  plateau oracle {plateau_oracle:.15e}");
        println!("  series value at t=190 periods {tail:.15e}");
        println!("  2^-(N-1) = {:.15e}", (0.5f64).powi(n as i32 - 1));
        // scar-overlap explicit: <B|scar> * <left|K> / <left|scar>? verify scar in kernel:
        let mut scar_states = vec![nalgebra::DVector::from_column_slice(&[1.0, 0.0]); n];
        scar_states[n - 1] = d.site_state();
        let scar = StateVector::product(2, &scar_states).unwrap();
        let mut pscar = scar.clone();
        let mut evlv = Evolver::new(&spec).unwrap();
        evlv.step(&mut pscar, 0, 2);
        let dev: f64 = pscar.data().iter().zip(scar.data()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        println!("  scar invariance dev {dev:.3e}");
    }
}
