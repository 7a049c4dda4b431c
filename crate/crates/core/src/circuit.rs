//! Exact dense evolution of configuration-space vectors under brickwork
//! circuits, plus light-cone-restricted contraction.
//!
//! Sites are labeled `0..N-1`, most-significant digit first: configuration
//! `(s_0, .., s_{N-1})` has index `sum_x s_x q^(N-1-x)`. One full period is
//! `U = U_e U_o`; the odd layer acts first and couples pairs `(2k+1, 2k+2)`
//! (wrapping on periodic chains), the even layer couples `(2k, 2k+1)`. The
//! control is always the left site of a pair. Layer indices are global so a
//! window cut out of a larger chain keeps its brickwork alignment via
//! [`CircuitSpec::site_offset`].

use nalgebra::DVector;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gate::{
    check_generalized, check_generalized_left, flat_vec, ControlledGate, LocalGate, Observable,
};
use crate::TOL_COND;

/// Soft cap on dense state-vector sizes: `q^N <= 2^MAX_STATE_LOG2`.
pub const MAX_STATE_LOG2: f64 = 26.0;

const PAR_MIN_LEN: usize = 1 << 18;
const PAR_CHUNK: usize = 1 << 15;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    Periodic,
    Open,
}

impl std::fmt::Display for Boundary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Boundary::Periodic => write!(f, "periodic"),
            Boundary::Open => write!(f, "open"),
        }
    }
}

/// A homogeneous brickwork circuit: one gate, `N` sites, boundary condition.
#[derive(Clone, Debug)]
pub struct CircuitSpec {
    pub gate: LocalGate,
    pub n_sites: usize,
    pub boundary: Boundary,
    /// Global index of local site 0; fixes the brickwork parity of windows.
    pub site_offset: i64,
}

impl CircuitSpec {
    pub fn new(gate: LocalGate, n_sites: usize, boundary: Boundary) -> Result<Self> {
        if n_sites < 2 || n_sites % 2 != 0 {
            return Err(Error::InvalidDimension(format!(
                "chain length must be even and >= 2, got {n_sites}"
            )));
        }
        Ok(Self {
            gate,
            n_sites,
            boundary,
            site_offset: 0,
        })
    }

    /// An open sub-chain of `width` sites starting at global site `offset`.
    /// Used by the light-cone contraction; widths may be odd here.
    pub fn window(gate: LocalGate, width: usize, offset: i64) -> Result<Self> {
        if width < 2 {
            return Err(Error::InvalidDimension(format!(
                "window must span at least 2 sites, got {width}"
            )));
        }
        Ok(Self {
            gate,
            n_sites: width,
            boundary: Boundary::Open,
            site_offset: offset,
        })
    }

    pub fn q(&self) -> usize {
        self.gate.q()
    }

    /// Gate pairs `(control, target)` of one layer, in site order.
    pub fn pairs(&self, parity: LayerParity) -> Vec<(usize, usize)> {
        let want = match parity {
            LayerParity::Odd => 1,
            LayerParity::Even => 0,
        };
        let mut pairs = Vec::with_capacity(self.n_sites / 2);
        for a in 0..self.n_sites - 1 {
            if (self.site_offset + a as i64).rem_euclid(2) == want {
                pairs.push((a, a + 1));
            }
        }
        if self.boundary == Boundary::Periodic
            && (self.site_offset + self.n_sites as i64 - 1).rem_euclid(2) == want
        {
            pairs.push((self.n_sites - 1, 0));
        }
        pairs
    }
}

/// Which sublattice a layer acts on. The first layer of every period is
/// [`LayerParity::Odd`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LayerParity {
    Odd,
    Even,
}

impl LayerParity {
    /// Parity of the zero-based global layer index.
    pub fn of_index(layer: usize) -> Self {
        if layer % 2 == 0 {
            LayerParity::Odd
        } else {
            LayerParity::Even
        }
    }
}

pub(crate) fn state_len(q: usize, n_sites: usize) -> Result<usize> {
    let bits = n_sites as f64 * (q as f64).log2();
    if bits > MAX_STATE_LOG2 + 1e-9 {
        return Err(Error::WindowTooLarge(format!(
            "q^N = {q}^{n_sites} exceeds the 2^{MAX_STATE_LOG2} state budget"
        )));
    }
    Ok(q.pow(n_sites as u32))
}

/// Dense real vector over the `q^N` configurations of an `N`-site chain.
#[derive(Clone, Debug)]
pub struct StateVector {
    q: usize,
    n_sites: usize,
    data: Vec<f64>,
}

impl StateVector {
    /// Product state with per-site vectors.
    pub fn product(q: usize, site_states: &[DVector<f64>]) -> Result<Self> {
        let n_sites = site_states.len();
        state_len(q, n_sites)?;
        let mut data = vec![1.0];
        for s in site_states {
            if s.len() != q {
                return Err(Error::DimensionMismatch(format!(
                    "site state has {} components, expected {q}",
                    s.len()
                )));
            }
            let mut next = vec![0.0; data.len() * q];
            for (i, &v) in data.iter().enumerate() {
                for a in 0..q {
                    next[i * q + a] = v * s[a];
                }
            }
            data = next;
        }
        Ok(Self { q, n_sites, data })
    }

    /// The all-flat product state.
    pub fn flat(q: usize, n_sites: usize) -> Result<Self> {
        let states = vec![flat_vec(q); n_sites];
        Self::product(q, &states)
    }

    /// Flat product state with selected sites replaced.
    pub fn flat_with(q: usize, n_sites: usize, insertions: &[(usize, DVector<f64>)]) -> Result<Self> {
        let mut states = vec![flat_vec(q); n_sites];
        for (site, v) in insertions {
            if *site >= n_sites {
              return Err(Error::InvalidParameters(format!(
                    "insertion site {site} out of range for {n_sites} sites"
                )));
            }
            states[*site] = v.clone();
        }
        Self::product(q, &states)
    }

    /// Basis (delta) state for a classical configuration.
    pub fn basis(q: usize, config: &[usize]) -> Result<Self> {
        let n_sites = config.len();
        let len = state_len(q, n_sites)?;
        let mut idx = 0usize;
        for &s in config {
            if s >= q {
                return Err(Error::InvalidParameters(format!(
                    "configuration digit {s} out of range for q={q}"
                )));
            }
            idx = idx * q + s;
        }
        let mut data = vec![0.0; len];
        data[idx] = 1.0;
        Ok(Self { q, n_sites, data })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn inner(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a * b)
            .sum()
    }

    /// Contract against a product bra without materializing it: sites are
    /// contracted most-significant first, shrinking the work vector by a
    /// factor q per site.
    pub fn product_inner(&self, site_states: &[DVector<f64>]) -> f64 {
        assert_eq!(site_states.len(), self.n_sites);
        let mut cur = self.data.clone();
        let mut len = cur.len();
        for bra in site_states {
            let newlen = len / self.q;
            for r in 0..newlen {
                let mut acc = 0.0;
                for a in 0..self.q {
                    acc += bra[a] * cur[a * newlen + r];
                }
                cur[r] = acc;
            }
            len = newlen;
        }
        cur[0]
    }

    /// Multiply amplitudes by `diag[s_site]`: the insertion of a diagonal
    /// single-site operator.
    pub fn apply_diag(&mut self, site: usize, diag: &DVector<f64>) {
        assert!(site < self.n_sites);
        let stride = self.q.pow((self.n_sites - 1 - site) as u32);
        for (block, chunk) in self.data.chunks_mut(stride).enumerate() {
            let factor = diag[block % self.q];
            if factor != 1.0 {
                for v in chunk {
                    *v *= factor;
                }
            }
        }
    }
}

/// Gate data laid out for the contraction kernel. Controlled gates skip the
/// structurally-zero control transitions.
enum GateKernel {
    Generic { q: usize, rows: Vec<f64> },
    Controlled { q: usize, blocks: Vec<f64> },
}

impl GateKernel {
    fn from_gate(gate: &LocalGate) -> Self {
        let q = gate.q();
        if let Some(cg) = ControlledGate::split(gate, 0.0) {
            let mut blocks = Vec::with_capacity(q * q * q);
            for i in 0..q {
                let b = cg.block(i);
                for j_out in 0..q {
                    for j_in in 0..q {
                        blocks.push(b[(j_out, j_in)]);
                    }
                }
            }
            GateKernel::Controlled { q, blocks }
        } else {
            let d = q * q;
            let mut rows = Vec::with_capacity(d * d);
            let m = gate.matrix();
            for r in 0..d {
                for c in 0..d {
                    rows.push(m[(r, c)]);
                }
            }
            GateKernel::Generic { q, rows }
        }
    }

    /// `out[idx] = sum_{i',j'} U[(i,j),(i',j')] inp[idx with digits (i',j')]`
    /// where `i`, `j` are the control/target digits of `idx`.
    fn apply(&self, inp: &[f64], out: &mut [f64], s_ctrl: usize, s_tgt: usize) {
        debug_assert_eq!(inp.len(), out.len());
        match self {
            GateKernel::Generic { q, rows } => {
                let q = *q;
                let body = |offset: usize, chunk: &mut [f64]| {
                    for (k, o) in chunk.iter_mut().enumerate() {
                        let idx = offset + k;
                        let i = (idx / s_ctrl) % q;
                        let j = (idx / s_tgt) % q;
                        let base = idx - i * s_ctrl - j * s_tgt;
                        let row = (i * q + j) * q * q;
                        let mut acc = 0.0;
                        for i_in in 0..q {
                            for j_in in 0..q {
                                acc += rows[row + i_in * q + j_in]
                                    * inp[base + i_in * s_ctrl + j_in * s_tgt];
                            }
                        }
                        *o = acc;
                    }
                };
                if out.len() >= PAR_MIN_LEN {
                    out.par_chunks_mut(PAR_CHUNK)
                        .enumerate()
                        .for_each(|(ci, chunk)| body(ci * PAR_CHUNK, chunk));
                } else {
                    body(0, out);
                }
            }
            GateKernel::Controlled { q, blocks } => {
                let q = *q;
                let body = |offset: usize, chunk: &mut [f64]| {
                    for (k, o) in chunk.iter_mut().enumerate() {
                        let idx = offset + k;
                        let i = (idx / s_ctrl) % q;
                        let j = (idx / s_tgt) % q;
                        let base = idx - j * s_tgt;
                        let row = i * q * q + j * q;
                        let mut acc = 0.0;
                        for j_in in 0..q {
                            acc += blocks[row + j_in] * inp[base + j_in * s_tgt];
                        }
                        *o = acc;
                    }
                };
                if out.len() >= PAR_MIN_LEN {
                    out.par_chunks_mut(PAR_CHUNK)
                        .enumerate()
                        .for_each(|(ci, chunk)| body(ci * PAR_CHUNK, chunk));
                } else {
                    body(0, out);
                }
            }
        }
    }
}

/// Reusable layer applier: owns the gate kernel, the pair lists and a
/// scratch buffer. Pairs within one layer commute; layers are sequential.
pub struct Evolver {
    q: usize,
    n_sites: usize,
    kernel: GateKernel,
    pairs_odd: Vec<(usize, usize)>,
    pairs_even: Vec<(usize, usize)>,
    scratch: Vec<f64>,
}

impl Evolver {
    pub fn new(spec: &CircuitSpec) -> Result<Self> {
        let len = state_len(spec.q(), spec.n_sites)?;
        Ok(Self {
            q: spec.q(),
            n_sites: spec.n_sites,
            kernel: GateKernel::from_gate(&spec.gate),
            pairs_odd: spec.pairs(LayerParity::Odd),
            pairs_even: spec.pairs(LayerParity::Even),
            scratch: vec![0.0; len],
        })
    }

    fn stride(&self, site: usize) -> usize {
        self.q.pow((self.n_sites - 1 - site) as u32)
    }

    pub fn apply_layer(&mut self, state: &mut StateVector, parity: LayerParity) {
        assert_eq!(state.q, self.q);
        assert_eq!(state.n_sites, self.n_sites);
        let pairs = match parity {
            LayerParity::Odd => &self.pairs_odd,
            LayerParity::Even => &self.pairs_even,
        };
        for &(ctrl, tgt) in pairs {
            let (s_ctrl, s_tgt) = (self.stride(ctrl), self.stride(tgt));
            self.kernel
                .apply(&state.data, &mut self.scratch, s_ctrl, s_tgt);
            std::mem::swap(&mut state.data, &mut self.scratch);
        }
    }

    /// Apply global layers `start..start + count` (zero based; layer 0 is
    /// the odd layer that begins each period).
    pub fn step(&mut self, state: &mut StateVector, start_layer: usize, count: usize) {
        for l in start_layer..start_layer + count {
            self.apply_layer(state, LayerParity::of_index(l));
        }
    }
}

/// Evolve by `layers` half-periods starting from the odd layer; `2t` layers
/// make up `t` full periods.
pub fn evolve(state: &mut StateVector, spec: &CircuitSpec, layers: usize) -> Result<()> {
    let mut ev = Evolver::new(spec)?;
    ev.step(state, 0, layers);
    Ok(())
}

/// Which light-cone closures a gate supports.
#[derive(Clone, Copy, Debug)]
pub struct ConeCapability {
    /// Flat pairs are absorbed from below and above; the symmetric diamond
    /// window is exact.
    pub diamond: bool,
    /// Additionally one-sided: disturbances cannot cross a control leg with a
    /// flat target, so the window closes just right of the operators.
    pub triangular: bool,
}

/// Decide the light-cone closures available for `gate`. The triangular mode
/// needs the (generalized) controlled-stochastic condition on both sides with
/// a bistochastic `c`; the diamond mode only needs flat-pair absorption.
pub fn cone_capability(gate: &LocalGate) -> ConeCapability {
    let q = gate.q();
    let m = gate.matrix();
    let d = q * q;
    let amp = 1.0 / q as f64; // flat-pair amplitude
    let mut ket_dev = 0.0f64;
    for r in 0..d {
        let mut acc = 0.0;
        for c in 0..d {
            acc += m[(r, c)] * amp;
        }
        ket_dev = ket_dev.max((acc - amp).abs());
    }
    let mut bra_dev = 0.0f64;
    for c in 0..d {
        let mut acc = 0.0;
        for r in 0..d {
            acc += amp * m[(r, c)];
        }
        bra_dev = bra_dev.max((acc - amp).abs());
    }
    let diamond = ket_dev <= TOL_COND && bra_dev <= TOL_COND;
    let triangular = diamond
        && check_generalized(gate).map(|g| g.c_bistochastic).unwrap_or(false)
        && check_generalized_left(gate)
            .map(|g| g.c_bistochastic)
            .unwrap_or(false);
    ConeCapability {
        diamond,
        triangular,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LightConeMode {
    /// Symmetric causal diamond around both operators.
    Diamond,
    /// Right edge closed just past the rightmost operator; valid for
    /// controlled-stochastic gates, where nothing propagates rightward.
    Triangular,
}

/// The active window of sites, before clipping to the chain.
pub fn lightcone_window(x_src: i64, x_obs: i64, layers: usize, mode: LightConeMode) -> (i64, i64) {
    let lo = x_src.min(x_obs);
    let hi = x_src.max(x_obs);
    let t = layers as i64;
    match mode {
        LightConeMode::Diamond => (lo - t - 1, hi + t + 1),
        LightConeMode::Triangular => (lo - t - 1, hi + 1),
    }
}

/// A contracted correlation amplitude with its exactness flag.
#[derive(Clone, Copy, Debug)]
pub struct ConeValue {
    pub value: f64,
    /// True when the computed number provably equals the unrestricted
    /// full-chain contraction.
    pub exact: bool,
    /// Window of global sites actually simulated.
    pub window: (i64, i64),
}

/// Contract the two-point amplitude `<.. obs at (x_obs, layers) .. | U | ..
/// src at (x_src, 0) ..>` on the causal window only, closing external legs
/// with flat states. Exact whenever the window fits the chain; on periodic
/// chains that are too short the full ring is contracted instead and the
/// result flagged inexact.
pub fn lightcone_contract(
    spec: &CircuitSpec,
    d_src: &Observable,
    d_obs: &Observable,
    x_src: i64,
    x_obs: i64,
    layers: usize,
    mode: LightConeMode,
) -> Result<ConeValue> {
    let q = spec.q();
    if d_src.q() != q || d_obs.q() != q {
        return Err(Error::DimensionMismatch(
            "observable dimension does not match the gate".into(),
        ));
    }
    let cap = cone_capability(&spec.gate);
    let capable = match mode {
        LightConeMode::Diamond => cap.diamond,
        LightConeMode::Triangular => cap.triangular,
    };
    if !capable {
        return Err(Error::InvalidParameters(
            "gate does not absorb flat closures; light-cone contraction would be wrong".into(),
        ));
    }

    let n = spec.n_sites as i64;
    let (mut lo, mut hi) = lightcone_window(x_src, x_obs, layers, mode);
    match spec.boundary {
        Boundary::Open => {
            if !(0..n).contains(&x_src) || !(0..n).contains(&x_obs) {
                return Err(Error::InvalidParameters(format!(
                    "operator sites ({x_src}, {x_obs}) outside the open chain 0..{n}"
                )));
            }
            lo = lo.max(0);
            hi = hi.min(n - 1);
            let value = window_value(spec, d_src, d_obs, x_src, x_obs, layers, lo, hi)?;
            Ok(ConeValue {
                value,
                exact: true,
                window: (lo, hi),
            })
        }
        Boundary::Periodic => {
            let width = hi - lo + 1;
            if width <= n {
                let value = window_value(spec, d_src, d_obs, x_src, x_obs, layers, lo, hi)?;
                Ok(ConeValue {
                    value,
                    exact: true,
                    window: (lo, hi),
                })
            } else {
                // Window self-intersects around the ring: fall back to the
                // full chain and flag the wrap.
                let src = x_src.rem_euclid(n) as usize;
                let obs = x_obs.rem_euclid(n) as usize;
                let mut ket = StateVector::flat_with(
                    q,
                    spec.n_sites,
                    &[(src, d_src.site_state())],
                )?;
                let mut ev = Evolver::new(spec)?;
                ev.step(&mut ket, 0, layers);
                let mut bras = vec![flat_vec(q); spec.n_sites];
                bras[obs] = d_obs.site_state();
                Ok(ConeValue {
                    value: ket.product_inner(&bras),
                    exact: false,
                    window: (0, n - 1),
                })
            }
        }
    }
}

fn window_value(
    spec: &CircuitSpec,
    d_src: &Observable,
    d_obs: &Observable,
    x_src: i64,
    x_obs: i64,
    layers: usize,
    lo: i64,
    hi: i64,
) -> Result<f64> {
    let q = spec.q();
    let width = (hi - lo + 1) as usize;
    let wspec = CircuitSpec::window(spec.gate.clone(), width, spec.site_offset + lo)?;
    let src = (x_src - lo) as usize;
    let obs = (x_obs - lo) as usize;
    let mut ket = StateVector::flat_with(q, width, &[(src, d_src.site_state())])?;
    let mut ev = Evolver::new(&wspec)?;
    ev.step(&mut ket, 0, layers);
    let mut bras = vec![flat_vec(q); width];
    bras[obs] = d_obs.site_state();
    Ok(ket.product_inner(&bras))
}
