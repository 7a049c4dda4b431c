//! Infinite-temperature spatio-temporal correlation functions on brickwork
//! circuits: two-point grids, multi-point insertions, autocorrelation series
//! and the numerical verification of the vanishing theorems.
//!
//! `C(x, t) = < - .. - obs_x - .. - | U(t) | - .. - src_0 - .. - >` with the
//! flat state everywhere else; `t` counts layers (half periods) throughout,
//! two layers per full period.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::{
    cone_capability, lightcone_contract, lightcone_window, state_len, Boundary, CircuitSpec,
    ConeCapability, Evolver, LightConeMode, StateVector,
};
use crate::error::{Error, Result};
use crate::gate::{condition_report, flat_vec, traceless_basis, LocalGate, Observable};
use crate::ZERO_TOL;

/// A correlation value together with its exactness guarantee: `exact` means
/// the number provably equals the infinite-chain contraction.
#[derive(Clone, Copy, Debug)]
pub struct PointValue {
    pub value: f64,
    pub exact: bool,
}

fn thermo_exact(
    cap: &ConeCapability,
    boundary: Boundary,
    n: i64,
    x_src: i64,
    x_obs: i64,
    layers: usize,
) -> bool {
    if layers == 0 {
        return true;
    }
    let mode = if cap.triangular {
        LightConeMode::Triangular
    } else if cap.diamond {
        LightConeMode::Diamond
    } else {
        return false;
    };
    let (lo, hi) = lightcone_window(x_src, x_obs, layers, mode);
    match boundary {
        Boundary::Periodic => hi - lo + 1 <= n,
        Boundary::Open => lo >= 0 && hi <= n - 1,
    }
}

/// Two-point correlator with source at `origin` (time 0) and observation at
/// `origin + dx` after `layers` layers. Uses the light-cone contraction
/// whenever the gate supports it, the full chain otherwise.
pub fn two_point(
    spec: &CircuitSpec,
    d_src: &Observable,
    d_obs: &Observable,
    origin: i64,
    dx: i64,
    layers: usize,
) -> Result<PointValue> {
    let cap = cone_capability(&spec.gate);
    let x_obs = origin + dx;
    if cap.triangular || cap.diamond {
        let mode = if cap.triangular {
            LightConeMode::Triangular
        } else {
            LightConeMode::Diamond
        };
        let cv = lightcone_contract(spec, d_src, d_obs, origin, x_obs, layers, mode)?;
        return Ok(PointValue {
            value: cv.value,
            exact: cv.exact,
        });
    }
    // No valid closure: contract the full chain.
    let n = spec.n_sites as i64;
    let q = spec.q();
    let (src, obs) = match spec.boundary {
        Boundary::Periodic => (origin.rem_euclid(n) as usize, x_obs.rem_euclid(n) as usize),
        Boundary::Open => {
            if !(0..n).contains(&origin) || !(0..n).contains(&x_obs) {
                return Err(Error::InvalidParameters(format!(
                    "operator sites ({origin}, {x_obs}) outside the open chain 0..{n}"
                )));
            }
            (origin as usize, x_obs as usize)
        }
    };
    let mut ket = StateVector::flat_with(q, spec.n_sites, &[(src, d_src.site_state())])?;
    let mut ev = Evolver::new(spec)?;
    ev.step(&mut ket, 0, layers);
    let mut bras = vec![flat_vec(q); spec.n_sites];
    bras[obs] = d_obs.site_state();
    Ok(PointValue {
        value: ket.product_inner(&bras),
        exact: layers == 0,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct GridEntry {
    /// Displacement of the observation site relative to the origin.
    pub x: i64,
    /// Time in layers.
    pub t: usize,
    pub value: f64,
    pub exact: bool,
}

/// A batch of two-point values on an (x, t) grid, all sharing one source.
#[derive(Clone, Debug)]
pub struct CorrelationGrid {
    pub origin: i64,
    pub n_sites: usize,
    pub boundary: Boundary,
    pub entries: Vec<GridEntry>,
}

impl CorrelationGrid {
    pub fn max_abs_where<F: Fn(&GridEntry) -> bool>(&self, pred: F) -> f64 {
        self.entries
            .iter()
            .filter(|e| pred(e))
            .map(|e| e.value.abs())
            .fold(0.0, f64::max)
    }
}

/// Evaluate `C(x, t)` for all displacements `xs` and every `t = 0..=t_max`
/// layers, via a single full-chain evolution with per-layer snapshots.
pub fn correlation_grid(
    spec: &CircuitSpec,
    d_src: &Observable,
    d_obs: &Observable,
    origin: i64,
    xs: &[i64],
    t_max_layers: usize,
) -> Result<CorrelationGrid> {
    let q = spec.q();
    let n = spec.n_sites as i64;
    let cap = cone_capability(&spec.gate);
    let site = |x: i64| -> Result<usize> {
        match spec.boundary {
            Boundary::Periodic => Ok(x.rem_euclid(n) as usize),
            Boundary::Open => {
                if (0..n).contains(&x) {
                    Ok(x as usize)
                } else {
                    Err(Error::InvalidParameters(format!(
                        "site {x} outside the open chain 0..{n}"
                    )))
                }
            }
        }
    };
    let src = site(origin)?;
    let mut ket = StateVector::flat_with(q, spec.n_sites, &[(src, d_src.site_state())])?;
    let mut ev = Evolver::new(spec)?;
    let mut entries = Vec::with_capacity(xs.len() * (t_max_layers + 1));
    for t in 0..=t_max_layers {
        if t > 0 {
            ev.step(&mut ket, t - 1, 1);
        }
        for &x in xs {
            let obs = site(origin + x)?;
            let mut bras = vec![flat_vec(q); spec.n_sites];
            bras[obs] = d_obs.site_state();
            entries.push(GridEntry {
                x,
                t,
                value: ket.product_inner(&bras),
                exact: thermo_exact(&cap, spec.boundary, n, origin, origin + x, t),
            });
        }
    }
    Ok(CorrelationGrid {
        origin,
        n_sites: spec.n_sites,
        boundary: spec.boundary,
        entries,
    })
}

/// One diagonal traceless insertion of an n-point correlator.
#[derive(Clone, Debug)]
pub struct Insertion {
    pub site: i64,
    pub t_layers: usize,
    pub obs: Observable,
}

/// An ordered list of insertions with non-decreasing times. The boundary bra
/// and ket are flat product states; each insertion applies `diag(d)` so that
/// the two-insertion case reproduces [`two_point`] exactly.
#[derive(Clone, Debug)]
pub struct MultiPointQuery {
    insertions: Vec<Insertion>,
}

impl MultiPointQuery {
    pub fn new(insertions: Vec<Insertion>) -> Result<Self> {
        if insertions.is_empty() {
            return Err(Error::InvalidParameters("empty multi-point query".into()));
        }
        for w in insertions.windows(2) {
            if w[1].t_layers < w[0].t_layers {
                return Err(Error::InvalidParameters(
                    "insertion times must be non-decreasing".into(),
                ));
            }
        }
        Ok(Self { insertions })
    }

    pub fn insertions(&self) -> &[Insertion] {
        &self.insertions
    }
}

/// Contract an n-point correlation function on the full chain.
pub fn multi_point(spec: &CircuitSpec, query: &MultiPointQuery) -> Result<f64> {
    let q = spec.q();
    let n = spec.n_sites as i64;
    let mut ket = StateVector::flat(q, spec.n_sites)?;
    let mut ev = Evolver::new(spec)?;
    let mut now = 0usize;
    for ins in &query.insertions {
        if ins.obs.q() != q {
            return Err(Error::DimensionMismatch(
                "observable dimension does not match the gate".into(),
            ));
        }
        let site = match spec.boundary {
            Boundary::Periodic => ins.site.rem_euclid(n) as usize,
            Boundary::Open => {
                if (0..n).contains(&ins.site) {
                    ins.site as usize
                } else {
                    return Err(Error::InvalidParameters(format!(
                        "insertion site {} outside the open chain 0..{n}",
                        ins.site
                    )));
                }
            }
        };
        ev.step(&mut ket, now, ins.t_layers - now);
        now = ins.t_layers;
        ket.apply_diag(site, ins.obs.d());
    }
    let bras = vec![flat_vec(q); spec.n_sites];
    Ok(ket.product_inner(&bras))
}

/// The autocorrelation series `C(0, t)` for `t = 0..=t_max` layers, with the
/// source and observation both at `origin`. Small chains are evolved once
/// with per-layer snapshots; chains beyond the dense budget fall back to
/// per-time triangular light-cone windows.
pub fn autocorrelation(
    spec: &CircuitSpec,
    d: &Observable,
    origin: i64,
    t_max_layers: usize,
) -> Result<Vec<PointValue>> {
    let q = spec.q();
    let n = spec.n_sites as i64;
    let cap = cone_capability(&spec.gate);
    if state_len(q, spec.n_sites).is_ok() {
        let src = match spec.boundary {
            Boundary::Periodic => origin.rem_euclid(n) as usize,
            Boundary::Open => {
                if !(0..n).contains(&origin) {
                    return Err(Error::InvalidParameters(format!(
                        "origin {origin} outside the open chain 0..{n}"
                    )));
                }
                origin as usize
            }
        };
        let mut ket = StateVector::flat_with(q, spec.n_sites, &[(src, d.site_state())])?;
        let mut ev = Evolver::new(spec)?;
        let mut bras = vec![flat_vec(q); spec.n_sites];
        bras[src] = d.site_state();
        let mut series = Vec::with_capacity(t_max_layers + 1);
        for t in 0..=t_max_layers {
            if t > 0 {
                ev.step(&mut ket, t - 1, 1);
            }
            series.push(PointValue {
                value: ket.product_inner(&bras),
                exact: thermo_exact(&cap, spec.boundary, n, origin, origin, t),
            });
        }
        return Ok(series);
    }
    if !cap.triangular {
        return Err(Error::WindowTooLarge(format!(
            "chain of {} sites exceeds the dense budget and the gate does not \
             support triangular light cones",
            spec.n_sites
        )));
    }
    (0..=t_max_layers)
        .map(|t| {
            let cv = lightcone_contract(spec, d, d, origin, origin, t, LightConeMode::Triangular)?;
            Ok(PointValue {
                value: cv.value,
                exact: cv.exact,
            })
        })
        .collect()
}

/// Every second entry of a per-layer series: the full-period subsequence.
pub fn period_values(series: &[PointValue]) -> Vec<f64> {
    series.iter().step_by(2).map(|p| p.value).collect()
}

/// Report of a numerical theorem verification run.
#[derive(Clone, Debug)]
pub struct TheoremReport {
    pub cs: bool,
    pub bcs: bool,
    /// Largest `|C(x, t)|` over tested displacements x > 0.
    pub max_right: f64,
    /// Largest `|C(x, t)|` over tested displacements x < 0.
    pub max_left: f64,
    /// Largest multi-point violation over unique-maximum queries; `None`
    /// when the gate satisfies only one condition.
    pub max_multi: Option<f64>,
    pub multi_queries: usize,
    /// All assertions implied by the satisfied conditions hold below
    /// [`crate::ZERO_TOL`].
    pub passed: bool,
}

/// Run the vanishing-correlation checks a gate's conditions imply: grids for
/// the one- or two-sided zeros, randomized unique-maximum multi-point queries
/// when both conditions hold. Fails with [`Error::TheoremNotApplicable`] when
/// the gate satisfies neither condition.
pub fn verify_theorems(
    gate: &LocalGate,
    sizes: &[usize],
    t_periods: usize,
    n_queries: usize,
    seed: u64,
) -> Result<TheoremReport> {
    let report = condition_report(gate);
    let (cs, bcs) = (report.cs.holds, report.bcs.holds);
    if !cs && !bcs {
        return Err(Error::TheoremNotApplicable(
            "gate satisfies neither the controlled-stochastic nor the \
             controlled-bistochastic condition"
                .into(),
        ));
    }
    let q = gate.q();
    let basis = traceless_basis(q)?;
    let mut max_right = 0.0f64;
    let mut max_left = 0.0f64;
    for &n in sizes {
        let spec = CircuitSpec::new(gate.clone(), n, Boundary::Periodic)?;
        // Ring-wrap exactness: two-sided zeros are guaranteed up to
        // N - 2 layers, one-sided zeros only while the disturbed arc
        // stays clear of the probed half of the ring.
        let max_layers = if cs && bcs { n - 2 } else { n / 2 - 1 };
        let layers = (2 * t_periods).min(max_layers);
        let xs: Vec<i64> = (-(n as i64) / 2 + 1..=(n as i64) / 2).collect();
        for origin in [0i64, 1] {
            for d_src in &basis {
                for d_obs in &basis {
                    let grid = correlation_grid(&spec, d_src, d_obs, origin, &xs, layers)?;
                    let half = n as i64 / 2;
                    // Displacement +N/2 is also -N/2 on the ring: only count
                    // it for a side whose zero claim covers it (both hold
                    // when cs && bcs).
                    max_right = max_right.max(grid.max_abs_where(|e| {
                        e.x > 0 && (e.x < half || (cs && bcs))
                    }));
                    max_left = max_left.max(grid.max_abs_where(|e| e.x < 0));
                }
            }
        }
    }

    let mut max_multi = None;
    let mut multi_queries = 0;
    if cs && bcs {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0f64;
        let n = *sizes.iter().max().unwrap_or(&8);
        let spec = CircuitSpec::new(gate.clone(), n, Boundary::Periodic)?;
        let max_layers = n - 4;
        for _ in 0..n_queries {
            let query = random_unique_max_query(&mut rng, q, n, max_layers, &basis)?;
            worst = worst.max(multi_point(&spec, &query)?.abs());
            multi_queries += 1;
        }
        max_multi = Some(worst);
    }

    let passed = (!cs || max_right < ZERO_TOL)
        && (!bcs || max_left < ZERO_TOL)
        && max_multi.map(|m| m < ZERO_TOL).unwrap_or(true);
    Ok(TheoremReport {
        cs,
        bcs,
        max_right,
        max_left,
        max_multi,
        multi_queries,
        passed,
    })
}

/// Random n-point query (n in 2..=4) whose site set has a unique maximum,
/// confined to a band of the ring so that site order is unambiguous, and
/// wrap-safe: no insertion's causal cone (which only spreads leftward for
/// controlled-stochastic gates) can wrap around the ring and reach another
/// insertion from the right. On such queries the ring value coincides with
/// the infinite-chain one and the vanishing theorem applies verbatim.
pub fn random_unique_max_query<R: Rng>(
    rng: &mut R,
    _q: usize,
    n_sites: usize,
    max_layers: usize,
    basis: &[Observable],
) -> Result<MultiPointQuery> {
    let n = n_sites as i64;
    let n_ops = rng.gen_range(2..=4usize);
    // Keep one site of head room at each band end.
    let band_lo = 1i64;
    let band_hi = n - 2;
    loop {
        let sites: Vec<i64> = (0..n_ops)
            .map(|_| rng.gen_range(band_lo..=band_hi))
            .collect();
        let max = *sites.iter().max().unwrap();
        if sites.iter().filter(|&&s| s == max).count() != 1 {
            continue;
        }
        let mut times: Vec<usize> = (0..n_ops).map(|_| rng.gen_range(0..=max_layers)).collect();
        times.sort_unstable();
        let t_n = *times.last().unwrap() as i64;
        let wrap_safe = sites.iter().zip(&times).all(|(&x_j, &t_j)| {
            let reach = t_n - t_j as i64 + 3;
            sites
                .iter()
                .all(|&x_i| x_i == x_j || x_j - x_i + n > reach)
        });
        if !wrap_safe {
            continue;
        }
        let insertions = sites
            .into_iter()
            .zip(times)
            .map(|(site, t_layers)| Insertion {
                site,
                t_layers,
                obs: basis[rng.gen_range(0..basis.len())].clone(),
            })
            .collect();
        return MultiPointQuery::new(insertions);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{make_gate, GateFamily};
    use crate::random;
    use approx::assert_abs_diff_eq;
    use rand_chacha::ChaCha8Rng;

    fn avg_spec(n: usize) -> CircuitSpec {
        let gate = make_gate(&GateFamily::AveragedHaar).unwrap().assemble();
        CircuitSpec::new(gate, n, Boundary::Periodic).unwrap()
    }

    fn d2() -> Observable {
        traceless_basis(2).unwrap().remove(0)
    }

    #[test]
    fn equal_time_overlaps() {
        let spec = avg_spec(8);
        let d = d2();
        // t=0, x!=0: orthogonality of the observable to the flat state.
        let v = two_point(&spec, &d, &d, 0, 3, 0).unwrap();
        assert_abs_diff_eq!(v.value, 0.0, epsilon = 1e-14);
        // t=0, x=0: (1/q) d.d
        let v = two_point(&spec, &d, &d, 0, 0, 0).unwrap();
        assert_abs_diff_eq!(v.value, d.d().dot(d.d()) / 2.0, epsilon = 1e-14);
    }

    #[test]
    fn averaged_gate_offsite_correlations_vanish() {
        let spec = avg_spec(12);
        let d = d2();
        // x = 2 after 5 layers: strictly inside the vanishing region.
        let v = two_point(&spec, &d, &d, 0, 2, 5).unwrap();
        assert!(v.value.abs() < 1e-12, "got {}", v.value);
        assert!(v.exact);
    }

    #[test]
    fn lightcone_agrees_with_full_chain_everywhere() {
        // Cross-check the windowed contraction against the ring for every
        // (x, t) with 2t + 2 <= N.
        let spec = avg_spec(12);
        let d = d2();
        for layers in 0..=5usize {
            for x in -5i64..=6 {
                let full = {
                    let q = spec.q();
                    let n = spec.n_sites;
                    let src = 0usize;
                    let obs = (x.rem_euclid(n as i64)) as usize;
                    let mut ket =
                        StateVector::flat_with(q, n, &[(src, d.site_state())]).unwrap();
                    let mut ev = Evolver::new(&spec).unwrap();
                    ev.step(&mut ket, 0, layers);
                    let mut bras = vec![flat_vec(q); n];
                    bras[obs] = d.site_state();
                    ket.product_inner(&bras)
                };
                for mode in [LightConeMode::Triangular, LightConeMode::Diamond] {
                    let cone = lightcone_contract(&spec, &d, &d, 0, x, layers, mode).unwrap();
                    assert!(
                        (cone.value - full).abs() < 1e-12,
                        "mode {mode:?} x={x} t={layers}: cone {} vs full {full}",
                        cone.value
                    );
                }
            }
        }
    }

    #[test]
    fn multi_point_reduces_to_two_point() {
        let spec = avg_spec(10);
        let d = d2();
        for (dx, layers) in [(0i64, 4usize), (-2, 4), (1, 2), (-3, 6)] {
            let direct = two_point(&spec, &d, &d, 2, dx, layers).unwrap().value;
            let query = MultiPointQuery::new(vec![
                Insertion {
                    site: 2,
                    t_layers: 0,
                    obs: d.clone(),
                },
                Insertion {
                    site: 2 + dx,
                    t_layers: layers,
                    obs: d.clone(),
                },
            ])
            .unwrap();
            let via_query = multi_point(&spec, &query).unwrap();
            assert_abs_diff_eq!(direct, via_query, epsilon = 1e-13);
        }
    }

    #[test]
    fn multi_point_rejects_unsorted_times() {
        let d = d2();
        assert!(MultiPointQuery::new(vec![
            Insertion {
                site: 0,
                t_layers: 3,
                obs: d.clone()
            },
            Insertion {
                site: 1,
                t_layers: 1,
                obs: d
            },
        ])
        .is_err());
    }

    #[test]
    fn autocorrelation_starts_at_unit_norm() {
        let spec = avg_spec(8);
        let d = d2();
        let series = autocorrelation(&spec, &d, 0, 8).unwrap();
        assert_abs_diff_eq!(series[0].value, 1.0, epsilon = 1e-13);
        // Strictly decreasing on the per-period subsequence.
        let periods = period_values(&series);
        for w in periods.windows(2) {
            assert!(w[1] < w[0] + 1e-12, "{:?}", periods);
        }
    }

    #[test]
    fn cnot_autocorrelation_vanishes_for_positive_times() {
        let gate = make_gate(&GateFamily::Cnot).unwrap().assemble();
        let spec = CircuitSpec::new(gate, 10, Boundary::Periodic).unwrap();
        let d = d2();
        let series = autocorrelation(&spec, &d, 0, 16).unwrap();
        assert_abs_diff_eq!(series[0].value, 1.0, epsilon = 1e-14);
        for t in 1..=8 {
            assert!(
                series[2 * t].value.abs() < 1e-14,
                "period {t}: {}",
                series[2 * t].value
            );
        }
    }

    #[test]
    fn verify_theorems_passes_for_averaged_gate() {
        let gate = make_gate(&GateFamily::AveragedHaar).unwrap().assemble();
        let report = verify_theorems(&gate, &[10], 5, 100, 7).unwrap();
        assert!(report.cs && report.bcs);
        assert!(report.passed, "{report:?}");
        assert!(report.max_right < 1e-12);
        assert!(report.max_left < 1e-12);
        assert!(report.max_multi.unwrap() < 1e-12);
    }

    #[test]
    fn verify_theorems_rejects_generic_gates() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let gate = random::generic_gate(2, &mut rng);
        assert!(matches!(
            verify_theorems(&gate, &[8], 2, 10, 1),
            Err(Error::TheoremNotApplicable(_))
        ));
    }
}
