//! Scattering states and the amplitudes built from them.
//!
//! Three independent constructions of `|ψ_k⟩`:
//!
//! * integral form: `(1 - G_k V) ψ = |k⟩`
//! * full-resolvent form: `ψ = |k⟩ + (E_k - H + iε)^{-1} V |k⟩`
//! * rank-one closed form: `ψ = |k⟩ + G_k|g⟩ λ conj(g_k) / Δ_k`
//!
//! Dense routes use a row-equilibrated LU and refuse systems whose condition
//! estimate exceeds [`CONDITION_LIMIT`].

use std::fmt;

use num_traits::{One, Zero};

use crate::error::{LabError, Result};
use crate::hilbert::{dot, plane_wave, ModelGrid, Potential, SeparablePotential, StateVector};
use crate::linalg::{solve_equilibrated, Matrix};
use crate::resolvent::{dko_unchecked, g0_unchecked, propagator, AdiabaticParam};
use crate::scalar::{abs, imag_unit_times, real, to_c64, to_f64, Cx, Real};

pub const CONDITION_LIMIT: f64 = 1e12;

/// `|Δ_k|` below `FREDHOLM_FLOOR · (1 + |λ| ‖g‖² / ε)` is treated as resonant.
pub const FREDHOLM_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Route {
    LsSolve,
    LowSolve,
    SeparableClosed,
}

impl std::str::FromStr for Route {
    type Err = LabError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ls-solve" => Ok(Route::LsSolve),
            "low-solve" => Ok(Route::LowSolve),
            "separable-closed" => Ok(Route::SeparableClosed),
            other => Err(LabError::invalid(format!(
                "unknown route `{other}` (expected ls-solve, low-solve or separable-closed)"
            ))),
        }
    }
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Route::LsSolve => "ls-solve",
            Route::LowSolve => "low-solve",
            Route::SeparableClosed => "separable-closed",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringSolution {
    incident_index: usize,
    psi: StateVector,
    energy: f64,
    eps: AdiabaticParam,
    route: Route,
    fredholm: Option<Cx>,
    condition: Option<f64>,
}

impl ScatteringSolution {
    pub fn incident_index(&self) -> usize {
        self.incident_index
    }

    pub fn psi(&self) -> &StateVector {
        &self.psi
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn eps(&self) -> AdiabaticParam {
        self.eps
    }

    pub fn route(&self) -> Route {
        self.route
    }

    /// `Δ_k`, present only for the closed-form route.
    pub fn fredholm(&self) -> Option<Cx> {
        self.fredholm
    }

    /// Condition estimate of the equilibrated system (dense routes only).
    pub fn condition(&self) -> Option<f64> {
        self.condition
    }
}

fn check_inputs(grid: &ModelGrid, v: &Potential, incident: usize) -> Result<()> {
    v.check_grid(grid)?;
    if incident >= grid.size() {
        return Err(LabError::invalid(format!(
            "incident index {incident} out of range for grid of size {}",
            grid.size()
        )));
    }
    Ok(())
}

fn conditioned(eps: AdiabaticParam, estimate: f64) -> Result<()> {
    if estimate.is_nan() || estimate > CONDITION_LIMIT {
        return Err(LabError::Conditioning {
            eps: eps.value(),
            estimate,
            limit: CONDITION_LIMIT,
        });
    }
    Ok(())
}

/// Solves `(1 - G_k V) ψ = |k⟩`.
pub fn solve_ls(
    grid: &ModelGrid,
    v: &Potential,
    incident: usize,
    eps: AdiabaticParam,
) -> Result<ScatteringSolution> {
    check_inputs(grid, v, incident)?;
    let ek = grid.energy(incident);
    let en = grid.energies();
    let vm = v.to_matrix();
    let a = Matrix::from_fn(grid.size(), |i, j| {
        let gv = propagator(ek, en[i], eps, false) * vm[(i, j)];
        if i == j {
            Cx::one() - gv
        } else {
            -gv
        }
    });
    let rhs = plane_wave(grid, incident)?;
    let sol = solve_equilibrated(a, rhs.amplitudes());
    conditioned(eps, sol.condition)?;
    Ok(ScatteringSolution {
        incident_index: incident,
        psi: StateVector::new(sol.x),
        energy: ek,
        eps,
        route: Route::LsSolve,
        fredholm: None,
        condition: Some(sol.condition),
    })
}

/// Solves `(E_k - H0 - V + iε) x = V|k⟩` and returns `ψ = |k⟩ + x`.
pub fn solve_low(
    grid: &ModelGrid,
    v: &Potential,
    incident: usize,
    eps: AdiabaticParam,
) -> Result<ScatteringSolution> {
    check_inputs(grid, v, incident)?;
    let ek = grid.energy(incident);
    let en = grid.energies();
    let vm = v.to_matrix();
    let a = Matrix::from_fn(grid.size(), |i, j| {
        if i == j {
            Cx::new(real(ek) - real(en[i]), eps.real()) - vm[(i, j)]
        } else {
            -vm[(i, j)]
        }
    });
    let k = plane_wave(grid, incident)?;
    let rhs = v.apply(&k);
    let sol = solve_equilibrated(a, rhs.amplitudes());
    conditioned(eps, sol.condition)?;
    let psi = StateVector::new(sol.x).zip_with(&k, |x, e| x + e);
    Ok(ScatteringSolution {
        incident_index: incident,
        psi,
        energy: ek,
        eps,
        route: Route::LowSolve,
        fredholm: None,
        condition: Some(sol.condition),
    })
}

/// `Δ_k = 1 - λ ⟨g|G_k|g⟩` by direct summation.
pub fn fredholm_determinant(grid: &ModelGrid, v: &SeparablePotential, e: f64, eps: AdiabaticParam) -> Cx {
    let g = v.formfactor().amplitudes();
    let en = grid.energies();
    let sum = g.iter().zip(en).fold(Cx::zero(), |acc, (gi, ei)| {
        acc + propagator(e, *ei, eps, false) * (gi.conj() * *gi)
    });
    Cx::one() - sum * real(v.coupling())
}

/// Rank-one closed form. Fails with [`LabError::NearZeroFredholm`] when the
/// coupling sits on a resonance of the kernel.
pub fn separable_closed_form(
    grid: &ModelGrid,
    v: &SeparablePotential,
    incident: usize,
    eps: AdiabaticParam,
) -> Result<ScatteringSolution> {
    if v.formfactor().len() != grid.size() {
        return Err(LabError::invalid("form factor does not match grid size"));
    }
    if incident >= grid.size() {
        return Err(LabError::invalid(format!(
            "incident index {incident} out of range for grid of size {}",
            grid.size()
        )));
    }
    let ek = grid.energy(incident);
    let delta = fredholm_determinant(grid, v, ek, eps);
    let gnorm2 = v.formfactor().norm();
    let gnorm2 = gnorm2 * gnorm2;
    let scale = real(1.0) + real(v.coupling().abs()) * gnorm2 / eps.real();
    if abs(delta) < real(FREDHOLM_FLOOR) * scale {
        return Err(LabError::NearZeroFredholm {
            eps: eps.value(),
            index: incident,
            delta: to_c64(delta),
        });
    }
    let g = v.formfactor();
    let amp = g[incident].conj() * real(v.coupling()) / delta;
    let mut psi = g0_unchecked(grid, ek, eps, g, false).scaled(amp);
    let mut amps = std::mem::replace(&mut psi, StateVector::zeros(0)).into_amplitudes();
    amps[incident] = amps[incident] + Cx::one();
    Ok(ScatteringSolution {
        incident_index: incident,
        psi: StateVector::new(amps),
        energy: ek,
        eps,
        route: Route::SeparableClosed,
        fredholm: Some(delta),
        condition: None,
    })
}

/// Dispatches to the requested construction.
pub fn solve(
    grid: &ModelGrid,
    v: &Potential,
    incident: usize,
    eps: AdiabaticParam,
    route: Route,
) -> Result<ScatteringSolution> {
    match route {
        Route::LsSolve => solve_ls(grid, v, incident, eps),
        Route::LowSolve => solve_low(grid, v, incident, eps),
        Route::SeparableClosed => {
            let sep = v
                .as_separable()
                .ok_or_else(|| LabError::invalid("closed-form route requires a separable potential"))?;
            separable_closed_form(grid, sep, incident, eps)
        }
    }
}

/// Solves several channels; independent solves run in parallel when the
/// `parallel` feature is on. Output order follows `incidents`.
pub fn solve_channels(
    grid: &ModelGrid,
    v: &Potential,
    incidents: &[usize],
    eps: AdiabaticParam,
    route: Route,
) -> Result<Vec<ScatteringSolution>> {
    crate::par::map(incidents, |&i| solve(grid, v, i, eps, route))
        .into_iter()
        .collect()
}

pub(crate) fn check_solution(grid: &ModelGrid, v: &Potential, sol: &ScatteringSolution) -> Result<()> {
    v.check_grid(grid)?;
    if sol.psi.len() != grid.size() {
        return Err(LabError::invalid(format!(
            "solution of length {} does not match grid size {}",
            sol.psi.len(),
            grid.size()
        )));
    }
    Ok(())
}

pub(crate) fn check_pair(a: &ScatteringSolution, b: &ScatteringSolution) -> Result<()> {
    if a.eps.value().to_bits() != b.eps.value().to_bits() {
        return Err(LabError::InvalidPairing(format!(
            "solutions built at different eps ({} vs {})",
            a.eps.value(),
            b.eps.value()
        )));
    }
    if a.psi.len() != b.psi.len() {
        return Err(LabError::InvalidPairing(format!(
            "solutions of different length ({} vs {})",
            a.psi.len(),
            b.psi.len()
        )));
    }
    Ok(())
}

/// `T_nk = ⟨n|V|ψ_k⟩`.
pub fn t_amplitude(grid: &ModelGrid, v: &Potential, sol: &ScatteringSolution, n: usize) -> Result<Cx> {
    check_solution(grid, v, sol)?;
    if n >= grid.size() {
        return Err(LabError::invalid(format!("index {n} out of range")));
    }
    Ok(v.apply(&sol.psi)[n])
}

/// A solution paired with `V|ψ⟩`, so pairwise brackets do not repeat the
/// matrix-vector product.
pub(crate) struct Channel<'a> {
    pub sol: &'a ScatteringSolution,
    pub v_psi: StateVector,
}

impl<'a> Channel<'a> {
    pub fn new(v: &Potential, sol: &'a ScatteringSolution) -> Self {
        Self {
            sol,
            v_psi: v.apply(&sol.psi),
        }
    }

    pub fn index(&self) -> usize {
        self.sol.incident_index
    }

    pub fn t(&self, n: usize) -> Cx {
        self.v_psi[n]
    }
}

pub(crate) fn c_of(grid: &ModelGrid, n: &Channel<'_>, k: &Channel<'_>) -> Cx {
    let eps = k.sol.eps;
    let gk = g0_unchecked(grid, k.sol.energy, eps, &k.v_psi, false);
    let gngk = g0_unchecked(grid, n.sol.energy, eps, &gk, true);
    dot(&n.v_psi, &gngk)
}

pub(crate) fn a_of(grid: &ModelGrid, n: &Channel<'_>, k: &Channel<'_>) -> Cx {
    let d = dko_unchecked(grid, k.sol.energy, k.sol.eps, &k.v_psi);
    dot(&n.v_psi, &d)
}

pub(crate) fn a_offshell_of(grid: &ModelGrid, n: &Channel<'_>, k: &Channel<'_>) -> Cx {
    let de = real(k.sol.energy) - real(n.sol.energy);
    Cx::new(k.sol.eps.real(), de) * c_of(grid, n, k)
}

pub(crate) fn expansion_of(grid: &ModelGrid, n: &Channel<'_>, k: &Channel<'_>) -> Cx {
    let (ni, ki) = (n.index(), k.index());
    let eps = k.sol.eps;
    let free = if ni == ki { Cx::one() } else { Cx::zero() };
    // ⟨n|G_k V|ψ_k⟩
    let second = propagator(k.sol.energy, grid.energy(ni), eps, false) * k.v_psi[ni];
    // ⟨ψ_n|V G_n^†|k⟩
    let third = n.v_psi[ki].conj() * propagator(n.sol.energy, grid.energy(ki), eps, true);
    free + second + third + c_of(grid, n, k)
}

/// `C_nk = ⟨ψ_n|V G_n^† G_k V|ψ_k⟩`.
pub fn c_amplitude(
    grid: &ModelGrid,
    v: &Potential,
    sol_n: &ScatteringSolution,
    sol_k: &ScatteringSolution,
) -> Result<Cx> {
    check_solution(grid, v, sol_n)?;
    check_solution(grid, v, sol_k)?;
    check_pair(sol_n, sol_k)?;
    Ok(c_of(grid, &Channel::new(v, sol_n), &Channel::new(v, sol_k)))
}

/// `A_nk = ⟨ψ_n|V D(E_k) V|ψ_k⟩`, with `D` evaluated at the energy of the
/// right-hand state.
pub fn a_amplitude(
    grid: &ModelGrid,
    v: &Potential,
    sol_n: &ScatteringSolution,
    sol_k: &ScatteringSolution,
) -> Result<Cx> {
    check_solution(grid, v, sol_n)?;
    check_solution(grid, v, sol_k)?;
    check_pair(sol_n, sol_k)?;
    Ok(a_of(grid, &Channel::new(v, sol_n), &Channel::new(v, sol_k)))
}

/// `(ε + i(E_k - E_n)) C_nk`: coincides with `A_nk` when `E_n = E_k` and is
/// the continuation for which `I_nk = δ_nk - d_nk Ã_nk` holds at finite ε
/// for every pair.
pub fn a_offshell(
    grid: &ModelGrid,
    v: &Potential,
    sol_n: &ScatteringSolution,
    sol_k: &ScatteringSolution,
) -> Result<Cx> {
    check_solution(grid, v, sol_n)?;
    check_solution(grid, v, sol_k)?;
    check_pair(sol_n, sol_k)?;
    Ok(a_offshell_of(
        grid,
        &Channel::new(v, sol_n),
        &Channel::new(v, sol_k),
    ))
}

/// `I_nk = ⟨ψ_n|ψ_k⟩`.
pub fn overlap_direct(sol_n: &ScatteringSolution, sol_k: &ScatteringSolution) -> Result<Cx> {
    check_pair(sol_n, sol_k)?;
    Ok(dot(&sol_n.psi, &sol_k.psi))
}

/// Overlap from the four-term expansion obtained by inserting the integral
/// equation on both sides.
pub fn overlap_expansion(
    grid: &ModelGrid,
    v: &Potential,
    sol_n: &ScatteringSolution,
    sol_k: &ScatteringSolution,
) -> Result<Cx> {
    check_solution(grid, v, sol_n)?;
    check_solution(grid, v, sol_k)?;
    check_pair(sol_n, sol_k)?;
    Ok(expansion_of(
        grid,
        &Channel::new(v, sol_n),
        &Channel::new(v, sol_k),
    ))
}

/// Pairwise amplitude tables over a list of channels. Entry `[a][b]` pairs
/// bra channel `indices[a]` with ket channel `indices[b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeSet {
    pub indices: Vec<usize>,
    pub t: Vec<Vec<Cx>>,
    pub c: Vec<Vec<Cx>>,
    pub a: Vec<Vec<Cx>>,
    pub overlap: Vec<Vec<Cx>>,
    pub free_overlap: Vec<Vec<Cx>>,
}

impl AmplitudeSet {
    pub fn assemble(grid: &ModelGrid, v: &Potential, solutions: &[ScatteringSolution]) -> Result<Self> {
        for s in solutions {
            check_solution(grid, v, s)?;
            if let Some(first) = solutions.first() {
                check_pair(first, s)?;
            }
        }
        let channels: Vec<Channel<'_>> = solutions.iter().map(|s| Channel::new(v, s)).collect();
        let row = |n: &Channel<'_>| {
            let mut t = Vec::with_capacity(channels.len());
            let mut c = Vec::with_capacity(channels.len());
            let mut a = Vec::with_capacity(channels.len());
            let mut o = Vec::with_capacity(channels.len());
            let mut f = Vec::with_capacity(channels.len());
            for k in &channels {
                t.push(k.t(n.index()));
                c.push(c_of(grid, n, k));
                a.push(a_of(grid, n, k));
                o.push(dot(&n.sol.psi, &k.sol.psi));
                f.push(if n.index() == k.index() {
                    Cx::one()
                } else {
                    Cx::zero()
                });
            }
            (t, c, a, o, f)
        };
        let rows = crate::par::map(&channels, row);

        let mut set = AmplitudeSet {
            indices: solutions.iter().map(|s| s.incident_index).collect(),
            t: Vec::new(),
            c: Vec::new(),
            a: Vec::new(),
            overlap: Vec::new(),
            free_overlap: Vec::new(),
        };
        for (t, c, a, o, f) in rows {
            set.t.push(t);
            set.c.push(c);
            set.a.push(a);
            set.overlap.push(o);
            set.free_overlap.push(f);
        }
        Ok(set)
    }
}

/// `‖ψ_a - ψ_b‖ / ‖ψ_a‖`.
pub fn route_distance(a: &ScatteringSolution, b: &ScatteringSolution) -> Result<f64> {
    check_pair(a, b)?;
    let diff = a.psi.zip_with(&b.psi, |x, y| x - y);
    let den = a.psi.norm();
    if den == Real::zero() {
        return Ok(to_f64(diff.norm()));
    }
    Ok(to_f64(diff.norm() / den))
}

/// Magnitude `‖η_k V ψ_k‖ = ε‖G_k V ψ_k‖`, the amount by which `ψ_k` misses
/// being an eigenvector of `H`.
pub fn eigen_defect(grid: &ModelGrid, v: &Potential, sol: &ScatteringSolution) -> Result<f64> {
    check_solution(grid, v, sol)?;
    let vpsi = v.apply(&sol.psi);
    let eta = g0_unchecked(grid, sol.energy, sol.eps, &vpsi, false).scaled(imag_unit_times(sol.eps.real()));
    Ok(to_f64(eta.norm()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{build_grid, sample_separable, PotentialSpec, Profile, QuadratureScheme};
    use crate::scalar::{cx, relative_gap};

    fn eps(v: f64) -> AdiabaticParam {
        AdiabaticParam::new(v).unwrap()
    }

    fn setup(lam: f64) -> (ModelGrid, Potential) {
        let g = build_grid(2.0, 8, QuadratureScheme::GaussLegendre).unwrap();
        let v = PotentialSpec::Separable {
            coupling: lam,
            profile: Profile::default(),
        }
        .build(&g)
        .unwrap();
        (g, v)
    }

    #[test]
    fn route_names_round_trip() {
        for r in [Route::LsSolve, Route::LowSolve, Route::SeparableClosed] {
            assert_eq!(r.to_string().parse::<Route>().unwrap(), r);
        }
        assert!("gmres".parse::<Route>().is_err());
    }

    #[test]
    fn zero_coupling_gives_plane_waves() {
        let (g, v) = setup(0.0);
        let e = eps(1e-2);
        for route in [Route::LsSolve, Route::LowSolve, Route::SeparableClosed] {
            let s = solve(&g, &v, 5, e, route).unwrap();
            assert_eq!(s.psi(), &plane_wave(&g, 5).unwrap(), "{route}");
            assert!(t_amplitude(&g, &v, &s, 3).unwrap().is_zero());
        }
        let s = separable_closed_form(&g, v.as_separable().unwrap(), 5, e).unwrap();
        assert_eq!(s.fredholm(), Some(Cx::one()));
    }

    #[test]
    fn fredholm_present_only_for_closed_form() {
        let (g, v) = setup(0.5);
        let e = eps(1e-2);
        assert!(solve_ls(&g, &v, 3, e).unwrap().fredholm().is_none());
        assert!(solve_low(&g, &v, 3, e).unwrap().fredholm().is_none());
        assert!(solve(&g, &v, 3, e, Route::SeparableClosed)
            .unwrap()
            .fredholm()
            .is_some());
    }

    #[test]
    fn imaginary_part_of_fredholm_by_direct_sum() {
        let (g, v) = setup(0.5);
        let sep = v.as_separable().unwrap();
        let ep = 3e-2;
        let k = 4;
        let delta = to_c64(fredholm_determinant(&g, sep, g.energy(k), eps(ep)));
        // Im Δ = λ ε Σ |g_i|² / ((E_k - E_i)² + ε²), summed in plain f64
        let gv = sep.formfactor().to_c64();
        let oracle: f64 = gv
            .iter()
            .zip(g.energies())
            .map(|(gi, ei)| 0.5 * ep * gi.norm_sqr() / ((g.energy(k) - ei).powi(2) + ep * ep))
            .sum();
        assert!(delta.im > 0.0);
        assert!((delta.im - oracle).abs() < 1e-13 * oracle);
    }

    #[test]
    fn separable_t_amplitude_closed_form() {
        let (g, v) = setup(0.5);
        let sep = v.as_separable().unwrap();
        let e = eps(1e-2);
        let k = 3;
        let s = solve_ls(&g, &v, k, e).unwrap();
        let delta = fredholm_determinant(&g, sep, g.energy(k), e);
        for n in 0..g.size() {
            let t = t_amplitude(&g, &v, &s, n).unwrap();
            let gf = sep.formfactor();
            let expect = gf[n] * gf[k].conj() * real(0.5) / delta;
            assert!(relative_gap(t, expect) < 1e-25, "n = {n}");
        }
    }

    #[test]
    fn first_born_limit() {
        let g = build_grid(2.0, 8, QuadratureScheme::GaussLegendre).unwrap();
        let e = eps(1e-1);
        let (n, k) = (2, 9);
        let dev = |lam: f64| {
            let v: Potential = sample_separable(&g, lam, |q| Profile::default().eval(q))
                .unwrap()
                .into();
            let s = solve_low(&g, &v, k, e).unwrap();
            let gf = v.as_separable().unwrap().formfactor();
            let born = gf[n] * gf[k].conj() * real(lam);
            to_f64(abs(t_amplitude(&g, &v, &s, n).unwrap() - born)) / lam
        };
        // the deviation from first order is second order in the coupling
        let (small, large) = (dev(1e-5), dev(1e-3));
        let ratio = large / small;
        assert!((ratio - 100.0).abs() < 1.0, "ratio {ratio}");
    }

    #[test]
    fn c_diagonal_is_real_nonnegative_and_matches_a_over_eps() {
        let (g, v) = setup(0.5);
        let e = eps(2e-2);
        let s = solve_low(&g, &v, 6, e).unwrap();
        let c = c_amplitude(&g, &v, &s, &s).unwrap();
        let a = a_amplitude(&g, &v, &s, &s).unwrap();
        assert!(c.re > Real::zero());
        assert!(abs(Cx::new(Real::zero(), c.im)) < real(1e-28) * abs(c));
        assert!(relative_gap(c * real(2e-2), a) < 1e-28);
    }

    #[test]
    fn separable_a_amplitude_closed_form() {
        let (g, v) = setup(0.5);
        let sep = v.as_separable().unwrap();
        let e = eps(1e-2);
        let (n, k) = (3, 10);
        let sn = solve_ls(&g, &v, n, e).unwrap();
        let sk = solve_ls(&g, &v, k, e).unwrap();
        let gf = sep.formfactor();
        let dn = fredholm_determinant(&g, sep, g.energy(n), e);
        let dk = fredholm_determinant(&g, sep, g.energy(k), e);
        let gdg = dot(gf, &dko_unchecked(&g, g.energy(k), e, gf));
        let expect = gf[n] * gf[k].conj() * gdg * real(0.25) / (dn.conj() * dk);
        let a = a_amplitude(&g, &v, &sn, &sk).unwrap();
        assert!(relative_gap(a, expect) < 1e-25);
    }

    #[test]
    fn mismatched_eps_is_an_invalid_pairing() {
        let (g, v) = setup(0.5);
        let a = solve_low(&g, &v, 2, eps(1e-2)).unwrap();
        let b = solve_low(&g, &v, 3, eps(2e-2)).unwrap();
        assert!(matches!(overlap_direct(&a, &b), Err(LabError::InvalidPairing(_))));
        assert!(matches!(
            c_amplitude(&g, &v, &a, &b),
            Err(LabError::InvalidPairing(_))
        ));
        assert!(matches!(
            a_amplitude(&g, &v, &a, &b),
            Err(LabError::InvalidPairing(_))
        ));
    }

    #[test]
    fn out_of_range_and_wrong_grid_rejected() {
        let (g, v) = setup(0.5);
        assert!(solve_ls(&g, &v, g.size(), eps(1e-2)).is_err());
        let other = build_grid(2.0, 4, QuadratureScheme::Uniform).unwrap();
        assert!(solve_low(&other, &v, 0, eps(1e-2)).is_err());
        let dense = PotentialSpec::GaussianKernel {
            coupling: 0.5,
            sigma: 1.0,
        }
        .build(&g)
        .unwrap();
        assert!(solve(&g, &dense, 0, eps(1e-2), Route::SeparableClosed).is_err());
    }

    #[test]
    fn overlap_at_zero_coupling_is_kronecker() {
        let (g, v) = setup(0.0);
        let e = eps(1e-3);
        let s: Vec<_> = (0..4).map(|i| solve_low(&g, &v, i, e).unwrap()).collect();
        for a in &s {
            for b in &s {
                let expect = if a.incident_index() == b.incident_index() {
                    cx(1.0, 0.0)
                } else {
                    Cx::zero()
                };
                assert_eq!(overlap_direct(a, b).unwrap(), expect);
                assert_eq!(overlap_expansion(&g, &v, a, b).unwrap(), expect);
            }
        }
    }

    #[test]
    fn degenerate_overlap_is_nonzero() {
        let (g, v) = setup(0.5);
        let e = eps(1e-2);
        let k = 4;
        let a = solve_low(&g, &v, k, e).unwrap();
        let b = solve_low(&g, &v, g.mirror(k), e).unwrap();
        assert!(to_f64(abs(overlap_direct(&b, &a).unwrap())) > 1e-4);
    }

    #[test]
    fn near_zero_fredholm_is_an_error() {
        // Gaussian form factor on a grid whose top node decouples from it:
        // tune λ so that Re Δ vanishes there.
        let g = build_grid(8.0, 8, QuadratureScheme::Uniform).unwrap();
        let prof = Profile::Gaussian { beta: 1.0 };
        let k = g.size() - 1;
        let e = eps(1e-6);
        let unit = sample_separable(&g, 1.0, |q| prof.eval(q)).unwrap();
        let re = to_f64((Cx::one() - fredholm_determinant(&g, &unit, g.energy(k), e)).re);
        let tuned = sample_separable(&g, 1.0 / re, |q| prof.eval(q)).unwrap();
        let err = separable_closed_form(&g, &tuned, k, e).unwrap_err();
        assert!(err.is_conditioning(), "{err}");
        let detuned = sample_separable(&g, 0.9 / re, |q| prof.eval(q)).unwrap();
        assert!(separable_closed_form(&g, &detuned, k, e).is_ok());
    }

    #[test]
    fn tiny_eps_trips_condition_limit() {
        let (g, v) = setup(0.5);
        let err = solve_ls(&g, &v, 3, eps(1e-15)).unwrap_err();
        assert!(matches!(err, LabError::Conditioning { .. }), "{err}");
        assert!(solve_ls(&g, &v, 3, eps(1e-8)).is_ok());
        assert!(solve_low(&g, &v, 3, eps(1e-8)).is_ok());
    }

    #[test]
    fn amplitude_set_shapes() {
        let (g, v) = setup(0.5);
        let e = eps(1e-2);
        let sols = solve_channels(&g, &v, &[1, 2, g.mirror(2)], e, Route::LowSolve).unwrap();
        let set = AmplitudeSet::assemble(&g, &v, &sols).unwrap();
        assert_eq!(set.indices, vec![1, 2, g.mirror(2)]);
        assert_eq!(set.t.len(), 3);
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { Cx::one() } else { Cx::zero() };
                assert_eq!(set.free_overlap[i][j], expect);
                assert!(relative_gap(set.overlap[i][j], set.overlap[j][i].conj()) < 1e-28);
            }
        }
        // A is Hermitian within the degenerate block
        assert!(relative_gap(set.a[1][2], set.a[2][1].conj()) < 1e-25);
    }
}
