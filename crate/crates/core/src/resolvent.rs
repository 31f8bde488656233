//! ε-regularized free resolvent and the kinematic factors built from it.
//!
//! Everything is diagonal in the plane-wave basis and applied componentwise.

use num_traits::One;

use crate::error::{LabError, Result};
use crate::hilbert::{ModelGrid, StateVector};
use crate::scalar::{imag_unit_times, norm_sqr, real, to_f64, Cx, Real, RESIDUAL_FLOOR};

/// Adiabatic switching parameter ε > 0.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct AdiabaticParam(f64);

impl AdiabaticParam {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(LabError::invalid(format!(
                "adiabatic parameter must be positive and finite, got {epsilon}"
            )));
        }
        Ok(Self(epsilon))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub(crate) fn real(self) -> Real {
        real(self.0)
    }
}

impl TryFrom<f64> for AdiabaticParam {
    type Error = LabError;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

/// `1 / (E - E_i + iε)`, or its conjugate.
#[inline]
pub(crate) fn propagator(e: f64, e_i: f64, eps: AdiabaticParam, conjugate: bool) -> Cx {
    let de = real(e) - real(e_i);
    let im = if conjugate { -eps.real() } else { eps.real() };
    Cx::one() / Cx::new(de, im)
}

/// Applies `(E - H0 + iε)^{-1}`, or `(E - H0 - iε)^{-1}` when `conjugate`.
pub fn g0_apply(
    grid: &ModelGrid,
    e: f64,
    eps: AdiabaticParam,
    x: &StateVector,
    conjugate: bool,
) -> Result<StateVector> {
    grid.check_state(x)?;
    Ok(g0_unchecked(grid, e, eps, x, conjugate))
}

pub(crate) fn g0_unchecked(
    grid: &ModelGrid,
    e: f64,
    eps: AdiabaticParam,
    x: &StateVector,
    conjugate: bool,
) -> StateVector {
    let en = grid.energies();
    x.map_indexed(|i, z| z * propagator(e, en[i], eps, conjugate))
}

/// `η = iε G0(E)`.
pub fn eta_apply(grid: &ModelGrid, e: f64, eps: AdiabaticParam, x: &StateVector) -> Result<StateVector> {
    Ok(g0_apply(grid, e, eps, x, false)?.scaled(imag_unit_times(eps.real())))
}

/// `μ_nk = iε / (E_k - E_n + iε)`.
pub fn mu(e_n: f64, e_k: f64, eps: AdiabaticParam) -> Cx {
    let ie = imag_unit_times(eps.real());
    ie / (Cx::new(real(e_k) - real(e_n), Real::from(0.0)) + ie)
}

/// `d_nk = ε / ((E_k - E_n)² + ε²)`.
pub fn d_weight(e_n: f64, e_k: f64, eps: AdiabaticParam) -> Real {
    let de = real(e_k) - real(e_n);
    let ep = eps.real();
    ep / (de * de + ep * ep)
}

/// `D(E) = ε G0(E)^† G0(E)`, componentwise `d_weight(E_i, E, ε)`.
pub fn dko_apply(grid: &ModelGrid, e: f64, eps: AdiabaticParam, x: &StateVector) -> Result<StateVector> {
    grid.check_state(x)?;
    Ok(dko_unchecked(grid, e, eps, x))
}

pub(crate) fn dko_unchecked(grid: &ModelGrid, e: f64, eps: AdiabaticParam, x: &StateVector) -> StateVector {
    let en = grid.energies();
    x.map_indexed(|i, z| z * d_weight(en[i], e, eps))
}

/// Relative defect of
/// `(G_n^† - G_k) x / (E_k - E_n + iε) = (1 + μ_nk) G_n^† G_k x`,
/// scaled by `‖x‖`.
pub fn identity5_residual(
    grid: &ModelGrid,
    e_n: f64,
    e_k: f64,
    eps: AdiabaticParam,
    x: &StateVector,
) -> Result<f64> {
    grid.check_state(x)?;
    let gn_dag = g0_unchecked(grid, e_n, eps, x, true);
    let gk = g0_unchecked(grid, e_k, eps, x, false);
    let denom = Cx::new(real(e_k) - real(e_n), eps.real());
    let lhs = gn_dag.zip_with(&gk, |a, b| (a - b) / denom);
    let pref = Cx::one() + mu(e_n, e_k, eps);
    let rhs = g0_unchecked(grid, e_n, eps, &gk, true).scaled(pref);
    let defect = lhs
        .amplitudes()
        .iter()
        .zip(rhs.amplitudes())
        .fold(Real::from(0.0), |acc, (a, b)| acc + norm_sqr(*a - *b))
        .sqrt();
    Ok(to_f64(defect / (x.norm() + real(RESIDUAL_FLOOR))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{build_grid, inner, plane_wave, QuadratureScheme};
    use crate::scalar::{abs, cx, to_c64};
    use num_complex::Complex64;

    fn eps(v: f64) -> AdiabaticParam {
        AdiabaticParam::new(v).unwrap()
    }

    fn grid() -> ModelGrid {
        build_grid(2.0, 6, QuadratureScheme::GaussLegendre).unwrap()
    }

    fn probe(n: usize) -> StateVector {
        StateVector::new(
            (0..n)
                .map(|i| cx((i as f64 * 0.37).sin(), (i as f64 * 1.3).cos()))
                .collect(),
        )
    }

    #[test]
    fn rejects_non_positive_epsilon() {
        assert!(AdiabaticParam::new(0.0).is_err());
        assert!(AdiabaticParam::new(-1e-3).is_err());
        assert!(AdiabaticParam::new(f64::INFINITY).is_err());
    }

    #[test]
    fn on_shell_component_is_divided_by_i_eps() {
        let g = grid();
        let e = eps(1e-3);
        let x = plane_wave(&g, 4).unwrap();
        let y = g0_apply(&g, g.energy(4), e, &x, false).unwrap();
        assert_eq!(to_c64(y[4]), Complex64::new(0.0, -1e3));
        let eta = eta_apply(&g, g.energy(4), e, &x).unwrap();
        assert!(crate::scalar::relative_gap_vec(eta.amplitudes(), x.amplitudes()) < 1e-30);
    }

    #[test]
    fn g0_inverts_shifted_free_hamiltonian() {
        let g = grid();
        let x = probe(g.size());
        for conj in [false, true] {
            let e = eps(1e-4);
            let energy = 0.8;
            let y = g0_apply(&g, energy, e, &x, conj).unwrap();
            let sign = if conj { -1.0 } else { 1.0 };
            let back = y.map_indexed(|i, z| z * Cx::new(real(energy) - real(g.energy(i)), real(sign * 1e-4)));
            assert!(crate::scalar::relative_gap_vec(back.amplitudes(), x.amplitudes()) < 1e-28);
        }
    }

    #[test]
    fn mu_and_d_weight_values() {
        let e = eps(0.25);
        assert_eq!(to_c64(mu(1.0, 1.0, e)), Complex64::new(1.0, 0.0));
        let m = to_c64(mu(1.0, 1.25, e));
        assert!((m - Complex64::new(0.5, 0.5)).norm() < 1e-16);
        assert_eq!(to_f64(d_weight(1.0, 1.0, e)), 4.0);
        assert_eq!(to_f64(d_weight(1.0, 1.25, e)), 2.0);
        let d = to_f64(d_weight(0.0, 1.0, eps(1e-3)));
        assert!((d - 1e-3 / (1.0 + 1e-6)).abs() < 1e-18);
        // independent f64 evaluation
        let m = to_c64(mu(0.0, 1.0, eps(1e-3)));
        let direct = Complex64::new(0.0, 1e-3) / Complex64::new(1.0, 1e-3);
        assert!((m - direct).norm() < 1e-18);
        assert!((m.norm() - 1e-3).abs() < 1e-9);
    }

    #[test]
    fn eta_is_mu_weighted() {
        let g = grid();
        let e = eps(3e-2);
        let x = probe(g.size());
        let energy = g.energy(3);
        let eta = eta_apply(&g, energy, e, &x).unwrap();
        for i in 0..g.size() {
            let expect = x[i] * mu(g.energy(i), energy, e);
            assert!(abs(eta[i] - expect) <= real(1e-30) * abs(expect));
        }
    }

    #[test]
    fn eta_suppresses_far_components() {
        let g = grid();
        let e = eps(1e-5);
        let x = plane_wave(&g, 0).unwrap();
        let energy = g.energy(g.size() / 2);
        let eta = eta_apply(&g, energy, e, &x).unwrap();
        let ratio = to_f64(abs(eta[0])) * (energy - g.energy(0)).abs() / 1e-5;
        assert!((ratio - 1.0).abs() < 1e-6);
    }

    #[test]
    fn d_weight_decays_linearly_off_shell() {
        for e in [1e-2, 1e-4, 1e-6] {
            let d = to_f64(d_weight(0.5, 1.25, eps(e)));
            assert!((d * 0.75 * 0.75 / e - 1.0).abs() < 2.0 * e * e);
        }
    }

    #[test]
    fn dko_is_eps_g_dagger_g() {
        let g = grid();
        let e = eps(2e-2);
        let x = probe(g.size());
        let energy = g.energy(2);
        let d = dko_apply(&g, energy, e, &x).unwrap();
        let chain = g0_apply(&g, energy, e, &g0_apply(&g, energy, e, &x, false).unwrap(), true)
            .unwrap()
            .scaled(cx(2e-2, 0.0));
        assert!(crate::scalar::relative_gap_vec(d.amplitudes(), chain.amplitudes()) < 1e-28);
        let q = inner(&x, &d).unwrap();
        assert!(q.re >= Real::from(0.0));
        assert!(abs(Cx::new(Real::from(0.0), q.im)) < real(1e-28) * abs(q));
    }

    #[test]
    fn dko_on_shell_grows_as_eps_shrinks() {
        let g = grid();
        let i = 3;
        let x = plane_wave(&g, i).unwrap();
        let far = plane_wave(&g, 0).unwrap();
        let mut last_on = 0.0;
        let mut last_off = f64::INFINITY;
        for v in [1e-1, 1e-2, 1e-3] {
            let on = to_f64(
                inner(&x, &dko_apply(&g, g.energy(i), eps(v), &x).unwrap())
                    .unwrap()
                    .re,
            );
            let off = to_f64(
                inner(&far, &dko_apply(&g, g.energy(i), eps(v), &far).unwrap())
                    .unwrap()
                    .re,
            );
            assert!((on - 1.0 / v).abs() < 1e-12 / v);
            assert!(on > last_on && off < last_off);
            last_on = on;
            last_off = off;
        }
    }

    #[test]
    fn identity5_single_component_prefactor() {
        // one grid point, independent scalar algebra in f64
        let (e_i, e_n, e_k, ep) = (0.3, 0.7, 0.9, 0.05);
        let gk = Complex64::new(1.0, 0.0) / Complex64::new(e_k - e_i, ep);
        let gn_dag = Complex64::new(1.0, 0.0) / Complex64::new(e_n - e_i, -ep);
        let lhs = (gn_dag - gk) / Complex64::new(e_k - e_n, ep);
        let pref = Complex64::new(e_k - e_n, 2.0 * ep) / Complex64::new(e_k - e_n, ep);
        let rhs = pref * gn_dag * gk;
        assert!((lhs - rhs).norm() < 1e-13 * rhs.norm());
        let m = to_c64(Cx::one() + mu(e_n, e_k, eps(ep)));
        assert!((m - pref).norm() < 1e-15);
    }

    #[test]
    fn identity5_holds_on_and_off_shell() {
        let g = grid();
        let x = probe(g.size());
        for v in [1e-1, 1e-4, 1e-8] {
            let on = identity5_residual(&g, g.energy(2), g.energy(g.mirror(2)), eps(v), &x).unwrap();
            let off = identity5_residual(&g, g.energy(2), g.energy(7), eps(v), &x).unwrap();
            assert!(on <= 1e-13 && off <= 1e-13, "{v}: {on} {off}");
        }
        assert!(identity5_residual(&g, 0.0, 1.0, eps(1e-2), &StateVector::zeros(3)).is_err());
    }
}
