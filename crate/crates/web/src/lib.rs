//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every model is a separable potential on a Gauss-Legendre grid over
//! `[-kmax, kmax]`, solved in closed form.

use lsl_core::hilbert::{build_grid, ModelGrid, Potential, PotentialSpec, Profile, QuadratureScheme};
use lsl_core::lsl::{overlap_direct, solve, t_amplitude, Route};
use lsl_core::resolvent::AdiabaticParam;
use lsl_core::scalar::to_c64;
use lsl_core::verify::moller_gram_with;
use lsl_core::LabError;
use wasm_bindgen::prelude::*;

/// Grid and potential shared by every export.
#[wasm_bindgen]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Model {
    kmax: f64,
    half_count: usize,
    lambda: f64,
    beta: f64,
    gaussian: bool,
}

#[wasm_bindgen]
impl Model {
    #[wasm_bindgen(constructor)]
    pub fn new(kmax: f64, half_count: usize, lambda: f64, beta: f64, gaussian: bool) -> Model {
        Model {
            kmax,
            half_count,
            lambda,
            beta,
            gaussian,
        }
    }

    pub fn size(&self) -> usize {
        2 * self.half_count
    }
}

impl Model {
    fn grid(&self) -> lsl_core::Result<ModelGrid> {
        build_grid(self.kmax, self.half_count, QuadratureScheme::GaussLegendre)
    }

    fn potential(&self, grid: &ModelGrid, lambda: f64) -> lsl_core::Result<Potential> {
        let profile = if self.gaussian {
            Profile::Gaussian { beta: self.beta }
        } else {
            Profile::Yamaguchi { beta: self.beta }
        };
        PotentialSpec::Separable {
            coupling: lambda,
            profile,
        }
        .build(grid)
    }
}

/// One scattering state: per node `k`, `ψ` and the half-off-shell `T(k, k_in)`.
#[wasm_bindgen]
#[derive(Debug, Clone, PartialEq)]
pub struct Wave {
    momenta: Vec<f64>,
    psi_re: Vec<f64>,
    psi_im: Vec<f64>,
    t_re: Vec<f64>,
    t_im: Vec<f64>,
    fredholm: [f64; 2],
    norm: f64,
}

#[wasm_bindgen]
impl Wave {
    pub fn momenta(&self) -> Vec<f64> {
        self.momenta.clone()
    }
    pub fn psi_re(&self) -> Vec<f64> {
        self.psi_re.clone()
    }
    pub fn psi_im(&self) -> Vec<f64> {
        self.psi_im.clone()
    }
    pub fn t_re(&self) -> Vec<f64> {
        self.t_re.clone()
    }
    pub fn t_im(&self) -> Vec<f64> {
        self.t_im.clone()
    }
    pub fn fredholm_re(&self) -> f64 {
        self.fredholm[0]
    }
    pub fn fredholm_im(&self) -> f64 {
        self.fredholm[1]
    }
    pub fn norm(&self) -> f64 {
        self.norm
    }
}

fn js(e: LabError) -> JsError {
    JsError::new(&e.to_string())
}

pub fn wavefunction_of(model: &Model, eps: f64, incident: usize) -> lsl_core::Result<Wave> {
    let grid = model.grid()?;
    let v = model.potential(&grid, model.lambda)?;
    let sol = solve(
        &grid,
        &v,
        incident,
        AdiabaticParam::new(eps)?,
        Route::SeparableClosed,
    )?;
    let psi = sol.psi().to_c64();
    let mut t = Vec::with_capacity(grid.size());
    for n in 0..grid.size() {
        t.push(to_c64(t_amplitude(&grid, &v, &sol, n)?));
    }
    let det = sol.fredholm().map(to_c64).unwrap_or_default();
    Ok(Wave {
        momenta: grid.momenta().to_vec(),
        psi_re: psi.iter().map(|z| z.re).collect(),
        psi_im: psi.iter().map(|z| z.im).collect(),
        t_re: t.iter().map(|z| z.re).collect(),
        t_im: t.iter().map(|z| z.im).collect(),
        fredholm: [det.re, det.im],
        norm: lsl_core::scalar::to_f64(sol.psi().norm()),
    })
}

/// Scattering state for incident channel `incident`.
#[wasm_bindgen]
pub fn wavefunction(model: &Model, eps: f64, incident: usize) -> Result<Wave, JsError> {
    wavefunction_of(model, eps, incident).map_err(js)
}

fn log_space(hi: f64, lo: f64, points: usize) -> Vec<f64> {
    if points < 2 {
        return vec![hi];
    }
    let (a, b) = (hi.log10(), lo.log10());
    (0..points)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (points - 1) as f64))
        .collect()
}

pub fn overlap_scan_of(
    model: &Model,
    n: usize,
    k: usize,
    eps_hi: f64,
    eps_lo: f64,
    points: usize,
) -> lsl_core::Result<Vec<f64>> {
    let grid = model.grid()?;
    let v = model.potential(&grid, model.lambda)?;
    let mut out = Vec::with_capacity(4 * points);
    for e in log_space(eps_hi, eps_lo, points) {
        let eps = AdiabaticParam::new(e)?;
        let a = solve(&grid, &v, n, eps, Route::SeparableClosed)?;
        let b = solve(&grid, &v, k, eps, Route::SeparableClosed)?;
        let i = to_c64(overlap_direct(&a, &b)?);
        let delta = if n == k { 1.0 } else { 0.0 };
        out.extend([e, i.re, i.im, (i - delta).norm()]);
    }
    Ok(out)
}

/// `⟨ψ_n|ψ_k⟩` over log-spaced ε from `eps_hi` down to `eps_lo`, flattened as
/// `[ε, Re I, Im I, |I - δ|]` per point.
#[wasm_bindgen]
pub fn overlap_scan(
    model: &Model,
    n: usize,
    k: usize,
    eps_hi: f64,
    eps_lo: f64,
    points: usize,
) -> Result<Vec<f64>, JsError> {
    overlap_scan_of(model, n, k, eps_hi, eps_lo, points).map_err(js)
}

pub fn gram_deviation_map_of(
    model: &Model,
    lambda_max: f64,
    lambda_points: usize,
    eps_hi: f64,
    eps_lo: f64,
    eps_points: usize,
) -> lsl_core::Result<Vec<f64>> {
    let grid = model.grid()?;
    let eps_list = log_space(eps_hi, eps_lo, eps_points);
    let mut out = Vec::with_capacity(lambda_points * eps_points);
    for li in 0..lambda_points {
        let lambda = if lambda_points < 2 {
            lambda_max
        } else {
            -lambda_max + 2.0 * lambda_max * li as f64 / (lambda_points - 1) as f64
        };
        let v = model.potential(&grid, lambda)?;
        for &e in &eps_list {
            let g = moller_gram_with(&grid, &v, AdiabaticParam::new(e)?, Route::SeparableClosed)?;
            out.push(g.deviation);
        }
    }
    Ok(out)
}

/// `max |⟨ψ_i|ψ_j⟩ - δ_ij|` on a `λ × ε` raster, row-major in `λ`.
/// `λ` runs linearly over `[-lambda_max, lambda_max]`, ε logarithmically.
#[wasm_bindgen]
pub fn gram_deviation_map(
    model: &Model,
    lambda_max: f64,
    lambda_points: usize,
    eps_hi: f64,
    eps_lo: f64,
    eps_points: usize,
) -> Result<Vec<f64>, JsError> {
    gram_deviation_map_of(model, lambda_max, lambda_points, eps_hi, eps_lo, eps_points).map_err(js)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(lambda: f64) -> Model {
        Model::new(2.0, 8, lambda, 1.0, false)
    }

    #[test]
    fn free_wave_is_plane_wave() {
        let w = wavefunction_of(&model(0.0), 1e-2, 3).unwrap();
        assert_eq!(w.momenta.len(), 16);
        for i in 0..16 {
            assert_eq!(w.psi_re[i], if i == 3 { 1.0 } else { 0.0 });
            assert_eq!(w.t_re[i], 0.0);
        }
        assert_eq!(w.fredholm, [1.0, 0.0]);
        assert_eq!(w.norm, 1.0);
    }

    #[test]
    fn coupled_wave_is_depleted() {
        let w = wavefunction_of(&model(0.5), 1e-2, 3).unwrap();
        assert!(w.norm < 1.0);
        assert!(w.fredholm[1] != 0.0);
    }

    #[test]
    fn scan_layout() {
        let m = model(0.5);
        let s = overlap_scan_of(&m, 4, 11, 1e-1, 1e-4, 4).unwrap();
        assert_eq!(s.len(), 16);
        assert!((s[0] - 1e-1).abs() < 1e-15 && (s[12] - 1e-4).abs() < 1e-18);
        assert!(s.chunks(4).all(|c| (c[3] - c[1].hypot(c[2])).abs() < 1e-15));
    }

    #[test]
    fn gram_map_vanishes_only_at_zero_coupling() {
        let m = model(0.0);
        let map = gram_deviation_map_of(&m, 0.5, 3, 1e-1, 1e-3, 2).unwrap();
        assert_eq!(map.len(), 6);
        assert_eq!(&map[2..4], &[0.0, 0.0]);
        assert!(map[0] > 0.0 && map[5] > 0.0);
    }

    #[test]
    fn bad_input_is_an_error() {
        assert!(wavefunction_of(&model(0.5), -1.0, 0).is_err());
        assert!(wavefunction_of(&model(0.5), 1e-2, 99).is_err());
    }
}
