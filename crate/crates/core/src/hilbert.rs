//! Finite model space: a mirror-symmetric momentum grid, the diagonal free
//! Hamiltonian, and the two potential families.
//!
//! States live in the weight-absorbed basis: component `i` of a state is the
//! continuum amplitude at `k_i` multiplied by `√w_i`, so plane waves are
//! Kronecker-orthonormal and every kernel is sampled as `√w_i v(k_i,k_j) √w_j`.

use std::fmt;
use std::num::NonZeroUsize;
use std::str::FromStr;

use gauss_quad::GaussLegendre;
use num_complex::Complex64;
use num_traits::{One, Zero};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{LabError, Result};
use crate::linalg::Matrix;
use crate::scalar::{cx, from_c64, real, to_c64, to_f64, vec_norm, Cx, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QuadratureScheme {
    Uniform,
    GaussLegendre,
}

impl FromStr for QuadratureScheme {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Self::Uniform),
            "gauss-legendre" => Ok(Self::GaussLegendre),
            other => Err(LabError::invalid(format!(
                "unknown quadrature scheme {other:?} (expected \"uniform\" or \"gauss-legendre\")"
            ))),
        }
    }
}

impl fmt::Display for QuadratureScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Uniform => "uniform",
            Self::GaussLegendre => "gauss-legendre",
        })
    }
}

/// Symmetric momentum grid with `E = k²` (ħ = 1, 2m = 1).
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGrid {
    momenta: Vec<f64>,
    weights: Vec<f64>,
    energies: Vec<f64>,
}

impl ModelGrid {
    pub fn size(&self) -> usize {
        self.momenta.len()
    }

    pub fn momenta(&self) -> &[f64] {
        &self.momenta
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn energy(&self, i: usize) -> f64 {
        self.energies[i]
    }

    /// Index of the node at `-k_i`.
    pub fn mirror(&self, i: usize) -> usize {
        self.size() - 1 - i
    }

    /// Exact energy equality; the grid guarantees it for `±k` pairs.
    pub fn degenerate(&self, n: usize, k: usize) -> bool {
        self.energies[n] == self.energies[k]
    }

    /// Largest gap between `E_i` and the energies of its same-sign neighbours.
    pub fn local_spacing(&self, i: usize) -> f64 {
        let half = self.size() / 2;
        let (lo, hi) = if i < half { (0, half) } else { (half, self.size()) };
        let mut gap: f64 = 0.0;
        if i > lo {
            gap = gap.max((self.energies[i] - self.energies[i - 1]).abs());
        }
        if i + 1 < hi {
            gap = gap.max((self.energies[i + 1] - self.energies[i]).abs());
        }
        gap
    }

    /// Node closest to momentum `k`, restricted to the half-line of `k`'s sign.
    pub fn nearest_index(&self, k: f64) -> usize {
        let half = self.size() / 2;
        let range = if k < 0.0 { 0..half } else { half..self.size() };
        range
            .min_by(|&a, &b| {
                (self.momenta[a] - k)
                    .abs()
                    .total_cmp(&(self.momenta[b] - k).abs())
            })
            .expect("grid halves are non-empty")
    }

    fn check_index(&self, index: usize) -> Result<()> {
        if index >= self.size() {
            return Err(LabError::invalid(format!(
                "index {index} out of range for grid of size {}",
                self.size()
            )));
        }
        Ok(())
    }

    pub(crate) fn check_state(&self, x: &StateVector) -> Result<()> {
        if x.len() != self.size() {
            return Err(LabError::invalid(format!(
                "state of length {} does not match grid size {}",
                x.len(),
                self.size()
            )));
        }
        Ok(())
    }
}

/// Builds the grid on `[-kmax, kmax]` from `half_count` nodes on `[0, kmax]`
/// and their reflections.
pub fn build_grid(kmax: f64, half_count: usize, scheme: QuadratureScheme) -> Result<ModelGrid> {
    if !(kmax.is_finite() && kmax > 0.0) {
        return Err(LabError::invalid(format!(
            "kmax must be positive and finite, got {kmax}"
        )));
    }
    if half_count < 2 {
        return Err(LabError::invalid(format!(
            "half_count must be at least 2, got {half_count}"
        )));
    }

    let (nodes, weights): (Vec<f64>, Vec<f64>) = match scheme {
        QuadratureScheme::Uniform => {
            let h = kmax / half_count as f64;
            (0..half_count).map(|j| ((j as f64 + 0.5) * h, h)).unzip()
        }
        QuadratureScheme::GaussLegendre => {
            let rule = GaussLegendre::new(NonZeroUsize::new(half_count).expect("checked above"));
            let mut pairs: Vec<(f64, f64)> = rule
                .iter()
                .map(|(x, w)| (0.5 * kmax * (x + 1.0), 0.5 * kmax * w))
                .collect();
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            pairs.into_iter().unzip()
        }
    };

    let mut momenta = Vec::with_capacity(2 * half_count);
    let mut all_weights = Vec::with_capacity(2 * half_count);
    for j in (0..half_count).rev() {
        momenta.push(-nodes[j]);
        all_weights.push(weights[j]);
    }
    momenta.extend_from_slice(&nodes);
    all_weights.extend_from_slice(&weights);

    if all_weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(LabError::invalid("quadrature produced a non-positive weight"));
    }
    let energies = momenta.iter().map(|k| k * k).collect();
    Ok(ModelGrid {
        momenta,
        weights: all_weights,
        energies,
    })
}

/// Complex amplitudes in the weight-absorbed plane-wave basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(Vec<Cx>);

impl StateVector {
    pub fn new(amplitudes: Vec<Cx>) -> Self {
        Self(amplitudes)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![Cx::zero(); n])
    }

    pub fn from_c64(values: &[Complex64]) -> Self {
        Self(values.iter().copied().map(from_c64).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn amplitudes(&self) -> &[Cx] {
        &self.0
    }

    pub fn into_amplitudes(self) -> Vec<Cx> {
        self.0
    }

    pub fn to_c64(&self) -> Vec<Complex64> {
        self.0.iter().copied().map(to_c64).collect()
    }

    pub fn norm(&self) -> Real {
        vec_norm(&self.0)
    }

    pub fn scaled(&self, s: Cx) -> Self {
        Self(self.0.iter().map(|z| *z * s).collect())
    }

    pub fn map_indexed(&self, mut f: impl FnMut(usize, Cx) -> Cx) -> Self {
        Self(self.0.iter().enumerate().map(|(i, z)| f(i, *z)).collect())
    }

    pub(crate) fn zip_with(&self, other: &Self, f: impl Fn(Cx, Cx) -> Cx) -> Self {
        debug_assert_eq!(self.len(), other.len());
        Self(self.0.iter().zip(&other.0).map(|(a, b)| f(*a, *b)).collect())
    }
}

impl std::ops::Index<usize> for StateVector {
    type Output = Cx;
    fn index(&self, i: usize) -> &Cx {
        &self.0[i]
    }
}

/// `Σ conj(a_i) b_i` without a length check.
pub(crate) fn dot(a: &StateVector, b: &StateVector) -> Cx {
    a.0.iter()
        .zip(&b.0)
        .fold(Cx::zero(), |acc, (x, y)| acc + x.conj() * *y)
}

pub fn inner(bra: &StateVector, ket: &StateVector) -> Result<Cx> {
    if bra.len() != ket.len() {
        return Err(LabError::invalid(format!(
            "inner product of states with lengths {} and {}",
            bra.len(),
            ket.len()
        )));
    }
    Ok(dot(bra, ket))
}

pub fn plane_wave(grid: &ModelGrid, index: usize) -> Result<StateVector> {
    grid.check_index(index)?;
    let mut v = StateVector::zeros(grid.size());
    v.0[index] = Cx::one();
    Ok(v)
}

pub fn h0_apply(grid: &ModelGrid, x: &StateVector) -> Result<StateVector> {
    grid.check_state(x)?;
    Ok(x.map_indexed(|i, z| z * real(grid.energies[i])))
}

/// Rank-one interaction `λ|g⟩⟨g|`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparablePotential {
    coupling: f64,
    formfactor: StateVector,
}

impl SeparablePotential {
    pub fn new(coupling: f64, formfactor: StateVector) -> Result<Self> {
        if !coupling.is_finite() {
            return Err(LabError::invalid("coupling must be finite"));
        }
        if !to_f64(formfactor.norm()).is_finite() {
            return Err(LabError::invalid("form factor must have finite norm"));
        }
        Ok(Self { coupling, formfactor })
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn formfactor(&self) -> &StateVector {
        &self.formfactor
    }

    pub fn apply(&self, x: &StateVector) -> StateVector {
        let proj = dot(&self.formfactor, x) * real(self.coupling);
        self.formfactor.scaled(proj)
    }

    pub fn to_matrix(&self) -> Matrix {
        let g = self.formfactor.amplitudes();
        let lam = real(self.coupling);
        Matrix::from_fn(g.len(), |i, j| g[i] * g[j].conj() * lam)
    }
}

/// Hermitian matrix interaction.
#[derive(Debug, Clone, PartialEq)]
pub struct DensePotential {
    matrix: Matrix,
}

impl DensePotential {
    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn apply(&self, x: &StateVector) -> StateVector {
        StateVector(self.matrix.mul_vec(x.amplitudes()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    Separable(SeparablePotential),
    Dense(DensePotential),
}

impl Potential {
    pub fn dim(&self) -> usize {
        match self {
            Potential::Separable(v) => v.formfactor.len(),
            Potential::Dense(v) => v.matrix.dim(),
        }
    }

    pub fn apply(&self, x: &StateVector) -> StateVector {
        match self {
            Potential::Separable(v) => v.apply(x),
            Potential::Dense(v) => v.apply(x),
        }
    }

    pub fn to_matrix(&self) -> Matrix {
        match self {
            Potential::Separable(v) => v.to_matrix(),
            Potential::Dense(v) => v.matrix.clone(),
        }
    }

    pub fn as_separable(&self) -> Option<&SeparablePotential> {
        match self {
            Potential::Separable(v) => Some(v),
            Potential::Dense(_) => None,
        }
    }

    pub(crate) fn check_grid(&self, grid: &ModelGrid) -> Result<()> {
        if self.dim() != grid.size() {
            return Err(LabError::invalid(format!(
                "potential of dimension {} used on grid of size {}",
                self.dim(),
                grid.size()
            )));
        }
        Ok(())
    }
}

impl From<SeparablePotential> for Potential {
    fn from(v: SeparablePotential) -> Self {
        Potential::Separable(v)
    }
}

impl From<DensePotential> for Potential {
    fn from(v: DensePotential) -> Self {
        Potential::Dense(v)
    }
}

/// `g_i = profile(k_i) · √w_i`.
pub fn sample_separable(
    grid: &ModelGrid,
    coupling: f64,
    profile: impl Fn(f64) -> f64,
) -> Result<SeparablePotential> {
    let mut g = Vec::with_capacity(grid.size());
    for (&k, &w) in grid.momenta.iter().zip(&grid.weights) {
        let p = profile(k);
        if !p.is_finite() {
            return Err(LabError::invalid(format!("profile is not finite at k = {k}")));
        }
        g.push(cx(p * w.sqrt(), 0.0));
    }
    SeparablePotential::new(coupling, StateVector(g))
}

/// `V_ij = √w_i · v(k_i, k_j) · √w_j`.
pub fn sample_dense(grid: &ModelGrid, kernel: impl Fn(f64, f64) -> f64) -> Result<DensePotential> {
    let n = grid.size();
    let k = &grid.momenta;
    let sw: Vec<f64> = grid.weights.iter().map(|w| w.sqrt()).collect();
    let mut matrix = Matrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            let a = kernel(k[i], k[j]);
            let b = kernel(k[j], k[i]);
            if !(a.is_finite() && b.is_finite()) {
                return Err(LabError::invalid(format!(
                    "kernel is not finite at ({}, {})",
                    k[i], k[j]
                )));
            }
            if (a - b).abs() > 1e-12 * (a.abs() + b.abs()) {
                return Err(LabError::invalid(format!(
                    "kernel is not symmetric at ({}, {}): {a} vs {b}",
                    k[i], k[j]
                )));
            }
            let v = real(sw[i]) * real(a) * real(sw[j]);
            matrix[(i, j)] = Cx::new(v, Real::zero());
            matrix[(j, i)] = Cx::new(v, Real::zero());
        }
    }
    Ok(DensePotential { matrix })
}

/// Random Hermitian interaction with entries uniform in the unit square,
/// scaled by `strength` and the quadrature weights. Deterministic in `seed`.
pub fn random_hermitian(grid: &ModelGrid, strength: f64, seed: u64) -> Result<DensePotential> {
    if !strength.is_finite() {
        return Err(LabError::invalid("strength must be finite"));
    }
    let n = grid.size();
    let sw: Vec<f64> = grid.weights.iter().map(|w| w.sqrt()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut matrix = Matrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            let re: f64 = rng.random_range(-1.0..1.0);
            let im: f64 = if i == j { 0.0 } else { rng.random_range(-1.0..1.0) };
            let s = real(strength) * real(sw[i]) * real(sw[j]);
            let z = Cx::new(real(re) * s, real(im) * s);
            matrix[(i, j)] = z;
            matrix[(j, i)] = z.conj();
        }
    }
    Ok(DensePotential { matrix })
}

/// Momentum profiles for the separable form factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile {
    /// `1 / (k² + β²)`
    Yamaguchi { beta: f64 },
    /// `exp(-k² / β²)`
    Gaussian { beta: f64 },
}

impl Profile {
    pub fn eval(&self, k: f64) -> f64 {
        match *self {
            Profile::Yamaguchi { beta } => 1.0 / (k * k + beta * beta),
            Profile::Gaussian { beta } => (-(k * k) / (beta * beta)).exp(),
        }
    }
}

impl Default for Profile {
    fn default() -> Self {
        Profile::Yamaguchi { beta: 1.0 }
    }
}

/// Recipe for an interaction, re-sampled on every grid it is built on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PotentialSpec {
    Separable {
        coupling: f64,
        profile: Profile,
    },
    /// `λ exp(-(k - k')² / σ²)`
    GaussianKernel {
        coupling: f64,
        sigma: f64,
    },
    RandomHermitian {
        coupling: f64,
        seed: u64,
    },
}

impl PotentialSpec {
    pub fn coupling(&self) -> f64 {
        match *self {
            PotentialSpec::Separable { coupling, .. }
            | PotentialSpec::GaussianKernel { coupling, .. }
            | PotentialSpec::RandomHermitian { coupling, .. } => coupling,
        }
    }

    pub fn with_coupling(self, coupling: f64) -> Self {
        match self {
            PotentialSpec::Separable { profile, .. } => PotentialSpec::Separable { coupling, profile },
            PotentialSpec::GaussianKernel { sigma, .. } => PotentialSpec::GaussianKernel { coupling, sigma },
            PotentialSpec::RandomHermitian { seed, .. } => PotentialSpec::RandomHermitian { coupling, seed },
        }
    }

    pub fn is_separable(&self) -> bool {
        matches!(self, PotentialSpec::Separable { .. })
    }

    pub fn build(&self, grid: &ModelGrid) -> Result<Potential> {
        match *self {
            PotentialSpec::Separable { coupling, profile } => {
                Ok(sample_separable(grid, coupling, |k| profile.eval(k))?.into())
            }
            PotentialSpec::GaussianKernel { coupling, sigma } => {
                if !(sigma.is_finite() && sigma > 0.0) {
                    return Err(LabError::invalid(format!("sigma must be positive, got {sigma}")));
                }
                let s2 = sigma * sigma;
                Ok(sample_dense(grid, |a, b| coupling * (-(a - b) * (a - b) / s2).exp())?.into())
            }
            PotentialSpec::RandomHermitian { coupling, seed } => {
                Ok(random_hermitian(grid, coupling, seed)?.into())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub kmax: f64,
    pub half_count: usize,
    pub scheme: QuadratureScheme,
}

impl GridSpec {
    pub fn build(&self) -> Result<ModelGrid> {
        build_grid(self.kmax, self.half_count, self.scheme)
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            kmax: 2.0,
            half_count: 32,
            scheme: QuadratureScheme::GaussLegendre,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::to_c64;

    fn c(z: Cx) -> Complex64 {
        to_c64(z)
    }

    #[test]
    fn uniform_grid_midpoints() {
        let g = build_grid(1.0, 2, QuadratureScheme::Uniform).unwrap();
        assert_eq!(g.momenta(), &[-0.75, -0.25, 0.25, 0.75]);
        assert_eq!(g.weights(), &[0.5; 4]);
        assert_eq!(g.energies()[1], 0.0625);
    }

    #[test]
    fn weights_sum_to_interval_length() {
        for scheme in [QuadratureScheme::Uniform, QuadratureScheme::GaussLegendre] {
            for (kmax, m) in [(1.0, 2), (2.5, 7), (3.0, 40)] {
                let g = build_grid(kmax, m, scheme).unwrap();
                let s: f64 = g.weights().iter().sum();
                assert!((s - 2.0 * kmax).abs() < 1e-12, "{scheme} {kmax} {m}: {s}");
            }
        }
    }

    #[test]
    fn mirror_pairs_are_bitwise_degenerate() {
        let g = build_grid(3.7, 19, QuadratureScheme::GaussLegendre).unwrap();
        for i in 0..g.size() {
            let j = g.mirror(i);
            assert_ne!(i, j);
            assert_eq!(g.momenta()[j], -g.momenta()[i]);
            assert_eq!(g.weights()[j], g.weights()[i]);
            assert!(g.degenerate(i, j));
        }
        assert!(g.momenta().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn rejects_bad_grid_arguments() {
        assert!(build_grid(0.0, 4, QuadratureScheme::Uniform).is_err());
        assert!(build_grid(-1.0, 4, QuadratureScheme::Uniform).is_err());
        assert!(build_grid(f64::NAN, 4, QuadratureScheme::Uniform).is_err());
        assert!(build_grid(1.0, 1, QuadratureScheme::GaussLegendre).is_err());
        assert!("simpson".parse::<QuadratureScheme>().is_err());
    }

    #[test]
    fn plane_waves_are_orthonormal_eigenvectors() {
        let g = build_grid(1.0, 3, QuadratureScheme::GaussLegendre).unwrap();
        let e0 = plane_wave(&g, 0).unwrap();
        assert_eq!(c(e0[0]), Complex64::new(1.0, 0.0));
        assert!(e0.amplitudes()[1..].iter().all(|z| z.is_zero()));
        for i in 0..g.size() {
            let ei = plane_wave(&g, i).unwrap();
            for j in 0..g.size() {
                let ej = plane_wave(&g, j).unwrap();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_eq!(c(inner(&ei, &ej).unwrap()), Complex64::new(expect, 0.0));
            }
            let h = h0_apply(&g, &ei).unwrap();
            assert_eq!(h, ei.scaled(cx(g.energy(i), 0.0)));
        }
        assert!(plane_wave(&g, g.size()).is_err());
    }

    #[test]
    fn h0_of_zero_is_zero_and_checks_dimension() {
        let g = build_grid(1.0, 2, QuadratureScheme::Uniform).unwrap();
        assert_eq!(
            h0_apply(&g, &StateVector::zeros(4)).unwrap(),
            StateVector::zeros(4)
        );
        assert!(h0_apply(&g, &StateVector::zeros(3)).is_err());
        assert!(inner(&StateVector::zeros(3), &StateVector::zeros(4)).is_err());
    }

    #[test]
    fn yamaguchi_sample_value() {
        let g = build_grid(1.0, 2, QuadratureScheme::Uniform).unwrap();
        let v = sample_separable(&g, 1.0, |k| Profile::Yamaguchi { beta: 1.0 }.eval(k)).unwrap();
        let expect = (1.0 / 1.0625) * 0.5f64.sqrt();
        assert_eq!(to_f64(v.formfactor()[2].re), expect);
    }

    #[test]
    fn separable_rank_one_action() {
        let g = build_grid(2.0, 4, QuadratureScheme::GaussLegendre).unwrap();
        let v = sample_separable(&g, 0.7, |k| Profile::default().eval(k)).unwrap();
        let gvec = v.formfactor();
        for j in 0..g.size() {
            let got = v.apply(&plane_wave(&g, j).unwrap());
            let expect = gvec.scaled(gvec[j].conj() * real(0.7));
            assert_eq!(got, expect);
        }
        let zero = sample_separable(&g, 0.0, |k| Profile::default().eval(k)).unwrap();
        let x = StateVector::new((0..g.size()).map(|i| cx(i as f64, 1.0)).collect());
        assert!(zero.apply(&x).amplitudes().iter().all(|z| z.is_zero()));
    }

    #[test]
    fn non_finite_profile_rejected() {
        let g = build_grid(1.0, 2, QuadratureScheme::Uniform).unwrap();
        assert!(sample_separable(&g, 1.0, |k| 1.0 / (k - 0.25)).is_err());
    }

    #[test]
    fn dense_constructor_agrees_with_separable_on_rank_one_kernels() {
        let g = build_grid(2.0, 8, QuadratureScheme::GaussLegendre).unwrap();
        let prof = Profile::Yamaguchi { beta: 1.3 };
        let lam = -0.4;
        let sep = sample_separable(&g, lam, |k| prof.eval(k)).unwrap().to_matrix();
        let dense = sample_dense(&g, |a, b| lam * prof.eval(a) * prof.eval(b)).unwrap();
        for i in 0..g.size() {
            for j in 0..g.size() {
                let a = to_c64(sep[(i, j)]);
                let b = to_c64(dense.matrix()[(i, j)]);
                assert!((a - b).norm() <= 1e-14 * a.norm(), "({i},{j}) {a} {b}");
            }
        }
    }

    #[test]
    fn dense_sampling_is_hermitian_and_checks_symmetry() {
        let g = build_grid(2.0, 6, QuadratureScheme::GaussLegendre).unwrap();
        let v = PotentialSpec::GaussianKernel {
            coupling: 0.5,
            sigma: 1.0,
        }
        .build(&g)
        .unwrap();
        assert_eq!(v.to_matrix().hermiticity_defect(), 0.0);
        let z = sample_dense(&g, |_, _| 0.0).unwrap();
        assert_eq!(*z.matrix(), Matrix::zeros(g.size()));
        assert!(sample_dense(&g, |a, b| a - 2.0 * b).is_err());
    }

    #[test]
    fn random_hermitian_is_reproducible() {
        let g = build_grid(1.0, 5, QuadratureScheme::Uniform).unwrap();
        let a = random_hermitian(&g, 0.3, 11).unwrap();
        let b = random_hermitian(&g, 0.3, 11).unwrap();
        let c = random_hermitian(&g, 0.3, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.matrix().hermiticity_defect(), 0.0);
    }

    #[test]
    fn nearest_index_respects_sign() {
        let g = build_grid(1.0, 4, QuadratureScheme::Uniform).unwrap();
        assert_eq!(g.nearest_index(-0.3), 2);
        assert_eq!(g.nearest_index(0.3), 5);
        assert_eq!(g.local_spacing(5), 0.625 * 0.625 - 0.375 * 0.375);
    }
}
