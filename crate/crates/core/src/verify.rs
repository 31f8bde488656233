//! Lemma residuals, ε-scans and the Møller Gram matrix.
//!
//! Every residual is `|L - R| / (|L| + |R| + 1e-300)`, evaluated in
//! double-double and reported as `f64`. Degenerate pairs are recognised by
//! exact energy equality.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use num_traits::{One, Zero};

use crate::error::{LabError, Result};
use crate::hilbert::{dot, GridSpec, ModelGrid, Potential, PotentialSpec, SeparablePotential};
use crate::linalg::Matrix;
use crate::lsl::{
    self, a_of, a_offshell_of, c_of, expansion_of, fredholm_determinant, Channel, Route, ScatteringSolution,
};
use crate::resolvent::{
    d_weight, dko_unchecked, g0_unchecked, identity5_residual, mu, propagator, AdiabaticParam,
};
use crate::scalar::{abs, cx_real, real, relative_gap, relative_gap_vec, to_c64, to_f64, Cx, Real};

pub const IDENTITY_TOLERANCE: f64 = 1e-11;
pub const ROUTE_TOLERANCE: f64 = 1e-10;
pub const GRAM_TOLERANCE: f64 = 1e-13;

/// Scan points with `ε < SPACING_MARGIN · spacing` are left out of slope fits.
pub const SPACING_MARGIN: f64 = 10.0;

/// Largest grid the dense routes accept inside a joint-refinement scan.
pub const MAX_DENSE_JOINT_SIZE: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LemmaId {
    /// Resolvent difference identity.
    Id5,
    /// `(E_k - H + iε)ψ_k = iε|k⟩`.
    A8,
    /// `(E_k - H)ψ_k = -η_k V ψ_k`.
    A9,
    /// Off-shell T-amplitude difference against `C_nk`.
    B10,
    /// On-shell unitarity.
    B13,
    /// Overlap against `δ_nk - d_nk A_nk`.
    C15,
    /// Goldberger–Watson gap against `d_nk |A_nk|`.
    C17Gap,
    /// Separable overlap closed form.
    D19,
    /// Separable overlap through the Fredholm-difference bracket.
    D22,
    /// Four-term overlap expansion.
    E18,
    /// `‖ψ_k‖² = 1 - A_kk/ε` and `‖ψ_k‖ ≤ 1`.
    Norm,
    /// Agreement of the independent solver routes.
    Routes,
    /// Gram entries against pairwise overlaps from another route.
    Gram,
}

impl LemmaId {
    pub fn as_str(self) -> &'static str {
        match self {
            LemmaId::Id5 => "ID5",
            LemmaId::A8 => "A8",
            LemmaId::A9 => "A9",
            LemmaId::B10 => "B10",
            LemmaId::B13 => "B13",
            LemmaId::C15 => "C15",
            LemmaId::C17Gap => "C17-gap",
            LemmaId::D19 => "D19",
            LemmaId::D22 => "D22",
            LemmaId::E18 => "E18",
            LemmaId::Norm => "NORM",
            LemmaId::Routes => "ROUTES",
            LemmaId::Gram => "GRAM",
        }
    }
}

impl fmt::Display for LemmaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaReport {
    pub lemma_id: LemmaId,
    pub residual: f64,
    /// Always carries `tolerance`; usually also `N`, `eps`, `n`, `k`, `E_n`, `E_k`.
    pub context: BTreeMap<String, f64>,
    pub passed: bool,
}

impl LemmaReport {
    pub fn new(lemma_id: LemmaId, residual: f64, tolerance: f64, mut context: BTreeMap<String, f64>) -> Self {
        context.insert("tolerance".into(), tolerance);
        let passed = residual.is_finite() && residual >= 0.0 && residual <= tolerance;
        Self {
            lemma_id,
            residual,
            context,
            passed,
        }
    }

    pub fn tolerance(&self) -> f64 {
        self.context["tolerance"]
    }
}

fn kron(n: usize, k: usize) -> Cx {
    if n == k {
        Cx::one()
    } else {
        Cx::zero()
    }
}

fn on_shell(grid: &ModelGrid, n: usize, k: usize) -> bool {
    n == k || grid.degenerate(n, k)
}

fn channels_for<'a>(
    grid: &ModelGrid,
    v: &Potential,
    sols: &[&'a ScatteringSolution],
) -> Result<Vec<Channel<'a>>> {
    for s in sols {
        lsl::check_solution(grid, v, s)?;
    }
    if let Some(first) = sols.first() {
        for s in &sols[1..] {
            lsl::check_pair(first, s)?;
        }
    }
    Ok(sols.iter().map(|s| Channel::new(v, s)).collect())
}

fn pair_channels<'a>(
    grid: &ModelGrid,
    v: &Potential,
    sol_n: &'a ScatteringSolution,
    sol_k: &'a ScatteringSolution,
) -> Result<(Channel<'a>, Channel<'a>)> {
    let mut ch = channels_for(grid, v, &[sol_n, sol_k])?;
    let k = ch.pop().expect("two channels");
    let n = ch.pop().expect("two channels");
    Ok((n, k))
}

fn a_residuals(grid: &ModelGrid, ch: &Channel<'_>) -> (f64, f64) {
    let sol = ch.sol;
    let (ek, eps) = (sol.energy(), sol.eps());
    let ie = Cx::new(Real::zero(), eps.real());
    let psi = sol.psi().amplitudes();
    let vpsi = ch.v_psi.amplitudes();
    let n = psi.len();
    let (mut l8, mut r8, mut l9, mut r9) = (
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    );
    for (i, &ei) in grid.energies().iter().enumerate() {
        let free = psi[i] * (real(ek) - real(ei)) - vpsi[i];
        l8.push(free + psi[i] * ie);
        r8.push(kron(i, sol.incident_index()) * ie);
        l9.push(free);
        r9.push(-(ie * propagator(ek, ei, eps, false) * vpsi[i]));
    }
    (relative_gap_vec(&l8, &r8), relative_gap_vec(&l9, &r9))
}

/// Relative residuals of `(E_k - H + iε)ψ_k = iε|k⟩` and
/// `(E_k - H)ψ_k = -η_k V ψ_k`.
pub fn lemma_a_residuals(grid: &ModelGrid, v: &Potential, sol: &ScatteringSolution) -> Result<(f64, f64)> {
    let ch = channels_for(grid, v, &[sol])?;
    Ok(a_residuals(grid, &ch[0]))
}

/// `‖η_k V ψ_k‖`: how far `ψ_k` is from an eigenvector of `H`.
pub fn non_eigen_magnitude(grid: &ModelGrid, v: &Potential, sol: &ScatteringSolution) -> Result<f64> {
    lsl::eigen_defect(grid, v, sol)
}

fn b_residual(grid: &ModelGrid, n: &Channel<'_>, k: &Channel<'_>) -> f64 {
    let (en, ek, eps) = (n.sol.energy(), k.sol.energy(), k.sol.eps());
    let t_nk = k.t(n.index());
    let t_kn = n.t(k.index());
    let lhs = (t_nk - t_kn.conj()) / Cx::new(real(ek) - real(en), eps.real());
    let rhs = -((Cx::one() + mu(en, ek, eps)) * c_of(grid, n, k));
    relative_gap(lhs, rhs)
}

/// `(T_nk - conj T_kn)/(E_k - E_n + iε)` against `-(1 + μ_nk) C_nk`.
pub fn lemma_b_residual(
    grid: &ModelGrid,
    v: &Potential,
    sol_n: &ScatteringSolution,
    sol_k: &ScatteringSolution,
) -> Result<f64> {
    let (n, k) = pair_channels(grid, v, sol_n, sol_k)?;
    Ok(b_residual(grid, &n, &k))
}

fn unitarity_of(grid: &ModelGrid, n: &Channel<'_>, k: &Channel<'_>) -> f64 {
    let lhs = k.t(n.index()) - n.t(k.index()).conj();
    let rhs = -(Cx::new(Real::zero(), real(2.0)) * a_of(grid, n, k));
    relative_gap(lhs, rhs)
}

/// `T_nk - conj T_kn` against `-2i A_nk`; on-shell pairs only.
pub fn unitarity_residual(
    grid: &ModelGrid,
    v: &Potential,
    sol_n: &ScatteringSolution,
    sol_k: &ScatteringSolution,
) -> Result<f64> {
    let (n, k) = pair_channels(grid, v, sol_n, sol_k)?;
    if !on_shell(grid, n.index(), k.index()) {
        return Err(LabError::InvalidPairing(format!(
            "unitarity needs E_n = E_k, got indices {} and {}",
            n.index(),
            k.index()
        )));
    }
    Ok(unitarity_of(grid, &n, &k))
}

/// `d_nk A_nk`, with the literal `A` on-shell and its off-shell continuation
/// `(ε + i(E_k - E_n)) C_nk` otherwise.
fn gw_term(grid: &ModelGrid, n: &Channel<'_>, k: &Channel<'_>) -> Cx {
    let a = if on_shell(grid, n.index(), k.index()) {
        a_of(grid, n, k)
    } else {
        a_offshell_of(grid, n, k)
    };
    a * d_weight(n.sol.energy(), k.sol.energy(), k.sol.eps())
}

fn c_residual(grid: &ModelGrid, n: &Channel<'_>, k: &Channel<'_>) -> f64 {
    let overlap = dot(n.sol.psi(), k.sol.psi());
    relative_gap(overlap, kron(n.index(), k.index()) - gw_term(grid, n, k))
}

/// `I_nk` against `δ_nk - d_nk A_nk`.
pub fn lemma_c_residual(
    grid: &ModelGrid,
    v: &Potential,
    sol_n: &ScatteringSolution,
    sol_k: &ScatteringSolution,
) -> Result<f64> {
    let (n, k) = pair_channels(grid, v, sol_n, sol_k)?;
    Ok(c_residual(grid, &n, &k))
}

fn gap_of(n: &Channel<'_>, k: &Channel<'_>) -> Real {
    abs(dot(n.sol.psi(), k.sol.psi()) - kron(n.index(), k.index()))
}

/// `|I_nk - δ_nk|`.
pub fn gw_gap(sol_n: &ScatteringSolution, sol_k: &ScatteringSolution) -> Result<f64> {
    let overlap = lsl::overlap_direct(sol_n, sol_k)?;
    Ok(to_f64(abs(
        overlap - kron(sol_n.incident_index(), sol_k.incident_index())
    )))
}

fn gap_consistency(grid: &ModelGrid, n: &Channel<'_>, k: &Channel<'_>) -> f64 {
    relative_gap(cx_real(gap_of(n, k)), cx_real(abs(gw_term(grid, n, k))))
}

/// D19 (closed-form overlap) and D22 (Fredholm-difference bracket) residuals.
fn d_residuals(grid: &ModelGrid, sep: &SeparablePotential, n: &Channel<'_>, k: &Channel<'_>) -> (f64, f64) {
    let (ni, ki) = (n.index(), k.index());
    let (en, ek, eps) = (n.sol.energy(), k.sol.energy(), k.sol.eps());
    let g = sep.formfactor();
    let lam = real(sep.coupling());
    let dn = fredholm_determinant(grid, sep, en, eps);
    let dk = fredholm_determinant(grid, sep, ek, eps);
    let pref = g[ni] * g[ki].conj() * (lam * lam) / (dn.conj() * dk);
    let x = dot(
        g,
        &g0_unchecked(grid, en, eps, &g0_unchecked(grid, ek, eps, g, false), true),
    );
    let overlap = dot(n.sol.psi(), k.sol.psi());
    let free = kron(ni, ki);

    let closed = if on_shell(grid, ni, ki) {
        dot(g, &dko_unchecked(grid, ek, eps, g)) * d_weight(en, ek, eps)
    } else {
        mu(en, ek, eps) * x
    };
    let r19 = relative_gap(overlap, free - pref * closed);

    let bracket = if sep.coupling() == 0.0 {
        Cx::zero()
    } else {
        (dk - dn.conj()) / (Cx::new(real(ek) - real(en), eps.real()) * lam) - x
    };
    let r22 = relative_gap(overlap, free - pref * bracket);
    (r19, r22)
}

/// Residuals of the separable overlap formula and of the Fredholm-difference
/// bracket it is derived from.
pub fn lemma_d_residual(
    grid: &ModelGrid,
    v: &Potential,
    sol_n: &ScatteringSolution,
    sol_k: &ScatteringSolution,
) -> Result<(f64, f64)> {
    let sep = v
        .as_separable()
        .ok_or_else(|| LabError::invalid("overlap closed form needs a separable potential"))?;
    let (n, k) = pair_channels(grid, v, sol_n, sol_k)?;
    Ok(d_residuals(grid, sep, &n, &k))
}

/// `I_nk` from the inner product against the four-term expansion.
pub fn expansion_residual(
    grid: &ModelGrid,
    v: &Potential,
    sol_n: &ScatteringSolution,
    sol_k: &ScatteringSolution,
) -> Result<f64> {
    let (n, k) = pair_channels(grid, v, sol_n, sol_k)?;
    Ok(relative_gap(
        dot(n.sol.psi(), k.sol.psi()),
        expansion_of(grid, &n, &k),
    ))
}

fn norm_of(grid: &ModelGrid, k: &Channel<'_>) -> (f64, f64) {
    let nrm = k.sol.psi().norm();
    let nn = nrm * nrm;
    let depleted = Cx::one() - a_of(grid, k, k) / cx_real(k.sol.eps().real());
    let gap = relative_gap(cx_real(nn), depleted);
    let excess = to_f64(nn - Real::one()).max(0.0);
    (gap.max(excess), to_f64(nrm))
}

/// Residual of `‖ψ_k‖² = 1 - A_kk/ε` (raised to `‖ψ_k‖² - 1` if that is
/// positive) and the norm itself.
pub fn norm_depletion(grid: &ModelGrid, v: &Potential, sol: &ScatteringSolution) -> Result<(f64, f64)> {
    let ch = channels_for(grid, v, &[sol])?;
    Ok(norm_of(grid, &ch[0]))
}

/// Largest pairwise relative distance between the available routes.
pub fn route_spread(solutions: &[&ScatteringSolution]) -> Result<f64> {
    let mut worst = 0.0f64;
    for (i, a) in solutions.iter().enumerate() {
        for b in &solutions[i + 1..] {
            if a.incident_index() != b.incident_index() {
                return Err(LabError::InvalidPairing(
                    "routes solved for different channels".into(),
                ));
            }
            worst = worst.max(lsl::route_distance(a, b)?);
        }
    }
    Ok(worst)
}

/// Routes that apply to `v`: both dense routes, plus the closed form when separable.
pub fn available_routes(v: &Potential) -> Vec<Route> {
    let mut routes = vec![Route::LsSolve, Route::LowSolve];
    if v.as_separable().is_some() {
        routes.push(Route::SeparableClosed);
    }
    routes
}

#[derive(Debug, Clone, PartialEq)]
pub struct MollerGram {
    /// `G_ij = ⟨ψ_i|ψ_j⟩` over all channels.
    pub gram: Matrix,
    /// `max |G_ij - δ_ij|`.
    pub deviation: f64,
}

/// Gram matrix of a set of solutions sharing ε.
pub fn gram_of(solutions: &[ScatteringSolution]) -> Result<Matrix> {
    if let Some(first) = solutions.first() {
        for s in solutions {
            lsl::check_pair(first, s)?;
        }
    }
    let rows = crate::par::map(solutions, |a| {
        solutions
            .iter()
            .map(|b| dot(a.psi(), b.psi()))
            .collect::<Vec<_>>()
    });
    Ok(Matrix::from_fn(solutions.len(), |i, j| rows[i][j]))
}

pub fn gram_deviation(gram: &Matrix) -> f64 {
    let n = gram.dim();
    let mut worst = Real::zero();
    for i in 0..n {
        for j in 0..n {
            let d = abs(gram[(i, j)] - kron(i, j));
            if d > worst {
                worst = d;
            }
        }
    }
    to_f64(worst)
}

pub fn moller_gram_with(
    grid: &ModelGrid,
    v: &Potential,
    eps: AdiabaticParam,
    route: Route,
) -> Result<MollerGram> {
    let all: Vec<usize> = (0..grid.size()).collect();
    let sols = lsl::solve_channels(grid, v, &all, eps, route)?;
    let gram = gram_of(&sols)?;
    let deviation = gram_deviation(&gram);
    Ok(MollerGram { gram, deviation })
}

/// Gram matrix over every channel of the grid, built from full-resolvent solves.
pub fn moller_gram(grid: &ModelGrid, v: &Potential, eps: AdiabaticParam) -> Result<MollerGram> {
    moller_gram_with(grid, v, eps, Route::LowSolve)
}

/// `(i, mirror(i))`, `(i, i+1)` and `(i, 3N/8)` for `i = N/4`.
pub fn auto_pairs(grid: &ModelGrid) -> Result<Vec<(usize, usize)>> {
    let n = grid.size();
    if n < 8 {
        return Err(LabError::invalid(format!(
            "automatic pairs need at least 8 grid points, got {n}"
        )));
    }
    let i = n / 4;
    Ok(vec![(i, grid.mirror(i)), (i, i + 1), (i, 3 * n / 8)])
}

fn check_pairs(grid: &ModelGrid, pairs: &[(usize, usize)]) -> Result<()> {
    for &(n, k) in pairs {
        if n >= grid.size() || k >= grid.size() {
            return Err(LabError::invalid(format!(
                "pair ({n}, {k}) out of range for grid of size {}",
                grid.size()
            )));
        }
    }
    Ok(())
}

/// Options for [`run_identity_suite`].
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOptions {
    /// Route whose states feed the lemma residuals.
    pub route: Route,
    /// Recorded as `lambda` in report contexts.
    pub coupling: Option<f64>,
    pub tolerance: f64,
    pub route_tolerance: f64,
    pub gram_tolerance: f64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            route: Route::LsSolve,
            coupling: None,
            tolerance: IDENTITY_TOLERANCE,
            route_tolerance: ROUTE_TOLERANCE,
            gram_tolerance: GRAM_TOLERANCE,
        }
    }
}

/// Runs every identity on the channels touched by `pairs` at one ε.
///
/// Per channel: A8, A9, NORM, ROUTES. Per pair: ID5, B10, B13 (on-shell only),
/// C15, C17-gap, D19 and D22 (separable only), E18. Finally one GRAM report
/// comparing the Gram block of the suite route with overlaps of an
/// independently solved route.
pub fn run_identity_suite(
    grid: &ModelGrid,
    v: &Potential,
    eps: AdiabaticParam,
    pairs: &[(usize, usize)],
    opts: &SuiteOptions,
) -> Result<Vec<LemmaReport>> {
    check_pairs(grid, pairs)?;
    let mut indices: Vec<usize> = pairs.iter().flat_map(|&(n, k)| [n, k]).collect();
    indices.sort_unstable();
    indices.dedup();

    let routes = available_routes(v);
    if !routes.contains(&opts.route) {
        return Err(LabError::invalid(format!(
            "route {} is not available for this potential",
            opts.route
        )));
    }
    // by_route[r][c]: channel indices[c] solved with routes[r]
    let by_route: Vec<Vec<ScatteringSolution>> = routes
        .iter()
        .map(|&r| lsl::solve_channels(grid, v, &indices, eps, r))
        .collect::<Result<_>>()?;
    let primary_pos = routes
        .iter()
        .position(|&r| r == opts.route)
        .expect("checked above");
    let alt_pos = if opts.route == Route::LsSolve { 1 } else { 0 };
    let primary = &by_route[primary_pos];
    let chans: Vec<Channel<'_>> = primary.iter().map(|s| Channel::new(v, s)).collect();
    let slot = |i: usize| indices.binary_search(&i).expect("index collected above");

    let base = |n: usize, k: usize| {
        let mut c = BTreeMap::new();
        c.insert("N".to_string(), grid.size() as f64);
        c.insert("eps".to_string(), eps.value());
        if let Some(l) = opts.coupling {
            c.insert("lambda".to_string(), l);
        }
        c.insert("n".to_string(), n as f64);
        c.insert("k".to_string(), k as f64);
        c.insert("E_n".to_string(), grid.energy(n));
        c.insert("E_k".to_string(), grid.energy(k));
        c
    };

    let per_channel = crate::par::map(&(0..indices.len()).collect::<Vec<_>>(), |&c| {
        let ch = &chans[c];
        let i = ch.index();
        let mut out = Vec::with_capacity(4);
        let (r8, r9) = a_residuals(grid, ch);
        out.push(LemmaReport::new(LemmaId::A8, r8, opts.tolerance, base(i, i)));
        out.push(LemmaReport::new(LemmaId::A9, r9, opts.tolerance, base(i, i)));
        let (rn, norm) = norm_of(grid, ch);
        let mut ctx = base(i, i);
        ctx.insert("norm".into(), norm);
        out.push(LemmaReport::new(LemmaId::Norm, rn, opts.tolerance, ctx));
        let same: Vec<&ScatteringSolution> = by_route.iter().map(|r| &r[c]).collect();
        let spread = route_spread(&same).unwrap_or(f64::INFINITY);
        out.push(LemmaReport::new(
            LemmaId::Routes,
            spread,
            opts.route_tolerance,
            base(i, i),
        ));
        out
    });

    let per_pair = crate::par::map(pairs, |&(ni, ki)| {
        let (n, k) = (&chans[slot(ni)], &chans[slot(ki)]);
        let mut out = Vec::with_capacity(8);
        let id5 =
            identity5_residual(grid, n.sol.energy(), k.sol.energy(), eps, &k.v_psi).unwrap_or(f64::INFINITY);
        out.push(LemmaReport::new(LemmaId::Id5, id5, opts.tolerance, base(ni, ki)));
        out.push(LemmaReport::new(
            LemmaId::B10,
            b_residual(grid, n, k),
            opts.tolerance,
            base(ni, ki),
        ));
        if on_shell(grid, ni, ki) {
            out.push(LemmaReport::new(
                LemmaId::B13,
                unitarity_of(grid, n, k),
                opts.tolerance,
                base(ni, ki),
            ));
        }
        out.push(LemmaReport::new(
            LemmaId::C15,
            c_residual(grid, n, k),
            opts.tolerance,
            base(ni, ki),
        ));
        let mut ctx = base(ni, ki);
        ctx.insert("gap".into(), to_f64(gap_of(n, k)));
        out.push(LemmaReport::new(
            LemmaId::C17Gap,
            gap_consistency(grid, n, k),
            opts.tolerance,
            ctx,
        ));
        if let Some(sep) = v.as_separable() {
            let (r19, r22) = d_residuals(grid, sep, n, k);
            out.push(LemmaReport::new(LemmaId::D19, r19, opts.tolerance, base(ni, ki)));
            out.push(LemmaReport::new(LemmaId::D22, r22, opts.tolerance, base(ni, ki)));
        }
        let e18 = relative_gap(dot(n.sol.psi(), k.sol.psi()), expansion_of(grid, n, k));
        out.push(LemmaReport::new(LemmaId::E18, e18, opts.tolerance, base(ni, ki)));
        out
    });

    let gram = gram_of(primary)?;
    let alt = &by_route[alt_pos];
    let mut gram_worst = 0.0f64;
    for &(ni, ki) in pairs {
        let (a, b) = (slot(ni), slot(ki));
        let independent = dot(alt[a].psi(), alt[b].psi());
        gram_worst = gram_worst.max(relative_gap(gram[(a, b)], independent));
    }
    let mut gctx = BTreeMap::new();
    gctx.insert("N".to_string(), grid.size() as f64);
    gctx.insert("eps".to_string(), eps.value());
    if let Some(l) = opts.coupling {
        gctx.insert("lambda".to_string(), l);
    }
    gctx.insert("channels".to_string(), indices.len() as f64);

    let mut reports: Vec<LemmaReport> = per_channel.into_iter().flatten().collect();
    reports.extend(per_pair.into_iter().flatten());
    reports.push(LemmaReport::new(
        LemmaId::Gram,
        gram_worst,
        opts.gram_tolerance,
        gctx,
    ));
    Ok(reports)
}

/// One `(n, k)` row of an ε-scan.
#[derive(Debug, Clone, PartialEq)]
pub struct PairRecord {
    pub n: usize,
    pub k: usize,
    pub e_n: f64,
    pub e_k: f64,
    pub d_nk: f64,
    /// `⟨ψ_n|V D(E_k) V|ψ_k⟩`.
    pub a_nk: Complex64,
    pub i_nk: Complex64,
    /// `|I_nk - δ_nk|`.
    pub gw_gap: f64,
    /// Larger of the two local level spacings.
    pub spacing: f64,
    /// `gw_gap / √(w_n w_k)`, the gap in continuum normalization.
    pub normalized_gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRecord {
    pub eps: f64,
    pub grid_size: usize,
    pub pairs: Vec<PairRecord>,
}

/// Checks that `eps_list` is nonempty, positive and strictly decreasing.
pub fn validate_eps_list(eps_list: &[f64]) -> Result<Vec<AdiabaticParam>> {
    if eps_list.is_empty() {
        return Err(LabError::invalid("eps list is empty"));
    }
    let params = eps_list
        .iter()
        .map(|&e| AdiabaticParam::new(e))
        .collect::<Result<Vec<_>>>()?;
    for w in eps_list.windows(2) {
        if w[1] >= w[0] {
            return Err(LabError::invalid(format!(
                "eps list must be strictly decreasing ({} then {})",
                w[0], w[1]
            )));
        }
    }
    Ok(params)
}

fn scan_point(
    grid: &ModelGrid,
    v: &Potential,
    eps: AdiabaticParam,
    pairs: &[(usize, usize)],
    route: Route,
) -> Result<ScanRecord> {
    let mut sorted = pairs.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut indices: Vec<usize> = sorted.iter().flat_map(|&(n, k)| [n, k]).collect();
    indices.sort_unstable();
    indices.dedup();
    let sols = lsl::solve_channels(grid, v, &indices, eps, route)?;
    let chans: Vec<Channel<'_>> = sols.iter().map(|s| Channel::new(v, s)).collect();
    let slot = |i: usize| indices.binary_search(&i).expect("index collected above");
    let w = grid.weights();
    let rows = crate::par::map(&sorted, |&(ni, ki)| {
        let (n, k) = (&chans[slot(ni)], &chans[slot(ki)]);
        let overlap = dot(n.sol.psi(), k.sol.psi());
        let gap = abs(overlap - kron(ni, ki));
        let norm = real((w[ni] * w[ki]).sqrt());
        PairRecord {
            n: ni,
            k: ki,
            e_n: grid.energy(ni),
            e_k: grid.energy(ki),
            d_nk: to_f64(d_weight(grid.energy(ni), grid.energy(ki), eps)),
            a_nk: to_c64(a_of(grid, n, k)),
            i_nk: to_c64(overlap),
            gw_gap: to_f64(gap),
            spacing: grid.local_spacing(ni).max(grid.local_spacing(ki)),
            normalized_gap: to_f64(gap / norm),
        }
    });
    Ok(ScanRecord {
        eps: eps.value(),
        grid_size: grid.size(),
        pairs: rows,
    })
}

/// Fixed-grid scan. Records follow `eps_list` (decreasing); pairs within a
/// record are sorted by `(n, k)`.
pub fn epsilon_scan(
    grid: &ModelGrid,
    v: &Potential,
    eps_list: &[f64],
    pairs: &[(usize, usize)],
    route: Route,
) -> Result<Vec<ScanRecord>> {
    let params = validate_eps_list(eps_list)?;
    check_pairs(grid, pairs)?;
    if pairs.is_empty() {
        return Err(LabError::invalid("scan needs at least one pair"));
    }
    crate::par::map(&params, |&e| scan_point(grid, v, e, pairs, route))
        .into_iter()
        .collect()
}

/// Grid used at `eps` in a joint-refinement scan: the point count scales as
/// `eps_list[0] / eps`, so ε times the level density stays fixed.
pub fn refined_grid_spec(base: &GridSpec, eps0: f64, eps: f64) -> GridSpec {
    let half = (base.half_count as f64 * eps0 / eps).round().max(1.0) as usize;
    GridSpec {
        half_count: half,
        ..*base
    }
}

/// Scan in which the grid is refined together with ε. Pairs are given as
/// indices on the base grid and followed by momentum onto each refined grid.
pub fn joint_refinement_scan(
    base: &GridSpec,
    potential: &PotentialSpec,
    eps_list: &[f64],
    pairs: &[(usize, usize)],
    route: Route,
) -> Result<Vec<ScanRecord>> {
    let params = validate_eps_list(eps_list)?;
    if pairs.is_empty() {
        return Err(LabError::invalid("scan needs at least one pair"));
    }
    let base_grid = base.build()?;
    check_pairs(&base_grid, pairs)?;
    let momenta: Vec<(f64, f64)> = pairs
        .iter()
        .map(|&(n, k)| (base_grid.momenta()[n], base_grid.momenta()[k]))
        .collect();
    let eps0 = eps_list[0];
    let mut out = Vec::with_capacity(params.len());
    for e in params {
        let spec = refined_grid_spec(base, eps0, e.value());
        let dense_route = route != Route::SeparableClosed;
        if (dense_route || !potential.is_separable()) && 2 * spec.half_count > MAX_DENSE_JOINT_SIZE {
            return Err(LabError::invalid(format!(
                "joint refinement to {} points needs the separable closed-form route",
                2 * spec.half_count
            )));
        }
        let grid = spec.build()?;
        let v = potential.build(&grid)?;
        let mapped: Vec<(usize, usize)> = momenta
            .iter()
            .map(|&(qn, qk)| (grid.nearest_index(qn), grid.nearest_index(qk)))
            .collect();
        out.push(scan_point(&grid, &v, e, &mapped, route)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub points_used: usize,
    pub points_excluded: usize,
    /// `log10(ε_max / ε_min)` over the points used.
    pub decades: f64,
}

/// Least-squares fit of `log gap` against `log ε` for the pair at
/// `position` in each record, skipping points with `ε < 10 · spacing` and
/// zero gaps.
pub fn fit_gap_slope(records: &[ScanRecord], position: usize, normalized: bool) -> Result<SlopeFit> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut excluded = 0;
    for r in records {
        let p = r.pairs.get(position).ok_or_else(|| {
            LabError::invalid(format!("scan record at eps = {} has no pair {position}", r.eps))
        })?;
        let gap = if normalized { p.normalized_gap } else { p.gw_gap };
        if r.eps < SPACING_MARGIN * p.spacing || gap.is_nan() || gap <= 0.0 {
            excluded += 1;
            continue;
        }
        xs.push(r.eps.ln());
        ys.push(gap.ln());
    }
    if xs.len() < 2 {
        return Err(LabError::invalid(format!(
            "slope fit needs two usable points, found {}",
            xs.len()
        )));
    }
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    let (lo, hi) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
        (a.min(x), b.max(x))
    });
    Ok(SlopeFit {
        slope,
        intercept: my - slope * mx,
        points_used: xs.len(),
        points_excluded: excluded,
        decades: (hi - lo) / std::f64::consts::LN_10,
    })
}
