//! Overlap of the two degenerate scattering states at one energy, as ε shrinks.
//!
//! `cargo run -p lsl-core --example degenerate_overlap`

use lsl_core::hilbert::{build_grid, PotentialSpec, Profile, QuadratureScheme};
use lsl_core::lsl::{overlap_direct, solve, Route};
use lsl_core::resolvent::AdiabaticParam;
use lsl_core::scalar::to_c64;

fn main() -> lsl_core::Result<()> {
    let grid = build_grid(2.0, 32, QuadratureScheme::GaussLegendre)?;
    let v = PotentialSpec::Separable {
        coupling: 0.5,
        profile: Profile::Yamaguchi { beta: 1.0 },
    }
    .build(&grid)?;
    let (n, k) = (16, grid.mirror(16));
    println!(
        "k = {:+.6}, {:+.6}  E = {:.6}",
        grid.momenta()[n],
        grid.momenta()[k],
        grid.energy(n)
    );
    for e in [1e-1, 1e-2, 1e-3, 1e-4, 1e-6] {
        let eps = AdiabaticParam::new(e)?;
        let a = solve(&grid, &v, n, eps, Route::SeparableClosed)?;
        let b = solve(&grid, &v, k, eps, Route::SeparableClosed)?;
        let i = to_c64(overlap_direct(&a, &b)?);
        println!("eps {e:7.0e}  <psi_n|psi_k> = {:+.12e} {:+.12e}i", i.re, i.im);
    }
    Ok(())
}
