//! Meshes shipped with the crate.

use crate::mesh::{load_mesh, refine_uniform_times, Mesh};

pub const HOLEY: &str = include_str!("../data/holey.msh");
pub const SQUARE_CLAMPED: &str = include_str!("../data/square_clamped.msh");
pub const ANNULUS_CLAMPED: &str = include_str!("../data/annulus_clamped.msh");
pub const FIG1: &str = include_str!("../data/fig1.msh");

/// Two-hole rectangle `(0,2)x(0,1)`: left edge clamped, right edge simply supported,
/// everything else free.
pub fn holey() -> Mesh {
    load_mesh(HOLEY).expect("bundled mesh is valid")
}

/// Refinements of [`holey`] that give the start mesh of the `p = 2` refinement studies
/// (`h = sqrt(2) / 16`); four levels from there stay within a few GB for every family.
pub const STUDY_PREREFINEMENTS: usize = 2;

pub fn holey_study() -> Mesh {
    refine_uniform_times(&holey(), STUDY_PREREFINEMENTS)
}

/// Unit square, fully clamped.
pub fn square_clamped() -> Mesh {
    load_mesh(SQUARE_CLAMPED).expect("bundled mesh is valid")
}

/// Square annulus `(0,3)^2 \ [1,2]^2`, both boundaries clamped.
pub fn annulus_clamped() -> Mesh {
    load_mesh(ANNULUS_CLAMPED).expect("bundled mesh is valid")
}

/// Three-loop domain with alternating clamped, simply supported, and free runs.
pub fn fig1() -> Mesh {
    load_mesh(FIG1).expect("bundled mesh is valid")
}

/// Looks up a bundled mesh by name.
pub fn by_name(name: &str) -> Option<Mesh> {
    match name {
        "holey" => Some(holey()),
        "holey_study" => Some(holey_study()),
        "square" | "square_clamped" => Some(square_clamped()),
        "annulus" | "annulus_clamped" => Some(annulus_clamped()),
        "fig1" => Some(fig1()),
        _ => None,
    }
}
