pub mod families;
pub mod psi;
pub mod quadrature;
pub mod scale;
pub mod spectrum;
pub mod tails;

pub use families::{
    age_intensity_mass, age_point_intensity, conjecture_scale_i, large_family_scale_ii,
    old_family_limit, old_family_scale, subsequence, subsequence_time, supercritical_clonal_scale,
    OldFamilyLimit, Subsequence,
};
pub use psi::{malthusian, psi, LaplaceExponent};
pub use quadrature::Quadrature;
pub use scale::{scale_w, scale_w_clonal, solve_renewal, ScaleFlavor, ScaleFunction};
pub use spectrum::{marginal_z, survival_probability, AnalyticModel};
pub use tails::{
    asymptotic_constants, critical_j_log, critical_tail_constant, tail_critical,
    tail_supercritical, AsymptoticConstants,
};
