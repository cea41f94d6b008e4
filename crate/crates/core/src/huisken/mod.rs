//! Huisken's change of variables and the Gaussian-area functionals.

mod energy;
mod gauge;

pub use energy::{
    check_e_relation, dissipation, e_cylinder, e_sphere, energy_e, energy_etilde,
    gaussian_density, model_energy, rescaled_density, EnergyReport, DIM, E_PLANE,
    TRUNCATION_RADIUS,
};
pub use gauge::GaugeMap;
