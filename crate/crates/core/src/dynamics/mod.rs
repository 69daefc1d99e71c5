//! Trajectories, time averages, Poincaré sections and periodic orbits.

mod average;
mod integrate;
mod orbit;
mod section;

pub use average::{gauss_legendre, integral_with, time_average, time_average_with, DEFAULT_NODES};
pub use integrate::{
    integrate, integrate_fixed, integrate_with, IntegratorInfo, IntegratorOptions, StepStats, Trajectory,
};
pub use orbit::{
    canonical_symbols, close_return_seeds, find_periodic_orbit, lorenz_equilibria, return_map, same_cycle,
    shoot_from_seeds, symbol_of, PeriodicOrbit, ReturnMap, Seed, SeedOptions, SeededOrbit, ShootingOptions,
};
pub use section::{section_crossings, Crossing, CrossingDirection, SectionSpec};
