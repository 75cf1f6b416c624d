//! Numerical toolkit for conformal condenser capacities, the conformal
//! capacitary metric of plane domains, capacitary boundary elements with
//! their realizations, and boundary traces of finite-Dirichlet-energy
//! functions.

pub mod boundary;
pub mod capacity;
pub mod capmetric;
pub mod error;
pub mod geometry;
pub mod maps;
pub mod rng;
pub mod scene;
pub mod sobolev;
pub mod solver;
pub mod suites;

pub use capacity::{
    condenser_capacity, set_capacity, CapacityEstimate, Condenser, PotentialField,
};
pub use capmetric::{rho, DistanceEstimate, MetricBudget, MetricConfig, MetricContext};
pub use error::{Error, Result};
pub use geometry::{
    build_mask, rasterize_curve, rasterize_plate, CellLabel, CellSet, DomainSpec, GridMask,
    PlatePrimitive, PlateRole, PlateSpec, Point, Polyline, Region, Segment,
};
