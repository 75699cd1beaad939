//! Cohomology operations on 4-dimensional cell models and toric orbifolds.

pub mod cellmodel;
pub mod charpair;
pub mod exactalg;
pub mod lensoracle;
pub mod properiso;
pub mod selfcheck;
