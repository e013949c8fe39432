//! A portable molecular-docking mini-engine.
//!
//! `dockette` docks a flexible ligand into a rigid receptor represented by
//! precomputed affinity grid maps. The search is a memetic (Lamarckian)
//! genetic algorithm: tournament selection, two-point crossover, per-gene
//! mutation, and Solis-Wets local search whose refinements are written back
//! into the genome. Many independent runs are launched and the best pose over
//! all runs wins.
//!
//! Everything is deterministic by construction: random draws come from a
//! stateless counter-based generator keyed by (seed, run, generation, unit,
//! draw), and every floating-point reduction uses a fixed chunked summation
//! order. As a result the two execution strategies ([`engine::Strategy`]),
//! any team size, and any number of concurrently executing runs all produce
//! bit-identical results.

pub mod engine;
pub mod model;
pub mod pose;
pub mod reduce;
pub mod scoring;
pub mod search;

/// A 3-D point or vector in Angstroms.
pub type Vec3 = [f64; 3];

pub(crate) mod vec3 {
    //! Small fixed-size vector helpers shared by the geometry and scoring code.

    use crate::Vec3;

    #[inline(always)]
    pub fn add(a: Vec3, b: Vec3) -> Vec3 {
        [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
    }

    #[inline(always)]
    pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
        [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
    }

    #[inline(always)]
    pub fn scale(a: Vec3, s: f64) -> Vec3 {
        [a[0] * s, a[1] * s, a[2] * s]
    }

    #[inline(always)]
    pub fn dot(a: Vec3, b: Vec3) -> f64 {
        a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
    }

    #[inline(always)]
    pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
        [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ]
    }

    #[inline(always)]
    pub fn norm(a: Vec3) -> f64 {
        dot(a, a).sqrt()
    }

    #[inline(always)]
    pub fn dist(a: Vec3, b: Vec3) -> f64 {
        norm(sub(a, b))
    }
}
