//! Pose construction: genotype representation and the rotation kernel that
//! turns a genotype into atom coordinates.
//!
//! A pose is built in three stages, in this order:
//!
//! 1. torsion rotations, applied in ligand file order, each about the axis
//!    defined by the *current* (partially rotated) positions of its two axis
//!    atoms;
//! 2. one rigid rotation of the whole ligand about the centroid of the
//!    post-torsion coordinates;
//! 3. one rigid translation.
//!
//! All angles are radians; genes are stored unnormalized and interpreted
//! modulo 2π by the trigonometry.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Ligand, Torsion};
use crate::vec3;
use crate::{reduce, Vec3};

/// Gene vector for one pose: 3 translation genes (Angstroms), 3 orientation
/// genes, and one angle per rotatable bond.
///
/// The orientation genes are `[phi, theta, alpha]`: `phi`/`theta` are the
/// azimuth and polar angles of the rotation axis and `alpha` the rotation
/// angle about it. The flattened gene order used by crossover, mutation and
/// local search is translation, orientation, torsions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Genotype {
    pub translation: [f64; 3],
    pub orientation: [f64; 3],
    pub torsions: Vec<f64>,
}

impl Genotype {
    /// Number of genes: 6 + number of torsions.
    pub fn dim(&self) -> usize {
        6 + self.torsions.len()
    }

    /// Flattened gene accessor.
    pub fn gene(&self, i: usize) -> f64 {
        match i {
            0..=2 => self.translation[i],
            3..=5 => self.orientation[i - 3],
            _ => self.torsions[i - 6],
        }
    }

    /// Flattened gene mutator.
    pub fn set_gene(&mut self, i: usize, value: f64) {
        match i {
            0..=2 => self.translation[i] = value,
            3..=5 => self.orientation[i - 3] = value,
            _ => self.torsions[i - 6] = value,
        }
    }

    /// Whether gene `i` is an angle (orientation or torsion) rather than a
    /// translation component.
    pub fn is_angle_gene(&self, i: usize) -> bool {
        i >= 3
    }

    /// An all-zero genotype with `ntorsions` torsion genes (the identity
    /// pose: reference coordinates untouched).
    pub fn zeros(ntorsions: usize) -> Self {
        Genotype { translation: [0.0; 3], orientation: [0.0; 3], torsions: vec![0.0; ntorsions] }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PoseError {
    #[error("rotation axis must be unit length, |axis| = {norm}")]
    NonUnitAxis { norm: f64 },
    #[error("genotype carries {got} torsion genes but the ligand has {expected} torsions")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Tolerance on |axis| - 1 accepted by [`axis_angle_rotate`].
pub const UNIT_AXIS_TOL: f64 = 1e-12;

/// Rodrigues rotation of `p - origin` about the unit axis `k` by `angle`,
/// re-anchored at `origin`. The single rotation primitive behind every
/// rotation in the engine.
#[inline]
fn rotate_point(p: Vec3, origin: Vec3, k: Vec3, cos_a: f64, sin_a: f64) -> Vec3 {
    let rel = vec3::sub(p, origin);
    let kxr = vec3::cross(k, rel);
    let kdr = vec3::dot(k, rel);
    let rot = vec3::add(
        vec3::add(vec3::scale(rel, cos_a), vec3::scale(kxr, sin_a)),
        vec3::scale(k, kdr * (1.0 - cos_a)),
    );
    vec3::add(origin, rot)
}

/// Rotate `points` in place about the axis through `origin` with unit
/// direction `axis` by `angle` radians (right-hand rule).
///
/// Fails if `axis` is not unit length to within [`UNIT_AXIS_TOL`].
pub fn axis_angle_rotate(
    points: &mut [Vec3],
    origin: Vec3,
    axis: Vec3,
    angle: f64,
) -> Result<(), PoseError> {
    let norm = vec3::norm(axis);
    if (norm - 1.0).abs() > UNIT_AXIS_TOL {
        return Err(PoseError::NonUnitAxis { norm });
    }
    let (sin_a, cos_a) = angle.sin_cos();
    for p in points.iter_mut() {
        *p = rotate_point(*p, origin, axis, cos_a, sin_a);
    }
    Ok(())
}

/// Apply one torsion rotation in place: rotate `torsion.moved` about the axis
/// through the current positions of the axis atoms by `angle`.
///
/// A degenerate axis (coincident axis atoms) leaves the coordinates
/// untouched; valid ligands never produce one because torsion rotations
/// preserve the axis-atom distance.
pub fn apply_torsion(coords: &mut [Vec3], torsion: &Torsion, angle: f64) {
    let origin = coords[torsion.axis_a];
    let axis_vec = vec3::sub(coords[torsion.axis_b], origin);
    let norm = vec3::norm(axis_vec);
    if norm < UNIT_AXIS_TOL {
        return;
    }
    let k = vec3::scale(axis_vec, 1.0 / norm);
    let (sin_a, cos_a) = angle.sin_cos();
    for &i in &torsion.moved {
        coords[i] = rotate_point(coords[i], origin, k, cos_a, sin_a);
    }
}

/// Centroid of `coords`, each component summed in the fixed chunked order so
/// every execution path computes bit-identical rigid rotations.
pub fn centroid(coords: &[Vec3]) -> Vec3 {
    let n = coords.len();
    debug_assert!(n > 0, "centroid of an empty coordinate set");
    let inv = 1.0 / n as f64;
    [
        reduce::chunked_sum_by(n, |i| coords[i][0]) * inv,
        reduce::chunked_sum_by(n, |i| coords[i][1]) * inv,
        reduce::chunked_sum_by(n, |i| coords[i][2]) * inv,
    ]
}

/// Build the atom coordinates for `genotype`: ordered torsion rotations, then
/// a rigid rotation about the centroid of the post-torsion coordinates, then
/// the translation.
///
/// Pure and deterministic: identical inputs give bit-identical outputs.
pub fn build_pose(ligand: &Ligand, genotype: &Genotype) -> Result<Vec<Vec3>, PoseError> {
    if genotype.torsions.len() != ligand.torsions.len() {
        return Err(PoseError::DimensionMismatch {
            expected: ligand.torsions.len(),
            got: genotype.torsions.len(),
        });
    }

    let mut coords = ligand.reference_coords();
    for (torsion, &angle) in ligand.torsions.iter().zip(&genotype.torsions) {
        apply_torsion(&mut coords, torsion, angle);
    }

    let [phi, theta, alpha] = genotype.orientation;
    let (sin_t, cos_t) = theta.sin_cos();
    let (sin_p, cos_p) = phi.sin_cos();
    let axis = [sin_t * cos_p, sin_t * sin_p, cos_t];
    let center = centroid(&coords);
    axis_angle_rotate(&mut coords, center, axis, alpha)?;

    for p in coords.iter_mut() {
        *p = vec3::add(*p, genotype.translation);
    }
    Ok(coords)
}
