//! Energy model: grid-interpolated ligand-receptor terms plus analytic
//! intramolecular terms.
//!
//! The intermolecular contribution of each atom inside the grid box is
//! `type_map + q * elec_map + |q| * desolv_map` (trilinear interpolation,
//! evaluated left to right); an atom outside the box contributes
//! `100000 * (1 + d)` where `d` is its distance to the box. The
//! intramolecular energy sums, over the ligand's explicit pair list,
//! a 12-6 Lennard-Jones term (or a 12-10 term for hydrogen-bonding pairs),
//! a distance-dependent-dielectric Coulomb term, and a Gaussian desolvation
//! term. A pose is always scored whole by one worker: terms accumulate in
//! plain index order and `total = inter + intra` as a single final addition,
//! so every execution path reproduces the same bits as a straight-line
//! serial evaluation.

use std::sync::Arc;

use thiserror::Error;

use crate::model::{GridMaps, Ligand, ParamTable, TypeParams};
use crate::{vec3, Vec3};

/// Coulomb prefactor for charges in electrons and distances in Angstroms.
pub const ELEC_SCALE: f64 = 332.06363;

/// Gaussian width (Angstroms) of the desolvation term.
pub const DESOLV_SIGMA: f64 = 3.6;

/// Pair distances are clamped below to this value (Angstroms) so overlapping
/// atoms produce large finite energies instead of infinities.
pub const MIN_PAIR_DISTANCE: f64 = 0.01;

/// Scale of the out-of-box penalty: an atom at distance `d` outside the grid
/// contributes `OUT_OF_BOX_PENALTY * (1 + d)`.
pub const OUT_OF_BOX_PENALTY: f64 = 100_000.0;

const INV_TWO_SIGMA_SQ: f64 = 1.0 / (2.0 * DESOLV_SIGMA * DESOLV_SIGMA);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScoreError {
    #[error("grid has no map for atom type {0}")]
    MissingTypeMap(String),
    #[error("parameter table has no entry for atom type {0}")]
    UnknownAtomType(String),
}

/// Resolved parameters for one interacting atom pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairParams {
    /// Equilibrium distance: arithmetic mean rule `r_i + r_j`.
    pub r_eq: f64,
    /// Well depth: geometric mean rule `sqrt(eps_i * eps_j)`.
    pub eps: f64,
    /// Whether the pair interacts through the 12-10 hydrogen-bond form.
    pub hbond: bool,
    /// Desolvation coefficient `S_i * V_j + S_j * V_i`.
    pub solv: f64,
}

/// Combine two per-type parameter sets into pair parameters.
pub fn pair_params(a: &TypeParams, b: &TypeParams) -> PairParams {
    PairParams {
        r_eq: a.r_eq + b.r_eq,
        eps: (a.eps * b.eps).sqrt(),
        hbond: a.hbond && b.hbond,
        solv: a.solpar * b.volume + b.solpar * a.volume,
    }
}

/// Energy components of one pose. `total` is always `inter + intra` as a
/// single addition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown {
    pub inter: f64,
    pub intra: f64,
    pub total: f64,
}

/// Trilinear interpolation of map `map` at `p`, which must lie inside the
/// grid bounding box. Exact at grid nodes and linear along each axis.
pub fn trilinear(grids: &GridMaps, map: usize, p: Vec3) -> f64 {
    debug_assert!(grids.in_box(p), "trilinear probe outside the grid box: {p:?}");
    let gx = (p[0] - grids.origin[0]) / grids.spacing;
    let gy = (p[1] - grids.origin[1]) / grids.spacing;
    let gz = (p[2] - grids.origin[2]) / grids.spacing;
    let i = (gx.floor() as isize).clamp(0, grids.nx as isize - 2) as usize;
    let j = (gy.floor() as isize).clamp(0, grids.ny as isize - 2) as usize;
    let k = (gz.floor() as isize).clamp(0, grids.nz as isize - 2) as usize;
    let fx = gx - i as f64;
    let fy = gy - j as f64;
    let fz = gz - k as f64;
    let wx = [1.0 - fx, fx];
    let wy = [1.0 - fy, fy];
    let wz = [1.0 - fz, fz];
    let mut acc = 0.0;
    for dk in 0..2 {
        for dj in 0..2 {
            for di in 0..2 {
                acc += wx[di] * wy[dj] * wz[dk] * grids.value_at(map, i + di, j + dj, k + dk);
            }
        }
    }
    acc
}

/// A ligand/grid pair prepared for repeated scoring: atom types resolved to
/// map indices and the pair list resolved to [`PairParams`] once, up front.
#[derive(Debug, Clone)]
pub struct Scorer {
    grids: Arc<GridMaps>,
    charges: Vec<f64>,
    atom_map: Vec<usize>,
    elec_map: usize,
    desolv_map: usize,
    pairs: Vec<(usize, usize, PairParams)>,
}

impl Scorer {
    pub fn new(ligand: &Ligand, grids: Arc<GridMaps>, table: &ParamTable) -> Result<Self, ScoreError> {
        let mut atom_map = Vec::with_capacity(ligand.natoms());
        let mut charges = Vec::with_capacity(ligand.natoms());
        for atom in &ligand.atoms {
            let idx = grids
                .map_index(&atom.atom_type)
                .ok_or_else(|| ScoreError::MissingTypeMap(atom.atom_type.clone()))?;
            atom_map.push(idx);
            charges.push(atom.charge);
        }
        let mut pairs = Vec::with_capacity(ligand.intra_pairs.len());
        for &(i, j) in &ligand.intra_pairs {
            let pa = type_params(table, &ligand.atoms[i].atom_type)?;
            let pb = type_params(table, &ligand.atoms[j].atom_type)?;
            pairs.push((i, j, pair_params(pa, pb)));
        }
        let elec_map = grids.elec_index();
        let desolv_map = grids.desolv_index();
        Ok(Scorer { grids, charges, atom_map, elec_map, desolv_map, pairs })
    }

    pub fn natoms(&self) -> usize {
        self.charges.len()
    }

    /// Contribution of atom `i` at position `p`.
    #[inline]
    fn atom_term(&self, i: usize, p: Vec3) -> f64 {
        if !self.grids.in_box(p) {
            return OUT_OF_BOX_PENALTY * (1.0 + self.grids.distance_outside(p));
        }
        let q = self.charges[i];
        trilinear(&self.grids, self.atom_map[i], p)
            + q * trilinear(&self.grids, self.elec_map, p)
            + q.abs() * trilinear(&self.grids, self.desolv_map, p)
    }

    /// Contribution of prepared pair `p` under `coords`.
    #[inline]
    fn pair_term(&self, p: usize, coords: &[Vec3]) -> f64 {
        let (i, j, params) = self.pairs[p];
        pair_energy(&params, self.charges[i], self.charges[j], vec3::dist(coords[i], coords[j]))
    }

    /// Ligand-receptor energy of the pose `coords`.
    ///
    /// A pose is always scored whole by a single worker, so the atom terms
    /// accumulate in plain index order; the result is the straight-line
    /// serial sum no matter which backend asked for it.
    pub fn intermolecular(&self, coords: &[Vec3]) -> f64 {
        debug_assert_eq!(coords.len(), self.natoms());
        let mut acc = 0.0;
        for i in 0..coords.len() {
            acc += self.atom_term(i, coords[i]);
        }
        acc
    }

    /// Internal ligand energy of the pose `coords`, pair terms accumulated in
    /// pair-list order.
    pub fn intramolecular(&self, coords: &[Vec3]) -> f64 {
        let mut acc = 0.0;
        for p in 0..self.pairs.len() {
            acc += self.pair_term(p, coords);
        }
        acc
    }

    /// Full energy breakdown of the pose `coords`.
    pub fn energy(&self, coords: &[Vec3]) -> EnergyBreakdown {
        let inter = self.intermolecular(coords);
        let intra = self.intramolecular(coords);
        EnergyBreakdown { inter, intra, total: inter + intra }
    }
}

fn type_params<'t>(table: &'t ParamTable, token: &str) -> Result<&'t TypeParams, ScoreError> {
    table.get(token).ok_or_else(|| ScoreError::UnknownAtomType(token.to_string()))
}

/// Analytic energy of one pair at center distance `r_raw` (before clamping).
#[inline]
pub fn pair_energy(params: &PairParams, qi: f64, qj: f64, r_raw: f64) -> f64 {
    let r = r_raw.max(MIN_PAIR_DISTANCE);
    let x = params.r_eq / r;
    let vdw = if params.hbond {
        let x10 = x.powi(10);
        let x12 = x.powi(12);
        params.eps * (5.0 * x12 - 6.0 * x10)
    } else {
        let x6 = x.powi(6);
        let x12 = x.powi(12);
        params.eps * (x12 - 2.0 * x6)
    };
    let elec = ELEC_SCALE * qi * qj / (4.0 * r * r);
    let solv = params.solv * (-(r * r) * INV_TWO_SIGMA_SQ).exp();
    (vdw + elec) + solv
}

/// Ligand-receptor energy of `coords` against `grids`.
///
/// Convenience wrapper over [`Scorer`]; engine code prepares a scorer once
/// instead.
pub fn intermolecular_energy(
    grids: &GridMaps,
    ligand: &Ligand,
    coords: &[Vec3],
) -> Result<f64, ScoreError> {
    let scorer = Scorer::new(ligand, Arc::new(grids.clone()), &ParamTable::builtin())?;
    Ok(scorer.intermolecular(coords))
}

/// Internal ligand energy of `coords` over the ligand's explicit pair list.
pub fn intramolecular_energy(
    ligand: &Ligand,
    table: &ParamTable,
    coords: &[Vec3],
) -> Result<f64, ScoreError> {
    // The grid is irrelevant to the intramolecular term; score against a
    // minimal dummy so the prepared-pair path is the single implementation.
    let dummy = dummy_grid(ligand);
    let scorer = Scorer::new(ligand, Arc::new(dummy), table)?;
    Ok(scorer.intramolecular(coords))
}

/// Full energy of `coords`: intermolecular against `grids` plus
/// intramolecular over the pair list, combined as one final addition.
pub fn total_energy(
    grids: &GridMaps,
    ligand: &Ligand,
    table: &ParamTable,
    coords: &[Vec3],
) -> Result<EnergyBreakdown, ScoreError> {
    let scorer = Scorer::new(ligand, Arc::new(grids.clone()), table)?;
    Ok(scorer.energy(coords))
}

/// Smallest grid that can host `ligand`'s atom types (all-zero maps).
fn dummy_grid(ligand: &Ligand) -> GridMaps {
    use crate::model::GridMap;
    let mut names: Vec<String> = Vec::new();
    for a in &ligand.atoms {
        if !names.contains(&a.atom_type) {
            names.push(a.atom_type.clone());
        }
    }
    names.push("E".to_string());
    names.push("D".to_string());
    GridMaps {
        nx: 2,
        ny: 2,
        nz: 2,
        spacing: 1.0,
        origin: [0.0; 3],
        maps: names.into_iter().map(|name| GridMap { name, values: vec![0.0; 8] }).collect(),
    }
}
