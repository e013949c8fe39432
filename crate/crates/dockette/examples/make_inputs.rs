//! Regenerates the bundled inputs under `data/`: three helical test ligands
//! (21, 43, and 108 atoms with 2, 15, and 31 rotatable bonds) and the shared
//! receptor grid they dock into.
//!
//! Everything is a closed-form function of the ligand sizes, so the files can
//! be rebuilt at any time:
//!
//! ```text
//! cargo run -p dockette --example make_inputs [out_dir]
//! ```
//!
//! The default `out_dir` is `data`, relative to the working directory (run
//! from the workspace root).

use std::collections::VecDeque;
use std::fs;
use std::path::Path;

use dockette::model::{self, Atom, GridMap, GridMaps, Ligand, Torsion};

/// Backbone atom types, cycled along the chain.
const TYPE_CYCLE: [&str; 17] = [
    "C", "N", "C", "C", "OA", "C", "A", "C", "NA", "C", "O", "C", "C", "N", "C", "C", "A",
];

/// Partial charge for a heavy-atom type.
fn heavy_charge(atom_type: &str) -> f64 {
    match atom_type {
        "C" => 0.05,
        "A" => 0.02,
        "N" => -0.35,
        "NA" => -0.30,
        "O" => -0.40,
        "OA" => -0.35,
        other => panic!("no charge rule for type {other}"),
    }
}

/// Hydrogens on donors are their own type.
fn hydrogen_kind(parent_type: &str) -> (&'static str, f64) {
    match parent_type {
        "N" | "NA" | "O" | "OA" => ("HD", 0.25),
        _ => ("H", 0.10),
    }
}

fn round_to(v: f64, decimals: i32) -> f64 {
    let scale = 10f64.powi(decimals);
    (v * scale).round() / scale
}

/// Build one helical ligand.
///
/// `nbackbone` heavy atoms sit on a helix; `total_h` hydrogens are spread
/// over them (earlier atoms get the remainder). `rotatable` lists backbone
/// ordinals `k` meaning the bond between backbone atoms `k` and `k + 1`
/// rotates; the moved set is everything on the far side of that bond,
/// including the far axis atom's hydrogens. The explicit pair list holds
/// every atom pair separated by 4 to 6 bonds.
fn build_ligand(nbackbone: usize, total_h: usize, rotatable: &[usize]) -> Ligand {
    // Hydrogen multiplicity per backbone atom.
    let base = total_h / nbackbone;
    let extra = total_h % nbackbone;
    let h_counts: Vec<usize> = (0..nbackbone).map(|k| base + usize::from(k < extra)).collect();

    // Lay atoms out backbone-first within each residue: heavy atom, then its
    // hydrogens.
    let mut atoms: Vec<Atom> = Vec::new();
    let mut backbone_at: Vec<usize> = Vec::with_capacity(nbackbone);
    let mut h_of: Vec<Vec<usize>> = vec![Vec::new(); nbackbone];
    let mut edges: Vec<(usize, usize)> = Vec::new();

    for k in 0..nbackbone {
        let angle = 0.7 * k as f64;
        let pos = [3.2 * angle.cos(), 3.2 * angle.sin(), 0.55 * k as f64];
        let atom_type = TYPE_CYCLE[k % TYPE_CYCLE.len()];
        let index = atoms.len();
        backbone_at.push(index);
        atoms.push(Atom {
            index,
            atom_type: atom_type.to_string(),
            charge: heavy_charge(atom_type),
            pos,
        });
        if k > 0 {
            edges.push((backbone_at[k - 1], index));
        }
        for j in 0..h_counts[k] {
            // Point each hydrogen in its own direction off the helix.
            let swing = angle + 2.1 * j as f64 + 1.3;
            let lift = 0.45 * (j as f64 - 0.5 * (h_counts[k] as f64 - 1.0));
            let dir = [swing.cos(), swing.sin(), lift];
            let norm = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
            let hpos = [
                pos[0] + 1.02 * dir[0] / norm,
                pos[1] + 1.02 * dir[1] / norm,
                pos[2] + 1.02 * dir[2] / norm,
            ];
            let (h_type, h_charge) = hydrogen_kind(atom_type);
            let h_index = atoms.len();
            h_of[k].push(h_index);
            atoms.push(Atom {
                index: h_index,
                atom_type: h_type.to_string(),
                charge: h_charge,
                pos: hpos,
            });
            edges.push((index, h_index));
        }
    }

    // Center the molecule on its centroid and keep the files tidy.
    let n = atoms.len() as f64;
    let mut centroid = [0.0; 3];
    for a in &atoms {
        for (c, p) in centroid.iter_mut().zip(a.pos) {
            *c += p / n;
        }
    }
    for a in &mut atoms {
        for (p, c) in a.pos.iter_mut().zip(centroid) {
            *p = round_to(*p - c, 4);
        }
    }

    // Torsions: bond k -- k+1 moves the far axis atom's hydrogens plus every
    // residue beyond it.
    let torsions: Vec<Torsion> = rotatable
        .iter()
        .map(|&k| {
            let mut moved: Vec<usize> = h_of[k + 1].clone();
            for far in k + 2..nbackbone {
                moved.push(backbone_at[far]);
                moved.extend(&h_of[far]);
            }
            moved.sort_unstable();
            Torsion { axis_a: backbone_at[k], axis_b: backbone_at[k + 1], moved }
        })
        .collect();

    // Pair list: graph distance (in bonds) between 4 and 6.
    let natoms = atoms.len();
    let mut adjacency = vec![Vec::new(); natoms];
    for &(a, b) in &edges {
        adjacency[a].push(b);
        adjacency[b].push(a);
    }
    let mut intra_pairs = Vec::new();
    for start in 0..natoms {
        let mut dist = vec![usize::MAX; natoms];
        dist[start] = 0;
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            if dist[u] >= 6 {
                continue;
            }
            for &v in &adjacency[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        for (other, &d) in dist.iter().enumerate() {
            if other > start && (4..=6).contains(&d) {
                intra_pairs.push((start, other));
            }
        }
    }

    Ligand { atoms, torsions, intra_pairs }
}

/// Build the shared receptor grid: one Gaussian well per atom type over a
/// shallow confining bowl, a z-graded electrostatic map, and a smooth
/// desolvation map. 25^3 nodes at 1 A spacing centered on the origin.
fn build_grid() -> GridMaps {
    let n = 25usize;
    let spacing = 1.0;
    let origin = [-12.0, -12.0, -12.0];
    // (type, well center, well depth)
    let wells: [(&str, [f64; 3], f64); 8] = [
        ("C", [2.0, 1.0, -1.0], 0.35),
        ("A", [-2.0, 2.0, 0.0], 0.30),
        ("N", [1.0, -2.0, 1.0], 0.45),
        ("NA", [-1.0, -1.0, 2.0], 0.50),
        ("O", [0.0, 2.0, -2.0], 0.55),
        ("OA", [2.0, -1.0, 2.0], 0.60),
        ("H", [-2.0, 0.0, -1.0], 0.15),
        ("HD", [1.0, 1.0, 1.0], 0.25),
    ];

    let node = |i: usize, axis: usize| origin[axis] + spacing * i as f64;
    let mut maps = Vec::new();
    for (name, center, depth) in wells {
        let mut values = Vec::with_capacity(n * n * n);
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    let p = [node(i, 0), node(j, 1), node(k, 2)];
                    let d2: f64 =
                        p.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                    let r2: f64 = p.iter().map(|a| a * a).sum();
                    let well = -depth * (-d2 / (2.0 * 4.5 * 4.5)).exp();
                    values.push(round_to(well + 0.004 * r2, 5));
                }
            }
        }
        maps.push(GridMap { name: name.to_string(), values });
    }

    let mut elec = Vec::with_capacity(n * n * n);
    let mut desolv = Vec::with_capacity(n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let p = [node(i, 0), node(j, 1), node(k, 2)];
                let r2: f64 = p.iter().map(|a| a * a).sum();
                elec.push(round_to(0.12 * p[2] * (-r2 / 72.0).exp(), 5));
                desolv.push(round_to(0.05 + 0.03 * (-r2 / 50.0).exp(), 5));
            }
        }
    }
    maps.push(GridMap { name: "E".to_string(), values: elec });
    maps.push(GridMap { name: "D".to_string(), values: desolv });

    GridMaps { nx: n, ny: n, nz: n, spacing, origin, maps }
}

fn main() {
    let out_dir = std::env::args().nth(1).unwrap_or_else(|| "data".to_string());
    let out = Path::new(&out_dir);
    fs::create_dir_all(out).expect("create output directory");

    let small = build_ligand(8, 13, &[2, 5]);
    let medium = build_ligand(17, 26, &(1..=15).collect::<Vec<_>>());
    let large = build_ligand(33, 75, &(1..=31).collect::<Vec<_>>());

    for (name, ligand, atoms, torsions) in [
        ("small", &small, 21, 2),
        ("medium", &medium, 43, 15),
        ("large", &large, 108, 31),
    ] {
        assert_eq!(ligand.natoms(), atoms, "{name} atom count");
        assert_eq!(ligand.ntorsions(), torsions, "{name} torsion count");
        let text = model::serialize_ligand(ligand);
        // The files must parse back to the exact same structure.
        let reparsed = model::parse_ligand(&text).expect("generated ligand parses");
        assert_eq!(&reparsed, ligand, "{name} round-trip");
        let path = out.join(format!("{name}.lig"));
        fs::write(&path, text).expect("write ligand");
        println!(
            "{}: {} atoms, {} torsions, {} pairs",
            path.display(),
            ligand.natoms(),
            ligand.ntorsions(),
            ligand.intra_pairs.len()
        );
    }

    let grid = build_grid();
    let text = model::serialize_grid(&grid);
    let reparsed = model::parse_grid(&text).expect("generated grid parses");
    assert_eq!(reparsed, grid, "grid round-trip");
    let path = out.join("receptor.grd");
    fs::write(&path, text).expect("write grid");
    println!(
        "{}: {}x{}x{} nodes, {} maps",
        path.display(),
        grid.nx,
        grid.ny,
        grid.nz,
        grid.maps.len()
    );
}
