//! Input/output model: ligand and grid-map file formats, the built-in atom
//! parameter table, and docking-result serialization.
//!
//! Both text formats are UTF-8 and whitespace-delimited; `#` starts a comment
//! that runs to the end of the line. Parse errors always carry the 1-based
//! line number they were detected on.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pose::Genotype;
use crate::Vec3;

/// Parse failure with the 1-based line it was detected on.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub msg: String,
}

impl ParseError {
    fn new(line: usize, msg: impl Into<String>) -> Self {
        ParseError { line, msg: msg.into() }
    }
}

/// One ligand atom: a stable index, a type token from the parameter table,
/// a partial charge, and reference coordinates in Angstroms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub index: usize,
    pub atom_type: String,
    pub charge: f64,
    pub pos: Vec3,
}

/// A rotatable bond: the rotation axis runs from atom `axis_a` to `axis_b`,
/// and the genes rotate exactly the atoms in `moved` (which never includes
/// the axis atoms). Torsions are stored in file order, root to leaf.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Torsion {
    pub axis_a: usize,
    pub axis_b: usize,
    pub moved: Vec<usize>,
}

/// A flexible ligand plus the explicit intramolecular pair list used by the
/// internal-energy term. The pair list comes verbatim from the input file;
/// the engine applies no bond-graph exclusion rules of its own.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ligand {
    pub atoms: Vec<Atom>,
    pub torsions: Vec<Torsion>,
    pub intra_pairs: Vec<(usize, usize)>,
}

impl Ligand {
    pub fn natoms(&self) -> usize {
        self.atoms.len()
    }

    pub fn ntorsions(&self) -> usize {
        self.torsions.len()
    }

    /// Reference coordinates in atom-index order.
    pub fn reference_coords(&self) -> Vec<Vec3> {
        self.atoms.iter().map(|a| a.pos).collect()
    }
}

/// Per-type force-field parameters.
///
/// `r_eq` is half the equilibrium pair distance for a homogeneous pair (so
/// the pair rule is an arithmetic mean), `eps` the well depth, `solpar`/`volume`
/// the desolvation parameters, and `hbond` marks hydrogen-bond capability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TypeParams {
    pub r_eq: f64,
    pub eps: f64,
    pub solpar: f64,
    pub volume: f64,
    pub hbond: bool,
}

/// The atom parameter table: built-in defaults for the eight supported type
/// tokens, optionally overridden or extended by a parameters file.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamTable {
    entries: BTreeMap<String, TypeParams>,
}

impl ParamTable {
    /// The built-in table. Values follow common docking force-field
    /// conventions; the engine treats them as opaque declared data.
    pub fn builtin() -> Self {
        let mut entries = BTreeMap::new();
        let mut put = |token: &str, r_eq: f64, eps: f64, solpar: f64, volume: f64, hbond: bool| {
            entries.insert(token.to_string(), TypeParams { r_eq, eps, solpar, volume, hbond });
        };
        put("C", 2.00, 0.150, -0.00143, 33.5103, false);
        put("A", 2.00, 0.150, -0.00052, 33.5103, false);
        put("N", 1.75, 0.160, -0.00162, 22.4493, false);
        put("NA", 1.75, 0.160, -0.00162, 22.4493, true);
        put("O", 1.60, 0.200, -0.00251, 17.1573, false);
        put("OA", 1.60, 0.200, -0.00251, 17.1573, true);
        put("H", 1.00, 0.020, 0.00051, 0.0, false);
        put("HD", 1.00, 0.020, 0.00051, 0.0, true);
        ParamTable { entries }
    }

    pub fn get(&self, token: &str) -> Option<&TypeParams> {
        self.entries.get(token)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.entries.contains_key(token)
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Parse a parameters file and apply it on top of this table. Each
    /// non-comment line reads `TYPE <token> <r_eq> <eps> <solpar> <volume>
    /// <hbond 0|1>` and replaces or adds one entry.
    pub fn with_overrides(&self, text: &str) -> Result<ParamTable, ParseError> {
        let mut table = self.clone();
        for (line_no, tokens) in content_lines(text) {
            if tokens[0] != "TYPE" {
                return Err(ParseError::new(line_no, format!("expected TYPE, found {}", tokens[0])));
            }
            if tokens.len() != 7 {
                return Err(ParseError::new(
                    line_no,
                    format!("TYPE takes 6 fields, found {}", tokens.len() - 1),
                ));
            }
            let token = tokens[1].to_string();
            let r_eq = parse_f64(tokens[2], line_no, "r_eq")?;
            let eps = parse_f64(tokens[3], line_no, "eps")?;
            let solpar = parse_f64(tokens[4], line_no, "solpar")?;
            let volume = parse_f64(tokens[5], line_no, "volume")?;
            if r_eq <= 0.0 {
                return Err(ParseError::new(line_no, "r_eq must be positive"));
            }
            if eps < 0.0 {
                return Err(ParseError::new(line_no, "eps must be non-negative"));
            }
            let hbond = match tokens[6] {
                "0" => false,
                "1" => true,
                other => {
                    return Err(ParseError::new(line_no, format!("hbond flag must be 0 or 1, found {other}")))
                }
            };
            table.entries.insert(token, TypeParams { r_eq, eps, solpar, volume, hbond });
        }
        Ok(table)
    }
}

/// One affinity map: a name (an atom type token, or `E`/`D` for the
/// electrostatic and desolvation maps) and its node values in x-fastest
/// order: node (i, j, k) lives at offset `i + nx*(j + ny*k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMap {
    pub name: String,
    pub values: Vec<f64>,
}

/// A rectilinear grid of affinity maps over the receptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMaps {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub spacing: f64,
    pub origin: Vec3,
    /// Maps in declared order: the per-type maps, then `E`, then `D`.
    pub maps: Vec<GridMap>,
}

impl GridMaps {
    pub fn node_count(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    /// Index of the map named `name`, if present.
    pub fn map_index(&self, name: &str) -> Option<usize> {
        self.maps.iter().position(|m| m.name == name)
    }

    pub fn elec_index(&self) -> usize {
        self.map_index("E").expect("grid always carries an E map")
    }

    pub fn desolv_index(&self) -> usize {
        self.map_index("D").expect("grid always carries a D map")
    }

    /// Stored value of map `map` at node `(i, j, k)`.
    pub fn value_at(&self, map: usize, i: usize, j: usize, k: usize) -> f64 {
        debug_assert!(i < self.nx && j < self.ny && k < self.nz);
        self.maps[map].values[i + self.nx * (j + self.ny * k)]
    }

    /// Lower corner of the bounding box (the origin node).
    pub fn box_lo(&self) -> Vec3 {
        self.origin
    }

    /// Upper corner of the bounding box (the last node along each axis).
    pub fn box_hi(&self) -> Vec3 {
        [
            self.origin[0] + self.spacing * (self.nx - 1) as f64,
            self.origin[1] + self.spacing * (self.ny - 1) as f64,
            self.origin[2] + self.spacing * (self.nz - 1) as f64,
        ]
    }

    /// Whether `p` lies inside the closed bounding box.
    pub fn in_box(&self, p: Vec3) -> bool {
        let lo = self.box_lo();
        let hi = self.box_hi();
        (0..3).all(|k| p[k] >= lo[k] && p[k] <= hi[k])
    }

    /// Euclidean distance from `p` to the bounding box (0 inside).
    pub fn distance_outside(&self, p: Vec3) -> f64 {
        let lo = self.box_lo();
        let hi = self.box_hi();
        let mut d2 = 0.0;
        for k in 0..3 {
            let d = (lo[k] - p[k]).max(p[k] - hi[k]).max(0.0);
            d2 += d * d;
        }
        d2.sqrt()
    }
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

/// Split `text` into (1-based line number, tokens), dropping comments and
/// blank lines.
fn content_lines(text: &str) -> Vec<(usize, Vec<&str>)> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let stripped = match raw.find('#') {
            Some(at) => &raw[..at],
            None => raw,
        };
        let tokens: Vec<&str> = stripped.split_whitespace().collect();
        if !tokens.is_empty() {
            out.push((idx + 1, tokens));
        }
    }
    out
}

fn parse_f64(token: &str, line: usize, what: &str) -> Result<f64, ParseError> {
    let v: f64 = token
        .parse()
        .map_err(|_| ParseError::new(line, format!("{what} must be a real number, found {token}")))?;
    if !v.is_finite() {
        return Err(ParseError::new(line, format!("{what} must be finite, found {token}")));
    }
    Ok(v)
}

fn parse_usize(token: &str, line: usize, what: &str) -> Result<usize, ParseError> {
    token
        .parse()
        .map_err(|_| ParseError::new(line, format!("{what} must be a non-negative integer, found {token}")))
}

/// Cursor over content lines with end-of-file tracking for error messages.
struct Lines<'a> {
    lines: Vec<(usize, Vec<&'a str>)>,
    next: usize,
    last_line: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let lines = content_lines(text);
        let last_line = text.lines().count().max(1);
        Lines { lines, next: 0, last_line }
    }

    fn take(&mut self, expected: &str) -> Result<(usize, Vec<&'a str>), ParseError> {
        if self.next >= self.lines.len() {
            return Err(ParseError::new(
                self.last_line,
                format!("unexpected end of file, expected {expected}"),
            ));
        }
        let item = self.lines[self.next].clone();
        self.next += 1;
        Ok(item)
    }

    fn expect_done(&self) -> Result<(), ParseError> {
        if self.next < self.lines.len() {
            let (line, tokens) = &self.lines[self.next];
            return Err(ParseError::new(*line, format!("unexpected trailing content: {}", tokens[0])));
        }
        Ok(())
    }
}

/// Read one `<KEYWORD> <n>` count line.
fn take_count(lines: &mut Lines, keyword: &str) -> Result<usize, ParseError> {
    let (line_no, tokens) = lines.take(keyword)?;
    if tokens[0] != keyword {
        return Err(ParseError::new(line_no, format!("expected {keyword}, found {}", tokens[0])));
    }
    if tokens.len() != 2 {
        return Err(ParseError::new(line_no, format!("{keyword} takes exactly one count")));
    }
    parse_usize(tokens[1], line_no, "count")
}

/// Parse a ligand against the built-in parameter table.
pub fn parse_ligand(text: &str) -> Result<Ligand, ParseError> {
    parse_ligand_with(text, &ParamTable::builtin())
}

/// Parse a ligand, validating atom types against `table`.
pub fn parse_ligand_with(text: &str, table: &ParamTable) -> Result<Ligand, ParseError> {
    let mut lines = Lines::new(text);

    let natoms = take_count(&mut lines, "NATOMS")?;
    if natoms == 0 {
        return Err(ParseError::new(1, "atom count must be positive"));
    }

    let mut atoms = Vec::with_capacity(natoms);
    let mut seen = vec![false; natoms];
    for ordinal in 0..natoms {
        let (line_no, tokens) = lines.take("an ATOM line")?;
        if tokens[0] != "ATOM" {
            return Err(ParseError::new(line_no, format!("expected ATOM, found {}", tokens[0])));
        }
        if tokens.len() != 7 {
            return Err(ParseError::new(
                line_no,
                format!("ATOM takes 6 fields (index type charge x y z), found {}", tokens.len() - 1),
            ));
        }
        let index = parse_usize(tokens[1], line_no, "atom index")?;
        if index >= natoms {
            return Err(ParseError::new(
                line_no,
                format!("atom index out of range: {index} of {natoms}"),
            ));
        }
        if seen[index] {
            return Err(ParseError::new(line_no, format!("duplicate atom index {index}")));
        }
        if index != ordinal {
            return Err(ParseError::new(
                line_no,
                format!("atom indices must appear in order: expected {ordinal}, found {index}"),
            ));
        }
        seen[index] = true;
        let atom_type = tokens[2].to_string();
        if !table.contains(&atom_type) {
            return Err(ParseError::new(line_no, format!("unknown atom type {atom_type}")));
        }
        let charge = parse_f64(tokens[3], line_no, "charge")?;
        let x = parse_f64(tokens[4], line_no, "x")?;
        let y = parse_f64(tokens[5], line_no, "y")?;
        let z = parse_f64(tokens[6], line_no, "z")?;
        atoms.push(Atom { index, atom_type, charge, pos: [x, y, z] });
    }

    let ntors = take_count(&mut lines, "NTORS")?;
    let mut torsions = Vec::with_capacity(ntors);
    for _ in 0..ntors {
        let (line_no, tokens) = lines.take("a TORSION line")?;
        if tokens[0] != "TORSION" {
            return Err(ParseError::new(line_no, format!("expected TORSION, found {}", tokens[0])));
        }
        if tokens.len() < 4 {
            return Err(ParseError::new(line_no, "TORSION takes axis_a axis_b count [moved...]"));
        }
        let axis_a = parse_usize(tokens[1], line_no, "axis atom")?;
        let axis_b = parse_usize(tokens[2], line_no, "axis atom")?;
        if axis_a >= natoms || axis_b >= natoms {
            return Err(ParseError::new(line_no, "torsion axis index out of range"));
        }
        if axis_a == axis_b {
            return Err(ParseError::new(line_no, "torsion axis atoms must differ"));
        }
        let k = parse_usize(tokens[3], line_no, "moved-atom count")?;
        if tokens.len() != 4 + k {
            return Err(ParseError::new(
                line_no,
                format!("TORSION declares {k} moved atoms but lists {}", tokens.len() - 4),
            ));
        }
        let mut moved = Vec::with_capacity(k);
        for t in &tokens[4..] {
            let idx = parse_usize(t, line_no, "moved atom")?;
            if idx >= natoms {
                return Err(ParseError::new(line_no, format!("moved atom index out of range: {idx} of {natoms}")));
            }
            if idx == axis_a || idx == axis_b {
                return Err(ParseError::new(line_no, "moved set must exclude the axis atoms"));
            }
            if moved.contains(&idx) {
                return Err(ParseError::new(line_no, format!("duplicate moved atom {idx}")));
            }
            moved.push(idx);
        }
        torsions.push(Torsion { axis_a, axis_b, moved });
    }

    let npairs = take_count(&mut lines, "NPAIRS")?;
    let mut intra_pairs = Vec::with_capacity(npairs);
    for _ in 0..npairs {
        let (line_no, tokens) = lines.take("a PAIR line")?;
        if tokens[0] != "PAIR" {
            return Err(ParseError::new(line_no, format!("expected PAIR, found {}", tokens[0])));
        }
        if tokens.len() != 3 {
            return Err(ParseError::new(line_no, "PAIR takes exactly two atom indices"));
        }
        let i = parse_usize(tokens[1], line_no, "pair atom")?;
        let j = parse_usize(tokens[2], line_no, "pair atom")?;
        if i >= natoms || j >= natoms {
            return Err(ParseError::new(line_no, "pair atom index out of range"));
        }
        if i == j {
            return Err(ParseError::new(line_no, "pair atoms must differ"));
        }
        let key = (i.min(j), i.max(j));
        if intra_pairs.iter().any(|&(a, b)| (a, b) == key) {
            return Err(ParseError::new(line_no, format!("duplicate pair {i} {j}")));
        }
        intra_pairs.push(key);
    }

    lines.expect_done()?;
    Ok(Ligand { atoms, torsions, intra_pairs })
}

/// Render a ligand in the same format `parse_ligand` reads. Reals are written
/// in shortest round-trip form, so parse(serialize(lig)) == lig field-exactly.
pub fn serialize_ligand(ligand: &Ligand) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    writeln!(out, "NATOMS {}", ligand.atoms.len()).unwrap();
    for a in &ligand.atoms {
        writeln!(
            out,
            "ATOM {} {} {} {} {} {}",
            a.index, a.atom_type, a.charge, a.pos[0], a.pos[1], a.pos[2]
        )
        .unwrap();
    }
    writeln!(out, "NTORS {}", ligand.torsions.len()).unwrap();
    for t in &ligand.torsions {
        write!(out, "TORSION {} {} {}", t.axis_a, t.axis_b, t.moved.len()).unwrap();
        for m in &t.moved {
            write!(out, " {m}").unwrap();
        }
        out.push('\n');
    }
    writeln!(out, "NPAIRS {}", ligand.intra_pairs.len()).unwrap();
    for (i, j) in &ligand.intra_pairs {
        writeln!(out, "PAIR {i} {j}").unwrap();
    }
    out
}

/// Parse a grid-map file.
pub fn parse_grid(text: &str) -> Result<GridMaps, ParseError> {
    let mut lines = Lines::new(text);

    let (line_no, tokens) = lines.take("GRID")?;
    if tokens[0] != "GRID" || tokens.len() != 1 {
        return Err(ParseError::new(line_no, "file must start with a bare GRID line"));
    }

    let (line_no, tokens) = lines.take("DIM")?;
    if tokens[0] != "DIM" || tokens.len() != 4 {
        return Err(ParseError::new(line_no, "expected DIM nx ny nz"));
    }
    let nx = parse_usize(tokens[1], line_no, "nx")?;
    let ny = parse_usize(tokens[2], line_no, "ny")?;
    let nz = parse_usize(tokens[3], line_no, "nz")?;
    for (n, name) in [(nx, "nx"), (ny, "ny"), (nz, "nz")] {
        if n < 2 {
            return Err(ParseError::new(line_no, format!("grid dimension {name} must be at least 2")));
        }
    }

    let (line_no, tokens) = lines.take("SPACING")?;
    if tokens[0] != "SPACING" || tokens.len() != 2 {
        return Err(ParseError::new(line_no, "expected SPACING s"));
    }
    let spacing = parse_f64(tokens[1], line_no, "spacing")?;
    if spacing <= 0.0 {
        return Err(ParseError::new(line_no, "spacing must be positive"));
    }

    let (line_no, tokens) = lines.take("ORIGIN")?;
    if tokens[0] != "ORIGIN" || tokens.len() != 4 {
        return Err(ParseError::new(line_no, "expected ORIGIN ox oy oz"));
    }
    let origin = [
        parse_f64(tokens[1], line_no, "ox")?,
        parse_f64(tokens[2], line_no, "oy")?,
        parse_f64(tokens[3], line_no, "oz")?,
    ];

    let (maps_line, tokens) = lines.take("MAPS")?;
    if tokens[0] != "MAPS" || tokens.len() < 3 {
        return Err(ParseError::new(maps_line, "expected MAPS <types...> E D"));
    }
    let names: Vec<&str> = tokens[1..].to_vec();
    let n = names.len();
    if names[n - 2] != "E" || names[n - 1] != "D" {
        return Err(ParseError::new(maps_line, "MAPS line must end with E and D"));
    }
    for (i, name) in names.iter().enumerate() {
        if i < n - 2 && (*name == "E" || *name == "D") {
            return Err(ParseError::new(maps_line, "type map tokens E and D are reserved"));
        }
        if names[..i].contains(name) {
            return Err(ParseError::new(maps_line, format!("duplicate map {name}")));
        }
    }

    let nodes = nx * ny * nz;
    let expected = names.len() * nodes;
    let mut values = Vec::with_capacity(expected);
    let mut last_line = maps_line;
    while values.len() < expected {
        let (line_no, tokens) = lines.take("grid values").map_err(|_| {
            ParseError::new(
                last_line,
                format!("value count mismatch: expected {expected} values, found {}", values.len()),
            )
        })?;
        last_line = line_no;
        for t in tokens {
            if values.len() == expected {
                return Err(ParseError::new(
                    line_no,
                    format!("value count mismatch: more than {expected} values"),
                ));
            }
            values.push(parse_f64(t, line_no, "grid value")?);
        }
    }
    lines.expect_done().map_err(|e| {
        ParseError::new(e.line, format!("value count mismatch: more than {expected} values"))
    })?;

    let maps = names
        .iter()
        .enumerate()
        .map(|(m, name)| GridMap {
            name: name.to_string(),
            values: values[m * nodes..(m + 1) * nodes].to_vec(),
        })
        .collect();

    Ok(GridMaps { nx, ny, nz, spacing, origin, maps })
}

/// Render a grid in the same format `parse_grid` reads (one value per line).
pub fn serialize_grid(grids: &GridMaps) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    writeln!(out, "GRID").unwrap();
    writeln!(out, "DIM {} {} {}", grids.nx, grids.ny, grids.nz).unwrap();
    writeln!(out, "SPACING {}", grids.spacing).unwrap();
    writeln!(out, "ORIGIN {} {} {}", grids.origin[0], grids.origin[1], grids.origin[2]).unwrap();
    write!(out, "MAPS").unwrap();
    for m in &grids.maps {
        write!(out, " {}", m.name).unwrap();
    }
    out.push('\n');
    for m in &grids.maps {
        for v in &m.values {
            writeln!(out, "{v}").unwrap();
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

/// Outcome of one independent run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run_index: u32,
    pub final_best_energy: f64,
    pub total_evaluations: u64,
}

/// Final outcome of a docking invocation: the best pose over all runs plus
/// per-run summaries and per-kernel wall-clock totals (seconds).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DockingResult {
    pub best_energy: f64,
    pub best_genotype: Genotype,
    pub best_coordinates: Vec<Vec3>,
    pub per_run: Vec<RunSummary>,
    pub timings: BTreeMap<String, f64>,
}

/// Serialization format for [`write_result`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
}

/// Header of the CSV per-run table.
pub const RESULT_CSV_HEADER: &str = "run_index,final_best_energy,total_evaluations";

/// Serialize a docking result. JSON round-trips the full structure; CSV is
/// the per-run table only (one row per run, energies in shortest round-trip
/// form so they re-parse bit-exactly).
pub fn write_result(result: &DockingResult, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => {
            let mut text = serde_json::to_string_pretty(result).expect("result serializes");
            text.push('\n');
            text
        }
        OutputFormat::Csv => {
            use std::fmt::Write;
            let mut out = String::new();
            writeln!(out, "{RESULT_CSV_HEADER}").unwrap();
            for r in &result.per_run {
                writeln!(out, "{},{},{}", r.run_index, r.final_best_energy, r.total_evaluations).unwrap();
            }
            out
        }
    }
}

/// Parse a JSON docking result (inverse of the JSON side of [`write_result`]).
pub fn parse_result_json(text: &str) -> Result<DockingResult, serde_json::Error> {
    serde_json::from_str(text)
}

/// Parse the CSV per-run table written by [`write_result`].
pub fn parse_per_run_csv(text: &str) -> Result<Vec<RunSummary>, ParseError> {
    let mut rows = Vec::new();
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == RESULT_CSV_HEADER => {}
        Some((_, other)) => return Err(ParseError::new(1, format!("bad CSV header: {other}"))),
        None => return Err(ParseError::new(1, "empty CSV")),
    }
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let line_no = idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(ParseError::new(line_no, "per-run row takes 3 fields"));
        }
        rows.push(RunSummary {
            run_index: fields[0]
                .parse()
                .map_err(|_| ParseError::new(line_no, "run_index must be an integer"))?,
            final_best_energy: parse_f64(fields[1], line_no, "final_best_energy")?,
            total_evaluations: fields[2]
                .parse()
                .map_err(|_| ParseError::new(line_no, "total_evaluations must be an integer"))?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_ligand_text() -> &'static str {
        "# three atoms, one torsion\n\
         NATOMS 3\n\
         ATOM 0 C 0.1 0 0 0\n\
         ATOM 1 OA -0.3 1.5 0 0\n\
         ATOM 2 HD 0.2 2 1 0  # hydroxyl hydrogen\n\
         NTORS 1\n\
         TORSION 0 1 1 2\n\
         NPAIRS 1\n\
         PAIR 0 2\n"
    }

    fn tiny_grid_text() -> String {
        let mut text = String::from(
            "GRID\nDIM 2 2 2\nSPACING 0.5\nORIGIN -1 -1 -1\nMAPS C E D\n",
        );
        for v in 0..24 {
            text.push_str(&format!("{}\n", v as f64 * 0.25));
        }
        text
    }

    #[test]
    fn parses_tiny_ligand() {
        let lig = parse_ligand(tiny_ligand_text()).expect("tiny ligand parses");
        assert_eq!(lig.natoms(), 3);
        assert_eq!(lig.ntorsions(), 1);
        assert_eq!(lig.atoms[1].atom_type, "OA");
        assert_eq!(lig.atoms[2].pos, [2.0, 1.0, 0.0]);
        assert_eq!(lig.torsions[0].moved, vec![2]);
        assert_eq!(lig.intra_pairs, vec![(0, 2)]);
    }

    #[test]
    fn ligand_round_trip_is_field_exact() {
        let mut lig = parse_ligand(tiny_ligand_text()).unwrap();
        // Exercise shortest-roundtrip formatting on awkward reals.
        lig.atoms[0].charge = 0.1 + 0.2;
        lig.atoms[1].pos = [1.0 / 3.0, -2.5e-17, 1e300];
        let text = serialize_ligand(&lig);
        let back = parse_ligand(&text).expect("serialized ligand re-parses");
        assert_eq!(back, lig, "round trip must preserve every field exactly");
    }

    #[test]
    fn rejects_out_of_range_atom_index_with_line_number() {
        let text = "NATOMS 2\nATOM 0 C 0 0 0 0\nATOM 5 C 0 1 0 0\nNTORS 0\nNPAIRS 0\n";
        let err = parse_ligand(text).unwrap_err();
        assert_eq!(err.line, 3);
        assert!(err.msg.contains("out of range"), "got: {}", err.msg);
    }

    #[test]
    fn rejects_unknown_atom_type() {
        let text = "NATOMS 1\nATOM 0 XX 0 0 0 0\nNTORS 0\nNPAIRS 0\n";
        let err = parse_ligand(text).unwrap_err();
        assert_eq!(err.line, 2);
        assert!(err.msg.contains("unknown atom type"), "got: {}", err.msg);
    }

    #[test]
    fn rejects_axis_atom_in_moved_set() {
        let text = "NATOMS 3\nATOM 0 C 0 0 0 0\nATOM 1 C 0 1 0 0\nATOM 2 C 0 2 0 0\n\
                    NTORS 1\nTORSION 0 1 1 1\nNPAIRS 0\n";
        let err = parse_ligand(text).unwrap_err();
        assert_eq!(err.line, 6);
        assert!(err.msg.contains("exclude the axis atoms"), "got: {}", err.msg);
    }

    #[test]
    fn rejects_truncated_file() {
        let text = "NATOMS 2\nATOM 0 C 0 0 0 0\n";
        let err = parse_ligand(text).unwrap_err();
        assert!(err.msg.contains("unexpected end of file"), "got: {}", err.msg);
    }

    #[test]
    fn rejects_duplicate_pair() {
        let text = "NATOMS 2\nATOM 0 C 0 0 0 0\nATOM 1 C 0 1 0 0\n\
                    NTORS 0\nNPAIRS 2\nPAIR 0 1\nPAIR 1 0\n";
        let err = parse_ligand(text).unwrap_err();
        assert_eq!(err.line, 7);
        assert!(err.msg.contains("duplicate pair"), "got: {}", err.msg);
    }

    #[test]
    fn parses_tiny_grid_in_declared_order() {
        let grid = parse_grid(&tiny_grid_text()).expect("tiny grid parses");
        assert_eq!((grid.nx, grid.ny, grid.nz), (2, 2, 2));
        assert_eq!(grid.maps.len(), 3);
        assert_eq!(grid.maps[0].name, "C");
        assert_eq!(grid.elec_index(), 1);
        assert_eq!(grid.desolv_index(), 2);
        // x-fastest storage: node (1, 0, 1) of map 0 is entry 1 + 2*(0 + 2*1) = 5.
        assert_eq!(grid.value_at(0, 1, 0, 1), 5.0 * 0.25);
    }

    #[test]
    fn grid_node_lookup_matches_file_offset_for_every_node() {
        let grid = parse_grid(&tiny_grid_text()).unwrap();
        for m in 0..grid.maps.len() {
            for k in 0..grid.nz {
                for j in 0..grid.ny {
                    for i in 0..grid.nx {
                        let offset = i + grid.nx * (j + grid.ny * k);
                        assert_eq!(grid.value_at(m, i, j, k), grid.maps[m].values[offset]);
                    }
                }
            }
        }
    }

    #[test]
    fn grid_round_trip_is_field_exact() {
        let grid = parse_grid(&tiny_grid_text()).unwrap();
        let back = parse_grid(&serialize_grid(&grid)).expect("serialized grid re-parses");
        assert_eq!(back, grid);
    }

    #[test]
    fn rejects_truncated_grid_values() {
        let text = tiny_grid_text();
        let cut = text.len() - 10;
        let err = parse_grid(&text[..cut]).unwrap_err();
        assert!(err.msg.contains("value count mismatch"), "got: {}", err.msg);
    }

    #[test]
    fn rejects_surplus_grid_values() {
        let mut text = tiny_grid_text();
        text.push_str("99.0\n");
        let err = parse_grid(&text).unwrap_err();
        assert!(err.msg.contains("value count mismatch"), "got: {}", err.msg);
    }

    #[test]
    fn rejects_non_positive_spacing() {
        let text = "GRID\nDIM 2 2 2\nSPACING 0\nORIGIN 0 0 0\nMAPS C E D\n";
        let err = parse_grid(text).unwrap_err();
        assert_eq!(err.line, 3);
        assert!(err.msg.contains("spacing must be positive"), "got: {}", err.msg);
    }

    #[test]
    fn rejects_maps_line_without_e_and_d() {
        let text = "GRID\nDIM 2 2 2\nSPACING 1\nORIGIN 0 0 0\nMAPS C OA D\n";
        let err = parse_grid(text).unwrap_err();
        assert!(err.msg.contains("must end with E and D"), "got: {}", err.msg);
    }

    #[test]
    fn box_geometry_and_outside_distance() {
        let grid = parse_grid(&tiny_grid_text()).unwrap();
        assert_eq!(grid.box_lo(), [-1.0, -1.0, -1.0]);
        assert_eq!(grid.box_hi(), [-0.5, -0.5, -0.5]);
        assert!(grid.in_box([-0.75, -1.0, -0.5]));
        assert!(!grid.in_box([0.0, -1.0, -0.75]));
        assert_eq!(grid.distance_outside([-0.75, -0.75, -0.75]), 0.0);
        // 10 A straight out along +x.
        assert!((grid.distance_outside([9.5, -0.75, -0.75]) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn param_overrides_replace_and_extend() {
        let table = ParamTable::builtin();
        let custom = table
            .with_overrides("# tweak carbon, add sulfur\nTYPE C 2.1 0.2 -0.001 30.0 0\nTYPE S 2.0 0.2 -0.002 38.9 1\n")
            .expect("overrides parse");
        assert_eq!(custom.get("C").unwrap().r_eq, 2.1);
        assert!(custom.get("S").unwrap().hbond);
        assert!(custom.contains("OA"), "untouched entries survive");
        let err = table.with_overrides("TYPE Q 1.0 0.1 0 0 2\n").unwrap_err();
        assert!(err.msg.contains("hbond flag"), "got: {}", err.msg);
    }

    #[test]
    fn result_json_round_trip_and_empty_timings() {
        let result = DockingResult {
            best_energy: -4.25,
            best_genotype: Genotype {
                translation: [0.5, -1.0, 2.0],
                orientation: [0.1, 0.2, 0.3],
                torsions: vec![1.0],
            },
            best_coordinates: vec![[0.0, 0.0, 0.0], [1.5, 0.0, 0.0]],
            per_run: vec![
                RunSummary { run_index: 0, final_best_energy: -4.25, total_evaluations: 1200 },
                RunSummary { run_index: 1, final_best_energy: -3.75, total_evaluations: 1180 },
            ],
            timings: BTreeMap::new(),
        };
        let json = write_result(&result, OutputFormat::Json);
        let back = parse_result_json(&json).expect("empty timings serialize and parse");
        assert_eq!(back, result);
    }

    #[test]
    fn result_csv_reparses_energies_exactly() {
        let result = DockingResult {
            best_energy: -1.0 / 3.0,
            best_genotype: Genotype { translation: [0.0; 3], orientation: [0.0; 3], torsions: vec![] },
            best_coordinates: vec![],
            per_run: vec![
                RunSummary { run_index: 0, final_best_energy: -1.0 / 3.0, total_evaluations: 7 },
                RunSummary { run_index: 1, final_best_energy: 2.0e-17, total_evaluations: 9 },
            ],
            timings: BTreeMap::new(),
        };
        let csv = write_result(&result, OutputFormat::Csv);
        let rows = parse_per_run_csv(&csv).expect("CSV re-parses");
        assert_eq!(rows.len(), 2);
        for (row, original) in rows.iter().zip(&result.per_run) {
            assert_eq!(
                row.final_best_energy.to_bits(),
                original.final_best_energy.to_bits(),
                "CSV energies must survive the round trip bit-exactly"
            );
        }
    }
}
