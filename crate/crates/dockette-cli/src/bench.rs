//! Benchmark harness: run the docking engine over a configuration matrix and
//! emit one timed CSV row per (input, strategy, team size, nruns, repeat).

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use dockette::engine::{run_docking_ctx, BackendConfig, DockingConfig, Strategy};
use dockette::model::ParamTable;
use dockette::search::EvalContext;

use crate::{load_grid, load_ligand, BenchArgs, CliError};

/// Fixed CSV header; every emitted row follows this column order.
pub const BENCH_CSV_HEADER: &str =
    "label,strategy,team_size,nruns,repeat,wall_s,pose_score_s,ga_s,ls_s,reduce_s,best_energy";

/// Strategy name as written in CSV rows and accepted by `--strategies`.
pub fn strategy_name(strategy: Strategy) -> &'static str {
    match strategy {
        Strategy::WorkShare => "workshare",
        Strategy::ExplicitTeam => "explicit",
    }
}

fn parse_strategy(name: &str) -> Option<Strategy> {
    match name {
        "workshare" => Some(Strategy::WorkShare),
        "explicit" => Some(Strategy::ExplicitTeam),
        _ => None,
    }
}

/// One benchmark workload: a ligand/grid pair under a size label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchInput {
    pub label: String,
    pub ligand: PathBuf,
    pub grid: PathBuf,
}

/// The sweep to run: every (input, strategy, team size, nruns) cell is timed
/// `repeats` times under one fixed seed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchMatrix {
    pub inputs: Vec<BenchInput>,
    pub strategies: Vec<Strategy>,
    pub team_sizes: Vec<usize>,
    pub nruns_values: Vec<u32>,
    pub repeats: u32,
    pub seed: u64,
    pub max_evals: u64,
}

impl BenchMatrix {
    pub fn from_args(args: &BenchArgs) -> Result<Self, CliError> {
        let inputs = args
            .inputs
            .iter()
            .map(|raw| parse_input_spec(raw))
            .collect::<Result<Vec<_>, _>>()?;
        let matrix = BenchMatrix {
            inputs,
            strategies: args.strategies.iter().map(|s| s.to_strategy()).collect(),
            team_sizes: args.team_sizes.clone(),
            nruns_values: args.nruns_values.clone(),
            repeats: args.repeats,
            seed: args.seed,
            max_evals: args.bench_max_evals,
        };
        matrix.validate()?;
        Ok(matrix)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        for (list, what) in [
            (self.inputs.is_empty(), "inputs"),
            (self.strategies.is_empty(), "strategies"),
            (self.team_sizes.is_empty(), "team sizes"),
            (self.nruns_values.is_empty(), "nruns values"),
        ] {
            if list {
                return Err(CliError::Input(format!("benchmark {what} list is empty")));
            }
        }
        if self.repeats < 1 {
            return Err(CliError::Input("repeats must be at least 1".into()));
        }
        Ok(())
    }

    /// Data rows the matrix will emit.
    pub fn row_count(&self) -> usize {
        self.inputs.len()
            * self.strategies.len()
            * self.team_sizes.len()
            * self.nruns_values.len()
            * self.repeats as usize
    }
}

fn parse_input_spec(raw: &str) -> Result<BenchInput, CliError> {
    let malformed =
        || CliError::Input(format!("--input takes LABEL=LIGAND:GRID, got {raw:?}"));
    let (label, paths) = raw.split_once('=').ok_or_else(malformed)?;
    let (ligand, grid) = paths.split_once(':').ok_or_else(malformed)?;
    if ligand.is_empty() || grid.is_empty() {
        return Err(malformed());
    }
    if !matches!(label, "small" | "medium" | "large") {
        return Err(CliError::Input(format!(
            "input label must be small, medium, or large, got {label:?}"
        )));
    }
    Ok(BenchInput {
        label: label.to_string(),
        ligand: PathBuf::from(ligand),
        grid: PathBuf::from(grid),
    })
}

/// One timed matrix cell.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub label: String,
    pub strategy: Strategy,
    pub team_size: usize,
    pub nruns: u32,
    pub repeat: u32,
    pub wall_s: f64,
    pub pose_score_s: f64,
    pub ga_s: f64,
    pub ls_s: f64,
    pub reduce_s: f64,
    pub best_energy: f64,
}

/// Execute the whole matrix in row order: inputs, then strategies, team
/// sizes, nruns values, repeats. Runs execute one at a time so the kernel
/// times of a row nest inside its wall-clock interval.
pub fn run_matrix(matrix: &BenchMatrix) -> Result<Vec<BenchRow>, CliError> {
    matrix.validate()?;
    let mut rows = Vec::with_capacity(matrix.row_count());
    for input in &matrix.inputs {
        let ligand = load_ligand(&input.ligand)?;
        let grids = load_grid(&input.grid)?;
        let ctx = EvalContext::new(Arc::new(ligand), Arc::new(grids), &ParamTable::builtin())
            .map_err(|err| CliError::Input(format!("{}: {err}", input.ligand.display())))?;
        for &strategy in &matrix.strategies {
            for &team_size in &matrix.team_sizes {
                for &nruns in &matrix.nruns_values {
                    let mut config = DockingConfig {
                        nruns,
                        seed: matrix.seed,
                        ..DockingConfig::default()
                    };
                    config.ga.max_evals = matrix.max_evals;
                    config.backend =
                        BackendConfig { strategy, team_size, max_parallel_runs: 1 };
                    for repeat in 0..matrix.repeats {
                        let clock = Instant::now();
                        let result = run_docking_ctx(&ctx, &config)?;
                        let wall_s = clock.elapsed().as_secs_f64();
                        let kernel =
                            |key: &str| result.timings.get(key).copied().unwrap_or(0.0);
                        rows.push(BenchRow {
                            label: input.label.clone(),
                            strategy,
                            team_size,
                            nruns,
                            repeat,
                            wall_s,
                            pose_score_s: kernel("pose_score_s"),
                            ga_s: kernel("ga_s"),
                            ls_s: kernel("ls_s"),
                            reduce_s: kernel("reduce_s"),
                            best_energy: result.best_energy,
                        });
                    }
                }
            }
        }
    }
    Ok(rows)
}

/// Render rows as CSV under [`BENCH_CSV_HEADER`]. Reals are written in
/// shortest round-trip form, so parsing a row back is exact.
pub fn format_rows(rows: &[BenchRow]) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    writeln!(out, "{BENCH_CSV_HEADER}").unwrap();
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.label,
            strategy_name(r.strategy),
            r.team_size,
            r.nruns,
            r.repeat,
            r.wall_s,
            r.pose_score_s,
            r.ga_s,
            r.ls_s,
            r.reduce_s,
            r.best_energy
        )
        .unwrap();
    }
    out
}

/// Parse CSV produced by [`format_rows`].
pub fn parse_rows(text: &str) -> Result<Vec<BenchRow>, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header == BENCH_CSV_HEADER => {}
        Some(other) => return Err(format!("bad header: {other}")),
        None => return Err("empty CSV".into()),
    }
    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 11 {
            return Err(format!("row {}: expected 11 fields, got {}", idx + 1, fields.len()));
        }
        let real = |i: usize| -> Result<f64, String> {
            fields[i].parse().map_err(|_| format!("row {}: bad real {:?}", idx + 1, fields[i]))
        };
        rows.push(BenchRow {
            label: fields[0].to_string(),
            strategy: parse_strategy(fields[1])
                .ok_or_else(|| format!("row {}: unknown strategy {:?}", idx + 1, fields[1]))?,
            team_size: fields[2]
                .parse()
                .map_err(|_| format!("row {}: bad team_size {:?}", idx + 1, fields[2]))?,
            nruns: fields[3]
                .parse()
                .map_err(|_| format!("row {}: bad nruns {:?}", idx + 1, fields[3]))?,
            repeat: fields[4]
                .parse()
                .map_err(|_| format!("row {}: bad repeat {:?}", idx + 1, fields[4]))?,
            wall_s: real(5)?,
            pose_score_s: real(6)?,
            ga_s: real(7)?,
            ls_s: real(8)?,
            reduce_s: real(9)?,
            best_energy: real(10)?,
        });
    }
    Ok(rows)
}

pub(crate) fn run_bench(args: &BenchArgs) -> Result<(), CliError> {
    let matrix = BenchMatrix::from_args(args)?;
    let rows = run_matrix(&matrix)?;
    let csv = format_rows(&rows);
    match &args.out {
        Some(path) => std::fs::write(path, csv)
            .map_err(|err| CliError::Internal(format!("cannot write {}: {err}", path.display())))?,
        None => print!("{csv}"),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_matrix() -> BenchMatrix {
        BenchMatrix {
            inputs: vec![
                BenchInput {
                    label: "small".into(),
                    ligand: "a.lig".into(),
                    grid: "g.grd".into(),
                },
                BenchInput {
                    label: "medium".into(),
                    ligand: "b.lig".into(),
                    grid: "g.grd".into(),
                },
                BenchInput {
                    label: "large".into(),
                    ligand: "c.lig".into(),
                    grid: "g.grd".into(),
                },
            ],
            strategies: vec![Strategy::WorkShare, Strategy::ExplicitTeam],
            team_sizes: vec![32, 64, 128, 256],
            nruns_values: vec![10, 100],
            repeats: 10,
            seed: 42,
            max_evals: 50_000,
        }
    }

    #[test]
    fn default_shaped_matrix_emits_480_rows() {
        assert_eq!(sample_matrix().row_count(), 480);
    }

    #[test]
    fn input_specs_parse_and_reject_malformed_forms() {
        let input = parse_input_spec("small=data/small.lig:data/receptor.grd").unwrap();
        assert_eq!(input.label, "small");
        assert_eq!(input.ligand, PathBuf::from("data/small.lig"));
        assert_eq!(input.grid, PathBuf::from("data/receptor.grd"));

        for bad in ["small", "small=onlylig", "=a:b", "small=:g", "small=l:", "huge=a:b"] {
            assert!(parse_input_spec(bad).is_err(), "spec {bad:?} should be rejected");
        }
    }

    #[test]
    fn rows_round_trip_through_csv() {
        let rows = vec![
            BenchRow {
                label: "small".into(),
                strategy: Strategy::WorkShare,
                team_size: 32,
                nruns: 10,
                repeat: 0,
                wall_s: 0.12345678901234567,
                pose_score_s: 0.001,
                ga_s: 0.002,
                ls_s: 0.1,
                reduce_s: 3.5e-5,
                best_energy: -12.625,
            },
            BenchRow {
                label: "large".into(),
                strategy: Strategy::ExplicitTeam,
                team_size: 256,
                nruns: 100,
                repeat: 9,
                wall_s: 2.5,
                pose_score_s: 0.5,
                ga_s: 0.25,
                ls_s: 1.5,
                reduce_s: 0.125,
                best_energy: -7.03125,
            },
        ];
        let text = format_rows(&rows);
        assert!(text.starts_with(BENCH_CSV_HEADER), "header must lead the output");
        let parsed = parse_rows(&text).expect("rows parse back");
        assert_eq!(parsed, rows, "round-trip must be exact");
    }

    #[test]
    fn empty_lists_are_rejected() {
        let mut matrix = sample_matrix();
        matrix.team_sizes.clear();
        assert!(matrix.validate().is_err(), "empty team-size list must fail");
        let mut matrix = sample_matrix();
        matrix.repeats = 0;
        assert!(matrix.validate().is_err(), "zero repeats must fail");
    }

    #[test]
    fn header_text_is_pinned() {
        assert_eq!(
            BENCH_CSV_HEADER,
            "label,strategy,team_size,nruns,repeat,wall_s,pose_score_s,ga_s,ls_s,reduce_s,best_energy"
        );
    }
}
