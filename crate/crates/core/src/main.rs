use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use gridsel::gom::{Gom, GomConfig, SnapshotRow};
use gridsel::io::{format_half_even, load_into_gom, load_nodes, snapshot_csv_string, write_results_csv};
use gridsel::model::{SecurityFactor, WeightTable};
use gridsel::replication::{replicate_paper, Comparison, PRINTED_TOLERANCE};
use gridsel::simulator::{even_checkpoints, run_experiment, AssignmentMode, FailureModel, SimConfig};
use gridsel::Error;

const EXIT_INPUT: u8 = 2;
const EXIT_NO_RESOURCE: u8 = 3;

#[derive(Parser)]
#[command(name = "gridsel", version, about = "Reliability-factor resource selection for grids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the SPC / RW / RF table for a node fixture.
    Score {
        /// Fixture path, or a bundled fixture name such as `paper_nodes`.
        #[arg(long)]
        nodes: String,
        /// Use weighted SPC instead of the plain mean.
        #[arg(long)]
        weighted: bool,
        /// Weights for --weighted: `default`, `uniform`, or seven comma-separated values.
        #[arg(long, default_value = "default", requires = "weighted")]
        weights: String,
        /// Rank nodes without feedback at RF = SPC.
        #[arg(long)]
        admit_provisional: bool,
    },
    /// Print the ranking as CSV, highest RF first.
    Rank {
        #[arg(long)]
        nodes: String,
        #[arg(long)]
        admit_provisional: bool,
    },
    /// Run the seeded failure experiment and write per-checkpoint counts as CSV.
    Simulate {
        #[arg(long)]
        nodes: String,
        #[arg(long, default_value_t = 1000)]
        jobs: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, value_enum, default_value_t = Mode::RoundRobin)]
        mode: Mode,
        #[arg(long)]
        out: PathBuf,
        /// Feed outcomes back so NR, RW and RF drift during the run.
        #[arg(long)]
        feedback_loop: bool,
        /// Comma-separated job counts; defaults to ten even marks.
        #[arg(long, value_delimiter = ',')]
        checkpoints: Option<Vec<u64>>,
        #[arg(long)]
        admit_provisional: bool,
    },
    /// Recompute the published RF table and report discrepancies.
    ReplicatePaper,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Broker,
    #[value(name = "round_robin", alias = "round-robin")]
    RoundRobin,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::NoResource => EXIT_NO_RESOURCE,
                e if e.is_input_error() => EXIT_INPUT,
                _ => 1,
            })
        }
    }
}

fn parse_weights(spec: &str) -> gridsel::Result<WeightTable<f64>> {
    match spec {
        "default" => Ok(WeightTable::default()),
        "uniform" => WeightTable::uniform(1.0),
        list => {
            let values: Vec<f64> = list
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| Error::Config(format!("bad weight list `{list}`: {e}")))?;
            if values.len() != SecurityFactor::ALL.len() {
                return Err(Error::Config(format!(
                    "expected {} weights, got {}",
                    SecurityFactor::ALL.len(),
                    values.len()
                )));
            }
            WeightTable::from_pairs(SecurityFactor::ALL.into_iter().zip(values).collect())
        }
    }
}

fn build_gom(nodes: &str, config: GomConfig<f64>) -> gridsel::Result<Gom<f64>> {
    let fixture = load_nodes::<f64>(nodes)?;
    let mut gom = Gom::new(config)?;
    load_into_gom(&mut gom, &fixture)?;
    Ok(gom)
}

fn run(command: Command) -> gridsel::Result<ExitCode> {
    let mut out = std::io::stdout().lock();
    match command {
        Command::Score {
            nodes,
            weighted,
            weights,
            admit_provisional,
        } => {
            let config = GomConfig {
                admit_provisional,
                spc_weights: weighted.then(|| parse_weights(&weights)).transpose()?,
                ..GomConfig::default()
            };
            let gom = build_gom(&nodes, config)?;
            write_stdout(&mut out, &score_table(&gom.snapshot()));
        }
        Command::Rank {
            nodes,
            admit_provisional,
        } => {
            let config = GomConfig {
                admit_provisional,
                ..GomConfig::default()
            };
            let gom = build_gom(&nodes, config)?;
            write_stdout(&mut out, &snapshot_csv_string(&gom.snapshot()));
        }
        Command::Simulate {
            nodes,
            jobs,
            seed,
            alpha,
            mode,
            out: path,
            feedback_loop,
            checkpoints,
            admit_provisional,
        } => {
            let fixture = load_nodes::<f64>(&nodes)?;
            let config = SimConfig {
                total_jobs: jobs,
                checkpoints: checkpoints.unwrap_or_else(|| even_checkpoints(jobs, 10)),
                seed,
                mode: match mode {
                    Mode::Broker => AssignmentMode::Broker,
                    Mode::RoundRobin => AssignmentMode::RoundRobin,
                },
                failure_model: FailureModel::new(alpha)?,
                feedback_loop,
                gom: GomConfig {
                    admit_provisional,
                    ..GomConfig::default()
                },
            };
            let result = run_experiment(&config, &fixture)?;
            write_results_csv(&result, &path)?;

            let mut gom = Gom::<f64>::default();
            load_into_gom(&mut gom, &fixture)?;
            let mut text = format!(
                "generator={} seed={} alpha={} jobs={}\n{:<8} {:>8} {:>8} {:>9} {:>12}\n",
                result.generator, result.seed, result.alpha, jobs, "node", "rf", "jobs", "failures", "failure_rate"
            );
            for (id, c) in result.final_counts() {
                let rf = gom.effective_rf(&id).map(|s| s.value()).unwrap_or(0.0);
                let rate = if c.jobs_assigned == 0 {
                    "-".to_string()
                } else {
                    format!("{:.4}", c.cum_failures as f64 / c.jobs_assigned as f64)
                };
                text.push_str(&format!(
                    "{:<8} {:>8} {:>8} {:>9} {:>12}\n",
                    id.as_str(),
                    format_half_even(rf, 4),
                    c.jobs_assigned,
                    c.cum_failures,
                    rate
                ));
            }
            text.push_str(&format!("wrote {}\n", path.display()));
            write_stdout(&mut out, &text);
        }
        Command::ReplicatePaper => {
            let report = replicate_paper()?;
            write_stdout(&mut out, &replication_table(&report));
            if !report.oracle_agrees() {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn write_stdout(out: &mut impl Write, text: &str) {
    // A closed pipe is not an error worth reporting.
    let _ = out.write_all(text.as_bytes());
}

fn score_table(rows: &[SnapshotRow<f64>]) -> String {
    let mut s = format!(
        "{:<5} {:<10} {:>7} {:>7} {:>7} {:>11}\n",
        "rank", "node", "spc", "rw", "rf", "provisional"
    );
    for r in rows {
        s.push_str(&format!(
            "{:<5} {:<10} {:>7} {:>7} {:>7} {:>11}\n",
            r.rank,
            r.node_id.as_str(),
            format_half_even(r.spc.value(), 4),
            r.rw.map_or("-".to_string(), |rw| format_half_even(rw.value(), 4)),
            format_half_even(r.rf.value(), 4),
            if r.provisional { "yes" } else { "no" }
        ));
    }
    s
}

fn replication_table(report: &gridsel::replication::ReplicationReport) -> String {
    let cell = |c: &Comparison| {
        format!(
            "{:>7} {:>7}",
            format_half_even(c.computed, 4),
            format_half_even(c.published, 3)
        )
    };
    let mut s = format!(
        "{:<5} {:>7} {:>7} {:>7} {:>7} {:>7} {:>7}  {}\n",
        "node", "spc", "printed", "rw", "printed", "rf", "printed", "flags"
    );
    let mut flagged = Vec::new();
    for r in &report.rows {
        let d = r.discrepancies();
        let mut flags: Vec<String> = d.iter().map(|c| format!("{c} differs")).collect();
        if r.rf.differs_from_published() {
            flags.push(if r.published_rf_consistent() {
                "RF differs (follows from inputs)".to_string()
            } else {
                "RF differs (published RF is not the midpoint of published SPC/RW)".to_string()
            });
        }
        s.push_str(&format!(
            "{:<5} {} {} {}  {}\n",
            r.node_id.as_str(),
            cell(&r.spc),
            cell(&r.rw),
            cell(&r.rf),
            flags.join(", ")
        ));
        flagged.extend(d.iter().map(|c| format!("{} {c}", r.node_id)));
    }
    s.push_str(&format!(
        "discrepancies: {} (published input value off by more than {PRINTED_TOLERANCE}): {}\n",
        report.discrepancy_count(),
        flagged.join(", ")
    ));
    s.push_str(&format!(
        "recomputation matches exact oracle: {}\n",
        if report.oracle_agrees() { "yes" } else { "no" }
    ));
    s
}
