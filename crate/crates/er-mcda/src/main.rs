use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use er_mcda::pipeline::{self, Inputs, PipelineError, Scenario, DEFAULT_INTERVIEW_WEIGHT};

#[derive(Parser)]
#[command(name = "er-mcda", version, about = "Evidential-reasoning assessment of alternatives")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Sources {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    questionnaires: PathBuf,
    #[arg(long)]
    interviews: PathBuf,
    /// Fraction of rows that may be rejected before the run fails.
    #[arg(long, default_value_t = 0.0)]
    reject_threshold: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate every alternative and write the report bundle.
    Run {
        #[command(flatten)]
        sources: Sources,
        #[arg(long, default_value_t = DEFAULT_INTERVIEW_WEIGHT)]
        interview_weight: f64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Print the derivation of NODE for ALTERNATIVE.
        #[arg(long, num_args = 2, value_names = ["NODE", "ALTERNATIVE"])]
        explain: Option<Vec<String>>,
    },
    /// Serve the what-if API.
    Serve {
        #[command(flatten)]
        sources: Sources,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
    },
}

fn load(s: &Sources) -> Result<Inputs, PipelineError> {
    Inputs::load(&s.model, &s.questionnaires, &s.interviews, s.reject_threshold)
}

fn run(
    sources: &Sources,
    interview_weight: f64,
    out: &std::path::Path,
    explain: Option<&[String]>,
) -> Result<(), PipelineError> {
    let inputs = load(sources)?;
    let outcome = pipeline::evaluate_scenario(&inputs, &Scenario::with_interview_weight(interview_weight))?;
    pipeline::write_bundle(out, &pipeline::render_bundle(&inputs, &outcome))?;
    if let Some([node, alternative]) = explain {
        print!("{}", pipeline::explain_text(&inputs, &outcome, node, alternative)?);
    } else {
        for r in &outcome.ranking {
            println!("{}\t{}\t{:.4}", r.rank, r.name, r.utility.mean_assigned);
        }
    }
    Ok(())
}

fn fail(e: &PipelineError) -> ExitCode {
    eprintln!("error[{}]: {e}", e.kind());
    ExitCode::FAILURE
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { sources, interview_weight, out, explain } => {
            match run(&sources, interview_weight, &out, explain.as_deref()) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => fail(&e),
            }
        }
        Command::Serve { sources, addr } => {
            let inputs = match load(&sources) {
                Ok(i) => i,
                Err(e) => return fail(&e),
            };
            let rt = tokio::runtime::Runtime::new().expect("tokio runtime");
            match rt.block_on(er_mcda::api::serve(inputs, &addr)) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error[serve]: {e:#}");
                    ExitCode::FAILURE
                }
            }
        }
    }
}
