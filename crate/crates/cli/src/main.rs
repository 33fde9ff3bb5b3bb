//! Command-line driver: descriptive statistics, DEA and SFA frontiers,
//! second-stage regressions, the full pipeline, and synthetic sample
//! generation.
//!
//! Exit codes: 0 success, 2 validation/input error, 3 numerical
//! non-convergence.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use effbench::panel::{format_describe, PriceIndex};
use effbench::pipeline::{load_inputs, run_pipeline, MethodsConfig, RunConfig};
use effbench::report;
use effbench::synth;
use effbench::Error;

#[derive(Parser)]
#[command(
    name = "effbench",
    version,
    about = "Two-stage DMU efficiency benchmarking (SFA + DEA)"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print descriptive statistics and the Pearson correlation matrix.
    Describe(ConfigArgs),
    /// Solve the output-oriented DEA programs and emit score tables.
    Dea(ConfigArgs),
    /// Estimate the stochastic translog distance frontier.
    Sfa(ConfigArgs),
    /// Run the second-stage Tobit and Simar-Wilson regressions.
    SecondStage(ConfigArgs),
    /// Run every enabled method and emit the full artifact bundle.
    Pipeline(ConfigArgs),
    /// Generate synthetic panels with known structure.
    Synth(SynthArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override the run seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the inner bootstrap size.
    #[arg(long)]
    l1: Option<usize>,
    /// Override the outer bootstrap size.
    #[arg(long)]
    l2: Option<usize>,
    /// Accept decimal commas in numeric CSV fields.
    #[arg(long)]
    decimal_comma: bool,
    /// Output directory (overrides run.out).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Sample family: `aena` (38 x 4 airport-like bundle), `sfa`, or `dea`.
    #[arg(long, default_value = "aena")]
    preset: String,
    #[arg(long, default_value_t = 38)]
    n: usize,
    #[arg(long, default_value_t = 4)]
    t: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn load_config(args: &ConfigArgs) -> Result<RunConfig, Error> {
    let mut config = RunConfig::from_toml_file(&args.config)?;
    if let Some(seed) = args.seed {
        config.run.seed = Some(seed);
    }
    if let Some(l1) = args.l1 {
        config.bootstrap.l1 = l1;
    }
    if let Some(l2) = args.l2 {
        config.bootstrap.l2 = l2;
    }
    if args.decimal_comma {
        config.input.decimal_comma = true;
    }
    if let Some(out) = &args.out {
        config.run.out = Some(out.clone());
    }
    Ok(config)
}

fn out_dir(config: &RunConfig) -> PathBuf {
    config
        .run
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn dispatch(command: Command) -> Result<(), Error> {
    match command {
        Command::Describe(args) => {
            let config = load_config(&args)?;
            let panel = load_inputs(&config)?;
            let mut vars = config.schema.outputs.clone();
            vars.extend(config.schema.inputs.clone());
            let stats = panel.describe(&vars)?;
            print!("{}", format_describe(&stats));
            let pearson = panel.pearson(&vars)?;
            println!("\nPearson correlation");
            print!("{}", pearson_text(&pearson));
            Ok(())
        }
        Command::Dea(args) => {
            let mut config = load_config(&args)?;
            config.methods = MethodsConfig {
                sfa: false,
                dea: true,
                tobit: false,
                simar_wilson: false,
            };
            run_and_write(&config)
        }
        Command::Sfa(args) => {
            let mut config = load_config(&args)?;
            config.methods = MethodsConfig {
                sfa: true,
                dea: false,
                tobit: false,
                simar_wilson: false,
            };
            run_and_write(&config)
        }
        Command::SecondStage(args) => {
            let mut config = load_config(&args)?;
            if !(config.methods.tobit || config.methods.simar_wilson) {
                return Err(Error::InvalidConfig(
                    "second-stage needs methods.tobit and/or methods.simar_wilson".into(),
                ));
            }
            // Keep only what the second stage pulls in.
            config.methods.dea = false;
            config.methods.sfa = config.methods.tobit;
            run_and_write(&config)
        }
        Command::Pipeline(args) => {
            let config = load_config(&args)?;
            run_and_write(&config)
        }
        Command::Synth(args) => synth_command(&args),
    }
}

fn run_and_write(config: &RunConfig) -> Result<(), Error> {
    let bundle = run_pipeline(config)?;
    let dir = out_dir(config);
    let written = bundle.write(&dir)?;
    for path in &written {
        println!("wrote {}", path.display());
    }
    if let Some((fit, table)) = &bundle.sfa {
        println!(
            "sfa: log-likelihood {:.3}, mean TE {:.3} ({} iterations)",
            fit.log_likelihood,
            table.pooled_mean(),
            fit.convergence.iterations
        );
    }
    if let Some((_, table)) = &bundle.dea {
        println!("dea: mean score {:.3}", table.pooled_mean());
    }
    if let Some(corr) = bundle.method_correlation {
        println!("sfa-dea score correlation: {corr:.3}");
    }
    Ok(())
}

fn pearson_text(m: &effbench::panel::CorrelationMatrix<f64>) -> String {
    let mut out = String::new();
    out.push_str(&format!("{:<10}", ""));
    for n in &m.names {
        out.push_str(&format!("{n:>10}"));
    }
    out.push('\n');
    for (i, n) in m.names.iter().enumerate() {
        out.push_str(&format!("{n:<10}"));
        for v in &m.values[i] {
            out.push_str(&format!("{v:>10.4}"));
        }
        out.push('\n');
    }
    out
}

fn synth_command(args: &SynthArgs) -> Result<(), Error> {
    std::fs::create_dir_all(&args.out)?;
    match args.preset.as_str() {
        "aena" => {
            let sample = synth::aena_like(args.seed)?;
            // A plausible price level per year so the bundled money columns
            // are nominal and the pipeline exercises deflation.
            let levels: std::collections::BTreeMap<i32, f64> =
                [(2011, 1.0), (2012, 1.024), (2013, 1.038), (2014, 1.036)].into();
            let index = PriceIndex::new(levels.clone());
            let deflate = vec!["NAR".to_string(), "EMP".to_string()];
            synth::write_panel_csv(
                &sample.panel,
                &args.out.join("panel.csv"),
                &synth::PanelCsvOptions {
                    nominal: Some((&index, 2011, &deflate)),
                    volume_from_size: Some(("SIZE", "PAX", "ATM")),
                },
            )?;
            synth::write_covariates_csv(&sample, &args.out.join("covariates.csv"))?;
            let mut prices = String::from("year,index\n");
            for (year, level) in levels {
                prices.push_str(&format!("{year},{level}\n"));
            }
            report::write_text(&args.out.join("prices.csv"), &prices)?;
            synth::write_truth_csv(
                sample.panel.dmus(),
                sample.panel.periods(),
                &sample.true_te,
                "true_te",
                &args.out.join("truth.csv"),
            )?;
            synth::write_params_csv(&sample.true_delta, &args.out.join("true_delta.csv"))?;
            println!(
                "wrote airport-like sample ({} DMUs x {} periods) to {}",
                sample.panel.dmus().len(),
                sample.panel.periods().len(),
                args.out.display()
            );
            Ok(())
        }
        "sfa" => {
            let spec: synth::SynthSpec<f64> =
                synth::SynthSpec::new(args.n, args.t, 3, 3, args.seed);
            let truth = synth::gen_sfa_panel(&spec)?;
            synth::write_panel_csv(
                &truth.panel,
                &args.out.join("panel.csv"),
                &synth::PanelCsvOptions {
                    nominal: None,
                    volume_from_size: None,
                },
            )?;
            synth::write_truth_csv(
                truth.panel.dmus(),
                truth.panel.periods(),
                &truth.true_te,
                "true_te",
                &args.out.join("truth.csv"),
            )?;
            synth::write_params_csv(
                &synth::frontier_param_rows(&spec),
                &args.out.join("true_params.csv"),
            )?;
            println!("wrote frontier sample to {}", args.out.display());
            Ok(())
        }
        "dea" => {
            let spec: synth::SynthSpec<f64> =
                synth::SynthSpec::new(args.n, args.t, 1, 1, args.seed);
            let truth = synth::gen_dea_panel(&spec)?;
            synth::write_panel_csv(
                &truth.panel,
                &args.out.join("panel.csv"),
                &synth::PanelCsvOptions {
                    nominal: None,
                    volume_from_size: None,
                },
            )?;
            synth::write_truth_csv(
                truth.panel.dmus(),
                truth.panel.periods(),
                &truth.true_theta,
                "true_theta",
                &args.out.join("truth.csv"),
            )?;
            println!("wrote envelopment sample to {}", args.out.display());
            Ok(())
        }
        other => Err(Error::InvalidConfig(format!(
            "unknown preset `{other}` (expected aena, sfa or dea)"
        ))),
    }
}
