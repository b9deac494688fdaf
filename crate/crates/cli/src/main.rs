use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use bootperc::experiment::{
    emit_results, run_experiment, ExperimentError, OutputFormat, RunRecord,
};
use bootperc::partition::baranyai;
use bootperc_cli::{parse_invocation, threads_from_env, CliError, Invocation};

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

fn open(output: Option<&str>) -> io::Result<Box<dyn Write>> {
    Ok(match output {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit(
    records: &[RunRecord],
    format: OutputFormat,
    output: Option<&str>,
) -> Result<(), ExperimentError> {
    let mut out = open(output)?;
    emit_results(records, format, &mut out)?;
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let invocation = match parse_invocation(std::env::args_os()) {
        Ok(inv) => inv,
        Err(CliError::Usage(e)) => {
            // Help and version requests also come through here and exit 0.
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::SUCCESS
            };
        }
        Err(CliError::Config(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    match threads_from_env() {
        Ok(Some(threads)) => {
            if let Err(e) = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global()
            {
                eprintln!("error: cannot start {threads} worker threads: {e}");
                return ExitCode::from(EXIT_RUNTIME);
            }
        }
        Ok(None) => {}
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    }

    let result = match invocation {
        Invocation::Run(config) => run_experiment(&config)
            .and_then(|record| emit(&[record], config.format, config.output.as_deref())),
        Invocation::Preset {
            configs,
            format,
            output,
        } => configs
            .iter()
            .map(run_experiment)
            .collect::<Result<Vec<_>, _>>()
            .and_then(|records| emit(&records, format, output.as_deref())),
        Invocation::Factorize { n, k, output } => match baranyai(n, k) {
            Ok(f) => open(output.as_deref())
                .and_then(|mut out| {
                    out.write_all(f.to_text().as_bytes())?;
                    out.flush()
                })
                .map_err(ExperimentError::from),
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_CONFIG);
            }
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(ExperimentError::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
