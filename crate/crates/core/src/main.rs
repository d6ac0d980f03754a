use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};

use approx_mlp::datapath::{run_dataset, NetworkModel};
use approx_mlp::dataset::{build_examples, load_mnist, Example, Split};
use approx_mlp::error_metrics::summarize_all;
use approx_mlp::model_file::{self, export_model, import_model};
use approx_mlp::pipeline::{train_and_quantize, PreparedData};
use approx_mlp::power_model::cost_report;
use approx_mlp::sweep::{run_sweep, write_metrics_csv, write_sweep_csv};
use approx_mlp::trainer::TrainConfig;
use approx_mlp::{Error, Execution, MultConfig, Result};

#[derive(Parser)]
#[command(name = "approx-mlp", version, about = "Approximate-multiplier MLP accelerator simulator")]
struct Cli {
    /// Run every data-parallel loop on a single thread.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the float network on MNIST and export the quantised model.
    Train {
        #[arg(long)]
        mnist_dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        epochs: usize,
        #[arg(long, default_value_t = 32)]
        batch: usize,
        #[arg(long, default_value_t = 0.05)]
        lr: f64,
        #[arg(long, default_value_t = 0.9)]
        momentum: f64,
    },
    /// Classify the MNIST test set under one multiplier configuration.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        mnist_dir: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u8).range(0..=31))]
        config: u8,
    },
    /// Sweep all 32 configurations and write the results as CSV.
    Sweep {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        mnist_dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Leave out the timestamp comment so the CSV is byte-reproducible.
        #[arg(long)]
        no_timestamp: bool,
    },
    /// Exhaustive multiplier error table for all 32 configurations.
    Metrics {
        #[arg(long)]
        out: PathBuf,
    },
    /// Dump a model file's header and metadata.
    Info {
        #[arg(long)]
        model: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    match run(cli.command, exec) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command, exec: Execution) -> Result<()> {
    match command {
        Command::Train {
            mnist_dir,
            out,
            seed,
            epochs,
            batch,
            lr,
            momentum,
        } => {
            let tc = TrainConfig {
                seed,
                epochs,
                batch_size: batch,
                learning_rate: lr,
                momentum,
            };
            train(&mnist_dir, &out, &tc, exec)
        }
        Command::Eval {
            model,
            mnist_dir,
            config,
        } => eval(&model, &mnist_dir, MultConfig::new(config)?, exec),
        Command::Sweep {
            model,
            mnist_dir,
            out,
            no_timestamp,
        } => sweep(&model, &mnist_dir, &out, !no_timestamp, exec),
        Command::Metrics { out } => metrics(&out, exec),
        Command::Info { model } => info(&model),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io {
            path: path.to_owned(),
            source: e,
        })
}

fn io_at(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::Io {
        path: path.to_owned(),
        source: e,
    }
}

fn pct(v: f64) -> String {
    format!("{:.2}%", v * 100.0)
}

fn train(mnist_dir: &Path, out: &Path, tc: &TrainConfig, exec: Execution) -> Result<()> {
    let started = Instant::now();
    let data = PreparedData::load(mnist_dir, exec)?;
    eprintln!(
        "loaded {} training / {} test images; selected pooled positions {:?}",
        data.train.len(),
        data.test.len(),
        data.feature_indices
    );
    let trained = train_and_quantize(&data, tc)?;
    export_model(&trained.quantized, out)?;
    let exact = run_dataset(&trained.quantized, &data.test, MultConfig::EXACT, exec)?;
    println!("float train accuracy     {}", pct(trained.float_train_accuracy));
    println!("float test accuracy      {}", pct(trained.float_test_accuracy));
    println!("quantised test accuracy  {} (exact multiplier)", pct(exact.accuracy));
    println!(
        "shifts: hidden bias << {}, hidden activation >> {}, output bias << {}",
        trained.quantized.hidden_bias_shift(),
        trained.quantized.hidden_act_shift(),
        trained.quantized.output_bias_shift()
    );
    println!("model written to {} ({:.1?})", out.display(), started.elapsed());
    Ok(())
}

fn load_testset(model: &NetworkModel, mnist_dir: &Path) -> Result<Vec<Example>> {
    let (images, labels) = load_mnist(mnist_dir, Split::Test)?;
    build_examples(&images, &labels, &model.feature_indices)
}

fn eval(model_path: &Path, mnist_dir: &Path, cfg: MultConfig, exec: Execution) -> Result<()> {
    let model = import_model(model_path)?;
    let testset = load_testset(&model, mnist_dir)?;
    let run = run_dataset(&model, &testset, cfg, exec)?;
    let costs = cost_report(cfg);
    println!("configuration   {} (mask {:05b})", cfg, cfg.mask());
    println!("accuracy        {} ({}/{})", pct(run.accuracy), run.correct, run.total);
    println!(
        "cycles          {} total, {} per image",
        run.total_cycles,
        run.total_cycles / run.total as u64
    );
    println!(
        "cost units      multiplier {}, MAC {}, neuron {}, network/image {}",
        costs.mult_cost, costs.mac_cost, costs.neuron_cost, costs.network_cost_per_image
    );
    let s = costs.saving_vs_exact;
    println!(
        "saving vs exact multiplier {}, MAC {}, neuron {}, network {}",
        pct(s.multiplier),
        pct(s.mac),
        pct(s.neuron),
        pct(s.network)
    );
    Ok(())
}

fn sweep(model_path: &Path, mnist_dir: &Path, out: &Path, timestamp: bool, exec: Execution) -> Result<()> {
    let started = Instant::now();
    let model = import_model(model_path)?;
    let testset = load_testset(&model, mnist_dir)?;
    let report = run_sweep(&model, &testset, exec)?;
    let ts = timestamp.then(|| {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs())
    });
    let mut w = create(out)?;
    write_sweep_csv(&mut w, &report.rows, ts).map_err(io_at(out))?;
    w.flush().map_err(io_at(out))?;

    let s = &report.summary;
    println!("config  accuracy   network saving");
    for r in &report.rows {
        println!("{:>6}  {:>8}   {:>8}", r.config.mask(), pct(r.accuracy), pct(r.network_saving()));
    }
    println!();
    println!("exact-mode accuracy       {}", pct(s.exact_accuracy));
    println!(
        "accuracy range            {} .. {} (worst at config {}, drop {})",
        pct(s.min_accuracy),
        pct(s.max_accuracy),
        s.worst_config,
        pct(s.exact_accuracy - s.min_accuracy)
    );
    println!("average accuracy (32)     {}", pct(s.avg_accuracy));
    println!("maximum network saving    {}", pct(s.max_network_saving));
    println!("average network saving    {} (configs 1-31)", pct(s.avg_network_saving));
    println!("wrote {} ({:.1?})", out.display(), started.elapsed());
    Ok(())
}

fn metrics(out: &Path, exec: Execution) -> Result<()> {
    let (summary, reports) = summarize_all(exec);
    let mut w = create(out)?;
    write_metrics_csv(&mut w, &reports, &summary).map_err(io_at(out))?;
    w.flush().map_err(io_at(out))?;
    println!("over configs 1-31        min        max        avg");
    for (name, m) in [("ER", summary.er), ("MRED", summary.mred), ("NMED", summary.nmed)] {
        println!(
            "{name:<16} {:>10.4}% {:>9.4}% {:>9.4}%",
            m.min * 100.0,
            m.max * 100.0,
            m.avg * 100.0
        );
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn info(model_path: &Path) -> Result<()> {
    let bytes = fs::read(model_path).map_err(io_at(model_path))?;
    let model = model_file::from_bytes(&bytes)?;
    let crc = u32::from_le_bytes(bytes[bytes.len() - 4..].try_into().expect("4 bytes"));
    let nonzero = |layer: &[approx_mlp::mac_neuron::NeuronParams]| {
        layer
            .iter()
            .flat_map(|n| &n.weights)
            .filter(|w| w.mag() != 0)
            .count()
    };
    println!("file            {} ({} bytes)", model_path.display(), bytes.len());
    println!("format          AMLP version {}", model_file::FORMAT_VERSION);
    println!(
        "topology        {}-{}-{}",
        model.feature_indices.len(),
        model.hidden.len(),
        model.output.len()
    );
    println!("crc32           {crc:#010x}");
    println!("hidden layer    bias << {}, activation >> {}", model.hidden_bias_shift(), model.hidden_act_shift());
    println!("output layer    bias << {}, raw pre-activation to comparator", model.output_bias_shift());
    println!(
        "non-zero weights hidden {}/{}, output {}/{}",
        nonzero(&model.hidden),
        model.hidden.len() * model.feature_indices.len(),
        nonzero(&model.output),
        model.output.len() * model.hidden.len()
    );
    println!("feature indices {:?}", model.feature_indices);
    println!("notes           inputs are 2x2-average-pooled pixels quantised after pooling;");
    println!("                biases are 8-bit values aligned to the accumulator by a per-layer left shift");
    Ok(())
}
