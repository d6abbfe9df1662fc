use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::error;

use ncut_lesion::cli::{load_config, make_phantom_suite, run_batch};
use ncut_lesion::metrics::evaluate;
use ncut_lesion::pipeline::run_pipeline;
use ncut_lesion::postprocess::{Polarity, PostprocessOptions};
use ncut_lesion::preprocess::PreprocessOptions;
use ncut_lesion::raster::{load_grayscale, save_image, BinaryMask, GrayImage, Raster};
use ncut_lesion::spectral::NcutParams;
use ncut_lesion::Error;

/// Log verbosity, in `env_logger` filter syntax (default `warn`).
const LOG_ENV: &str = "NCUT_LESION_LOG";

#[derive(Parser)]
#[command(version, about = "Lesion segmentation for grayscale ultrasound images")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a batch config and write masks, overlays and report.csv.
    Run { config: PathBuf },
    /// Score a predicted mask against a ground-truth mask.
    Eval { pred: PathBuf, gt: PathBuf },
    /// Generate a seeded phantom suite with its config.
    Phantom {
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Segment a single image with default parameters.
    Segment {
        image: PathBuf,
        /// Saturating contrast stretch before filtering.
        #[arg(long)]
        adjust: bool,
        /// Histogram equalization after filtering.
        #[arg(long)]
        histeq: bool,
        /// Treat bright regions as the lesion.
        #[arg(long)]
        bright: bool,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn load_mask(path: &Path) -> Result<BinaryMask, Error> {
    Ok(BinaryMask::from_nonzero(&load_grayscale(path)?))
}

fn run(config: &Path) -> Result<ExitCode, Error> {
    let loaded = load_config(config)?;
    let summary = run_batch(&loaded)?;
    for row in summary.rows.iter().filter(|r| !r.is_ok()) {
        eprintln!("{}: {}", row.image, row.status);
    }
    println!("{}/{} images ok", summary.ok_count, summary.rows.len());
    if let Some(agg) = &summary.aggregate {
        println!(
            "mean jaccard {:.4} dice {:.4} fpr {:.4} fnr {:.4} seconds {:.4}",
            agg.mean.jaccard, agg.mean.dice, agg.mean.fpr, agg.mean.fnr, agg.mean.seconds
        );
    }
    println!("report: {}", summary.csv_path.display());
    Ok(if summary.all_ok() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn eval(pred: &Path, gt: &Path) -> Result<ExitCode, Error> {
    let r = evaluate(&load_mask(pred)?, &load_mask(gt)?)?;
    println!("jaccard {:.4}\ndice {:.4}\nfpr {:.4}\nfnr {:.4}", r.jaccard, r.dice, r.fpr, r.fnr);
    println!("tp {} fp {} fn {}", r.tp, r.fp, r.fn_);
    Ok(ExitCode::SUCCESS)
}

fn segment(image: &Path, opts: &PreprocessOptions, polarity: Polarity, out: &Path) -> Result<ExitCode, Error> {
    let img = load_grayscale(image)?;
    let post = PostprocessOptions {
        polarity,
        ..Default::default()
    };
    let result = run_pipeline(&img, opts, &NcutParams::default(), &post)?;
    std::fs::create_dir_all(out).map_err(|e| Error::Io {
        path: out.to_path_buf(),
        source: e,
    })?;
    let stem = image.file_stem().map_or("image".into(), |s| s.to_string_lossy());
    let labels = &result.labels;
    let step = 255 / labels.k().saturating_sub(1).max(1);
    let label_img = GrayImage::new(
        img.width(),
        img.height(),
        labels.labels().iter().map(|&l| (l * step) as u8).collect(),
    )?;
    save_image(&result.lesion.mask, out.join(format!("{stem}_mask.png")))?;
    save_image(&label_img, out.join(format!("{stem}_labels.png")))?;
    match result.lesion.source_segment {
        Some(s) => println!(
            "{} regions; lesion from region {s}, {} pixels, {:.2} s",
            labels.k(),
            result.lesion.area,
            result.seconds
        ),
        None => println!("{} regions; no lesion candidate, {:.2} s", labels.k(), result.seconds),
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or(LOG_ENV, "warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { config } => run(&config),
        Command::Eval { pred, gt } => eval(&pred, &gt),
        Command::Phantom { count, seed, out } => make_phantom_suite(count, seed, &out).map(|path| {
            println!("wrote {count} phantoms; config {}", path.display());
            ExitCode::SUCCESS
        }),
        Command::Segment {
            image,
            adjust,
            histeq,
            bright,
            out,
        } => {
            let opts = PreprocessOptions {
                intensity_adjust: adjust,
                hist_equalize: histeq,
                ..Default::default()
            };
            let polarity = if bright { Polarity::Bright } else { Polarity::Dark };
            segment(&image, &opts, polarity, &out)
        }
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(if matches!(e, Error::Config { .. }) { 2 } else { 1 })
        }
    }
}
