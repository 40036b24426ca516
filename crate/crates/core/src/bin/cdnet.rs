//! Command-line front end: train the repair network, compress and restore
//! single images, batch-evaluate restored outputs, generate masks, and run
//! the gradient-check suite.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cdnet::config::{NetChoice, RunConfig};
use cdnet::dataset::DatasetIndex;
use cdnet::decompression::{decompress, DecompressMode, ReferencePack};
use cdnet::gradsuite::run_gradient_suite;
use cdnet::imageio::{load_image, load_mask, save_image, save_mask, IMAGE_SIZE};
use cdnet::masks::{edge_mask, irregular_mask, rect_mask, sample_training_mask, MaskSide};
use cdnet::metrics::{
    image_l1, image_l2, load_classifier, save_classifier, similarity_ratio,
    synth_texture_dataset, train_toy_classifier, SimilarityReport, TEXTURE_CLASS_NAMES,
};
use cdnet::network::{shrunk_spec, full_spec, Network, NetworkOptions};
use cdnet::tensor::Tensor;
use cdnet::trainer::{load_network, save_network, Discriminator, Trainer};
use cdnet::{Error, Result};

#[derive(Parser)]
#[command(name = "cdnet", version, about = "Thumbnail-compression image repair pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the repair network on a directory of PNG images.
    Train(TrainArgs),
    /// Compress a damaged image to a thumbnail and restore full resolution.
    Inpaint(InpaintArgs),
    /// Score a directory of restored images against their originals.
    Eval(EvalArgs),
    /// Write a binary mask PNG (1 = kept pixel, 0 = missing).
    Maskgen(MaskgenArgs),
    /// Run the finite-difference gradient suite; nonzero exit on failure.
    Gradcheck,
    /// Train the texture classifier used for similarity scoring.
    TrainClassifier(TrainClassifierArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// Run configuration file (`key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed from the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Extra `key=value` overrides applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

#[derive(Args)]
struct InpaintArgs {
    /// Damaged input PNG.
    #[arg(long)]
    image: PathBuf,
    /// Binary mask PNG matching the input (255 = kept, 0 = missing).
    #[arg(long)]
    mask: PathBuf,
    /// Trained network checkpoint.
    #[arg(long)]
    checkpoint: PathBuf,
    /// Restoration mode: selection | baseline.
    #[arg(long, default_value = "selection")]
    mode: String,
    /// Undamaged original; when given, texture references come from it.
    /// Without it, references come from intact regions of the damaged input.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Refinement threshold; 0 disables the refinement pass.
    #[arg(long, default_value_t = 0.15)]
    threshold: f64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Directory of restored PNGs.
    #[arg(long)]
    outputs: PathBuf,
    /// Directory of originals with matching file names.
    #[arg(long)]
    truths: PathBuf,
    /// Texture-classifier checkpoint; adds class-agreement columns.
    #[arg(long)]
    classifier: Option<PathBuf>,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct MaskgenArgs {
    /// Mask family: edge | rect | irregular.
    #[arg(long)]
    kind: String,
    /// Edge masks: which border to remove (top | bottom | left | right).
    #[arg(long)]
    side: Option<String>,
    /// Edge and irregular masks: fraction of pixels to remove.
    #[arg(long)]
    fraction: Option<f64>,
    /// Rect masks: hole as `x0,y0,height,width`.
    #[arg(long)]
    rect: Option<String>,
    /// Irregular masks: stroke-walk seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = IMAGE_SIZE)]
    height: usize,
    #[arg(long, default_value_t = IMAGE_SIZE)]
    width: usize,
    /// Output PNG path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainClassifierArgs {
    /// Where to write the classifier checkpoint.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Synthetic training images per texture class.
    #[arg(long, default_value_t = 32)]
    per_class: usize,
    /// Side length of the synthetic images.
    #[arg(long, default_value_t = IMAGE_SIZE)]
    size: usize,
    /// Optimizer step budget.
    #[arg(long, default_value_t = 4000)]
    steps: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Train(a) => run_train(a),
        Command::Inpaint(a) => run_inpaint(a),
        Command::Eval(a) => run_eval(a),
        Command::Maskgen(a) => run_maskgen(a),
        Command::Gradcheck => return run_gradcheck(),
        Command::TrainClassifier(a) => run_train_classifier(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

/// SplitMix-style mix keeping the RNG streams for initialization, shuffling,
/// and per-step masks decorrelated while everything derives from one seed.
fn mix_seed(seed: u64, stream: u64, index: u64) -> u64 {
    let mut z = seed
        ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15)
        ^ index.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Concatenates single-item tensors along the batch axis.
fn stack(items: &[Tensor]) -> Tensor {
    let [_, c, h, w] = items[0].shape();
    let mut out = Tensor::zeros([items.len(), c, h, w]);
    let stride = c * h * w;
    for (i, t) in items.iter().enumerate() {
        out.data_mut()[i * stride..(i + 1) * stride].copy_from_slice(t.data());
    }
    out
}

/// Zeroes the missing pixels of every channel.
fn hole_out(image: &Tensor, mask: &Tensor) -> Tensor {
    let [n, c, h, w] = image.shape();
    let plane = h * w;
    let mut out = image.clone();
    for b in 0..n {
        let m = &mask.data()[b * plane..(b + 1) * plane];
        for ch in 0..c {
            let base = (b * c + ch) * plane;
            for (i, v) in out.data_mut()[base..base + plane].iter_mut().enumerate() {
                *v *= m[i];
            }
        }
    }
    out
}

fn build_network(cfg: &RunConfig) -> Result<Network> {
    let options = NetworkOptions {
        gate_activation: cfg.gate_mode,
        leaky_slope: cfg.leaky_slope,
    };
    match &cfg.net {
        NetChoice::Full => {
            let mut net = Network::build(&full_spec(), options)?;
            net.init_parameters(mix_seed(cfg.seed, 0, 0));
            Ok(net)
        }
        NetChoice::Shrunk => {
            let mut net = Network::build(&shrunk_spec(), options)?;
            net.init_parameters(mix_seed(cfg.seed, 0, 0));
            Ok(net)
        }
        NetChoice::File(path) => Ok(load_network(path)?.0),
    }
}

fn run_train(args: TrainArgs) -> Result<()> {
    let mut cfg = RunConfig::default();
    let text = fs::read_to_string(&args.config).map_err(|e| Error::Io {
        path: args.config.clone(),
        source: e,
    })?;
    cfg.merge_text(&text)?;
    for pair in &args.sets {
        let (k, v) = pair.split_once('=').ok_or_else(|| {
            Error::InvalidArgument(format!("--set expects key=value, got {pair:?}"))
        })?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;

    let data_dir = cfg.data_dir.clone().ok_or_else(|| {
        Error::InvalidArgument("training needs data_dir in the configuration".into())
    })?;
    let dataset = DatasetIndex::scan(&data_dir, cfg.train_size)?;
    fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::Io {
        path: cfg.out_dir.clone(),
        source: e,
    })?;

    let disc = if cfg.w_gan > 0.0 {
        Some(Discriminator::new(mix_seed(cfg.seed, 1, 0)))
    } else {
        None
    };
    let mut trainer = if let Some(resume) = &cfg.resume_from {
        let (net, opt) = load_network(resume)?;
        let mut t = Trainer::new(net, cfg.loss_weights(), cfg.adam(), disc)?;
        if let Some(opt) = opt {
            t.restore_optimizer(opt);
        }
        t
    } else {
        Trainer::new(build_network(&cfg)?, cfg.loss_weights(), cfg.adam(), disc)?
    };

    println!(
        "training on {} images from {} ({} parameters, start step {})",
        dataset.len(),
        data_dir.display(),
        trainer.network().param_count(),
        trainer.steps_taken()
    );

    let started = Instant::now();
    let side = cfg.train_size;
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut epoch = 0u64;
    'outer: loop {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, 2, epoch)));
        // The tail chunk is a smaller batch, not a dropped one.
        for chunk in order.chunks(cfg.batch_size) {
            let step = trainer.steps_taken();
            if step >= cfg.steps as u64 {
                break 'outer;
            }
            let mut images = Vec::with_capacity(chunk.len());
            let mut masks = Vec::with_capacity(chunk.len());
            for (i, &idx) in chunk.iter().enumerate() {
                images.push(dataset.load(idx)?);
                masks.push(sample_training_mask(
                    mix_seed(cfg.seed, 3, step).wrapping_add(i as u64),
                    side,
                    side,
                )?);
            }
            let report = trainer.train_step(&stack(&images), &stack(&masks))?;
            if report.step % cfg.log_every as u64 == 0 || report.skipped {
                println!(
                    "step {:>6}  l1 {:.5}  var {:.5}  gan_g {:+.5}  gan_d {:+.5}  total {:.5}{}",
                    report.step,
                    report.l1,
                    report.var,
                    report.gan_g,
                    report.gan_d,
                    report.total,
                    if report.skipped { "  [skipped]" } else { "" }
                );
            }
            let done = trainer.steps_taken();
            if done % cfg.checkpoint_every as u64 == 0 && done < cfg.steps as u64 {
                let path = cfg.out_dir.join(format!("checkpoint-{done:06}.ckpt"));
                save_network(&path, trainer.network(), Some(trainer.optimizer()))?;
                println!("saved {}", path.display());
            }
        }
        epoch += 1;
    }

    let path = cfg.out_dir.join("final.ckpt");
    save_network(&path, trainer.network(), Some(trainer.optimizer()))?;
    println!(
        "saved {} after {} steps ({:.1}s)",
        path.display(),
        trainer.steps_taken(),
        started.elapsed().as_secs_f64()
    );
    Ok(())
}

fn run_inpaint(args: InpaintArgs) -> Result<()> {
    let mode = DecompressMode::parse(&args.mode)?;
    if mode == DecompressMode::Baseline && args.truth.is_some() {
        return Err(Error::InvalidArgument(
            "baseline mode ignores references; drop --truth".into(),
        ));
    }
    let (net, _) = load_network(&args.checkpoint)?;
    let image = load_image(&args.image)?;
    let mask = load_mask(&args.mask)?;
    let [_, _, h, w] = image.shape();
    let [_, _, mh, mw] = mask.shape();
    if (mh, mw) != (h, w) {
        return Err(Error::ShapeMismatch(format!(
            "mask is {mh}x{mw} but the image is {h}x{w}"
        )));
    }

    let damaged = hole_out(&image, &mask);
    let thumb = net.infer(&damaged, &mask)?;

    let pack = match (mode, &args.truth) {
        (DecompressMode::Baseline, _) => None,
        (DecompressMode::Selection, Some(truth_path)) => {
            let truth = load_image(truth_path)?;
            Some(ReferencePack::from_truth(&truth, &damaged, &mask)?)
        }
        (DecompressMode::Selection, None) => Some(ReferencePack::from_damaged(&damaged, &mask)?),
    };
    let restored = decompress(&thumb, pack.as_ref(), mode, args.threshold)?;

    // Thumbnails go to a subdirectory so the output directory itself holds
    // only restored images and can be fed straight to `eval`.
    let thumb_dir = args.out.join("thumbs");
    fs::create_dir_all(&thumb_dir).map_err(|e| Error::Io {
        path: thumb_dir.clone(),
        source: e,
    })?;
    let name = args
        .image
        .file_name()
        .ok_or_else(|| Error::InvalidArgument("--image has no file name".into()))?;
    let restored_path = args.out.join(name);
    let thumb_path = thumb_dir.join(name);
    save_image(&restored, &restored_path)?;
    save_image(&thumb, &thumb_path)?;
    println!(
        "wrote {} and {}",
        restored_path.display(),
        thumb_path.display()
    );
    Ok(())
}

fn run_eval(args: EvalArgs) -> Result<()> {
    let outputs = DatasetIndex::scan(&args.outputs, IMAGE_SIZE)?;
    let classifier = args
        .classifier
        .as_deref()
        .map(load_classifier)
        .transpose()?;

    let mut out_tensors = Vec::with_capacity(outputs.len());
    let mut truth_tensors = Vec::with_capacity(outputs.len());
    let mut names = Vec::with_capacity(outputs.len());
    for i in 0..outputs.len() {
        let name = outputs
            .path(i)
            .file_name()
            .expect("scan only yields files")
            .to_owned();
        let truth_path = args.truths.join(&name);
        if !truth_path.is_file() {
            return Err(Error::InvalidArgument(format!(
                "no matching original for {}: {} not found",
                name.to_string_lossy(),
                truth_path.display()
            )));
        }
        out_tensors.push(outputs.load(i)?);
        truth_tensors.push(load_image(&truth_path)?);
        names.push(name);
    }

    let report: Option<SimilarityReport> = classifier
        .as_ref()
        .map(|c| similarity_ratio(&out_tensors, &truth_tensors, c))
        .transpose()?;

    let mut csv = String::new();
    csv.push_str(if report.is_some() {
        "name,l1,l2,match,match5\n"
    } else {
        "name,l1,l2\n"
    });
    let mut sum_l1 = 0.0;
    let mut sum_l2 = 0.0;
    for (i, name) in names.iter().enumerate() {
        let l1 = image_l1(&out_tensors[i], &truth_tensors[i])?;
        let l2 = image_l2(&out_tensors[i], &truth_tensors[i])?;
        sum_l1 += l1;
        sum_l2 += l2;
        match &report {
            Some(r) => csv.push_str(&format!(
                "{},{:.6},{:.6},{},{}\n",
                name.to_string_lossy(),
                l1,
                l2,
                r.matches[i] as u8,
                r.matches5[i] as u8
            )),
            None => csv.push_str(&format!("{},{:.6},{:.6}\n", name.to_string_lossy(), l1, l2)),
        }
    }
    let n = names.len() as f64;
    match &report {
        Some(r) => csv.push_str(&format!(
            "aggregate,{:.6},{:.6},{:.4},{:.4}\n",
            sum_l1 / n,
            sum_l2 / n,
            r.similarity,
            r.similarity5
        )),
        None => csv.push_str(&format!("aggregate,{:.6},{:.6}\n", sum_l1 / n, sum_l2 / n)),
    }

    match &args.csv {
        Some(path) => {
            fs::write(path, &csv).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            println!("wrote {}", path.display());
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn parse_rect(s: &str) -> Result<[usize; 4]> {
    let parts: Vec<_> = s.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(Error::InvalidArgument(format!(
            "--rect expects x0,y0,height,width, got {s:?}"
        )));
    }
    let mut out = [0usize; 4];
    for (slot, part) in out.iter_mut().zip(&parts) {
        *slot = part
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("bad rect component {part:?}")))?;
    }
    Ok(out)
}

fn run_maskgen(args: MaskgenArgs) -> Result<()> {
    let need = |opt: Option<f64>, what: &str| {
        opt.ok_or_else(|| Error::InvalidArgument(format!("{} masks need --{what}", args.kind)))
    };
    let mask = match args.kind.as_str() {
        "edge" => {
            let side = args
                .side
                .as_deref()
                .ok_or_else(|| Error::InvalidArgument("edge masks need --side".into()))?;
            edge_mask(
                MaskSide::parse(side)?,
                need(args.fraction, "fraction")?,
                args.height,
                args.width,
            )?
        }
        "rect" => {
            let spec = args
                .rect
                .as_deref()
                .ok_or_else(|| Error::InvalidArgument("rect masks need --rect".into()))?;
            let [x0, y0, hh, ww] = parse_rect(spec)?;
            rect_mask(x0, y0, hh, ww, args.height, args.width)?
        }
        "irregular" => irregular_mask(
            args.seed,
            need(args.fraction, "fraction")?,
            args.height,
            args.width,
        )?,
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown mask kind {other:?} (edge | rect | irregular)"
            )));
        }
    };
    save_mask(&mask, &args.out)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn run_gradcheck() -> ExitCode {
    let entries = match run_gradient_suite() {
        Ok(entries) => entries,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    let mut all_pass = true;
    for e in &entries {
        all_pass &= e.passed();
        println!(
            "{:<24} error {:.3e}  tolerance {:.0e}  {}",
            e.name,
            e.error,
            e.tolerance,
            if e.passed() { "pass" } else { "FAIL" }
        );
    }
    if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn run_train_classifier(args: TrainClassifierArgs) -> Result<()> {
    let dataset = synth_texture_dataset(args.per_class, args.size, args.seed);
    let (cls, accuracy) = train_toy_classifier(
        &dataset,
        TEXTURE_CLASS_NAMES.len(),
        args.seed,
        args.steps,
    )?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::Io {
            path: dir.to_path_buf(),
            source: e,
        })?;
    }
    save_classifier(&args.out, &cls)?;
    println!(
        "trained on {} images over classes {:?}; accuracy {:.3}; wrote {}",
        dataset.len(),
        TEXTURE_CLASS_NAMES,
        accuracy,
        args.out.display()
    );
    Ok(())
}
