use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use focir::dataset::{
    build_sample_at, load_tables, write_tables, FeatureLayout, FeatureMask, SpaceTimeGrid,
    ZoneSlotFrame,
};
use focir::evaluation::{
    evaluate, prepare, prepare_with_stats, run_feature_ablation, run_model_ablation,
    train_prepared, write_importance_csv, write_metrics_csv, HistoricalAverage, MetricsReport,
    Persistence,
};
use focir::focirnet::{extract_importance, Checkpoint, DataSpec, ModelConfig};
use focir::synthgen::{generate, write_synth};
use focir::training::TrainConfig;

use crate::config::{DataConfig, RunConfig};
use crate::{Cli, Command, Mode, Split, TrainOverrides, UsageError};

pub fn run(cli: Cli) -> Result<()> {
    let cfg = RunConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Synth { out, seed } => synth(&cfg, &out, seed),
        Command::Ingest { data, out } => ingest(&cfg, &data, out.as_deref()),
        Command::Train {
            data,
            target,
            out,
            log,
            overrides,
        } => train(
            &cfg,
            &data,
            target.as_deref(),
            &out,
            log.as_deref(),
            &overrides,
        ),
        Command::Evaluate {
            checkpoint,
            data,
            split,
            out,
        } => evaluate_cmd(&checkpoint, &data, split, out.as_deref()),
        Command::Ablate {
            data,
            mode,
            target,
            out,
            overrides,
        } => ablate(&cfg, &data, mode, target.as_deref(), &out, &overrides),
        Command::Importance {
            checkpoint,
            out_dir,
        } => importance(&checkpoint, &out_dir),
        Command::Predict {
            checkpoint,
            data,
            slot,
            clamp_zero,
            out,
        } => predict(&checkpoint, &data, slot, clamp_zero, out.as_deref()),
    }
}

fn print_summary(frame: &ZoneSlotFrame) {
    println!(
        "zones={} slots={} total_orders={} gap_fraction={:.4}",
        frame.num_zones(),
        frame.total_slots(),
        frame.total_orders(),
        frame.gap_fraction()
    );
}

/// Builds a frame from the tables in `dir`. The zone count comes from the
/// POI table; the day count, unless given, from the largest slot index.
fn load_frame(
    dir: &Path,
    slot_minutes: usize,
    start_weekday: usize,
    num_days: Option<usize>,
    n_weather: Option<usize>,
) -> Result<ZoneSlotFrame> {
    let tables = load_tables(dir)?;
    let n = tables.zone_count();
    let probe = SpaceTimeGrid::new(n.max(1), slot_minutes, 1)?;
    let days = match num_days {
        Some(d) => d,
        None => {
            let t = tables
                .max_slot()
                .map(|s| s + 1)
                .ok_or_else(|| focir::Error::Data(format!("no slot data in {}", dir.display())))?;
            t.div_ceil(probe.slots_per_day())
        }
    };
    let grid = SpaceTimeGrid::new(n, slot_minutes, days)?.with_start_weekday(start_weekday)?;
    Ok(ZoneSlotFrame::from_tables(&tables, grid, n_weather)?)
}

fn load_configured_frame(data: &DataConfig, dir: &Path) -> Result<ZoneSlotFrame> {
    load_frame(
        dir,
        data.slot_minutes,
        data.start_weekday,
        data.num_days,
        data.n_weather_categories,
    )
}

fn load_frame_for(ck: &Checkpoint, dir: &Path) -> Result<ZoneSlotFrame> {
    let frame = load_frame(
        dir,
        ck.data.slot_minutes,
        ck.data.start_weekday,
        None,
        Some(ck.network.layout.n_weather),
    )?;
    if frame.num_zones() != ck.network.n_zones {
        return Err(focir::Error::Layout(format!(
            "checkpoint has {} zones, data has {}",
            ck.network.n_zones,
            frame.num_zones()
        ))
        .into());
    }
    Ok(frame)
}

fn synth(cfg: &RunConfig, out: &Path, seed: Option<u64>) -> Result<()> {
    let mut sc = cfg.synth.clone();
    if let Some(s) = seed {
        sc.seed = s;
    }
    let (frame, truth) = generate(&sc)?;
    write_synth(out, &frame, &truth)?;
    print_summary(&frame);
    Ok(())
}

fn ingest(cfg: &RunConfig, data: &Path, out: Option<&Path>) -> Result<()> {
    let frame = load_configured_frame(&cfg.data, data)?;
    print_summary(&frame);
    if let Some(out) = out {
        std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
        write_tables(out, &frame.to_tables())?;
    }
    Ok(())
}

fn resolve(
    cfg: &RunConfig,
    target: Option<&str>,
    overrides: &TrainOverrides,
) -> Result<(ModelConfig, TrainConfig)> {
    let mut model = cfg.model.clone();
    let mut train = cfg.train.clone();
    if let Some(t) = target {
        model.target = t.parse()?;
    }
    if let Some(v) = &overrides.variant {
        model.variant = v.parse()?;
    }
    if let Some(s) = overrides.seed {
        model.seed = s;
        train.seed = s;
    }
    if let Some(e) = overrides.max_epochs {
        train.max_epochs = e;
    }
    if let Some(p) = overrides.patience {
        train.patience = p;
    }
    model.validate()?;
    train.validate()?;
    Ok((model, train))
}

fn train(
    cfg: &RunConfig,
    data: &Path,
    target: Option<&str>,
    out: &Path,
    log_path: Option<&Path>,
    overrides: &TrainOverrides,
) -> Result<()> {
    let (model, train) = resolve(cfg, target, overrides)?;
    let frame = load_configured_frame(&cfg.data, data)?;
    let spec = cfg.data.spec();
    let layout = FeatureLayout::new(model.lookback, frame.n_weather_categories, FeatureMask::ALL)?;
    let prepared = prepare(&frame, layout, model.target, &spec)?;
    let (net, log) = train_prepared(&prepared, frame.num_zones(), &model, &train)?;
    Checkpoint::new(net, spec).save(out)?;
    if let Some(p) = log_path {
        log.write_csv(p)?;
    }
    println!(
        "variant={} target={} epochs={} best_epoch={} best_val_loss={} stop={}",
        model.variant,
        model.target,
        log.epochs.len(),
        log.best_epoch,
        log.best_val_loss,
        log.stop_reason
    );
    Ok(())
}

fn print_reports(reports: &[MetricsReport]) {
    println!("model,target,mae,rmse,smape");
    for r in reports {
        println!("{},{},{},{},{}", r.model, r.target, r.mae, r.rmse, r.smape);
    }
}

fn evaluate_cmd(checkpoint: &Path, data: &Path, split: Split, out: Option<&Path>) -> Result<()> {
    let ck = Checkpoint::load(checkpoint)?;
    let net = &ck.network;
    let frame = load_frame_for(&ck, data)?;
    let target = net.config.target;
    let prepared = prepare_with_stats(&frame, net.layout, target, &ck.data, &net.standardizer)?;
    let samples = match split {
        Split::Train => &prepared.train,
        Split::Val => &prepared.val,
        Split::Test => &prepared.test,
    };
    let persistence = Persistence::new(&frame, target);
    let average = HistoricalAverage::fit(&frame, target, &prepared.train_slots())?;
    let reports = vec![
        evaluate(net, samples, target)?,
        evaluate(&persistence, samples, target)?,
        evaluate(&average, samples, target)?,
    ];
    match out {
        Some(p) => write_metrics_csv(p, &reports)?,
        None => print_reports(&reports),
    }
    Ok(())
}

fn ablate(
    cfg: &RunConfig,
    data: &Path,
    mode: Mode,
    target: Option<&str>,
    out: &Path,
    overrides: &TrainOverrides,
) -> Result<()> {
    let (model, train) = resolve(cfg, target, overrides)?;
    let frame = load_configured_frame(&cfg.data, data)?;
    let spec: DataSpec = cfg.data.spec();
    let matrix = match mode {
        Mode::Model => run_model_ablation(&frame, &model, &train, &spec)?,
        Mode::Feature => run_feature_ablation(&frame, &model, &train, &spec)?,
    };
    write_metrics_csv(out, &matrix.reports())?;
    print_reports(&matrix.reports());
    Ok(())
}

fn importance(checkpoint: &Path, out_dir: &Path) -> Result<()> {
    let ck = Checkpoint::load(checkpoint)?;
    let report = extract_importance(&ck.network)?;
    std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    write_importance_csv(
        &report,
        &out_dir.join("importance_spatial.csv"),
        &out_dir.join("importance_temporal.csv"),
    )?;
    for (name, score) in report.ranking.iter().take(5) {
        println!("{name},{score}");
    }
    Ok(())
}

fn predict(
    checkpoint: &Path,
    data: &Path,
    slot: usize,
    clamp_zero: bool,
    out: Option<&Path>,
) -> Result<()> {
    let ck = Checkpoint::load(checkpoint)?;
    let net = &ck.network;
    let frame = load_frame_for(&ck, data)?;
    let b = net.layout.lookback;
    if slot < b {
        return Err(UsageError(format!("slot {slot} has fewer than {b} earlier slots")).into());
    }
    let sample = build_sample_at(
        &frame,
        &net.layout,
        slot,
        net.config.target,
        Some(&net.standardizer),
    )?;
    let mut pred = net.forward(&sample)?;
    if clamp_zero {
        pred.iter_mut().for_each(|v| *v = v.max(0.0));
    }
    let mut text = String::from("zone_id,prediction\n");
    for (z, v) in pred.iter().enumerate() {
        text.push_str(&format!("{z},{v}\n"));
    }
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}
