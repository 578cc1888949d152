//! Generate labelled spectra from the builtin material library, train the
//! 4 → 16 → 8 → 41 classifier and save it.
//!
//! cargo run --release --example train_model -- [model.json]

use hitomi::mlp::{save_model, train};
use hitomi::synth::{builtin_library, generate_training_set, DatasetConfig, Illuminant};
use hitomi::TrainConfig;

fn main() -> hitomi::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "model.json".into());
    let cfg = TrainConfig { seed: 7, ..TrainConfig::default() };
    let ds = generate_training_set(&builtin_library(), &Illuminant::daylight(), &DatasetConfig::default(), &cfg, 7)?;
    println!("{} samples over {} labels", ds.len(), ds.labels.len());

    let (model, log) = train(&ds, &cfg)?;
    for e in log.epochs.iter().step_by(10) {
        println!("epoch {:3}  train {:.5}  val {:.5}  acc {:.4}", e.epoch, e.train_loss, e.val_loss, e.val_accuracy);
    }
    let best = log.best().expect("trained at least one epoch");
    println!(
        "best epoch {} of {} (stopped early: {}), val acc {:.4}",
        best.epoch,
        log.epochs.len(),
        log.stopped_early,
        best.val_accuracy
    );
    println!("dims {:?}, {} parameters", model.dims(), model.param_count());
    save_model(&model, &out)?;
    println!("saved {out}");
    Ok(())
}
