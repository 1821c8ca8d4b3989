//! Centralised training of the reference MLP on synthetic blobs, then the
//! same epoch run split at the cut layer to show both paths agree bit for
//! bit.
//!
//! Run with `cargo run --release --example train_mlp`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use uavfl::learning::{
    evaluate, gaussian_blobs, init_model, local_train_epoch, local_train_epoch_split, BlobSpec, ModelParams,
    ShapeSpec, TrainingHyper,
};

fn main() -> uavfl::Result<()> {
    let spec = BlobSpec { dim: 20, ..BlobSpec::default() };
    let mut centers = ChaCha8Rng::seed_from_u64(10);
    let train = gaussian_blobs(&spec, 3000, &mut centers.clone(), &mut ChaCha8Rng::seed_from_u64(11))?;
    let test = gaussian_blobs(&spec, 1000, &mut centers, &mut ChaCha8Rng::seed_from_u64(12))?;

    let shape = ShapeSpec::mlp(spec.dim, &[32], spec.num_classes)?;
    let mut model = init_model(&shape, &mut ChaCha8Rng::seed_from_u64(13));
    let hyper = TrainingHyper { learning_rate: 0.05, ..TrainingHyper::default() };
    println!("{} parameters", model.len());

    let mut shuffle = ChaCha8Rng::seed_from_u64(14);
    for epoch in 1..=8 {
        model = local_train_epoch(&model, &train, &hyper, &mut shuffle)?;
        let (loss, acc) = evaluate(&model, &test)?;
        println!("epoch {epoch}: test loss {loss:.4}, accuracy {acc:.3}");
    }

    let whole = local_train_epoch(&model, &train, &hyper, &mut ChaCha8Rng::seed_from_u64(15))?;
    let (prefix, suffix) = model.split_at(1)?;
    let (p, s) = local_train_epoch_split(&prefix, &suffix, &train, &hyper, &mut ChaCha8Rng::seed_from_u64(15))?;
    let split = ModelParams::join(&p, &s)?;
    println!("split epoch identical to unsplit: {}", split == whole);
    Ok(())
}
