//! How the three partition modes spread a 10-class dataset over users.
//!
//! Run with `cargo run --example partition_data`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use uavfl::learning::{gaussian_blobs, partition, BlobSpec, PartitionMode, PartitionSpec};

fn main() -> uavfl::Result<()> {
    let spec = BlobSpec { dim: 8, ..BlobSpec::default() };
    let mut centers = ChaCha8Rng::seed_from_u64(1);
    let data = gaussian_blobs(&spec, 2000, &mut centers, &mut ChaCha8Rng::seed_from_u64(2))?;

    for mode in [PartitionMode::Iid, PartitionMode::NoniidShards, PartitionMode::Imbalanced] {
        let spec = PartitionSpec { mode, ..PartitionSpec::default() };
        let parts = partition(&data, 6, &spec, &mut ChaCha8Rng::seed_from_u64(3))?;
        println!("{mode:?}");
        for (user, part) in parts.iter().enumerate() {
            println!("  user {user}: {:4} samples, per class {:?}", part.len(), part.class_histogram());
        }
    }
    Ok(())
}
