//! Systematic encoding, storage mapping and SC decoding of one noisy frame.

use nspolar::bench::synthetic_channels;
use nspolar::channels::HardObservation;
use nspolar::codec::{map_from_physical, map_to_physical, sc_decode, systematic_data, systematic_encode};
use nspolar::construction::{build_code, PermKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> nspolar::error::Result<()> {
    let channels = synthetic_channels(8, 0.05, 0.045)?;
    let spec = build_code(&channels, 128, &PermKind::OrderedBitReversal, 0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let data: Vec<u8> = (0..spec.k).map(|_| rng.gen_range(0..2)).collect();
    let (x, _) = systematic_encode(&spec, &data)?;
    assert_eq!(systematic_data(&spec, &x), data);

    let stored = map_to_physical(&spec, &x)?;
    let read: Vec<HardObservation> = stored
        .iter()
        .zip(&channels)
        .map(|(&b, w)| HardObservation::Bit(b ^ u8::from(rng.gen_bool(w.flip_probability(b)))))
        .collect();
    let flips = stored.iter().zip(&read).filter(|(b, r)| HardObservation::Bit(**b) != **r).count();
    let decoded = sc_decode(&spec, &map_from_physical(&spec, &read)?)?;
    let errors = systematic_data(&spec, &decoded.x_hat).iter().zip(&data).filter(|(a, b)| a != b).count();
    println!("N = {}, k = {}: {flips} channel flips, {errors} data errors after decoding", spec.len(), spec.k);
    Ok(())
}
