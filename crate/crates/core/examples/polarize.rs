//! Exact channel polarization: one combining step on two unlike channels,
//! then a full transform over eight erasure channels.

use nspolar::channels::ChannelModel;
use nspolar::oracle::{polarize_bec, polarize_exact, single_step, DiscreteChannel};

fn main() -> nspolar::error::Result<()> {
    let w0 = DiscreteChannel::from(&ChannelModel::bsc(0.11)?);
    let w1 = DiscreteChannel::bec(0.3);
    let (minus, plus) = single_step(&w0, &w1)?;
    println!("I(W0) + I(W1)  = {:.12}", w0.capacity() + w1.capacity());
    println!("I(W') + I(W'') = {:.12}", minus.capacity() + plus.capacity());
    println!("Z(W') = {:.6}  Z(W'') = {:.6}  Z0*Z1 = {:.6}", minus.bhattacharyya(), plus.bhattacharyya(), w0.bhattacharyya() * w1.bhattacharyya());

    let eps: Vec<f64> = (0..8).map(|i| 0.8 - 0.08 * i as f64).collect();
    let exact = polarize_exact(&eps.iter().map(|&e| DiscreteChannel::bec(e)).collect::<Vec<_>>())?;
    println!("\nsynthesized erasure probabilities");
    for (i, (w, e)) in exact.iter().zip(polarize_bec(eps)).enumerate() {
        println!("  u{i}: {:.6} (closed form {e:.6})", w.as_bec().unwrap_or(f64::NAN));
    }
    Ok(())
}
