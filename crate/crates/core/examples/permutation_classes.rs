//! Which channel arrangements are equivalent, and which is best, for four
//! erasure channels.

use nspolar::construction::Permutation;
use nspolar::oracle::{best_permutation_with_value, permutation_classes, permutation_value, DiscreteChannel};

fn main() -> nspolar::error::Result<()> {
    let eps = [0.9, 0.6, 0.4, 0.1];
    let channels: Vec<DiscreteChannel> = eps.iter().map(|&e| DiscreteChannel::bec(e)).collect();
    for class in permutation_classes(&channels)? {
        let members: Vec<_> = class.members.iter().map(|p| format!("{:?}", p.as_slice())).collect();
        println!("capacities {:.4?} <- {}", class.capacities, members.join(" "));
    }
    let (best, value) = best_permutation_with_value(&channels, 2)?;
    let candidate = Permutation::new(vec![0, 3, 1, 2])?;
    println!("\nrate 1/2 optimum {:?}: {value:.6}", best.as_slice());
    println!("[0,3,1,2]:              {:.6}", permutation_value(&channels, &candidate, 2)?);
    Ok(())
}
