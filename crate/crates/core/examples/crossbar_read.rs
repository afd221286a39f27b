//! Sensed currents of an all-LRS array: wire drops pull them down away from
//! the drivers and sense amplifiers.

use nspolar::crossbar::{read_array, read_row_detailed, BitMatrix, CrossbarConfig};

fn main() -> nspolar::error::Result<()> {
    for rw in [1e-9, 25.0, 90.0] {
        let cfg = CrossbarConfig::with_size(32, 32, rw);
        let map = read_array(&cfg, &BitMatrix::filled(32, 32, 0))?;
        let lo = map.amps.iter().cloned().fold(f64::INFINITY, f64::min);
        println!("Rw {rw:>5} ohm: I(0,0) = {:.4} mA, I(31,31) = {:.4} mA, min {:.4} mA", map.get(0, 0) * 1e3, map.get(31, 31) * 1e3, lo * 1e3);
    }
    let cfg = CrossbarConfig::with_size(32, 32, 25.0);
    let sol = read_row_detailed(&cfg, &BitMatrix::filled(32, 32, 1), 16)?;
    println!("all-HRS row 16 read: relative residual {:.2e}", sol.relative_residual);
    let mut csv = Vec::new();
    read_array(&cfg, &BitMatrix::filled(32, 32, 0))?.write_csv(&mut csv)?;
    let text = String::from_utf8(csv).expect("utf-8");
    println!("\ncurrent map CSV, first lines:");
    text.lines().take(3).for_each(|l| println!("{}...", &l[..l.len().min(72)]));
    Ok(())
}
