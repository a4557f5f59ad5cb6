//! Generate synthetic scattering images and print one as ASCII art.
//!
//! cargo run --release --example sas_standin -- [count] [side] [out.idx]

use std::env;
use std::fs::File;

use slc::data::{gen_sas, write_idx_f64};

fn main() -> slc::Result<()> {
    let args: Vec<String> = env::args().collect();
    let count = args.get(1).map_or(Ok(16), |s| s.parse()).expect("count");
    let side = args.get(2).map_or(Ok(32), |s| s.parse()).expect("side");
    let data = gen_sas(count, side, 1)?;

    let ramp = b" .:-=+*#%@";
    let img = data.sample(0);
    for r in (0..side).step_by(side.div_ceil(32)) {
        let line: String = (0..side)
            .step_by(side.div_ceil(64))
            .map(|c| {
                // log scale so the tail stays visible
                let v = (1.0 + 1e3 * img[r * side + c]).ln() / (1.0f64 + 1e3).ln();
                ramp[((v * 9.0).round() as usize).min(9)] as char
            })
            .collect();
        println!("{line}");
    }

    for i in 0..count.min(8) {
        let s = data.sample(i);
        let mean = s.iter().sum::<f64>() / s.len() as f64;
        let above = s.iter().filter(|&&v| v > 0.01).count();
        println!(
            "image {i}: mean {mean:.4}, {above} of {} pixels above 1% of peak",
            s.len()
        );
    }

    if let Some(path) = args.get(3) {
        write_idx_f64(&data, File::create(path)?)?;
        println!("wrote {count} images to {path}");
    }
    Ok(())
}
