//! Rate-codes a synthetic image and reports the measured spike rate per pixel band.

use romsnn::encoder::{synthetic, RateCoder};
use romsnn::spikes::Shape3;

fn main() -> romsnn::Result<()> {
    let data = synthetic(Shape3::new(28, 28, 1), 1, 5);
    let img = &data.images[0];
    for fp in [0.4, 1.0] {
        let coder = RateCoder::new(fp, 42)?;
        let steps = 200;
        let trains = coder.encode(img, 0, steps)?;
        let mut bands = [(0.0f64, 0u64, 0usize); 4];
        for (p, &v) in img.pixels.iter().enumerate() {
            let b = ((v * 4.0) as usize).min(3);
            bands[b].0 += v;
            bands[b].1 += trains.iter().filter(|t| t.bits().get(p)).count() as u64;
            bands[b].2 += 1;
        }
        println!("fp = {fp}");
        for (i, (sum, ones, n)) in bands.iter().enumerate() {
            if *n > 0 {
                println!(
                    "  pixels in [{:.2}, {:.2}): expected rate {:.3}, measured {:.3} ({n} pixels)",
                    i as f64 / 4.0,
                    (i + 1) as f64 / 4.0,
                    fp * sum / *n as f64,
                    *ones as f64 / (*n * steps) as f64
                );
            }
        }
    }
    Ok(())
}
