//! Evaluates `e^t` through the range-reduced exp unit and compares it with `f64::exp`.

use romsnn::fixed::{Fixed, QFormat};
use romsnn::lut::{build_exp_lut, eval_exp, range_reduce, RomImage};

fn main() -> romsnn::Result<()> {
    let q = QFormat::Q15_16;
    let k = 6;
    let lut = build_exp_lut(k, q)?;
    let mut rom = RomImage::build([&lut])?;
    println!("exp LUT: {} rows, {} ROM words", lut.len(), rom.len_words());
    println!("{:>8} {:>6} {:>4} {:>10} {:>14} {:>14} {:>10}", "t", "M", "d", "r", "lut exp", "f64 exp", "rel err");
    for x in [-8.0, -3.3, -1.0, -0.01, 0.0, 0.5, 1.0, 2.718, 7.9] {
        let t = Fixed::from_f64(x, q)?;
        let rr = range_reduce(t, k);
        let e = eval_exp(t, &lut, &mut rom)?;
        let want = t.to_f64().exp();
        println!(
            "{:>8.4} {:>6} {:>4} {:>10.6} {:>14.8} {:>14.8} {:>10.2e}",
            t.to_f64(),
            rr.big_m,
            rr.index_d,
            rr.remainder_f64(),
            e.to_f64(),
            want,
            (e.to_f64() - want).abs() / want
        );
    }
    Ok(())
}
