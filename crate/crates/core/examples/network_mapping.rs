//! Lowers a network to convolutions and packs its output maps into PEs.

use romsnn::fixed::QFormat;
use romsnn::mapper::{parse_network, MappedNetwork};
use romsnn::neuron::ModelKind;

fn main() -> romsnn::Result<()> {
    let text = std::env::args().nth(1).unwrap_or_else(|| "32x32x3-24c5-2s-80c5-2s-10o".into());
    let spec = parse_network(&text, &[ModelKind::Lif])?;
    let ram_words = 65536 / 4;
    let net = MappedNetwork::build(spec, ram_words, 0, 1, QFormat::Q15_16)?;
    println!("{} -> {} PEs of {ram_words} words", net.spec, net.pe_count());
    for (l, a) in net.layers.iter().zip(&net.assignments) {
        println!(
            "  layer {} {:?}: {} -> {}, kernel {}x{} stride {}{}, {} windows of {} bits, {} PEs (max {} words)",
            l.index,
            l.source,
            l.in_shape,
            l.out_shape,
            l.kh,
            l.kw,
            l.stride,
            if l.depthwise { " depthwise" } else { "" },
            l.windows(),
            l.window_bits(),
            a.pes.len(),
            a.ram_words.iter().max().unwrap_or(&0)
        );
    }
    Ok(())
}
