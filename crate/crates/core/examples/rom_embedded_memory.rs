//! Reads LUT rows from each memory technology and prints the access counters
//! and energy a ROM read costs.

use romsnn::fixed::QFormat;
use romsnn::lut::{build_exp_lut, RomImage};
use romsnn::memory::{array_area, MemArray, MemGeometry, Technology, TechnologyProfile};

fn main() -> romsnn::Result<()> {
    let image = RomImage::build([&build_exp_lut(6, QFormat::Q15_16)?])?;
    let geom = MemGeometry { ram_words: 1024, rom_words: 1024, row_width: 16 };
    let data: Vec<u32> = (0..1024u32).map(|i| i.wrapping_mul(2_654_435_761)).collect();
    for tech in Technology::ALL {
        let profile = TechnologyProfile::default_for(tech);
        let mut arr = MemArray::with_rom(profile.clone(), geom, &image)?;
        arr.preload(0, &data)?;
        let row = arr.rom_read(1)?;
        let c = arr.counters();
        println!(
            "{:<6} row1[0]={:#010x} rom_reads={} seq_reads={} seq_writes={} RAM intact={} \
             energy/ROM read={:.2} pJ area={:.0} um^2",
            tech.name(),
            row[0],
            c.rom_reads,
            c.rom_seq_ram_reads,
            c.rom_seq_ram_writes,
            arr.ram_snapshot() == data.as_slice(),
            profile.rom_read_energy(),
            array_area(&profile, geom.ram_bytes(), geom.rom_bytes())?
        );
    }
    Ok(())
}
