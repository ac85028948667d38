//! Response files in long and dense layouts, with {0,1} labels.

use irt_coreset::io::{read_responses, write_responses, LabelFormat, ResponseLayout};
use irt_coreset::model::ModelKind;
use irt_coreset::synth::{generate_synthetic, GenConfig};

fn main() -> irt_coreset::Result<()> {
    let y = generate_synthetic(&GenConfig::new(4, 3, ModelKind::TwoPL, 0))?.y;
    for layout in [ResponseLayout::Long, ResponseLayout::Dense] {
        let mut buf = Vec::new();
        write_responses(&mut buf, &y, layout, LabelFormat::ZeroOne)?;
        println!("{layout:?}:\n{}", String::from_utf8_lossy(&buf));
        assert_eq!(read_responses(buf.as_slice(), LabelFormat::ZeroOne)?, y);
    }
    Ok(())
}
