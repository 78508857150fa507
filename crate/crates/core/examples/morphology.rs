//! Morphological operators on a small hand-made image, printed as grids.

use aset::filters::{
    attribute_filter, close_rec, closing, dilate, erode, open_rec, opening, Attribute, SeShape, StructuringElement,
};
use aset::tensor::Band;

fn show(name: &str, b: &Band) {
    println!("{name}:");
    for r in 0..b.height() {
        let row: Vec<String> = (0..b.width()).map(|c| format!("{:>2}", b.get(r, c))).collect();
        println!("  {}", row.join(""));
    }
}

fn main() -> aset::Result<()> {
    // a 3x3 bright square, a single bright pixel and a dark hole
    let f = Band::from_fn(9, 12, |r, c| match (r, c) {
        (2..=4, 2..=4) => 5.0,
        (6, 9) => 7.0,
        (1, 9) => 0.0,
        _ => 2.0,
    });
    let se = StructuringElement::new(SeShape::Square, 3)?;
    show("input", &f);
    show("erosion", &erode(&f, &se));
    show("dilation", &dilate(&f, &se));
    show("opening (removes the lone pixel)", &opening(&f, &se));
    show("closing (fills the hole)", &closing(&f, &se));
    show("opening by reconstruction (keeps the square's shape)", &open_rec(&f, &se));
    show("closing by reconstruction", &close_rec(&f, &se));
    show("area opening, 4 pixels", &attribute_filter(&f, Attribute::Area, 4));
    show("bounding-box diagonal opening, 3 pixels", &attribute_filter(&f, Attribute::BoxDiagonal, 3));
    Ok(())
}
