//! Hash sentences with all three scorers and print them in the dump format.
//!
//! ```text
//! cargo run --release --example hash_sentences
//! ```

use comply::toy::{self, ToyConfig};
use comply::{hasher, Hasher, ProductForm, Variant};

fn main() -> comply::Result<()> {
    let report = toy::run(&ToyConfig::default())?;
    let vocab = toy::toy_vocab();
    let w = &report.trained.weights;

    let lines = ["1 2 3 4 5 6 7 8 9", "9 8 7 6 5 4 3 2 1", "1 2 3 4 5 6 7 8 9", "5 5 5"];
    for variant in [
        Variant::Comply,
        Variant::ComplyM(ProductForm::PerPosition),
        Variant::ComplyM(ProductForm::Aggregate),
    ] {
        let h = Hasher::new(w, &vocab, variant);
        println!("# {variant:?} k=1");
        for (i, line) in lines.iter().enumerate() {
            println!("{}", hasher::dump_line(i, &h.hash(line, 1)?));
        }
    }

    let h = Hasher::new(w, &vocab, Variant::Comply);
    let a = h.hash(lines[0], 2)?;
    let b = h.hash(lines[1], 2)?;
    println!("k=2 cosine(1..9, 9..1) = {}", comply::hash_cosine(&a, &b)?);
    Ok(())
}
