//! Tokenize a small corpus, build a vocabulary with word counts and
//! round-trip it through the TSV format.
//!
//! ```text
//! cargo run --example build_vocab
//! ```

use comply::Vocabulary;

const CORPUS: &str = "The cat sat on the mat.\nA dog sat on the log!\nThe cat saw (the) dog?";

fn main() -> comply::Result<()> {
    let vocab = Vocabulary::from_text(CORPUS, 6)?;
    println!("{} words kept", vocab.len());
    for (id, tok) in vocab.tokens().iter().enumerate() {
        println!("  {id:>2} {tok:<4} count {}", vocab.frequencies().counts()[id]);
    }

    let seq = vocab.encode("the dog sat near a cat", 64)?;
    println!("encoded ids: {:?} (out-of-vocabulary words dropped)", seq.ids());

    let tsv = vocab.to_tsv();
    print!("\n{tsv}");
    assert_eq!(Vocabulary::from_tsv(&tsv)?, vocab);
    Ok(())
}
