//! The real-valued FlyVec baseline: sliding windows over each sentence, a
//! context block and a target block per neuron, hashes that ignore word
//! order.
//!
//! ```text
//! cargo run --release --example flyvec_baseline
//! ```

use comply::hasher;
use comply::synthetic::{template_data, TemplateSpec};
use comply::trainer::{self, Start};
use comply::{hash_cosine, Corpus, Mode, Optimizer, TrainConfig, Vocabulary, WordBag};

fn main() -> comply::Result<()> {
    let data = template_data(&TemplateSpec::default());
    let vocab = Vocabulary::from_text(&data.corpus.join("\n"), 1000)?;
    let corpus = Corpus::from_lines(data.corpus.iter().map(String::as_str), &vocab, 64)?;

    let config = TrainConfig {
        epochs: 10,
        batch_size: 8,
        window: Some(3),
        optimizer: Optimizer::adam(),
        seed: 1,
        ..TrainConfig::default()
    };
    let out = trainer::train(&corpus, &vocab, &config, Mode::RealFlyVec, Start::Fresh { neurons: 40 })?;
    println!(
        "K={} row width={} parameters={}",
        out.weights.neurons(),
        out.weights.width(),
        out.weights.parameter_count()
    );
    print!("{}", out.trace.to_csv());

    let fwd = vocab.encode(&data.corpus[0], 64)?;
    let mut rev = fwd.ids().to_vec();
    rev.reverse();
    let a = hasher::flyvec_hash(&out.weights, &WordBag::new(fwd.ids()), 4)?;
    let b = hasher::flyvec_hash(&out.weights, &WordBag::new(&rev), 4)?;
    println!(
        "sentence:  {}\nforward:   {}\nreversed:  {}",
        data.corpus[0],
        a.to_hex(),
        b.to_hex()
    );
    println!("cosine = {}", hash_cosine(&a, &b)?);
    Ok(())
}
