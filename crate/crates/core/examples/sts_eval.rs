//! Compare Comply and FlyVec on a similarity fixture where a sentence and
//! its reversal are marked dissimilar.
//!
//! ```text
//! cargo run --release --example sts_eval
//! ```

use comply::eval::{self, Hasher, Variant};
use comply::synthetic::{template_data, TemplateSpec};
use comply::trainer::{self, Start};
use comply::{Corpus, Mode, ProductForm, TrainConfig, Vocabulary};

fn main() -> comply::Result<()> {
    let data = template_data(&TemplateSpec::default());
    let vocab = Vocabulary::from_text(&data.corpus.join("\n"), 1000)?;
    let corpus = Corpus::from_lines(data.corpus.iter().map(String::as_str), &vocab, 64)?;
    let config = TrainConfig {
        epochs: 10,
        batch_size: 8,
        window: Some(3),
        seed: 1,
        ..TrainConfig::default()
    };
    let comply = trainer::train(&corpus, &vocab, &config, Mode::Complex, Start::Fresh { neurons: 40 })?;
    let flyvec = trainer::train(&corpus, &vocab, &config, Mode::RealFlyVec, Start::Fresh { neurons: 40 })?;

    println!("k   comply  complym  flyvec   (STS spearman)   comply-AP  flyvec-AP");
    for k in [1, 2, 4, 8, 16] {
        let c = Hasher::new(&comply.weights, &vocab, Variant::Comply);
        let m = Hasher::new(&comply.weights, &vocab, Variant::ComplyM(ProductForm::PerPosition));
        let f = Hasher::new(&flyvec.weights, &vocab, Variant::FlyVec);
        println!(
            "{k:<3} {:.4}  {:.4}   {:.4}                    {:.4}     {:.4}",
            eval::eval_sts(&c, &data.sts, k)?.metric,
            eval::eval_sts(&m, &data.sts, k)?.metric,
            eval::eval_sts(&f, &data.sts, k)?.metric,
            eval::eval_pair_classification(&c, &data.pair_class, k)?.metric,
            eval::eval_pair_classification(&f, &data.pair_class, k)?.metric,
        );
    }
    Ok(())
}
