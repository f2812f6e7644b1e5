//! Train a Comply model on the template/reversal corpus, checkpoint it and
//! resume it for the rest of the schedule.
//!
//! ```text
//! cargo run --release --example train_comply
//! ```

use comply::model;
use comply::synthetic::{template_data, TemplateSpec};
use comply::trainer::{self, Start};
use comply::{Corpus, Mode, TrainConfig, Vocabulary};

fn main() -> comply::Result<()> {
    let data = template_data(&TemplateSpec::default());
    let vocab = Vocabulary::from_text(&data.corpus.join("\n"), 1000)?;
    let corpus = Corpus::from_lines(data.corpus.iter().map(String::as_str), &vocab, 64)?;

    let config = TrainConfig {
        epochs: 10,
        run_epochs: Some(5),
        batch_size: 8,
        seed: 1,
        ..TrainConfig::default()
    };
    let first = trainer::train(&corpus, &vocab, &config, Mode::Complex, Start::Fresh { neurons: 40 })?;
    print!("{}", first.trace.to_csv());

    let path = std::env::temp_dir().join("comply-train-example.cply");
    model::save_model(&first.weights, &first.meta, &path)?;
    println!(
        "checkpoint after {} epochs: {}",
        first.meta.trained_epochs,
        path.display()
    );

    let rest = TrainConfig {
        run_epochs: None,
        ..config
    };
    let done = trainer::train_resume(&path, &corpus, &vocab, &rest)?;
    for e in &done.trace.epochs {
        println!("{},{},{},{:.4}", e.epoch, e.mean_energy, e.distinct_winners, e.seconds);
    }
    println!("finished at epoch {}", done.meta.trained_epochs);
    Ok(())
}
