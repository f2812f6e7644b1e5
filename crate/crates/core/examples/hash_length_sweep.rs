//! Five-fold hash-length sweep: pick k on the first fold, report the
//! held-out folds, and print the curve as CSV.
//!
//! ```text
//! cargo run --release --example hash_length_sweep
//! ```

use comply::eval::{self, Hasher, Task, Variant};
use comply::synthetic::{template_data, TemplateSpec};
use comply::trainer::{self, Start};
use comply::{Corpus, Mode, TrainConfig, Vocabulary};

fn main() -> comply::Result<()> {
    let data = template_data(&TemplateSpec::default());
    let vocab = Vocabulary::from_text(&data.corpus.join("\n"), 1000)?;
    let corpus = Corpus::from_lines(data.corpus.iter().map(String::as_str), &vocab, 64)?;
    let config = TrainConfig {
        epochs: 10,
        batch_size: 8,
        seed: 1,
        ..TrainConfig::default()
    };
    let out = trainer::train(&corpus, &vocab, &config, Mode::Complex, Start::Fresh { neurons: 40 })?;
    let hasher = Hasher::new(&out.weights, &vocab, Variant::Comply);

    let ks = [1, 2, 4, 8, 16, 32];
    let res = eval::sweep_hash_length(&hasher, Task::Sts(&data.sts), &ks, 5, 0)?;
    print!("{}", res.to_csv());
    for p in &res.points {
        println!("# k={:<3} mean={:.4} std={:.4}", p.k, p.mean, p.std);
    }
    let s = &res.selection;
    println!(
        "# best k={} (fold 1: {:.4}); folds 2-5: {:.4} +/- {:.4}",
        s.best_k,
        s.selection_metric,
        s.test_mean.unwrap_or(f64::NAN),
        s.test_std.unwrap_or(f64::NAN)
    );
    Ok(())
}
