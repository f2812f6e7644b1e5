//! Sequence hashing with complex-valued winner-take-all neurons.
//!
//! A single `K x Nvoc` complex synapse matrix is trained without labels:
//! each sentence is fed as one-hot word vectors rotated by a position phase,
//! the best-matching neuron wins, and only that neuron's row moves to lower
//! the sample energy. Sentences are then hashed to sparse `K`-bit codes by
//! keeping the `k` most active neurons. The real-valued bag-of-words model
//! this generalizes (FlyVec) is available as a mode of the same machinery.
//!
//! | module | contents |
//! |---|---|
//! | [`vocab`] | tokenizer, vocabulary + word frequencies, TSV format |
//! | [`model`] | weight matrix, initialization, `CPLY` checkpoints |
//! | [`energy`] | phases, activations, winners, energies, gradients |
//! | [`trainer`] | batching, annealed SGD/Adam, traces, resume |
//! | [`hasher`] | k-WTA hash codes and their cosine |
//! | [`eval`] | Spearman, average precision, STS/PC evaluation, k sweeps |
//! | [`toy`] | the four-neuron, two-sentence demonstration |
//! | [`synthetic`] | template/reversal corpora and fixtures |
//! | [`cli`] | the `comply` command-line tool |
//!
//! Runnable walkthroughs live in `examples/`.

pub mod cli;
pub mod energy;
pub mod error;
pub mod eval;
pub mod hasher;
pub mod model;
pub mod synthetic;
pub mod toy;
pub mod trainer;
pub mod vocab;

pub use energy::{ActivationBreakdown, BagOfWordsWindow, PhasedSentence, RowGradient, WordBag};
pub use error::{Error, Result};
pub use eval::{Hasher, Variant};
pub use hasher::{hash_cosine, HashCode, ProductForm};
pub use model::{ComplexWeights, Mode, ModelMeta};
pub use trainer::{Corpus, Optimizer, Start, TrainConfig, TrainOutput, TrainTrace};
pub use vocab::{FrequencyTable, TokenSeq, Vocabulary};
