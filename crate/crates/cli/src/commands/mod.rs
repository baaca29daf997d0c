//! One module per subcommand.

pub mod ablate;
pub mod eval;
pub mod gradcheck;
pub mod infer;
pub mod synth;
pub mod train;

pub use ablate::{ablate, AblationRow, ABLATION_HEADER};
pub use eval::{eval_dirs, format_eval_csv, EvalReport, EVAL_HEADER};
pub use gradcheck::{format_report, gradcheck};
pub use infer::{infer_file, predict, Prediction};
pub use synth::synth;
pub use train::{format_log, train, train_samples, TrainOutcome};
