use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::ConfusionMatrix;
use super::report::{EvalReport, Task};
use super::stats::{column_moments, mean, standardize, t_ci95_halfwidth};
use super::svm::{LinearSvm, SvmConfig};
use crate::corpus::fold_assignment;
use crate::error::{invalid, Result};
use crate::rng::stream;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmotionConfig {
    pub n_folds: usize,
    pub svm: SvmConfig,
    pub seed: u64,
}

impl Default for EmotionConfig {
    fn default() -> Self {
        Self {
            n_folds: 4,
            svm: SvmConfig::default(),
            seed: 0,
        }
    }
}

/// k-fold linear SVM classification of frozen embeddings. Accuracy,
/// macro precision and macro recall are averaged over folds with a
/// Student-t 95% interval; the confusion matrix sums all test folds.
pub fn eval_emotion(
    embeddings: &[Vec<f64>],
    labels: &[usize],
    ids: &[String],
    class_names: &[&str],
    config: &EmotionConfig,
) -> Result<EvalReport> {
    if embeddings.len() != labels.len() || labels.len() != ids.len() {
        return Err(invalid("embeddings, labels and ids differ in count"));
    }
    let present = (0..class_names.len()).filter(|c| labels.contains(c)).count();
    if present < 2 {
        return Err(invalid("emotion evaluation needs at least two classes"));
    }
    if config.n_folds < 2 {
        return Err(invalid("n_folds must be >= 2"));
    }
    let folds = fold_assignment(ids, config.n_folds)?;
    let per_fold: Vec<Result<ConfusionMatrix>> = (0..config.n_folds)
        .into_par_iter()
        .map(|f| {
            let train: Vec<usize> = (0..labels.len()).filter(|i| folds[*i] != f).collect();
            let test: Vec<usize> = (0..labels.len()).filter(|i| folds[*i] == f).collect();
            let xs: Vec<Vec<f64>> = train.iter().map(|i| embeddings[*i].clone()).collect();
            let (m, s) = column_moments(&xs)?;
            let xs = standardize(&xs, &m, &s);
            let ys: Vec<usize> = train.iter().map(|i| labels[*i]).collect();
            let mut rng = stream(config.seed, &format!("svm/fold{f}"));
            let svm = LinearSvm::fit(&xs, &ys, class_names, &config.svm, &mut rng)?;
            let xt: Vec<Vec<f64>> = test.iter().map(|i| embeddings[*i].clone()).collect();
            let pred: Vec<usize> = standardize(&xt, &m, &s).iter().map(|x| svm.predict(x)).collect();
            let truth: Vec<usize> = test.iter().map(|i| labels[*i]).collect();
            ConfusionMatrix::from_predictions(&truth, &pred, class_names.len())
        })
        .collect();
    let per_fold = per_fold.into_iter().collect::<Result<Vec<_>>>()?;
    let mut total = ConfusionMatrix::new(class_names.len());
    for c in &per_fold {
        total.add(c);
    }
    let acc: Vec<f64> = per_fold.iter().map(ConfusionMatrix::accuracy).collect();
    let prec: Vec<f64> = per_fold.iter().map(ConfusionMatrix::macro_precision).collect();
    let rec: Vec<f64> = per_fold.iter().map(ConfusionMatrix::macro_recall).collect();
    let mut report = EvalReport::new(Task::Emotion);
    report.seed = config.seed;
    report.set("accuracy", mean(&acc), t_ci95_halfwidth(&acc)?);
    report.set("precision", mean(&prec), t_ci95_halfwidth(&prec)?);
    report.set("recall", mean(&rec), t_ci95_halfwidth(&rec)?);
    report.confusion = Some(total.counts);
    report.class_names = Some(class_names.iter().map(|s| s.to_string()).collect());
    report.notes.push(format!(
        "precision and recall are macro-averaged over classes; intervals are Student-t over {} folds",
        config.n_folds
    ));
    Ok(report)
}
