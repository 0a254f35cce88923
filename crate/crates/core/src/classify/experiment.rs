use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    evaluate, mcnemar, predict, stratified_kfold, train_svm, ClassifyError, EvalReport,
    FoldAssignment, McNemarResult, SolverConfig, SvmModel,
};
use crate::corpus::{Corpus, Genre, TextClass};
use crate::features::{
    extract_corpus, vectorize, DocFeatures, FeatureConfig, FeatureSpace, SparseVector,
};
use crate::selection::{
    average_ranks, predicts_by_presence, score_space, select_top_k, AveragedRank, FoldRanking,
    IgScore, Predicts,
};

pub const REPORT_FORMAT: &str = "transtree-report v1";

fn default_folds() -> usize {
    5
}

fn default_k_top() -> Vec<usize> {
    vec![100, 1_000, 10_000, 50_000]
}

fn default_c() -> Vec<f64> {
    vec![0.1, 1.0, 10.0]
}

fn default_report_top() -> usize {
    1_000
}

/// Everything that determines one cross-validation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(flatten)]
    pub features: FeatureConfig,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_k_top")]
    pub k_top: Vec<usize>,
    #[serde(default = "default_c")]
    pub c: Vec<f64>,
    #[serde(default)]
    pub solver: SolverConfig,
    /// Number of averaged-rank rows kept in the report.
    #[serde(default = "default_report_top")]
    pub report_top: usize,
}

impl ExperimentConfig {
    pub fn new(features: FeatureConfig) -> Self {
        ExperimentConfig {
            name: None,
            features,
            folds: default_folds(),
            seed: 0,
            k_top: default_k_top(),
            c: default_c(),
            solver: SolverConfig::default(),
            report_top: default_report_top(),
        }
    }

    pub fn display_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.features.name())
    }

    pub fn validate(&self) -> Result<(), ClassifyError> {
        self.features.validate()?;
        if self.folds < 2 {
            return Err(ClassifyError::TooFewFolds(self.folds));
        }
        if self.k_top.is_empty() || self.k_top.contains(&0) {
            return Err(ClassifyError::BadParam("k_top needs positive values".into()));
        }
        if self.c.is_empty() || self.c.iter().any(|&c| !(c > 0.0 && c.is_finite())) {
            return Err(ClassifyError::BadParam("C grid needs positive values".into()));
        }
        if self.solver.tolerance.is_nan() || self.solver.tolerance <= 0.0 || self.solver.max_epochs == 0 {
            return Err(ClassifyError::BadParam("solver needs positive tolerance and epochs".into()));
        }
        Ok(())
    }

    fn grid(&self) -> Vec<(usize, f64)> {
        self.k_top
            .iter()
            .flat_map(|&k| self.c.iter().map(move |&c| (k, c)))
            .collect()
    }
}

/// Extracted features of a corpus, aligned with its document order.
#[derive(Debug, Clone)]
pub struct PreparedCorpus {
    pub ids: Vec<String>,
    pub labels: Vec<TextClass>,
    pub features: Vec<DocFeatures>,
}

pub fn prepare_corpus(corpus: &Corpus, config: &FeatureConfig) -> Result<PreparedCorpus, ClassifyError> {
    let features = extract_corpus(corpus, config)?;
    Ok(PreparedCorpus {
        ids: corpus.documents.iter().map(|d| d.id.clone()).collect(),
        labels: corpus.labels(),
        features,
    })
}

/// A model trained inside one fold together with the space it lives in.
#[derive(Debug, Clone)]
pub struct FoldModel {
    pub fold: usize,
    pub space: FeatureSpace,
    pub model: SvmModel,
    pub objective: f64,
    pub converged: bool,
}

struct FoldState {
    train: Vec<usize>,
    test: Vec<usize>,
    space: FeatureSpace,
    scores: Vec<IgScore>,
}

fn svm_seed(seed: u64, fold: usize) -> u64 {
    seed ^ (fold as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn fold_state(
    prepared: &PreparedCorpus,
    assignment: &FoldAssignment,
    fold: usize,
    config: &ExperimentConfig,
) -> Result<FoldState, ClassifyError> {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (i, id) in prepared.ids.iter().enumerate() {
        match assignment.fold_of(id) {
            Some(f) if f == fold => test.push(i),
            Some(_) => train.push(i),
            None => return Err(ClassifyError::BadParam(format!("document {id} has no fold"))),
        }
    }
    let space = FeatureSpace::build(train.iter().map(|&i| &prepared.features[i]), config.features.min_df)?;
    let docs: Vec<&DocFeatures> = train.iter().map(|&i| &prepared.features[i]).collect();
    let labels: Vec<TextClass> = train.iter().map(|&i| prepared.labels[i]).collect();
    let scores = score_space(&space, &docs, &labels)?;
    Ok(FoldState {
        train,
        test,
        space,
        scores,
    })
}

fn fit_in_fold(
    prepared: &PreparedCorpus,
    state: &FoldState,
    fold: usize,
    k_top: usize,
    c: f64,
    config: &ExperimentConfig,
) -> Result<FoldModel, ClassifyError> {
    let ids: Vec<usize> = select_top_k(&state.scores, k_top).into_iter().collect();
    let space = state.space.restrict(&ids);
    let mode = config.features.value_mode;
    let vectors: Vec<SparseVector> = state
        .train
        .iter()
        .map(|&i| vectorize(&prepared.features[i], &space, mode))
        .collect();
    let labels: Vec<TextClass> = state.train.iter().map(|&i| prepared.labels[i]).collect();
    let fit = train_svm(&vectors, &labels, space.len(), c, &config.solver, svm_seed(config.seed, fold))?;
    let objective = fit.objective();
    let converged = fit.converged;
    let model = SvmModel::from_fit(fit, c, mode, &space);
    Ok(FoldModel {
        fold,
        space,
        model,
        objective,
        converged,
    })
}

/// Trains the model of one fold using only the documents outside that fold:
/// feature space, information-gain selection and weights all come from the
/// training part.
pub fn train_fold(
    prepared: &PreparedCorpus,
    assignment: &FoldAssignment,
    fold: usize,
    k_top: usize,
    c: f64,
    config: &ExperimentConfig,
) -> Result<FoldModel, ClassifyError> {
    let state = fold_state(prepared, assignment, fold, config)?;
    fit_in_fold(prepared, &state, fold, k_top, c, config)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub documents: usize,
    pub original: usize,
    pub translated: usize,
    /// Document count per "genre/class" cell.
    pub cells: BTreeMap<String, usize>,
}

impl CorpusSummary {
    fn of(corpus: &Corpus) -> Self {
        let mut cells = BTreeMap::new();
        for genre in Genre::ALL {
            for class in TextClass::ALL {
                let n = corpus
                    .documents
                    .iter()
                    .filter(|d| d.genre == genre && d.class == class)
                    .count();
                cells.insert(format!("{genre}/{class}"), n);
            }
        }
        CorpusSummary {
            documents: corpus.len(),
            original: corpus.count_class(TextClass::Original),
            translated: corpus.count_class(TextClass::Translated),
            cells,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldSummary {
    pub fold: usize,
    pub train_docs: usize,
    pub test_docs: usize,
    pub test_translated: usize,
    /// Features of the training-part space before selection.
    pub space_size: usize,
}

/// Results for one (k_top, C) setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub k_top: usize,
    pub c: f64,
    /// Selected feature count per fold.
    pub selected: Vec<usize>,
    pub objectives: Vec<f64>,
    pub converged: bool,
    pub folds: Vec<EvalReport>,
    pub pooled: EvalReport,
    pub predictions: BTreeMap<String, TextClass>,
    #[serde(skip)]
    pub models: Vec<FoldModel>,
}

impl PartialEq for FoldModel {
    fn eq(&self, other: &Self) -> bool {
        self.fold == other.fold && self.model == other.model && self.space == other.space
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub a: String,
    pub b: String,
    pub k_top: usize,
    pub c: f64,
    pub a_macro_f: f64,
    pub b_macro_f: f64,
    pub mcnemar: McNemarResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub format: String,
    pub name: String,
    pub config: ExperimentConfig,
    pub corpus: CorpusSummary,
    pub folds: Vec<FoldSummary>,
    pub grid: Vec<GridResult>,
    pub ranking: Vec<AveragedRank>,
    #[serde(default)]
    pub comparisons: Vec<Comparison>,
}

impl ExperimentReport {
    pub fn cell(&self, k_top: usize, c: f64) -> Option<&GridResult> {
        self.grid.iter().find(|g| g.k_top == k_top && g.c == c)
    }
}

struct FoldOutput {
    summary: FoldSummary,
    ranking: FoldRanking,
    /// Per grid cell: the model and (document index, predicted label).
    cells: Vec<(FoldModel, Vec<(usize, TextClass)>)>,
}

fn run_fold(
    prepared: &PreparedCorpus,
    assignment: &FoldAssignment,
    fold: usize,
    config: &ExperimentConfig,
) -> Result<FoldOutput, ClassifyError> {
    let state = fold_state(prepared, assignment, fold, config)?;
    let mut cells = Vec::new();
    for (k_top, c) in config.grid() {
        let fm = fit_in_fold(prepared, &state, fold, k_top, c, config)?;
        let vectors: Vec<SparseVector> = state
            .test
            .iter()
            .map(|&i| vectorize(&prepared.features[i], &fm.space, fm.model.value_mode))
            .collect();
        let preds = predict(&fm.model, &fm.space, &vectors)?;
        let labeled = state.test.iter().zip(preds).map(|(&i, p)| (i, p.label)).collect();
        cells.push((fm, labeled));
    }
    Ok(FoldOutput {
        summary: FoldSummary {
            fold,
            train_docs: state.train.len(),
            test_docs: state.test.len(),
            test_translated: state
                .test
                .iter()
                .filter(|&&i| prepared.labels[i] == TextClass::Translated)
                .count(),
            space_size: state.space.len(),
        },
        ranking: FoldRanking::from_scores(&state.space, &state.scores),
        cells,
    })
}

/// Genre-stratified cross-validation over the (k_top, C) grid of `config`.
/// Folds run in parallel; the report does not depend on scheduling.
pub fn run_experiment(corpus: &Corpus, config: &ExperimentConfig) -> Result<ExperimentReport, ClassifyError> {
    config.validate()?;
    if corpus.len() < config.folds {
        return Err(ClassifyError::BadParam(format!(
            "{} documents cannot fill {} folds",
            corpus.len(),
            config.folds
        )));
    }
    let prepared = prepare_corpus(corpus, &config.features)?;
    let assignment = stratified_kfold(corpus, config.folds, config.seed)?;
    let outputs: Vec<FoldOutput> = (0..config.folds)
        .into_par_iter()
        .map(|f| run_fold(&prepared, &assignment, f, config))
        .collect::<Result<_, _>>()?;

    let mut grid = Vec::new();
    for (cell, (k_top, c)) in config.grid().into_iter().enumerate() {
        let mut pooled: Vec<Option<TextClass>> = vec![None; prepared.ids.len()];
        let mut folds = Vec::new();
        let mut models = Vec::new();
        for out in &outputs {
            let (model, preds) = &out.cells[cell];
            let pred: Vec<TextClass> = preds.iter().map(|&(_, l)| l).collect();
            let gold: Vec<TextClass> = preds.iter().map(|&(i, _)| prepared.labels[i]).collect();
            folds.push(evaluate(&pred, &gold)?);
            for &(i, l) in preds {
                pooled[i] = Some(l);
            }
            models.push(model.clone());
        }
        let pooled: Vec<TextClass> = pooled
            .into_iter()
            .map(|p| p.expect("every document belongs to one fold"))
            .collect();
        grid.push(GridResult {
            k_top,
            c,
            selected: models.iter().map(|m| m.space.len()).collect(),
            objectives: models.iter().map(|m| m.objective).collect(),
            converged: models.iter().all(|m| m.converged),
            folds,
            pooled: evaluate(&pooled, &prepared.labels)?,
            predictions: prepared.ids.iter().cloned().zip(pooled).collect(),
            models,
        });
    }

    let fold_rankings: Vec<FoldRanking> = outputs.iter().map(|o| o.ranking.clone()).collect();
    let mut ranking = average_ranks(&fold_rankings, |_| Predicts::None);
    ranking.truncate(config.report_top);
    for r in &mut ranking {
        r.predicts = predicts_by_presence(&r.key, &prepared.features, &prepared.labels);
    }

    Ok(ExperimentReport {
        format: REPORT_FORMAT.to_string(),
        name: config.display_name(),
        config: config.clone(),
        corpus: CorpusSummary::of(corpus),
        folds: outputs.into_iter().map(|o| o.summary).collect(),
        grid,
        ranking,
        comparisons: Vec::new(),
    })
}

/// McNemar tests between two reports over the same corpus and folds, one per
/// grid setting present in both.
pub fn compare_reports(
    a: &ExperimentReport,
    b: &ExperimentReport,
    corpus: &Corpus,
) -> Result<Vec<Comparison>, ClassifyError> {
    if a.config.folds != b.config.folds || a.config.seed != b.config.seed {
        return Err(ClassifyError::Incomparable("fold count or seed".into()));
    }
    let gold: Vec<TextClass> = corpus.labels();
    let mut out = Vec::new();
    for ga in &a.grid {
        let Some(gb) = b.cell(ga.k_top, ga.c) else {
            continue;
        };
        let lookup = |g: &GridResult| -> Result<Vec<TextClass>, ClassifyError> {
            corpus
                .documents
                .iter()
                .map(|d| {
                    g.predictions
                        .get(&d.id)
                        .copied()
                        .ok_or_else(|| ClassifyError::Incomparable(format!("no prediction for {}", d.id)))
                })
                .collect()
        };
        let result = mcnemar(&lookup(ga)?, &lookup(gb)?, &gold)?;
        out.push(Comparison {
            a: a.name.clone(),
            b: b.name.clone(),
            k_top: ga.k_top,
            c: ga.c,
            a_macro_f: ga.pooled.macro_f,
            b_macro_f: gb.pooled.macro_f,
            mcnemar: result,
        });
    }
    if out.is_empty() {
        return Err(ClassifyError::Incomparable("no shared grid settings".into()));
    }
    Ok(out)
}

fn eval_row(out: &mut String, name: &str, k_top: usize, c: f64, fold: &str, e: &EvalReport) {
    let _ = writeln!(
        out,
        "{name}\t{k_top}\t{c}\t{fold}\t{:.1}\t{:.1}\t{:.1}\t{:.1}\t{:.1}\t{:.1}\t{:.1}\t{:.1}",
        e.translated.precision,
        e.translated.recall,
        e.translated.f1,
        e.original.precision,
        e.original.recall,
        e.original.f1,
        e.macro_f,
        e.accuracy
    );
}

/// Per-fold and pooled scores as TSV, followed by McNemar rows when present.
pub fn results_tsv(report: &ExperimentReport) -> String {
    let mut out = String::from(
        "features\tk_top\tc\tfold\tP_translated\tR_translated\tF_translated\tP_original\tR_original\tF_original\tmacro_F\taccuracy\n",
    );
    for g in &report.grid {
        for (i, e) in g.folds.iter().enumerate() {
            eval_row(&mut out, &report.name, g.k_top, g.c, &i.to_string(), e);
        }
        eval_row(&mut out, &report.name, g.k_top, g.c, "pooled", &g.pooled);
    }
    if !report.comparisons.is_empty() {
        out.push_str("\na\tb\tk_top\tc\tmacro_F_a\tmacro_F_b\tb_count\tc_count\tstatistic\tp\n");
        for cmp in &report.comparisons {
            let m = &cmp.mcnemar;
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{:.1}\t{:.1}\t{}\t{}\t{:.4}\t{:.3e}",
                cmp.a, cmp.b, cmp.k_top, cmp.c, cmp.a_macro_f, cmp.b_macro_f, m.b, m.c, m.statistic, m.p
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_bracketed_tree, Document, Sentence};
    use crate::features::FeatureSpec;

    /// Translated documents use pronoun subjects, original ones common nouns.
    fn toy_corpus() -> Corpus {
        let mut docs = Vec::new();
        for i in 0..20 {
            for class in TextClass::ALL {
                let subj = match (class, i % 4) {
                    (TextClass::Translated, 0) => "(NN x)",
                    (TextClass::Translated, _) => "(PN x)",
                    (TextClass::Original, 0) => "(PN x)",
                    (TextClass::Original, _) => "(NN x)",
                };
                let tree = parse_bracketed_tree(&format!("(IP (NP {subj}) (VP (VV y)) (PU 。))")).unwrap();
                docs.push(Document {
                    id: format!("{class}-{i:02}"),
                    genre: Genre::ALL[i % 4],
                    class,
                    sentences: vec![Sentence::from_tree(tree)],
                });
            }
        }
        Corpus::new(docs).unwrap()
    }

    fn cfgr_config() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(FeatureConfig::new(vec![FeatureSpec::Cfgr { root: None }]));
        cfg.k_top = vec![1, 100];
        cfg.c = vec![1.0];
        cfg.seed = 3;
        cfg
    }

    #[test]
    fn toy_experiment_structure() {
        let corpus = toy_corpus();
        let report = run_experiment(&corpus, &cfgr_config()).unwrap();
        assert_eq!(report.folds.len(), 5);
        assert_eq!(report.grid.len(), 2);
        for g in &report.grid {
            assert_eq!(g.folds.len(), 5);
            assert_eq!(g.pooled.confusion.total(), 40);
            for (e, s) in g.folds.iter().zip(&report.folds) {
                assert_eq!(e.confusion.tp + e.confusion.fn_, s.test_translated);
            }
        }
        // the pronoun rule is the only informative one and classifies 75%
        let full = report.cell(100, 1.0).unwrap();
        assert_eq!(full.pooled.accuracy, 75.0);
        assert!(report.ranking[0].key.key.contains("PN") || report.ranking[0].key.key.contains("NN"));
    }

    #[test]
    fn oversized_k_equals_no_selection() {
        let corpus = toy_corpus();
        let mut cfg = cfgr_config();
        cfg.k_top = vec![100, 1_000_000];
        let report = run_experiment(&corpus, &cfg).unwrap();
        let (a, b) = (&report.grid[0], &report.grid[1]);
        assert_eq!(a.predictions, b.predictions);
        assert_eq!(a.models, b.models);
    }

    #[test]
    fn deterministic() {
        let corpus = toy_corpus();
        let a = serde_json::to_string(&run_experiment(&corpus, &cfgr_config()).unwrap()).unwrap();
        let b = serde_json::to_string(&run_experiment(&corpus, &cfgr_config()).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn self_comparison_is_null() {
        let corpus = toy_corpus();
        let report = run_experiment(&corpus, &cfgr_config()).unwrap();
        let cmp = compare_reports(&report, &report, &corpus).unwrap();
        assert_eq!(cmp.len(), 2);
        assert!(cmp.iter().all(|c| c.mcnemar.b == 0 && c.mcnemar.c == 0 && c.mcnemar.p == 1.0));
    }

    #[test]
    fn config_json_roundtrip() {
        let json = r#"{"features":[{"kind":"cfgr"}],"k_top":[10],"c":[1.0],"seed":4}"#;
        let cfg: ExperimentConfig = serde_json::from_str(json).unwrap();
        assert_eq!(cfg.folds, 5);
        assert_eq!(cfg.features.min_df, 2);
        let back: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn bad_configs() {
        let mut cfg = cfgr_config();
        cfg.c = vec![0.0];
        assert!(matches!(cfg.validate(), Err(ClassifyError::BadParam(_))));
        let mut cfg = cfgr_config();
        cfg.folds = 1;
        assert!(matches!(cfg.validate(), Err(ClassifyError::TooFewFolds(1))));
    }
}
