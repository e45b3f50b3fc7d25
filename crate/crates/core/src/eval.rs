//! Cross-database validation protocol: temporal 20/80 splits, the six
//! train/validate/test cases under two paradigms, participant-averaged
//! metrics, hyperparameter tuning, seed sweeps, and diagnostic maps.

use std::collections::BTreeMap;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{build_design_matrix, fit_ridge, init_kernel_bank, predict, train, RidgeModel, TrainConfig};
use crate::scvc::{scvc, CrossTerm, KernelBank};
use crate::types::{DatabaseId, EpochFeatures};

/// Temporal 20/80 split of one database: the first epoch of every
/// (participant, phase) pair forms the validation subset.
#[derive(Debug, Clone)]
pub struct DatasetSplit {
    pub database_id: DatabaseId,
    /// segment_index 0 epochs.
    pub va: Vec<EpochFeatures>,
    /// segment_index 1..=4 epochs.
    pub rest: Vec<EpochFeatures>,
}

/// One row of the case table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseSpec {
    pub case_id: u8,
    pub train_db: DatabaseId,
    /// Database providing the validation subset (and Paradigm-1 test set).
    pub val_db: DatabaseId,
    /// Paradigm-2 test database (the untouched third database).
    pub test2_db: DatabaseId,
}

/// The six published train/validate/test combinations.
pub const CASES: [CaseSpec; 6] = [
    CaseSpec { case_id: 1, train_db: DatabaseId::Nback, val_db: DatabaseId::Stew, test2_db: DatabaseId::Eegmat },
    CaseSpec { case_id: 2, train_db: DatabaseId::Nback, val_db: DatabaseId::Eegmat, test2_db: DatabaseId::Stew },
    CaseSpec { case_id: 3, train_db: DatabaseId::Stew, val_db: DatabaseId::Nback, test2_db: DatabaseId::Eegmat },
    CaseSpec { case_id: 4, train_db: DatabaseId::Stew, val_db: DatabaseId::Eegmat, test2_db: DatabaseId::Nback },
    CaseSpec { case_id: 5, train_db: DatabaseId::Eegmat, val_db: DatabaseId::Nback, test2_db: DatabaseId::Stew },
    CaseSpec { case_id: 6, train_db: DatabaseId::Eegmat, val_db: DatabaseId::Stew, test2_db: DatabaseId::Nback },
];

pub fn case_spec(case_id: u8) -> Result<CaseSpec> {
    CASES
        .iter()
        .find(|c| c.case_id == case_id)
        .copied()
        .ok_or(Error::UnknownCase(case_id))
}

/// Split a database into its validation subset (segment_index 0) and the
/// remaining 80%, checking that every (participant, phase) contributes
/// exactly five epochs.
pub fn split_validation(db_id: DatabaseId, epochs: &[EpochFeatures]) -> Result<DatasetSplit> {
    let mut counts: BTreeMap<(String, String), usize> = BTreeMap::new();
    for e in epochs {
        *counts
            .entry((e.participant_id.clone(), e.phase.clone()))
            .or_insert(0) += 1;
    }
    for ((participant, phase), found) in &counts {
        if *found != crate::signal::epoch::EPOCHS_PER_WINDOW {
            return Err(Error::EpochCountMismatch {
                participant: participant.clone(),
                phase: phase.clone(),
                found: *found,
            });
        }
    }
    let (va, rest): (Vec<_>, Vec<_>) = epochs
        .iter()
        .cloned()
        .partition(|e| e.segment_index == 0);
    Ok(DatasetSplit {
        database_id: db_id,
        va,
        rest,
    })
}

/// The epochs a case draws from each of the three databases.
pub struct CaseData<'a> {
    pub nback: &'a [EpochFeatures],
    pub stew: &'a [EpochFeatures],
    pub eegmat: &'a [EpochFeatures],
}

impl<'a> CaseData<'a> {
    pub fn db(&self, id: DatabaseId) -> &'a [EpochFeatures] {
        match id {
            DatabaseId::Nback => self.nback,
            DatabaseId::Stew => self.stew,
            DatabaseId::Eegmat => self.eegmat,
        }
    }
}

/// Train/validation/test epoch sets for a (case, paradigm) pair.
pub struct CaseSplit {
    pub spec: CaseSpec,
    pub paradigm: u8,
    pub train: Vec<EpochFeatures>,
    pub val: Vec<EpochFeatures>,
    pub test: Vec<EpochFeatures>,
}

/// Assemble the sets for a case: training is the whole training database;
/// validation is the -VA subset of the validation database; the test set is
/// the validation database minus VA (Paradigm 1) or the entire third
/// database (Paradigm 2).
pub fn build_case(case_id: u8, paradigm: u8, data: &CaseData) -> Result<CaseSplit> {
    let spec = case_spec(case_id)?;
    if paradigm != 1 && paradigm != 2 {
        return Err(Error::UnknownCase(paradigm));
    }
    let val_split = split_validation(spec.val_db, data.db(spec.val_db))?;
    let test = match paradigm {
        1 => val_split.rest.clone(),
        _ => data.db(spec.test2_db).to_vec(),
    };
    Ok(CaseSplit {
        spec,
        paradigm,
        train: data.db(spec.train_db).to_vec(),
        val: val_split.va,
        test,
    })
}

/// Per-participant metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipantMetrics {
    pub participant_id: String,
    pub accuracy: f64,
    pub macro_f1: f64,
}

/// Evaluation outcome for one (case, paradigm, config, seed) run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub case_id: u8,
    pub paradigm: u8,
    pub per_participant: Vec<ParticipantMetrics>,
    pub mean_acc: f64,
    pub mean_f1: f64,
    pub config: TrainConfig,
    pub seed: u64,
}

/// F1 of one class from its confusion counts; a class absent from both
/// predictions and labels contributes 0.
fn class_f1(tp: usize, fp: usize, fn_: usize) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        0.0
    } else {
        2.0 * tp as f64 / denom as f64
    }
}

/// Accuracy and macro-F1 over one participant's (label, prediction) pairs.
pub fn binary_metrics(pairs: &[(u8, u8)]) -> (f64, f64) {
    let total = pairs.len();
    let correct = pairs.iter().filter(|(l, p)| l == p).count();
    let acc = correct as f64 / total as f64;
    let mut f1_sum = 0.0;
    for class in [0u8, 1u8] {
        let tp = pairs.iter().filter(|(l, p)| *l == class && *p == class).count();
        let fp = pairs.iter().filter(|(l, p)| *l != class && *p == class).count();
        let fn_ = pairs.iter().filter(|(l, p)| *l == class && *p != class).count();
        f1_sum += class_f1(tp, fp, fn_);
    }
    (acc, f1_sum / 2.0)
}

/// Participant-averaged accuracy and macro-F1 of a model on a test set.
pub fn evaluate(
    model: &RidgeModel,
    bank: &KernelBank,
    test: &[EpochFeatures],
    case_id: u8,
    paradigm: u8,
) -> Result<EvalReport> {
    if test.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut by_participant: BTreeMap<String, Vec<(u8, u8)>> = BTreeMap::new();
    for e in test {
        let (_, label) = predict(model, bank, e)?;
        by_participant
            .entry(e.participant_id.clone())
            .or_default()
            .push((e.label, label));
    }
    let per_participant: Vec<ParticipantMetrics> = by_participant
        .iter()
        .map(|(pid, pairs)| {
            let (accuracy, macro_f1) = binary_metrics(pairs);
            ParticipantMetrics {
                participant_id: pid.clone(),
                accuracy,
                macro_f1,
            }
        })
        .collect();
    let n = per_participant.len() as f64;
    let mean_acc = per_participant.iter().map(|m| m.accuracy).sum::<f64>() / n;
    let mean_f1 = per_participant.iter().map(|m| m.macro_f1).sum::<f64>() / n;
    Ok(EvalReport {
        case_id,
        paradigm,
        per_participant,
        mean_acc,
        mean_f1,
        config: model.config.clone(),
        seed: model.config.seed,
    })
}

/// Hyperparameter grid over (c, C).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningGrid {
    pub channels: Vec<usize>,
    pub regularizations: Vec<f64>,
}

impl Default for TuningGrid {
    fn default() -> Self {
        // Always include the published per-case values so those configs are
        // reachable.
        let mut channels = vec![4, 8, 16, 32, 64, 76, 88, 128];
        for c in [6, 77, 86] {
            channels.push(c);
        }
        channels.sort_unstable();
        channels.dedup();
        let mut regularizations: Vec<f64> =
            (0..9).map(|i| 10f64.powi(-10 + i)).collect();
        for c in [1.5e-10, 3.1e-10, 8.5e-8, 1.0e-4, 6.2e-7, 3.38e-7] {
            regularizations.push(c);
        }
        regularizations.sort_by(|a, b| a.partial_cmp(b).unwrap());
        regularizations.dedup();
        TuningGrid {
            channels,
            regularizations,
        }
    }
}

/// Grid-search (c, C) on the case's validation set; ties break toward the
/// smaller channel count, then the larger C (stronger shrinkage of 1/C).
///
/// The kernel bank and design matrices are reused across C values for a
/// fixed c, since only the ridge solve depends on C.
pub fn tune_hyperparams(
    case_id: u8,
    paradigm: u8,
    data: &CaseData,
    grid: &TuningGrid,
    base: &TrainConfig,
) -> Result<TrainConfig> {
    let split = build_case(case_id, paradigm, data)?;
    let mut best: Option<(f64, TrainConfig)> = None;
    for &c in &grid.channels {
        let mut cfg = base.clone();
        cfg.channels = c;
        let p = split.train[0].x.nrows();
        let q = split.train[0].y.nrows();
        let bank = init_kernel_bank(&cfg, p, q);
        let f_train = build_design_matrix(&split.train, &bank, cfg.stride, cfg.cross_term)?;
        let f_val = build_design_matrix(&split.val, &bank, cfg.stride, cfg.cross_term)?;
        let targets: Vec<f64> = split.train.iter().map(|e| e.label as f64).collect();
        for &reg in &grid.regularizations {
            let beta = fit_ridge(&f_train, &targets, reg)?;
            let mut by_participant: BTreeMap<&str, Vec<(u8, u8)>> = BTreeMap::new();
            for (i, e) in split.val.iter().enumerate() {
                let score: f64 = f_val.row(i).iter().zip(&beta).map(|(a, b)| a * b).sum();
                let pred = if score > 0.5 { 1 } else { 0 };
                by_participant
                    .entry(e.participant_id.as_str())
                    .or_default()
                    .push((e.label, pred));
            }
            let accs: Vec<f64> = by_participant
                .values()
                .map(|pairs| binary_metrics(pairs).0)
                .collect();
            let mean_acc = accs.iter().sum::<f64>() / accs.len() as f64;
            let candidate = {
                let mut cand = cfg.clone();
                cand.regularization = reg;
                cand
            };
            let better = match &best {
                None => true,
                Some((acc, cur)) => {
                    mean_acc > *acc + 1e-12
                        || ((mean_acc - acc).abs() <= 1e-12
                            && (candidate.channels < cur.channels
                                || (candidate.channels == cur.channels
                                    && candidate.regularization > cur.regularization)))
                }
            };
            if better {
                best = Some((mean_acc, candidate));
            }
        }
    }
    Ok(best.expect("nonempty grid").1)
}

/// Train on the case's training set and evaluate on the paradigm's test set.
pub fn run_case(
    case_id: u8,
    paradigm: u8,
    data: &CaseData,
    cfg: &TrainConfig,
) -> Result<EvalReport> {
    let split = build_case(case_id, paradigm, data)?;
    let (bank, model) = train(&split.train, cfg)?;
    evaluate(&model, &bank, &split.test, case_id, paradigm)
}

/// Mean and sample standard deviation over a seed sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub case_id: u8,
    pub paradigm: u8,
    pub seeds: Vec<u64>,
    pub mean_acc: f64,
    pub std_acc: f64,
    pub mean_f1: f64,
    pub std_f1: f64,
    pub reports: Vec<EvalReport>,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Re-run a case varying only the bank-initialization seed.
pub fn seed_sweep(
    case_id: u8,
    paradigm: u8,
    data: &CaseData,
    cfg: &TrainConfig,
    seeds: &[u64],
) -> Result<SweepSummary> {
    if seeds.len() < 2 {
        return Err(Error::EmptyInput);
    }
    let mut reports = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let mut c = cfg.clone();
        c.seed = seed;
        reports.push(run_case(case_id, paradigm, data, &c)?);
    }
    let accs: Vec<f64> = reports.iter().map(|r| r.mean_acc).collect();
    let f1s: Vec<f64> = reports.iter().map(|r| r.mean_f1).collect();
    let (mean_acc, std_acc) = mean_std(&accs);
    let (mean_f1, std_f1) = mean_std(&f1s);
    Ok(SweepSummary {
        case_id,
        paradigm,
        seeds: seeds.to_vec(),
        mean_acc,
        std_acc,
        mean_f1,
        std_f1,
        reports,
    })
}

/// Averaged |SCVC response| grids for diagnostics: a p x q map over
/// frequency pairs and an m x n map over channel pairs, each averaged over
/// epochs, output channels, and the remaining axes.
pub fn diagnostics_maps(
    bank: &KernelBank,
    epochs: &[EpochFeatures],
    stride: usize,
    cross_term: CrossTerm,
) -> Result<(Array2<f64>, Array2<f64>)> {
    if epochs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (c, p, q, _) = bank.shape();
    let (m, n) = (epochs[0].x.ncols(), epochs[0].y.ncols());
    let mut freq_map = Array2::zeros((p, q));
    let mut chan_map = Array2::zeros((m, n));
    for e in epochs {
        for k in 0..c {
            for i in 0..p {
                let xi: Vec<f64> = e.x.row(i).to_vec();
                for j in 0..q {
                    let yj: Vec<f64> = e.y.row(j).to_vec();
                    let map = scvc(&xi, &yj, &bank.kernel(k, i, j), stride, cross_term)?;
                    let abs = map.mapv(f64::abs);
                    freq_map[[i, j]] += abs.mean().unwrap();
                    chan_map += &abs;
                }
            }
        }
    }
    let per_cell = (epochs.len() * c) as f64;
    freq_map /= per_cell;
    chan_map /= per_cell * (p * q) as f64;
    Ok((freq_map, chan_map))
}
