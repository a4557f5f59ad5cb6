//! Cosine-similarity k-nearest-neighbour classification of pixels or latents.

use std::fmt;
use std::thread;

use crate::data::{split_indices, Dataset};
use crate::error::{Error, Result};
use crate::matrix::{gemm, Matrix, Op};
use crate::network::{encode, ModelParams};

pub const DEFAULT_K: usize = 5;

const CHUNK: usize = 256;

/// Rows scaled to unit norm; all-zero rows stay zero, so they have
/// similarity 0 to everything.
fn normalized_rows(m: &Matrix) -> Matrix {
    let mut out = m.clone();
    let cols = m.cols();
    if cols == 0 {
        return out;
    }
    for row in out.as_mut_slice().chunks_mut(cols) {
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            row.iter_mut().for_each(|v| *v /= norm);
        }
    }
    out
}

fn vote(neighbours: &[(f64, usize)], labels: &[u8]) -> u8 {
    let mut counts = [0usize; 256];
    let mut first = [usize::MAX; 256];
    for &(_, i) in neighbours {
        let l = labels[i] as usize;
        counts[l] += 1;
        first[l] = first[l].min(i);
    }
    (0..256)
        .filter(|&l| counts[l] > 0)
        .max_by(|&a, &b| counts[a].cmp(&counts[b]).then(first[b].cmp(&first[a])))
        .expect("at least one neighbour") as u8
}

fn classify_chunk(train: &Matrix, labels: &[u8], test: &Matrix, k: usize) -> Vec<u8> {
    let (b, n_train) = (test.rows(), train.rows());
    let mut sims = Matrix::zeros(b, n_train);
    gemm(1.0, test, Op::N, train, Op::T, 0.0, &mut sims).expect("shapes checked by caller");
    let mut cand: Vec<(f64, usize)> = Vec::with_capacity(n_train);
    (0..b)
        .map(|r| {
            cand.clear();
            cand.extend(sims.row(r).iter().copied().zip(0..));
            let order = |a: &(f64, usize), b: &(f64, usize)| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1));
            if k < cand.len() {
                cand.select_nth_unstable_by(k - 1, order);
            }
            vote(&cand[..k], labels)
        })
        .collect()
}

/// Predicts a label for each row of `test` by majority vote among the `k`
/// training rows with the highest cosine similarity.
///
/// Equal similarities rank the lower training index first. A tied vote goes
/// to the label owning the smallest training index among the neighbours.
/// `k` larger than the training set uses every training row.
pub fn knn_classify(train: &Matrix, train_labels: &[u8], test: &Matrix, k: usize) -> Result<Vec<u8>> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if train.rows() == 0 {
        return Err(Error::InvalidArgument("empty training set".into()));
    }
    if train_labels.len() != train.rows() {
        return Err(Error::Dimension(format!(
            "{} training rows but {} labels",
            train.rows(),
            train_labels.len()
        )));
    }
    if train.cols() != test.cols() {
        return Err(Error::Dimension(format!(
            "train features have width {}, test {}",
            train.cols(),
            test.cols()
        )));
    }
    if !train.is_finite() || !test.is_finite() {
        return Err(Error::InvalidArgument("non-finite feature value".into()));
    }
    let k = k.min(train.rows());
    let train = normalized_rows(train);
    let test = normalized_rows(test);
    let d = test.cols();
    let chunks: Vec<Matrix> = test
        .as_slice()
        .chunks(CHUNK * d.max(1))
        .map(|c| Matrix::from_vec(c.len() / d.max(1), d, c.to_vec()).expect("whole rows"))
        .collect();
    let workers = thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(chunks.len().max(1));
    let mut results: Vec<Vec<u8>> = vec![Vec::new(); chunks.len()];
    if workers <= 1 {
        for (out, chunk) in results.iter_mut().zip(&chunks) {
            *out = classify_chunk(&train, train_labels, chunk, k);
        }
    } else {
        let per = chunks.len().div_ceil(workers);
        thread::scope(|s| {
            for (outs, ins) in results.chunks_mut(per).zip(chunks.chunks(per)) {
                let train = &train;
                s.spawn(move || {
                    for (out, chunk) in outs.iter_mut().zip(ins) {
                        *out = classify_chunk(train, train_labels, chunk, k);
                    }
                });
            }
        });
    }
    if test.rows() == 0 {
        return Ok(Vec::new());
    }
    Ok(results.concat())
}

/// Fraction of positions where the two label lists agree.
pub fn accuracy(predicted: &[u8], truth: &[u8]) -> f64 {
    let hits = predicted.iter().zip(truth).filter(|(a, b)| a == b).count();
    hits as f64 / truth.len().max(1) as f64
}

/// Feature space the classifier runs in.
#[derive(Clone, Copy, Debug)]
pub enum Representation<'a> {
    Pixels,
    Latent(&'a ModelParams),
}

impl Representation<'_> {
    /// Features of every sample as the rows of a matrix.
    pub fn features(&self, dataset: &Dataset) -> Result<Matrix> {
        match self {
            Representation::Pixels => Ok(dataset.samples().clone()),
            Representation::Latent(params) => {
                let all: Vec<usize> = (0..dataset.len()).collect();
                let mut columns = Vec::with_capacity(dataset.len());
                for chunk in all.chunks(512) {
                    let z = encode(&dataset.batch(chunk), params)?;
                    columns.extend((0..z.cols()).map(|j| z.column(j)));
                }
                if columns.is_empty() {
                    return Ok(Matrix::zeros(0, params.latent_dim()));
                }
                Ok(Matrix::from_columns(&columns)?.transpose())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KnnRow {
    pub name: String,
    pub feature_dim: usize,
    pub accuracies: Vec<f64>,
}

impl KnnRow {
    pub fn mean(&self) -> f64 {
        self.accuracies.iter().sum::<f64>() / self.accuracies.len().max(1) as f64
    }

    /// Sample standard deviation across repeats (0 for a single repeat).
    pub fn std(&self) -> f64 {
        let n = self.accuracies.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean();
        (self.accuracies.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    }
}

/// Mean accuracy per representation over repeated random splits.
#[derive(Clone, Debug, PartialEq)]
pub struct KnnTable {
    pub k: usize,
    pub train_fraction: f64,
    pub seed: u64,
    pub rows: Vec<KnnRow>,
}

impl KnnTable {
    pub const CSV_HEADER: &'static str = "representation,feature_dim,repeat,accuracy";

    /// One line per (representation, repeat).
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for row in &self.rows {
            for (r, a) in row.accuracies.iter().enumerate() {
                writeln!(w, "{},{},{},{:.17e}", row.name, row.feature_dim, r, a)?;
            }
        }
        Ok(())
    }
}

impl fmt::Display for KnnTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "k={} train_fraction={} repeats={}",
            self.k,
            self.train_fraction,
            self.rows.first().map_or(0, |r| r.accuracies.len())
        )?;
        for row in &self.rows {
            writeln!(
                f,
                "{:<24} {:>6}  {}",
                row.name,
                row.feature_dim,
                format_uncertainty(row.mean(), row.std())
            )?;
        }
        Ok(())
    }
}

/// `0.9596(87)` style: four decimals with the standard deviation in units of
/// the last digit.
pub fn format_uncertainty(mean: f64, std: f64) -> String {
    format!("{:.4}({})", mean, (std * 1e4).round() as u64)
}

/// Runs `repeats` random splits (seeds `seed, seed + 1, …`). In each, the
/// `train_fraction` part is the labelled reference set and the rest is
/// classified, once per representation.
pub fn knn_benchmark(
    dataset: &Dataset,
    representations: &[(String, Representation<'_>)],
    train_fraction: f64,
    repeats: usize,
    k: usize,
    seed: u64,
) -> Result<KnnTable> {
    let labels = dataset
        .labels()
        .ok_or_else(|| Error::InvalidArgument("KNN needs a labelled dataset".into()))?;
    if repeats == 0 {
        return Err(Error::InvalidArgument("repeats must be at least 1".into()));
    }
    let features = representations
        .iter()
        .map(|(_, r)| r.features(dataset))
        .collect::<Result<Vec<_>>>()?;
    let mut rows: Vec<KnnRow> = representations
        .iter()
        .zip(&features)
        .map(|((name, _), f)| KnnRow {
            name: name.clone(),
            feature_dim: f.cols(),
            accuracies: Vec::with_capacity(repeats),
        })
        .collect();
    for r in 0..repeats {
        let (train_idx, test_idx) = split_indices(dataset.len(), train_fraction, seed.wrapping_add(r as u64))?;
        let train_labels: Vec<u8> = train_idx.iter().map(|&i| labels[i]).collect();
        let test_labels: Vec<u8> = test_idx.iter().map(|&i| labels[i]).collect();
        for (row, f) in rows.iter_mut().zip(&features) {
            let pred = knn_classify(
                &select_rows(f, &train_idx),
                &train_labels,
                &select_rows(f, &test_idx),
                k,
            )?;
            row.accuracies.push(accuracy(&pred, &test_labels));
        }
    }
    Ok(KnnTable {
        k,
        train_fraction,
        seed,
        rows,
    })
}

fn select_rows(m: &Matrix, idx: &[usize]) -> Matrix {
    let mut data = Vec::with_capacity(idx.len() * m.cols());
    for &i in idx {
        data.extend_from_slice(m.row(i));
    }
    Matrix::from_vec(idx.len(), m.cols(), data).expect("whole rows")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rows(v: &[&[f64]]) -> Matrix {
        let cols = v[0].len();
        Matrix::from_vec(v.len(), cols, v.concat()).unwrap()
    }

    #[test]
    fn nearest_by_angle_not_distance() {
        let train = rows(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let test = rows(&[&[100.0, 1.0], &[0.01, 0.02]]);
        assert_eq!(knn_classify(&train, &[7, 9], &test, 1).unwrap(), vec![7, 9]);
    }

    #[test]
    fn exact_match_with_k1() {
        let train = rows(&[&[0.2, 0.9, 0.1], &[0.5, 0.5, 0.5], &[0.9, 0.1, 0.3]]);
        let test = rows(&[&[0.9, 0.1, 0.3]]);
        assert_eq!(knn_classify(&train, &[0, 1, 2], &test, 1).unwrap(), vec![2]);
    }

    #[test]
    fn zero_vectors_have_zero_similarity() {
        let train = rows(&[&[0.0, 0.0], &[1.0, 0.0], &[-1.0, 0.0]]);
        // similarity to [0,1]: 0, 0, 0 -> lowest index wins
        assert_eq!(
            knn_classify(&train, &[4, 5, 6], &rows(&[&[0.0, 1.0]]), 1).unwrap(),
            vec![4]
        );
        // a zero test vector behaves the same way
        assert_eq!(
            knn_classify(&train, &[4, 5, 6], &rows(&[&[0.0, 0.0]]), 1).unwrap(),
            vec![4]
        );
        // the zero train row ranks above an opposite vector
        assert_eq!(
            knn_classify(&train, &[4, 5, 6], &rows(&[&[-1.0, 0.1]]), 2).unwrap(),
            vec![4]
        );
    }

    #[test]
    fn vote_ties_go_to_smallest_index() {
        let train = rows(&[&[1.0, 0.1], &[1.0, 0.0], &[1.0, -0.1], &[1.0, 0.2]]);
        // neighbours: 1 (label 3), 0 (label 8), 2 (label 8), 3 (label 3)
        assert_eq!(
            knn_classify(&train, &[8, 3, 8, 3], &rows(&[&[1.0, 0.0]]), 4).unwrap(),
            vec![8]
        );
        assert_eq!(
            knn_classify(&train, &[8, 3, 8, 3], &rows(&[&[1.0, 0.0]]), 3).unwrap(),
            vec![8]
        );
    }

    #[test]
    fn errors() {
        let train = rows(&[&[1.0, 0.0]]);
        assert!(knn_classify(&train, &[0], &train, 0).is_err());
        assert!(knn_classify(&Matrix::zeros(0, 2), &[], &train, 1).is_err());
        assert!(knn_classify(&train, &[0, 1], &train, 1).is_err());
        assert!(knn_classify(&train, &[0], &rows(&[&[1.0]]), 1).is_err());
    }

    #[test]
    fn uncertainty_format() {
        assert_eq!(format_uncertainty(0.9596, 0.0087), "0.9596(87)");
        assert_eq!(format_uncertainty(0.942, 0.0101), "0.9420(101)");
    }

    #[test]
    fn sample_std() {
        let r = KnnRow {
            name: "x".into(),
            feature_dim: 1,
            accuracies: vec![0.9, 0.92, 0.94],
        };
        assert!((r.mean() - 0.92).abs() < 1e-15);
        assert!((r.std() - 0.02).abs() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn power_of_two_scaling_keeps_predictions(
            data in proptest::collection::vec(-1.0f64..1.0, 40 * 6),
            q in proptest::collection::vec(-1.0f64..1.0, 6),
            exp in -20i32..20,
            k in 1usize..8,
        ) {
            let train = Matrix::from_vec(40, 6, data).unwrap();
            let labels: Vec<u8> = (0..40).map(|i| (i % 4) as u8).collect();
            let a = knn_classify(&train, &labels, &Matrix::from_vec(1, 6, q.clone()).unwrap(), k).unwrap();
            let s = 2f64.powi(exp);
            let scaled: Vec<f64> = q.iter().map(|v| v * s).collect();
            let b = knn_classify(&train, &labels, &Matrix::from_vec(1, 6, scaled).unwrap(), k).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
