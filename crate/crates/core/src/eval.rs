//! Per-sample compression metrics and their summaries.

use std::io::Write;

use crate::codec::{compression_ratio, format_ratio, Codec, CompressedBlob};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::knn::KnnTable;
use crate::network::{reconstruct, ModelParams, NetworkSpec};
use crate::objective::l0_count;

pub const HISTOGRAM_BINS: usize = 50;

/// Euclidean norm of `x - x_hat`.
pub fn recon_error(x: &[f64], x_hat: &[f64]) -> Result<f64> {
    if x.len() != x_hat.len() {
        return Err(Error::Dimension(format!(
            "lengths {} and {} differ",
            x.len(),
            x_hat.len()
        )));
    }
    Ok(x.iter().zip(x_hat).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleRow {
    pub index: usize,
    /// Error after the full compress/decompress round trip.
    pub error: f64,
    /// Error of the plain network reconstruction, without thresholding or
    /// weight quantisation.
    pub network_error: f64,
    /// `l0(f(z), τ)`.
    pub l0: usize,
    /// Entries stored in the blob.
    pub nnz: usize,
    pub ratio: f64,
    pub blob_bytes: usize,
    pub coded_index_bytes: usize,
}

/// Fixed-width bins over `[lo, hi]`; the last bin is closed on the right.
#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn new(values: &[f64], bins: usize) -> Self {
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut counts = vec![0; bins];
        if values.is_empty() {
            return Histogram {
                lo: 0.0,
                hi: 0.0,
                counts,
            };
        }
        let width = (hi - lo) / bins as f64;
        for &v in values {
            let b = if width > 0.0 {
                (((v - lo) / width) as usize).min(bins - 1)
            } else {
                0
            };
            counts[b] += 1;
        }
        Histogram { lo, hi, counts }
    }

    /// Left edge of bin `i` (`i == bins` gives the right edge of the last).
    pub fn edge(&self, i: usize) -> f64 {
        self.lo + (self.hi - self.lo) * i as f64 / self.counts.len() as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub histogram: Histogram,
}

impl Summary {
    /// Summary of the finite entries of `values`.
    pub fn of(values: &[f64]) -> Self {
        let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
        let count = finite.len();
        Summary {
            count,
            mean: finite.iter().sum::<f64>() / count.max(1) as f64,
            min: finite.iter().copied().fold(f64::INFINITY, f64::min),
            max: finite.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            histogram: Histogram::new(&finite, HISTOGRAM_BINS),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub n: usize,
    pub tau: f64,
    pub rows: Vec<SampleRow>,
    pub error: Summary,
    pub network_error: Summary,
    pub l0: Summary,
    /// Over samples with at least one stored entry; see `empty_codes`.
    pub ratio: Summary,
    pub blob_bytes: Summary,
    /// Samples whose code stores nothing (ratio `n:0`).
    pub empty_codes: usize,
    pub knn: Option<KnnTable>,
}

impl EvalReport {
    pub fn from_rows(n: usize, tau: f64, rows: Vec<SampleRow>) -> Self {
        let col = |f: fn(&SampleRow) -> f64| rows.iter().map(f).collect::<Vec<_>>();
        EvalReport {
            n,
            tau,
            error: Summary::of(&col(|r| r.error)),
            network_error: Summary::of(&col(|r| r.network_error)),
            l0: Summary::of(&col(|r| r.l0 as f64)),
            ratio: Summary::of(&col(|r| r.ratio)),
            blob_bytes: Summary::of(&col(|r| r.blob_bytes as f64)),
            empty_codes: rows.iter().filter(|r| r.nnz == 0).count(),
            rows,
            knn: None,
        }
    }

    pub fn total_nnz(&self) -> usize {
        self.rows.iter().map(|r| r.nnz).sum()
    }

    /// All blob bytes over `nnz × (8 + 2)` bytes.
    pub fn bit_ratio(&self) -> f64 {
        let bytes: usize = self.rows.iter().map(|r| r.blob_bytes).sum();
        bytes as f64 / (self.total_nnz() * 10) as f64
    }

    /// Coded index bytes over `nnz × 8` bytes.
    pub fn index_stream_ratio(&self) -> f64 {
        let bytes: usize = self.rows.iter().map(|r| r.coded_index_bytes).sum();
        bytes as f64 / (self.total_nnz() * 8) as f64
    }

    pub const SAMPLES_CSV_HEADER: &'static str =
        "index,error,network_error,l0,nnz,ratio,ratio_display,blob_bytes,coded_index_bytes";

    pub fn write_samples_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", Self::SAMPLES_CSV_HEADER)?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                r.index,
                r.error,
                r.network_error,
                r.l0,
                r.nnz,
                r.ratio,
                format_ratio(self.n, r.nnz),
                r.blob_bytes,
                r.coded_index_bytes
            )?;
        }
        Ok(())
    }

    pub const SUMMARY_CSV_HEADER: &'static str = "metric,count,mean,min,max";

    pub fn write_summary_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", Self::SUMMARY_CSV_HEADER)?;
        for (name, s) in self.summaries() {
            writeln!(w, "{name},{},{},{},{}", s.count, s.mean, s.min, s.max)?;
        }
        Ok(())
    }

    pub const HISTOGRAM_CSV_HEADER: &'static str = "metric,bin,left_edge,right_edge,count";

    pub fn write_histograms_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", Self::HISTOGRAM_CSV_HEADER)?;
        for (name, s) in self.summaries() {
            let h = &s.histogram;
            for (i, c) in h.counts.iter().enumerate() {
                writeln!(w, "{name},{i},{},{},{c}", h.edge(i), h.edge(i + 1))?;
            }
        }
        Ok(())
    }

    fn summaries(&self) -> [(&'static str, &Summary); 5] {
        [
            ("error", &self.error),
            ("network_error", &self.network_error),
            ("l0", &self.l0),
            ("ratio", &self.ratio),
            ("blob_bytes", &self.blob_bytes),
        ]
    }
}

/// Blobs and report for every sample of `dataset`, in sample order.
pub fn evaluate_with_blobs(
    dataset: &Dataset,
    params: &ModelParams,
    spec: &NetworkSpec,
    tau: f64,
) -> Result<(Vec<CompressedBlob>, EvalReport)> {
    params.check_shapes(spec)?;
    if dataset.dim() != spec.n {
        return Err(Error::Dimension(format!(
            "dataset has dimension {}, network expects {}",
            dataset.dim(),
            spec.n
        )));
    }
    let codec = Codec::with_tau(tau);
    let selector = spec.selector();
    let all: Vec<usize> = (0..dataset.len()).collect();
    let mut blobs = Vec::with_capacity(dataset.len());
    let mut rows = Vec::with_capacity(dataset.len());
    for chunk in all.chunks(512) {
        let x = dataset.batch(chunk);
        let z = crate::network::encode(&x, params)?;
        let plain = reconstruct(&x, params)?;
        let chunk_blobs = codec.compress_batch(&x, params, spec)?;
        let x_hat = codec.decompress_batch(&chunk_blobs, params)?;
        for (j, (&i, blob)) in chunk.iter().zip(&chunk_blobs).enumerate() {
            let xi = dataset.sample(i);
            rows.push(SampleRow {
                index: i,
                error: recon_error(xi, &x_hat.column(j))?,
                network_error: recon_error(xi, &plain.column(j))?,
                l0: l0_count(&selector.apply(&z.column(j))?, tau),
                nnz: blob.nnz(),
                ratio: compression_ratio(spec.n, blob.nnz()),
                blob_bytes: blob.byte_len(),
                coded_index_bytes: blob.coded.len(),
            });
        }
        blobs.extend(chunk_blobs);
    }
    Ok((blobs, EvalReport::from_rows(spec.n, tau, rows)))
}

/// Compresses and decompresses every sample and summarises the results.
pub fn evaluate(dataset: &Dataset, params: &ModelParams, spec: &NetworkSpec, tau: f64) -> Result<EvalReport> {
    Ok(evaluate_with_blobs(dataset, params, spec, tau)?.1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recon_error_examples() {
        assert_eq!(recon_error(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(recon_error(&[3.0, 4.0], &[0.0, 0.0]).unwrap(), 5.0);
        assert!(recon_error(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn histogram_edges_and_counts() {
        let v: Vec<f64> = (0..=100).map(|i| i as f64).collect();
        let h = Histogram::new(&v, 50);
        assert_eq!(h.counts.iter().sum::<usize>(), 101);
        assert_eq!(h.counts[0], 2);
        assert_eq!(h.counts[49], 3);
        assert_eq!(h.edge(0), 0.0);
        assert_eq!(h.edge(50), 100.0);
        let flat = Histogram::new(&[2.0; 7], 50);
        assert_eq!(flat.counts[0], 7);
    }

    #[test]
    fn summary_skips_infinite_ratios() {
        let s = Summary::of(&[2.0, f64::INFINITY, 4.0]);
        assert_eq!(s.count, 2);
        assert_eq!(s.mean, 3.0);
        assert_eq!(s.max, 4.0);
    }

    #[test]
    fn aggregates_match_rows() {
        let rows: Vec<SampleRow> = (0..20)
            .map(|i| SampleRow {
                index: i,
                error: 0.1 * i as f64,
                network_error: 0.05 * i as f64,
                l0: i % 4,
                nnz: i % 4,
                ratio: compression_ratio(16, i % 4),
                blob_bytes: 60 + i,
                coded_index_bytes: 5 + i % 3,
            })
            .collect();
        let r = EvalReport::from_rows(16, 1e-5, rows);
        assert_eq!(r.empty_codes, 5);
        assert_eq!(r.ratio.count, 15);
        let mean_err = r.rows.iter().map(|x| x.error).sum::<f64>() / 20.0;
        assert!((r.error.mean - mean_err).abs() <= 1e-12 * mean_err);
        assert_eq!(r.total_nnz(), 5 * (1 + 2 + 3));
        let mut csv = Vec::new();
        r.write_samples_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(text.lines().count(), 21);
        assert!(text.lines().nth(1).unwrap().contains("16:0"));
    }
}
