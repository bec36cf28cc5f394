use crate::error::{Error, Result};
use crate::tensor::Tensor;

fn check_labels(k: usize, labels: &[usize], n: usize) -> Result<()> {
    if labels.len() != n {
        return Err(Error::shape(format!("{n} logit rows but {} labels", labels.len())));
    }
    if let Some(&bad) = labels.iter().find(|&&y| y >= k) {
        return Err(Error::argument(format!("label {bad} out of range for {k} classes")));
    }
    Ok(())
}

/// Per-sample cross-entropy of softmax(logits) via max-shifted log-sum-exp.
pub fn cross_entropy_per_sample(logits: &Tensor, labels: &[usize]) -> Result<Vec<f64>> {
    let (n, k) = logits.dims2()?;
    check_labels(k, labels, n)?;
    Ok(logits
        .data()
        .chunks_exact(k)
        .zip(labels)
        .map(|(row, &y)| {
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            lse - row[y]
        })
        .collect())
}

/// Batch-mean cross-entropy and its gradient `(softmax - onehot) / N`.
pub fn softmax_cross_entropy(logits: &Tensor, labels: &[usize]) -> Result<(f64, Tensor)> {
    let (n, k) = logits.dims2()?;
    check_labels(k, labels, n)?;
    if n == 0 {
        return Err(Error::argument("empty batch".to_string()));
    }
    let mut loss = 0.0;
    let mut grad = vec![0.0; n * k];
    for ((row, g), &y) in logits.data().chunks_exact(k).zip(grad.chunks_exact_mut(k)).zip(labels) {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for (gi, v) in g.iter_mut().zip(row) {
            *gi = (v - max).exp();
            sum += *gi;
        }
        loss += max + sum.ln() - row[y];
        for gi in g.iter_mut() {
            *gi /= sum * n as f64;
        }
        g[y] -= 1.0 / n as f64;
    }
    Ok((loss / n as f64, Tensor::new(vec![n, k], grad)?))
}
