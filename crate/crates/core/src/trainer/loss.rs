//! InfoNCE over cosine similarities and its analytic gradient through the
//! linear model.

use crate::error::{Error, Result};
use crate::similarity::cosine_similarity;

use super::model::ToyEmbeddingModel;

/// `-log softmax(s / τ)[0]` where `s = [positive, negatives...]`.
pub fn info_nce_from_scores(positive: f64, negatives: &[f64], temperature: f64) -> Result<f64> {
    check_temperature(temperature)?;
    if negatives.is_empty() {
        return Err(Error::Config("InfoNCE needs at least one negative".into()));
    }
    let logits: Vec<f64> = std::iter::once(positive)
        .chain(negatives.iter().copied())
        .map(|s| s / temperature)
        .collect();
    Ok(log_sum_exp(&logits) - logits[0])
}

pub fn info_nce_loss<N: AsRef<[f64]>>(
    query: &[f64],
    positive: &[f64],
    negatives: &[N],
    temperature: f64,
) -> Result<f64> {
    check_temperature(temperature)?;
    let pos = cosine_similarity(query, positive)?;
    let negs = negatives
        .iter()
        .map(|n| cosine_similarity(query, n.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    info_nce_from_scores(pos, &negs, temperature)
}

fn check_temperature(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("temperature must be positive, got {t}")))
    }
}

pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Input feature vectors of one training example.
#[derive(Debug, Clone)]
pub struct FeatureRecord<'a> {
    pub query: &'a [f64],
    pub positive: &'a [f64],
    pub negatives: Vec<&'a [f64]>,
}

/// Loss and gradient with respect to the model weights (row-major, same
/// layout as [`ToyEmbeddingModel::weights`]).
#[derive(Debug, Clone, PartialEq)]
pub struct RecordGradient {
    pub loss: f64,
    pub grad: Vec<f64>,
    /// Gradient share flowing through the positive's similarity term.
    pub positive_contribution: Vec<f64>,
    /// Gradient share flowing through each negative's similarity term.
    pub negative_contributions: Vec<Vec<f64>>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm_or_err(v: &[f64], what: &str) -> Result<f64> {
    let n = dot(v, v).sqrt();
    if n == 0.0 || !n.is_finite() {
        Err(Error::Training(format!("degenerate {what} embedding (norm {n})")))
    } else {
        Ok(n)
    }
}

/// Loss of one record under `model`, without clamping the similarities.
pub fn record_loss(model: &ToyEmbeddingModel, record: &FeatureRecord, temperature: f64) -> Result<f64> {
    Ok(loss_gradient(model, record, temperature)?.loss)
}

/// Loss of one example given its embeddings, and the gradient of that loss
/// with respect to the query embedding and to each item embedding
/// (positive first, then negatives).
pub(crate) struct EmbeddingGradient {
    pub loss: f64,
    /// Per similarity term: (d loss / d e_q share, d loss / d e_item).
    pub terms: Vec<(Vec<f64>, Vec<f64>)>,
}

pub(crate) fn embedding_gradient(eq: &[f64], items: &[&[f64]], temperature: f64) -> Result<EmbeddingGradient> {
    let nq = norm_or_err(eq, "query")?;
    let mut norms = Vec::with_capacity(items.len());
    let mut sims = Vec::with_capacity(items.len());
    for (i, e) in items.iter().enumerate() {
        let n = norm_or_err(e, if i == 0 { "positive" } else { "negative" })?;
        sims.push(dot(eq, e) / (nq * n));
        norms.push(n);
    }
    let logits: Vec<f64> = sims.iter().map(|s| s / temperature).collect();
    let lse = log_sum_exp(&logits);
    let loss = lse - logits[0];

    let terms = items
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let p = (logits[i] - lse).exp();
            let g = (p - if i == 0 { 1.0 } else { 0.0 }) / temperature;
            let (s, n) = (sims[i], norms[i]);
            // g * d cos / d e_q and g * d cos / d e_i
            let dq = eq
                .iter()
                .zip(e.iter())
                .map(|(q, v)| g * (v / (nq * n) - s * q / (nq * nq)))
                .collect();
            let di = eq
                .iter()
                .zip(e.iter())
                .map(|(q, v)| g * (q / (nq * n) - s * v / (n * n)))
                .collect();
            (dq, di)
        })
        .collect();
    Ok(EmbeddingGradient { loss, terms })
}

/// Adds `scale * (a ⊗ x)` to a row-major `a.len() × x.len()` matrix.
pub(crate) fn add_outer(target: &mut [f64], a: &[f64], x: &[f64], scale: f64) {
    for (row, ai) in target.chunks_exact_mut(x.len()).zip(a) {
        let f = scale * ai;
        for (cell, xj) in row.iter_mut().zip(x) {
            *cell += f * xj;
        }
    }
}

pub fn loss_gradient(model: &ToyEmbeddingModel, record: &FeatureRecord, temperature: f64) -> Result<RecordGradient> {
    check_temperature(temperature)?;
    if record.negatives.is_empty() {
        return Err(Error::Config("InfoNCE needs at least one negative".into()));
    }
    let d_in = model.d_in();
    let inputs: Vec<&[f64]> = std::iter::once(record.positive)
        .chain(record.negatives.iter().copied())
        .collect();
    for x in std::iter::once(record.query).chain(inputs.iter().copied()) {
        if x.len() != d_in {
            return Err(Error::LengthMismatch(x.len(), d_in));
        }
    }

    let eq = model.embed(record.query);
    let embedded: Vec<Vec<f64>> = inputs.iter().map(|x| model.embed(x)).collect();
    let refs: Vec<&[f64]> = embedded.iter().map(Vec::as_slice).collect();
    let eg = embedding_gradient(&eq, &refs, temperature)?;

    let size = model.weights().len();
    let mut contributions = Vec::with_capacity(inputs.len());
    for ((dq, di), x) in eg.terms.iter().zip(&inputs) {
        let mut c = vec![0.0; size];
        add_outer(&mut c, dq, record.query, 1.0);
        add_outer(&mut c, di, x, 1.0);
        contributions.push(c);
    }
    let mut grad = vec![0.0; size];
    for c in &contributions {
        for (g, v) in grad.iter_mut().zip(c) {
            *g += v;
        }
    }
    let mut contributions = contributions.into_iter();
    let positive_contribution = contributions.next().unwrap_or_default();
    Ok(RecordGradient {
        loss: eg.loss,
        grad,
        positive_contribution,
        negative_contributions: contributions.collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn unit_at(cos: f64) -> [f64; 2] {
        [cos, (1.0 - cos * cos).sqrt()]
    }

    #[test]
    fn uniform_scores_give_log_k_plus_one() {
        let loss = info_nce_from_scores(0.3, &[0.3; 10], 0.07).unwrap();
        assert!((loss - 11f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn single_negative_closed_form() {
        let q = [1.0, 0.0];
        let loss = info_nce_loss(&q, &unit_at(0.9), &[unit_at(0.1)], 0.07).unwrap();
        let expected = (-0.8f64 / 0.07).exp().ln_1p();
        assert!(((loss - expected) / expected).abs() < 1e-8, "{loss} vs {expected}");
    }

    #[test]
    fn huge_temperature_tends_to_uniform() {
        let loss = info_nce_from_scores(0.9, &[0.1, -0.4, 0.7], 1e6).unwrap();
        assert!((loss - 4f64.ln()).abs() < 1e-6);
    }

    #[test]
    fn invalid_inputs() {
        assert!(info_nce_from_scores(0.1, &[0.2], 0.0).is_err());
        assert!(info_nce_from_scores(0.1, &[0.2], -1.0).is_err());
        assert!(info_nce_from_scores(0.1, &[], 0.07).is_err());
        assert!(matches!(
            info_nce_loss(&[1.0, 0.0], &[1.0], &[[1.0, 0.0]], 0.07),
            Err(Error::LengthMismatch(2, 1))
        ));
    }

    #[test]
    fn stable_for_extreme_logits() {
        let loss = info_nce_from_scores(-1.0, &[1.0], 1e-3).unwrap();
        assert!((loss - 2000.0).abs() < 1e-9);
    }

    #[test]
    fn stationary_at_minimum() {
        let identity = ToyEmbeddingModel::from_weights(3, 3, vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        let q = [0.3, -0.2, 0.9];
        let neg = [-0.3, 0.2, -0.9];
        let record = FeatureRecord {
            query: &q,
            positive: &q,
            negatives: vec![&neg; 5],
        };
        let g = loss_gradient(&identity, &record, 0.01).unwrap();
        let norm = g.grad.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(norm < 1e-6, "gradient norm {norm}");
    }

    #[test]
    fn duplicated_negative_contributes_twice() {
        let mut rng = crate::seed::rng(5);
        let model = ToyEmbeddingModel::random(4, 4, 9).unwrap();
        let v: Vec<Vec<f64>> = (0..3).map(|_| (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let record = FeatureRecord {
            query: &v[0],
            positive: &v[1],
            negatives: vec![&v[2], &v[2]],
        };
        let g = loss_gradient(&model, &record, 0.07).unwrap();
        assert_eq!(g.negative_contributions[0], g.negative_contributions[1]);
        for (i, total) in g.grad.iter().enumerate() {
            let expected = g.positive_contribution[i] + 2.0 * g.negative_contributions[0][i];
            assert!((total - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_embedding_is_degenerate() {
        let model = ToyEmbeddingModel::from_weights(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let zero = [0.0, 0.0];
        let x = [1.0, 0.0];
        let record = FeatureRecord {
            query: &x,
            positive: &zero,
            negatives: vec![&x],
        };
        assert!(matches!(loss_gradient(&model, &record, 0.07), Err(Error::Training(_))));
    }
}
