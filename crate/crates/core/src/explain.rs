//! LIME-style local explanations for binary text predictors.
//!
//! A text becomes a bag of distinct-token presence features. Perturbed copies
//! drop random subsets of those tokens, the predictor scores every copy, and a
//! proximity-weighted ridge regression of the scores on the masks yields one
//! signed weight per token. Positive weights push toward Hate.

use std::collections::HashMap;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textprep::{preprocess, PipelineConfig, TokenSequence};

/// A tokenized text viewed as binary presence features over its distinct tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterpretableInstance {
    tokens: Vec<String>,
    features: Vec<String>,
    /// Feature index of every token position.
    position_feature: Vec<usize>,
}

impl InterpretableInstance {
    pub fn new(seq: &TokenSequence) -> Self {
        let mut lookup: HashMap<&str, usize> = HashMap::new();
        let mut features = Vec::new();
        let mut position_feature = Vec::with_capacity(seq.len());
        for tok in seq.tokens() {
            let idx = *lookup.entry(tok.as_str()).or_insert_with(|| {
                features.push(tok.clone());
                features.len() - 1
            });
            position_feature.push(idx);
        }
        InterpretableInstance {
            tokens: seq.tokens().to_vec(),
            features,
            position_feature,
        }
    }

    pub fn from_text(text: &str, pipeline: &PipelineConfig) -> Self {
        Self::new(&preprocess(text, pipeline))
    }

    /// Distinct tokens in order of first occurrence.
    pub fn features(&self) -> &[String] {
        &self.features
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn num_features(&self) -> usize {
        self.features.len()
    }

    /// Original token positions of feature `j`.
    pub fn positions(&self, j: usize) -> Vec<usize> {
        self.position_feature
            .iter()
            .enumerate()
            .filter(|&(_, &f)| f == j)
            .map(|(i, _)| i)
            .collect()
    }

    /// Text keeping only the tokens whose feature is switched on.
    pub fn reconstruct(&self, mask: &[bool]) -> Result<String> {
        if mask.len() != self.features.len() {
            return Err(Error::ShapeMismatch(format!(
                "mask has {} entries for {} features",
                mask.len(),
                self.features.len()
            )));
        }
        let kept: Vec<&str> = self
            .tokens
            .iter()
            .zip(&self.position_feature)
            .filter(|&(_, &f)| mask[f])
            .map(|(t, _)| t.as_str())
            .collect();
        Ok(kept.join(" "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Perturbation {
    pub mask: Vec<bool>,
    pub text: String,
}

/// Draws `n_samples` perturbations. The first is always the unmodified
/// instance; each other removes a uniformly drawn number (1..=F) of features.
pub fn perturb(
    instance: &InterpretableInstance,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<Perturbation>> {
    let f = instance.num_features();
    if f == 0 {
        return Err(Error::EmptyInput("instance has no features".into()));
    }
    if n_samples < 2 {
        return Err(Error::InvalidConfig("n_samples must be at least 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n_samples);
    let full = vec![true; f];
    out.push(Perturbation {
        text: instance.reconstruct(&full)?,
        mask: full,
    });
    for _ in 1..n_samples {
        let remove = rng.gen_range(1..=f);
        let mut mask = vec![true; f];
        for j in sample(&mut rng, f, remove) {
            mask[j] = false;
        }
        out.push(Perturbation {
            text: instance.reconstruct(&mask)?,
            mask,
        });
    }
    Ok(out)
}

/// Cosine distance between `mask` and the all-ones vector; 1 for the all-zero mask.
pub fn mask_distance(mask: &[bool]) -> Result<f64> {
    if mask.is_empty() {
        return Err(Error::EmptyInput("empty mask".into()));
    }
    let on = mask.iter().filter(|&&b| b).count();
    Ok(1.0 - (on as f64 / mask.len() as f64).sqrt())
}

/// Proximity weight `exp(-D²/σ²)`.
pub fn kernel_weight(mask: &[bool], sigma: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidConfig(format!("kernel width must be positive, got {sigma}")));
    }
    let d = mask_distance(mask)?;
    Ok((-(d * d) / (sigma * sigma)).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LimeConfig {
    pub n_samples: usize,
    pub k: usize,
    pub sigma: f64,
    pub lambda: f64,
    pub seed: u64,
}

impl Default for LimeConfig {
    fn default() -> Self {
        LimeConfig {
            n_samples: 1000,
            k: 6,
            sigma: 25.0,
            lambda: 1.0,
            seed: 1,
        }
    }
}

impl LimeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 2 {
            return Err(Error::InvalidConfig("n_samples must be at least 2".into()));
        }
        if self.k < 1 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidConfig("sigma must be positive".into()));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidConfig("lambda must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenWeight {
    pub token: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    /// Preprocessed tokens of the explained text, in order.
    pub tokens: Vec<String>,
    /// Top features by |weight|, strongest first.
    pub weights: Vec<TokenWeight>,
    pub intercept: f64,
    /// Weighted R² of the surrogate on the perturbation sample.
    pub score: f64,
    /// Predictor output on the unmodified text.
    pub prediction: f64,
    pub n_samples: usize,
    pub seed: u64,
}

/// Weighted ridge fit of `probs` on `masks` with an unpenalized intercept.
/// Returns `(coefficients, intercept, weighted R²)`.
pub fn ridge(
    masks: &[Vec<bool>],
    weights: &[f64],
    probs: &[f64],
    lambda: f64,
) -> Result<(Vec<f64>, f64, f64)> {
    let n = masks.len();
    if n < 2 {
        return Err(Error::EmptyInput("at least two samples are required".into()));
    }
    if weights.len() != n || probs.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "{n} masks, {} weights, {} probabilities",
            weights.len(),
            probs.len()
        )));
    }
    let f = masks[0].len();
    if f == 0 || masks.iter().any(|m| m.len() != f) {
        return Err(Error::ShapeMismatch("masks must share a non-zero width".into()));
    }
    if masks.iter().all(|m| *m == masks[0]) {
        return Err(Error::Degenerate("all masks are identical".into()));
    }
    if weights.iter().chain(probs).any(|x| !x.is_finite()) || weights.iter().any(|&w| w < 0.0) {
        return Err(Error::NonFinite("weights and probabilities must be finite".into()));
    }
    let wsum: f64 = weights.iter().sum();
    if wsum <= 0.0 {
        return Err(Error::Degenerate("kernel weights sum to zero".into()));
    }

    let x = DMatrix::from_fn(n, f, |i, j| if masks[i][j] { 1.0 } else { 0.0 });
    let xbar: Vec<f64> = (0..f)
        .map(|j| (0..n).map(|i| weights[i] * x[(i, j)]).sum::<f64>() / wsum)
        .collect();
    let ybar = weights.iter().zip(probs).map(|(w, y)| w * y).sum::<f64>() / wsum;

    let xc = DMatrix::from_fn(n, f, |i, j| (x[(i, j)] - xbar[j]) * weights[i].sqrt());
    let yc = DVector::from_fn(n, |i, _| (probs[i] - ybar) * weights[i].sqrt());
    let mut gram = xc.transpose() * &xc;
    for j in 0..f {
        gram[(j, j)] += lambda;
    }
    let rhs = xc.transpose() * &yc;
    let beta = gram
        .clone()
        .cholesky()
        .map(|c| c.solve(&rhs))
        .or_else(|| gram.lu().solve(&rhs))
        .ok_or_else(|| Error::Degenerate("singular ridge system".into()))?;
    let coef: Vec<f64> = beta.iter().copied().collect();
    let intercept = ybar - xbar.iter().zip(&coef).map(|(m, b)| m * b).sum::<f64>();

    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for i in 0..n {
        let fit = intercept
            + (0..f)
                .filter(|&j| masks[i][j])
                .map(|j| coef[j])
                .sum::<f64>();
        ss_res += weights[i] * (probs[i] - fit).powi(2);
        ss_tot += weights[i] * (probs[i] - ybar).powi(2);
    }
    let score = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    if coef.iter().any(|c| !c.is_finite()) || !intercept.is_finite() {
        return Err(Error::NonFinite("ridge solution".into()));
    }
    Ok((coef, intercept, score))
}

/// Fits the surrogate and keeps the `k` features with the largest |coefficient|
/// (ties broken by first occurrence).
pub fn fit_local(
    instance: &InterpretableInstance,
    masks: &[Vec<bool>],
    kernel_weights: &[f64],
    probabilities: &[f64],
    k: usize,
    lambda: f64,
) -> Result<Explanation> {
    if k < 1 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    if masks.first().is_some_and(|m| m.len() != instance.num_features()) {
        return Err(Error::ShapeMismatch("mask width differs from feature count".into()));
    }
    let (coef, intercept, score) = ridge(masks, kernel_weights, probabilities, lambda)?;
    let mut order: Vec<usize> = (0..coef.len()).collect();
    order.sort_by(|&a, &b| coef[b].abs().total_cmp(&coef[a].abs()).then(a.cmp(&b)));
    let weights = order
        .into_iter()
        .take(k)
        .map(|j| TokenWeight {
            token: instance.features()[j].clone(),
            weight: coef[j],
        })
        .collect();
    Ok(Explanation {
        tokens: instance.tokens().to_vec(),
        weights,
        intercept,
        score,
        prediction: probabilities[0],
        n_samples: masks.len(),
        seed: 0,
    })
}

/// Explains `predictor` around `text`. The predictor receives whitespace-joined
/// token strings and must return one probability per input.
pub fn explain(
    predictor: &dyn Fn(&[String]) -> Vec<f64>,
    text: &str,
    pipeline: &PipelineConfig,
    config: &LimeConfig,
) -> Result<Explanation> {
    config.validate()?;
    let instance = InterpretableInstance::from_text(text, pipeline);
    if instance.num_features() == 0 {
        return Err(Error::EmptyInput("text has no tokens after preprocessing".into()));
    }
    let samples = perturb(&instance, config.n_samples, config.seed)?;
    let texts: Vec<String> = samples.iter().map(|s| s.text.clone()).collect();
    let probs = predictor(&texts);
    if probs.len() != texts.len() {
        return Err(Error::ShapeMismatch(format!(
            "predictor returned {} scores for {} texts",
            probs.len(),
            texts.len()
        )));
    }
    if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::Range(format!("predictor returned {p}")));
    }
    let masks: Vec<Vec<bool>> = samples.into_iter().map(|s| s.mask).collect();
    let weights = masks
        .iter()
        .map(|m| kernel_weight(m, config.sigma))
        .collect::<Result<Vec<_>>>()?;
    let mut out = fit_local(&instance, &masks, &weights, &probs, config.k, config.lambda)?;
    out.seed = config.seed;
    Ok(out)
}

impl Explanation {
    pub fn weight_of(&self, token: &str) -> Option<f64> {
        self.weights.iter().find(|w| w.token == token).map(|w| w.weight)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Static page highlighting each reported token: red toward Hate, blue
    /// toward NonHate, opacity proportional to |weight|.
    pub fn to_html(&self, title: &str) -> String {
        let max = self
            .weights
            .iter()
            .map(|w| w.weight.abs())
            .fold(0.0f64, f64::max);
        let alpha = |w: f64| if max > 0.0 { w.abs() / max } else { 0.0 };
        let color = |w: f64| {
            let (r, g, b) = if w >= 0.0 { (220, 40, 40) } else { (40, 90, 220) };
            format!("rgba({r},{g},{b},{:.3})", alpha(w))
        };

        let mut html = String::new();
        let _ = writeln!(html, "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\">");
        let _ = writeln!(html, "<title>{}</title>", escape(title));
        let _ = writeln!(
            html,
            "<style>body{{font-family:sans-serif;margin:2em}}span.t{{padding:2px 4px;margin:1px;border-radius:3px;display:inline-block}}table{{border-collapse:collapse}}td,th{{padding:2px 10px;text-align:left}}</style>"
        );
        let _ = writeln!(html, "</head><body>\n<h1>{}</h1>", escape(title));
        let _ = writeln!(
            html,
            "<p>P(hate) = {:.4}; intercept {:.4}; local fit R&sup2; {:.4}; {} samples, seed {}</p>",
            self.prediction, self.intercept, self.score, self.n_samples, self.seed
        );
        html.push_str("<p>");
        for tok in &self.tokens {
            match self.weight_of(tok) {
                Some(w) => {
                    let _ = write!(
                        html,
                        "<span class=\"t\" style=\"background:{}\" title=\"{:+.4}\">{}</span> ",
                        color(w),
                        w,
                        escape(tok)
                    );
                }
                None => {
                    let _ = write!(html, "<span class=\"t\">{}</span> ", escape(tok));
                }
            }
        }
        html.push_str("</p>\n<table><tr><th>token</th><th>weight</th><th>toward</th></tr>\n");
        for w in &self.weights {
            let _ = writeln!(
                html,
                "<tr><td style=\"background:{}\">{}</td><td>{:+.4}</td><td>{}</td></tr>",
                color(w.weight),
                escape(&w.token),
                w.weight,
                if w.weight >= 0.0 { "hate" } else { "non-hate" }
            );
        }
        html.push_str("</table>\n</body></html>\n");
        html
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            _ => out.push(c),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq(words: &str) -> TokenSequence {
        TokenSequence::from(words.split_whitespace().map(String::from).collect::<Vec<_>>())
    }

    fn keyword_oracle(word: &'static str) -> impl Fn(&[String]) -> Vec<f64> {
        move |texts| {
            texts
                .iter()
                .map(|t| {
                    let present = t.split_whitespace().any(|w| w == word);
                    1.0 / (1.0 + (-(4.0 * f64::from(u8::from(present)) - 2.0)).exp())
                })
                .collect()
        }
    }

    #[test]
    fn distinct_features_and_positions() {
        let inst = InterpretableInstance::new(&seq("you are scum total scum"));
        assert_eq!(inst.features(), ["you", "are", "scum", "total"]);
        assert_eq!(inst.positions(2), vec![2, 4]);
        assert_eq!(
            inst.reconstruct(&[true, false, true, true]).unwrap(),
            "you scum total scum"
        );
    }

    #[test]
    fn single_feature_is_exhaustive() {
        let inst = InterpretableInstance::new(&seq("hello"));
        let p = perturb(&inst, 2, 3).unwrap();
        assert_eq!(p[0].mask, vec![true]);
        assert_eq!(p[1].mask, vec![false]);
        assert_eq!(p[1].text, "");
    }

    #[test]
    fn perturb_contract() {
        let inst = InterpretableInstance::new(&seq("a b c d e a"));
        let p = perturb(&inst, 50, 9).unwrap();
        assert_eq!(p.len(), 50);
        assert_eq!(p[0].text, "a b c d e a");
        assert!(p[1..].iter().all(|s| s.mask.iter().any(|b| !b)));
        assert_eq!(p, perturb(&inst, 50, 9).unwrap());
        assert!(perturb(&inst, 1, 9).is_err());
        let empty = InterpretableInstance::new(&seq(""));
        assert!(matches!(perturb(&empty, 10, 0), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn kernel_values() {
        assert_eq!(kernel_weight(&[true; 4], 25.0).unwrap(), 1.0);
        let zero = kernel_weight(&[false; 4], 25.0).unwrap();
        assert!((zero - (-1.0f64 / 625.0).exp()).abs() < 1e-15);
        assert!((zero - 0.9984).abs() < 1e-4);
        assert!(kernel_weight(&[], 25.0).is_err());
        // nested chain: removing features never increases the weight
        let mut mask = vec![true; 7];
        let mut prev = kernel_weight(&mask, 25.0).unwrap();
        for j in 0..7 {
            mask[j] = false;
            let w = kernel_weight(&mask, 25.0).unwrap();
            assert!(w <= prev);
            prev = w;
        }
    }

    /// Closed-form 2-feature weighted ridge, solved independently by Cramer's rule.
    #[test]
    fn linear_target_matches_closed_form() {
        let masks = vec![
            vec![true, true],
            vec![false, true],
            vec![true, false],
            vec![false, false],
            vec![true, true],
        ];
        let w = [1.0, 0.5, 0.8, 0.3, 0.9];
        let y: Vec<f64> = masks.iter().map(|m| 0.2 + 0.6 * f64::from(u8::from(m[0]))).collect();
        let lambda = 0.7;
        let (coef, b0, _) = ridge(&masks, &w, &y, lambda).unwrap();

        let ws: f64 = w.iter().sum();
        let x = |i: usize, j: usize| f64::from(u8::from(masks[i][j]));
        let m = [0, 1].map(|j| (0..5).map(|i| w[i] * x(i, j)).sum::<f64>() / ws);
        let ym = (0..5).map(|i| w[i] * y[i]).sum::<f64>() / ws;
        let s = |a: usize, b: usize| {
            (0..5).map(|i| w[i] * (x(i, a) - m[a]) * (x(i, b) - m[b])).sum::<f64>()
        };
        let t = |a: usize| (0..5).map(|i| w[i] * (x(i, a) - m[a]) * (y[i] - ym)).sum::<f64>();
        let (a11, a12, a22) = (s(0, 0) + lambda, s(0, 1), s(1, 1) + lambda);
        let det = a11 * a22 - a12 * a12;
        let b1 = (t(0) * a22 - a12 * t(1)) / det;
        let b2 = (a11 * t(1) - a12 * t(0)) / det;
        assert!((coef[0] - b1).abs() < 1e-12);
        assert!((coef[1] - b2).abs() < 1e-12);
        assert!((b0 - (ym - m[0] * b1 - m[1] * b2)).abs() < 1e-12);

        let inst = InterpretableInstance::new(&seq("x y"));
        let e = fit_local(&inst, &masks, &w, &y, 1, lambda).unwrap();
        assert_eq!(e.weights.len(), 1);
        assert_eq!(e.weights[0].token, "x");
        assert!(e.weights[0].weight > 0.0);
    }

    #[test]
    fn constant_target_gives_zero_coefficients() {
        let inst = InterpretableInstance::new(&seq("p q r"));
        let samples = perturb(&inst, 40, 2).unwrap();
        let masks: Vec<_> = samples.into_iter().map(|s| s.mask).collect();
        let w: Vec<f64> = masks.iter().map(|m| kernel_weight(m, 25.0).unwrap()).collect();
        let e = fit_local(&inst, &masks, &w, &[0.37; 40], 10, 1.0).unwrap();
        assert_eq!(e.weights.len(), 3);
        assert!(e.weights.iter().all(|t| t.weight.abs() < 1e-8));
        assert!((e.intercept - 0.37).abs() < 1e-12);
    }

    #[test]
    fn identical_masks_are_degenerate() {
        let inst = InterpretableInstance::new(&seq("p q"));
        let masks = vec![vec![true, false]; 5];
        let err = fit_local(&inst, &masks, &[1.0; 5], &[0.5; 5], 2, 1.0).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)));
    }

    #[test]
    fn keyword_oracle_ranks_keyword_first() {
        let pipeline = PipelineConfig::default();
        let text = "you people are scum and should leave this country now";
        let cfg = LimeConfig {
            seed: 11,
            ..Default::default()
        };
        let e = explain(&keyword_oracle("scum"), text, &pipeline, &cfg).unwrap();
        assert_eq!(e.weights[0].token, "scum");
        assert!(e.weights[0].weight > 0.0);
        assert!(e.weights.len() <= cfg.k);
        assert_eq!(e, explain(&keyword_oracle("scum"), text, &pipeline, &cfg).unwrap());
    }

    #[test]
    fn constant_predictor_gives_negligible_weights() {
        let e = explain(
            &|t: &[String]| vec![0.8; t.len()],
            "nothing here matters at all really",
            &PipelineConfig::default(),
            &LimeConfig::default(),
        )
        .unwrap();
        assert!(e.weights.iter().all(|t| t.weight.abs() < 1e-6));
    }

    #[test]
    fn explain_rejects_empty_text_and_bad_predictors() {
        let p = PipelineConfig::default();
        let c = LimeConfig::default();
        assert!(matches!(
            explain(&|t: &[String]| vec![0.5; t.len()], "the a an", &p, &c),
            Err(Error::EmptyInput(_))
        ));
        assert!(matches!(
            explain(&|_: &[String]| vec![0.5], "hello world", &p, &c),
            Err(Error::ShapeMismatch(_))
        ));
        assert!(matches!(
            explain(&|t: &[String]| vec![1.5; t.len()], "hello world", &p, &c),
            Err(Error::Range(_))
        ));
    }

    #[test]
    fn html_escapes_and_colours() {
        let e = Explanation {
            tokens: vec!["<b>".into(), "ok".into()],
            weights: vec![
                TokenWeight { token: "<b>".into(), weight: 0.4 },
                TokenWeight { token: "ok".into(), weight: -0.2 },
            ],
            intercept: 0.1,
            score: 0.9,
            prediction: 0.7,
            n_samples: 10,
            seed: 3,
        };
        let html = e.to_html("demo & test");
        assert!(html.contains("&lt;b&gt;"));
        assert!(html.contains("demo &amp; test"));
        assert!(html.contains("rgba(220,40,40,1.000)"));
        assert!(html.contains("rgba(40,90,220,0.500)"));
        let back: Explanation = serde_json::from_str(&e.to_json().unwrap()).unwrap();
        assert_eq!(back, e);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]

        #[test]
        fn monotone_keyword_gets_nonnegative_weight(
            seed in any::<u64>(),
            n_words in 2usize..9,
            target in 0usize..8,
            slope in 0.1f64..6.0,
            offset in -3.0f64..3.0,
            others in prop::collection::vec(-2.0f64..2.0, 8),
        ) {
            let words: Vec<String> = (0..n_words).map(|i| format!("w{i}")).collect();
            let target = target % n_words;
            let key = words[target].clone();
            let predictor = |texts: &[String]| -> Vec<f64> {
                texts.iter().map(|t| {
                    let mut z = offset;
                    for (i, w) in words.iter().enumerate() {
                        if t.split_whitespace().any(|x| x == w) {
                            z += if i == target { slope } else { others[i] };
                        }
                    }
                    1.0 / (1.0 + (-z).exp())
                }).collect()
            };
            let cfg = LimeConfig { seed, n_samples: 300, k: n_words, ..Default::default() };
            let e = explain(&predictor, &words.join(" "), &PipelineConfig::default().with_stopwords(Vec::<String>::new()), &cfg).unwrap();
            prop_assert!(e.weight_of(&key).unwrap() >= 0.0);
            let feats: Vec<&str> = words.iter().map(String::as_str).collect();
            prop_assert!(e.weights.iter().all(|w| feats.contains(&w.token.as_str())));
        }
    }
}
