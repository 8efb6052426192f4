//! Synthetic data shared by the integration tests.
#![allow(dead_code)]

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use hatescan::corpus::{Label, LabeledExample};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const KEYWORDS: [&str; 5] = ["scum", "vermin", "subhuman", "filth", "parasites"];

/// `n` short texts of filler words; about half contain one or two of
/// [`KEYWORDS`], and exactly those are labelled Hate.
pub fn keyword_dataset(n: usize, seed: u64) -> Vec<LabeledExample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fillers: Vec<String> = (0..300).map(|i| format!("word{i}")).collect();
    (0..n)
        .map(|i| {
            let len = rng.gen_range(5..=14);
            let mut words: Vec<&str> = (0..len)
                .map(|_| fillers.choose(&mut rng).unwrap().as_str())
                .collect();
            let hate = rng.gen_bool(0.5);
            if hate {
                for _ in 0..rng.gen_range(1..=2) {
                    let pos = rng.gen_range(0..words.len());
                    words[pos] = KEYWORDS.choose(&mut rng).unwrap();
                }
            }
            let label = if hate { Label::Hate } else { Label::NonHate };
            LabeledExample {
                id: format!("kw-{i:05}"),
                text: words.join(" "),
                raw_label: label.as_str().to_string(),
                binary_label: Some(label),
            }
        })
        .collect()
}

/// Writes a CSV with `counts[(raw_label, n)]` rows in the column layout of the
/// Davidson et al. release (`class` codes, `tweet` text).
pub fn write_davidson_like(path: &Path, counts: &[(&str, usize)], seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<&str> = counts
        .iter()
        .flat_map(|&(label, n)| std::iter::repeat_n(label, n))
        .collect();
    rows.shuffle(&mut rng);
    let mut out = String::from(",count,hate_speech,offensive_language,neither,class,tweet\n");
    for (i, class) in rows.iter().enumerate() {
        let votes = match *class {
            "0" => "3,3,0,0",
            "1" => "3,0,3,0",
            _ => "3,0,0,3",
        };
        let _ = writeln!(out, "{i},{votes},{class},\"!!! RT @user{i}: tweet number {i} &amp; more\"");
    }
    fs::write(path, out).unwrap();
}

/// Writes a `text,label` CSV in the style of the Waseem annotations.
pub fn write_waseem_like(path: &Path, counts: &[(&str, usize)], seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<&str> = counts
        .iter()
        .flat_map(|&(label, n)| std::iter::repeat_n(label, n))
        .collect();
    rows.shuffle(&mut rng);
    let mut out = String::from("tweet_id,text,label\n");
    for (i, label) in rows.iter().enumerate() {
        let _ = writeln!(out, "{},\"tweet {i}, with a comma\",{label}", 500_000_000_000u64 + i as u64);
    }
    fs::write(path, out).unwrap();
}
