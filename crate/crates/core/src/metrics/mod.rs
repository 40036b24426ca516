//! Evaluation metrics: mean L1/L2 image distances and the classifier-based
//! similarity ratio with its top-5 relaxation.

pub mod classifier;

pub use classifier::{
    load_classifier, save_classifier, synth_texture_dataset, train_toy_classifier,
    ToyClassifier, TEXTURE_CLASS_NAMES,
};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// An evaluation map from an image to a fixed-length logits vector. Must be
/// pure: the same image always yields the same logits.
pub trait Classifier {
    fn num_classes(&self) -> usize;
    fn logits(&self, image: &Tensor) -> Result<Vec<f32>>;
}

/// Index of the largest logit; ties go to the smallest index.
pub fn argmax(logits: &[f32]) -> usize {
    let mut best = 0usize;
    for (i, &v) in logits.iter().enumerate().skip(1) {
        if v > logits[best] {
            best = i;
        }
    }
    best
}

/// Indices of the `k` largest logits, ordered by descending value with ties
/// by ascending index.
pub fn top_k(logits: &[f32], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..logits.len()).collect();
    order.sort_by(|&a, &b| {
        logits[b]
            .partial_cmp(&logits[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    order.truncate(k);
    order
}

/// Outcome of [`similarity_ratio`] over a batch of (output, truth) pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityReport {
    pub n: usize,
    /// Fraction of pairs whose predicted classes agree exactly.
    pub similarity: f64,
    /// Fraction where the output's class is in the truth's top 5.
    pub similarity5: f64,
    pub matches: Vec<bool>,
    pub matches5: Vec<bool>,
}

/// For each pair, compares `argmax(cn(output))` against the truth's argmax
/// (similarity) and against the truth's five largest logits (similarity5).
/// Both reductions use smallest-index tie-breaks on both sides.
pub fn similarity_ratio(
    outputs: &[Tensor],
    truths: &[Tensor],
    cn: &dyn Classifier,
) -> Result<SimilarityReport> {
    if outputs.is_empty() {
        return Err(Error::InvalidArgument(
            "similarity needs at least one pair".into(),
        ));
    }
    if outputs.len() != truths.len() {
        return Err(Error::InvalidArgument(format!(
            "{} outputs vs {} truths",
            outputs.len(),
            truths.len()
        )));
    }
    let mut matches = Vec::with_capacity(outputs.len());
    let mut matches5 = Vec::with_capacity(outputs.len());
    for (out, truth) in outputs.iter().zip(truths) {
        let lo = cn.logits(out)?;
        let lt = cn.logits(truth)?;
        if lo.len() != cn.num_classes() || lt.len() != cn.num_classes() {
            return Err(Error::InvalidArgument(
                "classifier returned a logits vector of the wrong length".into(),
            ));
        }
        let predicted = argmax(&lo);
        matches.push(predicted == argmax(&lt));
        matches5.push(top_k(&lt, 5).contains(&predicted));
    }
    let n = outputs.len();
    Ok(SimilarityReport {
        n,
        similarity: matches.iter().filter(|&&m| m).count() as f64 / n as f64,
        similarity5: matches5.iter().filter(|&&m| m).count() as f64 / n as f64,
        matches,
        matches5,
    })
}

/// Mean absolute difference over all pixels and channels.
pub fn image_l1(a: &Tensor, b: &Tensor) -> Result<f64> {
    a.check_same_shape(b, "image_l1")?;
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (*x as f64 - *y as f64).abs())
        .sum();
    Ok(sum / a.numel().max(1) as f64)
}

/// Mean squared difference over all pixels and channels.
pub fn image_l2(a: &Tensor, b: &Tensor) -> Result<f64> {
    a.check_same_shape(b, "image_l2")?;
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| {
            let d = *x as f64 - *y as f64;
            d * d
        })
        .sum();
    Ok(sum / a.numel().max(1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Deterministic stand-in: logits are a fixed function of the image's
    /// mean, so any assignment of classes can be staged through pixel data.
    struct StubClassifier {
        classes: usize,
    }

    impl Classifier for StubClassifier {
        fn num_classes(&self) -> usize {
            self.classes
        }

        fn logits(&self, image: &Tensor) -> Result<Vec<f32>> {
            let mean: f64 = image.data().iter().map(|&v| v as f64).sum::<f64>()
                / image.numel() as f64;
            // The class index encoded in the mean gets the largest logit;
            // the rest fall off by distance.
            let idx = (mean * self.classes as f64).floor().clamp(0.0, self.classes as f64 - 1.0)
                as usize;
            Ok((0..self.classes)
                .map(|c| -((c as f32 - idx as f32).abs()))
                .collect())
        }
    }

    fn image_of_class(idx: usize, classes: usize) -> Tensor {
        let mean = (idx as f32 + 0.5) / classes as f32;
        Tensor::full([1, 3, 4, 4], mean)
    }

    #[test]
    fn identical_sets_score_one_for_any_classifier() {
        let cn = StubClassifier { classes: 8 };
        let set: Vec<Tensor> = (0..5).map(|i| image_of_class(i, 8)).collect();
        let report = similarity_ratio(&set, &set, &cn).unwrap();
        assert_eq!(report.similarity, 1.0);
        assert_eq!(report.similarity5, 1.0);
        assert!(report.matches.iter().all(|&m| m));
    }

    #[test]
    fn hand_counted_half_match() {
        let cn = StubClassifier { classes: 8 };
        let truths: Vec<Tensor> = [0, 1, 2, 3].map(|i| image_of_class(i, 8)).into();
        let outputs: Vec<Tensor> = [0, 1, 6, 7].map(|i| image_of_class(i, 8)).into();
        let report = similarity_ratio(&outputs, &truths, &cn).unwrap();
        assert_eq!(report.similarity, 0.5);
        assert_eq!(report.matches, vec![true, true, false, false]);
    }

    #[test]
    fn third_largest_truth_logit_counts_only_for_top5() {
        // Output class 2 vs truth class 0: distance ordering of the stub's
        // logits puts class 2 third for the truth, inside the top 5.
        let cn = StubClassifier { classes: 8 };
        let report = similarity_ratio(
            &[image_of_class(2, 8)],
            &[image_of_class(0, 8)],
            &cn,
        )
        .unwrap();
        assert_eq!(report.similarity, 0.0);
        assert_eq!(report.similarity5, 1.0);
    }

    #[test]
    fn top1_never_exceeds_top5_on_random_evaluations() {
        let cn = StubClassifier { classes: 12 };
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..100 {
            let n = rng.gen_range(1..6);
            let outputs: Vec<Tensor> =
                (0..n).map(|_| image_of_class(rng.gen_range(0..12), 12)).collect();
            let truths: Vec<Tensor> =
                (0..n).map(|_| image_of_class(rng.gen_range(0..12), 12)).collect();
            let report = similarity_ratio(&outputs, &truths, &cn).unwrap();
            assert!(report.similarity <= report.similarity5);
            for (m, m5) in report.matches.iter().zip(&report.matches5) {
                assert!(!m || *m5, "a top-1 match must be a top-5 match");
            }
        }
    }

    #[test]
    fn similarity_is_invariant_under_monotone_logit_transforms() {
        struct Warped(StubClassifier);
        impl Classifier for Warped {
            fn num_classes(&self) -> usize {
                self.0.num_classes()
            }
            fn logits(&self, image: &Tensor) -> Result<Vec<f32>> {
                Ok(self
                    .0
                    .logits(image)?
                    .into_iter()
                    .map(|v| (v * 0.3).exp() * 2.0 + 1.0)
                    .collect())
            }
        }
        let plain = StubClassifier { classes: 8 };
        let warped = Warped(StubClassifier { classes: 8 });
        let outputs: Vec<Tensor> = [0, 3, 5, 7, 1].map(|i| image_of_class(i, 8)).into();
        let truths: Vec<Tensor> = [0, 4, 5, 2, 6].map(|i| image_of_class(i, 8)).into();
        let a = similarity_ratio(&outputs, &truths, &plain).unwrap();
        let b = similarity_ratio(&outputs, &truths, &warped).unwrap();
        assert_eq!(a.similarity, b.similarity);
        assert_eq!(a.similarity5, b.similarity5);
        assert_eq!(a.matches, b.matches);
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        let cn = StubClassifier { classes: 4 };
        assert!(similarity_ratio(&[], &[], &cn).is_err());
        let one = vec![image_of_class(0, 4)];
        assert!(similarity_ratio(&one, &[], &cn).is_err());
    }

    #[test]
    fn argmax_and_topk_break_ties_low() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0, 2.0]), 1);
        assert_eq!(top_k(&[1.0, 3.0, 3.0, 2.0], 3), vec![1, 2, 3]);
        assert_eq!(top_k(&[5.0, 5.0], 5), vec![0, 1]);
    }

    #[test]
    fn image_distances_match_hand_values_and_oracle() {
        let zero = Tensor::zeros([1, 3, 4, 4]);
        let one = Tensor::full([1, 3, 4, 4], 1.0);
        assert_eq!(image_l1(&zero, &zero).unwrap(), 0.0);
        assert_eq!(image_l1(&zero, &one).unwrap(), 1.0);
        assert_eq!(image_l2(&zero, &one).unwrap(), 1.0);

        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let a = Tensor::from_fn([2, 3, 5, 5], |_, _, _, _| rng.gen_range(0.0..1.0));
        let b = Tensor::from_fn([2, 3, 5, 5], |_, _, _, _| rng.gen_range(0.0..1.0));
        let (mut s1, mut s2) = (0.0f64, 0.0f64);
        for (x, y) in a.data().iter().zip(b.data()) {
            let d = *x as f64 - *y as f64;
            s1 += d.abs();
            s2 += d * d;
        }
        let n = a.numel() as f64;
        assert!((image_l1(&a, &b).unwrap() - s1 / n).abs() < 1e-6);
        assert!((image_l2(&a, &b).unwrap() - s2 / n).abs() < 1e-6);

        let c = Tensor::zeros([1, 3, 2, 2]);
        assert!(image_l1(&zero, &c).is_err());
    }
}
