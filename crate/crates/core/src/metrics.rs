//! Confusion matrices and the scores derived from them.
//!
//! Every 0/0 ratio (precision of a never-predicted class, recall of an
//! absent class, F1 when both are zero) is defined as 0. Macro-F1 averages
//! over the full declared class list, including classes absent from the
//! gold labels, so a constant predictor on a binary task scores at most 0.5.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    classes: Vec<String>,
    counts: Vec<Vec<u64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scores {
    pub accuracy: f64,
    /// Parallel to the matrix's class list.
    pub per_class: Vec<ClassScores>,
    pub macro_f1: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl ConfusionMatrix {
    pub fn from_counts(classes: Vec<String>, counts: Vec<Vec<u64>>) -> Result<Self> {
        let k = classes.len();
        if counts.len() != k || counts.iter().any(|r| r.len() != k) {
            return Err(Error::Contract("confusion matrix must be square over the class list".into()));
        }
        Ok(ConfusionMatrix { classes, counts })
    }

    /// Counts from label strings; every label must be in `classes`.
    pub fn new<S: AsRef<str>>(y_true: &[S], y_pred: &[S], classes: &[String]) -> Result<Self> {
        let index = |s: &str| {
            classes
                .iter()
                .position(|c| c == s)
                .ok_or_else(|| Error::Contract(format!("label `{s}` is not in the class list")))
        };
        let t = y_true.iter().map(|s| index(s.as_ref())).collect::<Result<Vec<_>>>()?;
        let p = y_pred.iter().map(|s| index(s.as_ref())).collect::<Result<Vec<_>>>()?;
        Self::from_indices(classes, &t, &p)
    }

    pub fn from_indices(classes: &[String], y_true: &[usize], y_pred: &[usize]) -> Result<Self> {
        if y_true.len() != y_pred.len() {
            return Err(Error::Contract(format!(
                "{} gold labels but {} predictions",
                y_true.len(),
                y_pred.len()
            )));
        }
        if y_true.is_empty() {
            return Err(Error::Contract("nothing to evaluate".into()));
        }
        let k = classes.len();
        let mut counts = vec![vec![0u64; k]; k];
        for (&t, &p) in y_true.iter().zip(y_pred) {
            if t >= k || p >= k {
                return Err(Error::Contract("class index out of range".into()));
            }
            counts[t][p] += 1;
        }
        Ok(ConfusionMatrix {
            classes: classes.to_vec(),
            counts,
        })
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn scores(&self) -> Scores {
        let k = self.classes.len();
        let per_class: Vec<ClassScores> = (0..k)
            .map(|i| {
                let tp = self.counts[i][i];
                let support: u64 = self.counts[i].iter().sum();
                let predicted: u64 = self.counts.iter().map(|r| r[i]).sum();
                let precision = ratio(tp, predicted);
                let recall = ratio(tp, support);
                let f1 = if precision + recall == 0.0 {
                    0.0
                } else {
                    2.0 * precision * recall / (precision + recall)
                };
                ClassScores {
                    precision,
                    recall,
                    f1,
                    support,
                }
            })
            .collect();
        let macro_f1 = if k == 0 {
            0.0
        } else {
            per_class.iter().map(|c| c.f1).sum::<f64>() / k as f64
        };
        Scores {
            accuracy: ratio(self.trace(), self.total()),
            per_class,
            macro_f1,
        }
    }

    /// Aligned text grid with row and column sums. With `color`, diagonal
    /// cells are bold.
    pub fn render(&self, color: bool) -> String {
        let k = self.classes.len();
        let row_sums: Vec<u64> = self.counts.iter().map(|r| r.iter().sum()).collect();
        let col_sums: Vec<u64> = (0..k).map(|j| self.counts.iter().map(|r| r[j]).sum()).collect();
        let mut width = "true\\pred".len();
        for c in &self.classes {
            width = width.max(c.chars().count());
        }
        for v in self.counts.iter().flatten().chain(&row_sums).chain(&col_sums) {
            width = width.max(v.to_string().len());
        }
        width = width.max(self.total().to_string().len()).max(3);

        let mut out = String::new();
        let _ = write!(out, "{:>width$}", "true\\pred");
        for c in &self.classes {
            let _ = write!(out, " {c:>width$}");
        }
        let _ = writeln!(out, " {:>width$}", "sum");
        for (i, c) in self.classes.iter().enumerate() {
            let _ = write!(out, "{c:>width$}");
            for (j, v) in self.counts[i].iter().enumerate() {
                if color && i == j {
                    let _ = write!(out, " \x1b[1m{v:>width$}\x1b[0m");
                } else {
                    let _ = write!(out, " {v:>width$}");
                }
            }
            let _ = writeln!(out, " {:>width$}", row_sums[i]);
        }
        let _ = write!(out, "{:>width$}", "sum");
        for v in &col_sums {
            let _ = write!(out, " {v:>width$}");
        }
        let _ = writeln!(out, " {:>width$}", self.total());
        out
    }
}

/// Constant prediction of the most frequent class in `y_train` (ties to
/// the lowest class index), one per item of the evaluation set.
pub fn majority_baseline(y_train: &[usize], n_eval: usize) -> Result<Vec<usize>> {
    let k = y_train.iter().max().map(|m| m + 1).ok_or_else(|| {
        Error::Contract("majority baseline needs at least one training label".into())
    })?;
    let mut counts = vec![0usize; k];
    y_train.iter().for_each(|&c| counts[c] += 1);
    let mut best = 0;
    for (c, &n) in counts.iter().enumerate() {
        if n > counts[best] {
            best = c;
        }
    }
    Ok(vec![best; n_eval])
}

/// Plain-text report of the scores followed by the rendered matrix.
pub fn report(m: &ConfusionMatrix, color: bool) -> String {
    let s = m.scores();
    let mut out = String::new();
    let _ = writeln!(out, "instances  {}", m.total());
    let _ = writeln!(out, "accuracy   {:.4}", s.accuracy);
    let _ = writeln!(out, "macro_f1   {:.4}", s.macro_f1);
    let _ = writeln!(out);
    let _ = writeln!(out, "{:<8} {:>9} {:>9} {:>9} {:>8}", "class", "precision", "recall", "f1", "support");
    for (c, cs) in m.classes().iter().zip(&s.per_class) {
        let _ = writeln!(
            out,
            "{:<8} {:>9.4} {:>9.4} {:>9.4} {:>8}",
            c, cs.precision, cs.recall, cs.f1, cs.support
        );
    }
    let _ = writeln!(out);
    out.push_str(&m.render(color));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn danish_test_set() {
        let m = ConfusionMatrix::from_counts(names(&["NOT", "OFF"]), vec![vec![278, 16], vec![9, 25]]).unwrap();
        let s = m.scores();
        assert!((s.accuracy - 0.9238).abs() < 1e-4, "{}", s.accuracy);
        assert!((s.macro_f1 - 0.8118).abs() < 1e-4, "{}", s.macro_f1);
        assert!((s.per_class[0].f1 - 0.9570).abs() < 1e-4);
        assert!((s.per_class[1].f1 - 0.6667).abs() < 1e-4);
    }

    #[test]
    fn identical_vectors_are_diagonal() {
        let y = ["A", "B", "B", "C"];
        let m = ConfusionMatrix::new(&y, &y, &names(&["A", "B", "C"])).unwrap();
        assert_eq!(m.counts(), &[vec![1, 0, 0], vec![0, 2, 0], vec![0, 0, 1]]);
        let s = m.scores();
        assert_eq!((s.accuracy, s.macro_f1), (1.0, 1.0));
    }

    #[test]
    fn four_item_hand_case() {
        let t = ["A", "A", "B", "B"];
        let p = ["A", "B", "B", "B"];
        let m = ConfusionMatrix::new(&t, &p, &names(&["A", "B"])).unwrap();
        assert_eq!(m.counts(), &[vec![1, 1], vec![0, 2]]);
        let s = m.scores();
        // A: P=1, R=1/2, F1=2/3; B: P=2/3, R=1, F1=4/5
        assert!((s.macro_f1 - (2.0 / 3.0 + 0.8) / 2.0).abs() < 1e-12);
        assert_eq!(s.accuracy, 0.75);
    }

    #[test]
    fn absent_class_scores_zero() {
        let m = ConfusionMatrix::from_counts(names(&["A", "B"]), vec![vec![0, 0], vec![0, 5]]).unwrap();
        assert_eq!(m.scores().macro_f1, 0.5);
    }

    #[test]
    fn errors() {
        let c = names(&["A"]);
        assert!(ConfusionMatrix::new(&["A"], &["A", "A"], &c).is_err());
        assert!(ConfusionMatrix::new(&["A"], &["Z"], &c).is_err());
        let empty: [&str; 0] = [];
        assert!(ConfusionMatrix::new(&empty, &empty, &c).is_err());
        assert!(majority_baseline(&[], 3).is_err());
    }

    #[test]
    fn baseline_all_majority() {
        let pred = majority_baseline(&[0, 0, 1], 4).unwrap();
        assert_eq!(pred, vec![0; 4]);
        let m = ConfusionMatrix::from_indices(&names(&["NOT", "OFF"]), &[0, 0, 0, 0], &pred).unwrap();
        let s = m.scores();
        assert_eq!(s.accuracy, 1.0);
        assert_eq!(s.macro_f1, 0.5);
        assert_eq!(majority_baseline(&[1, 0], 1).unwrap(), vec![0]);
    }

    #[test]
    fn render_layout() {
        let m = ConfusionMatrix::from_counts(names(&["IND", "GRP", "OTH"]), vec![vec![1, 0, 0], vec![0, 0, 0], vec![2, 0, 3]]).unwrap();
        let text = m.render(false);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 5);
        let header: Vec<&str> = lines[0].split_whitespace().collect();
        assert_eq!(header, ["true\\pred", "IND", "GRP", "OTH", "sum"]);
        assert_eq!(lines[2].split_whitespace().collect::<Vec<_>>(), ["GRP", "0", "0", "0", "0"]);
        assert_eq!(lines[4].split_whitespace().collect::<Vec<_>>(), ["sum", "3", "0", "3", "6"]);
        assert!(!text.contains('\x1b'));
        assert!(m.render(true).contains("\x1b[1m"));
        // every row has the same width
        assert!(lines.iter().all(|l| l.len() == lines[0].len()));
    }
}
