//! Ordered outcome categories supporting the nonparametric likelihood, and
//! the assignment of each observation to one likelihood term.
//!
//! Categories are indexed from zero in increasing order: the optional
//! below-limit category, the distinct uncensored values `a_1 < … < a_J`, then
//! the optional above-limit category. Alpha parameter `k` is the cumulative
//! boundary between category `k` and `k + 1`, so `P(Y ≤ category k | x) =
//! F(α_k − βᵀx)`. Conventional labels number alphas from `α_0` when the
//! below-limit category is present and from `α_1` otherwise; see
//! [`Categories::alpha_label`].

use serde::{Deserialize, Serialize};

use crate::data::{CensorCode, ValidatedDataset};
use crate::error::{Error, Result};

/// The category scaffold: everything about the anchors that a fitted model
/// needs after the data are gone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Categories {
    /// Distinct uncensored outcomes, strictly increasing.
    pub values: Vec<f64>,
    pub has_lower_cat: bool,
    pub has_upper_cat: bool,
    /// Smallest lower detection limit seen in the data, if any.
    pub lower_dl: Option<f64>,
    /// Largest upper detection limit seen in the data, if any.
    pub upper_dl: Option<f64>,
    pub lower_label: Option<String>,
    pub upper_label: Option<String>,
}

impl Categories {
    /// `J`, the number of distinct uncensored values.
    pub fn n_values(&self) -> usize {
        self.values.len()
    }

    /// `J + [a_0] + [a_{J+1}]`.
    pub fn n_categories(&self) -> usize {
        self.values.len() + usize::from(self.has_lower_cat) + usize::from(self.has_upper_cat)
    }

    pub fn n_alphas(&self) -> usize {
        self.n_categories() - 1
    }

    /// Offset between internal alpha positions and conventional labels.
    pub fn alpha_offset(&self) -> usize {
        usize::from(!self.has_lower_cat)
    }

    /// Conventional name of alpha position `k`, e.g. `alpha_0`.
    pub fn alpha_label(&self, k: usize) -> String {
        format!("alpha_{}", k + self.alpha_offset())
    }

    /// Category index of the uncensored value `a_j` given its 0-based rank.
    pub fn category_of_rank(&self, rank: usize) -> usize {
        rank + usize::from(self.has_lower_cat)
    }

    /// Category holding an uncensored outcome exactly equal to `z`.
    pub fn category_of_value(&self, z: f64) -> Option<usize> {
        self.values
            .binary_search_by(|a| a.total_cmp(&z))
            .ok()
            .map(|rank| self.category_of_rank(rank))
    }

    /// Numeric position of category `c` for interpolation; tail categories sit
    /// at their detection limit.
    pub fn category_value(&self, c: usize) -> f64 {
        let k = self.n_categories();
        if self.has_lower_cat && c == 0 {
            self.lower_dl.expect("lower category implies a lower limit")
        } else if self.has_upper_cat && c == k - 1 {
            self.upper_dl.expect("upper category implies an upper limit")
        } else {
            self.values[c - usize::from(self.has_lower_cat)]
        }
    }

    /// Display label of category `c`.
    pub fn category_label(&self, c: usize) -> String {
        let k = self.n_categories();
        if self.has_lower_cat && c == 0 {
            self.lower_label.clone().unwrap_or_default()
        } else if self.has_upper_cat && c == k - 1 {
            self.upper_label.clone().unwrap_or_default()
        } else {
            format_value(self.category_value(c))
        }
    }

    /// Largest category whose position is `≤ y`. The lower tail category
    /// sits at its limit `l` (everything in it is `< l`); the upper one is
    /// unlocated above `u` and only reached at `+∞`.
    pub fn category_at_or_below(&self, y: f64) -> Option<usize> {
        let k = self.n_categories();
        if y == f64::INFINITY {
            return Some(k - 1);
        }
        let m = self.values.partition_point(|a| *a <= y);
        if m > 0 {
            return Some(self.category_of_rank(m - 1));
        }
        if self.has_lower_cat && y >= self.category_value(0) {
            return Some(0);
        }
        None
    }
}

/// Which kind of cell probability an observation contributes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TermKind {
    /// Uncensored at the lowest category: `F(α_k − η)`.
    LowestCell,
    /// Uncensored between two boundaries: `F(α_k − η) − F(α_{k−1} − η)`.
    InteriorCell,
    /// Uncensored at the highest category: `1 − F(α_k − η)`.
    HighestCell,
    /// Below a lower limit: `F(α_k − η)`.
    LowerTail,
    /// Above an upper limit: `1 − F(α_k − η)`.
    UpperTail,
}

/// Alpha positions (internal, 0-based) entering a term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AlphaRef {
    One(usize),
    /// Adjacent pair `(k − 1, k)`.
    Pair(usize, usize),
    /// The term has probability one and contributes nothing.
    Certain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Assignment {
    pub kind: TermKind,
    pub alpha: AlphaRef,
}

impl Assignment {
    fn new(kind: TermKind, alpha: AlphaRef) -> Self {
        Self { kind, alpha }
    }
}

/// Categories plus the per-observation likelihood terms.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorSet {
    pub categories: Categories,
    pub assignments: Vec<Assignment>,
    /// Diagnostics about unusual but legal configurations.
    pub warnings: Vec<String>,
}

impl AnchorSet {
    pub fn n_alphas(&self) -> usize {
        self.categories.n_alphas()
    }

    pub fn values(&self) -> &[f64] {
        &self.categories.values
    }
}

/// Shortest round-trip rendering, used for labels such as `<0.019`.
pub fn format_value(v: f64) -> String {
    format!("{v}")
}

pub fn build_anchor_set(dataset: &ValidatedDataset) -> Result<AnchorSet> {
    let z = dataset.z();
    let delta = dataset.delta();

    let mut values: Vec<f64> = z
        .iter()
        .zip(delta)
        .filter(|(_, d)| **d == CensorCode::Observed)
        .map(|(z, _)| *z)
        .collect();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let j = values.len();
    if j == 0 {
        return Err(Error::NoUncensoredValues);
    }

    let lower_dl = z
        .iter()
        .zip(delta)
        .filter(|(_, d)| **d == CensorCode::BelowDL)
        .map(|(z, _)| *z)
        .min_by(f64::total_cmp);
    let upper_dl = z
        .iter()
        .zip(delta)
        .filter(|(_, d)| **d == CensorCode::AboveDL)
        .map(|(z, _)| *z)
        .max_by(f64::total_cmp);
    let has_lower_cat = lower_dl.is_some_and(|l| l <= values[0]);
    let has_upper_cat = upper_dl.is_some_and(|u| u >= values[j - 1]);

    let categories = Categories {
        lower_label: has_lower_cat.then(|| format!("<{}", format_value(lower_dl.unwrap()))),
        upper_label: has_upper_cat.then(|| format!(">{}", format_value(upper_dl.unwrap()))),
        values,
        has_lower_cat,
        has_upper_cat,
        lower_dl,
        upper_dl,
    };
    let k = categories.n_categories();
    if k < 2 {
        return Err(Error::SingleCategory);
    }
    let lower = usize::from(has_lower_cat);
    let top_value_cat = j - 1 + lower;

    let mut warnings = Vec::new();
    let mut assignments = Vec::with_capacity(z.len());
    for (index, (&zi, &di)) in z.iter().zip(delta).enumerate() {
        let a = match di {
            CensorCode::Observed => {
                let c = categories.category_of_value(zi).expect("uncensored value is an anchor");
                if c == 0 {
                    Assignment::new(TermKind::LowestCell, AlphaRef::One(0))
                } else if c == k - 1 {
                    Assignment::new(TermKind::HighestCell, AlphaRef::One(k - 2))
                } else {
                    Assignment::new(TermKind::InteriorCell, AlphaRef::Pair(c - 1, c))
                }
            }
            CensorCode::BelowDL => {
                if has_lower_cat && Some(zi) == lower_dl {
                    Assignment::new(TermKind::LowerTail, AlphaRef::One(0))
                } else {
                    // largest anchor strictly below z; a_0 acts as -inf
                    let m = categories.values.partition_point(|a| *a < zi);
                    let c = if m > 0 {
                        m - 1 + lower
                    } else if has_lower_cat {
                        0
                    } else {
                        return Err(Error::InternalAssignmentError {
                            index,
                            reason: format!("no anchor below lower limit {zi}"),
                        });
                    };
                    if m == j {
                        warnings.push(format!(
                            "observation {index}: lower detection limit {zi} exceeds every uncensored value"
                        ));
                    }
                    if c <= k - 2 {
                        Assignment::new(TermKind::LowerTail, AlphaRef::One(c))
                    } else {
                        Assignment::new(TermKind::LowerTail, AlphaRef::Certain)
                    }
                }
            }
            CensorCode::AboveDL => {
                if has_upper_cat && Some(zi) == upper_dl {
                    Assignment::new(TermKind::UpperTail, AlphaRef::One(top_value_cat))
                } else {
                    // smallest anchor strictly above z; a_{J+1} acts as +inf
                    let m = categories.values.partition_point(|a| *a <= zi);
                    let c = if m < j {
                        m + lower
                    } else if has_upper_cat {
                        k - 1
                    } else {
                        return Err(Error::InternalAssignmentError {
                            index,
                            reason: format!("no anchor above upper limit {zi}"),
                        });
                    };
                    if m == 0 {
                        warnings.push(format!(
                            "observation {index}: upper detection limit {zi} is below every uncensored value"
                        ));
                    }
                    if c >= 1 {
                        Assignment::new(TermKind::UpperTail, AlphaRef::One(c - 1))
                    } else {
                        Assignment::new(TermKind::UpperTail, AlphaRef::Certain)
                    }
                }
            }
        };
        assignments.push(a);
    }

    Ok(AnchorSet {
        categories,
        assignments,
        warnings,
    })
}
