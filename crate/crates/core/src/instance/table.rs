use num_traits::{One, Zero};

use super::{ConfigInstance, RelatedInstance, UnrelatedInstance};
use crate::stoch::{ExactDist, Rational, Scalar};

/// One option for a request in sparse form: resource `i` receives `a_i * x`
/// for each `(i, a_i)` in `footprint`, where `x` is drawn from `law`.
#[derive(Clone, Debug, PartialEq)]
pub struct Choice {
    pub law: ExactDist,
    pub footprint: Vec<(usize, Rational)>,
    pub max_multiplier: Rational,
}

impl Choice {
    pub fn new(law: ExactDist, footprint: Vec<(usize, Rational)>) -> Self {
        let footprint: Vec<(usize, Rational)> =
            footprint.into_iter().filter(|(_, a)| !a.is_zero()).collect();
        let max_multiplier = footprint
            .iter()
            .map(|(_, a)| a.clone())
            .max()
            .unwrap_or_else(Rational::zero);
        Self {
            law,
            footprint,
            max_multiplier,
        }
    }

    /// `E[max_i X_i(c)]`.
    pub fn expected_max(&self) -> Rational {
        self.max_multiplier.clone() * self.law.mean()
    }

    pub fn is_exceptional(&self, realized: &Rational, tau: &Rational) -> bool {
        &(self.max_multiplier.clone() * realized.clone()) >= tau
    }
}

/// Flattened view of an instance used by the exact oracle and the simulator:
/// per request, the list of choices with their sparse resource footprints.
#[derive(Clone, Debug, PartialEq)]
pub struct ChoiceTable {
    pub resources: usize,
    pub requests: Vec<Vec<Choice>>,
}

impl ChoiceTable {
    pub fn len(&self) -> usize {
        self.requests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.requests.is_empty()
    }

    pub fn choice(&self, request: usize, choice: usize) -> &Choice {
        &self.requests[request][choice]
    }

    /// Applies a realized scalar to a load vector.
    pub fn apply<T: Scalar>(&self, loads: &mut [T], request: usize, choice: usize, realized: &T, lift: impl Fn(&Rational) -> T) {
        for (i, a) in &self.requests[request][choice].footprint {
            loads[*i] = loads[*i].clone() + lift(a) * realized.clone();
        }
    }
}

/// Instances that can be executed by the adaptive oracle and the simulator.
pub trait ToChoiceTable {
    fn choice_table(&self) -> ChoiceTable;
}

impl ToChoiceTable for ConfigInstance {
    fn choice_table(&self) -> ChoiceTable {
        ChoiceTable {
            resources: self.m,
            requests: self
                .requests
                .iter()
                .map(|req| {
                    req.configs
                        .iter()
                        .map(|cfg| {
                            Choice::new(
                                cfg.law.clone(),
                                cfg.multipliers.iter().cloned().enumerate().collect(),
                            )
                        })
                        .collect()
                })
                .collect(),
        }
    }
}

impl ToChoiceTable for UnrelatedInstance {
    fn choice_table(&self) -> ChoiceTable {
        ChoiceTable {
            resources: self.m,
            requests: self
                .jobs
                .iter()
                .map(|laws| {
                    laws.iter()
                        .enumerate()
                        .map(|(i, law)| Choice::new(law.clone(), vec![(i, Rational::one())]))
                        .collect()
                })
                .collect(),
        }
    }
}

impl ToChoiceTable for RelatedInstance {
    fn choice_table(&self) -> ChoiceTable {
        ChoiceTable {
            resources: self.speeds.len(),
            requests: self
                .jobs
                .iter()
                .map(|law| {
                    self.speeds
                        .iter()
                        .enumerate()
                        .map(|(i, s)| Choice::new(law.clone(), vec![(i, s.recip())]))
                        .collect()
                })
                .collect(),
        }
    }
}
