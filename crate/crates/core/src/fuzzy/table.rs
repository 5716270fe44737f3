use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{MembershipFunction, OutputTerm, Term, Variable};
use crate::error::{Error, Result};
use crate::ext::ExtReal;

/// Per-kind membership functions for every input term and output term.
///
/// Stored as dense arrays; serialized as `variable -> term -> function` maps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTable", into = "RawTable")]
pub struct MembershipTable {
    inputs: [[Option<MembershipFunction>; 4]; 8],
    outputs: [MembershipFunction; 7],
}

#[derive(Serialize, Deserialize)]
struct RawTable {
    inputs: BTreeMap<Variable, BTreeMap<Term, MembershipFunction>>,
    outputs: BTreeMap<OutputTerm, MembershipFunction>,
}

impl TryFrom<RawTable> for MembershipTable {
    type Error = Error;

    fn try_from(raw: RawTable) -> Result<Self> {
        MembershipTable::new(raw.inputs, raw.outputs)
    }
}

impl From<MembershipTable> for RawTable {
    fn from(table: MembershipTable) -> Self {
        let mut inputs = BTreeMap::new();
        for var in Variable::ALL {
            let terms: BTreeMap<_, _> = Term::ALL
                .iter()
                .filter_map(|&t| table.input(var, t).map(|mf| (t, mf.clone())))
                .collect();
            if !terms.is_empty() {
                inputs.insert(var, terms);
            }
        }
        let outputs =
            OutputTerm::ALL.iter().map(|&t| (t, table.output(t).clone())).collect();
        RawTable { inputs, outputs }
    }
}

impl MembershipTable {
    pub fn new(
        inputs: BTreeMap<Variable, BTreeMap<Term, MembershipFunction>>,
        mut outputs: BTreeMap<OutputTerm, MembershipFunction>,
    ) -> Result<Self> {
        let mut dense: [[Option<MembershipFunction>; 4]; 8] = Default::default();
        for (var, terms) in inputs {
            for (term, mf) in terms {
                dense[var.index()][term.index()] = Some(mf);
            }
        }
        let mut out = Vec::with_capacity(7);
        for term in OutputTerm::ALL {
            let mf = outputs.remove(&term).ok_or_else(|| Error::MissingTerm {
                variable: "ACCELERATION".into(),
                term: format!("{term:?}"),
            })?;
            if mf.peak().is_none() {
                return Err(Error::InvalidMembership(format!(
                    "output term {term:?} must be a plateau-free triangle"
                )));
            }
            out.push(mf);
        }
        let outputs: [MembershipFunction; 7] =
            out.try_into().unwrap_or_else(|_| unreachable!("seven output terms"));
        Ok(Self { inputs: dense, outputs })
    }

    pub fn input(&self, var: Variable, term: Term) -> Option<&MembershipFunction> {
        self.inputs[var.index()][term.index()].as_ref()
    }

    pub fn output(&self, term: OutputTerm) -> &MembershipFunction {
        &self.outputs[term.index()]
    }

    /// Degree of `x` in `(var, term)`.
    pub fn degree(&self, var: Variable, term: Term, x: ExtReal) -> Result<f64> {
        self.input(var, term).map(|mf| mf.degree(x)).ok_or_else(|| Error::MissingTerm {
            variable: var.name().into(),
            term: term.name().into(),
        })
    }

    /// Evaluates every available `(variable, term)` pair at once.
    pub fn degrees(&self, inputs: &Inputs) -> Degrees {
        let mut out = Degrees::default();
        for var in Variable::ALL {
            let Some(x) = inputs.get(var) else { continue };
            for term in Term::ALL {
                if let Some(mf) = self.input(var, term) {
                    out.0[var.index()][term.index()] = Some(mf.degree(x));
                }
            }
        }
        out
    }

    /// Returns a copy with every input breakpoint of `var` scaled by `factor`.
    pub fn scaled_input(&self, var: Variable, factor: f64) -> Result<Self> {
        let mut table = self.clone();
        for slot in table.inputs[var.index()].iter_mut() {
            if let Some(mf) = slot {
                let (below, above) = mf.saturation();
                let points = mf.points().iter().map(|&[x, m]| [x * factor, m]).collect();
                *slot = Some(MembershipFunction::new(mf.shape(), points, below, above)?);
            }
        }
        Ok(table)
    }
}

/// Crisp inputs for one decision, indexed by variable.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Inputs([Option<ExtReal>; 8]);

impl Inputs {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, var: Variable, value: impl Into<ExtReal>) -> Self {
        self.set(var, value);
        self
    }

    pub fn set(&mut self, var: Variable, value: impl Into<ExtReal>) {
        self.0[var.index()] = Some(value.into());
    }

    pub fn get(&self, var: Variable) -> Option<ExtReal> {
        self.0[var.index()]
    }
}

/// Membership degrees of the current inputs; `None` where the input or the
/// term is missing.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Degrees(pub(crate) [[Option<f64>; 4]; 8]);

impl Degrees {
    pub fn get(&self, var: Variable, term: Term) -> Option<f64> {
        self.0[var.index()][term.index()]
    }

    pub fn set(&mut self, var: Variable, term: Term, degree: f64) {
        self.0[var.index()][term.index()] = Some(degree);
    }
}
