//! Registry of named analytic field and force rules. Configs pick rules by
//! name; new rules are code contributions with tests, keeping the parser
//! declarative.

use serde::{Deserialize, Serialize};

use frackin_core::bogoliubov::PairForceKernel;
use frackin_core::error::Result;
use frackin_core::phase::{FieldPair, HamiltonianSpec, PhaseField, PhaseGrid};

/// Velocity/force field pair for single-particle Liouville runs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FieldRule {
    /// `V = p`, `F = -omega^2 q` (free streaming at `omega = 0`).
    Harmonic {
        omega: f64,
    },
    Zero,
}

impl FieldRule {
    pub fn fields(&self, grid: &PhaseGrid<f64>) -> Result<FieldPair<f64>> {
        match *self {
            FieldRule::Harmonic { omega } => {
                let v = PhaseField::from_fn(grid.clone(), |_, p| p[0])?;
                let f = PhaseField::from_fn(grid.clone(), move |q, _| -omega * omega * q[0])?;
                Ok((vec![v], vec![f]))
            }
            FieldRule::Zero => {
                let z = PhaseField::zeros(grid.clone());
                Ok((vec![z.clone()], vec![z]))
            }
        }
    }

    /// The generating Hamiltonian for the bracket-form flow.
    pub fn hamiltonian(&self) -> HamiltonianSpec<f64> {
        match *self {
            FieldRule::Harmonic { omega } => HamiltonianSpec::Analytic(Box::new(move |q, p| {
                0.5 * p[0] * p[0] + 0.5 * omega * omega * q[0] * q[0]
            })),
            FieldRule::Zero => HamiltonianSpec::Analytic(Box::new(|_, _| 0.0)),
        }
    }
}

/// Binary interaction rule.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PairRule {
    /// `F_12 = kappa (q_2 - q_1)`.
    LinearCoupling {
        kappa: f64,
    },
    Zero,
}

/// External force rule.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ExternalRule {
    /// `F^e = -omega^2 q`.
    Harmonic {
        omega: f64,
    },
    /// Constant electric push `F^e = e0`.
    ConstantE {
        e0: f64,
    },
    Zero,
}

pub fn pair_kernel(pair: &PairRule, external: &ExternalRule) -> PairForceKernel<f64> {
    let pair = pair.clone();
    let external = external.clone();
    let pair_fn = move |q1: f64, _p1: f64, q2: f64, _p2: f64| match pair {
        PairRule::LinearCoupling { kappa } => kappa * (q2 - q1),
        PairRule::Zero => 0.0,
    };
    let ext_fn = move |q: f64, _p: f64, _t: f64| match external {
        ExternalRule::Harmonic { omega } => -omega * omega * q,
        ExternalRule::ConstantE { e0 } => e0,
        ExternalRule::Zero => 0.0,
    };
    PairForceKernel::new(pair_fn, ext_fn)
}

/// Uniform magnetic field rule.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BRule {
    UniformB { b: [f64; 3] },
    Zero,
}

impl BRule {
    pub fn vector(&self) -> [f64; 3] {
        match *self {
            BRule::UniformB { b } => b,
            BRule::Zero => [0.0; 3],
        }
    }
}
