use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type CoefficientFn = dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync;

/// A coefficient `c(t, state)` with a fixed output length.
///
/// Matrices and arrays are flattened row-major. For an affine coefficient,
/// `linear` is an `output_len × state_len` matrix.
#[derive(Clone)]
pub enum Coefficient {
    Constant(Vec<f64>),
    Affine {
        offset: Vec<f64>,
        linear: Vec<f64>,
    },
    /// `offset + amplitude · sin(2π·frequency·t + phase)`, elementwise.
    Sine {
        offset: Vec<f64>,
        amplitude: Vec<f64>,
        frequency: f64,
        phase: f64,
    },
    Custom {
        len: usize,
        func: Arc<CoefficientFn>,
    },
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(v) => f.debug_tuple("Constant").field(v).finish(),
            Self::Affine { offset, linear } => f
                .debug_struct("Affine")
                .field("offset", offset)
                .field("linear", linear)
                .finish(),
            Self::Sine {
                offset,
                amplitude,
                frequency,
                phase,
            } => f
                .debug_struct("Sine")
                .field("offset", offset)
                .field("amplitude", amplitude)
                .field("frequency", frequency)
                .field("phase", phase)
                .finish(),
            Self::Custom { len, .. } => f.debug_struct("Custom").field("len", len).finish(),
        }
    }
}

impl Coefficient {
    pub fn zero(len: usize) -> Self {
        Self::Constant(vec![0.0; len])
    }

    pub fn custom<F>(len: usize, func: F) -> Self
    where
        F: Fn(f64, &[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Self::Custom {
            len,
            func: Arc::new(func),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Self::Constant(v) => v.len(),
            Self::Affine { offset, .. } => offset.len(),
            Self::Sine { offset, .. } => offset.len(),
            Self::Custom { len, .. } => *len,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `Some(true)` when the coefficient is structurally zero, `None` when
    /// only evaluation can tell.
    pub fn is_structurally_zero(&self) -> Option<bool> {
        match self {
            Self::Constant(v) => Some(v.iter().all(|&x| x == 0.0)),
            Self::Affine { offset, linear } => {
                Some(offset.iter().chain(linear).all(|&x| x == 0.0))
            }
            Self::Sine {
                offset, amplitude, ..
            } => Some(offset.iter().chain(amplitude).all(|&x| x == 0.0)),
            Self::Custom { .. } => None,
        }
    }

    pub(crate) fn validate(&self, name: &str, len: usize, state_len: usize) -> Result<()> {
        if self.len() != len {
            return Err(Error::InvalidModel(format!(
                "{name}: expected {len} outputs, got {}",
                self.len()
            )));
        }
        match self {
            Self::Affine { linear, .. } if linear.len() != len * state_len => {
                Err(Error::InvalidModel(format!(
                    "{name}: affine matrix must have {} entries ({len}×{state_len}), got {}",
                    len * state_len,
                    linear.len()
                )))
            }
            Self::Sine { amplitude, .. } if amplitude.len() != len => Err(Error::InvalidModel(
                format!("{name}: sine amplitude must have {len} entries"),
            )),
            _ => Ok(()),
        }
    }

    /// Writes `c(t, state)` into `out` (overwriting).
    pub fn eval(&self, t: f64, state: &[f64], out: &mut [f64]) {
        match self {
            Self::Constant(v) => out.copy_from_slice(v),
            Self::Affine { offset, linear } => {
                let n = state.len();
                for (i, o) in out.iter_mut().enumerate() {
                    let row = &linear[i * n..(i + 1) * n];
                    *o = offset[i] + row.iter().zip(state).map(|(a, s)| a * s).sum::<f64>();
                }
            }
            Self::Sine {
                offset,
                amplitude,
                frequency,
                phase,
            } => {
                let s = (2.0 * std::f64::consts::PI * frequency * t + phase).sin();
                for ((o, c), a) in out.iter_mut().zip(offset).zip(amplitude) {
                    *o = c + a * s;
                }
            }
            Self::Custom { func, .. } => func(t, state, out),
        }
    }
}
