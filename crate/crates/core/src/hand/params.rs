use std::io::{BufRead, BufReader, Read};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SHAPE_DIM: usize = 10;
pub const POSE_DIM: usize = 45;
pub const POSTURE_DIM: usize = SHAPE_DIM + POSE_DIM;
pub const POSITION_DIM: usize = 6;
pub const PARAM_DIM: usize = POSTURE_DIM + POSITION_DIM;

/// The 61-value grasp parameterization.
///
/// Flat layout (also the tensor layout used everywhere in the crate):
/// `shape[10] | pose[45] | translation[3] | rotation[3]`, i.e. posture
/// followed by position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct HandParams {
    /// Shape blend coefficients.
    pub shape: [f64; SHAPE_DIM],
    /// Axis-angle rotations of the 15 finger joints, radians.
    pub pose: [f64; POSE_DIM],
    /// Global axis-angle rotation, radians.
    pub rotation: [f64; 3],
    /// Global translation, meters.
    pub translation: [f64; 3],
}

impl Default for HandParams {
    fn default() -> Self {
        Self {
            shape: [0.0; SHAPE_DIM],
            pose: [0.0; POSE_DIM],
            rotation: [0.0; 3],
            translation: [0.0; 3],
        }
    }
}

impl HandParams {
    /// `shape ∥ pose`.
    pub fn posture(&self) -> [f64; POSTURE_DIM] {
        let mut out = [0.0; POSTURE_DIM];
        out[..SHAPE_DIM].copy_from_slice(&self.shape);
        out[SHAPE_DIM..].copy_from_slice(&self.pose);
        out
    }

    /// `translation ∥ rotation`.
    pub fn position(&self) -> [f64; POSITION_DIM] {
        let mut out = [0.0; POSITION_DIM];
        out[..3].copy_from_slice(&self.translation);
        out[3..].copy_from_slice(&self.rotation);
        out
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(PARAM_DIM);
        v.extend_from_slice(&self.posture());
        v.extend_from_slice(&self.position());
        v
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        if values.len() != PARAM_DIM {
            return Err(Error::Arity {
                what: "hand parameters",
                expected: PARAM_DIM,
                actual: values.len(),
            });
        }
        Self::from_parts(&values[..POSTURE_DIM], &values[POSTURE_DIM..])
    }

    pub fn from_parts(posture: &[f64], position: &[f64]) -> Result<Self> {
        if posture.len() != POSTURE_DIM {
            return Err(Error::Arity { what: "posture values", expected: POSTURE_DIM, actual: posture.len() });
        }
        if position.len() != POSITION_DIM {
            return Err(Error::Arity { what: "position values", expected: POSITION_DIM, actual: position.len() });
        }
        let mut p = HandParams::default();
        p.shape.copy_from_slice(&posture[..SHAPE_DIM]);
        p.pose.copy_from_slice(&posture[SHAPE_DIM..]);
        p.translation.copy_from_slice(&position[..3]);
        p.rotation.copy_from_slice(&position[3..]);
        p.check_finite()?;
        Ok(p)
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.to_vec().iter().position(|v| !v.is_finite()) {
            Some(i) => Err(Error::InvalidParameter(format!("hand parameter {i} is not finite"))),
            None => Ok(()),
        }
    }
}

impl TryFrom<Vec<f64>> for HandParams {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        HandParams::from_slice(&v)
    }
}

impl From<HandParams> for Vec<f64> {
    fn from(p: HandParams) -> Vec<f64> {
        p.to_vec()
    }
}

/// Reads externally produced parameter files: one grasp per line, 61
/// whitespace- or comma-separated numbers in `shape ∥ pose ∥ translation ∥
/// rotation` order. Blank lines and `#` comments are skipped.
pub fn import_param_file<R: Read>(r: R) -> Result<Vec<HandParams>> {
    let mut out = Vec::new();
    for (lineno, line) in BufReader::new(r).lines().enumerate() {
        let line = line?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let values: Vec<f64> = body
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Format(format!("line {}: {e}", lineno + 1)))?;
        let p = HandParams::from_slice(&values)
            .map_err(|e| Error::Format(format!("line {}: {e}", lineno + 1)))?;
        out.push(p);
    }
    Ok(out)
}
