use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::vector::Vector;
use crate::error::{check_dim, LatticeError, Result};

/// The lattice norm in force on `R^n`.
///
/// `Lp` with `p ∈ {1, 2, ∞}` is always normalized to the dedicated variant by
/// [`NormSpec::lp`], so exactness decisions only have to look at the tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NormSpec {
    L1,
    L2,
    Linf,
    Lp { p: f64 },
    /// `max_i w_i |x_i|`.
    Wsup { weights: Vec<f64> },
}

impl NormSpec {
    pub fn lp(p: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(LatticeError::InvalidNorm(format!("p must be >= 1, got {p}")));
        }
        Ok(if p == 1.0 {
            NormSpec::L1
        } else if p == 2.0 {
            NormSpec::L2
        } else if p.is_infinite() {
            NormSpec::Linf
        } else {
            NormSpec::Lp { p }
        })
    }

    pub fn weighted_sup(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(LatticeError::InvalidNorm("empty weight vector".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(LatticeError::InvalidNorm("weights must be finite and positive".into()));
        }
        Ok(NormSpec::Wsup { weights })
    }

    /// Parses `l1 | l2 | linf | lp:<p> | wsup:<path-to-weights-json>`.
    ///
    /// The weights file holds either a bare JSON array or `{"weights": [...]}`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "l1" => return Ok(NormSpec::L1),
            "l2" => return Ok(NormSpec::L2),
            "linf" => return Ok(NormSpec::Linf),
            _ => {}
        }
        if let Some(p) = s.strip_prefix("lp:") {
            let p = match p {
                "inf" | "infinity" => f64::INFINITY,
                _ => p
                    .parse::<f64>()
                    .map_err(|e| LatticeError::InvalidNorm(format!("bad exponent {p:?}: {e}")))?,
            };
            return NormSpec::lp(p);
        }
        if let Some(path) = s.strip_prefix("wsup:") {
            return Self::load_weights(Path::new(path));
        }
        Err(LatticeError::InvalidNorm(format!("unrecognized norm spec {s:?}")))
    }

    fn load_weights(path: &Path) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum WeightsFile {
            Bare(Vec<f64>),
            Wrapped { weights: Vec<f64> },
        }
        let text = std::fs::read_to_string(path)
            .map_err(|e| LatticeError::Io(format!("{}: {e}", path.display())))?;
        let weights = match serde_json::from_str::<WeightsFile>(&text)
            .map_err(|e| LatticeError::Json(format!("{}: {e}", path.display())))?
        {
            WeightsFile::Bare(w) | WeightsFile::Wrapped { weights: w } => w,
        };
        Self::weighted_sup(weights)
    }

    /// The exponent `p` for the `ℓ_p` family, `None` for weighted sup norms.
    pub fn exponent(&self) -> Option<f64> {
        match self {
            NormSpec::L1 => Some(1.0),
            NormSpec::L2 => Some(2.0),
            NormSpec::Linf => Some(f64::INFINITY),
            NormSpec::Lp { p } => Some(*p),
            NormSpec::Wsup { .. } => None,
        }
    }

    /// Whether induced operator norms under this spec are computed exactly.
    pub fn has_exact_operator_norm(&self) -> bool {
        !matches!(self, NormSpec::Lp { .. })
    }

    /// The dual norm on the same coordinates (`1/p + 1/q = 1`); weighted sup
    /// dualizes to a weighted `ℓ_1` which is not representable and gives `None`.
    pub fn dual(&self) -> Option<NormSpec> {
        match self {
            NormSpec::L1 => Some(NormSpec::Linf),
            NormSpec::L2 => Some(NormSpec::L2),
            NormSpec::Linf => Some(NormSpec::L1),
            NormSpec::Lp { p } => Some(NormSpec::Lp { p: *p / (*p - 1.0) }),
            NormSpec::Wsup { .. } => None,
        }
    }

    /// Checks that the spec can act on `R^n`.
    pub fn check_dim(&self, n: usize) -> Result<()> {
        match self {
            NormSpec::Wsup { weights } => check_dim(n, weights.len()),
            NormSpec::Lp { p } if !(*p >= 1.0) => {
                Err(LatticeError::InvalidNorm(format!("p must be >= 1, got {p}")))
            }
            _ => Ok(()),
        }
    }

    /// Norm of a raw coordinate slice. Callers guarantee the dimension.
    pub fn norm_of(&self, x: &[f64]) -> f64 {
        match self {
            NormSpec::L1 => x.iter().map(|v| v.abs()).sum(),
            NormSpec::L2 => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
            NormSpec::Linf => x.iter().fold(0.0, |m, v| m.max(v.abs())),
            NormSpec::Lp { p } => {
                // Scale by the max entry so large p does not overflow.
                let m = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                if m == 0.0 {
                    return 0.0;
                }
                m * x.iter().map(|v| (v.abs() / m).powf(*p)).sum::<f64>().powf(1.0 / p)
            }
            NormSpec::Wsup { weights } => x
                .iter()
                .zip(weights)
                .fold(0.0, |m, (v, w)| m.max(w * v.abs())),
        }
    }
}

impl fmt::Display for NormSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormSpec::L1 => write!(f, "l1"),
            NormSpec::L2 => write!(f, "l2"),
            NormSpec::Linf => write!(f, "linf"),
            NormSpec::Lp { p } => write!(f, "lp:{p}"),
            NormSpec::Wsup { weights } => write!(f, "wsup[{}]", weights.len()),
        }
    }
}

/// `‖x‖` under `spec`.
pub fn vector_norm(x: &Vector, spec: &NormSpec) -> Result<f64> {
    spec.check_dim(x.dim())?;
    Ok(spec.norm_of(x.entries()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(e: &[f64]) -> Vector {
        Vector::new(e.to_vec()).unwrap()
    }

    #[test]
    fn worked_values() {
        let x = v(&[1.0, -1.0]);
        assert!((vector_norm(&x, &NormSpec::L2).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        let w = NormSpec::weighted_sup(vec![1.0, 4.0]).unwrap();
        assert_eq!(vector_norm(&x, &w).unwrap(), 4.0);
        assert_eq!(vector_norm(&v(&[3.0, 4.0]), &NormSpec::L1).unwrap(), 7.0);
        assert_eq!(vector_norm(&v(&[3.0, 4.0]), &NormSpec::L2).unwrap(), 5.0);
        assert_eq!(vector_norm(&v(&[3.0, -4.0]), &NormSpec::Linf).unwrap(), 4.0);
        let l3 = vector_norm(&v(&[1.0, 1.0]), &NormSpec::lp(3.0).unwrap()).unwrap();
        assert!((l3 - 2f64.powf(1.0 / 3.0)).abs() < 1e-14);
    }

    #[test]
    fn parse_grammar() {
        assert_eq!(NormSpec::parse("l1").unwrap(), NormSpec::L1);
        assert_eq!(NormSpec::parse("linf").unwrap(), NormSpec::Linf);
        assert_eq!(NormSpec::parse("lp:2").unwrap(), NormSpec::L2);
        assert_eq!(NormSpec::parse("lp:inf").unwrap(), NormSpec::Linf);
        assert_eq!(NormSpec::parse("lp:3.5").unwrap(), NormSpec::Lp { p: 3.5 });
        assert!(NormSpec::parse("lp:0.5").is_err());
        assert!(NormSpec::parse("l7").is_err());
        assert!(matches!(NormSpec::parse("wsup:/nonexistent/w.json"), Err(LatticeError::Io(_))));
    }

    #[test]
    fn parse_weights_file() {
        let dir = std::env::temp_dir().join(format!("latbp-norm-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let bare = dir.join("bare.json");
        std::fs::write(&bare, "[1, 2, 4]").unwrap();
        let wrapped = dir.join("wrapped.json");
        std::fs::write(&wrapped, r#"{"weights": [1, 2]}"#).unwrap();
        let bad = dir.join("bad.json");
        std::fs::write(&bad, "[1, -2]").unwrap();

        let s = NormSpec::parse(&format!("wsup:{}", bare.display())).unwrap();
        assert_eq!(s, NormSpec::Wsup { weights: vec![1.0, 2.0, 4.0] });
        let s = NormSpec::parse(&format!("wsup:{}", wrapped.display())).unwrap();
        assert_eq!(s, NormSpec::Wsup { weights: vec![1.0, 2.0] });
        assert!(NormSpec::parse(&format!("wsup:{}", bad.display())).is_err());
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn weight_dimension_is_checked() {
        let w = NormSpec::weighted_sup(vec![1.0, 2.0]).unwrap();
        assert!(vector_norm(&v(&[1.0, 2.0, 3.0]), &w).is_err());
    }
}
