use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{ExplicitEnsemble, Provenance, UnitaryEnsemble};
use crate::numkit::ComplexMatrix;
use crate::{Error, Result};

/// On-disk form of an explicit ensemble. Each unitary is a flat row-major
/// list of `[re, im]` pairs. serde_json writes the shortest representation
/// that round-trips, so save/load is bit-exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleFile {
    pub d: usize,
    pub weights: Vec<f64>,
    pub unitaries: Vec<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl EnsembleFile {
    pub fn from_ensemble(e: &ExplicitEnsemble) -> Self {
        Self {
            d: e.dim(),
            weights: e.weights().to_vec(),
            unitaries: e.unitaries().iter().map(|u| u.as_slice().iter().map(|z| [z.re, z.im]).collect()).collect(),
            provenance: Some(e.provenance()),
        }
    }

    pub fn into_ensemble(self) -> Result<ExplicitEnsemble> {
        let d = self.d;
        let unitaries = self
            .unitaries
            .into_iter()
            .map(|flat| {
                if flat.len() != d * d {
                    return Err(Error::DimensionMismatch { expected: d * d, got: flat.len() });
                }
                ComplexMatrix::from_vec(d, d, flat.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
            })
            .collect::<Result<Vec<_>>>()?;
        ExplicitEnsemble::new(unitaries, self.weights, self.provenance.unwrap_or(Provenance::Custom))
    }
}

impl UnitaryEnsemble {
    pub fn to_json(&self) -> Result<String> {
        let e = self.as_explicit().ok_or(Error::NotExplicit)?;
        Ok(serde_json::to_string(&EnsembleFile::from_ensemble(e))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: EnsembleFile = serde_json::from_str(s)?;
        Ok(Self::Explicit(f.into_ensemble()?))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{clifford_ensemble, pauli_ensemble, CliffordMode};
    use crate::haar::sample_haar;
    use crate::RngStream;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut rng = RngStream::new(11, 0).rng();
        let us: Vec<_> = (0..5).map(|_| sample_haar(3, &mut rng)).collect();
        let e = UnitaryEnsemble::Explicit(
            ExplicitEnsemble::new(us, vec![0.1, 0.2, 0.3, 0.15, 0.25], Provenance::Custom).unwrap(),
        );
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.json");
        e.save(&p).unwrap();
        let back = UnitaryEnsemble::load(&p).unwrap();
        assert_eq!(back, e);
        for (a, b) in e.as_explicit().unwrap().unitaries().iter().zip(back.as_explicit().unwrap().unitaries()) {
            for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
                assert_eq!(x.re.to_bits(), y.re.to_bits());
                assert_eq!(x.im.to_bits(), y.im.to_bits());
            }
        }
    }

    #[test]
    fn builtin_ensembles_round_trip() {
        for e in [pauli_ensemble(2).unwrap(), clifford_ensemble(1, CliffordMode::Enumerate).unwrap()] {
            assert_eq!(UnitaryEnsemble::from_json(&e.to_json().unwrap()).unwrap(), e);
        }
    }

    #[test]
    fn schema_without_provenance_loads() {
        let s = r#"{"d":1,"weights":[1.0],"unitaries":[[[0.0,1.0]]]}"#;
        let e = UnitaryEnsemble::from_json(s).unwrap();
        assert_eq!(e.provenance(), Provenance::Custom);
    }

    #[test]
    fn rejects_malformed_files() {
        assert!(UnitaryEnsemble::from_json(r#"{"d":2,"weights":[1.0],"unitaries":[[[1.0,0.0]]]}"#).is_err());
        assert!(UnitaryEnsemble::from_json(r#"{"d":1,"weights":[0.5],"unitaries":[[[1.0,0.0]]]}"#).is_err());
        assert!(UnitaryEnsemble::from_json(r#"{"d":1,"weights":[1.0],"unitaries":[[[2.0,0.0]]]}"#).is_err());
        assert!(matches!(UnitaryEnsemble::Haar { d: 2 }.to_json(), Err(Error::NotExplicit)));
    }
}
