//! Chain length → evaluation method.
//!
//! Short chains are diagonalized exactly, longer even chains use the momentum
//! sum and `L = ∞` uses the per-site integrals.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::estimation::{self, QfiValue};
use crate::fermion;
use crate::optimize::{self, FieldOptimum, Refinement, ScanOptions};
use crate::spin::{self, SpinChainParams};
use crate::thermo;

/// Number of sites, possibly infinite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ChainLength {
    Finite(usize),
    Infinite,
}

impl fmt::Display for ChainLength {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChainLength::Finite(l) => write!(f, "{l}"),
            ChainLength::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for ChainLength {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") {
            return Ok(ChainLength::Infinite);
        }
        s.parse::<usize>()
            .map(ChainLength::Finite)
            .map_err(|_| Error::Config(format!("chain length `{s}` is neither an integer nor `inf`")))
    }
}

impl Serialize for ChainLength {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ChainLength::Finite(l) => s.serialize_u64(*l as u64),
            ChainLength::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ChainLength {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(u64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(l) => Ok(ChainLength::Finite(l as usize)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    Exact,
    Fermion,
    Thermo,
}

impl Backend {
    pub fn as_str(self) -> &'static str {
        match self {
            Backend::Exact => "exact",
            Backend::Fermion => "fermion",
            Backend::Thermo => "thermo",
        }
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Backend::Exact),
            "fermion" => Ok(Backend::Fermion),
            "thermo" => Ok(Backend::Thermo),
            other => Err(Error::Config(format!("unknown backend `{other}`"))),
        }
    }
}

/// Picks the backend for `length`, honouring an explicit request.
pub fn route(length: ChainLength, max_sites: usize, requested: Option<Backend>) -> Result<Backend> {
    match (length, requested) {
        (ChainLength::Infinite, None | Some(Backend::Thermo)) => Ok(Backend::Thermo),
        (ChainLength::Infinite, Some(b)) => Err(Error::Domain(format!("backend {} needs a finite L", b.as_str()))),
        (ChainLength::Finite(_), Some(Backend::Thermo)) => {
            Err(Error::Domain("the thermo backend needs L = inf".into()))
        }
        (ChainLength::Finite(l), Some(Backend::Exact)) => {
            spin::check_capacity(l, max_sites)?;
            Ok(Backend::Exact)
        }
        (ChainLength::Finite(l), Some(Backend::Fermion)) => {
            if l % 2 == 1 {
                return Err(Error::Unsupported(format!(
                    "odd L = {l} has no momentum-sum evaluation"
                )));
            }
            Ok(Backend::Fermion)
        }
        (ChainLength::Finite(l), None) if l <= max_sites => Ok(Backend::Exact),
        (ChainLength::Finite(l), None) if l % 2 == 0 => Ok(Backend::Fermion),
        (ChainLength::Finite(l), None) => Err(Error::Capacity {
            sites: l,
            cap: max_sites,
        }),
    }
}

/// QFI at one point. For `L = ∞` the values are per site.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointQfi {
    pub backend: Backend,
    pub qfi: QfiValue,
}

pub fn qfi_at(
    length: ChainLength,
    coupling: f64,
    field: f64,
    beta: f64,
    max_sites: usize,
    requested: Option<Backend>,
) -> Result<PointQfi> {
    let backend = route(length, max_sites, requested)?;
    let qfi = match (backend, length) {
        (Backend::Exact, ChainLength::Finite(l)) => {
            let params = SpinChainParams::new(l, coupling, field, beta)?;
            let h = spin::build_hamiltonian_capped(&params, max_sites)?;
            let dh = spin::d_hamiltonian_dj_capped(&params, max_sites)?;
            estimation::qfi_spectral(&spin::gibbs_state(&h, beta)?, &dh)?
        }
        (Backend::Fermion, ChainLength::Finite(l)) => fermion::qfi_finite_t_sum(l, coupling, field, beta)?,
        _ => {
            let d = thermo::gtilde_quadrature(coupling, field, beta)?;
            QfiValue {
                value: d.total,
                classical_part: d.g1,
                quantum_part: d.g2,
            }
        }
    };
    Ok(PointQfi { backend, qfi })
}

/// Field maximizing the QFI on `(0, 3J]`.
///
/// The per-site integral has a cusp at its maximum, so it is refined by
/// slope bisection; the finite-chain curves are smooth.
pub fn optimal_field(
    length: ChainLength,
    coupling: f64,
    beta: f64,
    max_sites: usize,
    requested: Option<Backend>,
) -> Result<(Backend, FieldOptimum)> {
    let backend = route(length, max_sites, requested)?;
    if backend == Backend::Thermo && beta.is_infinite() {
        return Err(Error::Domain(
            "per-site QFI at beta = inf diverges at h = J, so there is no finite maximum".into(),
        ));
    }
    let refinement = if backend == Backend::Thermo {
        Refinement::SlopeBisection
    } else {
        Refinement::Golden
    };
    let opt = optimize::maximize(
        |h| Ok(qfi_at(length, coupling, h, beta, max_sites, Some(backend))?.qfi.value),
        ScanOptions::for_coupling(coupling),
        refinement,
    )?;
    Ok((backend, opt))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn routing_table() {
        assert_eq!(route(ChainLength::Finite(4), 12, None).unwrap(), Backend::Exact);
        assert_eq!(route(ChainLength::Finite(14), 12, None).unwrap(), Backend::Fermion);
        assert_eq!(route(ChainLength::Infinite, 12, None).unwrap(), Backend::Thermo);
        assert_eq!(
            route(ChainLength::Finite(4), 12, Some(Backend::Fermion)).unwrap(),
            Backend::Fermion
        );
        assert!(matches!(
            route(ChainLength::Finite(13), 12, None),
            Err(Error::Capacity { .. })
        ));
        assert!(matches!(
            route(ChainLength::Finite(14), 12, Some(Backend::Exact)),
            Err(Error::Capacity { .. })
        ));
        assert!(matches!(
            route(ChainLength::Finite(5), 12, Some(Backend::Fermion)),
            Err(Error::Unsupported(_))
        ));
        assert!(route(ChainLength::Finite(4), 12, Some(Backend::Thermo)).is_err());
    }

    #[test]
    fn length_tokens() {
        assert_eq!("inf".parse::<ChainLength>().unwrap(), ChainLength::Infinite);
        assert_eq!("8".parse::<ChainLength>().unwrap(), ChainLength::Finite(8));
        assert!("eight".parse::<ChainLength>().is_err());
        let json = serde_json::to_string(&vec![ChainLength::Finite(2), ChainLength::Infinite]).unwrap();
        assert_eq!(json, r#"[2,"inf"]"#);
        let back: Vec<ChainLength> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, vec![ChainLength::Finite(2), ChainLength::Infinite]);
    }

    #[test]
    fn backends_agree_where_they_overlap() {
        for l in [2, 4, 8] {
            let e = qfi_at(
                ChainLength::Finite(l),
                1.0,
                0.7,
                f64::INFINITY,
                12,
                Some(Backend::Exact),
            )
            .unwrap();
            let f = qfi_at(
                ChainLength::Finite(l),
                1.0,
                0.7,
                f64::INFINITY,
                12,
                Some(Backend::Fermion),
            )
            .unwrap();
            assert!((e.qfi.value / f.qfi.value - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn cusp_located_by_slope_bisection() {
        let (b, opt) = optimal_field(ChainLength::Infinite, 1.0, 20.0, 12, None).unwrap();
        assert_eq!(b, Backend::Thermo);
        assert_eq!(opt.refinement, Refinement::SlopeBisection);
        assert!((opt.field - 1.0).abs() < 1e-6);
    }

    #[test]
    fn no_ground_state_optimum_per_site() {
        let r = optimal_field(ChainLength::Infinite, 1.0, f64::INFINITY, 12, None);
        assert!(matches!(r, Err(Error::Domain(_))));
    }
}
