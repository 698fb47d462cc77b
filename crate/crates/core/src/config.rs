//! Run configuration and the JSON domain-spec interchange format. Every
//! report embeds the configuration and the seed so runs are reproducible
//! byte for byte.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bumping::BumpConfig;
use crate::domain::{catalog, DefiningFunction, DomainSpec};
use crate::error::{CoreError, Result};
use crate::poly::{CPoly, Mono};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub domain: DomainId,
    pub eta: f64,
    pub epsilon: f64,
    pub refine: u32,
    pub seed: u64,
    pub bump: BumpConfig,
    /// Cutoff transition band for the extension operator, in `r`-values.
    pub chi_band: (f64, f64),
    pub out_dir: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            domain: DomainId::Ball,
            eta: 0.5,
            epsilon: 0.05,
            refine: 1,
            seed: 7,
            bump: BumpConfig::default(),
            chi_band: (0.04, 0.36),
            out_dir: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainId {
    Ball,
    Egg1,
    Egg2,
    Egg3,
    Kn,
}

impl DomainId {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "ball" => Ok(DomainId::Ball),
            "egg1" => Ok(DomainId::Egg1),
            "egg2" => Ok(DomainId::Egg2),
            "egg3" => Ok(DomainId::Egg3),
            "kn" => Ok(DomainId::Kn),
            _ => Err(CoreError::Config(format!("unknown domain id: {s}"))),
        }
    }

    pub fn spec(&self) -> DomainSpec {
        match self {
            DomainId::Ball => catalog::ball(),
            DomainId::Egg1 => catalog::egg(1),
            DomainId::Egg2 => catalog::egg(2),
            DomainId::Egg3 => catalog::egg(3),
            DomainId::Kn => catalog::kohn_nirenberg(15.0 / 7.0),
        }
    }

    /// `(egg exponent k, type m at the distinguished point)`.
    pub fn k_and_type(&self) -> (u32, u32) {
        match self {
            DomainId::Ball | DomainId::Egg1 => (1, 2),
            DomainId::Egg2 => (2, 4),
            DomainId::Egg3 => (3, 6),
            DomainId::Kn => (4, 8),
        }
    }
}

/// One monomial of the JSON polynomial format:
/// `z1^a conj(z1)^ab z2^b conj(z2)^bb` with a complex coefficient.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MonomialJson {
    pub a: u8,
    pub ab: u8,
    pub b: u8,
    pub bb: u8,
    pub re: f64,
    pub im: f64,
}

/// JSON domain-spec interchange format.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DomainSpecJson {
    pub kind: String,
    #[serde(default)]
    pub id: Option<String>,
    #[serde(default)]
    pub monomials: Vec<MonomialJson>,
    pub neighborhood_radius: f64,
    #[serde(default = "default_shell_width")]
    pub shell_width: f64,
    #[serde(default)]
    pub catalog_params: std::collections::BTreeMap<String, f64>,
}

fn default_shell_width() -> f64 {
    0.4
}

impl DomainSpecJson {
    pub fn to_domain(&self) -> Result<DomainSpec> {
        match self.kind.as_str() {
            "polynomial" => {
                let terms: Vec<(Mono, Complex64)> = self
                    .monomials
                    .iter()
                    .map(|m| {
                        (
                            Mono { a: m.a, ab: m.ab, b: m.b, bb: m.bb },
                            Complex64::new(m.re, m.im),
                        )
                    })
                    .collect();
                let poly = CPoly::from_terms(terms);
                Ok(DomainSpec {
                    r: DefiningFunction::new(poly)?,
                    neighborhood_radius: self.neighborhood_radius,
                    shell_width: self.shell_width,
                    catalog_id: None,
                })
            }
            "catalog" => {
                let id = self
                    .id
                    .as_deref()
                    .ok_or_else(|| CoreError::Config("catalog kind needs an id".into()))?;
                let kn_c = self.catalog_params.get("kn_c").copied().unwrap_or(15.0 / 7.0);
                let mut d = catalog::by_id(id, kn_c)
                    .ok_or_else(|| CoreError::Config(format!("unknown catalog id {id}")))?;
                d.neighborhood_radius = self.neighborhood_radius;
                d.shell_width = self.shell_width;
                Ok(d)
            }
            other => Err(CoreError::Config(format!("unknown domain kind {other}"))),
        }
    }

    pub fn from_domain(d: &DomainSpec) -> Self {
        if let Some(id) = &d.catalog_id {
            DomainSpecJson {
                kind: "catalog".into(),
                id: Some(id.clone()),
                monomials: Vec::new(),
                neighborhood_radius: d.neighborhood_radius,
                shell_width: d.shell_width,
                catalog_params: Default::default(),
            }
        } else {
            DomainSpecJson {
                kind: "polynomial".into(),
                id: None,
                monomials: d
                    .r
                    .poly
                    .terms()
                    .iter()
                    .map(|(m, c)| MonomialJson {
                        a: m.a,
                        ab: m.ab,
                        b: m.b,
                        bb: m.bb,
                        re: c.re,
                        im: c.im,
                    })
                    .collect(),
                neighborhood_radius: d.neighborhood_radius,
                shell_width: d.shell_width,
                catalog_params: Default::default(),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn domain_json_round_trip() {
        let d = catalog::egg(2);
        let json = DomainSpecJson::from_domain(&d);
        let s = serde_json::to_string(&json).unwrap();
        let back: DomainSpecJson = serde_json::from_str(&s).unwrap();
        let d2 = back.to_domain().unwrap();
        assert_eq!(d2.catalog_id.as_deref(), Some("egg2"));
        let raw = r#"{"kind":"polynomial","monomials":[
            {"a":1,"ab":1,"b":0,"bb":0,"re":1.0,"im":0.0},
            {"a":0,"ab":0,"b":1,"bb":1,"re":1.0,"im":0.0},
            {"a":0,"ab":0,"b":0,"bb":0,"re":-1.0,"im":0.0}],
            "neighborhood_radius":2.0}"#;
        let parsed: DomainSpecJson = serde_json::from_str(raw).unwrap();
        let ball = parsed.to_domain().unwrap();
        let z = [Complex64::new(0.3, 0.1), Complex64::new(0.2, -0.4)];
        assert!((ball.r.eval(z) - catalog::ball().r.eval(z)).abs() < 1e-15);
    }

    #[test]
    fn non_real_polynomial_rejected() {
        let raw = r#"{"kind":"polynomial","monomials":[
            {"a":1,"ab":0,"b":0,"bb":0,"re":1.0,"im":0.0}],
            "neighborhood_radius":2.0}"#;
        let parsed: DomainSpecJson = serde_json::from_str(raw).unwrap();
        assert!(parsed.to_domain().is_err());
    }
}
