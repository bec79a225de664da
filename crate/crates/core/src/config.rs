//! Cluster descriptions: racks, helper degrees, traffic ratio and link costs.

use std::fmt;

use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};

/// One rack: its node count and the number of same-rack helpers a newcomer
/// placed in it contacts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RackSpec {
    pub nodes: usize,
    pub cheap_degree: usize,
}

impl RackSpec {
    pub fn new(nodes: usize, cheap_degree: usize) -> Self {
        Self { nodes, cheap_degree }
    }
}

/// A validated system description. Racks are kept sorted by ascending
/// `cheap_degree` (ties by node count), so rack 0 always has the smallest
/// repair bandwidth.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemConfig {
    pub file_size: Rational,
    pub k: usize,
    pub d: usize,
    pub tau: Rational,
    pub cheap_cost: Rational,
    pub expensive_cost: Rational,
    racks: Vec<RackSpec>,
    expensive_degrees: Vec<usize>,
}

impl SystemConfig {
    pub fn new(
        file_size: Rational,
        k: usize,
        d: usize,
        tau: Rational,
        cheap_cost: Rational,
        expensive_cost: Rational,
        racks: Vec<RackSpec>,
    ) -> Result<Self> {
        let mut racks = racks;
        racks.sort_by_key(|r| (r.cheap_degree, r.nodes));
        validate(&file_size, k, d, &tau, &cheap_cost, &expensive_cost, &racks)?;
        let expensive_degrees = racks.iter().map(|r| d - r.cheap_degree).collect();
        Ok(Self {
            file_size,
            k,
            d,
            tau,
            cheap_cost,
            expensive_cost,
            racks,
            expensive_degrees,
        })
    }

    /// Shorthand used by tests and examples: unit file, unit costs.
    pub fn simple(k: usize, d: usize, tau: Rational, racks: &[(usize, usize)]) -> Result<Self> {
        Self::new(
            Rational::one(),
            k,
            d,
            tau,
            Rational::one(),
            Rational::one(),
            racks.iter().map(|&(n, dc)| RackSpec::new(n, dc)).collect(),
        )
    }

    pub fn racks(&self) -> &[RackSpec] {
        &self.racks
    }

    pub fn rack_count(&self) -> usize {
        self.racks.len()
    }

    pub fn total_nodes(&self) -> usize {
        self.racks.iter().map(|r| r.nodes).sum()
    }

    /// d_e^j = d - d_c^j for every rack, in rack order.
    pub fn expensive_degrees(&self) -> &[usize] {
        &self.expensive_degrees
    }

    pub fn cheap_degree(&self, rack: usize) -> usize {
        self.racks[rack].cheap_degree
    }

    pub fn expensive_degree(&self, rack: usize) -> usize {
        self.expensive_degrees[rack]
    }

    /// The same system with a different traffic ratio.
    pub fn with_tau(&self, tau: Rational) -> Result<Self> {
        Self::new(
            self.file_size.clone(),
            self.k,
            self.d,
            tau,
            self.cheap_cost.clone(),
            self.expensive_cost.clone(),
            self.racks.clone(),
        )
    }

    pub fn with_file_size(&self, file_size: Rational) -> Result<Self> {
        Self::new(
            file_size,
            self.k,
            self.d,
            self.tau.clone(),
            self.cheap_cost.clone(),
            self.expensive_cost.clone(),
            self.racks.clone(),
        )
    }

    /// Income of the first newcomer of rack 0, as a multiple of beta_e:
    /// d_c^1 tau + d_e^1. It bounds every feasible coefficient.
    pub fn feasibility_bound(&self) -> Rational {
        self.rack_bandwidth_coeff(0)
    }

    /// gamma^j / beta_e = d_c^j tau + d_e^j.
    pub fn rack_bandwidth_coeff(&self, rack: usize) -> Rational {
        rational::from_usize(self.cheap_degree(rack)) * &self.tau
            + rational::from_usize(self.expensive_degree(rack))
    }

    /// C_T^j / beta_e = C_c d_c^j tau + C_e d_e^j.
    pub fn rack_cost_coeff(&self, rack: usize) -> Rational {
        &self.cheap_cost * rational::from_usize(self.cheap_degree(rack)) * &self.tau
            + &self.expensive_cost * rational::from_usize(self.expensive_degree(rack))
    }

    pub fn to_document(&self) -> ConfigDocument {
        ConfigDocument {
            file_size: RationalField::Text(rational::render(&self.file_size)),
            k: self.k,
            d: self.d,
            tau: RationalField::Text(rational::render(&self.tau)),
            cheap_cost: RationalField::Text(rational::render(&self.cheap_cost)),
            expensive_cost: RationalField::Text(rational::render(&self.expensive_cost)),
            racks: self.racks.clone(),
        }
    }
}

impl fmt::Display for SystemConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "M={} k={} d={} tau={} racks=[",
            rational::render(&self.file_size),
            self.k,
            self.d,
            rational::render(&self.tau)
        )?;
        for (j, r) in self.racks.iter().enumerate() {
            if j > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{{n={}, dc={}}}", r.nodes, r.cheap_degree)?;
        }
        f.write_str("]")
    }
}

fn validate(
    file_size: &Rational,
    k: usize,
    d: usize,
    tau: &Rational,
    cheap_cost: &Rational,
    expensive_cost: &Rational,
    racks: &[RackSpec],
) -> Result<()> {
    let bad = |msg: String| Err(Error::InvalidConfig(msg));
    if racks.is_empty() {
        return bad("at least one rack is required".into());
    }
    if !file_size.is_positive() {
        return bad(format!("file_size {} must be > 0", rational::render(file_size)));
    }
    if k == 0 {
        return bad("k must be >= 1".into());
    }
    if d == 0 {
        return bad("d must be >= 1".into());
    }
    if *tau < Rational::one() {
        return bad(format!("tau < 1 (tau = {})", rational::render(tau)));
    }
    if cheap_cost.is_negative() {
        return bad(format!("cheap_cost {} must be >= 0", rational::render(cheap_cost)));
    }
    if expensive_cost < cheap_cost {
        return bad(format!(
            "expensive_cost {} is below cheap_cost {}",
            rational::render(expensive_cost),
            rational::render(cheap_cost)
        ));
    }
    for r in racks {
        if r.nodes == 0 {
            return bad("every rack needs at least one node".into());
        }
        if r.cheap_degree > r.nodes - 1 {
            return bad(format!(
                "cheap_degree {} exceeds nodes-1 = {}",
                r.cheap_degree,
                r.nodes - 1
            ));
        }
    }
    let n: usize = racks.iter().map(|r| r.nodes).sum();
    if k > n {
        return bad(format!("k = {k} exceeds the node count {n}"));
    }
    if d > n - 1 {
        return bad(format!("d = {d} exceeds n-1 = {}", n - 1));
    }
    if k > d {
        return bad(format!("k > d unsupported (k = {k}, d = {d})"));
    }
    for (j, r) in racks.iter().enumerate() {
        if r.cheap_degree > d {
            return bad(format!(
                "cheap_degree {} of rack {} exceeds d = {d}",
                r.cheap_degree,
                j + 1
            ));
        }
        let de = d - r.cheap_degree;
        if racks.len() >= 2 && de == 0 {
            return bad(format!(
                "rack {} has no expensive helpers (d_e = d - d_c = 0)",
                j + 1
            ));
        }
        if racks.len() == 1 && de != 0 {
            return bad(format!(
                "a single rack needs cheap_degree = d (got {} and d = {d})",
                r.cheap_degree
            ));
        }
        let others = n - r.nodes;
        if de > others {
            return bad(format!(
                "rack {} needs d_e = {de} cross-rack helpers but other racks hold only {others} nodes",
                j + 1
            ));
        }
    }
    Ok(())
}

/// A rational accepted either as a JSON string (`"6/5"`, `"2"`) or a bare
/// JSON integer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RationalField {
    Integer(i64),
    Text(String),
}

impl RationalField {
    fn resolve(&self, field: &str) -> Result<Rational> {
        match self {
            RationalField::Integer(i) => Ok(rational::int(*i)),
            RationalField::Text(s) => rational::parse(s).ok_or_else(|| {
                Error::Schema(format!("field `{field}`: `{s}` is not a rational"))
            }),
        }
    }
}

/// On-disk JSON shape of a configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    pub file_size: RationalField,
    pub k: usize,
    pub d: usize,
    pub tau: RationalField,
    pub cheap_cost: RationalField,
    pub expensive_cost: RationalField,
    pub racks: Vec<RackSpec>,
}

impl ConfigDocument {
    pub fn into_config(self) -> Result<SystemConfig> {
        SystemConfig::new(
            self.file_size.resolve("file_size")?,
            self.k,
            self.d,
            self.tau.resolve("tau")?,
            self.cheap_cost.resolve("cheap_cost")?,
            self.expensive_cost.resolve("expensive_cost")?,
            self.racks,
        )
    }
}

/// Parses a JSON configuration document and validates it.
pub fn parse_and_validate(raw: &str) -> Result<SystemConfig> {
    let doc: ConfigDocument =
        serde_json::from_str(raw).map_err(|e| Error::Schema(e.to_string()))?;
    doc.into_config()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    const TWO_RACK_K10: &str = r#"{ "file_size": "1", "k": 10, "d": 11, "tau": "2",
        "cheap_cost": "1", "expensive_cost": "10",
        "racks": [ { "nodes": 6, "cheap_degree": 5 }, { "nodes": 6, "cheap_degree": 5 } ] }"#;

    #[test]
    fn parses_the_documented_example() {
        let cfg = parse_and_validate(TWO_RACK_K10).unwrap();
        assert_eq!(cfg.k, 10);
        assert_eq!(cfg.d, 11);
        assert_eq!(cfg.tau, int(2));
        assert_eq!(cfg.expensive_degrees(), &[6, 6]);
        assert_eq!(cfg.expensive_cost, int(10));
    }

    #[test]
    fn racks_are_sorted_by_cheap_degree() {
        let raw = r#"{ "file_size": 1, "k": 10, "d": 10, "tau": "2",
            "cheap_cost": 1, "expensive_cost": 10,
            "racks": [ { "nodes": 6, "cheap_degree": 5 }, { "nodes": 7, "cheap_degree": 4 } ] }"#;
        let cfg = parse_and_validate(raw).unwrap();
        assert_eq!(cfg.racks(), &[RackSpec::new(7, 4), RackSpec::new(6, 5)]);
        assert_eq!(cfg.expensive_degrees(), &[6, 5]);
    }

    #[test]
    fn lopsided_two_rack_system_is_valid() {
        let cfg = SystemConfig::simple(3, 6, int(2), &[(2, 1), (5, 4)]).unwrap();
        assert_eq!(cfg.expensive_degrees(), &[5, 2]);
    }

    #[test]
    fn missing_field_is_a_schema_error() {
        let raw = r#"{ "file_size": "1", "k": 10, "tau": "2", "cheap_cost": "1",
            "expensive_cost": "10", "racks": [] }"#;
        assert!(matches!(parse_and_validate(raw), Err(Error::Schema(_))));
        let raw = r#"{ "file_size": "x/y", "k": 1, "d": 1, "tau": "2", "cheap_cost": "1",
            "expensive_cost": "10", "racks": [ { "nodes": 2, "cheap_degree": 1 } ] }"#;
        assert!(matches!(parse_and_validate(raw), Err(Error::Schema(_))));
    }

    #[test]
    fn violated_invariants_are_named() {
        let err = SystemConfig::simple(3, 6, int(2), &[(6, 6), (6, 5)]).unwrap_err();
        assert_eq!(
            err,
            Error::InvalidConfig("cheap_degree 6 exceeds nodes-1 = 5".into())
        );
        let err = SystemConfig::simple(5, 4, int(2), &[(3, 1), (3, 2)]).unwrap_err();
        assert!(err.to_string().contains("k > d unsupported"));
        let err = SystemConfig::simple(3, 4, crate::rational::ratio(1, 2), &[(3, 1), (3, 2)])
            .unwrap_err();
        assert!(err.to_string().contains("tau < 1"));
        // rack 0 would need 9 cross-rack helpers out of 3 nodes
        let err = SystemConfig::simple(3, 10, int(2), &[(9, 1), (3, 2)]).unwrap_err();
        assert!(err.to_string().contains("cross-rack helpers"));
        let err = SystemConfig::simple(2, 3, int(2), &[(5, 2)]).unwrap_err();
        assert!(err.to_string().contains("single rack"));
    }

    #[test]
    fn document_round_trips() {
        let cfg = parse_and_validate(TWO_RACK_K10).unwrap();
        let text = serde_json::to_string(&cfg.to_document()).unwrap();
        assert_eq!(parse_and_validate(&text).unwrap(), cfg);
    }
}
