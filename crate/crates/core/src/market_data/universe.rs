use serde::{Deserialize, Serialize};

/// Sector membership with the index weights the exchange publishes. The
/// weights are informational and do not constrain portfolio weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectorUniverse {
    pub name: String,
    pub members: Vec<SectorMember>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectorMember {
    pub symbol: String,
    /// Percent weight in the sectoral index.
    pub index_weight: f64,
}

impl SectorUniverse {
    pub fn symbols(&self) -> Vec<String> {
        self.members.iter().map(|m| m.symbol.clone()).collect()
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.name.trim().is_empty() {
            return Err("sector name is empty".into());
        }
        if self.members.is_empty() {
            return Err(format!("sector {} has no members", self.name));
        }
        for (i, m) in self.members.iter().enumerate() {
            if m.symbol.trim().is_empty() {
                return Err(format!("sector {} has an empty symbol", self.name));
            }
            if self.members[..i].iter().any(|o| o.symbol == m.symbol) {
                return Err(format!("sector {} lists {} twice", self.name, m.symbol));
            }
            if !(m.index_weight > 0.0) {
                return Err(format!("{} in sector {} has index weight {}", m.symbol, self.name, m.index_weight));
            }
        }
        Ok(())
    }
}
