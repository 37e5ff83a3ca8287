use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Every numerical threshold in one place. All are overridable by name.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub herm_tol: f64,
    pub eig_tol: f64,
    pub ledger_tol: f64,
    pub quad_tol: f64,
    pub ode_atol: f64,
    pub ode_rtol: f64,
    pub flow_tol: f64,
    pub root_tol: f64,
    pub xi_tol: f64,
    pub inv_tol: f64,
    pub reflectionless_tol: f64,
    pub riccati_tol: f64,
    pub skdv_tol: f64,
    pub algebraic_tol: f64,
    pub pole_margin: f64,
    pub edge_margin: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            herm_tol: 1e-10,
            eig_tol: 1e-12,
            ledger_tol: 1e-10,
            quad_tol: 1e-9,
            ode_atol: 1e-11,
            ode_rtol: 1e-11,
            flow_tol: 1e-8,
            root_tol: 1e-10,
            xi_tol: 1e-4,
            inv_tol: 1e-6,
            reflectionless_tol: 1e-6,
            riccati_tol: 1e-7,
            skdv_tol: 1e-7,
            algebraic_tol: 1e-9,
            pole_margin: 1e-6,
            edge_margin: 1e-3,
        }
    }
}

impl Tolerances {
    pub const KEYS: [&'static str; 16] = [
        "herm_tol",
        "eig_tol",
        "ledger_tol",
        "quad_tol",
        "ode_atol",
        "ode_rtol",
        "flow_tol",
        "root_tol",
        "xi_tol",
        "inv_tol",
        "reflectionless_tol",
        "riccati_tol",
        "skdv_tol",
        "algebraic_tol",
        "pole_margin",
        "edge_margin",
    ];

    fn slot(&mut self, key: &str) -> Option<&mut f64> {
        Some(match key {
            "herm_tol" => &mut self.herm_tol,
            "eig_tol" => &mut self.eig_tol,
            "ledger_tol" => &mut self.ledger_tol,
            "quad_tol" => &mut self.quad_tol,
            "ode_atol" => &mut self.ode_atol,
            "ode_rtol" => &mut self.ode_rtol,
            "flow_tol" => &mut self.flow_tol,
            "root_tol" => &mut self.root_tol,
            "xi_tol" => &mut self.xi_tol,
            "inv_tol" => &mut self.inv_tol,
            "reflectionless_tol" => &mut self.reflectionless_tol,
            "riccati_tol" => &mut self.riccati_tol,
            "skdv_tol" => &mut self.skdv_tol,
            "algebraic_tol" => &mut self.algebraic_tol,
            "pole_margin" => &mut self.pole_margin,
            "edge_margin" => &mut self.edge_margin,
            _ => return None,
        })
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        let mut copy = *self;
        copy.slot(key).map(|v| *v)
    }

    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::Invalid(format!("tolerance {key} must be positive, got {value}")));
        }
        match self.slot(key) {
            Some(v) => {
                *v = value;
                Ok(())
            }
            None => Err(Error::Invalid(format!("unknown tolerance {key}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_and_get() {
        let mut t = Tolerances::default();
        t.set("ledger_tol", 1e-8).unwrap();
        assert_eq!(t.get("ledger_tol"), Some(1e-8));
        assert!(t.set("nope", 1.0).is_err());
        assert!(t.set("quad_tol", -1.0).is_err());
        for k in Tolerances::KEYS {
            assert!(t.get(k).is_some());
        }
    }
}
