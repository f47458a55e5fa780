use serde::Serialize;

/// One privacy charge.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Charge {
    pub mechanism: String,
    pub epsilon: f64,
    pub delta: f64,
}

/// Ledger of privacy charges combined by basic composition.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct BudgetAccountant {
    ledger: Vec<Charge>,
}

impl BudgetAccountant {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn charge(&mut self, mechanism: impl Into<String>, epsilon: f64, delta: f64) {
        self.ledger.push(Charge {
            mechanism: mechanism.into(),
            epsilon,
            delta,
        });
    }

    pub fn ledger(&self) -> &[Charge] {
        &self.ledger
    }

    /// `(Σ ε, Σ δ)` over the ledger.
    pub fn total(&self) -> (f64, f64) {
        self.ledger
            .iter()
            .fold((0.0, 0.0), |(e, d), c| (e + c.epsilon, d + c.delta))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn totals_add_up() {
        let mut acc = BudgetAccountant::new();
        acc.charge("a", 0.25, 0.0);
        acc.charge("b", 0.5, 1e-6);
        assert_eq!(acc.total(), (0.75, 1e-6));
        assert_eq!(acc.ledger().len(), 2);
    }
}
