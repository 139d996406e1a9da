use std::fmt;

/// Ground-truth labels that the discovery pipeline must not consult.
///
/// The values are only reachable through [`SealedLabels::unseal`], which
/// demands an [`EvalGate`]. The gate is constructed exclusively by evaluation
/// code (metric reporting, acceptance checks), so a grep for
/// `EvalGate::for_evaluation` audits every read. Training, clustering, and
/// hyperparameter tuning never construct one; a dedicated audit test poisons
/// sealed labels and checks that tuning output is unchanged.
#[derive(Clone)]
pub struct SealedLabels {
    labels: Vec<usize>,
}

impl SealedLabels {
    pub fn seal(labels: Vec<usize>) -> Self {
        SealedLabels { labels }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Opens the seal. Callers must be evaluation code holding a gate.
    pub fn unseal(&self, _gate: EvalGate) -> &[usize] {
        &self.labels
    }

    /// Applies a relabeling without exposing values to the caller. Ids not
    /// covered by the mapping pass through unchanged.
    pub(crate) fn remap(&self, f: impl Fn(usize) -> usize) -> SealedLabels {
        SealedLabels {
            labels: self.labels.iter().map(|&l| f(l)).collect(),
        }
    }

    /// Appends further ground-truth values, sealing them in the process.
    pub(crate) fn extended(&self, more: &[usize]) -> SealedLabels {
        let mut labels = self.labels.clone();
        labels.extend_from_slice(more);
        SealedLabels { labels }
    }

    /// Serialization-only access, used when persisting a prepared bundle.
    /// Pipeline code must go through [`SealedLabels::unseal`].
    pub(crate) fn raw_for_persistence(&self) -> &[usize] {
        &self.labels
    }
}

impl fmt::Debug for SealedLabels {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Deliberately count-only so debug output cannot leak labels.
        write!(f, "SealedLabels({} sealed)", self.labels.len())
    }
}

/// Zero-sized token marking a call site as evaluation code.
pub struct EvalGate(());

impl EvalGate {
    pub fn for_evaluation() -> EvalGate {
        EvalGate(())
    }
}
