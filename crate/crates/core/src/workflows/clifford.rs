use rand::Rng;

use crate::gateset::{ideal_gate, GATE_NAMES};
use crate::{CMatrix, Error, Result};

const MAX_WORD: usize = 5;
const MATCH_TOL: f64 = 1e-9;

/// `|Tr(a† b)/2|²`: one iff `a` and `b` agree up to a global phase.
fn phase_overlap(a: &CMatrix<f64>, b: &CMatrix<f64>) -> f64 {
    ((a.adjoint() * b).trace() / 2.0).norm_sqr()
}

fn same_up_to_phase(a: &CMatrix<f64>, b: &CMatrix<f64>) -> bool {
    phase_overlap(a, b) > 1.0 - MATCH_TOL
}

#[derive(Clone, Debug)]
pub struct CliffordEntry {
    /// Gates in execution order; realizes `g_k ⋯ g_1`.
    pub word: Vec<String>,
    pub unitary: CMatrix<f64>,
}

/// The 24 single-qubit Cliffords, each as the shortest word over the four
/// ±90° gates. Ties go to the earlier word in generator order.
#[derive(Clone, Debug)]
pub struct CliffordTable {
    entries: Vec<CliffordEntry>,
}

impl CliffordTable {
    /// Breadth-first search over words of up to five gates acting on `target`.
    pub fn build(target: usize) -> Result<Self> {
        let gens: Vec<(String, CMatrix<f64>)> = GATE_NAMES
            .iter()
            .map(|g| {
                let name = format!("{g}[{target}]");
                let u = ideal_gate::<f64>(&name)?;
                Ok((name, u))
            })
            .collect::<Result<_>>()?;
        let mut entries = vec![CliffordEntry { word: Vec::new(), unitary: CMatrix::identity(2, 2) }];
        let mut frontier = vec![0usize];
        for _ in 0..MAX_WORD {
            let mut next = Vec::new();
            for &i in &frontier {
                for (name, g) in &gens {
                    let u = g * &entries[i].unitary;
                    if entries.iter().any(|e| same_up_to_phase(&e.unitary, &u)) {
                        continue;
                    }
                    let mut word = entries[i].word.clone();
                    word.push(name.clone());
                    entries.push(CliffordEntry { word, unitary: u });
                    next.push(entries.len() - 1);
                }
            }
            frontier = next;
        }
        if entries.len() != 24 {
            return Err(Error::Precondition(format!("gate set generates {} Cliffords within {MAX_WORD} gates, expected 24", entries.len())));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[CliffordEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Index of the Clifford equal to `u` up to phase.
    pub fn find(&self, u: &CMatrix<f64>) -> Option<usize> {
        self.entries.iter().position(|e| same_up_to_phase(&e.unitary, u))
    }

    /// Random Clifford sequences of `rb_length` elements followed by the
    /// Clifford that inverts them, flattened to gate names.
    pub fn single_length_rb<R: Rng>(&self, rb_number: usize, rb_length: usize, rng: &mut R) -> Result<Vec<Vec<String>>> {
        if rb_number == 0 || rb_length == 0 {
            return Err(Error::Precondition("rb_number and rb_length must be at least 1".into()));
        }
        (0..rb_number)
            .map(|_| {
                let mut seq = Vec::new();
                let mut total = CMatrix::<f64>::identity(2, 2);
                for _ in 0..rb_length {
                    let e = &self.entries[rng.random_range(0..self.entries.len())];
                    seq.extend(e.word.iter().cloned());
                    total = &e.unitary * total;
                }
                let inv = self.find(&total.adjoint()).ok_or_else(|| Error::Precondition("sequence product is not a Clifford".into()))?;
                seq.extend(self.entries[inv].word.iter().cloned());
                Ok(seq)
            })
            .collect()
    }
}

/// Ideal product of a gate-name sequence, first gate applied first.
pub fn ideal_product(seq: &[String]) -> Result<CMatrix<f64>> {
    seq.iter().try_fold(CMatrix::<f64>::identity(2, 2), |acc, g| Ok(ideal_gate::<f64>(g)? * acc))
}

/// Phase-invariant fidelity `|Tr(U)/2|²` of a sequence's ideal product with
/// the identity.
pub fn identity_fidelity(seq: &[String]) -> Result<f64> {
    let u = ideal_product(seq)?;
    Ok(phase_overlap(&CMatrix::identity(2, 2), &u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Clifford group by closure of H and S, independent of the gate set.
    fn clifford_group() -> Vec<CMatrix<f64>> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let z = |r: f64, i: f64| C64::new(r, i);
        let h = CMatrix::from_row_slice(2, 2, &[z(s, 0.), z(s, 0.), z(s, 0.), z(-s, 0.)]);
        let ph = CMatrix::from_row_slice(2, 2, &[z(1., 0.), z(0., 0.), z(0., 0.), z(0., 1.)]);
        let mut group = vec![CMatrix::identity(2, 2)];
        let mut i = 0;
        while i < group.len() {
            for g in [&h, &ph] {
                let u = g * &group[i];
                if !group.iter().any(|e| same_up_to_phase(e, &u)) {
                    group.push(u);
                }
            }
            i += 1;
        }
        group
    }

    #[test]
    fn table_is_the_clifford_group() {
        let group = clifford_group();
        assert_eq!(group.len(), 24);
        let t = CliffordTable::build(0).unwrap();
        assert_eq!(t.len(), 24);
        for e in t.entries() {
            assert!(group.iter().any(|g| same_up_to_phase(g, &e.unitary)));
            let product = ideal_product(&e.word).unwrap();
            assert!(phase_overlap(&product, &e.unitary) > 1.0 - 1e-12);
            assert!(e.word.len() <= MAX_WORD);
        }
        for g in &group {
            assert!(t.find(g).is_some());
        }
    }

    #[test]
    fn identity_is_empty_and_x180_is_two_rx90p() {
        let t = CliffordTable::build(0).unwrap();
        assert!(t.entries()[0].word.is_empty());
        let z = |r: f64| C64::new(r, 0.0);
        let sx = CMatrix::from_row_slice(2, 2, &[z(0.), z(1.), z(1.), z(0.)]);
        let i = t.find(&sx).unwrap();
        assert_eq!(t.entries()[i].word, vec!["rx90p[0]", "rx90p[0]"]);
    }

    #[test]
    fn words_are_shortest() {
        let t = CliffordTable::build(0).unwrap();
        let lens: Vec<usize> = t.entries().iter().map(|e| e.word.len()).collect();
        assert!(lens.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(lens.iter().filter(|&&l| l == 1).count(), 4);
    }

    #[test]
    fn sequences_invert_to_identity() {
        let t = CliffordTable::build(0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let seqs = t.single_length_rb(100, 5, &mut rng).unwrap();
        assert_eq!(seqs.len(), 100);
        for s in &seqs {
            assert!(identity_fidelity(s).unwrap() > 1.0 - 1e-9);
        }
        let one = t.single_length_rb(1, 5, &mut rng).unwrap();
        assert_eq!(one.len(), 1);
        assert!(t.single_length_rb(0, 5, &mut rng).is_err());
        assert!(t.single_length_rb(1, 0, &mut rng).is_err());
    }
}
