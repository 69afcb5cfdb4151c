use std::collections::{BTreeMap, BTreeSet};

use rand::{CryptoRng, RngCore};

use super::PolicyNode;
use crate::codec::{Decode, Encode, Reader, Writer};
use crate::error::{Error, Result};
use crate::group::Scalar;
use crate::ids::Attribute;

/// One row of the share-generating matrix together with its label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Row<L> {
    pub label: L,
    pub vector: Vec<Scalar>,
}

/// An `l x n` matrix over `Z_p` with one label per row. Labels are pairwise
/// distinct.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AccessStructure<L> {
    rows: Vec<Row<L>>,
    width: usize,
}

/// `lambda_j = A_j . v` and `w_j = A_j . w` for every row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShareVector {
    pub lambdas: Vec<Scalar>,
    pub ws: Vec<Scalar>,
}

/// Shares plus the vectors they were generated from.
#[derive(Clone, Debug)]
pub struct Shares {
    pub shares: ShareVector,
    pub v: Vec<Scalar>,
    pub w: Vec<Scalar>,
}

fn dot(a: &[Scalar], b: &[Scalar]) -> Scalar {
    a.iter().zip(b).fold(Scalar::zero(), |acc, (x, y)| acc + *x * *y)
}

impl AccessStructure<Attribute> {
    /// Compiles a formula into a matrix: the root carries `(1)`, an OR gate
    /// hands its vector to every child, and each two-input AND split opens a
    /// new column `c`, giving the left child `(v, 0.., 1)` and the rest
    /// `(0.., -1)`. Vectors are zero-padded to the final width.
    pub fn compile(policy: &PolicyNode) -> Result<Self> {
        policy.validate()?;
        let mut rows = Vec::new();
        let mut width = 1;
        assign(policy, vec![Scalar::one()], &mut width, &mut rows);
        for row in &mut rows {
            row.vector.resize(width, Scalar::zero());
        }
        Ok(AccessStructure { rows, width })
    }
}

fn assign(node: &PolicyNode, vector: Vec<Scalar>, width: &mut usize, rows: &mut Vec<Row<Attribute>>) {
    match node {
        PolicyNode::Leaf(a) => rows.push(Row { label: a.clone(), vector }),
        PolicyNode::Or(children) => {
            for child in children {
                assign(child, vector.clone(), width, rows);
            }
        }
        PolicyNode::And(children) => {
            let (last, init) = children.split_last().expect("validated gate");
            let mut rest = vector;
            for child in init {
                *width += 1;
                let col = *width - 1;
                let mut left = rest;
                left.resize(*width, Scalar::zero());
                left[col] = Scalar::one();
                rest = vec![Scalar::zero(); *width];
                rest[col] = -Scalar::one();
                assign(child, left, width, rows);
            }
            assign(last, rest, width, rows);
        }
    }
}

impl<L> AccessStructure<L> {
    /// Builds a structure from explicit rows. Every row must have `width`
    /// entries and labels must be distinct.
    pub fn from_rows(rows: Vec<Row<L>>, width: usize) -> Result<Self>
    where
        L: Ord + std::fmt::Debug,
    {
        if rows.is_empty() || width == 0 {
            return Err(Error::InvalidPolicy("empty access structure".into()));
        }
        if rows.iter().any(|r| r.vector.len() != width) {
            return Err(Error::InvalidPolicy("ragged matrix".into()));
        }
        let mut seen = BTreeSet::new();
        for r in &rows {
            if !seen.insert(&r.label) {
                return Err(Error::DuplicateAttribute(format!("{:?}", r.label)));
            }
        }
        Ok(AccessStructure { rows, width })
    }

    pub fn rows(&self) -> &[Row<L>] {
        &self.rows
    }

    /// `l`
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// `n`
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn labels(&self) -> impl Iterator<Item = &L> {
        self.rows.iter().map(|r| &r.label)
    }

    /// Relabels rows, keeping their order and vectors.
    pub fn map_labels<M>(&self, mut f: impl FnMut(&L) -> M) -> AccessStructure<M> {
        AccessStructure {
            rows: self
                .rows
                .iter()
                .map(|r| Row { label: f(&r.label), vector: r.vector.clone() })
                .collect(),
            width: self.width,
        }
    }

    /// Shares for explicit `v` and `w` (both of length `n`).
    pub fn share_with(&self, v: &[Scalar], w: &[Scalar]) -> ShareVector {
        assert_eq!(v.len(), self.width);
        assert_eq!(w.len(), self.width);
        ShareVector {
            lambdas: self.rows.iter().map(|r| dot(&r.vector, v)).collect(),
            ws: self.rows.iter().map(|r| dot(&r.vector, w)).collect(),
        }
    }

    /// Shares `s` with `v = (s, y_2..y_n)` and zero with `w = (0, z_2..z_n)`,
    /// the `y_i`, `z_i` fresh and nonzero.
    pub fn share<R: RngCore + CryptoRng + ?Sized>(&self, s: Scalar, rng: &mut R) -> Shares {
        let mut v = vec![s];
        let mut w = vec![Scalar::zero()];
        for _ in 1..self.width {
            v.push(Scalar::random(rng));
        }
        for _ in 1..self.width {
            w.push(Scalar::random(rng));
        }
        Shares { shares: self.share_with(&v, &w), v, w }
    }

    /// Coefficients `c_j` (nonzero only) with `sum c_j A_j = (1, 0, .., 0)`
    /// using only rows in `rows`, or `None` when the target vector is not in
    /// their span. Gauss-Jordan elimination takes variables in ascending row
    /// order and sets free variables to zero, so the answer is deterministic.
    pub fn reconstruct(&self, rows: &[usize]) -> Option<BTreeMap<usize, Scalar>> {
        let mut picked: Vec<usize> = rows.iter().copied().filter(|&i| i < self.rows.len()).collect();
        picked.sort_unstable();
        picked.dedup();
        let k = picked.len();
        let n = self.width;
        // Augmented system A_I^T c = e_1: n equations, k unknowns.
        let mut m: Vec<Vec<Scalar>> = (0..n)
            .map(|eq| {
                let mut line: Vec<Scalar> = picked.iter().map(|&i| self.rows[i].vector[eq]).collect();
                line.push(if eq == 0 { Scalar::one() } else { Scalar::zero() });
                line
            })
            .collect();
        let mut pivots = Vec::new();
        let mut rank = 0;
        for var in 0..k {
            let Some(p) = (rank..n).find(|&r| !m[r][var].is_zero()) else { continue };
            m.swap(rank, p);
            let inv = m[rank][var].invert().expect("nonzero pivot");
            for x in m[rank].iter_mut() {
                *x = *x * inv;
            }
            for r in 0..n {
                if r != rank && !m[r][var].is_zero() {
                    let f = m[r][var];
                    let pivot_line = m[rank].clone();
                    for (x, d) in m[r].iter_mut().zip(pivot_line) {
                        *x = *x - f * d;
                    }
                }
            }
            pivots.push(var);
            rank += 1;
        }
        if m[rank..].iter().any(|line| !line[k].is_zero()) {
            return None;
        }
        Some(
            pivots
                .iter()
                .enumerate()
                .filter(|(r, _)| !m[*r][k].is_zero())
                .map(|(r, &var)| (picked[var], m[r][k]))
                .collect(),
        )
    }

    /// True iff the rows labelled by `held` can reconstruct.
    pub fn is_authorized(&self, held: &BTreeSet<L>) -> bool
    where
        L: Ord,
    {
        let rows: Vec<usize> = self
            .rows
            .iter()
            .enumerate()
            .filter(|(_, r)| held.contains(&r.label))
            .map(|(i, _)| i)
            .collect();
        !rows.is_empty() && self.reconstruct(&rows).is_some()
    }
}

// Matrix entries are raw 32-byte words, not `Writer::scalar`; element
// tallies leave them out.
impl<L: Encode> Encode for AccessStructure<L> {
    fn encode(&self, w: &mut Writer) {
        w.len(self.width).len(self.rows.len());
        for row in &self.rows {
            row.label.encode(w);
            for x in &row.vector {
                w.fixed(&x.to_bytes());
            }
        }
    }
}

impl<L: Decode + Ord + std::fmt::Debug> Decode for AccessStructure<L> {
    fn decode(r: &mut Reader<'_>) -> Result<Self> {
        let width = r.len(1)?;
        let count = r.len(width * Scalar::BYTES)?;
        let mut rows = Vec::with_capacity(count);
        for _ in 0..count {
            let label = L::decode(r)?;
            let vector = (0..width)
                .map(|_| Scalar::from_bytes(r.fixed(Scalar::BYTES)?))
                .collect::<Result<Vec<_>>>()?;
            rows.push(Row { label, vector });
        }
        AccessStructure::from_rows(rows, width).map_err(|e| Error::Decode(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn s(v: i64) -> Scalar {
        if v < 0 {
            -Scalar::from_u64(v.unsigned_abs())
        } else {
            Scalar::from_u64(v as u64)
        }
    }

    fn compile(text: &str) -> AccessStructure<Attribute> {
        AccessStructure::compile(&text.parse().unwrap()).unwrap()
    }

    fn vectors(a: &AccessStructure<Attribute>) -> Vec<(String, Vec<Scalar>)> {
        a.rows().iter().map(|r| (r.label.to_string(), r.vector.clone())).collect()
    }

    #[test]
    fn single_leaf() {
        let a = compile("aa1:a");
        assert_eq!(vectors(&a), vec![("aa1:a".to_string(), vec![s(1)])]);
        assert_eq!(a.reconstruct(&[0]), Some([(0, s(1))].into()));
    }

    #[test]
    fn two_input_and() {
        let a = compile("aa1:a AND aa1:b");
        assert_eq!(
            vectors(&a),
            vec![("aa1:a".to_string(), vec![s(1), s(1)]), ("aa1:b".to_string(), vec![s(0), s(-1)])]
        );
        assert_eq!(a.reconstruct(&[0, 1]), Some([(0, s(1)), (1, s(1))].into()));
        assert_eq!(a.reconstruct(&[0]), None);
        assert_eq!(a.reconstruct(&[1]), None);
    }

    #[test]
    fn two_input_or() {
        let a = compile("aa1:a OR aa1:b");
        assert_eq!(vectors(&a), vec![("aa1:a".to_string(), vec![s(1)]), ("aa1:b".to_string(), vec![s(1)])]);
        assert_eq!(a.reconstruct(&[1]), Some([(1, s(1))].into()));
        // lowest-index pivot wins; the free variable stays zero
        assert_eq!(a.reconstruct(&[0, 1]), Some([(0, s(1))].into()));
    }

    #[test]
    fn three_input_and_chain() {
        let a = compile("aa1:a AND aa1:b AND aa1:c");
        assert_eq!(a.width(), 3);
        assert_eq!(
            vectors(&a).into_iter().map(|(_, v)| v).collect::<Vec<_>>(),
            vec![vec![s(1), s(1), s(0)], vec![s(0), s(-1), s(1)], vec![s(0), s(0), s(-1)]]
        );
        assert!(a.reconstruct(&[0, 1]).is_none());
        assert_eq!(a.reconstruct(&[0, 1, 2]).unwrap().len(), 3);
    }

    #[test]
    fn width_is_one_plus_and_splits() {
        for text in ["aa1:a", "(aa1:a AND aa1:b) OR (aa1:c AND aa1:d AND aa1:e)", "aa1:a AND (aa1:b OR aa1:c AND aa1:d)"] {
            let p: PolicyNode = text.parse().unwrap();
            assert_eq!(AccessStructure::compile(&p).unwrap().width(), 1 + p.and_splits());
        }
    }

    #[test]
    fn share_examples() {
        let a = compile("aa1:a");
        let sh = a.share_with(&[s(7)], &[s(0)]);
        assert_eq!(sh.lambdas, vec![s(7)]);
        assert_eq!(sh.ws, vec![s(0)]);

        let a = compile("aa1:a AND aa1:b");
        let sh = a.share_with(&[s(7), s(3)], &[s(0), s(5)]);
        assert_eq!(sh.lambdas, vec![s(10), s(-3)]);
        assert_eq!(sh.ws, vec![s(5), s(-5)]);
    }

    #[test]
    fn random_shares_recombine() {
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let a = compile("(aa1:a AND aa2:b) OR (aa1:c AND (aa2:d OR aa3:e))");
        let secret = Scalar::random(&mut rng);
        let Shares { shares, v, w } = a.share(secret, &mut rng);
        assert_eq!(v[0], secret);
        assert!(w[0].is_zero());
        let c = a.reconstruct(&[2, 4]).unwrap();
        let lam = c.iter().fold(Scalar::zero(), |acc, (&j, &cj)| acc + cj * shares.lambdas[j]);
        let ws = c.iter().fold(Scalar::zero(), |acc, (&j, &cj)| acc + cj * shares.ws[j]);
        assert_eq!(lam, secret);
        assert!(ws.is_zero());
    }

    #[test]
    fn authorization_on_labels() {
        let a = compile("aa1:a OR aa1:b");
        let b = Attribute::new("aa1:b").unwrap();
        assert!(a.is_authorized(&[b].into()));
        let a = compile("aa1:a AND aa1:b");
        assert!(!a.is_authorized(&[Attribute::new("aa1:a").unwrap()].into()));
        assert!(!a.is_authorized(&BTreeSet::new()));
    }

    #[test]
    fn from_rows_checks() {
        let row = |l: u8, v: Vec<Scalar>| Row { label: l, vector: v };
        assert!(AccessStructure::from_rows(vec![row(1, vec![s(1)]), row(1, vec![s(1)])], 1).is_err());
        assert!(AccessStructure::from_rows(vec![row(1, vec![s(1), s(0)]), row(2, vec![s(1)])], 2).is_err());
        assert!(AccessStructure::<u8>::from_rows(vec![], 1).is_err());
    }

    #[test]
    fn encoding_round_trip() {
        let a = compile("(aa1:a AND aa2:b) OR aa1:c");
        let back = AccessStructure::<Attribute>::from_bytes(&a.to_bytes()).unwrap();
        assert_eq!(back, a);
        assert_eq!(a.element_tally().scalars, 0);
    }
}
