use std::collections::BTreeMap;
use std::fmt;

use super::{Circuit, NodeKind, NO_FINGERPRINT};
use crate::{Error, Result};

/// Largest number of terms any intermediate polynomial may hold.
pub const MAX_TERMS: usize = 1 << 18;

/// A formal variable: a circuit variable by label, or the fingerprint
/// attached to an addition-gate input edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Symbol {
    A(u32),
    X(u32),
}

/// Sorted (symbol, exponent) pairs.
pub type Monomial = Vec<(Symbol, u32)>;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Polynomial {
    terms: BTreeMap<Monomial, u128>,
}

impl Polynomial {
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, u128)> {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, monomial: &[(Symbol, u32)]) -> u128 {
        self.terms.get(monomial).copied().unwrap_or(0)
    }

    /// Substitutes 1 for every fingerprint, leaving a polynomial in the
    /// circuit variables only.
    pub fn project_x(&self) -> Polynomial {
        let mut out = Polynomial::default();
        for (m, &c) in &self.terms {
            let xs: Monomial = m.iter().copied().filter(|(s, _)| matches!(s, Symbol::X(_))).collect();
            *out.terms.entry(xs).or_insert(0) += c;
        }
        out
    }

    fn single(sym: Symbol) -> Self {
        Self { terms: BTreeMap::from([(vec![(sym, 1)], 1)]) }
    }

    fn one() -> Self {
        Self { terms: BTreeMap::from([(Vec::new(), 1)]) }
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            let mut parts = Vec::new();
            if *c != 1 || m.is_empty() {
                parts.push(c.to_string());
            }
            for &(s, e) in m {
                let name = match s {
                    Symbol::X(l) => format!("x{l}"),
                    Symbol::A(a) => format!("a{a}"),
                };
                parts.push(if e == 1 { name } else { format!("{name}^{e}") });
            }
            f.write_str(&parts.join("*"))?;
        }
        Ok(())
    }
}

/// Rules applied while expanding.
#[derive(Clone, Copy)]
enum Mode {
    Exact,
    /// Coefficients mod 2; terms whose variable part is not multilinear or
    /// exceeds the degree bound are dropped. Both are preserved under
    /// products, so the filtered expansion equals the filtered exact one.
    Detect { degree_bound: usize },
}

fn multiply_monomials(a: &[(Symbol, u32)], b: &[(Symbol, u32)]) -> Monomial {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                out.push((a[i].0, a[i].1 + b[j].1));
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

fn keep(m: &Monomial, mode: Mode) -> bool {
    match mode {
        Mode::Exact => true,
        Mode::Detect { degree_bound } => {
            let mut degree = 0;
            for &(s, e) in m {
                if let Symbol::X(_) = s {
                    if e > 1 {
                        return false;
                    }
                    degree += 1;
                }
            }
            degree <= degree_bound
        }
    }
}

fn accumulate(target: &mut BTreeMap<Monomial, u128>, m: Monomial, c: u128, mode: Mode) -> Result<()> {
    let slot = target.entry(m).or_insert(0);
    *slot = match mode {
        Mode::Exact => slot
            .checked_add(c)
            .ok_or_else(|| Error::ExpansionGuard("coefficient overflow".into()))?,
        Mode::Detect { .. } => (*slot + c) & 1,
    };
    Ok(())
}

fn finalize(mut p: Polynomial) -> Result<Polynomial> {
    p.terms.retain(|_, c| *c != 0);
    if p.terms.len() > MAX_TERMS {
        return Err(Error::ExpansionGuard(format!("more than {MAX_TERMS} terms")));
    }
    Ok(p)
}

fn expand(c: &Circuit, output_index: usize, mode: Mode) -> Result<Polynomial> {
    let root = c.outputs()[output_index].node;
    let needed = c.ancestors(&[root], None);
    let mut polys: Vec<Option<Polynomial>> = vec![None; c.num_nodes()];
    for v in 0..=root {
        if !needed[v as usize] {
            continue;
        }
        let poly = match c.node(v).kind {
            NodeKind::Variable(label) => Polynomial::single(Symbol::X(label)),
            NodeKind::Add => {
                let mut acc = Polynomial::default();
                for e in c.in_edge_range(v) {
                    let child = polys[c.edge_source(e) as usize].as_ref().expect("topological order");
                    let fp = c.edge_fingerprint(e);
                    debug_assert_ne!(fp, NO_FINGERPRINT);
                    let a = [(Symbol::A(fp), 1)];
                    for (m, &coef) in &child.terms {
                        let prod = multiply_monomials(m, &a);
                        accumulate(&mut acc.terms, prod, coef, mode)?;
                    }
                }
                finalize(acc)?
            }
            NodeKind::Mul => {
                let mut acc = Polynomial::one();
                for &u in c.in_neighbors(v) {
                    let child = polys[u as usize].as_ref().expect("topological order");
                    let mut next = Polynomial::default();
                    for (ma, &ca) in &acc.terms {
                        for (mb, &cb) in &child.terms {
                            let prod = multiply_monomials(ma, mb);
                            if !keep(&prod, mode) {
                                continue;
                            }
                            let coef = ca.checked_mul(cb).ok_or_else(|| {
                                Error::ExpansionGuard("coefficient overflow".into())
                            })?;
                            accumulate(&mut next.terms, prod, coef, mode)?;
                        }
                    }
                    acc = finalize(next)?;
                }
                acc
            }
        };
        polys[v as usize] = Some(poly);
    }
    Ok(polys[root as usize].take().unwrap_or_default())
}

/// Fully expands the polynomial computed at an output, in both the circuit
/// variables and the edge fingerprints.
pub fn expand_symbolic(c: &Circuit, output_index: usize) -> Result<Polynomial> {
    expand(c, output_index, Mode::Exact)
}

/// Decides, by symbolic expansion, whether an output computes a polynomial
/// with a multilinear monomial of degree at most the circuit's degree bound
/// and an odd coefficient. This is exactly what the randomized detector can
/// see, so it serves as its reference.
pub fn naive_detect(c: &Circuit, output_index: usize) -> Result<bool> {
    let p = expand(c, output_index, Mode::Detect { degree_bound: c.degree_bound() })?;
    Ok(!p.is_empty())
}
