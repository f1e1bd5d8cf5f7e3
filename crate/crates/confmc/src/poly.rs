//! Sparse polynomials for template synthesis: polynomials over named
//! symbols (template variables and elimination multipliers), and polynomials
//! in configuration coordinates whose coefficients are symbol polynomials.

use std::collections::BTreeMap;

use num::{One, Zero};

use crate::rat::Rat;

/// Index into a [`SymbolTable`].
pub type Sym = usize;

/// Deterministically ordered symbol universe; emission and model extraction
/// both follow table order, so output is byte-stable for a fixed input.
#[derive(Clone, Debug, Default)]
pub struct SymbolTable {
    names: Vec<String>,
    nonneg: Vec<bool>,
}

impl SymbolTable {
    pub fn intern(&mut self, name: impl Into<String>, nonneg: bool) -> Sym {
        self.names.push(name.into());
        self.nonneg.push(nonneg);
        self.names.len() - 1
    }

    pub fn fresh_multiplier(&mut self) -> Sym {
        let id = self.names.len();
        self.intern(format!("y{id}"), true)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, s: Sym) -> &str {
        &self.names[s]
    }

    pub fn is_nonneg(&self, s: Sym) -> bool {
        self.nonneg[s]
    }

    pub fn by_name(&self, name: &str) -> Option<Sym> {
        self.names.iter().position(|n| n == name)
    }
}

/// A monomial over symbols: sorted multiset of symbol indices.
pub type SymMono = Vec<Sym>;

/// Polynomial over symbols with rational coefficients. Degree stays at most
/// two throughout synthesis (template × template products from denominator
/// clearing); the representation is general regardless.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct SymPoly {
    terms: BTreeMap<SymMono, Rat>,
}

impl SymPoly {
    pub fn zero() -> Self {
        SymPoly::default()
    }

    pub fn constant(c: Rat) -> Self {
        let mut p = SymPoly::default();
        if !c.is_zero() {
            p.terms.insert(Vec::new(), c);
        }
        p
    }

    pub fn var(s: Sym) -> Self {
        let mut p = SymPoly::default();
        p.terms.insert(vec![s], Rat::one());
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&SymMono, &Rat)> {
        self.terms.iter()
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(|m| m.len()).max().unwrap_or(0)
    }

    pub fn add_term(&mut self, mono: SymMono, coeff: Rat) {
        if coeff.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(mono) {
            Entry::Occupied(mut e) => {
                *e.get_mut() += coeff;
                if e.get().is_zero() {
                    e.remove();
                }
            }
            Entry::Vacant(v) => {
                v.insert(coeff);
            }
        }
    }

    pub fn add(&self, other: &SymPoly) -> SymPoly {
        let mut out = self.clone();
        for (m, c) in other.terms.iter() {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &SymPoly) -> SymPoly {
        let mut out = self.clone();
        for (m, c) in other.terms.iter() {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }

    pub fn scale(&self, k: &Rat) -> SymPoly {
        let mut out = SymPoly::default();
        if k.is_zero() {
            return out;
        }
        for (m, c) in self.terms.iter() {
            out.terms.insert(m.clone(), c.clone() * k);
        }
        out
    }

    pub fn mul(&self, other: &SymPoly) -> SymPoly {
        let mut out = SymPoly::default();
        for (ma, ca) in self.terms.iter() {
            for (mb, cb) in other.terms.iter() {
                let mut mono = ma.clone();
                mono.extend_from_slice(mb);
                mono.sort_unstable();
                out.add_term(mono, ca.clone() * cb);
            }
        }
        out
    }

    /// Substitutes values for a subset of symbols.
    pub fn substitute(&self, values: &BTreeMap<Sym, Rat>) -> SymPoly {
        let mut out = SymPoly::default();
        for (mono, coeff) in self.terms.iter() {
            let mut c = coeff.clone();
            let mut rest: SymMono = Vec::new();
            for s in mono {
                match values.get(s) {
                    Some(v) => c *= v.clone(),
                    None => rest.push(*s),
                }
            }
            out.add_term(rest, c);
        }
        out
    }

    /// Full evaluation; panics if a symbol has no value (synthesis bugs
    /// only).
    pub fn eval(&self, values: &BTreeMap<Sym, Rat>) -> Rat {
        let mut total = Rat::zero();
        for (mono, coeff) in self.terms.iter() {
            let mut c = coeff.clone();
            for s in mono {
                c *= values
                    .get(s)
                    .unwrap_or_else(|| panic!("unbound symbol {s}"))
                    .clone();
            }
            total += c;
        }
        total
    }

    /// The affine view `(constant, per-symbol coefficients)`, or `None` when
    /// any term has degree above one.
    pub fn as_affine(&self) -> Option<(Rat, BTreeMap<Sym, Rat>)> {
        let mut constant = Rat::zero();
        let mut linear: BTreeMap<Sym, Rat> = BTreeMap::new();
        for (mono, coeff) in self.terms.iter() {
            match mono.len() {
                0 => constant = coeff.clone(),
                1 => {
                    linear.insert(mono[0], coeff.clone());
                }
                _ => return None,
            }
        }
        Some((constant, linear))
    }

    /// SMT-LIB rendering in table order.
    pub fn to_smt(&self, table: &SymbolTable) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut parts = Vec::with_capacity(self.terms.len());
        for (mono, coeff) in self.terms.iter() {
            let mut factors = vec![rat_to_smt(coeff)];
            for s in mono {
                factors.push(table.name(*s).to_string());
            }
            if factors.len() == 1 {
                parts.push(factors.pop().expect("nonempty"));
            } else {
                parts.push(format!("(* {})", factors.join(" ")));
            }
        }
        if parts.len() == 1 {
            parts.pop().expect("nonempty")
        } else {
            format!("(+ {})", parts.join(" "))
        }
    }
}

pub fn rat_to_smt(x: &Rat) -> String {
    if x.denom().is_one() {
        if x.numer() < &num::BigInt::zero() {
            format!("(- {})", -x.numer().clone())
        } else {
            x.numer().to_string()
        }
    } else if x.numer() < &num::BigInt::zero() {
        format!("(- (/ {} {}))", -x.numer().clone(), x.denom())
    } else {
        format!("(/ {} {})", x.numer(), x.denom())
    }
}

/// A monomial in configuration coordinates: sorted multiset of coordinate
/// indices.
pub type DMono = Vec<usize>;

/// Polynomial in configuration coordinates with [`SymPoly`] coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct DPoly {
    terms: BTreeMap<DMono, SymPoly>,
}

impl DPoly {
    pub fn zero() -> Self {
        DPoly::default()
    }

    pub fn constant(c: SymPoly) -> Self {
        let mut p = DPoly::default();
        if !c.is_zero() {
            p.terms.insert(Vec::new(), c);
        }
        p
    }

    /// Affine polynomial `constant + Σ_q coeffs[q]·d_q`.
    pub fn affine(constant: SymPoly, coeffs: Vec<SymPoly>) -> Self {
        let mut p = DPoly::constant(constant);
        for (q, c) in coeffs.into_iter().enumerate() {
            if !c.is_zero() {
                p.terms.insert(vec![q], c);
            }
        }
        p
    }

    /// Affine polynomial with rational coefficients.
    pub fn affine_rat(constant: Rat, coeffs: &[Rat]) -> Self {
        DPoly::affine(
            SymPoly::constant(constant),
            coeffs
                .iter()
                .map(|c| SymPoly::constant(c.clone()))
                .collect(),
        )
    }

    pub fn terms(&self) -> impl Iterator<Item = (&DMono, &SymPoly)> {
        self.terms.iter()
    }

    pub fn coeff(&self, mono: &DMono) -> SymPoly {
        self.terms.get(mono).cloned().unwrap_or_default()
    }

    pub fn monomials(&self) -> impl Iterator<Item = &DMono> {
        self.terms.keys()
    }

    pub fn d_degree(&self) -> usize {
        self.terms.keys().map(|m| m.len()).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn add_term(&mut self, mono: DMono, coeff: SymPoly) {
        if coeff.is_zero() {
            return;
        }
        let entry = self.terms.entry(mono.clone()).or_default();
        *entry = entry.add(&coeff);
        if entry.is_zero() {
            self.terms.remove(&mono);
        }
    }

    pub fn add(&self, other: &DPoly) -> DPoly {
        let mut out = self.clone();
        for (m, c) in other.terms.iter() {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &DPoly) -> DPoly {
        let mut out = self.clone();
        for (m, c) in other.terms.iter() {
            out.add_term(m.clone(), c.scale(&-Rat::one()));
        }
        out
    }

    pub fn scale(&self, k: &Rat) -> DPoly {
        let mut out = DPoly::default();
        for (m, c) in self.terms.iter() {
            out.add_term(m.clone(), c.scale(k));
        }
        out
    }

    pub fn mul(&self, other: &DPoly) -> DPoly {
        let mut out = DPoly::default();
        for (ma, ca) in self.terms.iter() {
            for (mb, cb) in other.terms.iter() {
                let mut mono = ma.clone();
                mono.extend_from_slice(mb);
                mono.sort_unstable();
                out.add_term(mono, ca.mul(cb));
            }
        }
        out
    }

    /// Substitutes symbol values into every coefficient.
    pub fn substitute(&self, values: &BTreeMap<Sym, Rat>) -> DPoly {
        let mut out = DPoly::default();
        for (m, c) in self.terms.iter() {
            out.add_term(m.clone(), c.substitute(values));
        }
        out
    }

    /// Evaluates at a concrete configuration point once all symbols are
    /// substituted away.
    pub fn eval_at(&self, point: &[Rat]) -> Rat {
        let mut total = Rat::zero();
        for (mono, coeff) in self.terms.iter() {
            let sym_const = coeff
                .as_affine()
                .and_then(|(c, lin)| if lin.is_empty() { Some(c) } else { None })
                .expect("symbols remain in a coefficient during evaluation");
            let mut v = sym_const;
            for &q in mono {
                v *= point[q].clone();
            }
            total += v;
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rat, rat_int};

    #[test]
    fn sympoly_arithmetic() {
        let mut table = SymbolTable::default();
        let a = table.intern("a", false);
        let b = table.intern("b", false);
        let p = SymPoly::var(a).add(&SymPoly::constant(rat_int(2)));
        let q = SymPoly::var(b).scale(&rat(1, 2));
        let prod = p.mul(&q);
        // (a + 2)(b/2) = ab/2 + b
        assert_eq!(prod.degree(), 2);
        let vals = BTreeMap::from([(a, rat_int(4)), (b, rat_int(6))]);
        assert_eq!(prod.eval(&vals), rat_int(18));
    }

    #[test]
    fn sympoly_cancellation() {
        let mut table = SymbolTable::default();
        let a = table.intern("a", false);
        let p = SymPoly::var(a).sub(&SymPoly::var(a));
        assert!(p.is_zero());
    }

    #[test]
    fn substitution_reduces_degree() {
        let mut table = SymbolTable::default();
        let a = table.intern("a", false);
        let b = table.intern("b", false);
        let prod = SymPoly::var(a).mul(&SymPoly::var(b));
        let partial = prod.substitute(&BTreeMap::from([(a, rat_int(3))]));
        assert_eq!(partial, SymPoly::var(b).scale(&rat_int(3)));
        assert!(partial.as_affine().is_some());
        assert!(prod.as_affine().is_none());
    }

    #[test]
    fn dpoly_product_collects_monomials() {
        // (1 + d0)(d0 + d1) = d0 + d1 + d0^2 + d0 d1
        let p = DPoly::affine_rat(rat_int(1), &[rat_int(1), rat_int(0)]);
        let q = DPoly::affine_rat(rat_int(0), &[rat_int(1), rat_int(1)]);
        let prod = p.mul(&q);
        assert_eq!(prod.d_degree(), 2);
        assert_eq!(prod.eval_at(&[rat(1, 2), rat(1, 2)]), rat(3, 2));
    }

    #[test]
    fn smt_rendering_is_deterministic() {
        let mut table = SymbolTable::default();
        let a = table.intern("a", false);
        let p = SymPoly::var(a)
            .scale(&rat(-1, 2))
            .add(&SymPoly::constant(rat_int(1)));
        assert_eq!(p.to_smt(&table), "(+ 1 (* (- (/ 1 2)) a))");
        assert_eq!(rat_to_smt(&rat(3, 4)), "(/ 3 4)");
        assert_eq!(rat_to_smt(&rat_int(-2)), "(- 2)");
    }
}
