//! Ordinals in Cantor normal form base ω, below ε₀.
//!
//! An ordinal is a finite sum `ω^e₁·c₁ + … + ω^eₙ·cₙ` with strictly
//! decreasing exponents (themselves ordinals) and positive coefficients.

use std::cmp::Ordering;
use std::fmt;

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Ordinal {
    /// Descending by exponent; empty list is 0.
    terms: Vec<(Ordinal, u64)>,
}

impl Ordinal {
    pub fn zero() -> Self {
        Ordinal { terms: Vec::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn from_nat(n: u64) -> Self {
        if n == 0 {
            Self::zero()
        } else {
            Ordinal { terms: vec![(Self::zero(), n)] }
        }
    }

    pub fn one() -> Self {
        Self::from_nat(1)
    }

    pub fn omega() -> Self {
        Self::omega_term(Self::one(), 1)
    }

    /// ω^e · c  (zero when c = 0).
    pub fn omega_term(e: Ordinal, c: u64) -> Self {
        if c == 0 {
            Self::zero()
        } else {
            Ordinal { terms: vec![(e, c)] }
        }
    }

    /// Ordinal addition (not commutative): small leading terms of `self`
    /// are absorbed by `other`'s leading exponent.
    pub fn add(&self, other: &Ordinal) -> Ordinal {
        let Some((e, c)) = other.terms.first() else {
            return self.clone();
        };
        let mut terms: Vec<(Ordinal, u64)> = self
            .terms
            .iter()
            .take_while(|(e1, _)| e1 > e)
            .cloned()
            .collect();
        let mut rest = other.terms.clone();
        if let Some((e1, c1)) = self.terms.get(terms.len()) {
            if e1 == e {
                rest[0].1 = c1 + c;
            }
        }
        terms.extend(rest);
        Ordinal { terms }
    }

    pub fn succ(&self) -> Ordinal {
        self.add(&Self::one())
    }

    /// max(succ(a), b), the `ε := max(γ+1, δ)` of hat-witness concatenation.
    pub fn max_succ(&self, other: &Ordinal) -> Ordinal {
        let s = self.succ();
        if s >= *other {
            s
        } else {
            other.clone()
        }
    }
}

impl PartialOrd for Ordinal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ordinal {
    fn cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.terms.iter().zip(other.terms.iter()) {
            match a.0.cmp(&b.0).then_with(|| a.1.cmp(&b.1)) {
                Ordering::Equal => continue,
                ord => {
                    // A longer tail under an equal prefix only matters when the
                    // distinguishing term decides; the first difference wins.
                    return ord;
                }
            }
        }
        self.terms.len().cmp(&other.terms.len())
    }
}

impl fmt::Display for Ordinal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (e, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, "+")?;
            }
            if e.is_zero() {
                write!(f, "{c}")?;
            } else {
                if *e == Ordinal::one() {
                    write!(f, "w")?;
                } else if e.terms.len() == 1 && e.terms[0].0.is_zero() {
                    write!(f, "w^{}", e.terms[0].1)?;
                } else {
                    write!(f, "w^({e})")?;
                }
                if *c != 1 {
                    write!(f, "*{c}")?;
                }
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Ordinal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Parse the textual ordinal syntax: `0`, naturals, `w`, `w^3`, `w^(w+1)`,
/// products `w*2`, sums `w^2*3+w+5`.
pub fn parse_ordinal(s: &str) -> crate::Result<Ordinal> {
    let mut p = OrdParser { s: s.as_bytes(), pos: 0 };
    let o = p.sum()?;
    p.skip_ws();
    if p.pos != p.s.len() {
        return Err(p.err("trailing input"));
    }
    Ok(o)
}

struct OrdParser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl<'a> OrdParser<'a> {
    fn err(&self, msg: &str) -> crate::Error {
        crate::Error::Syntax { line: 1, col: self.pos + 1, msg: format!("ordinal: {msg}") }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.skip_ws();
        if self.pos < self.s.len() && self.s[self.pos] == c {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn nat(&mut self) -> crate::Result<u64> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected a number"));
        }
        std::str::from_utf8(&self.s[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| self.err("number too large"))
    }

    fn sum(&mut self) -> crate::Result<Ordinal> {
        let mut acc = self.product()?;
        while self.eat(b'+') {
            acc = acc.add(&self.product()?);
        }
        Ok(acc)
    }

    fn product(&mut self) -> crate::Result<Ordinal> {
        self.skip_ws();
        if self.pos < self.s.len() && self.s[self.pos] == b'w' {
            self.pos += 1;
            let e = if self.eat(b'^') {
                if self.eat(b'(') {
                    let e = self.sum()?;
                    if !self.eat(b')') {
                        return Err(self.err("expected ')'"));
                    }
                    e
                } else {
                    Ordinal::from_nat(self.nat()?)
                }
            } else {
                Ordinal::one()
            };
            let c = if self.eat(b'*') { self.nat()? } else { 1 };
            Ok(Ordinal::omega_term(e, c))
        } else {
            Ok(Ordinal::from_nat(self.nat()?))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::cmp::Ordering::*;

    fn w() -> Ordinal {
        Ordinal::omega()
    }

    fn wn(c: u64) -> Ordinal {
        Ordinal::omega_term(Ordinal::one(), c)
    }

    #[test]
    fn compare_examples() {
        assert_eq!(Ordinal::zero().cmp(&Ordinal::zero()), Equal);
        assert_eq!(w().cmp(&Ordinal::from_nat(3)), Greater);
        // ω·2+1 < ω·3
        let a = wn(2).add(&Ordinal::one());
        let b = wn(3);
        assert_eq!(a.cmp(&b), Less);
    }

    #[test]
    fn max_succ_examples() {
        assert_eq!(Ordinal::zero().max_succ(&Ordinal::zero()), Ordinal::one());
        assert_eq!(w().max_succ(&w()), w().succ());
        assert_eq!(Ordinal::from_nat(2).max_succ(&w()), w());
    }

    #[test]
    fn addition_absorbs() {
        // 3 + ω = ω
        assert_eq!(Ordinal::from_nat(3).add(&w()), w());
        // ω + 1 + ω = ω·2
        assert_eq!(w().succ().add(&w()), wn(2));
        // ω^2 + ω·2 keeps both terms
        let x = Ordinal::omega_term(Ordinal::from_nat(2), 1).add(&wn(2));
        assert_eq!(x.to_string(), "w^2+w*2");
    }

    #[test]
    fn total_order_on_enumeration() {
        // Enumerate a batch of small CNF ordinals and check the order agrees
        // with an independent recursive comparison.
        fn slow_cmp(a: &Ordinal, b: &Ordinal) -> Ordering {
            let ta = &a.terms;
            let tb = &b.terms;
            let mut i = 0;
            loop {
                match (ta.get(i), tb.get(i)) {
                    (None, None) => return Equal,
                    (None, Some(_)) => return Less,
                    (Some(_), None) => return Greater,
                    (Some(x), Some(y)) => {
                        match slow_cmp(&x.0, &y.0).then(x.1.cmp(&y.1)) {
                            Equal => i += 1,
                            o => return o,
                        }
                    }
                }
            }
        }
        let mut all = vec![Ordinal::zero()];
        for n in 1..4 {
            all.push(Ordinal::from_nat(n));
        }
        for c in 1..3 {
            for n in 0..3 {
                all.push(wn(c).add(&Ordinal::from_nat(n)));
                all.push(Ordinal::omega_term(Ordinal::from_nat(2), c).add(&Ordinal::from_nat(n)));
                all.push(Ordinal::omega_term(w(), c).add(&wn(n)));
            }
        }
        for a in &all {
            for b in &all {
                assert_eq!(a.cmp(b), slow_cmp(a, b), "{a} vs {b}");
            }
        }
    }

    fn small_ord() -> impl proptest::strategy::Strategy<Value = Ordinal> {
        use proptest::prelude::*;
        (0u64..3, 1u64..4, 0u64..4).prop_map(|(e, c, n)| {
            Ordinal::omega_term(Ordinal::from_nat(e), c).add(&Ordinal::from_nat(n))
        })
    }

    proptest::proptest! {
        #[test]
        fn addition_is_associative_and_inflationary(
            a in small_ord(), b in small_ord(), c in small_ord()
        ) {
            proptest::prop_assert_eq!(a.add(&b).add(&c), a.add(&b.add(&c)));
            proptest::prop_assert!(a.add(&b) >= a);
            proptest::prop_assert!(a.add(&b) >= b);
            proptest::prop_assert_eq!(parse_ordinal(&a.to_string()).unwrap(), a);
        }
    }

    #[test]
    fn parse_print_roundtrip() {
        for s in ["0", "5", "w", "w+1", "w*2+1", "w^2*3+w+5", "w^(w+1)*2+w^2"] {
            let o = parse_ordinal(s).unwrap();
            assert_eq!(o.to_string(), s);
            assert_eq!(parse_ordinal(&o.to_string()).unwrap(), o);
        }
        assert!(parse_ordinal("w^").is_err());
        assert!(parse_ordinal("1 2").is_err());
    }
}
