use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest per-party input length stored as a truth table.
pub const MAX_INPUT_BITS: usize = 6;

/// Boolean function of two `n`-bit inputs, stored as a truth table indexed `x·2ⁿ + y`.
///
/// Bitstrings are read most significant bit first: `x = 01` is the integer 1.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Predicate {
    pub name: String,
    pub n: usize,
    pub table: Vec<bool>,
}

fn inner_product_bit(x: usize, y: usize) -> bool {
    (x & y).count_ones() % 2 == 1
}

impl Predicate {
    pub fn new(name: impl Into<String>, n: usize, table: Vec<bool>) -> Result<Self> {
        if n == 0 || n > MAX_INPUT_BITS {
            return Err(Error::Argument(format!("input length {n} outside 1..={MAX_INPUT_BITS}")));
        }
        if table.len() != 1 << (2 * n) {
            return Err(Error::validation(
                "predicate table length",
                format!("expected {} entries, got {}", 1usize << (2 * n), table.len()),
            ));
        }
        Ok(Predicate { name: name.into(), n, table })
    }

    pub fn from_fn(name: impl Into<String>, n: usize, f: impl Fn(usize, usize) -> bool) -> Result<Self> {
        if n == 0 || n > MAX_INPUT_BITS {
            return Err(Error::Argument(format!("input length {n} outside 1..={MAX_INPUT_BITS}")));
        }
        let size = 1usize << n;
        let table = (0..size * size).map(|i| f(i / size, i % size)).collect();
        Predicate::new(name, n, table)
    }

    pub fn equality(n: usize) -> Result<Self> {
        Predicate::from_fn("EQ", n, |x, y| x == y)
    }

    pub fn non_equality(n: usize) -> Result<Self> {
        Predicate::from_fn("NEQ", n, |x, y| x != y)
    }

    pub fn inner_product(n: usize) -> Result<Self> {
        Predicate::from_fn("IP", n, inner_product_bit)
    }

    pub fn greater_than(n: usize) -> Result<Self> {
        Predicate::from_fn("GT", n, |x, y| x > y)
    }

    pub fn disjointness(n: usize) -> Result<Self> {
        Predicate::from_fn("DISJ", n, |x, y| x & y == 0)
    }

    /// `f(x, y) = x` on one-bit inputs.
    pub fn alice_bit() -> Self {
        Predicate::from_fn("X", 1, |x, _| x == 1).expect("n = 1")
    }

    /// `f(x, y) = y` on one-bit inputs.
    pub fn bob_bit() -> Self {
        Predicate::from_fn("Y", 1, |_, y| y == 1).expect("n = 1")
    }

    /// Looks up `EQ`, `NEQ`, `IP`, `GT`, `DISJ`, `X` or `Y` (case-insensitive).
    pub fn named(name: &str, n: usize) -> Result<Self> {
        match name.to_ascii_uppercase().as_str() {
            "EQ" => Predicate::equality(n),
            "NEQ" => Predicate::non_equality(n),
            "IP" => Predicate::inner_product(n),
            "GT" => Predicate::greater_than(n),
            "DISJ" => Predicate::disjointness(n),
            "X" if n == 1 => Ok(Predicate::alice_bit()),
            "Y" if n == 1 => Ok(Predicate::bob_bit()),
            _ => Err(Error::Argument(format!("unknown predicate {name:?} for n = {n}"))),
        }
    }

    /// Truth table as hex, four entries per digit, first entry in the most significant bit.
    pub fn to_hex(&self) -> String {
        self.table
            .chunks(4)
            .map(|c| {
                let v = c.iter().enumerate().fold(0u32, |acc, (i, &b)| acc | ((b as u32) << (3 - i)));
                char::from_digit(v, 16).expect("nibble")
            })
            .collect()
    }

    pub fn from_hex(name: impl Into<String>, n: usize, hex: &str) -> Result<Self> {
        let hex = hex.trim().trim_start_matches("0x");
        let len = 1usize << (2 * n);
        let mut table = Vec::with_capacity(len);
        for ch in hex.chars() {
            let v = ch
                .to_digit(16)
                .ok_or_else(|| Error::Argument(format!("invalid hex digit {ch:?} in predicate table")))?;
            for i in 0..4 {
                table.push(v >> (3 - i) & 1 == 1);
            }
        }
        if len < 4 && table.len() == 4 {
            table.truncate(len);
        }
        Predicate::new(name, n, table)
    }

    pub fn inputs(&self) -> usize {
        1 << self.n
    }

    pub fn eval(&self, x: usize, y: usize) -> bool {
        self.table[x * self.inputs() + y]
    }

    pub fn negate(&self) -> Predicate {
        let name = match self.name.as_str() {
            "EQ" => "NEQ".to_string(),
            "NEQ" => "EQ".to_string(),
            other => format!("NOT({other})"),
        };
        Predicate { name, n: self.n, table: self.table.iter().map(|b| !b).collect() }
    }

    /// `f₁(x₁, y₁) op f₂(x₂, y₂)` on concatenated inputs `x = x₁x₂`, `y = y₁y₂`.
    pub fn combine(&self, other: &Predicate, name: &str, op: impl Fn(bool, bool) -> bool) -> Result<Predicate> {
        let n2 = other.n;
        let mask = (1 << n2) - 1;
        Predicate::from_fn(format!("{name}({},{})", self.name, other.name), self.n + n2, |x, y| {
            op(self.eval(x >> n2, y >> n2), other.eval(x & mask, y & mask))
        })
    }

    pub fn ones(&self) -> usize {
        self.table.iter().filter(|&&b| b).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(v: usize, n: usize) -> Vec<u8> {
        (0..n).rev().map(|i| (v >> i & 1) as u8).collect()
    }

    #[test]
    fn named_predicates_match_definitions() {
        for n in 1..=3 {
            let eq = Predicate::equality(n).unwrap();
            let ip = Predicate::inner_product(n).unwrap();
            let gt = Predicate::greater_than(n).unwrap();
            let disj = Predicate::disjointness(n).unwrap();
            for x in 0..1 << n {
                for y in 0..1 << n {
                    let (bx, by) = (bits(x, n), bits(y, n));
                    assert_eq!(eq.eval(x, y), bx == by);
                    let dot: u8 = bx.iter().zip(&by).map(|(a, b)| a & b).sum();
                    assert_eq!(ip.eval(x, y), dot % 2 == 1);
                    assert_eq!(disj.eval(x, y), dot == 0);
                    assert_eq!(gt.eval(x, y), bx > by);
                    assert_eq!(eq.negate().eval(x, y), x != y);
                }
            }
        }
    }

    #[test]
    fn table_length_is_checked() {
        assert!(Predicate::new("bad", 2, vec![true; 15]).is_err());
        assert!(Predicate::new("bad", 7, vec![true; 1 << 14]).is_err());
    }

    #[test]
    fn hex_round_trip() {
        for n in 1..=3 {
            let p = Predicate::inner_product(n).unwrap();
            let q = Predicate::from_hex("IP", n, &p.to_hex()).unwrap();
            assert_eq!(p, q);
        }
        assert_eq!(Predicate::equality(1).unwrap().to_hex(), "9");
    }

    #[test]
    fn combination_concatenates_inputs() {
        let and = Predicate::alice_bit().combine(&Predicate::bob_bit(), "AND", |a, b| a && b).unwrap();
        assert_eq!(and.n, 2);
        for x in 0..4 {
            for y in 0..4 {
                assert_eq!(and.eval(x, y), (x >> 1) == 1 && (y & 1) == 1);
            }
        }
    }
}
