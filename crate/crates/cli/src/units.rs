//! Unit-suffixed quantities such as `"1.5 GHz"`, parsed strictly per dimension.

use std::fmt;
use std::marker::PhantomData;
use std::str::FromStr;

use serde::{de, Deserialize, Deserializer};

use crate::output::fmt_f64;

/// A physical dimension: its accepted units and their power-of-ten offset from the internal unit.
pub trait Dimension {
    const NAME: &'static str;
    const UNITS: &'static [(&'static str, i32)];
}

macro_rules! dimension {
    ($ty:ident, $name:literal, [$(($unit:literal, $factor:expr)),+ $(,)?]) => {
        #[derive(Debug, Clone, Copy, PartialEq)]
        pub struct $ty;
        impl Dimension for $ty {
            const NAME: &'static str = $name;
            const UNITS: &'static [(&'static str, i32)] = &[$(($unit, $factor)),+];
        }
    };
}

dimension!(Frequency, "frequency", [("GHz", 0), ("MHz", -3), ("kHz", -6)]);
dimension!(Time, "time", [("ns", 0), ("us", 3), ("µs", 3)]);
dimension!(Capacitance, "capacitance", [("F", 0), ("pF", -12), ("fF", -15), ("aF", -18)]);
dimension!(Length, "length", [("m", 0), ("mm", -3), ("um", -6), ("µm", -6)]);
dimension!(LineCapacitance, "capacitance per length", [("F/m", 0), ("nF/m", -9), ("pF/m", -12)]);

/// A value with the unit it was written in; internal units are GHz, ns, F, m and F/m.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantity<D> {
    value: f64,
    unit: &'static str,
    dim: PhantomData<D>,
}

pub type Ghz = Quantity<Frequency>;
pub type Ns = Quantity<Time>;

impl<D: Dimension> Quantity<D> {
    /// `unit` must be one of the dimension's units.
    pub fn new(value: f64, unit: &str) -> Self {
        let (unit, _) = D::UNITS
            .iter()
            .find(|(u, _)| *u == unit)
            .unwrap_or_else(|| panic!("{unit} is not a {} unit", D::NAME));
        Self { value, unit, dim: PhantomData }
    }

    /// Value in the internal unit. The decimal exponent is shifted in text, so
    /// `0.2 fF` lands on the double nearest 2e-16 F rather than on `0.2 / 1e15`.
    pub fn base(&self) -> f64 {
        shift_decimal(self.value, Self::exponent(self.unit))
    }

    /// Magnitude in the quantity's own unit.
    pub fn value(&self) -> f64 {
        self.value
    }

    /// The inverse of [`Quantity::base`]: `from_base(2e-16, "fF")` is `0.2 fF`.
    pub fn from_base(base: f64, unit: &'static str) -> Self {
        Self::new(shift_decimal(base, -Self::exponent(unit)), unit)
    }

    fn exponent(unit: &str) -> i32 {
        D::UNITS.iter().find(|(u, _)| *u == unit).map(|(_, e)| *e).expect("known unit")
    }
}

/// `x · 10^shift`, rounded once from the shortest decimal form of `x`.
fn shift_decimal(x: f64, shift: i32) -> f64 {
    let sci = format!("{x:e}");
    let (mantissa, exponent) = sci.split_once('e').expect("exponent form");
    let exponent: i32 = exponent.parse().expect("integer exponent");
    format!("{mantissa}e{}", exponent + shift).parse().expect("finite decimal")
}

impl Ghz {
    pub fn ghz(value: f64) -> Self {
        Self::new(value, "GHz")
    }

    pub fn mhz(value: f64) -> Self {
        Self::new(value, "MHz")
    }
}

impl<D: Dimension> fmt::Display for Quantity<D> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", fmt_f64(self.value), self.unit)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{input:?} is not a {dimension}; write a number followed by one of {units}")]
pub struct UnitError {
    input: String,
    dimension: &'static str,
    units: String,
}

impl<D: Dimension> FromStr for Quantity<D> {
    type Err = UnitError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let fail = || UnitError {
            input: s.to_owned(),
            dimension: D::NAME,
            units: units::<D>(),
        };
        let s = s.trim();
        let split = s
            .find(|c: char| !(c.is_ascii_digit() || "+-.eE".contains(c)))
            .ok_or_else(fail)?;
        let (number, unit) = s.split_at(split);
        let value: f64 = number.trim().parse().map_err(|_| fail())?;
        let unit = unit.trim();
        let (unit, _) = D::UNITS.iter().find(|(u, _)| *u == unit).ok_or_else(fail)?;
        if !value.is_finite() {
            return Err(fail());
        }
        Ok(Self { value, unit, dim: PhantomData })
    }
}

impl<'de, D: Dimension> Deserialize<'de> for Quantity<D> {
    fn deserialize<De: Deserializer<'de>>(deserializer: De) -> Result<Self, De::Error> {
        struct Visitor<D>(PhantomData<D>);
        impl<D: Dimension> de::Visitor<'_> for Visitor<D> {
            type Value = Quantity<D>;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "a {} string such as \"1.5 {}\"", D::NAME, D::UNITS[0].0)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Self::Value, E> {
                v.parse().map_err(E::custom)
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Self::Value, E> {
                Err(E::custom(format!("{v} has no unit; {} values need one of {}", D::NAME, units::<D>())))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Self::Value, E> {
                self.visit_f64(v as f64)
            }
        }
        deserializer.deserialize_any(Visitor(PhantomData))
    }
}

fn units<D: Dimension>() -> String {
    D::UNITS.iter().map(|(u, _)| *u).collect::<Vec<_>>().join(", ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_with_and_without_space() {
        assert_eq!("1.5 GHz".parse::<Ghz>().unwrap().base(), 1.5);
        assert_eq!("500MHz".parse::<Ghz>().unwrap().base(), 0.5);
        assert_eq!("2e-1 GHz".parse::<Ghz>().unwrap().base(), 0.2);
        assert_eq!("0.2 fF".parse::<Quantity<Capacitance>>().unwrap().base(), 0.2e-15);
        assert_eq!("0.5 MHz".parse::<Ghz>().unwrap().base(), 0.0005);
        assert_eq!("2 us".parse::<Ns>().unwrap().base(), 2000.0);
        assert_eq!(Quantity::<Capacitance>::from_base(2e-16, "fF").to_string(), "0.2 fF");
    }

    #[test]
    fn rejects_wrong_or_missing_units() {
        assert!("1.5".parse::<Ghz>().is_err());
        assert!("1.5 ns".parse::<Ghz>().is_err());
        assert!("1.5 ghz".parse::<Ghz>().is_err());
        assert!("inf GHz".parse::<Ghz>().is_err());
        assert!("10 GHz".parse::<Ns>().is_err());
    }

    #[test]
    fn displays_as_written() {
        assert_eq!("0.5 MHz".parse::<Ghz>().unwrap().to_string(), "0.5 MHz");
        assert_eq!(Ghz::ghz(20.0).to_string(), "20 GHz");
    }

    #[test]
    fn bare_numbers_are_refused_in_toml() {
        #[derive(Deserialize, Debug)]
        struct T {
            #[allow(dead_code)]
            f: Ghz,
        }
        let err = toml::from_str::<T>("f = 1.5").unwrap_err().to_string();
        assert!(err.contains("no unit"), "{err}");
    }
}
