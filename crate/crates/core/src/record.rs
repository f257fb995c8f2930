//! Typed field records with one canonical encoding.
//!
//! Claim statements, contract sections and HR event details are all
//! `Record`s: string keys mapped to integer, boolean or text values, kept
//! sorted by key. The text form is `key=value;key=value`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::ledger::codec::{Canonical, DecodeError, Reader, Writer};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Int(i64),
    Bool(bool),
    Text(String),
}

impl Value {
    /// `true`/`false` become booleans, anything that parses as an `i64`
    /// becomes an integer, the rest is text.
    pub fn parse(s: &str) -> Value {
        let s = s.trim();
        match s {
            "true" => Value::Bool(true),
            "false" => Value::Bool(false),
            _ => s.parse().map(Value::Int).unwrap_or_else(|_| Value::Text(s.to_owned())),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Record(BTreeMap<String, Value>);

impl Record {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, value: Value) -> Self {
        self.0.insert(key.to_owned(), value);
        self
    }

    pub fn insert(&mut self, key: &str, value: Value) {
        self.0.insert(key.to_owned(), value);
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.0.get(key)
    }

    pub fn flag(&self, key: &str) -> bool {
        self.get(key) == Some(&Value::Bool(true))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Value)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Canonical for Record {
    fn encode_into(&self, w: &mut Writer) {
        w.u32(self.0.len() as u32);
        for (k, v) in &self.0 {
            w.text(k);
            match v {
                Value::Int(i) => w.u8(0).i64(*i),
                Value::Bool(b) => w.u8(1).u8(*b as u8),
                Value::Text(s) => w.u8(2).text(s),
            };
        }
    }

    fn decode_from(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let n = r.u32()?;
        let mut map = BTreeMap::new();
        let mut last: Option<String> = None;
        for _ in 0..n {
            let k = r.text()?;
            // keys must be strictly increasing for the encoding to be unique
            if last.as_ref().is_some_and(|l| *l >= k) {
                return Err(DecodeError::BadTag { what: "record key order", tag: 0 });
            }
            let v = match r.u8()? {
                0 => Value::Int(r.i64()?),
                1 => Value::Bool(r.bool()?),
                2 => Value::Text(r.text()?),
                tag => return Err(DecodeError::BadTag { what: "value", tag }),
            };
            last = Some(k.clone());
            map.insert(k, v);
        }
        Ok(Record(map))
    }
}

impl fmt::Display for Record {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            write!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

impl FromStr for Record {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut rec = Record::new();
        for part in s.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| format!("expected key=value, got `{part}`"))?;
            let k = k.trim();
            if k.is_empty() {
                return Err(format!("empty key in `{part}`"));
            }
            rec.insert(k, Value::parse(v));
        }
        Ok(rec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_types() {
        let r: Record = "degree=MSc; years=3;adverse=false".parse().unwrap();
        assert_eq!(r.get("degree"), Some(&Value::Text("MSc".into())));
        assert_eq!(r.get("years"), Some(&Value::Int(3)));
        assert!(!r.flag("adverse"));
        assert_eq!(r.to_string(), "adverse=false;degree=MSc;years=3");
        assert!("novalue".parse::<Record>().is_err());
    }

    #[test]
    fn unsorted_keys_do_not_decode() {
        let mut w = Writer::new();
        w.u32(2).text("b").u8(0).i64(1).text("a").u8(0).i64(2);
        assert!(Record::from_canonical_bytes(&w.finish()).is_err());
    }

    fn value() -> impl Strategy<Value = Value> {
        prop_oneof![
            any::<i64>().prop_map(Value::Int),
            any::<bool>().prop_map(Value::Bool),
            "[a-zA-Z0-9 ]{0,12}".prop_map(Value::Text),
        ]
    }

    proptest! {
        #[test]
        fn canonical_round_trip(entries in proptest::collection::btree_map("[a-z]{1,6}", value(), 0..6)) {
            let rec = Record(entries);
            let bytes = rec.to_canonical_bytes();
            prop_assert_eq!(Record::from_canonical_bytes(&bytes).unwrap(), rec);
        }
    }
}
