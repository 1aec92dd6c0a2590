//! Reader for the MiniZinc data files used by the published `wlp` instances:
//!
//! ```text
//! Warehouses = 3;
//! Stores = 2;
//! Capacity = [10, 20, 30];
//! FixedCost = [5, 6, 7];
//! Goods = [4, 5];
//! SupplyCost = [| 1, 2, 3
//!               | 4, 5, 6 |];
//! Incompatibilities = 1;
//! IncompatiblePairs = [| 1, 2 |];
//! ```

use std::collections::HashMap;

use thiserror::Error;

use crate::instance::{Instance, InstanceError};

#[derive(Debug, Error)]
pub enum DznError {
    #[error("{0}")]
    Format(String),
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

type Result<T> = std::result::Result<T, DznError>;

macro_rules! bail {
    ($($arg:tt)*) => { return Err(DznError::Format(format!($($arg)*))) };
}

fn fail(message: String) -> DznError {
    DznError::Format(message)
}

fn numbers(value: &str) -> Result<Vec<f64>> {
    value
        .split(|c: char| !(c.is_ascii_digit() || c == '.' || c == '-' || c == 'e' || c == 'E' || c == '+'))
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| fail(format!("bad number `{t}`"))))
        .collect()
}

fn count(values: &[f64], what: &str) -> Result<Vec<u64>> {
    values
        .iter()
        .map(|&v| {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as u64)
            } else {
                Err(fail(format!("{what} must be a non-negative integer, got {v}")))
            }
        })
        .collect()
}

/// Parses a MiniZinc data file. Incompatible pairs are 1-based there.
pub fn parse_dzn(text: &str) -> Result<Instance> {
    let cleaned: String = text
        .lines()
        .map(|l| l.split('%').next().unwrap_or(""))
        .collect::<Vec<_>>()
        .join("\n");
    let mut fields: HashMap<String, String> = HashMap::new();
    for statement in cleaned.split(';') {
        let statement = statement.trim();
        if statement.is_empty() {
            continue;
        }
        let (name, value) = statement
            .split_once('=')
            .ok_or_else(|| fail(format!("expected `name = value`, got `{statement}`")))?;
        fields.insert(name.trim().to_string(), value.trim().to_string());
    }
    let get = |name: &str| -> Result<Vec<f64>> {
        let value = fields.get(name).ok_or_else(|| fail(format!("missing field `{name}`")))?;
        numbers(value).map_err(|e| fail(format!("field `{name}`: {e}")))
    };
    let scalar = |name: &str| -> Result<usize> {
        match get(name)?.as_slice() {
            [v] if *v >= 0.0 && v.fract() == 0.0 => Ok(*v as usize),
            _ => bail!("field `{name}` must be a single non-negative integer"),
        }
    };

    let m = scalar("Warehouses")?;
    let n = scalar("Stores")?;
    let capacities = count(&get("Capacity")?, "Capacity")?;
    let opening = get("FixedCost")?;
    let demands = count(&get("Goods")?, "Goods")?;
    let flat = get("SupplyCost")?;
    if flat.len() != n * m {
        bail!("SupplyCost has {} entries, expected {}", flat.len(), n * m);
    }
    let costs: Vec<Vec<f64>> = flat.chunks(m).map(|row| row.to_vec()).collect();

    let pairs_flat = if fields.contains_key("IncompatiblePairs") {
        count(&get("IncompatiblePairs")?, "IncompatiblePairs")?
    } else {
        Vec::new()
    };
    if pairs_flat.len() % 2 != 0 {
        bail!("IncompatiblePairs has an odd number of entries");
    }
    if fields.contains_key("Incompatibilities") {
        let declared = scalar("Incompatibilities")?;
        if declared * 2 != pairs_flat.len() {
            bail!("Incompatibilities = {declared} but {} pairs listed", pairs_flat.len() / 2);
        }
    }
    let mut pairs = Vec::with_capacity(pairs_flat.len() / 2);
    for p in pairs_flat.chunks(2) {
        if p[0] == 0 || p[1] == 0 {
            bail!("incompatible pair ({}, {}) is not 1-based", p[0], p[1]);
        }
        pairs.push((p[0] as usize - 1, p[1] as usize - 1));
    }
    Ok(Instance::new(demands, capacities, opening, costs, pairs)?)
}
