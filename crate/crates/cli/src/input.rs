use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use itpq_core::{CVec, CascadeConfig, KsInstance, OperatorExpr, ProductStateSpec};

pub fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

pub fn ks_instance(path: &Path) -> Result<KsInstance> {
    KsInstance::from_json(&read(path)?).with_context(|| format!("{}", path.display()))
}

pub fn product_state(path: &Path) -> Result<ProductStateSpec> {
    ProductStateSpec::from_json(&read(path)?).with_context(|| format!("{}", path.display()))
}

pub fn operator(path: &Path) -> Result<OperatorExpr> {
    OperatorExpr::from_json(&read(path)?).with_context(|| format!("{}", path.display()))
}

pub fn cascade_config(path: &Path) -> Result<CascadeConfig> {
    CascadeConfig::from_json(&read(path)?).with_context(|| format!("{}", path.display()))
}

/// A unit state vector stored as `[[re, im], ...]`.
pub fn state_vector(path: &Path) -> Result<CVec> {
    let v: CVec =
        serde_json::from_str(&read(path)?).with_context(|| format!("{}", path.display()))?;
    if v.dim() < 2 {
        bail!("{}: state needs dim >= 2, got {}", path.display(), v.dim());
    }
    v.require_unit()
        .with_context(|| format!("{}", path.display()))?;
    Ok(v)
}

/// Parses `1,2,8` and `start:end:step` items into an ascending list.
pub fn n_list(spec: &str) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        let num = |s: &str| {
            s.parse::<u64>()
                .with_context(|| format!("bad n-list entry {s:?}"))
        };
        match parts.as_slice() {
            [n] => out.push(num(n)?),
            [start, end, step] => {
                let (start, end, step) = (num(start)?, num(end)?, num(step)?);
                if step == 0 || start > end {
                    bail!("bad n-list range {item:?}");
                }
                out.extend((start..=end).step_by(step as usize));
            }
            _ => bail!("bad n-list entry {item:?}"),
        }
    }
    if out.is_empty() {
        bail!("empty n-list");
    }
    Ok(out)
}
