//! JSON formats for instances and packings.
//!
//! Instance: `{"n_groups": 2, "items": [{"id": 0, "size": "1/2", "group": 0}, ...]}`.
//! Packing: `{"core_bins": 1, "bins": [[0, 1], [2]]}`. Ids in packing files are
//! the instance file's ids.

use super::rational::serde_rational;
use super::{validate_instance, Instance, Metadata, Packing, Rational, RawInstance, RawItem};
use crate::error::Result;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

#[derive(Serialize, Deserialize)]
struct InstanceJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    n_groups: usize,
    items: Vec<ItemJson>,
}

#[derive(Serialize, Deserialize)]
struct ItemJson {
    id: u64,
    #[serde(with = "serde_rational")]
    size: Rational,
    group: usize,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    dummy: bool,
}

#[derive(Serialize, Deserialize)]
struct PackingJson {
    #[serde(default, skip_serializing_if = "String::is_empty")]
    source: String,
    /// Missing means every bin is a core bin.
    #[serde(default)]
    core_bins: Option<usize>,
    bins: Vec<Vec<u64>>,
}

/// Parses and validates an instance; returns validation warnings alongside.
pub fn instance_from_json(text: &str) -> Result<(Instance, Vec<String>)> {
    let j: InstanceJson = serde_json::from_str(text)?;
    let raw = RawInstance {
        n_groups: j.n_groups,
        items: j
            .items
            .into_iter()
            .map(|it| RawItem {
                id: it.id,
                size: it.size,
                group: it.group,
                dummy: it.dummy,
            })
            .collect(),
        metadata: Metadata {
            name: j.name,
            seed: j.seed,
        },
    };
    validate_instance(raw)
}

pub fn instance_to_json(inst: &Instance) -> String {
    let j = InstanceJson {
        name: inst.metadata.name.clone(),
        seed: inst.metadata.seed,
        n_groups: inst.n_groups(),
        items: inst
            .items()
            .iter()
            .map(|it| ItemJson {
                id: inst.external_id(it.id),
                size: it.size.clone(),
                group: it.group,
                dummy: it.dummy,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&j).expect("instance serializes")
}

pub fn packing_to_json(inst: &Instance, p: &Packing) -> String {
    let j = PackingJson {
        source: p.source.clone(),
        core_bins: Some(p.core_bins),
        bins: p
            .bins
            .iter()
            .map(|b| b.iter().map(|&i| inst.external_id(i)).collect())
            .collect(),
    };
    serde_json::to_string(&j).expect("packing serializes")
}

/// Ids not present in the instance map to ids past the end, so that
/// `check_packing` reports them instead of the parser rejecting the file.
pub fn packing_from_json(inst: &Instance, text: &str) -> Result<Packing> {
    let j: PackingJson = serde_json::from_str(text)?;
    let core_bins = j.core_bins.unwrap_or(j.bins.len());
    let index: HashMap<u64, usize> = (0..inst.n_items())
        .map(|i| (inst.external_id(i), i))
        .collect();
    let mut unknown = HashMap::new();
    let bins = j
        .bins
        .into_iter()
        .map(|b| {
            b.into_iter()
                .map(|e| match index.get(&e) {
                    Some(&i) => i,
                    None => {
                        let next = inst.n_items() + unknown.len();
                        *unknown.entry(e).or_insert(next)
                    }
                })
                .collect()
        })
        .collect();
    Ok(Packing {
        bins,
        core_bins,
        source: j.source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::rational::rat;

    #[test]
    fn instance_roundtrip() {
        let text = r#"{"n_groups": 2, "items": [
            {"id": 0, "size": "1/3", "group": 0},
            {"id": 1, "size": "0.25", "group": 1},
            {"id": 2, "size": 0.5, "group": 1}]}"#;
        let (i, w) = instance_from_json(text).unwrap();
        assert!(w.is_empty());
        assert_eq!(i.size(0), &rat(1, 3));
        assert_eq!(i.size(2), &rat(1, 2));
        let back = instance_from_json(&instance_to_json(&i)).unwrap().0;
        assert_eq!(back, i);
    }

    #[test]
    fn parse_error_reports_position() {
        let err = instance_from_json("{\"n_groups\": 1,\n \"items\": [}").unwrap_err();
        assert!(err.to_string().contains("line 2"));
    }

    #[test]
    fn packing_roundtrip_uses_external_ids() {
        let text = r#"{"n_groups": 1, "items": [{"id": 10, "size": "1/2", "group": 0},
                                               {"id": 20, "size": "1/2", "group": 0}]}"#;
        let (i, _) = instance_from_json(text).unwrap();
        let p = Packing {
            bins: vec![vec![0], vec![1]],
            core_bins: 1,
            source: "x".into(),
        };
        let json = packing_to_json(&i, &p);
        assert!(json.contains("[[10],[20]]"));
        assert_eq!(packing_from_json(&i, &json).unwrap(), p);
        let odd = packing_from_json(&i, r#"{"core_bins": 1, "bins": [[10, 99], [20]]}"#).unwrap();
        assert_eq!(
            packing_from_json(&i, r#"{"bins": [[10], [20]]}"#)
                .unwrap()
                .core_bins,
            2
        );
        assert_eq!(odd.bins[0], vec![0, 2]);
    }
}
