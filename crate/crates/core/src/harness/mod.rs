//! Instance generators, the adversarial family, the benchmark runner and
//! file-level checking used by the command-line tool.

pub mod bench;
pub mod generate;

pub use bench::{run_bench, AlgoSpec, BenchConfig, BenchReport, BenchRow, FfOrder, CSV_COLUMNS};
pub use generate::{
    adversarial_instance, adversarial_order, demonstrate_gap, detect_adversarial, generate, Family,
    GapDemo, GenSpec,
};

use crate::error::Result;
use crate::model::io::{instance_from_json, packing_from_json};
use crate::model::{check_packing, FeasibilityReport};

/// Parses an instance and a packing and checks the packing against it.
pub fn check_files(instance_text: &str, packing_text: &str) -> Result<FeasibilityReport> {
    let (inst, _) = instance_from_json(instance_text)?;
    let packing = packing_from_json(&inst, packing_text)?;
    Ok(check_packing(&inst, &packing))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::io::{instance_to_json, packing_to_json};
    use crate::model::rational::rat;
    use crate::model::{Instance, Packing, ViolationKind};

    #[test]
    fn check_files_reports_conflicts_and_missing_items() {
        let inst = Instance::new(2, vec![(rat(1, 2), 0), (rat(1, 4), 0), (rat(1, 4), 1)]).unwrap();
        let text = instance_to_json(&inst);
        let good = packing_to_json(&inst, &Packing::new(vec![vec![0, 2], vec![1]], "t"));
        assert!(check_files(&text, &good).unwrap().feasible);
        let clash = packing_to_json(&inst, &Packing::new(vec![vec![0, 1], vec![2]], "t"));
        let r = check_files(&text, &clash).unwrap();
        assert!(r
            .violations
            .iter()
            .any(|v| v.kind == ViolationKind::Conflict));
        let missing = packing_to_json(&inst, &Packing::new(vec![vec![0, 2]], "t"));
        assert!(!check_files(&text, &missing).unwrap().feasible);
    }
}
