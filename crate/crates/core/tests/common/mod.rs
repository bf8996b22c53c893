#![allow(dead_code)]

use std::collections::BTreeSet;

use hauptmodul_traces::forms::{self, QuadForm};

/// Brute-force orbits and coset labels describe the same partition of
/// `Q_(d,p,β)` for one `(d, p)`. Returns a description of the first problem.
pub fn compare_partitions(d: i64, p: u32) -> Result<(), String> {
    for beta in forms::betas(d, p) {
        let classes = forms::gamma0_classes(d, p, beta).map_err(|e| e.to_string())?;
        let labels: BTreeSet<_> = classes
            .iter()
            .map(|c| forms::class_label(&c.representative, p).unwrap())
            .collect();
        if labels.len() != classes.len() {
            return Err(format!("d={d} p={p} β={beta}: repeated labels among representatives"));
        }
        let bound = (3 * p as i64 * 4).max(d + 2 * p as i64);
        let orbits = forms::brute_force_classes(d, p, beta, bound);
        let mut seen = BTreeSet::new();
        for orbit in &orbits {
            let orbit_labels: BTreeSet<_> = orbit.iter().map(|f| forms::class_label(f, p).unwrap()).collect();
            if orbit_labels.len() != 1 {
                return Err(format!("d={d} p={p} β={beta}: orbit {orbit:?} has {} labels", orbit_labels.len()));
            }
            let label = orbit_labels.into_iter().next().unwrap();
            if !seen.insert(label) {
                return Err(format!("d={d} p={p} β={beta}: two orbits share label {label:?}"));
            }
        }
        if seen != labels {
            return Err(format!(
                "d={d} p={p} β={beta}: {} orbits vs {} classes",
                seen.len(),
                labels.len()
            ));
        }
    }
    Ok(())
}

/// The principal-form conditions for one form with `3 | a`: (star-equivalent
/// to a principal form, representation criterion, orbit contains `[3, B, C]`).
pub fn principal_conditions(q: &QuadForm) -> (bool, bool, bool) {
    (
        forms::star_equivalent_to_principal(q, 3).unwrap(),
        forms::is_equiv_principal(q, 3),
        forms::orbit_has_leading_p(q, 3).unwrap(),
    )
}

