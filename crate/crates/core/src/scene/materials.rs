use std::collections::BTreeMap;

use super::model::Material;

/// Built-in visual-to-dynamics material table.
///
/// Friction coefficients and densities are typical handbook values for the
/// family, not measured data.
pub fn default_materials() -> BTreeMap<String, Material> {
    let rows: [(&str, &str, [f64; 3], f64, f64, f64, f64); 14] = [
        ("oak", "wood", [0.55, 0.38, 0.22], 0.6, 0.0, 0.4, 700.0),
        ("pine", "wood", [0.78, 0.63, 0.42], 0.7, 0.0, 0.45, 500.0),
        ("walnut", "wood", [0.36, 0.24, 0.16], 0.5, 0.0, 0.38, 650.0),
        ("steel", "metal", [0.62, 0.62, 0.64], 0.3, 1.0, 0.5, 7850.0),
        ("aluminium", "metal", [0.91, 0.92, 0.92], 0.35, 1.0, 0.45, 2700.0),
        ("brass", "metal", [0.91, 0.78, 0.42], 0.3, 1.0, 0.4, 8500.0),
        ("abs", "plastic", [0.85, 0.85, 0.8], 0.5, 0.0, 0.35, 1050.0),
        ("pvc", "plastic", [0.3, 0.45, 0.7], 0.45, 0.0, 0.4, 1380.0),
        ("cotton", "fabric", [0.7, 0.2, 0.2], 0.9, 0.0, 0.6, 300.0),
        ("linen", "fabric", [0.85, 0.8, 0.7], 0.85, 0.0, 0.55, 350.0),
        ("porcelain", "ceramic", [0.95, 0.95, 0.93], 0.2, 0.0, 0.5, 2400.0),
        ("marble", "stone", [0.9, 0.88, 0.85], 0.25, 0.0, 0.55, 2700.0),
        ("plaster", "plaster", [0.85, 0.84, 0.8], 0.9, 0.0, 0.6, 850.0),
        ("glass", "glass", [0.8, 0.85, 0.85], 0.05, 0.0, 0.3, 2500.0),
    ];
    rows.into_iter()
        .map(|(name, family, albedo, roughness, metallic, friction, density)| {
            (name.to_string(), Material { family: family.into(), albedo, roughness, metallic, friction, density })
        })
        .collect()
}

/// Materials of the table grouped by family.
pub fn family_pools(table: &BTreeMap<String, Material>) -> BTreeMap<String, Vec<(String, Material)>> {
    let mut pools: BTreeMap<String, Vec<(String, Material)>> = BTreeMap::new();
    for (name, m) in table {
        pools.entry(m.family.clone()).or_default().push((name.clone(), m.clone()));
    }
    pools
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_is_valid() {
        for (name, m) in default_materials() {
            m.validate(&name).unwrap();
        }
        assert_eq!(family_pools(&default_materials())["wood"].len(), 3);
    }
}
