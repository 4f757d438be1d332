//! Codes shipped with the crate, loaded from `data/ungerboeck_am.toml`.

use super::ConvCodeSpec;
use serde::Deserialize;

const TABLE: &str = include_str!("../../data/ungerboeck_am.toml");

#[derive(Debug, Clone)]
pub struct ShippedCode {
    pub spec: ConvCodeSpec,
    /// Squared free Euclidean distance over `Delta_0^2`, as tabulated.
    pub d2free: f64,
}

#[derive(Deserialize)]
struct Table {
    code: Vec<Entry>,
}

#[derive(Deserialize)]
struct Entry {
    nu: usize,
    parity: Vec<String>,
    d2free: f64,
}

/// All shipped 8-AM codes (`k0 = 2`), ordered by memory.
pub fn shipped_codes() -> Vec<ShippedCode> {
    let table: Table = toml::from_str(TABLE).expect("shipped code table is valid TOML");
    table
        .code
        .into_iter()
        .map(|e| ShippedCode {
            spec: ConvCodeSpec::from_octal(2, e.nu, &e.parity).expect("shipped code is realizable"),
            d2free: e.d2free,
        })
        .collect()
}

pub fn shipped_code(nu: usize) -> Option<ShippedCode> {
    shipped_codes().into_iter().find(|c| c.spec.nu() == nu)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_covers_nu_3_to_7() {
        let nus: Vec<usize> = shipped_codes().iter().map(|c| c.spec.nu()).collect();
        assert_eq!(nus, vec![3, 4, 5, 6, 7]);
        assert_eq!(shipped_code(7).unwrap().spec.parity_octal(), vec!["235", "126", "0"]);
        assert!(shipped_code(9).is_none());
    }
}
