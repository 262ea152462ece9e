//! Element table: symbols, atomic numbers and the valence models used by the
//! SMILES parser, the SELFIES codec and the fingerprint invariants.

use std::fmt;
use std::str::FromStr;

macro_rules! elements {
    ($($variant:ident => $sym:literal, $z:literal, $max:literal;)*) => {
        /// Chemical elements accepted by the SMILES parser.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum Element {
            $($variant,)*
        }

        impl Element {
            pub const ALL: &'static [Element] = &[$(Element::$variant,)*];

            pub fn symbol(self) -> &'static str {
                match self { $(Element::$variant => $sym,)* }
            }

            pub fn atomic_number(self) -> u8 {
                match self { $(Element::$variant => $z,)* }
            }

            /// Largest total valence (bond orders plus hydrogens) tolerated for
            /// the neutral atom.
            fn base_max_valence(self) -> u8 {
                match self { $(Element::$variant => $max,)* }
            }
        }

        impl FromStr for Element {
            type Err = ();
            fn from_str(s: &str) -> Result<Self, ()> {
                match s {
                    $($sym => Ok(Element::$variant),)*
                    _ => Err(()),
                }
            }
        }
    };
}

elements! {
    H => "H", 1, 1;
    Li => "Li", 3, 1;
    B => "B", 5, 4;
    C => "C", 6, 4;
    N => "N", 7, 5;
    O => "O", 8, 3;
    F => "F", 9, 1;
    Na => "Na", 11, 1;
    Mg => "Mg", 12, 2;
    Al => "Al", 13, 3;
    Si => "Si", 14, 6;
    P => "P", 15, 6;
    S => "S", 16, 6;
    Cl => "Cl", 17, 7;
    K => "K", 19, 1;
    Ca => "Ca", 20, 2;
    Fe => "Fe", 26, 6;
    Co => "Co", 27, 6;
    Cu => "Cu", 29, 4;
    Zn => "Zn", 30, 4;
    Ga => "Ga", 31, 3;
    As => "As", 33, 5;
    Se => "Se", 34, 6;
    Br => "Br", 35, 7;
    Sr => "Sr", 38, 2;
    Ag => "Ag", 47, 2;
    Sn => "Sn", 50, 4;
    I => "I", 53, 7;
    Ba => "Ba", 56, 2;
    Gd => "Gd", 64, 3;
    Pt => "Pt", 78, 6;
    Au => "Au", 79, 4;
    Hg => "Hg", 80, 2;
    Bi => "Bi", 83, 5;
}

impl Element {
    /// Upper bound on bond-order sum plus hydrogens for an atom of this element
    /// carrying `charge`.
    pub fn max_valence(self, charge: i8) -> u8 {
        self.base_max_valence()
            .saturating_add(charge.unsigned_abs())
    }

    /// Organic-subset elements, which may appear without brackets in SMILES.
    pub fn is_organic_subset(self) -> bool {
        matches!(
            self,
            Element::B
                | Element::C
                | Element::N
                | Element::O
                | Element::P
                | Element::S
                | Element::F
                | Element::Cl
                | Element::Br
                | Element::I
        )
    }

    /// Elements that may be written lowercase (aromatic) in SMILES.
    pub fn can_be_aromatic(self) -> bool {
        matches!(
            self,
            Element::B | Element::C | Element::N | Element::O | Element::P | Element::S
        )
    }

    /// Normal valences used to infer implicit hydrogens on unbracketed atoms.
    pub fn standard_valences(self) -> &'static [u8] {
        match self {
            Element::B => &[3],
            Element::C => &[4],
            Element::N | Element::P => &[3, 5],
            Element::O => &[2],
            Element::S => &[2, 4, 6],
            Element::F | Element::Cl | Element::Br | Element::I => &[1],
            _ => &[],
        }
    }

    /// Implicit hydrogen count for an unbracketed, uncharged atom whose bond
    /// orders sum to `bond_sum`.
    pub fn implicit_hydrogens(self, bond_sum: u8) -> u8 {
        self.standard_valences()
            .iter()
            .find(|&&v| v >= bond_sum)
            .map(|&v| v - bond_sum)
            .unwrap_or(0)
    }

    /// Bonding capacity of the SELFIES default constraint set, before explicit
    /// hydrogens are subtracted. `None` outside the SELFIES alphabet.
    pub fn selfies_capacity(self, charge: i8) -> Option<u8> {
        let cap = match (self, charge) {
            (Element::F | Element::Cl | Element::Br | Element::I, 0) => 1,
            (Element::F | Element::Cl | Element::Br | Element::I, -1) => 0,
            (Element::F | Element::Cl | Element::Br | Element::I, 1) => 2,
            (Element::B, 0) => 3,
            (Element::B, 1) => 2,
            (Element::B, -1) => 4,
            (Element::O, 0) => 2,
            (Element::O, 1) => 3,
            (Element::O, -1) => 1,
            (Element::N, 0) => 3,
            (Element::N, 1) => 4,
            (Element::N, -1) => 2,
            (Element::C, 0) => 4,
            (Element::C, 1) => 5,
            (Element::C, -1) => 3,
            (Element::P, 0) => 5,
            (Element::P, 1) => 4,
            (Element::P, -1) => 6,
            (Element::S, 0) => 6,
            (Element::S, 1) => 5,
            (Element::S, -1) => 7,
            _ => return None,
        };
        Some(cap)
    }

    /// Valence target used when deciding whether an aromatic atom must take
    /// part in a double bond.
    pub(crate) fn aromatic_valence(self, charge: i8) -> Option<u8> {
        let v = match (self, charge) {
            (Element::C, 0) => 4,
            (Element::C, 1 | -1) => 3,
            (Element::N | Element::P, 0) => 3,
            (Element::N | Element::P, 1) => 4,
            (Element::N | Element::P, -1) => 2,
            (Element::O | Element::S, 0) => 2,
            (Element::O | Element::S, 1) => 3,
            (Element::B, 0) => 3,
            (Element::B, -1) => 4,
            (Element::S, -1) | (Element::O, -1) => 1,
            _ => return None,
        };
        Some(v)
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbols_round_trip() {
        for &el in Element::ALL {
            assert_eq!(el.symbol().parse::<Element>(), Ok(el));
        }
        assert!("Zz".parse::<Element>().is_err());
    }

    #[test]
    fn implicit_h_follows_lowest_fitting_valence() {
        assert_eq!(Element::C.implicit_hydrogens(1), 3);
        assert_eq!(Element::N.implicit_hydrogens(4), 1);
        assert_eq!(Element::S.implicit_hydrogens(3), 1);
        assert_eq!(Element::S.implicit_hydrogens(4), 0);
        assert_eq!(Element::Cl.implicit_hydrogens(2), 0);
    }

    #[test]
    fn selfies_capacity_within_max_valence() {
        for &el in Element::ALL {
            for charge in -1..=1 {
                if let Some(cap) = el.selfies_capacity(charge) {
                    assert!(cap <= el.max_valence(charge), "{el}{charge}");
                }
            }
        }
    }
}
