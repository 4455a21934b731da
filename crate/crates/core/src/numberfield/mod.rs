mod classgroup;
mod element;
mod field;
mod ideal;
mod primes;
mod quotient;
mod residue;
mod units;

pub use element::{parse_rational, render_rational, serialize_rational, FieldElement};
pub use field::{cis_fraction, is_squarefree, ratio_to_f64, FieldDescriptor};
pub use ideal::{integral_ideals_of_norm, FracIdeal, IdealJson};
pub use primes::{
    divisor_count_u64, factor_ideal, factor_u64, ideal_divisor_count, k_index, primes_above,
    unit_group_order, PrimeIdeal,
};
pub use quotient::QuotientModule;
pub use residue::{element_of, residue_of, Residue, ResidueRing};
pub use classgroup::{
    class_number, minkowski_bound, narrow_class_group, narrow_class_number, narrow_class_reps,
    narrow_generator, normalize_tp_generator, principal_generator, ClassRep,
};
pub use units::{fundamental_unit, roots_of_unity, tp_units_mod_squares, UnitData};
