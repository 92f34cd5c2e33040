//! Conversions between natural units (ħ = c = k_B = 1, energies in eV) and
//! laboratory units. Multiply a laboratory value by the constant to get eV
//! powers; divide to go back.

/// ħc in eV·cm.
pub const HBAR_C_EV_CM: f64 = 1.973269804e-5;

/// One centimetre in eV⁻¹.
pub const CM: f64 = 1.0 / HBAR_C_EV_CM;

/// One metre in eV⁻¹.
pub const METRE: f64 = 100.0 * CM;

/// One second in eV⁻¹.
pub const SECOND: f64 = 1.519267447e15;

/// One kelvin in eV.
pub const KELVIN: f64 = 8.617333262e-5;

/// One kilogram in eV.
pub const KILOGRAM: f64 = 5.60958860e35;

/// One atomic mass unit in eV.
pub const DALTON: f64 = 931.49410242e6;

/// A number density of one per cm³ in eV³.
pub const PER_CM3: f64 = HBAR_C_EV_CM * HBAR_C_EV_CM * HBAR_C_EV_CM;
