use crate::feeder::Regulator;

/// Tap position after one control evaluation.
///
/// In band (|v - setpoint| <= bandwidth / 2) the tap holds. Out of band, once
/// the voltage has been out of band for at least the time delay, the tap moves
/// one step toward the band, saturating at the tap limits.
pub fn apply_regulator_logic(reg: &Regulator, regulated_voltage_pu: f64, elapsed_out_of_band_s: f64) -> i32 {
    let tap = reg.current_tap;
    match band_direction(reg, regulated_voltage_pu) {
        0 => tap,
        _ if elapsed_out_of_band_s < reg.delay_s => tap,
        dir => (tap + dir).clamp(reg.tap_min, reg.tap_max),
    }
}

/// +1 when the voltage is below band, -1 above band, 0 in band.
pub fn band_direction(reg: &Regulator, v: f64) -> i32 {
    let half = reg.bandwidth_pu / 2.0;
    if v < reg.setpoint_pu - half {
        1
    } else if v > reg.setpoint_pu + half {
        -1
    } else {
        0
    }
}
