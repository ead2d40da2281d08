//! Prints the equidistribution calibration fixture.

#[path = "../tests/common/calibration.rs"]
#[allow(dead_code)]
mod calibration;

fn main() {
    print!("{}", calibration::fixture_text(&calibration::measure_all()));
}
