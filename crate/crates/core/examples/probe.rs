use dbar2_core::suite::*;
fn main() {
    let res = Resolution { quick: true };
    println!("{}", check_7_leray(res, 7).line());
    println!("{}", check_8_homotopy(res).line());
}
