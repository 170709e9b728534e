use hahn_core::series::{alpha, y_pow};
use hahn_core::artin::{as_root, as_apply};
use hahn_core::exponent::Exponent;

fn main() {
    let p = 2;
    let a = alpha(p);
    let root = as_root(&a).unwrap();
    println!("root = {root}");
    let back = as_apply(&root).unwrap();
    println!("AS(root) = {back}");
    println!("alpha    = {a}");
    let diff = back.sub(&a).unwrap();
    println!("diff = {diff}");
    println!("diff enum: {:?}", diff.enumerate(6));
    let _ = y_pow(p, Exponent::integer(p, -1));
}
