//! One line per acceptance criterion: `[PASS]` or `[FAIL]` with the measured values.

use qthermo::regression;

#[test]
fn criterion_01() {
    let r = regression::criterion_1();
    println!("{}", r.line());
    assert!(r.passed, "{}", r.line());
}

#[test]
fn criterion_02() {
    let r = regression::criterion_2();
    println!("{}", r.line());
    assert!(r.passed, "{}", r.line());
}

#[test]
fn criterion_03() {
    let r = regression::criterion_3();
    println!("{}", r.line());
    assert!(r.passed, "{}", r.line());
}

#[test]
fn criterion_04() {
    let r = regression::criterion_4();
    println!("{}", r.line());
    assert!(r.passed, "{}", r.line());
}

#[test]
fn criterion_05() {
    let r = regression::criterion_5();
    println!("{}", r.line());
    assert!(r.passed, "{}", r.line());
}

#[test]
fn criterion_06() {
    let r = regression::criterion_6();
    println!("{}", r.line());
    assert!(r.passed, "{}", r.line());
}

#[test]
fn criterion_07() {
    let r = regression::criterion_7();
    println!("{}", r.line());
    assert!(r.passed, "{}", r.line());
}

#[test]
fn criterion_08() {
    let r = regression::criterion_8();
    println!("{}", r.line());
    assert!(r.passed, "{}", r.line());
}

#[test]
fn criterion_09() {
    let r = regression::criterion_9();
    println!("{}", r.line());
    assert!(r.passed, "{}", r.line());
}

#[test]
fn criterion_10() {
    let r = regression::criterion_10();
    println!("{}", r.line());
    assert!(r.passed, "{}", r.line());
}

#[test]
fn criterion_11() {
    let r = regression::criterion_11();
    println!("{}", r.line());
    assert!(r.passed, "{}", r.line());
}

#[test]
fn criterion_12() {
    let r = regression::criterion_12();
    println!("{}", r.line());
    assert!(r.passed, "{}", r.line());
}

#[test]
fn criterion_13() {
    let r = regression::criterion_13();
    println!("{}", r.line());
    assert!(r.passed, "{}", r.line());
}

#[test]
fn criterion_14() {
    let r = regression::criterion_14();
    println!("{}", r.line());
    assert!(r.passed, "{}", r.line());
}
