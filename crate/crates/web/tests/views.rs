use serde_json::Value;
use tbkit_web::{decompose_json, reproduce_json, whitney_json};

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn alternating_slot_selects_its_negative_half() {
    let v = parse(decompose_json("alternating", 1, 6).unwrap());
    let sel = v["selected"].as_array().unwrap();
    assert_eq!(sel.len(), 1);
    assert_eq!((sel[0]["lo"].as_f64(), sel[0]["hi"].as_f64()), (Some(0.5), Some(1.0)));
    assert_eq!(v["exceptional_fraction"], 0.5);
    assert_eq!(v["profile"][0].as_array().unwrap().len(), 256);
}

#[test]
fn zero_mean_pair_is_reported_as_an_error() {
    let e = decompose_json("alternating", 2, 6).unwrap_err();
    assert!(!e.is_empty());
    assert!(decompose_json("nope", 1, 6).is_err());
}

#[test]
fn reproduction_improves_with_wider_scales() {
    let narrow = parse(reproduce_json(1.0, -2, 2, 4).unwrap());
    let wide = parse(reproduce_json(1.0, -2, 5, 4).unwrap());
    assert!(wide["relative_error"].as_f64().unwrap() < narrow["relative_error"].as_f64().unwrap());
    assert_eq!(narrow["x"].as_array().unwrap().len(), narrow["f"].as_array().unwrap().len());
    assert!(reproduce_json(1.0, -6, 2, 4).is_err());
}

#[test]
fn whitney_squares_of_a_disc_pass_the_check() {
    let v = parse(whitney_json(0.2, -0.1, 1.0, 5).unwrap());
    assert_eq!(v["passes"], true);
    let squares = v["squares"].as_array().unwrap();
    assert!(squares.len() > 20);
    for s in squares {
        let (x, y, side) = (s["x"].as_f64().unwrap(), s["y"].as_f64().unwrap(), s["side"].as_f64().unwrap());
        let (mx, my) = (x + side / 2.0 - 0.2, y + side / 2.0 + 0.1);
        assert!(mx * mx + my * my < 1.0);
    }
    assert!(whitney_json(0.0, 0.0, 3.0, 5).is_err());
}
