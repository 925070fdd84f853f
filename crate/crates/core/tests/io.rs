use spn::augment::augment;
use spn::fixtures;
use spn::graph::Variable;
use spn::io::{load_dataset, load_model, load_record, save_dataset, save_model, save_record};
use spn::{evaluate, SpnError, Value, VarId};

#[test]
fn shipped_model_loads_and_evaluates() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../models/running_example.spn");
    let net = load_model(path).unwrap();
    let x = net.parse_assignment("A=+a,B=+b,C=¬c").unwrap();
    assert!((evaluate(&net, &x).unwrap().value() - 0.108).abs() < 1e-15);
}

#[test]
fn save_load_save_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.spn"), dir.path().join("b.spn"));
    save_model(&fixtures::nested_example(), &a).unwrap();
    save_model(&load_model(&a).unwrap(), &b).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn invalid_models_are_rejected_on_load() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nd.spn");
    save_model(&fixtures::non_decomposable(), &path).unwrap();
    match load_model(&path) {
        Err(SpnError::InvalidModel(msg)) => assert!(msg.contains("node 0") && msg.contains("decomposable"), "{msg}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn datasets_and_records_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("d.csv");
    std::fs::write(&csv, "A,B,C\n+a,+b,¬c\n+a,,¬c\n").unwrap();
    let net = fixtures::running_example();
    let d = load_dataset(&csv, Some(net.variables())).unwrap();
    assert_eq!(d.rows()[1].len(), 2);
    assert!(!d.rows()[1].is_bound(VarId(1)));
    let again = dir.path().join("e.csv");
    save_dataset(&d, &again).unwrap();
    assert_eq!(load_dataset(&again, None).unwrap(), d);

    std::fs::write(&csv, "X,A\n0.5,+a\n-1.25,¬a\n").unwrap();
    let vars = vec![Variable::continuous("X").unwrap(), net.variables()[0].clone()];
    let d = load_dataset(&csv, Some(&vars)).unwrap();
    assert_eq!(d.rows()[1].get(VarId(0)), Some(Value::Real(-1.25)));

    let (_, record) = augment(&fixtures::bt_divergence()).unwrap();
    let json = dir.path().join("r.json");
    save_record(&record, &json).unwrap();
    assert_eq!(load_record(&json).unwrap(), record);
}
