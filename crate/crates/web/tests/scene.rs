use qfusion_web::Scene;

#[test]
fn views_fill_the_canvas() {
    let scene = Scene::new(2, 7);
    let (h, w) = (scene.height(), scene.width());
    assert_eq!(scene.pair_rgba(0.5).len(), h * 2 * w * 4);
    for levels in 0..=2 {
        assert_eq!(scene.decomposition_rgba(levels % 2 == 1, levels).unwrap().len(), h * w * 4);
    }
    for method in [1, 2] {
        for fusion in ["none", "select", "sum"] {
            assert_eq!(scene.quotient_rgba(method, fusion, 1.7).unwrap().len(), h * w * 4);
        }
    }
    assert_eq!(scene.fused_rgba(1.0).unwrap().len(), h * w * 4);
}

#[test]
fn normalized_quotient_ignores_illumination() {
    let scene = Scene::new(0, 1);
    assert_eq!(
        scene.quotient_rgba(2, "none", 0.5).unwrap(),
        scene.quotient_rgba(2, "none", 2.0).unwrap()
    );
    assert!(scene.illumination_change(1, 4.0).unwrap() < 1e-6);
}
