//! Every example runs to completion on reduced sizes.

#[allow(dead_code)]
#[path = "../examples/build_map.rs"]
mod build_map;

#[allow(dead_code)]
#[path = "../examples/localize_images.rs"]
mod localize_images;

#[allow(dead_code)]
#[path = "../examples/classify_objects.rs"]
mod classify_objects;

#[allow(dead_code)]
#[path = "../examples/place_crossval.rs"]
mod place_crossval;

#[allow(dead_code)]
#[path = "../examples/over_time.rs"]
mod over_time;

#[allow(dead_code)]
#[path = "../examples/lhs_search.rs"]
mod lhs_search;

#[allow(dead_code)]
#[path = "../examples/persistence.rs"]
mod persistence;

#[allow(dead_code)]
#[path = "../examples/plot_map.rs"]
mod plot_map;

#[test]
fn build_map_runs() {
    build_map::run().unwrap();
}

#[test]
fn localize_images_runs() {
    localize_images::run(1, 5).unwrap();
}

#[test]
fn classify_objects_runs() {
    classify_objects::run().unwrap();
}

#[test]
fn place_crossval_runs() {
    place_crossval::run(20).unwrap();
}

#[test]
fn over_time_runs() {
    over_time::run(2).unwrap();
}

#[test]
fn lhs_search_runs() {
    lhs_search::run(3).unwrap();
}

#[test]
fn persistence_runs() {
    let tmp = tempfile::tempdir().unwrap();
    persistence::run(tmp.path()).unwrap();
}

#[test]
fn plot_map_runs() {
    let svg = plot_map::run(10).unwrap();
    assert!(svg.contains(r#"class="node""#));
}
