use fusekit::efficiency::{
    estimate_flat_index_size, flops_bm25, flops_cross_encoder, flops_dense, flops_multivector_closed_form,
    measure_latency, render_profile_table, CostModelInputs, FlopsReport, ProfileRow,
};

/// Two significant figures, `1.7e+6` style.
fn sci2(x: f64) -> String {
    let s = format!("{x:.1e}");
    let (m, e) = s.split_once('e').unwrap();
    format!("{m}e+{e}")
}

#[test]
fn reference_table_flops() {
    let bm25 = flops_bm25(15.0, 27_942);
    assert_eq!(bm25, 1_676_520.0);
    assert_eq!(bm25 as u64, 1_676_520);
    assert_eq!(sci2(bm25), "1.7e+6");
    assert_eq!(flops_cross_encoder(1000, 2.2e10), 2.2e13);
    assert_eq!(sci2(flops_dense(2.56e9, 768, 27_942)), "2.6e+9");
    assert_eq!(
        sci2(flops_multivector_closed_form(2.56e9, 128, 15.0, 157.0, 27_942)),
        "2.6e+11"
    );
}

#[test]
fn reference_table_index_sizes() {
    for (dim, expected) in [(384, 40.9), (768, 81.9), (1024, 109.1)] {
        let size = estimate_flat_index_size(dim, 32, 27_942);
        assert_eq!(size.bytes, dim * 4 * 27_942);
        assert!((size.mib - expected).abs() <= 0.05, "{dim}: {}", size.mib);
    }
}

#[test]
fn default_inputs_report() {
    let inputs = CostModelInputs::default();
    inputs.validate().unwrap();
    let r = FlopsReport::from_inputs(&inputs);
    assert_eq!(r.bm25, 1_676_520.0);
    assert_eq!(r.cross_encoder, 2.2e13);
    assert!(r.multivector_closed_form > r.multivector);
    let bad = CostModelInputs {
        avg_query_len: -1.0,
        ..inputs
    };
    assert!(bad.validate().is_err());
}

#[test]
fn latency_counts_and_orders() {
    let queries: Vec<u64> = (0..7).collect();
    let mut calls = 0;
    let report = measure_latency(&queries, 3, |q| {
        calls += 1;
        std::hint::black_box((0..*q * 1000).sum::<u64>());
    })
    .unwrap();
    assert_eq!(calls, 10);
    assert_eq!(report.count, 7);
    assert!(report.min_secs <= report.mean_secs && report.mean_secs <= report.max_secs);
    assert!(measure_latency::<u64, _>(&[], 3, |_| {}).is_err());
}

#[test]
fn profile_table_layout() {
    let rows = [
        ProfileRow {
            system: "bm25".into(),
            index: None,
            ratio: None,
            latency_secs: Some(0.0123),
            flops: 1_676_520.0,
        },
        ProfileRow {
            system: "dense-768".into(),
            index: Some(estimate_flat_index_size(768, 32, 27_942)),
            ratio: Some(2.9),
            latency_secs: None,
            flops: 2.6e9,
        },
    ];
    let table = render_profile_table(&rows);
    assert_eq!(table.lines().count(), 3);
    assert!(table.contains("81.9"));
    assert!(table.contains("x2.9"));
    assert!(table.contains("1.7e6"));
}
