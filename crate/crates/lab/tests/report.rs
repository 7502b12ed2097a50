use dispersive_core::harness::{EstimateReport, RatioPoint};
use dispersive_lab::report::{read_estimates, verdicts, write_energy, write_estimates, ENERGY_HEADER, ESTIMATE_HEADER};
use proptest::prelude::*;

fn report(id: &str, ratios: &[f64], predicted: f64) -> EstimateReport {
    let points = ratios.iter().enumerate().map(|(i, &r)| RatioPoint::from_ratios(3.0 + i as f64, 1.0, &[Some(r)])).collect();
    EstimateReport::from_points(id, points, predicted, 0.1, 0.5).unwrap()
}

fn csv(reports: &[EstimateReport]) -> String {
    let mut buf = Vec::new();
    write_estimates(&mut buf, reports).unwrap();
    String::from_utf8(buf).unwrap()
}

#[test]
fn empty_list_gives_header_only() {
    assert_eq!(csv(&[]), ESTIMATE_HEADER.join(",") + "\n");
    let mut buf = Vec::new();
    write_energy(&mut buf, &[]).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), ENERGY_HEADER.join(",") + "\n");
}

#[test]
fn one_point_gives_one_row_in_declared_order() {
    let mut r = report("bilinear", &[1.0, 0.5, 0.25], -1.0);
    r.points.truncate(1);
    let text = csv(&[r]);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    let cells: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(cells.len(), ESTIMATE_HEADER.len());
    assert_eq!(cells[0], "bilinear");
    assert_eq!(cells[1], "3.0000000000000000e0");
    assert_eq!(cells[3], "1.0000000000000000e0");
    assert_eq!(cells[5], "-1.0000000000000000e0");
    assert_eq!(cells[7], "true");
}

#[test]
fn floats_round_trip_exactly() {
    let r = report("x", &[std::f64::consts::PI, 1e-300, 7.0e12], 0.0);
    let rows = read_estimates(csv(std::slice::from_ref(&r)).as_bytes()).unwrap();
    for (row, p) in rows.iter().zip(&r.points) {
        assert_eq!(row.max_ratio.to_bits(), p.max_ratio.to_bits());
        assert_eq!(row.slope.to_bits(), r.slope.to_bits());
    }
}

#[test]
fn reader_rejects_foreign_headers() {
    assert!(read_estimates("a,b\n1,2\n".as_bytes()).is_err());
}

proptest! {
    #[test]
    fn verdicts_survive_the_round_trip(
        slopes in prop::collection::vec(-2.0f64..2.0, 0..6),
        predicted in -1.0f64..1.0,
    ) {
        let reports: Vec<EstimateReport> = slopes
            .iter()
            .enumerate()
            .map(|(i, s)| report(&format!("r{i}"), &[1.0, s.exp2(), (2.0 * s).exp2()], predicted))
            .collect();
        let rows = read_estimates(csv(&reports).as_bytes()).unwrap();
        prop_assert_eq!(rows.len(), 3 * reports.len());
        let want: Vec<(String, bool)> = reports.iter().map(|r| (r.id.clone(), r.verdict)).collect();
        prop_assert_eq!(verdicts(&rows), want);
    }
}
