#![no_main]
use ipdg::ConvergenceReport;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(report) = ConvergenceReport::from_csv(data) {
        let text = report.to_csv();
        let again = ConvergenceReport::from_csv(&text).expect("a written report reads back");
        assert_eq!(again.to_csv(), text);
    }
});
