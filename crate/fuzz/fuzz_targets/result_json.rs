#![no_main]
use ipdg::study::ResultFile;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(result) = ResultFile::from_json_slice(data) {
        let text = serde_json::to_vec(&result).unwrap();
        let again = ResultFile::from_json_slice(&text).expect("a written result reads back");
        assert_eq!(again.solution, result.solution);
    }
});
