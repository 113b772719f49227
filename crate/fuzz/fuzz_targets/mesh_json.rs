#![no_main]
use ipdg::Mesh;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(mesh) = Mesh::from_json_slice(data) {
        let text = mesh.to_json_string();
        let again = Mesh::from_json_str(&text).expect("a written mesh reads back");
        assert_eq!(again.num_cells(), mesh.num_cells());
        assert_eq!(again.interfaces.len(), mesh.interfaces.len());
        let _ = ipdg::audit_shape(&mesh);
    }
});
