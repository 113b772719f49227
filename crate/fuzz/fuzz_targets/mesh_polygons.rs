#![no_main]
use ipdg::{build_mesh, Point};
use libfuzzer_sys::fuzz_target;

// Layout: vertex count byte, one (x, y) byte pair per vertex on a 1/255 grid,
// then cells as a length byte followed by that many vertex indices.
fuzz_target!(|data: &[u8]| {
    let Some((&nv, rest)) = data.split_first() else { return };
    let nv = nv as usize % 32 + 3;
    if rest.len() < 2 * nv {
        return;
    }
    let (coords, mut rest) = rest.split_at(2 * nv);
    let vertices: Vec<Point> = coords
        .chunks_exact(2)
        .map(|c| Point::new(c[0] as f64 / 255.0, c[1] as f64 / 255.0))
        .collect();
    let mut cells = Vec::new();
    while let Some((&len, tail)) = rest.split_first() {
        let len = (len as usize % 6 + 3).min(tail.len());
        cells.push(tail[..len].iter().map(|&i| i as usize % nv).collect::<Vec<_>>());
        rest = &tail[len..];
    }
    if let Ok(mesh) = build_mesh(vertices, cells) {
        let area: f64 = mesh.cells.iter().map(|c| c.area).sum();
        assert!(area > 0.0);
        for (e, iface) in mesh.interfaces.iter().enumerate() {
            let (k1, k2) = iface.cells();
            assert!(mesh.cells[k1].interfaces.contains(&e));
            if let Some(k2) = k2 {
                assert!(mesh.cells[k2].interfaces.contains(&e));
            }
        }
    }
});
