use pyo3::ffi::c_str;
use pyo3::prelude::*;

use cadm_py::cadm_py as extension;

fn with_module(code: &std::ffi::CStr) {
    pyo3::append_to_inittab!(extension);
    Python::attach(|py| {
        py.run(code, None, None).unwrap();
    });
}

#[test]
fn module_round_trip() {
    with_module(c_str!(
        r#"
import cadm_py

h = [[0.9, 0.1], [0.1, 0.9]]
assert cadm_py.sim(h, h) == 1.0
assert abs(cadm_py.sim(h, [[0.1, 0.9], [0.9, 0.1]]) - 0.18 / 0.82) < 1e-12

w = cadm_py.SimilarityWindow(3, 2.0)
assert w.update(0.8) == 0.8 and len(w) == 1

x, y = cadm_py.generate_stream("square", chunks=2, chunk_size=100, drift_every=0, seed=1)
nb = cadm_py.GaussianNB(2, 2)
nb.fit(x[:100], y[:100])
snap = nb.snapshot()
nb.partial_fit(x[100:], y[100:])
assert snap.predict_prob(x[:5]) != nb.predict_prob(x[:5])

try:
    nb.fit([[0.0, 0.0]], [5])
    raise AssertionError("label out of range accepted")
except ValueError:
    pass

r = cadm_py.run_cadm("circle", seed=2, chunks=60)
assert len(r.traces) == 59 and r.traces[0]["cosine"] == 1.0
m = cadm_py.match_detections([26, 51], r.drifts)
assert m["false_negatives"] + len(m["delays"]) == 2
"#
    ));
}
