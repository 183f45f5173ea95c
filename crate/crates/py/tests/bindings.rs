use std::ffi::CString;

use mmvc::mmvc;
use pyo3::prelude::*;

#[test]
fn module_round_trip() {
    pyo3::append_to_inittab!(mmvc);
    Python::with_gil(|py| {
        let code = CString::new(include_str!("../../../python/smoke_test.py")).unwrap();
        let m = PyModule::from_code(py, &code, c"smoke_test.py", c"smoke_test").unwrap();
        m.getattr("main").unwrap().call0().unwrap();
    });
}
