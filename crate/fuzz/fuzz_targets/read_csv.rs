#![no_main]

use libfuzzer_sys::fuzz_target;
use modint_cli::{read_csv, write_csv};

fuzz_target!(|data: &[u8]| {
    if let Ok(table) = read_csv("fuzz", data) {
        let mut buf = Vec::new();
        write_csv(&table, &mut buf).unwrap();
        let again = read_csv("fuzz", buf.as_slice()).unwrap();
        assert_eq!(again.headers, table.headers);
        assert_eq!(again.rows.len(), table.rows.len());
        for (a, b) in again.rows.iter().zip(&table.rows) {
            for (x, y) in a.iter().zip(b) {
                assert!(x.to_bits() == y.to_bits() || (x.is_nan() && y.is_nan()));
            }
        }
    }
});
