//! Small hand-checkable tables.

use super::schema::AttributeSchema;
use super::table::LeafTable;

/// Two-attribute example: data center × device type, where both leaves of
/// data center `X` dropped well below forecast.
///
/// | DataCenter | DeviceType | actual | forecast |
/// |------------|------------|--------|----------|
/// | X          | D1         | 10     | 30       |
/// | X          | D2         | 3      | 10       |
/// | Y          | D1         | 15     | 14       |
/// | Y          | D2         | 30     | 30       |
/// | Y          | D3         | 100    | 102      |
pub fn table1() -> LeafTable {
    let schema = AttributeSchema::new([
        ("DataCenter", vec!["X", "Y"]),
        ("DeviceType", vec!["D1", "D2", "D3"]),
    ])
    .expect("valid schema");
    LeafTable::fundamental(
        schema,
        vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1], vec![1, 2]],
        vec![10.0, 3.0, 15.0, 30.0, 100.0],
        vec![30.0, 10.0, 14.0, 30.0, 102.0],
    )
    .expect("valid table")
}

/// [`table1`] rendered in the instance CSV format.
pub const TABLE1_CSV: &str = "DataCenter,DeviceType,real,predict
X,D1,10,30
X,D2,3,10
Y,D1,15,14
Y,D2,30,30
Y,D3,100,102
";
