use super::element::{Element, WILDCARD};
use super::schema::AttributeSchema;

/// A set of elements sharing which attributes are concrete.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Cuboid {
    mask: u64,
}

impl Cuboid {
    pub fn from_mask(mask: u64) -> Self {
        Self { mask }
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    pub fn layer(&self) -> usize {
        self.mask.count_ones() as usize
    }

    /// Concrete attribute indices, ascending.
    pub fn attributes(&self) -> Vec<usize> {
        (0..64).filter(|i| self.mask & (1 << i) != 0).collect()
    }

    pub fn contains(&self, element: &Element) -> bool {
        element.attribute_mask() == self.mask
    }

    /// The element of this cuboid that a leaf row belongs to.
    pub fn project(&self, row: &[u32]) -> Element {
        Element::new(
            row.iter()
                .enumerate()
                .map(|(i, &v)| if self.mask & (1 << i) != 0 { v } else { WILDCARD })
                .collect(),
        )
    }

    /// True iff every concrete attribute of `self` is concrete in `other`.
    pub fn is_subset_of(&self, other: &Cuboid) -> bool {
        self.mask & other.mask == self.mask
    }
}

/// All non-trivial cuboids grouped by layer `1..=d`. Within a layer,
/// cuboids are ordered lexicographically by their ascending attribute list.
pub fn enumerate_cuboids(dim: usize) -> Vec<Vec<Cuboid>> {
    assert!(dim >= 1 && dim < 64, "cuboid enumeration supports 1..=63 attributes");
    let mut layers = Vec::with_capacity(dim);
    for layer in 1..=dim {
        let mut cuboids = Vec::new();
        combinations(dim, layer, 0, 0, &mut cuboids);
        layers.push(cuboids);
    }
    layers
}

fn combinations(dim: usize, left: usize, start: usize, mask: u64, out: &mut Vec<Cuboid>) {
    if left == 0 {
        out.push(Cuboid::from_mask(mask));
        return;
    }
    for i in start..=dim - left {
        combinations(dim, left - 1, i + 1, mask | (1 << i), out);
    }
}

/// Mixed-radix key of a row's projection onto a cuboid.
#[derive(Debug, Clone)]
pub(crate) struct CuboidKeys {
    attrs: Vec<usize>,
    strides: Vec<u64>,
    size: u64,
}

impl CuboidKeys {
    /// `None` when the key space of the cuboid does not fit in `u64`.
    pub(crate) fn new(cuboid: Cuboid, schema: &AttributeSchema) -> Option<Self> {
        let attrs = cuboid.attributes();
        let mut strides = Vec::with_capacity(attrs.len());
        let mut size: u64 = 1;
        for &a in &attrs {
            strides.push(size);
            size = size.checked_mul(schema.cardinality(a) as u64)?;
        }
        Some(Self {
            attrs,
            strides,
            size,
        })
    }

    #[inline]
    pub(crate) fn key(&self, row: &[u32]) -> u64 {
        self.attrs
            .iter()
            .zip(&self.strides)
            .map(|(&a, &s)| row[a] as u64 * s)
            .sum()
    }

    pub(crate) fn size(&self) -> u64 {
        self.size
    }

    pub(crate) fn element(&self, key: u64, dim: usize) -> Element {
        let mut coords = vec![WILDCARD; dim];
        for (i, &a) in self.attrs.iter().enumerate() {
            let next = self.strides.get(i + 1).copied().unwrap_or(self.size);
            coords[a] = ((key % next) / self.strides[i]) as u32;
        }
        Element::new(coords)
    }
}
