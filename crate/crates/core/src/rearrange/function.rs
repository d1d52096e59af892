use std::fmt::Write as _;

use crate::error::RearrangeError;
use crate::geometry::{DomainMask, Lattice};

/// Real values on every node of the lattice box, zero outside `support_mask`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    mask: DomainMask,
    values: Vec<f64>,
}

impl GridFunction {
    /// Fails if `values` has the wrong length or is nonzero outside `mask`.
    pub fn new(mask: DomainMask, values: Vec<f64>) -> Result<Self, RearrangeError> {
        let n = mask.lattice().len();
        if values.len() != n {
            return Err(RearrangeError::LengthMismatch { expected: n, got: values.len() });
        }
        if let Some(i) = (0..n).find(|&i| !mask.contains(i) && values[i] != 0.0) {
            return Err(RearrangeError::ValueOutsideSupport(i));
        }
        Ok(Self { mask, values })
    }

    /// Evaluates `f` on inside nodes; everything else is zero.
    pub fn from_fn(mask: DomainMask, mut f: impl FnMut(usize) -> f64) -> Self {
        let values = (0..mask.lattice().len()).map(|i| if mask.contains(i) { f(i) } else { 0.0 }).collect();
        Self { mask, values }
    }

    pub fn zeros(mask: DomainMask) -> Self {
        let n = mask.lattice().len();
        Self { mask, values: vec![0.0; n] }
    }

    pub fn lattice(&self) -> &Lattice {
        self.mask.lattice()
    }

    pub fn mask(&self) -> &DomainMask {
        &self.mask
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, index: usize) -> f64 {
        self.values[index]
    }

    pub fn into_parts(self) -> (DomainMask, Vec<f64>) {
        (self.mask, self.values)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// First negative node, if any.
    pub fn first_negative(&self) -> Option<usize> {
        self.values.iter().position(|&v| v < 0.0)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { mask: self.mask.clone(), values: self.values.iter().map(|v| v * c).collect() }
    }

    /// Nodes where the value is nonzero.
    pub fn support(&self) -> DomainMask {
        DomainMask::from_fn(*self.lattice(), |i| self.values[i] != 0.0)
    }

    /// `(h^d Σ |u_i - v_i|^p)^{1/p}` over the whole box.
    pub fn lp_distance(&self, other: &Self, p: f64) -> f64 {
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs().powf(p)).sum();
        (self.lattice().cell_volume() * s).powf(1.0 / p)
    }

    /// Portable text: a `# lattice` header line, then `index value` for every
    /// inside node. Values use the shortest round-trip representation.
    pub fn to_text(&self) -> String {
        let l = self.lattice();
        let [nx, ny] = l.extent();
        let o = l.origin();
        let mut s = format!("# lattice dim={} h={} nx={} ny={} ox={} oy={}\n", l.dim(), l.h(), nx, ny, o[0], o[1]);
        for i in self.mask.indices() {
            let _ = writeln!(s, "{} {}", i, self.values[i]);
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, RearrangeError> {
        let perr = |m: String| RearrangeError::Parse(m);
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| perr("empty input".into()))?;
        let rest = header.strip_prefix("# lattice").ok_or_else(|| perr("missing '# lattice' header".into()))?;
        let mut dim = None;
        let mut h = None;
        let (mut nx, mut ny, mut ox, mut oy) = (None, None, None, None);
        for kv in rest.split_whitespace() {
            let (k, v) = kv.split_once('=').ok_or_else(|| perr(format!("bad header field {kv:?}")))?;
            let num = || v.parse::<f64>().map_err(|_| perr(format!("bad header value {kv:?}")));
            let int = || v.parse::<usize>().map_err(|_| perr(format!("bad header value {kv:?}")));
            match k {
                "dim" => dim = Some(int()?),
                "h" => h = Some(num()?),
                "nx" => nx = Some(int()?),
                "ny" => ny = Some(int()?),
                "ox" => ox = Some(num()?),
                "oy" => oy = Some(num()?),
                other => return Err(perr(format!("unknown header field {other:?}"))),
            }
        }
        let missing = |n: &str| perr(format!("header is missing {n}"));
        let lattice = Lattice::new(
            dim.ok_or_else(|| missing("dim"))?,
            h.ok_or_else(|| missing("h"))?,
            [nx.ok_or_else(|| missing("nx"))?, ny.ok_or_else(|| missing("ny"))?],
            [ox.ok_or_else(|| missing("ox"))?, oy.ok_or_else(|| missing("oy"))?],
        )?;
        let mut mask = DomainMask::empty(lattice);
        let mut values = vec![0.0; lattice.len()];
        for line in lines.map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let (i, v) = line.split_once(char::is_whitespace).ok_or_else(|| perr(format!("bad line {line:?}")))?;
            let i: usize = i.parse().map_err(|_| perr(format!("bad index in {line:?}")))?;
            let v: f64 = v.trim().parse().map_err(|_| perr(format!("bad value in {line:?}")))?;
            if i >= lattice.len() {
                return Err(perr(format!("index {i} outside lattice")));
            }
            mask.set(i, true);
            values[i] = v;
        }
        Self::new(mask, values)
    }

    /// Little-endian `f64` per box node in row-major order.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.values.iter().flat_map(|v| v.to_le_bytes()).collect()
    }

    /// Inverse of [`to_bytes`](Self::to_bytes); the support mask becomes the set of nonzero nodes.
    pub fn from_bytes(lattice: Lattice, bytes: &[u8]) -> Result<Self, RearrangeError> {
        if bytes.len() != 8 * lattice.len() {
            return Err(RearrangeError::LengthMismatch { expected: lattice.len(), got: bytes.len() / 8 });
        }
        let values: Vec<f64> = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
        let mask = DomainMask::from_fn(lattice, |i| values[i] != 0.0);
        Self::new(mask, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lattice() -> Lattice {
        Lattice::centered(2, 0.25, 3).unwrap()
    }

    #[test]
    fn rejects_values_outside_support() {
        let l = lattice();
        let m = DomainMask::from_indices(l, [10]).unwrap();
        let mut v = vec![0.0; l.len()];
        v[11] = 1.0;
        assert_eq!(GridFunction::new(m.clone(), v), Err(RearrangeError::ValueOutsideSupport(11)));
        assert!(matches!(GridFunction::new(m, vec![0.0; 3]), Err(RearrangeError::LengthMismatch { .. })));
    }

    #[test]
    fn from_fn_zeroes_exterior() {
        let l = lattice();
        let m = DomainMask::from_indices(l, [3, 4]).unwrap();
        let u = GridFunction::from_fn(m, |_| 2.0);
        assert_eq!(u.values().iter().filter(|&&v| v != 0.0).count(), 2);
    }

    proptest! {
        #[test]
        fn text_and_binary_round_trip(vals in proptest::collection::vec(0.0f64..10.0, 49)) {
            let l = lattice();
            let m = DomainMask::from_fn(l, |i| vals[i] > 3.0);
            let u = GridFunction::from_fn(m, |i| vals[i]);
            prop_assert_eq!(&GridFunction::from_text(&u.to_text()).unwrap(), &u);
            let b = GridFunction::from_bytes(l, &u.to_bytes()).unwrap();
            prop_assert_eq!(b.values(), u.values());
        }
    }
}
