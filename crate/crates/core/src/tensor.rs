//! Dense component arrays with a fixed valence.
//!
//! Storage is row-major with upper indices first: `T^{a b}_{c d}` lives at
//! `((a n + b) n + c) n + d`.

use serde_json::Value;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    n: usize,
    upper: usize,
    lower: usize,
    data: Vec<f64>,
}

/// Iterate over every index tuple of the given rank in row-major order.
pub fn for_each_index(n: usize, rank: usize, mut f: impl FnMut(&[usize])) {
    let mut idx = vec![0usize; rank];
    loop {
        f(&idx);
        let mut pos = rank;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < n {
                break;
            }
            idx[pos] = 0;
        }
    }
}

impl Tensor {
    pub fn zeros(n: usize, upper: usize, lower: usize) -> Tensor {
        Tensor {
            n,
            upper,
            lower,
            data: vec![0.0; n.pow((upper + lower) as u32)],
        }
    }

    pub fn scalar(v: f64) -> Tensor {
        Tensor {
            n: 0,
            upper: 0,
            lower: 0,
            data: vec![v],
        }
    }

    pub fn from_fn(
        n: usize,
        upper: usize,
        lower: usize,
        mut f: impl FnMut(&[usize]) -> f64,
    ) -> Tensor {
        let mut t = Tensor::zeros(n, upper, lower);
        let mut k = 0;
        for_each_index(n, upper + lower, |idx| {
            t.data[k] = f(idx);
            k += 1;
        });
        t
    }

    pub fn from_data(n: usize, upper: usize, lower: usize, data: Vec<f64>) -> Tensor {
        assert_eq!(data.len(), n.pow((upper + lower) as u32), "component count");
        Tensor {
            n,
            upper,
            lower,
            data,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.upper + self.lower
    }

    /// `(upper, lower)` index counts.
    pub fn valence(&self) -> (usize, usize) {
        (self.upper, self.lower)
    }

    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank());
        idx.iter().fold(0, |acc, &i| acc * self.n + i)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: f64) {
        let k = self.offset(idx);
        self.data[k] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &Tensor) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn sub(&self, other: &Tensor) -> Tensor {
        self.zip(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Tensor) -> Tensor {
        self.zip(other, |a, b| a + b)
    }

    pub fn scale(&self, s: f64) -> Tensor {
        self.map(|v| s * v)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        Tensor {
            data: self.data.iter().map(|&v| f(v)).collect(),
            ..self.clone()
        }
    }

    fn zip(&self, other: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
        assert_eq!(
            (self.n, self.rank()),
            (other.n, other.rank()),
            "shape mismatch"
        );
        Tensor {
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            ..self.clone()
        }
    }

    /// Contract slot `slot` with the vector `v` (a lower slot with `y`, say).
    pub fn contract(&self, slot: usize, v: &[f64]) -> Tensor {
        let rank = self.rank();
        assert!(slot < rank);
        let (upper, lower) = if slot < self.upper {
            (self.upper - 1, self.lower)
        } else {
            (self.upper, self.lower - 1)
        };
        let mut full = vec![0usize; rank];
        Tensor::from_fn(self.n, upper, lower, |idx| {
            full[..slot].copy_from_slice(&idx[..slot]);
            full[slot + 1..].copy_from_slice(&idx[slot..]);
            (0..self.n)
                .map(|m| {
                    full[slot] = m;
                    self.get(&full) * v[m]
                })
                .sum()
        })
    }

    /// Lower the first (upper) index with `g`: `T_{i ...} = g_{i l} T^l_{...}`.
    pub fn lower_first(&self, g: &Tensor) -> Tensor {
        assert!(self.upper >= 1);
        let n = self.n;
        let mut full = vec![0usize; self.rank()];
        Tensor::from_fn(n, self.upper - 1, self.lower + 1, |idx| {
            full[1..].copy_from_slice(&idx[1..]);
            (0..n)
                .map(|l| {
                    full[0] = l;
                    g.get(&[idx[0], l]) * self.get(&full)
                })
                .sum()
        })
    }

    /// Swap two slots of equal kind.
    pub fn transpose(&self, a: usize, b: usize) -> Tensor {
        let mut src = vec![0usize; self.rank()];
        Tensor::from_fn(self.n, self.upper, self.lower, |idx| {
            src.copy_from_slice(idx);
            src.swap(a, b);
            self.get(&src)
        })
    }

    /// Nested JSON arrays in row-major order.
    pub fn to_json(&self) -> Value {
        fn rec(data: &[f64], n: usize, rank: usize) -> Value {
            if rank == 0 {
                return Value::from(data[0]);
            }
            let stride = data.len() / n;
            Value::Array(
                (0..n)
                    .map(|i| rec(&data[i * stride..(i + 1) * stride], n, rank - 1))
                    .collect(),
            )
        }
        rec(&self.data, self.n.max(1), self.rank())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_row_major() {
        let t = Tensor::from_fn(3, 1, 2, |i| (100 * i[0] + 10 * i[1] + i[2]) as f64);
        assert_eq!(t.get(&[2, 0, 1]), 201.0);
        assert_eq!(t.data()[2 * 9 + 1], 201.0);
    }

    #[test]
    fn contraction_and_lowering() {
        let g = Tensor::from_fn(2, 0, 2, |i| if i[0] == i[1] { 2.0 } else { 0.0 });
        let v = Tensor::from_fn(2, 1, 1, |i| (i[0] + 2 * i[1]) as f64);
        let low = v.lower_first(&g);
        assert_eq!(low.valence(), (0, 2));
        assert_eq!(low.get(&[1, 1]), 6.0);
        let c = v.contract(1, &[1.0, 1.0]);
        assert_eq!(c.valence(), (1, 0));
        assert_eq!(c.get(&[1]), 1.0 + 3.0);
    }

    #[test]
    fn json_nesting() {
        let t = Tensor::from_fn(2, 0, 2, |i| (2 * i[0] + i[1]) as f64);
        assert_eq!(t.to_json().to_string(), "[[0.0,1.0],[2.0,3.0]]");
        assert_eq!(Tensor::scalar(1.5).to_json().to_string(), "1.5");
    }
}
