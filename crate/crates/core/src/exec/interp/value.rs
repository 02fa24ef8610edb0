//! Scalars, vectors and matrices with numpy broadcasting.

use std::borrow::Cow;

use super::InterpError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(super) enum Kind {
    Float,
    Int,
    Bool,
}

/// `ndim` is 0, 1 or 2. Scalars use `(1, 1)`, vectors `(1, n)`.
#[derive(Debug, Clone, PartialEq)]
pub(super) struct Value<'a> {
    pub ndim: u8,
    pub rows: usize,
    pub cols: usize,
    pub kind: Kind,
    pub data: Cow<'a, [f64]>,
}

type VResult<T> = Result<T, InterpError>;

fn rt(msg: impl Into<String>) -> InterpError {
    InterpError::Runtime(msg.into())
}

impl<'a> Value<'a> {
    pub fn scalar(v: f64, kind: Kind) -> Self {
        Value {
            ndim: 0,
            rows: 1,
            cols: 1,
            kind,
            data: Cow::Owned(vec![v]),
        }
    }

    pub fn float(v: f64) -> Self {
        Value::scalar(v, Kind::Float)
    }

    pub fn int(v: usize) -> Self {
        Value::scalar(v as f64, Kind::Int)
    }

    pub fn vector(data: Vec<f64>, kind: Kind) -> Self {
        Value {
            ndim: 1,
            rows: 1,
            cols: data.len(),
            kind,
            data: Cow::Owned(data),
        }
    }

    pub fn matrix(rows: usize, cols: usize, data: Cow<'a, [f64]>, kind: Kind) -> Self {
        debug_assert_eq!(rows * cols, data.len());
        Value {
            ndim: 2,
            rows,
            cols,
            kind,
            data,
        }
    }

    fn with_shape_of(&self, data: Vec<f64>, kind: Kind) -> Value<'static> {
        Value {
            ndim: self.ndim,
            rows: self.rows,
            cols: self.cols,
            kind,
            data: Cow::Owned(data),
        }
    }

    pub fn size(&self) -> usize {
        self.data.len()
    }

    pub fn as_scalar(&self, what: &str) -> VResult<f64> {
        if self.size() == 1 && self.ndim <= 1 {
            Ok(self.data[0])
        } else {
            Err(rt(format!("{what} must be a scalar, got shape {}", self.shape_str())))
        }
    }

    pub fn truthy(&self) -> VResult<bool> {
        if self.size() != 1 {
            return Err(rt("the truth value of an array with more than one element is ambiguous"));
        }
        Ok(self.data[0] != 0.0)
    }

    pub fn shape_str(&self) -> String {
        match self.ndim {
            0 => "()".into(),
            1 => format!("({},)", self.cols),
            _ => format!("({}, {})", self.rows, self.cols),
        }
    }

    /// First axis length.
    pub fn len(&self) -> VResult<usize> {
        match self.ndim {
            0 => Err(rt("len() of unsized object")),
            1 => Ok(self.cols),
            _ => Ok(self.rows),
        }
    }

    pub fn into_owned(self) -> Value<'static> {
        Value {
            ndim: self.ndim,
            rows: self.rows,
            cols: self.cols,
            kind: self.kind,
            data: Cow::Owned(self.data.into_owned()),
        }
    }

    pub fn map(&self, kind: Kind, f: impl Fn(f64) -> f64) -> Value<'static> {
        self.with_shape_of(self.data.iter().map(|&x| f(x)).collect(), kind)
    }
}

fn bc_dim(a: usize, b: usize) -> Option<usize> {
    if a == b || b == 1 {
        Some(a)
    } else if a == 1 {
        Some(b)
    } else {
        None
    }
}

#[inline]
fn at(v: &Value<'_>, i: usize, j: usize) -> f64 {
    let r = if v.rows == 1 { 0 } else { i };
    let c = if v.cols == 1 { 0 } else { j };
    v.data[r * v.cols + c]
}

/// Elementwise combination of any number of operands under numpy rules.
pub(super) fn broadcast<F>(operands: &[&Value<'_>], kind: Kind, f: F) -> VResult<Value<'static>>
where
    F: Fn(&[f64]) -> f64,
{
    let mut ndim = 0;
    let (mut rows, mut cols) = (1, 1);
    for v in operands {
        // a vector aligns with the trailing (column) axis
        ndim = ndim.max(v.ndim);
        rows = bc_dim(rows, v.rows).ok_or_else(|| shape_error(operands))?;
        cols = bc_dim(cols, v.cols).ok_or_else(|| shape_error(operands))?;
    }
    let mut out = Vec::with_capacity(rows * cols);
    let mut args = vec![0.0; operands.len()];
    for i in 0..rows {
        for j in 0..cols {
            for (k, v) in operands.iter().enumerate() {
                args[k] = at(v, i, j);
            }
            out.push(f(&args));
        }
    }
    Ok(Value {
        ndim,
        rows,
        cols,
        kind,
        data: Cow::Owned(out),
    })
}

fn shape_error(operands: &[&Value<'_>]) -> InterpError {
    let shapes: Vec<String> = operands.iter().map(|v| v.shape_str()).collect();
    rt(format!("operands could not be broadcast together with shapes {}", shapes.join(" ")))
}

pub(super) fn numeric_kind(a: Kind, b: Kind) -> Kind {
    match (a, b) {
        (Kind::Float, _) | (_, Kind::Float) => Kind::Float,
        _ => Kind::Int,
    }
}

/// Python float semantics for `//` and `%` (result takes the divisor's sign).
pub(super) fn py_floordiv(a: f64, b: f64) -> f64 {
    (a / b).floor()
}

pub(super) fn py_mod(a: f64, b: f64) -> f64 {
    let r = a % b;
    if r != 0.0 && (r < 0.0) != (b < 0.0) {
        r + b
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(super) enum Reduce {
    Min,
    Max,
    Sum,
    Mean,
    Std,
    ArgMin,
    ArgMax,
    All,
    Any,
    Prod,
}

fn reduce_slice(op: Reduce, xs: &[f64]) -> VResult<f64> {
    if xs.is_empty() {
        return match op {
            Reduce::Sum => Ok(0.0),
            Reduce::Prod | Reduce::All => Ok(1.0),
            Reduce::Any => Ok(0.0),
            Reduce::Mean | Reduce::Std => Ok(f64::NAN),
            _ => Err(rt("zero-size array to reduction operation which has no identity")),
        };
    }
    Ok(match op {
        // numpy propagates NaN through min/max
        Reduce::Min => xs.iter().copied().fold(f64::INFINITY, |a, b| if a.is_nan() || b.is_nan() { f64::NAN } else { a.min(b) }),
        Reduce::Max => xs.iter().copied().fold(f64::NEG_INFINITY, |a, b| if a.is_nan() || b.is_nan() { f64::NAN } else { a.max(b) }),
        Reduce::Sum => xs.iter().sum(),
        Reduce::Prod => xs.iter().product(),
        Reduce::Mean => xs.iter().sum::<f64>() / xs.len() as f64,
        Reduce::Std => {
            let m = xs.iter().sum::<f64>() / xs.len() as f64;
            (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64).sqrt()
        }
        Reduce::ArgMin => arg_best(xs, |a, b| a < b) as f64,
        Reduce::ArgMax => arg_best(xs, |a, b| a > b) as f64,
        Reduce::All => xs.iter().all(|&x| x != 0.0) as u8 as f64,
        Reduce::Any => xs.iter().any(|&x| x != 0.0) as u8 as f64,
    })
}

/// First index of the extreme value; a NaN wins immediately as in numpy.
fn arg_best(xs: &[f64], better: impl Fn(f64, f64) -> bool) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x.is_nan() {
            return i;
        }
        if better(x, xs[best]) {
            best = i;
        }
    }
    best
}

pub(super) fn reduce(op: Reduce, v: &Value<'_>, axis: Option<i64>) -> VResult<Value<'static>> {
    let kind = match op {
        Reduce::ArgMin | Reduce::ArgMax => Kind::Int,
        Reduce::All | Reduce::Any => Kind::Bool,
        Reduce::Mean | Reduce::Std => Kind::Float,
        _ if v.kind == Kind::Bool => Kind::Int,
        _ => v.kind,
    };
    let axis = match axis {
        None => None,
        Some(a) => {
            let nd = v.ndim.max(1) as i64;
            let a = if a < 0 { a + nd } else { a };
            if !(0..nd).contains(&a) {
                return Err(rt(format!("axis {a} is out of bounds for array of dimension {}", v.ndim)));
            }
            Some(a)
        }
    };
    match (v.ndim, axis) {
        (2, Some(0)) => {
            let mut out = Vec::with_capacity(v.cols);
            let mut col = Vec::with_capacity(v.rows);
            for j in 0..v.cols {
                col.clear();
                col.extend((0..v.rows).map(|i| v.data[i * v.cols + j]));
                out.push(reduce_slice(op, &col)?);
            }
            Ok(Value::vector(out, kind))
        }
        (2, Some(1)) => {
            let out = (0..v.rows)
                .map(|i| reduce_slice(op, &v.data[i * v.cols..(i + 1) * v.cols]))
                .collect::<VResult<Vec<f64>>>()?;
            Ok(Value::vector(out, kind))
        }
        _ => Ok(Value::scalar(reduce_slice(op, &v.data)?, kind)),
    }
}

/// Converts an index value to a list of positions along an axis of `len`.
fn positions(idx: &Value<'_>, len: usize) -> VResult<Vec<usize>> {
    if idx.kind == Kind::Bool && idx.ndim == 1 {
        if idx.cols != len {
            return Err(rt(format!("boolean index did not match indexed array: {} vs {len}", idx.cols)));
        }
        return Ok(idx.data.iter().enumerate().filter(|(_, &b)| b != 0.0).map(|(i, _)| i).collect());
    }
    if idx.ndim > 1 {
        return Err(InterpError::Unsupported("multi-dimensional index arrays".into()));
    }
    idx.data.iter().map(|&x| position(x, len)).collect()
}

fn position(x: f64, len: usize) -> VResult<usize> {
    if x.fract() != 0.0 || !x.is_finite() {
        return Err(rt(format!("only integers are valid indices, got {x}")));
    }
    let i = x as i64;
    let j = if i < 0 { i + len as i64 } else { i };
    if j < 0 || j >= len as i64 {
        return Err(rt(format!("index {i} is out of bounds for axis with size {len}")));
    }
    Ok(j as usize)
}

fn slice_positions(start: Option<f64>, stop: Option<f64>, len: usize) -> VResult<Vec<usize>> {
    let clamp = |x: f64| -> VResult<usize> {
        if x.fract() != 0.0 {
            return Err(rt("slice indices must be integers"));
        }
        let i = x as i64;
        let j = if i < 0 { i + len as i64 } else { i };
        Ok(j.clamp(0, len as i64) as usize)
    };
    let a = start.map(clamp).transpose()?.unwrap_or(0);
    let b = stop.map(clamp).transpose()?.unwrap_or(len);
    Ok((a..b.max(a)).collect())
}

/// One resolved subscript component.
pub(super) enum Sub<'v, 'a> {
    Scalar(f64),
    Array(&'v Value<'a>),
    Slice(Option<f64>, Option<f64>),
}

enum Axis {
    /// Integer index: dimension dropped.
    Fixed(usize),
    Many(Vec<usize>),
}

fn resolve(sub: &Sub<'_, '_>, len: usize) -> VResult<Axis> {
    match sub {
        Sub::Scalar(x) => Ok(Axis::Fixed(position(*x, len)?)),
        Sub::Array(v) if v.ndim == 0 => Ok(Axis::Fixed(position(v.data[0], len)?)),
        Sub::Array(v) => Ok(Axis::Many(positions(v, len)?)),
        Sub::Slice(a, b) => Ok(Axis::Many(slice_positions(*a, *b, len)?)),
    }
}

pub(super) fn index<'a>(v: &Value<'a>, subs: &[Sub<'_, '_>]) -> VResult<Value<'static>> {
    match (v.ndim, subs.len()) {
        (0, _) => Err(rt("scalar values cannot be indexed")),
        (1, 1) => match resolve(&subs[0], v.cols)? {
            Axis::Fixed(i) => Ok(Value::scalar(v.data[i], v.kind)),
            Axis::Many(ix) => Ok(Value::vector(ix.iter().map(|&i| v.data[i]).collect(), v.kind)),
        },
        (1, _) => Err(rt("too many indices for a 1-dimensional array")),
        (2, 1) => match resolve(&subs[0], v.rows)? {
            Axis::Fixed(i) => Ok(Value::vector(v.data[i * v.cols..(i + 1) * v.cols].to_vec(), v.kind)),
            Axis::Many(ix) => {
                let mut out = Vec::with_capacity(ix.len() * v.cols);
                for &i in &ix {
                    out.extend_from_slice(&v.data[i * v.cols..(i + 1) * v.cols]);
                }
                Ok(Value::matrix(ix.len(), v.cols, Cow::Owned(out), v.kind))
            }
        },
        (2, 2) => {
            let r = resolve(&subs[0], v.rows)?;
            let c = resolve(&subs[1], v.cols)?;
            let get = |i: usize, j: usize| v.data[i * v.cols + j];
            let both_arrays = matches!(subs[0], Sub::Array(a) if a.ndim == 1) && matches!(subs[1], Sub::Array(b) if b.ndim == 1);
            match (r, c) {
                (Axis::Fixed(i), Axis::Fixed(j)) => Ok(Value::scalar(get(i, j), v.kind)),
                (Axis::Fixed(i), Axis::Many(js)) => Ok(Value::vector(js.iter().map(|&j| get(i, j)).collect(), v.kind)),
                (Axis::Many(is), Axis::Fixed(j)) => Ok(Value::vector(is.iter().map(|&i| get(i, j)).collect(), v.kind)),
                (Axis::Many(is), Axis::Many(js)) if both_arrays => {
                    // paired fancy indexing
                    if is.len() != js.len() {
                        return Err(rt("shape mismatch: indexing arrays could not be broadcast together"));
                    }
                    Ok(Value::vector(is.iter().zip(&js).map(|(&i, &j)| get(i, j)).collect(), v.kind))
                }
                (Axis::Many(is), Axis::Many(js)) => {
                    let mut out = Vec::with_capacity(is.len() * js.len());
                    for &i in &is {
                        out.extend(js.iter().map(|&j| get(i, j)));
                    }
                    Ok(Value::matrix(is.len(), js.len(), Cow::Owned(out), v.kind))
                }
            }
        }
        _ => Err(rt("too many indices for a 2-dimensional array")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vecf(xs: &[f64]) -> Value<'static> {
        Value::vector(xs.to_vec(), Kind::Float)
    }

    #[test]
    fn broadcast_rows_and_columns() {
        let m = Value::matrix(2, 3, Cow::Owned(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]), Kind::Float);
        let v = vecf(&[10.0, 20.0, 30.0]);
        let s = broadcast(&[&m, &v], Kind::Float, |a| a[0] + a[1]).unwrap();
        assert_eq!(s.ndim, 2);
        assert_eq!(&*s.data, &[11.0, 22.0, 33.0, 14.0, 25.0, 36.0]);
        assert!(broadcast(&[&m, &vecf(&[1.0, 2.0])], Kind::Float, |a| a[0]).is_err());
        let one = Value::float(2.0);
        assert_eq!(broadcast(&[&v, &one], Kind::Float, |a| a[0] * a[1]).unwrap().data.to_vec(), vec![20.0, 40.0, 60.0]);
    }

    #[test]
    fn reductions() {
        let m = Value::matrix(2, 2, Cow::Owned(vec![1.0, 4.0, 3.0, 2.0]), Kind::Float);
        assert_eq!(reduce(Reduce::Mean, &m, Some(0)).unwrap().data.to_vec(), vec![2.0, 3.0]);
        assert_eq!(reduce(Reduce::ArgMin, &m, Some(1)).unwrap().data.to_vec(), vec![0.0, 1.0]);
        assert_eq!(reduce(Reduce::Max, &m, None).unwrap().data.to_vec(), vec![4.0]);
        assert!(reduce(Reduce::Min, &vecf(&[]), None).is_err());
        // first of equal minima
        assert_eq!(reduce(Reduce::ArgMin, &vecf(&[2.0, 1.0, 1.0]), None).unwrap().data[0], 1.0);
    }

    #[test]
    fn python_mod_sign() {
        assert_eq!(py_mod(-1.0, 3.0), 2.0);
        assert_eq!(py_mod(1.0, -3.0), -2.0);
        assert_eq!(py_floordiv(-7.0, 2.0), -4.0);
    }

    #[test]
    fn indexing_modes() {
        let m = Value::matrix(3, 3, Cow::Owned((0..9).map(f64::from).collect()), Kind::Float);
        let idx = Value::vector(vec![2.0, 0.0], Kind::Int);
        let rows = index(&m, &[Sub::Array(&idx)]).unwrap();
        assert_eq!((rows.rows, rows.cols), (2, 3));
        let cols = index(&m, &[Sub::Slice(None, None), Sub::Array(&idx)]).unwrap();
        assert_eq!(cols.data.to_vec(), vec![2.0, 0.0, 5.0, 3.0, 8.0, 6.0]);
        let pair = index(&m, &[Sub::Array(&idx), Sub::Array(&idx)]).unwrap();
        assert_eq!(pair.data.to_vec(), vec![8.0, 0.0]);
        assert_eq!(index(&m, &[Sub::Scalar(1.0), Sub::Scalar(-1.0)]).unwrap().data[0], 5.0);
        let mask = Value::vector(vec![1.0, 0.0, 1.0], Kind::Bool);
        let v = vecf(&[7.0, 8.0, 9.0]);
        assert_eq!(index(&v, &[Sub::Array(&mask)]).unwrap().data.to_vec(), vec![7.0, 9.0]);
        assert!(index(&v, &[Sub::Scalar(3.0)]).is_err());
        assert!(index(&v, &[Sub::Scalar(0.5)]).is_err());
        assert_eq!(index(&v, &[Sub::Slice(Some(1.0), None)]).unwrap().data.to_vec(), vec![8.0, 9.0]);
    }
}
