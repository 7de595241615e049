use crate::nn::NnError;

/// Dense row-major array of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        Self { shape: shape.to_vec(), data: vec![0.0; shape.iter().product()] }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Self, NnError> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(NnError::Shape(format!("shape {shape:?} needs {expected} values, got {}", data.len())));
        }
        Ok(Self { shape: shape.to_vec(), data })
    }

    /// Stacks equally sized samples into a `[n, ...sample_shape]` batch.
    pub fn stack<'a, I>(sample_shape: &[usize], samples: I) -> Result<Self, NnError>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let per: usize = sample_shape.iter().product();
        let mut data = Vec::new();
        let mut n = 0;
        for s in samples {
            if s.len() != per {
                return Err(NnError::Shape(format!("sample of {} values, expected {per}", s.len())));
            }
            data.extend_from_slice(s);
            n += 1;
        }
        let mut shape = vec![n];
        shape.extend_from_slice(sample_shape);
        Ok(Self { shape, data })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Leading dimension.
    pub fn batch(&self) -> usize {
        self.shape.first().copied().unwrap_or(0)
    }

    /// Row `i` of the leading dimension.
    pub fn row(&self, i: usize) -> &[f64] {
        let per = self.data.len() / self.batch().max(1);
        &self.data[i * per..(i + 1) * per]
    }

    pub fn reshape(mut self, shape: &[usize]) -> Result<Self, NnError> {
        if shape.iter().product::<usize>() != self.data.len() {
            return Err(NnError::Shape(format!("cannot reshape {:?} into {shape:?}", self.shape)));
        }
        self.shape = shape.to_vec();
        Ok(self)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }

    pub fn add_scaled(&mut self, other: &Tensor, s: f64) {
        debug_assert_eq!(self.shape, other.shape);
        self.data.iter_mut().zip(&other.data).for_each(|(a, b)| *a += s * b);
    }

    pub fn sum_squares(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }
}
