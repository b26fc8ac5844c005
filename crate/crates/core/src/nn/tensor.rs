use crate::error::{Error, Result};

/// Dense `channels × length` feature map stored row-major, one row per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor2 {
    channels: usize,
    length: usize,
    data: Vec<f64>,
}

impl Tensor2 {
    pub fn new(channels: usize, length: usize, data: Vec<f64>) -> Result<Self> {
        if channels == 0 || length == 0 {
            return Err(Error::config(format!(
                "tensor dimensions must be positive, got {channels}x{length}"
            )));
        }
        if data.len() != channels * length {
            return Err(Error::config(format!(
                "tensor {channels}x{length} needs {} values, got {}",
                channels * length,
                data.len()
            )));
        }
        Ok(Self {
            channels,
            length,
            data,
        })
    }

    pub fn zeros(channels: usize, length: usize) -> Self {
        Self {
            channels,
            length,
            data: vec![0.0; channels * length],
        }
    }

    /// Single-channel tensor holding `values` as its only row.
    pub fn from_row(values: Vec<f64>) -> Result<Self> {
        let len = values.len();
        Self::new(1, len, values)
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn length(&self) -> usize {
        self.length
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, channel: usize, pos: usize) -> f64 {
        self.data[channel * self.length + pos]
    }

    #[inline]
    pub fn row(&self, channel: usize) -> &[f64] {
        &self.data[channel * self.length..(channel + 1) * self.length]
    }

    #[inline]
    pub fn row_mut(&mut self, channel: usize) -> &mut [f64] {
        let len = self.length;
        &mut self.data[channel * len..(channel + 1) * len]
    }

    pub fn same_shape(&self, other: &Tensor2) -> bool {
        self.channels == other.channels && self.length == other.length
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}
