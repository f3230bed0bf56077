use num_complex::Complex64;

/// A timestamped run of complex baseband samples.
///
/// `start_time_s` is the capture time of the first sample; impairments and
/// slicing operations preserve the metadata of their input.
#[derive(Debug, Clone, PartialEq)]
pub struct IqSegment {
    pub samples: Vec<Complex64>,
    pub sample_rate_hz: f64,
    pub center_freq_hz: f64,
    pub start_time_s: f64,
}

impl IqSegment {
    pub fn new(samples: Vec<Complex64>, sample_rate_hz: f64) -> Self {
        IqSegment {
            samples,
            sample_rate_hz,
            center_freq_hz: 0.0,
            start_time_s: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }

    /// Replaces the sample buffer, keeping rate/frequency/time metadata.
    pub fn with_samples(&self, samples: Vec<Complex64>) -> Self {
        IqSegment {
            samples,
            ..*self
        }
    }

    /// Mean power over all samples.
    pub fn mean_power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }

    /// Mean power over strictly nonzero samples.
    ///
    /// Synthesized frames contain exactly-zero guard regions and unused
    /// symbols; those are excluded so that power (and therefore SNR)
    /// refers to the transmitted portion of the signal.
    pub fn mean_power_nonzero(&self) -> f64 {
        let mut acc = 0.0;
        let mut n = 0usize;
        for s in &self.samples {
            let p = s.norm_sqr();
            if p > 0.0 {
                acc += p;
                n += 1;
            }
        }
        if n == 0 {
            0.0
        } else {
            acc / n as f64
        }
    }
}
