//! Correlation functions and absorption spectra.
//!
//! The reported observable is the coherence trace `c(t) = Tr rho_12(t)`
//! (complex internally, its real part is what gets plotted). Under the
//! Condon approximation its Fourier transform is the electronic absorption
//! spectrum; the transform sign is fixed so that the absorption band of the reference system lands at
//! positive frequency near +0.1.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Method, ParameterTrajectory};
use crate::error::ObservablesError;
use crate::grid::GridRun;
use crate::model::TwoStateSystem;
use crate::oracle::{overlap, propagate_thawed, ThawedGaussian};

/// Which computational route produced a series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SourceChannel {
    #[serde(rename = "gaussian")]
    Gaussian,
    #[serde(rename = "grid")]
    Grid,
    #[serde(rename = "oracle")]
    Oracle,
}

impl SourceChannel {
    pub fn as_str(&self) -> &'static str {
        match self {
            SourceChannel::Gaussian => "gaussian",
            SourceChannel::Grid => "grid",
            SourceChannel::Oracle => "oracle",
        }
    }
}

/// Uniformly sampled complex coherence trace.
#[derive(Debug, Clone)]
pub struct CorrelationSeries {
    pub dt: f64,
    pub values: Vec<Complex64>,
    pub method: Method,
    pub source: SourceChannel,
}

impl CorrelationSeries {
    pub fn new(
        dt: f64,
        values: Vec<Complex64>,
        method: Method,
        source: SourceChannel,
    ) -> Result<Self, ObservablesError> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(ObservablesError::NonUniformSampling);
        }
        if values.is_empty() {
            return Err(ObservablesError::EmptySeries);
        }
        Ok(Self {
            dt,
            values,
            method,
            source,
        })
    }

    /// Trace series of a parameter trajectory (square-root branch tracked
    /// continuously along the path), decimated to every `every`-th state.
    pub fn from_trajectory(
        traj: &ParameterTrajectory,
        every: usize,
    ) -> Result<Self, ObservablesError> {
        let every = every.max(1);
        let values = traj
            .trace_series()
            .into_iter()
            .step_by(every)
            .collect::<Vec<_>>();
        Self::new(
            traj.dt * every as f64,
            values,
            traj.method,
            SourceChannel::Gaussian,
        )
    }

    /// Trace samples recorded by a grid propagation.
    pub fn from_grid_run(run: &GridRun) -> Result<Self, ObservablesError> {
        Self::new(
            run.trace_dt(),
            run.traces.clone(),
            run.method,
            SourceChannel::Grid,
        )
    }

    /// Closed-form exact-quantum series: `c(t) = <psi_2(t)|psi_1(t)>` for the
    /// ground-width packet launched at `(q0, p0)` on both surfaces. With
    /// this initialization `Tr rho_12(0) = 1` and no extra phase convention
    /// is needed: the wavepacket phases already carry the vertical energies.
    pub fn from_oracle(
        sys: &TwoStateSystem,
        q0: f64,
        p0: f64,
        dt: f64,
        nsamples: usize,
    ) -> Result<Self, ObservablesError> {
        let psi0 = ThawedGaussian::ground_at(&sys.surface1, sys.hbar, q0, p0);
        let values = (0..=nsamples)
            .map(|k| {
                let t = k as f64 * dt;
                let psi1 = propagate_thawed(&sys.surface1, &psi0, t, sys.hbar);
                let psi2 = propagate_thawed(&sys.surface2, &psi0, t, sys.hbar);
                overlap(&psi2, &psi1, sys.hbar)
            })
            .collect();
        Self::new(dt, values, Method::MoyalExact, SourceChannel::Oracle)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    /// CSV export: `(t, Re c, Im c, |c|)`, 17 significant digits.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,Re c,Im c,abs c")?;
        for (k, c) in self.values.iter().enumerate() {
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                self.time(k),
                c.re,
                c.im,
                c.norm()
            )?;
        }
        Ok(())
    }
}

/// Time-domain window applied before the transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WindowKind {
    /// No taper. Leakage-free when the record spans an integer number of
    /// recurrence periods.
    #[serde(rename = "rect")]
    Rect,
    #[serde(rename = "hann")]
    Hann,
}

impl WindowKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            WindowKind::Rect => "rect",
            WindowKind::Hann => "hann",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "rect" => Some(WindowKind::Rect),
            "hann" => Some(WindowKind::Hann),
            _ => None,
        }
    }

    fn weight(&self, n: usize, len: usize) -> f64 {
        match self {
            WindowKind::Rect => 1.0,
            WindowKind::Hann => {
                let x = n as f64 / (len - 1).max(1) as f64;
                0.5 * (1.0 - (std::f64::consts::TAU * x).cos())
            }
        }
    }
}

/// One-sided absorption spectrum
/// `sigma(omega_k) = Re sum_n c_n win_n e^(-t_n/tau) e^(-i omega_k t_n) dt`,
/// evaluated by a zero-padded FFT. `tau = None` means no damping.
#[derive(Debug, Clone)]
pub struct Spectrum {
    /// One-sided frequency grid (rad / atomic time), spacing `2 pi/(M dt)`.
    pub freqs: Vec<f64>,
    /// `Re` of the transform on the one-sided grid.
    pub intensity: Vec<f64>,
    /// Full complex transform over all `M` padded bins (kept for power
    /// accounting; the one-sided `intensity` is its leading half).
    pub amplitudes: Vec<Complex64>,
    pub window: WindowKind,
    /// Exponential damping time; `None` = no damping.
    pub tau: Option<f64>,
    pub zero_pad: usize,
    pub dt: f64,
    pub n_samples: usize,
}

impl Spectrum {
    /// Frequency bin width of the (padded) grid.
    pub fn bin_width(&self) -> f64 {
        std::f64::consts::TAU / (self.amplitudes.len() as f64 * self.dt)
    }

    /// Discrete Parseval sum `sum_k |A_k|^2 d omega / (2 pi)`, which equals
    /// `sum_n |c_n win_n damp_n|^2 dt` exactly: with `A_k = sum_n d_n
    /// e^(-2 pi i k n / M)` and `d_n = c_n win_n damp_n dt`, the DFT identity
    /// `sum_k |A_k|^2 = M sum_n |d_n|^2` divided by `M dt` gives both sides.
    pub fn total_power(&self) -> f64 {
        let m = self.amplitudes.len() as f64;
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() / (m * self.dt)
    }

    /// CSV export: `(omega, intensity)`.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "omega,intensity")?;
        for (f, s) in self.freqs.iter().zip(&self.intensity) {
            writeln!(w, "{f:.16e},{s:.16e}")?;
        }
        Ok(())
    }
}

/// Fourier-transform a correlation series.
///
/// The transform sign is `e^(-i omega t)`: with the difference frequency
/// defined as `(U_1 - U_2)/hbar` (negative for the reference system), this
/// puts the absorption band at positive frequency near +0.1.
pub fn spectrum(
    series: &CorrelationSeries,
    window: WindowKind,
    tau: Option<f64>,
    zero_pad: usize,
) -> Spectrum {
    let n = series.len();
    let zero_pad = zero_pad.max(1);
    let m = n * zero_pad;
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for (k, &c) in series.values.iter().enumerate() {
        let damp = match tau {
            Some(tau) => (-series.time(k) / tau).exp(),
            None => 1.0,
        };
        buf[k] = c * window.weight(k, n) * damp * series.dt;
    }
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);

    let half = m / 2;
    let d_omega = std::f64::consts::TAU / (m as f64 * series.dt);
    Spectrum {
        freqs: (0..=half).map(|k| k as f64 * d_omega).collect(),
        intensity: buf[..=half].iter().map(|a| a.re).collect(),
        amplitudes: buf,
        window,
        tau,
        zero_pad,
        dt: series.dt,
        n_samples: n,
    }
}

/// A refined spectral line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub omega: f64,
    pub height: f64,
}

/// Local maxima above `floor * max(intensity)`, centers refined by 3-point
/// parabolic interpolation, sorted by frequency. Empty when nothing clears
/// the floor.
pub fn find_peaks(sp: &Spectrum, floor: f64) -> Result<Vec<Peak>, ObservablesError> {
    if !(floor > 0.0 && floor < 1.0) {
        return Err(ObservablesError::InvalidFloor { floor });
    }
    let max = sp.intensity.iter().cloned().fold(f64::MIN, f64::max);
    if max <= 0.0 || max.is_nan() {
        return Ok(Vec::new());
    }
    let threshold = floor * max;
    let mut peaks = Vec::new();
    for k in 1..sp.intensity.len() - 1 {
        let (y0, y1, y2) = (sp.intensity[k - 1], sp.intensity[k], sp.intensity[k + 1]);
        if y1 >= threshold && y1 >= y0 && y1 > y2 {
            // parabola through the three samples; vertex offset in bins
            let denom = y0 - 2.0 * y1 + y2;
            let delta = if denom.abs() > 1e-300 {
                (0.5 * (y0 - y2) / denom).clamp(-1.0, 1.0)
            } else {
                0.0
            };
            peaks.push(Peak {
                omega: sp.freqs[k] + delta * sp.bin_width(),
                height: y1 - 0.25 * (y0 - y2) * delta,
            });
        }
    }
    Ok(peaks)
}

/// Mean and maximum deviation of consecutive peak spacings.
pub fn peak_spacing(peaks: &[Peak]) -> Result<(f64, f64), ObservablesError> {
    if peaks.len() < 3 {
        return Err(ObservablesError::TooFewPeaks { count: peaks.len() });
    }
    let spacings: Vec<f64> = peaks.windows(2).map(|w| w[1].omega - w[0].omega).collect();
    let mean = spacings.iter().sum::<f64>() / spacings.len() as f64;
    let spread = spacings
        .iter()
        .map(|s| (s - mean).abs())
        .fold(0.0, f64::max);
    Ok((mean, spread))
}
