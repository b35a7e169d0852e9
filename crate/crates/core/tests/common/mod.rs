//! Published waveform tables shared by the integration targets.
#![allow(dead_code)]

use pulsediv::metrics::GateFamily;
use pulsediv::waveform::{EnvelopeSpec, ModulationSpec, WaveformSpec};
use pulsediv::WaveformSpec64;

/// Fractions in table order. The row printed as 1/5 runs at tg_full / 6.
pub const FRACTIONS: [f64; 7] = [1.0, 0.75, 0.5, 0.25, 1.0 / 6.0, 0.125, 1.0 / 12.0];
pub const LABELS: [&str; 7] = ["1", "3/4", "1/2", "1/4", "1/6", "1/8", "1/12"];

/// `(A, f, gamma, error x 1e5)`; `gamma` is ignored for cosine rows.
pub type Row = (f64, f64, f64, f64);

pub struct Block {
    pub gate: GateFamily,
    pub tanh: bool,
    pub alpha: f64,
    pub tg_full: f64,
    pub rows: [Row; 7],
}

impl Block {
    pub fn name(&self) -> String {
        format!("{} {} a={}", self.gate.name(), if self.tanh { "tanh" } else { "cos" }, self.alpha)
    }

    pub fn waveform(&self, i: usize) -> WaveformSpec64 {
        let (a, f, g, _) = self.rows[i];
        let tg = self.tg_full * FRACTIONS[i];
        let env = if self.tanh { EnvelopeSpec::tanh(a, g, tg) } else { EnvelopeSpec::cosine(a, tg) };
        WaveformSpec::new(env, ModulationSpec::new(self.alpha, f))
    }

    pub fn theta(&self, i: usize) -> f64 {
        std::f64::consts::PI * FRACTIONS[i]
    }

    pub fn quoted_error(&self, i: usize) -> f64 {
        self.rows[i].3 * 1e-5
    }
}

pub fn iswap_table() -> [Block; 4] {
    let g = GateFamily::Iswap;
    [
        Block {
            gate: g,
            tanh: false,
            alpha: 2.0,
            tg_full: 36.0,
            rows: [
                (13.91, -515.31, 0.0, 0.51),
                (13.91, -524.11, 0.0, 0.23),
                (13.87, -529.38, 0.0, 0.20),
                (13.84, -528.47, 0.0, 1.10),
                (13.77, -642.43, 0.0, 8.99),
                (13.04, -571.80, 0.0, 20.46),
                (10.25, -784.42, 0.0, 97.44),
            ],
        },
        Block {
            gate: g,
            tanh: false,
            alpha: 1.0,
            tg_full: 36.0,
            rows: [
                (13.89, -377.61, 0.0, 5.93),
                (13.86, -374.14, 0.0, 0.44),
                (13.85, -410.17, 0.0, 14.67),
                (13.74, -528.06, 0.0, 17.98),
                (13.66, -644.62, 0.0, 16.67),
                (13.38, -548.56, 0.0, 8.46),
                (40.00, -183.81, 0.0, 113.59),
            ],
        },
        Block {
            gate: g,
            tanh: true,
            alpha: 2.0,
            tg_full: 36.0,
            rows: [
                (8.82, -523.28, 9.37, 0.36),
                (10.17, -525.38, 6.32, 0.45),
                (10.59, -525.40, 5.74, 0.56),
                (9.94, -591.50, 6.40, 1.74),
                (14.92, -576.66, 3.62, 0.58),
                (9.58, -593.94, 9.06, 0.51),
                (6.94, -684.12, 15.00, 4.60),
            ],
        },
        Block {
            gate: g,
            tanh: true,
            alpha: 1.0,
            tg_full: 36.0,
            rows: [
                (8.83, -369.09, 9.35, 0.49),
                (8.06, -384.34, 13.99, 4.67),
                (8.16, -363.04, 12.67, 1.63),
                (10.23, -458.40, 6.11, 7.09),
                (14.85, -565.25, 3.63, 7.58),
                (9.50, -603.31, 7.79, 3.87),
                (40.00, -167.78, 6.87, 1.11),
            ],
        },
    ]
}

pub fn xx_table() -> [Block; 4] {
    let g = GateFamily::Xx;
    [
        Block {
            gate: g,
            tanh: false,
            alpha: 2.0,
            tg_full: 24.0,
            rows: [
                (10.42, -854.11, 0.0, 7.11),
                (10.42, -861.22, 0.0, 4.42),
                (10.41, -850.74, 0.0, 2.88),
                (10.32, -955.75, 0.0, 11.16),
                (8.33, 0.00, 0.0, 172.07),
                (6.27, 0.00, 0.0, 191.99),
                (5.00, -9.06, 0.0, 123.77),
            ],
        },
        Block {
            gate: g,
            tanh: false,
            alpha: 1.0,
            tg_full: 24.0,
            rows: [
                (10.42, -698.30, 0.0, 20.21),
                (10.41, -717.74, 0.0, 16.50),
                (10.39, -768.57, 0.0, 11.88),
                (10.31, -961.83, 0.0, 14.13),
                (8.30, -923.54, 0.0, 171.03),
                (40.00, -171.60, 0.0, 133.28),
                (40.00, -251.10, 0.0, 83.48),
            ],
        },
        Block {
            gate: g,
            tanh: true,
            alpha: 2.0,
            tg_full: 24.0,
            rows: [
                (7.66, -851.68, 6.25, 5.20),
                (10.08, -870.65, 4.11, 4.03),
                (6.62, -898.74, 9.29, 4.33),
                (12.52, -901.87, 3.34, 1.92),
                (6.34, -892.32, 13.41, 2.38),
                (5.18, 0.00, 15.00, 66.43),
                (5.00, -20.70, 15.00, 93.95),
            ],
        },
        Block {
            gate: g,
            tanh: true,
            alpha: 1.0,
            tg_full: 24.0,
            rows: [
                (8.28, -715.89, 5.38, 20.31),
                (8.12, -752.41, 5.56, 16.74),
                (6.56, -801.57, 9.52, 9.59),
                (12.98, -909.24, 3.24, 5.21),
                (6.24, -903.65, 13.65, 2.29),
                (5.18, 0.00, 15.00, 66.43),
                (18.28, -250.01, 8.09, 79.21),
            ],
        },
    ]
}
