use crate::error::{Error, Result};
use crate::joint::{vars, Axis, JointPmf};
use crate::pmf::{Pmf, StochasticMatrix};
use crate::scalar::Real;

/// Symbol labels of the four observable alphabets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabets {
    pub x: Vec<String>,
    pub x_tilde: Vec<String>,
    pub y: Vec<String>,
    pub z: Vec<String>,
}

impl Alphabets {
    /// Labels `0..size` on every alphabet.
    pub fn numeric(x: usize, x_tilde: usize, y: usize, z: usize) -> Self {
        let labels = |n: usize| (0..n).map(|i| i.to_string()).collect();
        Self {
            x: labels(x),
            x_tilde: labels(x_tilde),
            y: labels(y),
            z: labels(z),
        }
    }
}

/// Remote source `X ~ px`, encoder measurement `X̃` through `meas_enc`, and the
/// decoder/eavesdropper pair `(Y, Z)` through `meas_dec_eve`, whose output
/// index is `y * |Z| + z`.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceModel<F> {
    px: Pmf<F>,
    meas_enc: StochasticMatrix<F>,
    meas_dec_eve: StochasticMatrix<F>,
    alphabets: Alphabets,
}

impl<F: Real> SourceModel<F> {
    pub fn new(
        px: Pmf<F>,
        meas_enc: StochasticMatrix<F>,
        meas_dec_eve: StochasticMatrix<F>,
        alphabets: Alphabets,
    ) -> Result<Self> {
        let nx = alphabets.x.len();
        if px.len() != nx {
            return Err(Error::Dimension(format!(
                "P_X has {} entries but |X| = {nx}",
                px.len()
            )));
        }
        if meas_enc.inputs() != nx || meas_enc.outputs() != alphabets.x_tilde.len() {
            return Err(Error::Dimension(format!(
                "P_X~|X is {}x{}, expected {nx}x{}",
                meas_enc.inputs(),
                meas_enc.outputs(),
                alphabets.x_tilde.len()
            )));
        }
        let nyz = alphabets.y.len() * alphabets.z.len();
        if meas_dec_eve.inputs() != nx || meas_dec_eve.outputs() != nyz {
            return Err(Error::Dimension(format!(
                "P_YZ|X is {}x{}, expected {nx}x{nyz}",
                meas_dec_eve.inputs(),
                meas_dec_eve.outputs()
            )));
        }
        Ok(Self {
            px,
            meas_enc,
            meas_dec_eve,
            alphabets,
        })
    }

    /// Builds `P_YZ|X` from two conditionally independent channels.
    pub fn with_independent_channels(
        px: Pmf<F>,
        meas_enc: StochasticMatrix<F>,
        p_y_given_x: &StochasticMatrix<F>,
        p_z_given_x: &StochasticMatrix<F>,
    ) -> Result<Self> {
        let nx = px.len();
        if p_y_given_x.inputs() != nx || p_z_given_x.inputs() != nx {
            return Err(Error::Dimension(
                "decoder and eavesdropper channels need |X| inputs".into(),
            ));
        }
        let (ny, nz) = (p_y_given_x.outputs(), p_z_given_x.outputs());
        let mut data = Vec::with_capacity(nx * ny * nz);
        for x in 0..nx {
            for y in 0..ny {
                for z in 0..nz {
                    data.push(p_y_given_x.get(x, y) * p_z_given_x.get(x, z));
                }
            }
        }
        let dec_eve = StochasticMatrix::from_flat(nx, ny * nz, data)?;
        let alphabets = Alphabets::numeric(nx, meas_enc.outputs(), ny, nz);
        Self::new(px, meas_enc, dec_eve, alphabets)
    }

    pub fn px(&self) -> &Pmf<F> {
        &self.px
    }

    pub fn meas_enc(&self) -> &StochasticMatrix<F> {
        &self.meas_enc
    }

    pub fn meas_dec_eve(&self) -> &StochasticMatrix<F> {
        &self.meas_dec_eve
    }

    pub fn alphabets(&self) -> &Alphabets {
        &self.alphabets
    }

    pub fn x_size(&self) -> usize {
        self.alphabets.x.len()
    }

    pub fn x_tilde_size(&self) -> usize {
        self.alphabets.x_tilde.len()
    }

    pub fn y_size(&self) -> usize {
        self.alphabets.y.len()
    }

    pub fn z_size(&self) -> usize {
        self.alphabets.z.len()
    }

    /// Decoder channel `P_Y|X` (marginal of `P_YZ|X`).
    pub fn p_y_given_x(&self) -> StochasticMatrix<F> {
        let (ny, nz) = (self.y_size(), self.z_size());
        let data = (0..self.x_size())
            .flat_map(|x| {
                (0..ny).map(move |y| (0..nz).map(|z| self.meas_dec_eve.get(x, y * nz + z)).sum())
            })
            .collect();
        StochasticMatrix::from_flat(self.x_size(), ny, data).expect("marginal of a valid channel")
    }

    /// Eavesdropper channel `P_Z|X`.
    pub fn p_z_given_x(&self) -> StochasticMatrix<F> {
        let (ny, nz) = (self.y_size(), self.z_size());
        let data = (0..self.x_size())
            .flat_map(|x| {
                (0..nz).map(move |z| (0..ny).map(|y| self.meas_dec_eve.get(x, y * nz + z)).sum())
            })
            .collect();
        StochasticMatrix::from_flat(self.x_size(), nz, data).expect("marginal of a valid channel")
    }
}

/// `P(x̃, x, y, z) = P_X(x) P(x̃|x) P(y, z|x)` over axes `(Xt, X, Y, Z)`.
pub fn build_joint<F: Real>(model: &SourceModel<F>) -> Result<JointPmf<F>> {
    let (nt, nx, ny, nz) = (
        model.x_tilde_size(),
        model.x_size(),
        model.y_size(),
        model.z_size(),
    );
    let mut table = Vec::with_capacity(nt * nx * ny * nz);
    for t in 0..nt {
        for x in 0..nx {
            let pxt = model.px.get(x) * model.meas_enc.get(x, t);
            for yz in 0..ny * nz {
                table.push(pxt * model.meas_dec_eve.get(x, yz));
            }
        }
    }
    JointPmf::new(
        vec![
            Axis::new(vars::XT, nt),
            Axis::new(vars::X, nx),
            Axis::new(vars::Y, ny),
            Axis::new(vars::Z, nz),
        ],
        table,
    )
}
