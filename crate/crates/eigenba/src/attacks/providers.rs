//! One direction strategy per attack method.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::linalg::{truncated_svd, Tensor};
use crate::net::LayeredModel;

use super::dct::{dct_basis_image, low_frequency_band};
use super::{AttackError, DirectionProvider};

/// EigenBA's strategy: the right singular vectors of the surrogate's
/// input-to-representation Jacobian, recomputed at the current input once
/// per round.
///
/// Each round emits one band of `band_width` vectors. A round in which
/// nothing was accepted falls back to the next band down the spectrum
/// (vectors `k..2k`, then `2k..3k`, ...), wrapping back to the top band once
/// the spectrum is exhausted; any accepted step resets to the top band,
/// since the Jacobian at the new input is fresh territory.
pub struct EigenProvider<'a> {
    surrogate: &'a LayeredModel,
    band_width: usize,
    stalled_rounds: usize,
}

impl<'a> EigenProvider<'a> {
    /// A provider reading directions from `surrogate`, `band_width` (the
    /// attack's `k`) vectors per round.
    pub fn new(surrogate: &'a LayeredModel, band_width: usize) -> Self {
        Self {
            surrogate,
            band_width,
            stalled_rounds: 0,
        }
    }
}

impl DirectionProvider for EigenProvider<'_> {
    fn next_directions(
        &mut self,
        current: &Tensor,
        _rng: &mut ChaCha8Rng,
    ) -> Result<Vec<Tensor>, AttackError> {
        let jacobian = self.surrogate.jacobian_h(current)?;
        let (m, n) = (jacobian.rows(), jacobian.cols());
        if self.band_width > m {
            return Err(AttackError::InvalidConfig(format!(
                "k = {} exceeds the surrogate's representation width {m}",
                self.band_width
            )));
        }
        let spectrum = m.min(n);
        let mut offset = self.stalled_rounds * self.band_width;
        if offset >= spectrum {
            // Every band was tried without progress; start over at the top.
            self.stalled_rounds = 0;
            offset = 0;
        }
        let retain = (offset + self.band_width).min(spectrum);
        let svd = truncated_svd(&jacobian, retain)?;
        (offset..retain)
            .map(|i| svd.right_vector(i).map_err(AttackError::from))
            .collect()
    }

    fn round_feedback(&mut self, accepted: usize) {
        if accepted > 0 {
            self.stalled_rounds = 0;
        } else {
            self.stalled_rounds += 1;
        }
    }
}

/// SimBA's strategy: the coordinate basis in a fresh random order each pass.
pub struct CartesianProvider;

impl DirectionProvider for CartesianProvider {
    fn next_directions(
        &mut self,
        current: &Tensor,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<Tensor>, AttackError> {
        let n = current.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        Ok(order
            .into_iter()
            .map(|i| {
                let mut direction = Tensor::zeros(&[n]);
                direction[i] = 1.0;
                direction
            })
            .collect())
    }
}

/// SimBA-DCT's strategy: a low-frequency band of the orthonormal 2D DCT
/// basis, walked shell by shell (lowest frequencies first) with random order
/// inside each shell, one pass per round.
pub struct DctProvider {
    fraction: f64,
    image_shape: Option<(usize, usize)>,
}

impl DctProvider {
    /// Keeps the lowest `fraction` of frequencies per axis. `image_shape`
    /// fixes the geometry for flat inputs; rank-2 and rank-3 inputs carry
    /// their own. Flat inputs of square length fall back to the square grid.
    pub fn new(fraction: f64, image_shape: Option<(usize, usize)>) -> Result<Self, AttackError> {
        if !(fraction.is_finite() && 0.0 < fraction && fraction <= 1.0) {
            return Err(AttackError::InvalidConfig(format!(
                "DCT band fraction must lie in (0, 1], got {fraction}"
            )));
        }
        if let Some((h, w)) = image_shape {
            if h == 0 || w == 0 {
                return Err(AttackError::InvalidConfig(
                    "DCT image shape must have positive extents".to_string(),
                ));
            }
        }
        Ok(Self {
            fraction,
            image_shape,
        })
    }

    /// Resolves `(channels, height, width)` for an input.
    fn geometry(&self, input: &Tensor) -> Result<(usize, usize, usize), AttackError> {
        match input.shape() {
            &[n] => {
                if let Some((h, w)) = self.image_shape {
                    if h * w == 0 || n % (h * w) != 0 {
                        return Err(AttackError::InvalidConfig(format!(
                            "image shape {h}x{w} does not divide input length {n}"
                        )));
                    }
                    Ok((n / (h * w), h, w))
                } else {
                    let side = (n as f64).sqrt().round() as usize;
                    if side * side == n {
                        Ok((1, side, side))
                    } else {
                        Err(AttackError::InvalidConfig(format!(
                            "flat input of length {n} is not square; \
                             an explicit DCT image shape is required"
                        )))
                    }
                }
            }
            &[h, w] => Ok((1, h, w)),
            &[c, h, w] => Ok((c, h, w)),
            other => Err(AttackError::InvalidConfig(format!(
                "DCT directions need a vector or image input, got shape {other:?}"
            ))),
        }
    }
}

impl DirectionProvider for DctProvider {
    fn next_directions(
        &mut self,
        current: &Tensor,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<Tensor>, AttackError> {
        let (channels, height, width) = self.geometry(current)?;
        let band = low_frequency_band(height, width, self.fraction);

        // Expand the band across channels, keeping the shell structure:
        // everything in shell s (over all channels) precedes shell s + 1,
        // and the order inside a shell is random.
        let mut entries: Vec<(usize, usize, usize)> = Vec::with_capacity(band.len() * channels);
        let mut shell_start = 0;
        while shell_start < band.len() {
            let shell = band[shell_start].0 + band[shell_start].1;
            let mut shell_end = shell_start;
            while shell_end < band.len() && band[shell_end].0 + band[shell_end].1 == shell {
                shell_end += 1;
            }
            let mut group: Vec<(usize, usize, usize)> = band[shell_start..shell_end]
                .iter()
                .flat_map(|&(u, v)| (0..channels).map(move |c| (c, u, v)))
                .collect();
            group.shuffle(rng);
            entries.extend(group);
            shell_start = shell_end;
        }

        let plane = height * width;
        Ok(entries
            .into_iter()
            .map(|(c, u, v)| {
                let basis = dct_basis_image(height, width, u, v);
                let mut data = vec![0.0; channels * plane];
                data[c * plane..(c + 1) * plane].copy_from_slice(basis.data());
                Tensor::from_parts(vec![channels * plane], data)
            })
            .collect())
    }
}

/// Trans-FGM's strategy: the unit-normalised input gradient of one uniformly
/// drawn representation coordinate of the surrogate, one direction per round.
pub struct TransFgmProvider<'a> {
    surrogate: &'a LayeredModel,
}

impl<'a> TransFgmProvider<'a> {
    /// A provider reading gradients from `surrogate`.
    pub fn new(surrogate: &'a LayeredModel) -> Self {
        Self { surrogate }
    }
}

impl DirectionProvider for TransFgmProvider<'_> {
    fn next_directions(
        &mut self,
        current: &Tensor,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<Tensor>, AttackError> {
        let row = random_representation_gradient(self.surrogate, current, rng)?;
        // Zero gradients stay zero rather than dividing by nothing; the
        // resulting probe is a no-op pair the loop simply rejects.
        Ok(vec![row.unit().unwrap_or_else(|| Tensor::zeros(row.shape()))])
    }
}

/// Trans-FGSM's strategy: like Trans-FGM but taking the sign of the gradient
/// instead of normalising it.
pub struct TransFgsmProvider<'a> {
    surrogate: &'a LayeredModel,
}

impl<'a> TransFgsmProvider<'a> {
    /// A provider reading gradient signs from `surrogate`.
    pub fn new(surrogate: &'a LayeredModel) -> Self {
        Self { surrogate }
    }
}

impl DirectionProvider for TransFgsmProvider<'_> {
    fn next_directions(
        &mut self,
        current: &Tensor,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<Tensor>, AttackError> {
        let row = random_representation_gradient(self.surrogate, current, rng)?;
        Ok(vec![row.sign()])
    }
}

/// Input gradient of a uniformly drawn representation coordinate.
fn random_representation_gradient(
    surrogate: &LayeredModel,
    current: &Tensor,
    rng: &mut ChaCha8Rng,
) -> Result<Tensor, AttackError> {
    let m = surrogate.representation_dim(current)?;
    let coordinate = rng.random_range(0..m);
    Ok(surrogate.jacobian_h_row(current, coordinate)?)
}
