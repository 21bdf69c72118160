use super::{OpticsError, SystemGeometry};

/// Which LEDs of the array participate in a measurement sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LedSelection {
    /// Explicit `(row, col)` pairs, kept in the given order.
    Explicit(Vec<(usize, usize)>),
    /// The `count` LEDs closest to the array center, ranked by physical
    /// radius with row-major tie-breaking.
    CenteredCount(usize),
}

/// One illumination: LED index, its plane-wave spatial frequency, and the
/// integer pixel offset of the spectrum crop window relative to DC.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanEntry {
    pub led: (usize, usize),
    /// (row-axis, col-axis) spatial frequency in rad/m.
    pub k: (f64, f64),
    /// (row, col) crop offset in spectrum pixels.
    pub offset: (i64, i64),
}

/// Ordered illumination sequence; `J = plan.len()` measurement components.
#[derive(Debug, Clone, PartialEq)]
pub struct IlluminationPlan {
    pub entries: Vec<PlanEntry>,
}

impl IlluminationPlan {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// 64-bit FNV-1a over the little-endian serialization of the entries.
    /// Ties a measurement stack to the plan that produced it.
    pub fn digest(&self) -> u64 {
        const OFFSET_BASIS: u64 = 0xcbf2_9ce4_8422_2325;
        const PRIME: u64 = 0x0000_0100_0000_01b3;
        let mut hash = OFFSET_BASIS;
        let mut absorb = |bytes: &[u8]| {
            for &b in bytes {
                hash ^= u64::from(b);
                hash = hash.wrapping_mul(PRIME);
            }
        };
        for e in &self.entries {
            absorb(&(e.led.0 as u32).to_le_bytes());
            absorb(&(e.led.1 as u32).to_le_bytes());
            absorb(&e.k.0.to_le_bytes());
            absorb(&e.k.1.to_le_bytes());
            absorb(&e.offset.0.to_le_bytes());
            absorb(&e.offset.1.to_le_bytes());
        }
        hash
    }
}

/// Builds the illumination plan for `selection` under `geometry`.
///
/// For an LED at physical offset `(a, b)` from the axis the illumination
/// plane wave carries `k = -(2 pi / lambda) * (a, b) / sqrt(d^2 + a^2 + b^2)`,
/// quantized to the nearest integer spectrum pixel.
pub fn plan_illumination(
    geometry: &SystemGeometry,
    selection: &LedSelection,
) -> Result<IlluminationPlan, OpticsError> {
    let leds = resolve_selection(geometry, selection)?;
    let (dk_r, dk_c) = geometry.object.k_spacing();
    let (n1, n2) = geometry.object.shape();
    let (m1, m2) = geometry.camera.shape();
    let two_pi = std::f64::consts::TAU;

    let mut entries = Vec::with_capacity(leds.len());
    for (row, col) in leds {
        let (a, b) = geometry.led_offset_m(row, col);
        let denom = (geometry.led_distance * geometry.led_distance + a * a + b * b).sqrt();
        let k = (
            -two_pi / geometry.wavelength * a / denom,
            -two_pi / geometry.wavelength * b / denom,
        );
        let offset = ((k.0 / dk_r).round() as i64, (k.1 / dk_c).round() as i64);

        let r0 = n1 as i64 / 2 - m1 as i64 / 2 + offset.0;
        let c0 = n2 as i64 / 2 - m2 as i64 / 2 + offset.1;
        let fits = r0 >= 0 && r0 + m1 as i64 <= n1 as i64 && c0 >= 0 && c0 + m2 as i64 <= n2 as i64;
        if !fits {
            return Err(OpticsError::CropOutOfBounds {
                row,
                col,
                off_r: offset.0,
                off_c: offset.1,
                n1,
                n2,
                m1,
                m2,
            });
        }
        entries.push(PlanEntry { led: (row, col), k, offset });
    }
    Ok(IlluminationPlan { entries })
}

fn resolve_selection(
    geometry: &SystemGeometry,
    selection: &LedSelection,
) -> Result<Vec<(usize, usize)>, OpticsError> {
    let total = geometry.led_rows * geometry.led_cols;
    match selection {
        LedSelection::Explicit(list) => {
            if list.is_empty() {
                return Err(OpticsError::InvalidGeometry("empty LED selection".into()));
            }
            let mut seen = std::collections::BTreeSet::new();
            for &(r, c) in list {
                if r >= geometry.led_rows || c >= geometry.led_cols || !seen.insert((r, c)) {
                    return Err(OpticsError::BadLed(r, c));
                }
            }
            Ok(list.clone())
        }
        LedSelection::CenteredCount(count) => {
            if *count == 0 {
                return Err(OpticsError::InvalidGeometry("empty LED selection".into()));
            }
            if *count > total {
                return Err(OpticsError::SelectionTooLarge {
                    requested: *count,
                    available: total,
                });
            }
            let cr = (geometry.led_rows as f64 - 1.0) / 2.0;
            let cc = (geometry.led_cols as f64 - 1.0) / 2.0;
            let mut ranked: Vec<(f64, usize, usize)> = (0..geometry.led_rows)
                .flat_map(|r| (0..geometry.led_cols).map(move |c| (r, c)))
                .map(|(r, c)| {
                    let dr = r as f64 - cr;
                    let dc = c as f64 - cc;
                    (dr * dr + dc * dc, r, c)
                })
                .collect();
            ranked.sort_by(|x, y| {
                x.0.partial_cmp(&y.0)
                    .expect("finite radii")
                    .then(x.1.cmp(&y.1))
                    .then(x.2.cmp(&y.2))
            });
            Ok(ranked.into_iter().take(*count).map(|(_, r, c)| (r, c)).collect())
        }
    }
}
