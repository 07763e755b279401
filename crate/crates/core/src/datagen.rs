//! Simulated demand models, dataset CSV I/O and real-data ingestion.

use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Dataset, Interval, NewsvendorParams, Sample, Scaling};

pub const FEATURE_DIM: usize = 4;

/// Ground-truth demand laws of the simulation study.
///
/// Both are location families in the price: at fixed features,
/// `D = max(0, μ(p, z) + e)` with a noise `e` whose law does not depend on `p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum DemandModel {
    /// `max{0, 60 − p + 12·aᵀ(z + φ_scale·φ) + θ_scale·(bᵀz)·θ}`
    Complex {
        a: Vec<f64>,
        b: Vec<f64>,
        phi_scale: f64,
        theta_scale: f64,
    },
    /// `max{0, intercept + price_slope·p + slopesᵀz + noise_std·φ}`
    Linear {
        intercept: f64,
        price_slope: f64,
        feature_slopes: Vec<f64>,
        noise_std: f64,
    },
}

impl DemandModel {
    pub fn complex() -> Self {
        DemandModel::Complex {
            a: vec![8.0, 1.0, 1.0, 1.0],
            b: vec![-1.0, 1.0, 0.0, 0.0],
            phi_scale: 0.25,
            theta_scale: 5.0,
        }
    }

    pub fn linear() -> Self {
        DemandModel::Linear {
            intercept: 60.0,
            price_slope: -1.0,
            feature_slopes: vec![1.0; FEATURE_DIM],
            noise_std: 1.0,
        }
    }

    /// The same model with every random term switched off.
    pub fn noiseless(&self) -> Self {
        let mut m = self.clone();
        match &mut m {
            DemandModel::Complex {
                phi_scale, theta_scale, ..
            } => {
                *phi_scale = 0.0;
                *theta_scale = 0.0;
            }
            DemandModel::Linear { noise_std, .. } => *noise_std = 0.0,
        }
        m
    }

    pub fn name(&self) -> &'static str {
        match self {
            DemandModel::Complex { .. } => "complex",
            DemandModel::Linear { .. } => "linear",
        }
    }

    /// Economics for experiments on this model.
    ///
    /// The complex model's demand stays positive well past `p = 40`, so its
    /// price box extends to 100 to keep the profit-maximizing price interior.
    pub fn default_params(&self) -> NewsvendorParams {
        match self {
            DemandModel::Complex { .. } => NewsvendorParams::simulation(100.0),
            DemandModel::Linear { .. } => NewsvendorParams::simulation(40.0),
        }
    }

    /// Historical price policy for experiments on this model.
    ///
    /// Complex-model prices run 30% past the top of the decision box so that
    /// weights queried at `p_hi` see neighbours on both sides.
    pub fn default_policy(&self) -> PricePolicy {
        let box_ = self.default_params().p_bounds;
        match self {
            DemandModel::Complex { .. } => PricePolicy::Uniform {
                lo: box_.lo,
                hi: 1.3 * box_.hi,
            },
            DemandModel::Linear { .. } => PricePolicy::uniform(box_),
        }
    }

    pub fn feature_dim(&self) -> usize {
        match self {
            DemandModel::Complex { a, .. } => a.len(),
            DemandModel::Linear { feature_slopes, .. } => feature_slopes.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DemandModel::Complex {
                a,
                b,
                phi_scale,
                theta_scale,
            } => {
                if a.len() != b.len() {
                    return Err(Error::DimensionMismatch {
                        expected: a.len(),
                        got: b.len(),
                    });
                }
                if !(*phi_scale >= 0.0 && *theta_scale >= 0.0) {
                    return Err(Error::InvalidParameter("noise scales must be non-negative".into()));
                }
            }
            DemandModel::Linear { noise_std, .. } => {
                if !(*noise_std >= 0.0) {
                    return Err(Error::InvalidParameter("noise_std must be non-negative".into()));
                }
            }
        }
        Ok(())
    }

    fn check(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.feature_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.feature_dim(),
                got: z.len(),
            });
        }
        Ok(())
    }

    /// Deterministic part `μ(p, z)` before the floor.
    pub fn location(&self, p: f64, z: &[f64]) -> Result<f64> {
        self.check(z)?;
        Ok(match self {
            DemandModel::Complex { a, .. } => 60.0 - p + 12.0 * dot(a, z),
            DemandModel::Linear {
                intercept,
                price_slope,
                feature_slopes,
                ..
            } => intercept + price_slope * p + dot(feature_slopes, z),
        })
    }

    /// Derivative of `μ` in the price.
    pub fn price_slope(&self) -> f64 {
        match self {
            DemandModel::Complex { .. } => -1.0,
            DemandModel::Linear { price_slope, .. } => *price_slope,
        }
    }

    /// One draw of the additive noise at features `z`.
    pub fn draw_noise<R: Rng + ?Sized>(&self, z: &[f64], rng: &mut R) -> Result<f64> {
        self.check(z)?;
        Ok(match self {
            DemandModel::Complex {
                a,
                b,
                phi_scale,
                theta_scale,
            } => {
                let mut e = 0.0;
                for ai in a {
                    let phi: f64 = rng.sample(StandardNormal);
                    e += 12.0 * phi_scale * ai * phi;
                }
                let theta: f64 = rng.sample(StandardNormal);
                e + theta_scale * dot(b, z) * theta
            }
            DemandModel::Linear { noise_std, .. } => {
                let phi: f64 = rng.sample(StandardNormal);
                noise_std * phi
            }
        })
    }

    pub fn sample_demand<R: Rng + ?Sized>(&self, p: f64, z: &[f64], rng: &mut R) -> Result<f64> {
        let mu = self.location(p, z)?;
        Ok((mu + self.draw_noise(z, rng)?).max(0.0))
    }

    /// Supremum of the demand; the Gaussian shocks make it unbounded unless
    /// the model is noiseless.
    pub fn max_demand(&self, p_lo: f64) -> f64 {
        let noiseless = match self {
            DemandModel::Complex {
                phi_scale, theta_scale, ..
            } => *phi_scale == 0.0 && *theta_scale == 0.0,
            DemandModel::Linear { noise_std, .. } => *noise_std == 0.0,
        };
        if !noiseless {
            return f64::INFINITY;
        }
        // the location is maximal at the lowest price and the largest unit-box features
        let z_best: Vec<f64> = match self {
            DemandModel::Complex { a, .. } => a.iter().map(|v| if *v > 0.0 { 1.0 } else { 0.0 }).collect(),
            DemandModel::Linear { feature_slopes, .. } => feature_slopes
                .iter()
                .map(|v| if *v > 0.0 { 1.0 } else { 0.0 })
                .collect(),
        };
        self.location(p_lo, &z_best)
            .map(|m| m.max(0.0))
            .unwrap_or(f64::INFINITY)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// How historical prices were set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum PricePolicy {
    Uniform { lo: f64, hi: f64 },
}

impl PricePolicy {
    pub fn uniform(bounds: Interval) -> Self {
        PricePolicy::Uniform {
            lo: bounds.lo,
            hi: bounds.hi,
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            PricePolicy::Uniform { lo, hi } if hi > lo => rng.random_range(lo..hi),
            PricePolicy::Uniform { lo, .. } => lo,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            PricePolicy::Uniform { lo, hi } if lo.is_finite() && hi.is_finite() && lo <= hi => Ok(()),
            _ => Err(Error::InvalidParameter("price policy needs finite lo ≤ hi".into())),
        }
    }
}

/// `n` rows of i.i.d. `U[0, 1]⁴` features.
pub fn gen_features(n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| (0..FEATURE_DIM).map(|_| rng.random::<f64>()).collect())
        .collect()
}

/// Draws, per sample and in this order, the features, the price and the demand.
pub fn gen_dataset(model: &DemandModel, n: usize, policy: &PricePolicy, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample count must be at least 1".into()));
    }
    model.validate()?;
    policy.validate()?;
    let dim = model.feature_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(n);
    for _ in 0..n {
        let z: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
        let p = policy.draw(&mut rng);
        let d = model.sample_demand(p, &z, &mut rng)?;
        samples.push(Sample {
            price: p,
            features: z,
            demand: d,
        });
    }
    Dataset::new(samples)
}

/// Writes `p,z1,…,zm,d`; with `scaled` the price and features are mapped to `[0, 1]`.
pub fn write_dataset_csv<W: Write>(data: &Dataset, out: W, scaled: bool) -> Result<()> {
    let m = data.feature_dim();
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["p".to_string()];
    header.extend((1..=m).map(|j| format!("z{j}")));
    header.push("d".into());
    w.write_record(&header)?;
    let scaling = data.scaling();
    for s in data.samples() {
        let mut rec = Vec::with_capacity(m + 2);
        if scaled {
            rec.push(scaling.price.scale(s.price).to_string());
            rec.extend(scaling.scale_features(&s.features).iter().map(f64::to_string));
        } else {
            rec.push(s.price.to_string());
            rec.extend(s.features.iter().map(f64::to_string));
        }
        rec.push(s.demand.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset_csv<R: Read>(input: R) -> Result<Dataset> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    let cols: Vec<&str> = header.iter().map(str::trim).collect();
    if cols.first() != Some(&"p") {
        return Err(Error::MissingColumn("p".into()));
    }
    if cols.last() != Some(&"d") || cols.len() < 2 {
        return Err(Error::MissingColumn("d".into()));
    }
    let m = cols.len() - 2;
    for (j, c) in cols[1..=m].iter().enumerate() {
        let want = format!("z{}", j + 1);
        if *c != want {
            return Err(Error::MissingColumn(want));
        }
    }
    let mut samples = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let vals: Vec<f64> = rec
            .iter()
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Malformed {
                line,
                message: e.to_string(),
            })?;
        samples.push(Sample {
            price: vals[0],
            features: vals[1..=m].to_vec(),
            demand: vals[m + 1],
        });
    }
    Dataset::new(samples)
}

pub fn save_dataset(data: &Dataset, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_dataset_csv(data, std::io::BufWriter::new(f), false)
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    read_dataset_csv(std::io::BufReader::new(std::fs::File::open(path)?))
}

pub const REAL_FEATURES: [&str; 6] = ["hdd", "cdd", "solar_exposure", "rainfall", "school_day", "holiday"];

/// `(15 − T_max)⁺`
pub fn heating_degree_day(t_max: f64) -> f64 {
    (15.0 - t_max).max(0.0)
}

/// `(T_min − 18)⁺`
pub fn cooling_degree_day(t_min: f64) -> f64 {
    (t_min - 18.0).max(0.0)
}

/// A row of the electricity data after transformation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealRow {
    pub date: String,
    pub demand: f64,
    pub price: f64,
    pub features: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedRow {
    pub line: u64,
    pub reason: String,
}

/// Chronological 90/10 split of the electricity data, scaled with the
/// training rows' ranges.
#[derive(Debug, Clone)]
pub struct RealSplit {
    pub train: Dataset,
    pub test: Dataset,
    pub train_dates: Vec<String>,
    pub test_dates: Vec<String>,
    pub dropped: Vec<DroppedRow>,
}

fn normalize(name: &str) -> String {
    name.trim()
        .to_ascii_lowercase()
        .chars()
        .map(|c| if c == ' ' || c == '-' { '_' } else { c })
        .collect()
}

fn parse_bool(v: &str) -> Option<f64> {
    match v.trim().to_ascii_lowercase().as_str() {
        "y" | "yes" | "true" | "1" => Some(1.0),
        "n" | "no" | "false" | "0" => Some(0.0),
        _ => None,
    }
}

fn parse_date(v: &str) -> Option<(u32, u32, u32)> {
    let mut it = v.trim().split('-');
    let y = it.next()?.parse().ok()?;
    let m: u32 = it.next()?.parse().ok()?;
    let d: u32 = it.next()?.parse().ok()?;
    if it.next().is_some() || !(1..=12).contains(&m) || !(1..=31).contains(&d) {
        return None;
    }
    Some((y, m, d))
}

const REQUIRED: [&str; 9] = [
    "date",
    "demand",
    "rrp",
    "min_temperature",
    "max_temperature",
    "solar_exposure",
    "rainfall",
    "school_day",
    "holiday",
];

/// Parses the electricity CSV, drops unusable rows and splits chronologically.
pub fn read_real_csv<R: Read>(input: R) -> Result<RealSplit> {
    let mut r = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(normalize).collect();
    let mut idx = [0usize; 9];
    for (slot, name) in idx.iter_mut().zip(REQUIRED) {
        *slot = header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))?;
    }
    let mut rows: Vec<((u32, u32, u32), RealRow)> = Vec::new();
    let mut dropped = Vec::new();
    for rec in r.records() {
        let rec = match rec {
            Ok(rec) => rec,
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                dropped.push(DroppedRow {
                    line,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        match parse_real_row(&rec, &idx) {
            Ok(row) => rows.push(row),
            Err(reason) => dropped.push(DroppedRow { line, reason }),
        }
    }
    if rows.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least two usable rows, found {}",
            rows.len()
        )));
    }
    rows.sort_by_key(|(d, _)| *d);
    let n_train = rows.len() * 9 / 10;
    let to_sample = |r: &RealRow| Sample {
        price: r.price,
        features: r.features.clone(),
        demand: r.demand,
    };
    let train = Dataset::new(rows[..n_train].iter().map(|(_, r)| to_sample(r)).collect())?;
    let test_rows: Vec<Sample> = rows[n_train..].iter().map(|(_, r)| to_sample(r)).collect();
    let scaling: Scaling = train.scaling().clone();
    let test = Dataset::new(test_rows)?.with_scaling(scaling)?;
    Ok(RealSplit {
        train,
        test,
        train_dates: rows[..n_train].iter().map(|(_, r)| r.date.clone()).collect(),
        test_dates: rows[n_train..].iter().map(|(_, r)| r.date.clone()).collect(),
        dropped,
    })
}

fn parse_real_row(
    rec: &csv::StringRecord,
    idx: &[usize; 9],
) -> std::result::Result<((u32, u32, u32), RealRow), String> {
    let field = |k: usize| -> std::result::Result<&str, String> {
        let v = rec.get(idx[k]).unwrap_or("").trim();
        if v.is_empty() {
            Err(format!("missing value for `{}`", REQUIRED[k]))
        } else {
            Ok(v)
        }
    };
    let num = |k: usize| -> std::result::Result<f64, String> {
        let v = field(k)?;
        let x: f64 = v
            .parse()
            .map_err(|_| format!("cannot parse `{v}` as a number for `{}`", REQUIRED[k]))?;
        if x.is_finite() {
            Ok(x)
        } else {
            Err(format!("non-finite value for `{}`", REQUIRED[k]))
        }
    };
    let flag = |k: usize| -> std::result::Result<f64, String> {
        let v = field(k)?;
        parse_bool(v).ok_or_else(|| format!("cannot parse `{v}` as a boolean for `{}`", REQUIRED[k]))
    };
    let date_str = field(0)?;
    let date = parse_date(date_str).ok_or_else(|| format!("cannot parse date `{date_str}`"))?;
    let demand = num(1)?;
    if demand <= 0.0 {
        return Err(format!("demand must be positive, got {demand}"));
    }
    let price = num(2)?;
    let t_min = num(3)?;
    let t_max = num(4)?;
    let features = vec![
        heating_degree_day(t_max),
        cooling_degree_day(t_min),
        num(5)?,
        num(6)?,
        flag(7)?,
        flag(8)?,
    ];
    Ok((
        date,
        RealRow {
            date: date_str.to_string(),
            demand,
            price,
            features,
        },
    ))
}

pub fn load_real_csv(path: &Path) -> Result<RealSplit> {
    read_real_csv(std::io::BufReader::new(std::fs::File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_hand_values() {
        let z = [0.5; 4];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let lin = DemandModel::linear().noiseless();
        assert_eq!(lin.sample_demand(20.0, &z, &mut rng).unwrap(), 42.0);
        let cx = DemandModel::complex().noiseless();
        assert_eq!(cx.sample_demand(20.0, &z, &mut rng).unwrap(), 106.0);
    }

    #[test]
    fn huge_price_floors_demand() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for m in [DemandModel::linear(), DemandModel::complex()] {
            for _ in 0..100 {
                assert_eq!(m.sample_demand(1e6, &[0.3; 4], &mut rng).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn features_are_reproducible_and_in_the_unit_box() {
        let a = gen_features(50, 7);
        assert_eq!(a, gen_features(50, 7));
        assert_ne!(a, gen_features(50, 8));
        assert!(a.iter().flatten().all(|v| (0.0..=1.0).contains(v)));
        assert_eq!(gen_features(1, 3), gen_features(1, 3));
    }

    #[test]
    fn default_policies() {
        assert_eq!(
            DemandModel::complex().default_policy(),
            PricePolicy::Uniform { lo: 7.0, hi: 130.0 }
        );
        assert_eq!(
            DemandModel::linear().default_policy(),
            PricePolicy::Uniform { lo: 7.0, hi: 40.0 }
        );
    }

    #[test]
    fn datasets_are_reproducible() {
        let m = DemandModel::complex();
        let pol = PricePolicy::uniform(m.default_params().p_bounds);
        let a = gen_dataset(&m, 200, &pol, 5).unwrap();
        let b = gen_dataset(&m, 200, &pol, 5).unwrap();
        assert_eq!(a.samples(), b.samples());
        assert!(a.samples().iter().all(|s| s.demand >= 0.0));
        assert!(gen_dataset(&m, 0, &pol, 5).is_err());
    }

    #[test]
    fn higher_prices_lower_mean_demand() {
        let m = DemandModel::linear();
        let low = gen_dataset(&m, 4000, &PricePolicy::Uniform { lo: 7.0, hi: 20.0 }, 1).unwrap();
        let high = gen_dataset(&m, 4000, &PricePolicy::Uniform { lo: 27.0, hi: 40.0 }, 1).unwrap();
        let mean = |d: &Dataset| d.demands().iter().sum::<f64>() / d.len() as f64;
        // same seed, so the shift is exactly the 20-unit price offset
        assert!((mean(&low) - mean(&high) - 20.0).abs() < 1e-9);
    }

    #[test]
    fn csv_round_trip() {
        let m = DemandModel::linear();
        let d = gen_dataset(&m, 30, &PricePolicy::uniform(m.default_params().p_bounds), 2).unwrap();
        let mut buf = Vec::new();
        write_dataset_csv(&d, &mut buf, false).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("p,z1,z2,z3,z4,d\n"));
        assert_eq!(text.lines().count(), 31);
        let back = read_dataset_csv(buf.as_slice()).unwrap();
        assert_eq!(back.samples(), d.samples());
    }

    #[test]
    fn scaled_csv_lies_in_the_unit_box() {
        let m = DemandModel::complex();
        let d = gen_dataset(&m, 50, &PricePolicy::uniform(m.default_params().p_bounds), 2).unwrap();
        let mut buf = Vec::new();
        write_dataset_csv(&d, &mut buf, true).unwrap();
        let back = read_dataset_csv(buf.as_slice()).unwrap();
        for s in back.samples() {
            assert!((0.0..=1.0).contains(&s.price));
            assert!(s.features.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn malformed_dataset_rows_name_the_line() {
        let text = "p,z1,d\n1,0.5,3\n2,abc,4\n";
        match read_dataset_csv(text.as_bytes()).unwrap_err() {
            Error::Malformed { line, .. } => assert_eq!(line, 3),
            e => panic!("unexpected {e:?}"),
        }
        assert_eq!(
            read_dataset_csv("p,z2,d\n1,2,3\n".as_bytes()).unwrap_err(),
            Error::MissingColumn("z1".into())
        );
    }

    #[test]
    fn degree_days() {
        assert_eq!(heating_degree_day(10.0), 5.0);
        assert_eq!(heating_degree_day(20.0), 0.0);
        assert_eq!(cooling_degree_day(25.0), 7.0);
        assert_eq!(cooling_degree_day(12.0), 0.0);
    }

    fn toy_csv(rows: usize) -> String {
        let mut s = String::from(
            "date,demand,RRP,min_temperature,max_temperature,solar_exposure,rainfall,school_day,holiday\n",
        );
        for i in 0..rows {
            s.push_str(&format!(
                "2015-01-{:02},{},{},{},{},{},{},{},{}\n",
                i + 1,
                100_000 + 1000 * i,
                50.0 + i as f64,
                10.0 + i as f64,
                12.0 + 2.0 * i as f64,
                5.0 + i as f64,
                (i % 3) as f64,
                if i % 2 == 0 { "Y" } else { "N" },
                if i == 3 { "Y" } else { "N" },
            ));
        }
        s
    }

    #[test]
    fn ten_rows_split_nine_one() {
        let split = read_real_csv(toy_csv(10).as_bytes()).unwrap();
        assert_eq!(split.train.len(), 9);
        assert_eq!(split.test.len(), 1);
        assert!(split.dropped.is_empty());
        assert_eq!(split.test_dates, vec!["2015-01-10".to_string()]);
        // row 0: T_max 12 gives HDD 3, T_min 10 gives CDD 0
        assert_eq!(split.train.samples()[0].features[..2], [3.0, 0.0]);
    }

    #[test]
    fn corrupted_rows_are_dropped_with_line_numbers() {
        let mut text = toy_csv(10);
        text.push_str("2015-01-20,abc,1,1,1,1,1,Y,N\n");
        text.push_str("2015-01-21,1000,,1,1,1,1,Y,N\n");
        let split = read_real_csv(text.as_bytes()).unwrap();
        assert_eq!(split.train.len() + split.test.len(), 10);
        let lines: Vec<u64> = split.dropped.iter().map(|d| d.line).collect();
        assert_eq!(lines, vec![12, 13]);
    }

    #[test]
    fn missing_column_is_named() {
        let text = toy_csv(5).replace("rainfall", "rain");
        assert_eq!(
            read_real_csv(text.as_bytes()).unwrap_err(),
            Error::MissingColumn("rainfall".into())
        );
    }

    #[test]
    fn rows_are_split_chronologically() {
        let text = toy_csv(10);
        let mut lines: Vec<&str> = text.lines().collect();
        lines[1..].reverse();
        let split = read_real_csv(lines.join("\n").as_bytes()).unwrap();
        assert_eq!(split.test_dates, vec!["2015-01-10".to_string()]);
    }

    #[test]
    fn test_split_uses_training_scaling() {
        let split = read_real_csv(toy_csv(20).as_bytes()).unwrap();
        assert_eq!(split.test.scaling(), split.train.scaling());
    }
}
