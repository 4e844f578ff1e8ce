use std::io::{Read, Write};

use crate::polcalc::{analyzer_state, AnalyzerSetting, Cardinal, PolState};
use crate::{Error, Result};

use super::joint_probability;

/// What the two analyzers project onto for one measurement.
#[derive(Debug, Clone, PartialEq)]
pub enum Setting {
    /// No analyzers; every pair is detected.
    Open,
    /// Bloch-plane analyzers `|ψ_θ⟩`.
    Bloch(AnalyzerSetting),
    /// Projections onto cardinal states.
    Basis { signal: Cardinal, idler: Cardinal },
}

impl Setting {
    pub fn bloch(theta_s: f64, theta_i: f64) -> Result<Self> {
        Ok(Setting::Bloch(AnalyzerSetting::new(theta_s, theta_i)?))
    }

    pub fn label(&self) -> String {
        match self {
            Setting::Open => "open".into(),
            Setting::Bloch(_) => "bloch".into(),
            Setting::Basis { signal, idler } => format!("{signal}{idler}"),
        }
    }

    /// Projected signal and idler states; `None` for an open arm.
    pub fn states(&self) -> (Option<PolState>, Option<PolState>) {
        match self {
            Setting::Open => (None, None),
            Setting::Bloch(a) => (
                Some(analyzer_state(a.theta_s)),
                Some(analyzer_state(a.theta_i)),
            ),
            Setting::Basis { signal, idler } => (Some(signal.state()), Some(idler.state())),
        }
    }

    /// `(p_joint, p_signal, p_idler)` for a two-qubit state.
    pub fn probabilities(&self, rho: &PolState) -> Result<(f64, f64, f64)> {
        match self.states() {
            (Some(s), Some(i)) => {
                let joint = joint_probability(rho, &s, &i)?;
                let ps = joint + joint_probability(rho, &s, &orth(&i))?;
                let pi = joint + joint_probability(rho, &orth(&s), &i)?;
                Ok((joint, ps, pi))
            }
            _ => Ok((1.0, 1.0, 1.0)),
        }
    }

    fn thetas(&self) -> (Option<f64>, Option<f64>) {
        match self {
            Setting::Bloch(a) => (Some(a.theta_s), Some(a.theta_i)),
            _ => (None, None),
        }
    }

    fn parse(label: &str, theta_s: Option<f64>, theta_i: Option<f64>) -> Result<Self> {
        match label {
            "open" => Ok(Setting::Open),
            "bloch" => match (theta_s, theta_i) {
                (Some(s), Some(i)) => Setting::bloch(s, i),
                _ => Err(Error::Parse("bloch setting without angles".into())),
            },
            _ => {
                let mut chars = label.chars();
                match (
                    chars.next().and_then(Cardinal::from_char),
                    chars.next().and_then(Cardinal::from_char),
                    chars.next(),
                ) {
                    (Some(signal), Some(idler), None) => Ok(Setting::Basis { signal, idler }),
                    _ => Err(Error::UnknownLabel(label.to_string())),
                }
            }
        }
    }
}

fn orth(s: &PolState) -> PolState {
    let a = s.amplitudes().expect("analyzer states are pure");
    PolState::qubit(-a[1].conj(), a[0].conj())
}

/// Counts observed for one setting.
#[derive(Debug, Clone, PartialEq)]
pub struct CountRecord {
    pub setting: Setting,
    pub duration_s: f64,
    pub n_signal: u64,
    pub n_idler: u64,
    pub n_coinc: u64,
}

pub const CSV_HEADER: [&str; 7] = [
    "setting_label",
    "theta_s_deg",
    "theta_i_deg",
    "duration_s",
    "n_signal",
    "n_idler",
    "n_coinc",
];

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes records as CSV with LF line endings.
pub fn write_csv<W: Write>(records: &[CountRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let csv_err = |e: csv::Error| Error::Parse(e.to_string());
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in records {
        let (ts, ti) = r.setting.thetas();
        w.write_record([
            r.setting.label(),
            opt(ts),
            opt(ti),
            r.duration_s.to_string(),
            r.n_signal.to_string(),
            r.n_idler.to_string(),
            r.n_coinc.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<CountRecord>> {
    let mut rd = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let csv_err = |e: csv::Error| Error::Parse(e.to_string());
    let header = rd.headers().map_err(csv_err)?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::Parse(format!("unexpected header {header:?}")));
    }
    let float = |s: &str| -> Result<Option<f64>> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse()
                .map(Some)
                .map_err(|_| Error::Parse(format!("bad number `{s}`")))
        }
    };
    let int = |s: &str| -> Result<u64> {
        s.parse()
            .map_err(|_| Error::Parse(format!("bad count `{s}`")))
    };
    let mut out = Vec::new();
    for row in rd.records() {
        let row = row.map_err(csv_err)?;
        let setting = Setting::parse(&row[0], float(&row[1])?, float(&row[2])?)?;
        out.push(CountRecord {
            setting,
            duration_s: float(&row[3])?.ok_or_else(|| Error::Parse("missing duration".into()))?,
            n_signal: int(&row[4])?,
            n_idler: int(&row[5])?,
            n_coinc: int(&row[6])?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn setting_strategy() -> impl Strategy<Value = Setting> {
        prop_oneof![
            Just(Setting::Open),
            (-720.0f64..720.0, -720.0f64..720.0).prop_map(|(s, i)| Setting::bloch(s, i).unwrap()),
            (0usize..6, 0usize..6).prop_map(|(s, i)| Setting::Basis {
                signal: Cardinal::ALL[s],
                idler: Cardinal::ALL[i],
            }),
        ]
    }

    proptest! {
        #[test]
        fn csv_round_trip(
            recs in prop::collection::vec(
                (setting_strategy(), 1e-3f64..1e3, 0u64..10_000_000, 0u64..10_000_000, 0u64..1_000_000),
                1..20,
            )
        ) {
            let recs: Vec<CountRecord> = recs
                .into_iter()
                .map(|(setting, duration_s, n_signal, n_idler, n_coinc)| CountRecord {
                    setting, duration_s, n_signal, n_idler, n_coinc,
                })
                .collect();
            let mut buf = Vec::new();
            write_csv(&recs, &mut buf).unwrap();
            prop_assert!(!buf.contains(&b'\r'));
            let back = read_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(back, recs);
        }
    }

    #[test]
    fn csv_layout() {
        let recs = vec![
            CountRecord {
                setting: Setting::bloch(0.0, 90.0).unwrap(),
                duration_s: 1.5,
                n_signal: 10,
                n_idler: 20,
                n_coinc: 3,
            },
            CountRecord {
                setting: Setting::Basis {
                    signal: Cardinal::H,
                    idler: Cardinal::R,
                },
                duration_s: 1.0,
                n_signal: 1,
                n_idler: 2,
                n_coinc: 0,
            },
        ];
        let mut buf = Vec::new();
        write_csv(&recs, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "setting_label,theta_s_deg,theta_i_deg,duration_s,n_signal,n_idler,n_coinc\n\
             bloch,0,90,1.5,10,20,3\n\
             HR,,,1,1,2,0\n"
        );
        assert!(read_csv("a,b\n".as_bytes()).is_err());
        assert!(read_csv(
            "setting_label,theta_s_deg,theta_i_deg,duration_s,n_signal,n_idler,n_coinc\nXQ,,,1,1,1,1\n"
                .as_bytes()
        )
        .is_err());
    }
}
