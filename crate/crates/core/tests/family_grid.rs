use sagraph::families::Example67;
use sagraph::metrics::{ray_evidence, CompletenessConfig, CompletenessStatus};
use sagraph::selfadjoint::{
    deficiency_at_conjugates, jacobi_akhiezer, jacobi_wouk_increments, DeficiencyClass, DeficiencyConfig,
    SeriesConfig, SeriesVerdict,
};

const GRID: [f64; 5] = [0.5, 1.0, 1.5, 2.0, 2.5];

fn limit_circle(c1: f64, c2: f64) -> bool {
    c1 > 1.0 && c1 + 2.0 * c2 > 3.0
}

fn near_threshold(c1: f64, c2: f64) -> bool {
    (c1 - 1.0).abs() < 0.05 || (c1 + 2.0 * c2 - 3.0).abs() < 0.05
}

#[test]
fn deficiency_and_akhiezer_grid() {
    let mut failures = Vec::new();
    for c1 in GRID {
        for c2 in GRID {
            let ex = Example67::new(c1, c2).unwrap();
            let pair = deficiency_at_conjugates(&ex, &DeficiencyConfig::default()).unwrap();
            assert!(pair.agree);
            let akh = jacobi_akhiezer(&ex, &SeriesConfig::default()).unwrap();
            let s = &pair.plus.solutions;
            println!(
                "({c1}, {c2}) {:?} slopes {:?} akhiezer {:?} exp {:?}",
                pair.class(),
                s.iter().map(|t| t.slope).collect::<Vec<_>>(),
                akh.verdict,
                akh.exponent
            );
            if near_threshold(c1, c2) {
                continue;
            }
            let expected = if limit_circle(c1, c2) {
                (
                    DeficiencyClass::LimitCircleEvidence,
                    SeriesVerdict::ConvergesEvidence,
                )
            } else {
                (
                    DeficiencyClass::LimitPointEvidence,
                    SeriesVerdict::DivergesEvidence,
                )
            };
            if (pair.class(), akh.verdict) != expected {
                failures.push((c1, c2, pair.class(), akh.verdict));
            }
        }
    }
    assert!(failures.is_empty(), "{failures:?}");
}

#[test]
fn wouk_series_grid() {
    let config = CompletenessConfig::default();
    for c1 in GRID {
        for c2 in GRID {
            let ex = Example67::new(c1, c2).unwrap();
            let ev = ray_evidence(&jacobi_wouk_increments(&ex, config.depth), &config).unwrap();
            println!("({c1}, {c2}) wouk {:?} exp {:?}", ev.status, ev.exponent);
            let divergent = ev.status == CompletenessStatus::DivergenceEvidence;
            assert_eq!(divergent, c1 + c2 <= 2.0, "({c1}, {c2}): {:?}", ev.status);
        }
    }
}
