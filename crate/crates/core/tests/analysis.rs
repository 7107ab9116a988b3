use std::sync::Arc;

use sagraph::families::{antitree_family, path_family, AntitreeSpec, Example67, PathLaplacian};
use sagraph::selfadjoint::{analyze, AnalysisOptions, Criterion, Premises, Status, Subject, Verdict};
use sagraph::WeightedGraph;

fn status(report: &sagraph::AnalysisReport, c: Criterion) -> Status {
    report.outcomes.iter().find(|o| o.criterion == c).unwrap().status
}

#[test]
fn finite_graph_is_certified() {
    let g = WeightedGraph::from_dense(vec![1.0, 1.0], &[(0, 1, 1.0)], None).unwrap();
    let r = analyze(Subject::Graph(&g), &AnalysisOptions::default()).unwrap();
    assert_eq!(status(&r, Criterion::Gaffney), Status::Certified);
    assert_eq!(r.verdict, Verdict::CertifiedSelfAdjoint);
    assert!(r.outcomes.iter().all(|o| o.is_consistent()));
}

#[test]
fn non_self_adjoint_antitree() {
    let family = Example67::new(2.0, 1.0).unwrap().family();
    let r = analyze(Subject::Family(&family), &AnalysisOptions::default()).unwrap();
    for o in &r.outcomes {
        println!("{:?} {:?} {}", o.criterion, o.status, o.note);
        for h in &o.hypotheses {
            println!("   {} {:?} {}", h.name, h.status, h.detail);
        }
    }
    assert_eq!(r.nonnegativity.as_ref().unwrap().status, Status::Certified);
    assert_eq!(status(&r, Criterion::Wouk), Status::Inapplicable);
    assert_eq!(status(&r, Criterion::Deficiency), Status::EvidenceAgainst);
    assert_eq!(status(&r, Criterion::CarlemanFriedrichs), Status::Inconclusive);
    assert_eq!(r.verdict, Verdict::EvidenceNotSelfAdjoint);
}

#[test]
fn self_adjoint_antitree() {
    let family = Example67::new(0.5, 0.5).unwrap().family();
    let r = analyze(Subject::Family(&family), &AnalysisOptions::default()).unwrap();
    for o in &r.outcomes {
        println!("{:?} {:?}", o.criterion, o.status);
        for h in &o.hypotheses {
            println!("   {} {:?} {}", h.name, h.status, h.detail);
        }
    }
    assert_eq!(status(&r, Criterion::Wouk), Status::EvidenceFor);
    assert_eq!(r.verdict, Verdict::EvidenceSelfAdjoint);
    let options = AnalysisOptions {
        premises: Premises {
            complete: true,
            semibounded: false,
        },
        ..AnalysisOptions::default()
    };
    let r = analyze(Subject::Family(&family), &options).unwrap();
    assert_eq!(status(&r, Criterion::Wouk), Status::Certified);
    assert_eq!(r.verdict, Verdict::CertifiedSelfAdjoint);
}

#[test]
fn weighted_path_laplacian() {
    let family = path_family(Arc::new(PathLaplacian { exponent: 1.0 }));
    let r = analyze(Subject::Family(&family), &AnalysisOptions::default()).unwrap();
    for o in &r.outcomes {
        println!("{:?} {:?}", o.criterion, o.status);
    }
    assert_eq!(status(&r, Criterion::Wouk), Status::EvidenceFor);
    assert_eq!(r.verdict, Verdict::EvidenceSelfAdjoint);
}

#[test]
fn finite_antitree_family() {
    let spec = AntitreeSpec::from_spheres(vec![1, 3, 3, 3]).unwrap();
    let family = antitree_family(&spec);
    let r = analyze(Subject::Family(&family), &AnalysisOptions::default()).unwrap();
    assert_eq!(r.verdict, Verdict::CertifiedSelfAdjoint);
}
