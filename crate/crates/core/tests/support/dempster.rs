//! Brute-force n-ary Dempster combination, used as an oracle for the
//! recursive fold in `er_core::engine`.
//!
//! Every child is a mass function with singleton focal elements `{H_n}`
//! and the whole frame `Θ`. The frame mass is kept as two labelled pieces
//! (weight residual and ignorance) so the weight-only part can be tracked.
//! All focal-element tuples are enumerated and intersected directly.

#[derive(Clone, Copy)]
enum Focal {
    Grade(usize),
    FrameWeight,
    FrameIgnorance,
}

/// Returns `(beliefs, ignorance)` of the combined assessment.
pub fn combine(children: &[(Vec<f64>, f64)]) -> (Vec<f64>, f64) {
    let grades = children[0].0.len();
    let options: Vec<Vec<(Focal, f64)>> = children
        .iter()
        .map(|(beliefs, w)| {
            let mut o: Vec<(Focal, f64)> = beliefs.iter().enumerate().map(|(n, b)| (Focal::Grade(n), w * b)).collect();
            o.push((Focal::FrameWeight, 1.0 - w));
            o.push((Focal::FrameIgnorance, w * (1.0 - beliefs.iter().sum::<f64>())));
            o
        })
        .collect();

    let mut grade_mass = vec![0.0; grades];
    let mut frame_weight = 0.0;
    let mut frame_ignorance = 0.0;
    let mut conflict = 0.0;

    let mut index = vec![0usize; children.len()];
    loop {
        let mut mass = 1.0;
        let mut singleton: Option<usize> = None;
        let mut empty = false;
        let mut all_weight = true;
        for (c, &i) in index.iter().enumerate() {
            let (focal, m) = options[c][i];
            mass *= m;
            match focal {
                Focal::Grade(n) => {
                    all_weight = false;
                    match singleton {
                        None => singleton = Some(n),
                        Some(s) if s != n => empty = true,
                        _ => {}
                    }
                }
                Focal::FrameWeight => {}
                Focal::FrameIgnorance => all_weight = false,
            }
        }
        if empty {
            conflict += mass;
        } else if let Some(n) = singleton {
            grade_mass[n] += mass;
        } else if all_weight {
            frame_weight += mass;
        } else {
            frame_ignorance += mass;
        }

        // odometer increment
        let mut c = 0;
        loop {
            if c == index.len() {
                let norm = 1.0 - conflict;
                let residual = frame_weight / norm;
                let beliefs = grade_mass.iter().map(|m| m / norm / (1.0 - residual)).collect();
                return (beliefs, frame_ignorance / norm / (1.0 - residual));
            }
            index[c] += 1;
            if index[c] < options[c].len() {
                break;
            }
            index[c] = 0;
            c += 1;
        }
    }
}
