use serde::{Deserialize, Serialize};

use crate::backend::Label;
use crate::error::{Error, Result};

/// Cohen's kappa with its ingredients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kappa {
    pub kappa: f64,
    pub observed: f64,
    pub expected: f64,
    pub items: usize,
    /// Both annotators used one and the same label throughout, so chance
    /// agreement is 1; `kappa` is reported as 1.0.
    pub degenerate: bool,
}

/// κ = (p_o − p_e) / (1 − p_e) over the three labels.
pub fn cohen_kappa_labels(a: &[Label], b: &[Label]) -> Result<Kappa> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument(format!(
            "{} labels against {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::InvalidArgument("no doubly-labeled items".into()));
    }
    let n = a.len() as f64;
    let agree = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64;
    let observed = agree / n;
    let share = |labels: &[Label], l: Label| labels.iter().filter(|x| **x == l).count() as f64 / n;
    let expected: f64 = Label::ALL.iter().map(|&l| share(a, l) * share(b, l)).sum();
    if expected >= 1.0 {
        return Ok(Kappa {
            kappa: 1.0,
            observed,
            expected,
            items: a.len(),
            degenerate: true,
        });
    }
    Ok(Kappa {
        kappa: (observed - expected) / (1.0 - expected),
        observed,
        expected,
        items: a.len(),
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use Label::*;

    #[test]
    fn perfect_and_degenerate() {
        let a = [Entailment, Neutral, Contradiction];
        assert_eq!(cohen_kappa_labels(&a, &a).unwrap().kappa, 1.0);
        let k = cohen_kappa_labels(&[Neutral; 4], &[Neutral; 4]).unwrap();
        assert!(k.degenerate);
        assert_eq!(k.kappa, 1.0);
        assert!(cohen_kappa_labels(&[], &[]).is_err());
    }

    #[test]
    fn complete_disagreement_is_negative() {
        let k = cohen_kappa_labels(&[Entailment, Neutral], &[Neutral, Entailment]).unwrap();
        assert_eq!(k.kappa, -1.0);
    }
}
