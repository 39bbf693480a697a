use super::SentenceRecord;
use crate::error::{invalid, Result};
use crate::rng::fnv1a;

/// Fold of each id: ids are ranked by FNV-1a hash (ties by id) and dealt
/// round-robin, so fold sizes differ by at most one.
pub fn fold_assignment<S: AsRef<str>>(ids: &[S], n_folds: usize) -> Result<Vec<usize>> {
    if n_folds == 0 {
        return Err(invalid("n_folds must be >= 1"));
    }
    let mut order: Vec<usize> = (0..ids.len()).collect();
    order.sort_by(|a, b| {
        let (ia, ib) = (ids[*a].as_ref(), ids[*b].as_ref());
        fnv1a(ia.as_bytes())
            .cmp(&fnv1a(ib.as_bytes()))
            .then_with(|| ia.cmp(ib))
    });
    let mut folds = vec![0; ids.len()];
    for (rank, idx) in order.into_iter().enumerate() {
        folds[idx] = rank % n_folds;
    }
    Ok(folds)
}

/// `(train, test)` index lists for `fold`.
pub fn split_indices<S: AsRef<str>>(ids: &[S], fold: usize, n_folds: usize) -> Result<(Vec<usize>, Vec<usize>)> {
    if fold >= n_folds {
        return Err(invalid(format!("fold {fold} out of range for {n_folds} folds")));
    }
    let folds = fold_assignment(ids, n_folds)?;
    let (test, train): (Vec<usize>, Vec<usize>) = (0..ids.len()).partition(|i| folds[*i] == fold);
    Ok((train, test))
}

pub fn split_corpus(
    corpus: &[SentenceRecord],
    fold: usize,
    n_folds: usize,
) -> Result<(Vec<SentenceRecord>, Vec<SentenceRecord>)> {
    let ids: Vec<&str> = corpus.iter().map(|r| r.id.as_str()).collect();
    let (train, test) = split_indices(&ids, fold, n_folds)?;
    Ok((
        train.into_iter().map(|i| corpus[i].clone()).collect(),
        test.into_iter().map(|i| corpus[i].clone()).collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("s{i:05}")).collect()
    }

    #[test]
    fn folds_partition_the_corpus() {
        let ids = ids(100);
        let mut seen = vec![0; 100];
        for fold in 0..4 {
            let (train, test) = split_indices(&ids, fold, 4).unwrap();
            assert_eq!(test.len(), 25);
            assert_eq!(train.len(), 75);
            for i in test {
                seen[i] += 1;
            }
        }
        assert!(seen.iter().all(|c| *c == 1));
    }

    #[test]
    fn uneven_sizes_within_one() {
        let ids = ids(103);
        for fold in 0..4 {
            let (_, test) = split_indices(&ids, fold, 4).unwrap();
            assert!((25..=26).contains(&test.len()));
        }
    }

    #[test]
    fn deterministic_and_range_checked() {
        let ids = ids(40);
        assert_eq!(split_indices(&ids, 2, 4).unwrap(), split_indices(&ids, 2, 4).unwrap());
        assert!(split_indices(&ids, 4, 4).is_err());
    }
}
