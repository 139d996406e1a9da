use super::{Dataset, NCDSplit, SealedLabels};
use crate::{derive_seed, NcdError, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

/// Splits a labeled dataset into known-class and novel-class sides.
///
/// Known classes are relabeled `0..c_l` and novel classes `c_l..c_l+c_u`
/// (each side in sorted original order), so the two label sets are disjoint
/// by construction. The novel side's ground truth travels sealed.
pub fn split_known_novel(ds: &Dataset, novel_classes: &[usize]) -> Result<NCDSplit> {
    let labels = ds.labels()?;
    let present: BTreeSet<usize> = labels.iter().copied().collect();
    let novel: BTreeSet<usize> = novel_classes.iter().copied().collect();
    if novel.is_empty() {
        return Err(NcdError::invalid("no novel classes selected"));
    }
    if let Some(&bad) = novel.iter().find(|c| !present.contains(c)) {
        return Err(NcdError::invalid(format!(
            "novel class {bad} not present in the dataset"
        )));
    }
    let known: Vec<usize> = present.iter().copied().filter(|c| !novel.contains(c)).collect();
    if known.is_empty() {
        return Err(NcdError::invalid("every class marked novel; nothing is known"));
    }

    // Original id -> id in the split's space (known first, then novel).
    let mut remap = vec![usize::MAX; ds.class_names.len()];
    let mut class_names = Vec::with_capacity(present.len());
    for &c in known.iter().chain(novel.iter()) {
        remap[c] = class_names.len();
        class_names.push(ds.class_names[c].clone());
    }
    let c_l = known.len();

    let known_rows: Vec<usize> = (0..ds.n()).filter(|&i| !novel.contains(&labels[i])).collect();
    let novel_rows: Vec<usize> = (0..ds.n()).filter(|&i| novel.contains(&labels[i])).collect();

    let mut labeled = ds.select_rows(&known_rows);
    labeled.y = Some(
        known_rows
            .iter()
            .map(|&i| remap[labels[i]])
            .collect(),
    );
    labeled.class_names = class_names[..c_l].to_vec();

    let sealed = SealedLabels::seal(novel_rows.iter().map(|&i| remap[labels[i]]).collect());
    let mut unlabeled = ds.select_rows(&novel_rows);
    unlabeled.y = None;
    unlabeled.class_names = class_names;

    Ok(NCDSplit {
        labeled,
        unlabeled,
        sealed_novel_labels: sealed,
        hidden: None,
        c_l,
        c_u_true: Some(novel.len()),
    })
}

/// [`split_known_novel`] with the novel classes given by name, as dataset
/// manifests record them.
pub fn split_known_novel_by_name(ds: &Dataset, novel_names: &[String]) -> Result<NCDSplit> {
    let ids = novel_names
        .iter()
        .map(|name| {
            ds.class_names
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| NcdError::invalid(format!("unknown class name `{name}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    split_known_novel(ds, &ids)
}

/// Moves the given known classes to the unlabeled side, simulating novelty
/// for classes whose labels we actually have.
///
/// The remaining known classes are relabeled `0..c_l'`; the moved classes
/// get fresh ids after the existing novel ones. Their rows are appended at
/// the end of the unlabeled side, and their labels stay open in `hidden`
/// for fold scoring, while the sealed ground truth covers all unlabeled rows.
pub fn hide_classes(split: &NCDSplit, hidden: &[usize]) -> Result<NCDSplit> {
    let hidden_set: BTreeSet<usize> = hidden.iter().copied().collect();
    if let Some(&bad) = hidden_set.iter().find(|&&c| c >= split.c_l) {
        return Err(NcdError::invalid(format!(
            "class {bad} is not a known class (c_l = {})",
            split.c_l
        )));
    }
    if hidden_set.len() == split.c_l {
        return Err(NcdError::invalid("hiding every known class leaves no supervision"));
    }

    let labels = split.labeled.labels()?;
    let c_l_new = split.c_l - hidden_set.len();
    let n_novel_names = split.unlabeled.class_names.len() - split.c_l;

    // Kept known classes compact to the front; hidden ones move after the
    // existing novel ids.
    let mut remap = vec![usize::MAX; split.c_l];
    let mut kept_names = Vec::with_capacity(c_l_new);
    for c in 0..split.c_l {
        if !hidden_set.contains(&c) {
            remap[c] = kept_names.len();
            kept_names.push(split.labeled.class_names[c].clone());
        }
    }
    let mut hidden_names = Vec::with_capacity(hidden_set.len());
    for (offset, &c) in hidden_set.iter().enumerate() {
        remap[c] = c_l_new + n_novel_names + offset;
        hidden_names.push(split.labeled.class_names[c].clone());
    }
    // Existing novel ids shift down by the number of removed known classes.
    let shift = hidden_set.len();
    let novel_names: Vec<String> = split.unlabeled.class_names[split.c_l..].to_vec();
    let mut class_names = kept_names;
    class_names.extend(novel_names);
    class_names.extend(hidden_names);

    let kept_rows: Vec<usize> = (0..split.labeled.n())
        .filter(|&i| !hidden_set.contains(&labels[i]))
        .collect();
    let moved_rows: Vec<usize> = (0..split.labeled.n())
        .filter(|&i| hidden_set.contains(&labels[i]))
        .collect();

    let mut labeled = split.labeled.select_rows(&kept_rows);
    labeled.y = Some(kept_rows.iter().map(|&i| remap[labels[i]]).collect());
    labeled.class_names = class_names[..c_l_new].to_vec();

    let moved_labels: Vec<usize> = moved_rows.iter().map(|&i| remap[labels[i]]).collect();
    let mut hidden_ds = split.labeled.select_rows(&moved_rows);
    hidden_ds.y = Some(moved_labels.clone());
    hidden_ds.class_names = class_names.clone();

    let x = ndarray::concatenate(
        ndarray::Axis(0),
        &[split.unlabeled.x.view(), hidden_ds.x.view()],
    )
    .expect("matching widths");
    let unlabeled = Dataset {
        x,
        y: None,
        feature_names: split.unlabeled.feature_names.clone(),
        class_names: class_names.clone(),
        onehot_mask: split.unlabeled.onehot_mask.clone(),
    };

    let sealed = split
        .sealed_novel_labels
        .remap(|old| {
            if old >= split.c_l {
                old - shift
            } else {
                old
            }
        })
        .extended(&moved_labels);

    Ok(NCDSplit {
        labeled,
        unlabeled,
        sealed_novel_labels: sealed,
        hidden: Some(hidden_ds),
        c_l: c_l_new,
        c_u_true: split.c_u_true.map(|c| c + hidden_set.len()),
    })
}

/// Stratified train/test split, deterministic in the seed.
///
/// Per-class test counts follow the largest-remainder rule so the overall
/// test size is `round(n * test_fraction)` while class proportions stay
/// within one instance of exact. A single-instance class goes to train with
/// a warning.
pub fn train_test_split(
    ds: &Dataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset, Vec<String>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(NcdError::invalid("test fraction must be in (0, 1)"));
    }
    let labels = ds.labels()?;
    let n_classes = ds.class_names.len();
    let mut per_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &l) in labels.iter().enumerate() {
        per_class[l].push(i);
    }

    let mut warnings = Vec::new();
    // floor allocation, then distribute the remainder by largest fraction
    // (ties to the smaller class id).
    let target_total = (ds.n() as f64 * test_fraction).round() as usize;
    let mut counts: Vec<usize> = Vec::with_capacity(n_classes);
    let mut fractions: Vec<(f64, usize)> = Vec::with_capacity(n_classes);
    for (c, rows) in per_class.iter().enumerate() {
        let exact = rows.len() as f64 * test_fraction;
        counts.push(exact.floor() as usize);
        fractions.push((exact - exact.floor(), c));
    }
    let mut remainder = target_total.saturating_sub(counts.iter().sum::<usize>());
    fractions.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    for &(_, c) in &fractions {
        if remainder == 0 {
            break;
        }
        if counts[c] < per_class[c].len() {
            counts[c] += 1;
            remainder -= 1;
        }
    }
    for (c, rows) in per_class.iter().enumerate() {
        if rows.len() == 1 {
            counts[c] = 0;
            warnings.push(format!(
                "class `{}` has a single instance; kept in train",
                ds.class_names[c]
            ));
        }
    }

    let mut test_rows = Vec::new();
    let mut train_rows = Vec::new();
    for (c, rows) in per_class.iter().enumerate() {
        let mut shuffled = rows.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, c as u64));
        shuffled.shuffle(&mut rng);
        test_rows.extend_from_slice(&shuffled[..counts[c]]);
        train_rows.extend_from_slice(&shuffled[counts[c]..]);
    }
    train_rows.sort_unstable();
    test_rows.sort_unstable();

    Ok((
        ds.select_rows(&train_rows),
        ds.select_rows(&test_rows),
        warnings,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::EvalGate;
    use ndarray::Array2;

    /// One instance per unit of `sizes`; features identify the row.
    fn toy(sizes: &[usize]) -> Dataset {
        let n: usize = sizes.iter().sum();
        let mut x = Array2::zeros((n, 1));
        let mut y = Vec::new();
        let mut row = 0;
        for (c, &s) in sizes.iter().enumerate() {
            for _ in 0..s {
                x[[row, 0]] = 1000.0 * c as f64 + row as f64;
                y.push(c);
                row += 1;
            }
        }
        Dataset::new(
            x,
            Some(y),
            vec!["f0".into()],
            (0..sizes.len()).map(|c| format!("c{c}")).collect(),
        )
        .unwrap()
    }

    #[test]
    fn split_relabels_both_sides_disjointly() {
        let ds = toy(&[2, 3, 4, 5]);
        let split = split_known_novel(&ds, &[1, 3]).unwrap();
        assert_eq!(split.c_l, 2);
        assert_eq!(split.c_u_true, Some(2));
        assert_eq!(split.labeled.n(), 6);
        assert_eq!(split.unlabeled.n(), 8);
        // Known classes 0,2 -> 0,1; novel 1,3 -> 2,3.
        assert_eq!(split.labeled.labels().unwrap(), &[0, 0, 1, 1, 1, 1]);
        assert_eq!(split.labeled.class_names, vec!["c0", "c2"]);
        let truth = split
            .sealed_novel_labels
            .unseal(EvalGate::for_evaluation());
        assert_eq!(truth, &[2, 2, 2, 3, 3, 3, 3, 3]);
        assert_eq!(split.unlabeled.class_names, vec!["c0", "c2", "c1", "c3"]);
    }

    #[test]
    fn split_rejects_empty_and_total_novel_sets() {
        let ds = toy(&[2, 2]);
        assert!(split_known_novel(&ds, &[]).is_err());
        assert!(split_known_novel(&ds, &[0, 1]).is_err());
        assert!(split_known_novel(&ds, &[5]).is_err());
    }

    #[test]
    fn hide_classes_moves_rows_and_remaps() {
        let ds = toy(&[2, 3, 4, 5, 6]);
        // Known: 0,1,2 -> ids 0,1,2; novel: 3,4 -> ids 3,4.
        let split = split_known_novel(&ds, &[3, 4]).unwrap();
        let fold = hide_classes(&split, &[1]).unwrap();
        assert_eq!(fold.c_l, 2);
        assert_eq!(fold.c_u_true, Some(3));
        // Kept known 0,2 -> 0,1; old novel 3,4 -> 2,3; hidden 1 -> 4.
        assert_eq!(fold.labeled.n(), 6);
        assert_eq!(fold.labeled.labels().unwrap(), &[0, 0, 1, 1, 1, 1]);
        let hidden = fold.hidden.as_ref().unwrap();
        assert_eq!(hidden.n(), 3);
        assert_eq!(hidden.labels().unwrap(), &[4, 4, 4]);
        // Hidden rows appended after the original unlabeled rows.
        assert_eq!(fold.unlabeled.n(), 14);
        let truth = fold.sealed_novel_labels.unseal(EvalGate::for_evaluation());
        assert_eq!(&truth[..11], &[2, 2, 2, 2, 2, 3, 3, 3, 3, 3, 3]);
        assert_eq!(&truth[11..], &[4, 4, 4]);
        // Conservation: kept + hidden = original labeled rows.
        assert_eq!(fold.labeled.n() + hidden.n(), split.labeled.n());
    }

    #[test]
    fn hide_nothing_returns_equivalent_split() {
        let ds = toy(&[2, 3, 4]);
        let split = split_known_novel(&ds, &[2]).unwrap();
        let fold = hide_classes(&split, &[]).unwrap();
        assert_eq!(fold.c_l, split.c_l);
        assert_eq!(fold.labeled.labels().unwrap(), split.labeled.labels().unwrap());
        assert_eq!(fold.unlabeled.x, split.unlabeled.x);
        assert_eq!(fold.hidden.as_ref().unwrap().n(), 0);
    }

    #[test]
    fn hide_all_known_classes_errors() {
        let ds = toy(&[2, 3, 4]);
        let split = split_known_novel(&ds, &[2]).unwrap();
        assert!(hide_classes(&split, &[0, 1]).is_err());
        assert!(hide_classes(&split, &[7]).is_err());
    }

    #[test]
    fn fold_label_spaces_stay_disjoint() {
        let ds = toy(&[3, 3, 3, 3, 3, 3]);
        let split = split_known_novel(&ds, &[4, 5]).unwrap();
        let fold = hide_classes(&split, &[0, 2]).unwrap();
        let open: BTreeSet<usize> = fold.labeled.labels().unwrap().iter().copied().collect();
        let truth: BTreeSet<usize> = fold
            .sealed_novel_labels
            .unseal(EvalGate::for_evaluation())
            .iter()
            .copied()
            .collect();
        assert!(open.is_disjoint(&truth));
        assert!(open.iter().all(|&l| l < fold.c_l));
        assert!(truth.iter().all(|&l| l >= fold.c_l));
    }

    #[test]
    fn train_test_split_sizes_and_determinism() {
        let ds = toy(&[25, 25, 25, 25]);
        let (train, test, warnings) = train_test_split(&ds, 0.3, 7).unwrap();
        assert_eq!(train.n(), 70);
        assert_eq!(test.n(), 30);
        assert!(warnings.is_empty());
        let (train2, test2, _) = train_test_split(&ds, 0.3, 7).unwrap();
        assert_eq!(train.x, train2.x);
        assert_eq!(test.y, test2.y);
        let (_, test3, _) = train_test_split(&ds, 0.3, 8).unwrap();
        assert_ne!(test.x, test3.x);
    }

    #[test]
    fn train_test_split_is_stratified_within_one() {
        let ds = toy(&[10, 20, 31, 17]);
        let (_, test, _) = train_test_split(&ds, 0.3, 3).unwrap();
        let mut counts = vec![0usize; 4];
        for &l in test.labels().unwrap() {
            counts[l] += 1;
        }
        for (c, &got) in counts.iter().enumerate() {
            let exact = [10.0, 20.0, 31.0, 17.0][c] * 0.3;
            assert!(
                (got as f64 - exact).abs() <= 1.0,
                "class {c}: {got} vs {exact}"
            );
        }
    }

    #[test]
    fn single_instance_class_stays_in_train() {
        let ds = toy(&[1, 10, 10]);
        let (train, test, warnings) = train_test_split(&ds, 0.5, 1).unwrap();
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("c0"));
        assert!(train.labels().unwrap().contains(&0));
        assert!(!test.labels().unwrap().contains(&0));
    }

    #[test]
    fn split_rejects_bad_fraction() {
        let ds = toy(&[5, 5]);
        assert!(train_test_split(&ds, 0.0, 0).is_err());
        assert!(train_test_split(&ds, 1.0, 0).is_err());
    }
}
