"""Independent brute-force oracles used by the unit and acceptance tests.

Everything here works on raw row lists with plain dict/loop arithmetic and
never goes through the package's indexes, so agreement between these
functions and the library is a genuine two-route check.
"""


def oracle_reference(compound_ids, label_rows, activity_rows, *, target,
                     source, activity_type, threshold, noise_cap=200_000,
                     min_count=2, set_size=20):
    """Recount O/C/E/score from raw rows and rank the reference labels.

    Returns (relevant_set, ranked) where ranked is a list of
    (label, observed, expected, corpus_count, score) tuples.
    """
    best = {}
    for cid, tid, atype, value in activity_rows:
        if tid == target and atype == activity_type:
            prev = best.get(cid)
            if prev is None or value < prev:
                best[cid] = value
    relevant = {cid for cid, value in best.items() if value < threshold}

    n_corpus = len(set(compound_ids))
    labels_by_compound = {}
    for cid, src, label in label_rows:
        if src == source:
            labels_by_compound.setdefault(cid, set()).add(label)

    observed, corpus_count = {}, {}
    for cid, labels in labels_by_compound.items():
        for label in labels:
            corpus_count[label] = corpus_count.get(label, 0) + 1
            if cid in relevant:
                observed[label] = observed.get(label, 0) + 1

    ranked = []
    for label, o in observed.items():
        c = corpus_count[label]
        if o < min_count or c > noise_cap:
            continue
        expected = c * len(relevant) / n_corpus
        score = (o - expected) ** 2 / expected
        ranked.append((label, o, expected, c, score))
    ranked.sort(key=lambda row: (-row[4], -row[1], row[0]))
    return relevant, ranked[:set_size]


def oracle_doc_scores(compound_ids, label_rows, *, source, ref_scores,
                      exclude=frozenset()):
    """Score every non-excluded compound directly from raw label rows.

    Returns {compound: (score, n_labels)} for compounds with nonzero score.
    """
    labels_by_compound = {}
    for cid, src, label in label_rows:
        if src == source:
            labels_by_compound.setdefault(cid, set()).add(label)
    scores = {}
    for cid in set(compound_ids):
        if cid in exclude:
            continue
        labels = labels_by_compound.get(cid, set())
        if not labels:
            continue
        total = sum(ref_scores.get(label, 0.0) for label in sorted(labels))
        score = total / len(labels)
        if score != 0.0:
            scores[cid] = (score, len(labels))
    return scores


def oracle_jaccard_pairs(bit_sets):
    """All-pairs Jaccard by double loop over a {compound: set} mapping.

    Returns {(a, b): value} with a < b and only nonzero values.
    """
    ids = sorted(bit_sets)
    pairs = {}
    for i, a in enumerate(ids):
        for b in ids[i + 1:]:
            sa, sb = bit_sets[a], bit_sets[b]
            union = len(sa | sb)
            if union == 0:
                continue
            value = len(sa & sb) / union
            if value > 0.0:
                pairs[(a, b)] = value
    return pairs


def write_corpus_files(directory, compounds, label_rows, activity_rows):
    """Write the three corpus TSVs into `directory`; returns their paths.

    compounds: iterable of ids or (id, smiles) pairs.
    label_rows: (compound, source, label) triples.
    activity_rows: (compound, target, activity_type, value) quadruples.
    """
    directory.mkdir(parents=True, exist_ok=True)
    compounds_path = directory / "compounds.tsv"
    labels_path = directory / "labels.tsv"
    activities_path = directory / "activities.tsv"
    with open(compounds_path, "w", encoding="utf-8") as fh:
        fh.write("compound_id\tsmiles\n")
        for row in compounds:
            if isinstance(row, str):
                fh.write(f"{row}\t\n")
            else:
                fh.write(f"{row[0]}\t{row[1]}\n")
    with open(labels_path, "w", encoding="utf-8") as fh:
        fh.write("compound_id\tsource\tlabel\n")
        for cid, source, label in label_rows:
            fh.write(f"{cid}\t{source}\t{label}\n")
    with open(activities_path, "w", encoding="utf-8") as fh:
        fh.write("compound_id\ttarget_id\tactivity_type\tvalue_nM\n")
        for cid, tid, atype, value in activity_rows:
            fh.write(f"{cid}\t{tid}\t{atype}\t{value}\n")
    return compounds_path, labels_path, activities_path


def random_label_corpus(rng, max_compounds=1000, max_labels=50,
                        sources=("CF", "OC")):
    """Random in-memory corpus rows for oracle-equivalence sweeps.

    Guarantees at least two relevant compounds (EC50 below 30 nM on target
    'TGT') so reference-set construction never degenerates.
    """
    n_compounds = int(rng.integers(30, max_compounds + 1))
    vocab_size = int(rng.integers(10, max_labels + 1))
    compound_ids = [f"c{i:04d}" for i in range(n_compounds)]
    vocab = {src: [f"{src}_lab{v:02d}" for v in range(vocab_size)]
             for src in sources}

    label_rows = []
    for cid in compound_ids:
        for src in sources:
            count = int(rng.integers(0, 9))
            if count:
                for label in rng.choice(vocab[src], size=count, replace=False):
                    label_rows.append((cid, src, str(label)))

    activity_rows = []
    n_active = int(rng.integers(5, max(6, n_compounds // 3)))
    active = rng.choice(compound_ids, size=n_active, replace=False)
    for at, cid in enumerate(active):
        if at < 2:
            value = float(rng.uniform(1.0, 29.0))  # force >= 2 relevant
        else:
            value = float(rng.uniform(1.0, 100.0))
        activity_rows.append((str(cid), "TGT", "EC50", value))
    return compound_ids, label_rows, activity_rows
