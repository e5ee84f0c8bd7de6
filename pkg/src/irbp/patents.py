"""Forward-citation success matrix from patent and citation dumps.

For every patent n and target category h, the raw signal is the number
of category-h patents citing n within a fixed window after n's
publication.  That count is normalized by its maximum over n's cohort
(patents sharing n's publication year *and* n's own category), giving an
index in [0, 1]; a patent is a success in category h when the index
strictly exceeds a threshold.  Rows ordered by publication date (ties by
id) turn the labels into the binary success matrix consumed by the
estimation and inference modules.

The window is exactly 365 * T days, both endpoints inclusive, ignoring
leap years; cohorts whose maximum count is zero yield index 0 for all
members.  Both conventions are fixed so identical inputs produce
byte-identical output files.
"""

import csv
from dataclasses import dataclass, field
from datetime import date, timedelta

import numpy as np

from .errors import EmptyInput, ParameterOutOfRange, SchemaError

DEFAULT_CATEGORIES = ("A", "B", "C", "D", "E", "F", "G", "H")
_MULTI_LABEL_SEPARATORS = (";", "|")


@dataclass(frozen=True)
class PatentRecord:
    id: str
    pub_date: date
    category: str

    @property
    def pub_year(self) -> int:
        return self.pub_date.year


@dataclass(frozen=True)
class CitationRecord:
    citing_id: str
    cited_id: str


@dataclass
class IngestReport:
    """Row accounting for one ingest run; dropped rows are counted by
    reason, never fatal."""

    n_patents: int = 0
    n_citations: int = 0
    dropped: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    def drop(self, reason: str, count: int = 1):
        self.dropped[reason] = self.dropped.get(reason, 0) + count


@dataclass(frozen=True, eq=False)
class PatentTables:
    """Validated, deduplicated records; patents ordered by (pub_date, id)."""

    patents: tuple[PatentRecord, ...]
    citations: tuple[CitationRecord, ...]
    labels: tuple[str, ...]
    report: IngestReport


@dataclass(frozen=True, eq=False)
class IndexTable:
    """Per-patent citation counts and cohort-normalized indices.

    Row order matches PatentTables.patents; cit[i, h] is the in-window
    forward-citation count from category h, index[i, h] its cohort
    normalization in [0, 1].
    """

    ids: tuple[str, ...]
    pub_dates: tuple[date, ...]
    categories: tuple[str, ...]
    cit: np.ndarray
    index: np.ndarray
    labels: tuple[str, ...]
    window_years: int


@dataclass(frozen=True, eq=False)
class SuccessMatrix:
    """Binary success labels, rows in publication order.

    X[i, h] = 1 exactly when the index of patent i in category h strictly
    exceeds tau.  categories holds each patent's own (source) category,
    which feeds the per-source counters.
    """

    ids: tuple[str, ...]
    pub_dates: tuple[date, ...]
    categories: tuple[str, ...]
    X: np.ndarray
    tau: float
    labels: tuple[str, ...]


def ingest(patents_csv, citations_csv,
           category_set=DEFAULT_CATEGORIES) -> PatentTables:
    """Parse and validate the two input CSVs.

    patents_csv: header id,pub_date,category with ISO dates; a category
    cell listing several labels keeps the first (warned).  citations_csv:
    header citing_id,cited_id.  Self-citations, unresolvable citations,
    unknown categories, and malformed rows are dropped and counted in the
    report.
    """
    labels = tuple(category_set)
    if len(set(labels)) != len(labels) or not labels:
        raise ParameterOutOfRange("category set must be non-empty and unique")
    report = IngestReport()
    by_id: dict[str, PatentRecord] = {}

    with open(patents_csv, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["id", "pub_date", "category"]:
            raise SchemaError(
                f"{patents_csv}: expected header id,pub_date,category, "
                f"got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 3:
                report.drop("patent_bad_row")
                continue
            pid, rawdate, rawcat = (cell.strip() for cell in row)
            try:
                pub = date.fromisoformat(rawdate)
            except ValueError:
                report.drop("patent_bad_date")
                continue
            cat = _primary_category(rawcat, report, pid)
            if cat not in labels:
                report.drop("patent_unknown_category")
                continue
            rec = PatentRecord(id=pid, pub_date=pub, category=cat)
            prev = by_id.get(pid)
            if prev is None:
                by_id[pid] = rec
            elif prev == rec:
                report.drop("patent_duplicate")
            else:
                report.drop("patent_conflicting_duplicate")
    if not by_id:
        raise EmptyInput(f"{patents_csv}: no usable patent records")

    citations: list[CitationRecord] = []
    seen_pairs: set[tuple[str, str]] = set()
    with open(citations_csv, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["citing_id", "cited_id"]:
            raise SchemaError(
                f"{citations_csv}: expected header citing_id,cited_id, "
                f"got {header}")
        for row in reader:
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 2:
                report.drop("citation_bad_row")
                continue
            citing, cited = (cell.strip() for cell in row)
            if citing == cited:
                report.drop("citation_self")
                continue
            if citing not in by_id or cited not in by_id:
                report.drop("citation_unresolvable")
                continue
            pair = (citing, cited)
            if pair in seen_pairs:
                report.drop("citation_duplicate")
                continue
            seen_pairs.add(pair)
            citations.append(CitationRecord(citing_id=citing, cited_id=cited))

    patents = tuple(sorted(by_id.values(), key=lambda r: (r.pub_date, r.id)))
    report.n_patents = len(patents)
    report.n_citations = len(citations)
    return PatentTables(patents=patents, citations=tuple(citations),
                        labels=labels, report=report)


def _primary_category(raw: str, report: IngestReport, pid: str) -> str:
    for sep in _MULTI_LABEL_SEPARATORS:
        if sep in raw:
            first = raw.split(sep)[0].strip()
            report.warnings.append(
                f"patent {pid}: multiple categories {raw!r}, keeping {first!r}")
            return first
    return raw


def forward_citation_counts(tables: PatentTables, window_years: int) -> IndexTable:
    """Count in-window forward citations per (patent, category).

    A citing patent of category h counts for patent n when its
    publication date lies in [d_n, d_n + 365 * window_years days], both
    endpoints inclusive.
    """
    if window_years < 1:
        raise ParameterOutOfRange(
            f"citation window must be >= 1 year, got {window_years}")
    labels = tables.labels
    col = {lab: h for h, lab in enumerate(labels)}
    row = {rec.id: i for i, rec in enumerate(tables.patents)}
    n = len(tables.patents)
    cit = np.zeros((n, len(labels)), dtype=np.int64)
    window = timedelta(days=365 * window_years)
    for c in tables.citations:
        cited = tables.patents[row[c.cited_id]]
        citing = tables.patents[row[c.citing_id]]
        if cited.pub_date <= citing.pub_date <= cited.pub_date + window:
            cit[row[c.cited_id], col[citing.category]] += 1
    index = compute_index_values(cit, tables.patents)
    return IndexTable(ids=tuple(r.id for r in tables.patents),
                      pub_dates=tuple(r.pub_date for r in tables.patents),
                      categories=tuple(r.category for r in tables.patents),
                      cit=cit, index=index, labels=labels,
                      window_years=window_years)


def compute_index_values(cit: np.ndarray, patents) -> np.ndarray:
    """Cohort-normalized index: each count divided by the maximum count
    over the patent's cohort (same publication year, same own category);
    all-zero cohorts map to 0."""
    n, width = cit.shape
    cohorts: dict[tuple[int, str], list[int]] = {}
    for i, rec in enumerate(patents):
        cohorts.setdefault((rec.pub_year, rec.category), []).append(i)
    index = np.zeros((n, width), dtype=np.float64)
    for members in cohorts.values():
        rows = np.array(members)
        block = cit[rows]
        peak = block.max(axis=0)
        for h in range(width):
            if peak[h] > 0:
                index[rows, h] = block[:, h] / peak[h]
    return index


def success_matrix(table: IndexTable, tau: float) -> SuccessMatrix:
    """Strict thresholding of the index; rows stay in publication order."""
    if not (0.0 <= tau < 1.0):
        raise ParameterOutOfRange(f"tau must be in [0, 1), got {tau}")
    x = (table.index > tau).astype(np.uint8)
    return SuccessMatrix(ids=table.ids, pub_dates=table.pub_dates,
                         categories=table.categories, X=x, tau=float(tau),
                         labels=table.labels)


def threshold_sweep(table: IndexTable, taus) -> list[dict]:
    """Exceedance percentages per threshold and category.

    Returns one record per tau: {"tau": t, "percent": {label: pct}} where
    pct = 100 * #{n : index > tau} / #patents.  Non-increasing in tau by
    construction.
    """
    taus = list(taus)
    if not taus:
        raise ParameterOutOfRange("tau list must be non-empty")
    n = table.index.shape[0]
    out = []
    for tau in taus:
        exceed = (table.index > tau).sum(axis=0)
        out.append({"tau": float(tau),
                    "percent": {lab: 100.0 * int(exceed[h]) / n
                                for h, lab in enumerate(table.labels)}})
    return out


# -- CSV output ---------------------------------------------------------------

def write_success_matrix_csv(sm: SuccessMatrix, path) -> None:
    """Header id,pub_date,category,x_<label>..., rows in trajectory order."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "pub_date", "category"]
                   + [f"x_{lab}" for lab in sm.labels])
        for i in range(len(sm.ids)):
            w.writerow([sm.ids[i], sm.pub_dates[i].isoformat(), sm.categories[i]]
                       + [int(v) for v in sm.X[i]])


def read_success_matrix_csv(path) -> SuccessMatrix:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if (header is None or header[:3] != ["id", "pub_date", "category"]
                or not all(col.startswith("x_") for col in header[3:])
                or len(header) < 4):
            raise SchemaError(f"{path}: not a success-matrix CSV (header {header})")
        labels = tuple(col[2:] for col in header[3:])
        ids, dates, cats, rows = [], [], [], []
        for row in reader:
            if not row:
                continue
            ids.append(row[0])
            dates.append(date.fromisoformat(row[1]))
            cats.append(row[2])
            rows.append([int(v) for v in row[3:]])
    if not ids:
        raise EmptyInput(f"{path}: no rows")
    x = np.array(rows, dtype=np.uint8)
    return SuccessMatrix(ids=tuple(ids), pub_dates=tuple(dates),
                         categories=tuple(cats), X=x, tau=float("nan"),
                         labels=labels)


def write_sweep_csv(sweep: list[dict], path) -> None:
    """Tidy layout: tau, category, percent."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["tau", "category", "percent"])
        for rec in sweep:
            for lab, pct in rec["percent"].items():
                w.writerow([repr(float(rec["tau"])), lab, repr(float(pct))])


def write_index_csv(table: IndexTable, path) -> None:
    """Header id,pub_date,category,cit_<label>...,I_<label>..."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "pub_date", "category"]
                   + [f"cit_{lab}" for lab in table.labels]
                   + [f"I_{lab}" for lab in table.labels])
        for i in range(len(table.ids)):
            w.writerow([table.ids[i], table.pub_dates[i].isoformat(),
                        table.categories[i]]
                       + [int(v) for v in table.cit[i]]
                       + [repr(float(v)) for v in table.index[i]])
