"""Seeded synthetic patient-corpus generator.

Samples latent identities from bundled census-style name pools, places each
into source A and/or source B independently, and degrades only the B-side
copies: name corruption, birth-day jitter (month and year untouched), and
heavy SSN/address masking. Source A plays the clean consolidated registry,
source B the noisy feed. SSNs use the never-issued 9xx area range.

Output is fully deterministic for a given spec and seed.
"""

from __future__ import annotations

import csv
import random
from dataclasses import dataclass, field, replace
from datetime import date
from importlib import resources
from pathlib import Path

from .errors import ConfigError
from .records import Dataset, PatientRecord, write_records_csv


@dataclass(frozen=True)
class PerturbationProfile:
    """B-side corruption rates.

    Each record draws at most one name corruption (typo on one name field,
    nickname swap, or middle-name initialing); uncorrelated multi-field
    corruption is rare in practice and would defeat the band analyses this
    generator exists to support. Addresses may independently pick up one
    typo. Casing is fixed upper throughout.
    """

    typo_rate: float = 0.05
    nickname_swap_rate: float = 0.03
    middle_initial_rate: float = 0.04
    dob_day_jitter_rate: float = 0.03
    address_typo_rate: float = 0.10

    def __post_init__(self):
        for name in ("typo_rate", "nickname_swap_rate", "middle_initial_rate",
                     "dob_day_jitter_rate", "address_typo_rate"):
            rate = getattr(self, name)
            if not (0.0 <= rate <= 1.0):
                raise ConfigError(f"{name} must lie in [0,1], got {rate}")
        name_total = self.typo_rate + self.nickname_swap_rate + self.middle_initial_rate
        if name_total > 1.0:
            raise ConfigError(
                f"name corruption rates sum to {name_total}, must be <= 1"
            )


@dataclass(frozen=True)
class CorpusSpec:
    """Shape of a generated corpus."""

    n_persons: int = 5000
    p_in_a: float = 0.8
    p_in_b: float = 0.75
    missing_ssn_b: float = 0.97
    missing_addr_b: float = 0.81
    perturb: PerturbationProfile = field(default_factory=PerturbationProfile)
    seed: int = 20_240_601
    birth_year_min: int = 1935
    birth_year_max: int = 2005
    middle_name_rate: float = 0.7
    name_pool_limit: int | None = None

    def __post_init__(self):
        if self.n_persons < 1:
            raise ConfigError(f"n_persons must be >= 1, got {self.n_persons}")
        for name in ("p_in_a", "p_in_b", "missing_ssn_b", "missing_addr_b",
                     "middle_name_rate"):
            val = getattr(self, name)
            if not (0.0 <= val <= 1.0):
                raise ConfigError(f"{name} must lie in [0,1], got {val}")
        if self.birth_year_min > self.birth_year_max:
            raise ConfigError("birth_year_min must not exceed birth_year_max")
        if self.name_pool_limit is not None and self.name_pool_limit < 1:
            raise ConfigError("name_pool_limit must be >= 1")


def _load_pool(filename: str, limit: int | None) -> list[str]:
    text = resources.files("reclink.data").joinpath(filename).read_text("utf-8")
    pool = [line.strip() for line in text.splitlines() if line.strip()]
    if limit is not None:
        pool = pool[:limit]
    if not pool:
        raise ConfigError(f"name pool {filename} is empty")
    return pool


def _load_nicknames() -> dict[str, str]:
    text = resources.files("reclink.data").joinpath("nicknames.txt").read_text("utf-8")
    table = {}
    for line in text.splitlines():
        if line.strip():
            formal, nick = line.split()
            table[formal] = nick
    return table


def _typo(text: str, rng: random.Random) -> str:
    """One character substitution or adjacent transposition."""
    if len(text) >= 2 and rng.random() < 0.5:
        i = rng.randrange(len(text) - 1)
        if text[i] != text[i + 1]:
            return text[:i] + text[i + 1] + text[i] + text[i + 2:]
    i = rng.randrange(len(text))
    alphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
    repl = rng.choice(alphabet)
    while repl == text[i]:
        repl = rng.choice(alphabet)
    return text[:i] + repl + text[i + 1:]


@dataclass(frozen=True)
class _Person:
    first: str
    middle: str | None
    last: str
    dob: date
    sex: str
    ssn: str
    address: str


def _sample_person(rng: random.Random, pools, spec: CorpusSpec) -> _Person:
    first_f, first_m, last, streets = pools
    sex = "F" if rng.random() < 0.5 else "M"
    first_pool = first_f if sex == "F" else first_m
    middle = None
    if rng.random() < spec.middle_name_rate:
        middle = rng.choice(first_pool)
    year = rng.randint(spec.birth_year_min, spec.birth_year_max)
    dob = date(year, rng.randint(1, 12), rng.randint(1, 28))
    ssn = "9" + f"{rng.randrange(10**8):08d}"
    address = f"{rng.randint(1, 9999)} {rng.choice(streets)}"
    return _Person(
        first=rng.choice(first_pool), middle=middle, last=rng.choice(last),
        dob=dob, sex=sex, ssn=ssn, address=address,
    )


def _perturb_b_side(person: _Person, rng: random.Random, spec: CorpusSpec,
                    nicknames: dict[str, str]) -> _Person:
    p = spec.perturb
    out = person

    # At most one name corruption per record (see PerturbationProfile).
    roll = rng.random()
    if roll < p.typo_rate:
        targets = ["first", "last"] + (["middle"] if out.middle else [])
        target = rng.choice(targets)
        out = replace(out, **{target: _typo(getattr(out, target), rng)})
    elif roll < p.typo_rate + p.nickname_swap_rate:
        nick = nicknames.get(out.first)
        if nick is not None:
            out = replace(out, first=nick)
    elif roll < p.typo_rate + p.nickname_swap_rate + p.middle_initial_rate:
        if out.middle and len(out.middle) > 1:
            out = replace(out, middle=out.middle[0])

    if rng.random() < p.dob_day_jitter_rate:
        day = rng.randint(1, 28)
        while day == out.dob.day:
            day = rng.randint(1, 28)
        out = replace(out, dob=out.dob.replace(day=day))

    if rng.random() < p.address_typo_rate:
        out = replace(out, address=_typo(out.address, rng))
    return out


def generate_corpus(spec: CorpusSpec):
    """Generate (dataset_a, dataset_b, truth).

    truth is the set of (a_record_id, b_record_id) pairs sharing a latent
    identity. Each person enters A with p_in_a and B with p_in_b
    independently; every record carries a zero-padded positional id.
    """
    rng = random.Random(spec.seed)
    pools = (
        _load_pool("first_names_f.txt", spec.name_pool_limit),
        _load_pool("first_names_m.txt", spec.name_pool_limit),
        _load_pool("last_names.txt", spec.name_pool_limit),
        _load_pool("streets.txt", None),
    )
    nicknames = _load_nicknames()
    width = max(6, len(str(spec.n_persons)))

    records_a: list[PatientRecord] = []
    records_b: list[PatientRecord] = []
    truth: set[tuple[str, str]] = set()

    for idx in range(spec.n_persons):
        person = _sample_person(rng, pools, spec)
        in_a = rng.random() < spec.p_in_a
        in_b = rng.random() < spec.p_in_b

        a_id = f"A{idx:0{width}d}"
        b_id = f"B{idx:0{width}d}"
        if in_a:
            records_a.append(PatientRecord(
                record_id=a_id, source="A",
                first_name=person.first, middle_name=person.middle,
                last_name=person.last, birth_date=person.dob, sex=person.sex,
                ssn=person.ssn, address=person.address,
            ))
        if in_b:
            noisy = _perturb_b_side(person, rng, spec, nicknames)
            records_b.append(PatientRecord(
                record_id=b_id, source="B",
                first_name=noisy.first, middle_name=noisy.middle,
                last_name=noisy.last, birth_date=noisy.dob, sex=noisy.sex,
                ssn=None if rng.random() < spec.missing_ssn_b else noisy.ssn,
                address=None if rng.random() < spec.missing_addr_b else noisy.address,
            ))
        if in_a and in_b:
            truth.add((a_id, b_id))

    dataset_a = Dataset(records=tuple(records_a), source="A",
                        path="<generated>", row_count=len(records_a))
    dataset_b = Dataset(records=tuple(records_b), source="B",
                        path="<generated>", row_count=len(records_b))
    return dataset_a, dataset_b, truth


def write_truth_csv(truth, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["left_id", "right_id"])
        for left_id, right_id in sorted(truth):
            writer.writerow([left_id, right_id])


def read_truth_csv(path) -> set[tuple[str, str]]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        return {(row["left_id"], row["right_id"]) for row in reader}


def write_corpus(spec: CorpusSpec, out_dir) -> dict[str, str]:
    """Generate and write a.csv, b.csv and truth.csv under out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    dataset_a, dataset_b, truth = generate_corpus(spec)
    paths = {
        "a": str(out / "a.csv"),
        "b": str(out / "b.csv"),
        "truth": str(out / "truth.csv"),
    }
    write_records_csv(dataset_a.records, paths["a"])
    write_records_csv(dataset_b.records, paths["b"])
    write_truth_csv(truth, paths["truth"])
    return paths


# Documented preset approximating the published corpus's candidate-pair
# class balance (roughly 6% matches among rule-blocked candidates): a dense
# single-year birth cohort makes birth-date collisions, and thus non-match
# candidates, far more common than under the default spread.
TABLE2_RATIO_SPEC = CorpusSpec(
    n_persons=6000,
    p_in_a=0.6,
    p_in_b=0.35,
    birth_year_min=1950,
    birth_year_max=1950,
    name_pool_limit=80,
    seed=20_240_602,
)
