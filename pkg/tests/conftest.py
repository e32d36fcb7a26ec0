import sys
from datetime import date
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from reclink.records import Dataset, PatientRecord, RecordPair


def make_record(record_id="A000001", source="A", first="JOHN", middle="A",
                last="DOE", dob=date(1970, 1, 1), sex="M",
                ssn="900123456", address="12 MAIN ST"):
    return PatientRecord(
        record_id=record_id, source=source, first_name=first,
        middle_name=middle, last_name=last, birth_date=dob, sex=sex,
        ssn=ssn, address=address,
    )


def make_pair(**overrides):
    left_kwargs = {k[2:]: v for k, v in overrides.items() if k.startswith("l_")}
    right_kwargs = {k[2:]: v for k, v in overrides.items() if k.startswith("r_")}
    left = make_record(record_id="A000001", source="A", **left_kwargs)
    right = make_record(record_id="B000001", source="B", **right_kwargs)
    return RecordPair(left, right)


def make_dataset(records, source):
    return Dataset(records=tuple(records), source=source,
                   path="<test>", row_count=len(records))


@pytest.fixture
def identical_pair():
    return make_pair()


@pytest.fixture
def golden_dir():
    return Path(__file__).parent / "golden"
