"""Synthetic stand-ins for the five benchmark datasets.

Each generator produces a desk-scale table matching the public dataset's
schema shape: same task kind, a protected attribute where fairness is
evaluated, a datetime column where temporal faults apply, and a learnable
signal with group-dependent base rates so disparity metrics are non-trivial.
The repo ships the generated copies; `python -m agentaudit.synth OUT_DIR`
regenerates them.
"""

from __future__ import annotations

import csv
import json
from datetime import date, timedelta
from pathlib import Path

import numpy as np


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def _dates(rng, n: int, start: str, span_days: int) -> list[str]:
    base = date.fromisoformat(start)
    offsets = np.sort(rng.integers(0, span_days, size=n))
    return [(base + timedelta(days=int(o))).isoformat() for o in offsets]


def _feat(name, kind, protected=False):
    return {"name": name, "kind": kind, "protected": protected}


def make_german_credit(seed: int = 101) -> tuple[list[dict], dict]:
    rng = np.random.default_rng(seed)
    n = 1000
    age = rng.integers(19, 75, n)
    sex = rng.choice(["male", "female"], n, p=[0.69, 0.31])
    dates = _dates(rng, n, "2015-01-05", 720)
    amount = np.round(np.exp(rng.normal(8.0, 0.7, n))).astype(int)
    duration = rng.choice(np.arange(6, 61, 3), n)
    checking = rng.choice(["none", "low", "mid", "high"], n, p=[0.4, 0.27, 0.21, 0.12])
    savings = rng.choice(["none", "low", "mid", "high"], n, p=[0.18, 0.6, 0.15, 0.07])
    employment = rng.integers(0, 31, n)
    installment = rng.integers(1, 5, n)
    residence = rng.integers(1, 5, n)
    credits = rng.integers(1, 4, n)
    job = rng.choice(["unskilled", "skilled", "management"], n, p=[0.2, 0.63, 0.17])
    dependents = rng.integers(1, 3, n)
    telephone = rng.choice(["yes", "no"], n, p=[0.4, 0.6])
    foreign = rng.choice(["yes", "no"], n, p=[0.96, 0.04])
    purpose = rng.choice(["car", "furniture", "radio_tv", "education", "business"], n)
    housing = rng.choice(["own", "rent", "free"], n, p=[0.71, 0.18, 0.11])
    prop = rng.choice(["real_estate", "insurance", "car", "none"], n)
    parties = rng.choice(["none", "co_applicant", "guarantor"], n, p=[0.9, 0.05, 0.05])
    history = rng.choice(["paid", "delayed", "critical"], n, p=[0.55, 0.3, 0.15])

    score = (-1.35 + 0.00009 * (amount - 3200) + 0.030 * (duration - 24)
             - 0.012 * (age - 35) + 0.55 * (checking == "none")
             + 0.35 * (savings == "none") + 0.30 * (history == "critical")
             + 0.16 * (sex == "female") - 0.2 * (housing == "own"))
    bad = rng.random(n) < _sigmoid(score)
    rows = []
    for i in range(n):
        rows.append({
            "age": int(age[i]), "sex": sex[i], "application_date": dates[i],
            "credit_amount": int(amount[i]), "duration_months": int(duration[i]),
            "checking_status": checking[i], "savings_status": savings[i],
            "employment_years": int(employment[i]), "installment_rate": int(installment[i]),
            "residence_since": int(residence[i]), "existing_credits": int(credits[i]),
            "job": job[i], "num_dependents": int(dependents[i]), "telephone": telephone[i],
            "foreign_worker": foreign[i], "purpose": purpose[i], "housing": housing[i],
            "property": prop[i], "other_parties": parties[i], "credit_history": history[i],
            "credit_risk": "bad" if bad[i] else "good",
        })
    schema = {
        "name": "german_credit", "task_kind": "classification", "target": "credit_risk",
        "positive_label": "bad", "metric_primary": "accuracy",
        "split": {"seed": 13, "test_fraction": 0.2},
        "features": [
            _feat("age", "numeric"), _feat("sex", "categorical", True),
            _feat("application_date", "datetime"), _feat("credit_amount", "numeric"),
            _feat("duration_months", "numeric"), _feat("checking_status", "categorical"),
            _feat("savings_status", "categorical"), _feat("employment_years", "numeric"),
            _feat("installment_rate", "numeric"), _feat("residence_since", "numeric"),
            _feat("existing_credits", "numeric"), _feat("job", "categorical"),
            _feat("num_dependents", "numeric"), _feat("telephone", "categorical"),
            _feat("foreign_worker", "categorical"), _feat("purpose", "categorical"),
            _feat("housing", "categorical"), _feat("property", "categorical"),
            _feat("other_parties", "categorical"), _feat("credit_history", "categorical"),
        ],
    }
    return rows, schema


def make_adult(seed: int = 102) -> tuple[list[dict], dict]:
    rng = np.random.default_rng(seed)
    n = 2000
    age = rng.integers(17, 80, n)
    workclass = rng.choice(["private", "self_employed", "government", "other"], n,
                           p=[0.7, 0.12, 0.13, 0.05])
    education_num = rng.integers(4, 17, n)
    education = np.array(["hs" if e < 10 else ("some_college" if e < 13 else "degree")
                          for e in education_num], dtype=object)
    marital = rng.choice(["married", "never_married", "divorced", "widowed"], n,
                         p=[0.46, 0.33, 0.14, 0.07])
    occupation = rng.choice(["craft", "professional", "sales", "service", "admin", "transport"], n)
    relationship = rng.choice(["husband", "wife", "own_child", "unmarried", "other"], n,
                              p=[0.4, 0.05, 0.16, 0.26, 0.13])
    race = rng.choice(["white", "black", "asian", "other"], n, p=[0.78, 0.12, 0.06, 0.04])
    sex = rng.choice(["male", "female"], n, p=[0.67, 0.33])
    gain = np.where(rng.random(n) < 0.08, np.round(np.exp(rng.normal(8.5, 1.0, n))), 0.0)
    loss = np.where(rng.random(n) < 0.05, np.round(np.exp(rng.normal(7.2, 0.5, n))), 0.0)
    hours = np.clip(rng.normal(40, 11, n), 5, 95).round().astype(int)
    region = rng.choice(["north", "south", "east", "west"], n)
    fnlwgt = rng.integers(20000, 500000, n)

    score = (-2.9 + 0.23 * (education_num - 9) + 0.028 * (age - 38)
             + 0.025 * (hours - 40) + 0.00012 * gain + 0.9 * (marital == "married")
             + 0.42 * (sex == "male") + 0.18 * (race == "white"))
    high = rng.random(n) < _sigmoid(score)
    rows = []
    for i in range(n):
        rows.append({
            "age": int(age[i]), "workclass": workclass[i], "education_num": int(education_num[i]),
            "education": education[i], "marital_status": marital[i], "occupation": occupation[i],
            "relationship": relationship[i], "race": race[i], "sex": sex[i],
            "capital_gain": float(gain[i]), "capital_loss": float(loss[i]),
            "hours_per_week": int(hours[i]), "native_region": region[i],
            "fnlwgt": int(fnlwgt[i]),
            "income": ">50K" if high[i] else "<=50K",
        })
    schema = {
        "name": "adult", "task_kind": "classification", "target": "income",
        "positive_label": ">50K", "metric_primary": "accuracy",
        "split": {"seed": 17, "test_fraction": 0.2},
        "features": [
            _feat("age", "numeric"), _feat("workclass", "categorical"),
            _feat("education_num", "numeric"), _feat("education", "categorical"),
            _feat("marital_status", "categorical"), _feat("occupation", "categorical"),
            _feat("relationship", "categorical"), _feat("race", "categorical", True),
            _feat("sex", "categorical", True), _feat("capital_gain", "numeric"),
            _feat("capital_loss", "numeric"), _feat("hours_per_week", "numeric"),
            _feat("native_region", "categorical"), _feat("fnlwgt", "numeric"),
        ],
    }
    return rows, schema


def make_titanic(seed: int = 103) -> tuple[list[dict], dict]:
    rng = np.random.default_rng(seed)
    n = 1300
    pclass = rng.choice([1, 2, 3], n, p=[0.24, 0.21, 0.55])
    sex = rng.choice(["male", "female"], n, p=[0.64, 0.36])
    age = np.clip(rng.normal(30, 13, n), 1, 80).round(1)
    sibsp = rng.choice([0, 1, 2, 3, 4], n, p=[0.68, 0.23, 0.06, 0.02, 0.01])
    parch = rng.choice([0, 1, 2, 3], n, p=[0.76, 0.13, 0.09, 0.02])
    fare = np.round(np.exp(rng.normal(3.0, 0.9, n)) + (3 - pclass) * 18, 2)
    embarked = rng.choice(["S", "C", "Q"], n, p=[0.72, 0.19, 0.09])
    dates = _dates(rng, n, "1912-03-20", 21)
    deck = rng.choice(["A", "B", "C", "D", "E", "unknown"], n,
                      p=[0.04, 0.08, 0.1, 0.08, 0.07, 0.63])
    title = np.where(sex == "female",
                     rng.choice(["mrs", "miss"], n), rng.choice(["mr", "master"], n, p=[0.92, 0.08]))
    alone = np.where((sibsp + parch) == 0, "yes", "no")

    score = (-0.8 + 2.3 * (sex == "female") - 0.55 * (pclass - 2)
             - 0.012 * (age - 30) + 0.004 * fare - 0.15 * sibsp)
    survived = rng.random(n) < _sigmoid(score)
    rows = []
    for i in range(n):
        rows.append({
            "pclass": int(pclass[i]), "sex": sex[i], "age": float(age[i]),
            "sibsp": int(sibsp[i]), "parch": int(parch[i]), "fare": float(fare[i]),
            "embarked": embarked[i], "boarding_date": dates[i], "cabin_deck": deck[i],
            "title": title[i], "is_alone": alone[i],
            "survived": int(survived[i]),
        })
    schema = {
        "name": "titanic", "task_kind": "classification", "target": "survived",
        "positive_label": "1", "metric_primary": "accuracy",
        "split": {"seed": 19, "test_fraction": 0.2},
        "features": [
            _feat("pclass", "numeric"), _feat("sex", "categorical", True),
            _feat("age", "numeric"), _feat("sibsp", "numeric"), _feat("parch", "numeric"),
            _feat("fare", "numeric"), _feat("embarked", "categorical"),
            _feat("boarding_date", "datetime"), _feat("cabin_deck", "categorical"),
            _feat("title", "categorical"), _feat("is_alone", "categorical"),
        ],
    }
    return rows, schema


def make_diabetes(seed: int = 104) -> tuple[list[dict], dict]:
    rng = np.random.default_rng(seed)
    n = 442
    age = rng.integers(19, 80, n)
    sex = rng.choice(["male", "female"], n, p=[0.53, 0.47])
    bmi = np.round(np.clip(rng.normal(26.4, 4.3, n), 18.0, 42.0), 1)
    bp = np.round(np.clip(rng.normal(94.6, 13.8, n), 62.0, 133.0), 1)
    s1 = np.round(rng.normal(189.1, 34.6, n), 1)
    s2 = np.round(rng.normal(115.4, 30.4, n), 1)
    s3 = np.round(np.clip(rng.normal(49.8, 12.9, n), 22.0, 99.0), 1)
    s4 = np.round(np.clip(rng.normal(4.07, 1.29, n), 1.5, 9.1), 2)
    ratio = np.round(s1 / np.maximum(s3, 1.0), 2)
    dates = _dates(rng, n, "2016-02-01", 540)

    progression = (152.0 + 6.2 * (bmi - 26.4) + 1.1 * (bp - 94.6)
                   + 0.35 * (s1 - 189.1) - 0.9 * (s3 - 49.8)
                   + 5.0 * (sex == "male") + 0.3 * (age - 48)
                   + rng.normal(0, 24.0, n))
    progression = np.round(np.clip(progression, 25.0, 346.0), 1)
    rows = []
    for i in range(n):
        rows.append({
            "age": int(age[i]), "sex": sex[i], "bmi": float(bmi[i]), "bp": float(bp[i]),
            "s1": float(s1[i]), "s2": float(s2[i]), "s3": float(s3[i]), "s4": float(s4[i]),
            "serum_ratio": float(ratio[i]), "visit_date": dates[i],
            "progression": float(progression[i]),
        })
    schema = {
        "name": "diabetes", "task_kind": "regression", "target": "progression",
        "metric_primary": "rmse",
        "split": {"seed": 23, "test_fraction": 0.2},
        "features": [
            _feat("age", "numeric"), _feat("sex", "categorical"), _feat("bmi", "numeric"),
            _feat("bp", "numeric"), _feat("s1", "numeric"), _feat("s2", "numeric"),
            _feat("s3", "numeric"), _feat("s4", "numeric"), _feat("serum_ratio", "numeric"),
            _feat("visit_date", "datetime"),
        ],
    }
    return rows, schema


def make_ca_housing(seed: int = 105) -> tuple[list[dict], dict]:
    rng = np.random.default_rng(seed)
    n = 2000
    income = np.round(np.clip(np.exp(rng.normal(1.17, 0.45, n)), 0.5, 15.0), 4)
    house_age = rng.integers(1, 53, n)
    rooms = np.round(np.clip(rng.normal(5.4, 1.2, n), 1.5, 10.0), 3)
    bedrooms = np.round(np.clip(rooms / rng.uniform(3.5, 6.5, n), 0.5, 3.0), 3)
    population = rng.integers(300, 6000, n)
    occupancy = np.round(np.clip(rng.normal(3.0, 0.9, n), 1.0, 8.0), 3)
    lat = np.round(rng.uniform(32.6, 41.9, n), 2)
    lon = np.round(rng.uniform(-124.3, -114.4, n), 2)
    ocean = rng.choice(["inland", "near_bay", "near_ocean", "one_h_ocean"], n,
                       p=[0.42, 0.14, 0.17, 0.27])

    value = (115000 + 52000 * (income - 3.2) + 21000 * (ocean != "inland")
             - 900 * (house_age - 27) + 7000 * (rooms - 5.4)
             - 5200 * (lat - 37.0) + rng.normal(0, 28000, n))
    value = np.round(np.clip(value, 22000, 500001), 0)
    rows = []
    for i in range(n):
        rows.append({
            "median_income": float(income[i]), "house_age": int(house_age[i]),
            "avg_rooms": float(rooms[i]), "avg_bedrooms": float(bedrooms[i]),
            "population": int(population[i]), "avg_occupancy": float(occupancy[i]),
            "latitude": float(lat[i]), "longitude": float(lon[i]),
            "ocean_proximity": ocean[i],
            "median_house_value": float(value[i]),
        })
    schema = {
        "name": "ca_housing", "task_kind": "regression", "target": "median_house_value",
        "metric_primary": "rmse",
        "split": {"seed": 29, "test_fraction": 0.2},
        "features": [
            _feat("median_income", "numeric"), _feat("house_age", "numeric"),
            _feat("avg_rooms", "numeric"), _feat("avg_bedrooms", "numeric"),
            _feat("population", "numeric"), _feat("avg_occupancy", "numeric"),
            _feat("latitude", "numeric"), _feat("longitude", "numeric"),
            _feat("ocean_proximity", "categorical"),
        ],
    }
    return rows, schema


GENERATORS = {
    "german_credit": make_german_credit,
    "adult": make_adult,
    "titanic": make_titanic,
    "diabetes": make_diabetes,
    "ca_housing": make_ca_housing,
}


def write_fixtures(out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, gen in GENERATORS.items():
        rows, schema = gen()
        csv_path = out / f"{name}.csv"
        with csv_path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
            writer.writeheader()
            writer.writerows(rows)
        schema_path = out / f"{name}.schema.json"
        schema_path.write_text(json.dumps(schema, indent=1) + "\n", encoding="utf-8")
        written += [csv_path, schema_path]
    return written


if __name__ == "__main__":
    import sys

    target = sys.argv[1] if len(sys.argv) > 1 else "src/agentaudit/fixtures"
    for p in write_fixtures(target):
        print(p)
