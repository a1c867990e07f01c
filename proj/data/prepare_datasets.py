#!/usr/bin/env python3
"""Rebuild the preprocessed benchmark CSVs in this directory from raw files.

Raw inputs (as distributed in the `fairness` PyPI wheel, data/raw/):
  german.csv                 UCI Statlog German credit, symbolic codes
  propublica-recidivism.csv  ProPublica compas-scores-two-years
  adult.csv                  UCI Adult (training portion)

The transforms follow the usual AIF360 dataset defaults:
  German  label credit_good (1 = good risk, favorable), protected young = age <= 25,
          personal_status collapsed to a binary male column, age replaced by the
          binary group column.
  COMPAS  ProPublica screening filters (|days_b_screening_arrest| <= 30,
          is_recid != -1, c_charge_degree != 'O', score_text != 'N/A'), rows with
          missing charge descriptions dropped, label two_year_recid (0 favorable),
          protected non_caucasian, female kept as a binary feature.
  Adult   rows containing '?' dropped, fnlwgt dropped, label high_income
          (1 favorable), protected female, race collapsed to binary white.

Categorical columns stay as strings; the loader one-hot encodes them.
Commas inside category values are replaced with ';'.

usage: prepare_datasets.py RAW_DIR OUT_DIR
"""
import csv
import sys
from pathlib import Path


def clean(v):
    return v.strip().replace(",", ";")


def write(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    print(f"{path}: {len(rows)} rows, {len(header)} columns")


def german(raw, out):
    rows = list(csv.DictReader(open(raw / "german.csv")))
    male = {"A91": 1, "A93": 1, "A94": 1, "A92": 0, "A95": 0}
    header = ["status", "month", "credit_history", "purpose", "credit_amount",
              "savings", "employment", "investment_as_income_percentage", "male",
              "other_debtors", "residence_since", "property", "young",
              "installment_plans", "housing", "number_of_credits", "skill_level",
              "people_liable_for", "telephone", "foreign_worker", "credit_good"]
    data = []
    for r in rows:
        data.append([
            r["status"], r["month"], r["credit_history"], r["purpose"],
            r["credit_amount"], r["savings"], r["employment"],
            r["investment_as_income_percentage"], male[r["personal_status"]],
            r["other_debtors"], r["residence_since"], r["property"],
            1 if int(r["age"]) <= 25 else 0,
            r["installment_plans"], r["housing"], r["number_of_credits"],
            r["skill_level"], r["people_liable_for"], r["telephone"],
            r["foreign_worker"], 1 if r["credit"] == "1" else 0,
        ])
    write(out / "german.csv", header, data)


def compas(raw, out):
    reader = csv.reader(open(raw / "propublica-recidivism.csv"))
    head = next(reader)
    col = {}
    for i, name in enumerate(head):
        col.setdefault(name, i)  # first occurrence of duplicated columns
    header = ["female", "age", "age_cat", "non_caucasian", "juv_fel_count",
              "juv_misd_count", "juv_other_count", "priors_count",
              "c_charge_degree", "c_charge_desc", "two_year_recid"]
    data = []
    for r in reader:
        g = lambda k: r[col[k]].strip()
        if g("days_b_screening_arrest") == "":
            continue
        days = int(g("days_b_screening_arrest"))
        if days > 30 or days < -30 or g("is_recid") == "-1":
            continue
        if g("c_charge_degree") == "O" or g("score_text") == "N/A":
            continue
        if g("c_charge_desc") == "":
            continue
        data.append([
            1 if g("sex") == "Female" else 0, g("age"), clean(g("age_cat")),
            0 if g("race") == "Caucasian" else 1, g("juv_fel_count"),
            g("juv_misd_count"), g("juv_other_count"), g("priors_count"),
            g("c_charge_degree"), clean(g("c_charge_desc")), g("two_year_recid"),
        ])
    write(out / "compas.csv", header, data)


def adult(raw, out):
    rows = list(csv.DictReader(open(raw / "adult.csv"), skipinitialspace=True))
    header = ["age", "workclass", "education", "education_num", "marital_status",
              "occupation", "relationship", "white", "female", "capital_gain",
              "capital_loss", "hours_per_week", "native_country", "high_income"]
    data = []
    for r in rows:
        if any(v.strip() == "?" for v in r.values()):
            continue
        data.append([
            r["age"], clean(r["workclass"]), clean(r["education"]),
            r["education-num"], clean(r["marital-status"]),
            clean(r["occupation"]), clean(r["relationship"]),
            1 if r["race"].strip() == "White" else 0,
            1 if r["sex"].strip() == "Female" else 0,
            r["capital-gain"], r["capital-loss"], r["hours-per-week"],
            clean(r["native-country"]),
            1 if r["income-per-year"].strip().startswith(">50K") else 0,
        ])
    write(out / "adult.csv", header, data)


if __name__ == "__main__":
    if len(sys.argv) != 3:
        sys.exit(__doc__)
    raw, out = Path(sys.argv[1]), Path(sys.argv[2])
    german(raw, out)
    compas(raw, out)
    adult(raw, out)
