#!/usr/bin/env python3
"""Write the generalization ladders used by configs/adult.yaml and configs/student.yaml.

Categorical ladders follow the groupings commonly shipped with ARX's Adult
example; numeric ones are zero-aligned interval ladders. The Student ladders
cover the full attribute domains from the UCI dataset description, so they can
be generated without the data file.

    python scripts/make_hierarchies.py [--adult data/adult/adult.csv]
"""

import argparse
import csv
from pathlib import Path

from petbench.hierarchy import Hierarchy, synthesize_interval_hierarchy

ROOT = Path(__file__).resolve().parent.parent

WORKCLASS = {
    "Private": "Private",
    "Self-emp-not-inc": "Self-employed", "Self-emp-inc": "Self-employed",
    "Federal-gov": "Government", "Local-gov": "Government", "State-gov": "Government",
    "Without-pay": "Unemployed", "Never-worked": "Unemployed",
}

EDUCATION = {
    "Preschool": ("Primary school", "Primary education"),
    "1st-4th": ("Primary school", "Primary education"),
    "5th-6th": ("Primary school", "Primary education"),
    "7th-8th": ("High school", "Secondary education"),
    "9th": ("High school", "Secondary education"),
    "10th": ("High school", "Secondary education"),
    "11th": ("High school", "Secondary education"),
    "12th": ("High school", "Secondary education"),
    "HS-grad": ("High school", "Secondary education"),
    "Some-college": ("Undergraduate", "Higher education"),
    "Bachelors": ("Undergraduate", "Higher education"),
    "Assoc-acdm": ("Professional education", "Higher education"),
    "Assoc-voc": ("Professional education", "Higher education"),
    "Prof-school": ("Professional education", "Higher education"),
    "Masters": ("Graduate", "Higher education"),
    "Doctorate": ("Graduate", "Higher education"),
}

MARITAL = {
    "Married-civ-spouse": "Spouse present", "Married-AF-spouse": "Spouse present",
    "Married-spouse-absent": "Spouse not present", "Divorced": "Spouse not present",
    "Never-married": "Spouse not present", "Separated": "Spouse not present",
    "Widowed": "Spouse not present",
}

OCCUPATION = {
    "Tech-support": "Technical", "Craft-repair": "Technical", "Prof-specialty": "Technical",
    "Machine-op-inspct": "Technical", "Protective-serv": "Technical",
    "Sales": "Nontechnical", "Exec-managerial": "Nontechnical", "Adm-clerical": "Nontechnical",
    "Handlers-cleaners": "Nontechnical", "Transport-moving": "Nontechnical",
    "Farming-fishing": "Nontechnical",
    "Other-service": "Other", "Priv-house-serv": "Other", "Armed-Forces": "Other",
}

COUNTRY = {
    "United-States": "North America", "Canada": "North America",
    "Outlying-US(Guam-USVI-etc)": "North America", "Mexico": "Central America",
    "Cuba": "Central America", "Jamaica": "Central America", "Honduras": "Central America",
    "Dominican-Republic": "Central America", "El-Salvador": "Central America",
    "Guatemala": "Central America", "Haiti": "Central America", "Nicaragua": "Central America",
    "Puerto-Rico": "Central America", "Trinadad&Tobago": "Central America",
    "Columbia": "South America", "Ecuador": "South America", "Peru": "South America",
    "England": "Europe", "Germany": "Europe", "Greece": "Europe", "Italy": "Europe",
    "Poland": "Europe", "Portugal": "Europe", "Ireland": "Europe", "France": "Europe",
    "Hungary": "Europe", "Scotland": "Europe", "Yugoslavia": "Europe",
    "Holand-Netherlands": "Europe",
    "India": "Asia", "Japan": "Asia", "China": "Asia", "Iran": "Asia", "Philippines": "Asia",
    "Vietnam": "Asia", "Taiwan": "Asia", "Thailand": "Asia", "Cambodia": "Asia", "Laos": "Asia",
    "Hong": "Asia", "South": "Asia",
}

RACE = ["White", "Black", "Asian-Pac-Islander", "Amer-Indian-Eskimo", "Other"]
SEX = ["Male", "Female"]


def flat(attribute, values):
    return Hierarchy(attribute, {v: (v, "*") for v in values})


def grouped(attribute, mapping):
    table = {}
    for value, groups in mapping.items():
        groups = groups if isinstance(groups, tuple) else (groups,)
        table[value] = (value, *groups, "*")
    return Hierarchy(attribute, table)


def adult_ages(path: Path) -> list[str]:
    with path.open(newline="") as fh:
        ages = {row["age"].strip() for row in csv.DictReader(fh)}
    return sorted(ages, key=int)


def adult(adult_csv: Path) -> dict[str, Hierarchy]:
    return {
        "age": synthesize_interval_hierarchy(adult_ages(adult_csv), [5, 10, 20], "age"),
        "workclass": grouped("workclass", WORKCLASS),
        "education": grouped("education", EDUCATION),
        "marital-status": grouped("marital-status", MARITAL),
        "occupation": grouped("occupation", OCCUPATION),
        "native-country": grouped("native-country", COUNTRY),
        "race": flat("race", RACE),
        "sex": flat("sex", SEX),
    }


JOBS = {"teacher": "professional", "health": "professional", "services": "professional",
        "at_home": "non-professional", "other": "non-professional"}
EDU_LEVEL = {"0": "low", "1": "low", "2": "low", "3": "high", "4": "high"}


def student() -> dict[str, Hierarchy]:
    return {
        "school": flat("school", ["GP", "MS"]),
        "sex": flat("sex", ["F", "M"]),
        "age": synthesize_interval_hierarchy([str(a) for a in range(15, 23)], [2, 4], "age"),
        "address": flat("address", ["U", "R"]),
        "famsize": flat("famsize", ["LE3", "GT3"]),
        "Pstatus": flat("Pstatus", ["T", "A"]),
        "Medu": grouped("Medu", EDU_LEVEL),
        "Fedu": grouped("Fedu", EDU_LEVEL),
        "Mjob": grouped("Mjob", JOBS),
        "Fjob": grouped("Fjob", JOBS),
        "reason": flat("reason", ["home", "reputation", "course", "other"]),
        "guardian": flat("guardian", ["mother", "father", "other"]),
    }


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--adult", default=ROOT / "data/adult/adult.csv", type=Path)
    parser.add_argument("--out", default=ROOT / "hierarchies", type=Path)
    args = parser.parse_args(argv)
    for name, ladders in (("adult", adult(args.adult)), ("student", student())):
        for attribute, h in ladders.items():
            path = args.out / name / f"{attribute}.csv"
            h.to_csv(path)
            print(f"{path}: {len(h.domain)} values, {h.levels} levels")


if __name__ == "__main__":
    main()
