#!/usr/bin/env python3
"""Regenerates the replay cassettes under tests/fixtures from the scripted model.

Each record is run once through `acurai run` with the scripted client wrapped
in a recorder. Forced-failure cassettes prepend corrupting rules to the corpus
script so that the answer model misbehaves in a known way.

    python3 tools/author_fixtures.py --cli build/tools/acurai
"""

import argparse
import json
import os
import subprocess
import sys
import tempfile

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
FIX = os.path.join(ROOT, "tests", "fixtures")

RECORDS = ["calcium_magnesium", "7969", "8285", "9824", "9692", "placeholder_demo"]
# The four RAGTruth records used for the 4-record dataset.
RAGTRUTH = ["7969", "8285", "9824", "9692"]
ANSWER = "Answer using only"
RETRY = "not supported by the facts"


def rule(match, response, system=ANSWER):
    return {"system": system, "match": match, "response": response}


def forced_scenarios():
    baseline = json.load(open(os.path.join(FIX, "records", "7969.json")))["original_response"]
    wrong_metal = "Magnesium melts at 840°C. Magnesium boils at 1484°C to produce monatomic gas."
    bad_name = "The QQB sensor measures relative humidity QQC. The QQF sensor reports air temperature every 10 seconds QQD."
    return [
        {
            "name": "forced_baseline",
            "record": "7969",
            "about": "the answer model repeats the original GPT-4 response on every attempt",
            "rules": [rule("Question: benefits of ice for neck\n", baseline), rule(RETRY, baseline)],
            "expect_fallback": [0],
        },
        {
            "name": "forced_magnesium",
            "record": "calcium_magnesium",
            "about": "calcium facts are attributed to magnesium on every attempt",
            "rules": [
                rule("Question: What are the physical properties of calcium?\n", wrong_metal),
                rule("- Magnesium melts at 840", wrong_metal),
            ],
            "expect_fallback": [2],
        },
        {
            "name": "forced_placeholder",
            "record": "placeholder_demo",
            "about": "the answer carries a placeholder name that was never issued",
            "rules": [
                rule("Question: What does the QQB sensor measure?\n", bad_name),
                rule("unknown name QQF", bad_name),
            ],
            "expect_fallback": [0],
        },
        {
            "name": "forced_retry",
            "record": "9824",
            "about": "the first answer adds an unsupported sentence; the retry is clean",
            "rules": [
                rule(
                    "Question: history of minimum wage\n",
                    "No state has a minimum wage law. As of July 2016, the federal government mandates a "
                    "nationwide minimum wage of $7.25 per hour.",
                ),
                rule(
                    "No state has a minimum wage law",
                    "As of July 2016, the federal government mandates a nationwide minimum wage of $7.25 per hour. "
                    "As of October 2016, there are 29 states with a minimum wage higher than the federal minimum.",
                ),
            ],
            "expect_fallback": [],
            "expect_retries": 1,
        },
    ]


def run(cli, script, cassette, record):
    cmd = [cli, "--script", script, "--record", cassette, "--force-record", "run",
           os.path.join(FIX, "records", record + ".json")]
    out = subprocess.run(cmd, capture_output=True, text=True)
    if out.returncode != 0:
        sys.stderr.write(out.stderr)
        raise SystemExit(f"run failed for {record}")
    return json.loads(out.stdout)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--cli", required=True, help="path to the acurai binary")
    args = ap.parse_args()

    corpus_script = os.path.join(FIX, "scripts", "corpus.json")
    cassettes = os.path.join(FIX, "cassettes")
    os.makedirs(cassettes, exist_ok=True)

    corpus_cassette = os.path.join(cassettes, "corpus.json")
    if os.path.exists(corpus_cassette):
        os.remove(corpus_cassette)
    for r in RECORDS:
        res = run(args.cli, corpus_script, corpus_cassette, r)
        print(f"{r}: {res['verdict']}", file=sys.stderr)

    with open(os.path.join(FIX, "corpus.jsonl"), "w", encoding="utf-8") as f:
        for r in RECORDS:
            rec = json.load(open(os.path.join(FIX, "records", r + ".json"), encoding="utf-8"))
            f.write(json.dumps(rec, ensure_ascii=False) + "\n")

    with open(os.path.join(FIX, "records4.jsonl"), "w", encoding="utf-8") as f:
        for r in RAGTRUTH:
            rec = json.load(open(os.path.join(FIX, "records", r + ".json"), encoding="utf-8"))
            f.write(json.dumps(rec, ensure_ascii=False) + "\n")

    base = json.load(open(corpus_script, encoding="utf-8"))
    manifest = []
    with tempfile.TemporaryDirectory() as tmp:
        for sc in forced_scenarios():
            script = dict(base)
            script["rules"] = sc["rules"] + base["rules"]
            path = os.path.join(tmp, sc["name"] + ".json")
            with open(path, "w", encoding="utf-8") as f:
                json.dump(script, f, ensure_ascii=False)
            cassette = os.path.join(cassettes, sc["name"] + ".json")
            if os.path.exists(cassette):
                os.remove(cassette)
            res = run(args.cli, path, cassette, sc["record"])
            print(f"{sc['name']}: {res['verdict']}", file=sys.stderr)
            manifest.append({k: v for k, v in sc.items() if k != "rules"} | {"cassette": "cassettes/" + sc["name"] + ".json"})

    with open(os.path.join(FIX, "forced.json"), "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, ensure_ascii=False)
        f.write("\n")


if __name__ == "__main__":
    main()
