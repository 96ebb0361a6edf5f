/*
 * Copyright 2026 The Acurai Middleware Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Offline acceptance run. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails. Every model call is served from the
// replay cassettes under tests/fixtures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "acurai/faithfulness.hpp"
#include "acurai/harness.hpp"
#include "acurai/pipeline.hpp"
#include "acurai/placeholder.hpp"
#include "acurai/query_split.hpp"
#include "acurai/text.hpp"
#include "support.hpp"

using namespace acurai;
using Clock = std::chrono::steady_clock;

namespace {

// Tolerances and budgets.
constexpr double kWilsonTol = 0.0005;      // criterion 5, absolute, before rounding
constexpr double kOracleTol = 1e-9;        // closed form vs root finding
constexpr double kVerbatimShare = 0.90;    // criterion 2
constexpr double kSplitBudgetS = 1.0;      // criterion 1
constexpr double kFffBudgetS = 5.0;        // criterion 2
constexpr double kSuiteBudgetS = 60.0;     // criterion 9
constexpr int kWilsonCases = 1000;         // criterion 5
constexpr int kRoundTrips = 1000;          // criterion 6

int failures = 0;

void report(int n, bool ok, const std::string& detail) {
  std::printf("criterion %d: %s  %s\n", n, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string reference_text() {
  std::ifstream in(ACURAI_REFERENCE_PATH);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Quoted reference values must appear verbatim in the reference text.
bool quoted(const std::string& ref, const std::vector<std::string>& lines, std::string& missing) {
  for (const auto& l : lines) {
    if (ref.find(l) == std::string::npos) {
      missing = l;
      return false;
    }
  }
  return true;
}

std::string canon(const std::string& s) { return normalize(text::collapse_whitespace(text::trim(s))); }

bool has_placeholder(const std::string& s) { return std::regex_search(s, std::regex("\\bQQ[A-Z]+\\b")); }

// ---------------------------------------------------------------------------

const std::string kCalciumQuery = "What are the chemical and physical properties of calcium and magnesium?";

const std::vector<std::string> kReferenceQueries = {
    "What are the chemical properties of magnesium?", "What are the physical properties of magnesium?",
    "What are the chemical properties of calcium?", "What are the physical properties of calcium?"};

const std::vector<std::string> kReferencePhysical = {
    "Calcium is a silver-grey metal.", "Calcium melts at 840°C.", "Calcium boils at 1484°C to produce monatomic gas.",
    "Calcium's density is 1540 kg/m^3.", "Calcium is diamagnetic."};

const std::vector<std::string> kReferenceChemical1 = {"The chemical properties of calcium react with oxygen.",
                                                  "The chemical properties of calcium react with water."};

const std::vector<std::string> kReferenceChemical2 = {
    "Calcium melts at 840°C.",
    "Calcium boils at 1484°C to produce monatomic gas.",
    "Calcium's density is 1540 kg/m^3.",
    "Calcium is a conductor of electricity.",
    "Calcium is diamagnetic.",
    "Calcium reacts steadily with water.",
    "Calcium gives off bubbles of hydrogen.",
    "Calcium produces a solution/slurry of alkaline, sparingly soluble calcium hydroxide.",
    "Calcium is flammable at high temperatures with oxygen.",
    "Calcium is flammable at high temperatures with air.",
    "Calcium can also burn in nitrogen to form calcium nitride.",
    "Calcium can also burn in carbon dioxide to form calcium carbonate.",
    "Nearly all Calcium's compounds are in oxidation state +2.",
    "The water chemistry of calcium is dominated by the hydrated Ca(2+) ion."};

void criterion1(const std::string& ref) {
  std::string missing;
  if (!quoted(ref, kReferenceQueries, missing)) {
    report(1, false, "pinned query not found in the reference text: " + missing);
    return;
  }
  const auto t0 = Clock::now();
  HashedNgramProvider emb;
  const auto qs = split_query(kCalciumQuery, query_collisions(kCalciumQuery, emb));
  const double s = seconds_since(t0);
  std::set<std::string> got;
  std::set<std::string> want;
  for (const auto& q : qs) got.insert(text::collapse_whitespace(text::trim(q.text)));
  for (const auto& q : kReferenceQueries) want.insert(q);
  const bool ok = got == want && qs.size() == 4 && s < kSplitBudgetS;
  report(1, ok, std::to_string(qs.size()) + " atomic queries, set equal to the reference: " + (got == want ? "yes" : "no") +
                    ", " + fmt("%.3fs", s));
}

// Matches `want` inside `have` after normalization. Returns the number of
// verbatim matches; non-verbatim ones must be supported at score 1.0.
struct Match {
  std::size_t verbatim = 0;
  std::size_t supported = 0;
  std::size_t missing = 0;
  std::string first_missing;
};

Match match_statements(const std::vector<std::string>& want, const std::vector<std::string>& have) {
  Match m;
  std::set<std::string> have_canon;
  for (const auto& h : have) have_canon.insert(canon(h));
  for (const auto& w : want) {
    if (have_canon.count(canon(w))) {
      ++m.verbatim;
      continue;
    }
    const auto r = is_supported(w, have);
    if (r.supported && r.score >= 1.0) {
      ++m.supported;
    } else {
      ++m.missing;
      if (m.first_missing.empty()) m.first_missing = w;
    }
  }
  return m;
}

std::vector<std::string> section(const FactSet& fs, std::size_t i) {
  std::vector<std::string> out;
  if (i < fs.sections.size()) {
    for (const auto& s : fs.sections[i].statements) out.push_back(s.text);
  }
  return out;
}

std::vector<std::string> all_statements(const FactSet& fs) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < fs.sections.size(); ++i) {
    for (auto& s : section(fs, i)) out.push_back(std::move(s));
  }
  return out;
}

void criterion2(const std::string& ref) {
  std::string missing;
  if (!quoted(ref, kReferencePhysical, missing) || !quoted(ref, kReferenceChemical1, missing) ||
      !quoted(ref, kReferenceChemical2, missing)) {
    report(2, false, "pinned statement not found in the reference text: " + missing);
    return;
  }
  const auto rec = acurai::testing::record("calcium_magnesium");
  const auto t0 = Clock::now();
  ReplayClient replay(Cassette::load(acurai::testing::fixture("cassettes/corpus.json")));
  HashedNgramProvider emb;
  PipelineConfig cfg;
  cfg.model = rec.model;
  const auto r = run(rec.query, rec.passages, cfg, replay, emb);
  const double s = seconds_since(t0);

  const FactSet* chemical = nullptr;
  const FactSet* physical = nullptr;
  for (const auto& p : r.packets) {
    if (p.atomic_query.text == "What are the chemical properties of calcium?") chemical = &p.fact_set;
    if (p.atomic_query.text == "What are the physical properties of calcium?") physical = &p.fact_set;
  }
  if (!chemical || !physical) {
    report(2, false, "calcium packets not produced");
    return;
  }
  const auto phys = match_statements(kReferencePhysical, all_statements(*physical));
  const auto chem1 = match_statements(kReferenceChemical1, section(*chemical, 0));
  const auto chem2 = match_statements(kReferenceChemical2, section(*chemical, 1));
  const std::size_t total = kReferencePhysical.size() + kReferenceChemical1.size() + kReferenceChemical2.size();
  const std::size_t verbatim = phys.verbatim + chem1.verbatim + chem2.verbatim;
  const std::size_t absent = phys.missing + chem1.missing + chem2.missing;
  const double share = static_cast<double>(verbatim) / static_cast<double>(total);
  const bool ok = absent == 0 && share >= kVerbatimShare && s < kFffBudgetS;

  std::string detail = "physical " + std::to_string(phys.verbatim + phys.supported) + "/5; chemical section 1 " +
                       std::to_string(chem1.verbatim + chem1.supported) + "/2 (" +
                       std::to_string(section(*chemical, 0).size()) + " produced); section 2 " +
                       std::to_string(chem2.verbatim + chem2.supported) + "/14 (" +
                       std::to_string(section(*chemical, 1).size()) + " produced); verbatim " +
                       fmt("%.0f%%", 100.0 * share) + ", " + fmt("%.2fs", s);
  if (absent) detail += "; missing: " + (phys.missing ? phys.first_missing : chem1.missing ? chem1.first_missing : chem2.first_missing);
  report(2, ok, detail);
}

void criterion3() {
  const auto j = acurai::testing::read_json(acurai::testing::fixture("ice_for_neck.json"));
  const auto passages = j.at("passages").get<std::vector<std::string>>();
  const auto base = check_response(j.at("original_response").get<std::string>(), passages);
  const auto ours = check_response(j.at("acurai_response").get<std::string>(), passages);
  const auto un = base.unsupported();
  const bool neck = std::any_of(un.begin(), un.end(), [](const std::string& s) {
    return s.find("base of the neck") != std::string::npos;
  });
  const bool ok = base.verdict == Verdict::hallucination && neck && ours.verdict == Verdict::faithful;
  report(3, ok, std::string("baseline ") + to_string(base.verdict) + " (" + std::to_string(un.size()) +
                    " unsupported, base of the neck flagged: " + (neck ? "yes" : "no") + "); acurai " +
                    to_string(ours.verdict));
}

void criterion4(const std::string& ref) {
  const std::string src = "occurred between the late 1700s and the early 1900s";
  const std::string gen = "occurred between the late 18th and early 20th century";
  std::string missing;
  if (!quoted(ref, {src, gen}, missing)) {
    report(4, false, "pinned phrase not found in the reference text: " + missing);
    return;
  }
  const auto r = is_supported("The Industrial Revolution " + gen + ".", {"The Industrial Revolution " + src + "."});
  report(4, r.supported, std::string("supported: ") + (r.supported ? "yes" : "no") + fmt(", score %.2f", r.score));
}

// Roots in p0 of (p - p0)^2 = z^2 p0 (1 - p0) / n, by bisection.
std::pair<double, double> wilson_oracle(long long x, long long n, double z) {
  const double p = static_cast<double>(x) / static_cast<double>(n);
  auto f = [&](double p0) { return (p - p0) * (p - p0) - z * z * p0 * (1 - p0) / static_cast<double>(n); };
  auto bisect = [&](double a, double b) {
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (a + b);
      if ((f(a) <= 0) == (f(mid) <= 0)) a = mid;
      else b = mid;
    }
    return 0.5 * (a + b);
  };
  return {x == 0 ? 0.0 : bisect(0.0, p), x == n ? 1.0 : bisect(1.0, p)};
}

void criterion5(const std::string& ref) {
  std::string missing;
  if (!quoted(ref, {"[0.91, 1]"}, missing)) {
    report(5, false, "pinned interval not found in the reference text");
    return;
  }
  const auto [lo, hi] = wilson_interval(37, 37, 1.96);
  EvalSummary s;
  s.n = 37;
  s.successes = 37;
  s.accuracy = 1.0;
  s.wilson_low = lo;
  s.wilson_high = hi;
  const std::string shown = to_json(s)["interval"].get<std::string>();
  bool ok = std::fabs(lo - 0.9059) <= kWilsonTol && std::fabs(hi - 1.0) <= kWilsonTol && shown == "[0.91, 1]";

  std::mt19937_64 rng(20260417);
  int oracle_bad = 0;
  int mirror_bad = 0;
  for (int i = 0; i < kWilsonCases; ++i) {
    const long long n = std::uniform_int_distribution<long long>(1, 2000)(rng);
    const long long x = std::uniform_int_distribution<long long>(0, n)(rng);
    const auto got = wilson_interval(x, n, 1.96);
    const auto want = wilson_oracle(x, n, 1.96);
    if (std::fabs(got.first - want.first) > kOracleTol || std::fabs(got.second - want.second) > kOracleTol) ++oracle_bad;
    const auto mirror = wilson_interval(n - x, n, 1.96);
    if (std::fabs(got.first - (1.0 - mirror.second)) > kOracleTol ||
        std::fabs(got.second - (1.0 - mirror.first)) > kOracleTol) {
      ++mirror_bad;
    }
  }
  // Width shrinks as n grows at fixed p = a/b.
  int width_bad = 0;
  for (long long b = 1; b <= 10; ++b) {
    for (long long a = 0; a <= b; ++a) {
      double prev = 2.0;
      for (long long k = 1; k <= 100; ++k) {
        const auto w = wilson_interval(a * k, b * k, 1.96);
        const double width = w.second - w.first;
        if (width >= prev) ++width_bad;
        prev = width;
      }
    }
  }
  ok = ok && oracle_bad == 0 && mirror_bad == 0 && width_bad == 0;
  report(5, ok, fmt("37/37 -> (%.4f, ", lo) + fmt("%.4f) shown ", hi) + shown + "; " + std::to_string(kWilsonCases) +
                    " random cases: oracle mismatches " + std::to_string(oracle_bad) + ", mirror failures " +
                    std::to_string(mirror_bad) + ", width increases " + std::to_string(width_bad));
}

// ---------------------------------------------------------------------------
// Replay suite shared by criteria 6, 7 and 8.

struct SuiteRun {
  std::string name;
  std::string response;
  std::string trace;
  FinalVerdict verdict = FinalVerdict::faithful;
  Verdict against_passages = Verdict::hallucination;
  std::size_t fallbacks = 0;
  std::string error;
};

std::vector<SuiteRun> replay_suite() {
  std::vector<SuiteRun> out;
  HashedNgramProvider emb;
  auto one = [&](const std::string& name, const EvalRecord& rec, const std::string& cassette) {
    SuiteRun s;
    s.name = name;
    try {
      ReplayClient replay(Cassette::load(acurai::testing::fixture(cassette)));
      PipelineConfig cfg;
      if (!rec.model.empty()) cfg.model = rec.model;
      if (rec.temperature) cfg.temperature = *rec.temperature;
      const auto r = run(rec.query, rec.passages, cfg, replay, emb);
      s.response = r.response;
      s.trace = r.trace.dump();
      s.verdict = r.verdict;
      s.against_passages = check_response(r.response, rec.passages).verdict;
      for (const auto& a : r.answers) s.fallbacks += a.fallback ? 1 : 0;
    } catch (const std::exception& e) {
      s.error = e.what();
    }
    out.push_back(std::move(s));
  };
  for (const auto& rec : load_dataset(acurai::testing::fixture("corpus.jsonl")).records) {
    one(rec.response_id, rec, "cassettes/corpus.json");
  }
  for (const auto& sc : acurai::testing::read_json(acurai::testing::fixture("forced.json"))) {
    one(sc["name"].get<std::string>(), acurai::testing::record(sc["record"].get<std::string>()),
        sc["cassette"].get<std::string>());
  }
  return out;
}

void criterion6(const std::vector<SuiteRun>& suite) {
  std::mt19937 rng(4242);
  auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
  const std::vector<std::string> words = {"the", "unit", "reports", "drift", "and", "values", "were", "stable",
                                          "in", "trials", "with", "controls"};
  int bad = 0;
  std::size_t replaced = 0;
  std::set<PlaceholderKind> kinds;
  for (int t = 0; t < kRoundTrips; ++t) {
    std::string text = "Results";
    const bool rename = pick(3) == 0;
    if (rename) text = "Cruise LLC tested cruise control and";
    const int n = 4 + static_cast<int>(pick(14));
    for (int i = 0; i < n; ++i) {
      switch (pick(7)) {
        case 0: text += " [" + std::to_string(1 + pick(60)) + "]"; break;
        case 1: text += " [" + std::to_string(1 + pick(9)) + ", " + std::to_string(10 + pick(9)) + "]"; break;
        case 2: text += " PMID " + std::to_string(10000000 + pick(89999999)); break;
        case 3: text += " doi:10." + std::to_string(1000 + pick(8999)) + "/j." + std::to_string(pick(9999)); break;
        default: text += " " + words[pick(words.size())];
      }
    }
    text += ".";
    PlaceholderTable table;
    const auto spans = detect_protected_spans(text);
    for (const auto& sp : spans) kinds.insert(sp.kind);
    const std::string masked = apply_placeholders(text, spans, table);
    replaced += table.entries().size();
    const auto [back, rep] = remap(masked, table);
    if (back != text || rep.degraded || !table.is_bijective()) ++bad;
  }
  std::size_t leaked = 0;
  for (const auto& s : suite) leaked += has_placeholder(s.response) ? 1 : 0;
  const bool ok = bad == 0 && leaked == 0 && replaced > 0 && kinds.size() >= 3;
  report(6, ok, std::to_string(kRoundTrips) + " round trips (" + std::to_string(replaced) + " placeholders, " +
                    std::to_string(kinds.size()) + " kinds): " + std::to_string(bad) + " failures; " +
                    std::to_string(leaked) + " of " + std::to_string(suite.size()) +
                    " pipeline responses carry a placeholder");
}

void criterion7(const std::vector<SuiteRun>& suite) {
  std::size_t faithful = 0;
  std::size_t fallbacks = 0;
  std::string first_bad;
  for (const auto& s : suite) {
    const bool ok = s.error.empty() && s.verdict != FinalVerdict::hallucination &&
                    s.against_passages == Verdict::faithful;
    faithful += ok ? 1 : 0;
    fallbacks += s.fallbacks;
    if (!ok && first_bad.empty()) first_bad = s.name + (s.error.empty() ? "" : ": " + s.error);
  }
  const bool ok = faithful == suite.size() && !suite.empty() && fallbacks > 0;
  std::string detail = std::to_string(faithful) + "/" + std::to_string(suite.size()) +
                       " replayed responses faithful to their passages; " + std::to_string(fallbacks) +
                       " answers fell back to verbatim facts";
  if (!first_bad.empty()) detail += "; first failure: " + first_bad;
  report(7, ok, detail);
}

void criterion8(const std::vector<SuiteRun>& first) {
  const auto second = replay_suite();
  std::size_t same = 0;
  for (std::size_t i = 0; i < first.size() && i < second.size(); ++i) {
    if (first[i].response == second[i].response && first[i].trace == second[i].trace && first[i].error.empty()) ++same;
  }
  const bool ok = first.size() == second.size() && same == first.size();
  report(8, ok, std::to_string(same) + "/" + std::to_string(first.size()) +
                    " runs byte-identical in response and trace across two passes");
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  const std::string ref = reference_text();
  if (ref.empty()) std::printf("note: %s not readable; quoted-value checks will fail\n", ACURAI_REFERENCE_PATH);

  criterion1(ref);
  criterion2(ref);
  criterion3();
  criterion4(ref);
  criterion5(ref);
  const auto suite = replay_suite();
  criterion6(suite);
  criterion7(suite);
  criterion8(suite);
  const double total = seconds_since(t0);
  report(9, total < kSuiteBudgetS, fmt("offline suite took %.1fs", total) + fmt(" (budget %.0fs)", kSuiteBudgetS));
  return failures == 0 ? 0 : 1;
}
