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

#include "acurai/harness.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <regex>
#include <sstream>
#include <thread>

#include "acurai/text.hpp"

namespace acurai {

const char* to_string(DatasetLabel d) noexcept {
  switch (d) {
    case DatasetLabel::gpt35_subtle: return "gpt35-subtle";
    case DatasetLabel::gpt35_evident: return "gpt35-evident";
    case DatasetLabel::gpt4_subtle: return "gpt4-subtle";
    case DatasetLabel::gpt4_evident: return "gpt4-evident";
    case DatasetLabel::other: return "other";
  }
  return "other";
}

DatasetLabel dataset_label_from_string(const std::string& s) {
  if (s == "gpt35-subtle") return DatasetLabel::gpt35_subtle;
  if (s == "gpt35-evident") return DatasetLabel::gpt35_evident;
  if (s == "gpt4-subtle") return DatasetLabel::gpt4_subtle;
  if (s == "gpt4-evident") return DatasetLabel::gpt4_evident;
  return DatasetLabel::other;
}

EvalRecord record_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorKind::parse, "record is not a JSON object");
  for (const char* f : {"response_id", "query", "passages"}) {
    if (!j.contains(f)) throw Error(ErrorKind::parse, std::string("missing field '") + f + "'");
  }
  EvalRecord r;
  const auto& id = j.at("response_id");
  r.response_id = id.is_string() ? id.get<std::string>() : id.dump();
  r.query = j.at("query").get<std::string>();
  if (!j.at("passages").is_array()) throw Error(ErrorKind::parse, "'passages' must be an array of strings");
  r.passages = j.at("passages").get<std::vector<std::string>>();
  if (r.passages.empty()) throw Error(ErrorKind::parse, "'passages' is empty");
  if (text::trim(r.query).empty()) throw Error(ErrorKind::parse, "'query' is empty");
  r.model = j.value("model", std::string());
  if (j.contains("original_response") && j["original_response"].is_string()) {
    r.original_response = j["original_response"].get<std::string>();
  }
  r.dataset = dataset_label_from_string(j.value("dataset", std::string("other")));
  if (j.contains("temperature") && j["temperature"].is_number()) r.temperature = j["temperature"].get<double>();
  return r;
}

nlohmann::json to_json(const EvalRecord& r) {
  nlohmann::json j = {{"response_id", r.response_id},
                      {"query", r.query},
                      {"passages", r.passages},
                      {"model", r.model},
                      {"dataset", to_string(r.dataset)}};
  if (r.original_response) j["original_response"] = *r.original_response;
  if (r.temperature) j["temperature"] = *r.temperature;
  return j;
}

LoadResult load_dataset(const std::string& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorKind::io, "file not found: " + path);
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open dataset: " + path);
  LoadResult out;
  std::map<std::string, std::size_t> ids;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (text::trim(line).empty()) continue;
    try {
      auto r = record_from_json(nlohmann::json::parse(line));
      const std::string key = std::string(to_string(r.dataset)) + "/" + r.response_id;
      if (ids.count(key)) {
        out.errors.push_back({no, "duplicate response_id " + r.response_id + " (first on line " +
                                      std::to_string(ids[key]) + ")"});
        continue;
      }
      ids[key] = no;
      out.records.push_back(std::move(r));
    } catch (const std::exception& e) {
      out.errors.push_back({no, e.what()});
    }
  }
  if (out.records.empty()) {
    std::string msg = "no valid records in " + path;
    if (!out.errors.empty()) msg += " (" + std::to_string(out.errors.size()) + " malformed lines)";
    throw Error(ErrorKind::empty_dataset, msg);
  }
  return out;
}

std::pair<double, double> wilson_interval(long long successes, long long n, double z) {
  if (n < 1) throw Error(ErrorKind::invalid_input, "n must be >= 1");
  if (successes < 0 || successes > n) throw Error(ErrorKind::invalid_input, "successes must be in [0, n]");
  if (!(z > 0.0)) throw Error(ErrorKind::invalid_input, "z must be > 0");
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half = (z / denom) * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn));
  return {std::clamp(center - half, 0.0, 1.0), std::clamp(center + half, 0.0, 1.0)};
}

namespace {

std::string trimmed_fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  std::string s = buf;
  if (s.find('.') != std::string::npos) {
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
  }
  if (s == "-0") s = "0";
  return s;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  return "\"" + text::replace_all(s, "\"", "\"\"") + "\"";
}

}  // namespace

std::string format_interval(double low, double high, int decimals) {
  return "[" + trimmed_fixed(low, decimals) + ", " + trimmed_fixed(high, decimals) + "]";
}

nlohmann::json to_json(const EvalSummary& s) {
  nlohmann::json v = nlohmann::json::array();
  for (const auto& r : s.verdicts) {
    v.push_back({{"response_id", r.response_id},
                 {"dataset", to_string(r.dataset)},
                 {"verdict", r.verdict},
                 {"success", r.success},
                 {"reason", r.reason},
                 {"trace_id", r.trace_id},
                 {"unsupported", r.unsupported}});
  }
  return {{"n", s.n},
          {"successes", s.successes},
          {"accuracy", s.accuracy},
          {"z", s.z},
          {"wilson_low", s.wilson_low},
          {"wilson_high", s.wilson_high},
          {"interval", format_interval(s.wilson_low, s.wilson_high)},
          {"temperature_defaulted", s.temperature_defaulted},
          {"verdicts", v}};
}

std::string to_csv(const EvalSummary& s) {
  std::ostringstream out;
  out << "response_id,dataset,verdict,success,reason\n";
  for (const auto& r : s.verdicts) {
    out << csv_field(r.response_id) << ',' << to_string(r.dataset) << ',' << r.verdict << ','
        << (r.success ? "true" : "false") << ',' << csv_field(r.reason) << '\n';
  }
  return out.str();
}

EvalSummary evaluate(const std::vector<EvalRecord>& records, const EvalOptions& options, ChatClient& llm,
                     EmbeddingProvider& embedder) {
  if (records.empty()) throw Error(ErrorKind::empty_dataset, "no records to evaluate");
  EvalSummary summary;
  summary.z = options.z;
  summary.verdicts.resize(records.size());
  std::atomic<bool> defaulted{false};
  std::mutex trace_mu;

  auto one = [&](std::size_t i) {
    const auto& rec = records[i];
    RecordVerdict v;
    v.response_id = rec.response_id;
    v.dataset = rec.dataset;
    PipelineConfig cfg = options.pipeline;
    if (!rec.model.empty()) cfg.model = rec.model;
    if (rec.temperature) {
      cfg.temperature = *rec.temperature;
    } else {
      defaulted = true;
    }
    try {
      const auto res = run(rec.query, rec.passages, cfg, llm, embedder);
      v.response = res.response;
      v.trace_id = res.trace_id;
      if (!options.trace_dir.empty()) {
        std::lock_guard<std::mutex> lk(trace_mu);
        write_trace(res, options.trace_dir);
      }
      const auto report = check_response(res.response, rec.passages);
      v.unsupported = report.unsupported();
      v.success = report.verdict == Verdict::faithful;
      v.verdict = to_string(report.verdict);
      if (!v.success) v.reason = std::to_string(v.unsupported.size()) + " unsupported statement(s)";
    } catch (const std::exception& e) {
      v.verdict = "error";
      v.success = false;
      v.reason = e.what();
    }
    summary.verdicts[i] = std::move(v);
  };

  const std::size_t workers = std::max<std::size_t>(1, std::min(options.workers, records.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < records.size(); ++i) one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < records.size(); i = next++) one(i);
      });
    }
    for (auto& t : pool) t.join();
  }

  summary.n = records.size();
  for (const auto& v : summary.verdicts) summary.successes += v.success ? 1 : 0;
  summary.accuracy = static_cast<double>(summary.successes) / static_cast<double>(summary.n);
  const auto [lo, hi] = wilson_interval(static_cast<long long>(summary.successes),
                                        static_cast<long long>(summary.n), options.z);
  summary.wilson_low = lo;
  summary.wilson_high = hi;
  summary.temperature_defaulted = defaulted;
  return summary;
}

namespace {

std::vector<nlohmann::json> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path);
  std::vector<nlohmann::json> out;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(nlohmann::json::parse(line));
    } catch (const std::exception& e) {
      throw Error(ErrorKind::parse, path + ":" + std::to_string(no) + ": " + e.what());
    }
  }
  return out;
}

std::string id_string(const nlohmann::json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

// RAGTruth packs passages into one string: "passage 1:...\n\npassage 2:...".
std::vector<std::string> split_passages(const nlohmann::json& v) {
  if (v.is_array()) return v.get<std::vector<std::string>>();
  const std::string s = v.get<std::string>();
  static const std::regex marker(R"((?:^|\n)\s*passage\s*\d+\s*:\s*)", std::regex::icase);
  std::vector<std::string> out;
  std::size_t last = std::string::npos;
  for (auto it = std::sregex_iterator(s.begin(), s.end(), marker); it != std::sregex_iterator(); ++it) {
    const auto pos = static_cast<std::size_t>(it->position());
    if (last != std::string::npos) out.push_back(text::trim(s.substr(last, pos - last)));
    last = pos + static_cast<std::size_t>(it->length());
  }
  if (last == std::string::npos) return {text::trim(s)};
  out.push_back(text::trim(s.substr(last)));
  out.erase(std::remove_if(out.begin(), out.end(), [](const std::string& p) { return p.empty(); }), out.end());
  return out;
}

}  // namespace

std::vector<EvalRecord> convert_ragtruth(const std::string& source_info_path, const std::string& response_path,
                                         bool conflicts_only) {
  std::map<std::string, nlohmann::json> sources;
  for (auto& s : read_jsonl(source_info_path)) {
    if (s.value("task_type", std::string("QA")) != "QA") continue;
    sources[id_string(s.at("source_id"))] = s;
  }
  std::vector<EvalRecord> out;
  for (const auto& r : read_jsonl(response_path)) {
    const auto it = sources.find(id_string(r.at("source_id")));
    if (it == sources.end()) continue;
    const auto& info = it->second.at("source_info");
    EvalRecord rec;
    rec.response_id = id_string(r.at("id"));
    rec.query = info.at("question").get<std::string>();
    rec.passages = split_passages(info.at("passages"));
    rec.model = r.value("model", std::string());
    if (r.contains("response")) rec.original_response = r["response"].get<std::string>();
    if (r.contains("temperature") && r["temperature"].is_number()) rec.temperature = r["temperature"].get<double>();
    bool subtle = false;
    bool evident = false;
    for (const auto& l : r.value("labels", nlohmann::json::array())) {
      const std::string t = l.value("label_type", std::string());
      if (t.find("Subtle Conflict") != std::string::npos) subtle = true;
      if (t.find("Evident Conflict") != std::string::npos) evident = true;
    }
    const bool gpt4 = rec.model.find("gpt-4") != std::string::npos;
    const bool gpt35 = rec.model.find("gpt-3.5") != std::string::npos;
    if (subtle && gpt4) rec.dataset = DatasetLabel::gpt4_subtle;
    else if (evident && gpt4) rec.dataset = DatasetLabel::gpt4_evident;
    else if (subtle && gpt35) rec.dataset = DatasetLabel::gpt35_subtle;
    else if (evident && gpt35) rec.dataset = DatasetLabel::gpt35_evident;
    if (conflicts_only && rec.dataset == DatasetLabel::other) continue;
    out.push_back(std::move(rec));
  }
  return out;
}

void write_jsonl(const std::vector<EvalRecord>& records, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path);
  for (const auto& r : records) out << to_json(r).dump() << "\n";
}

}  // namespace acurai
