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

#include "acurai/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <regex>
#include <set>
#include <thread>

#include "acurai/text.hpp"

namespace acurai {

void PipelineConfig::validate() const {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw Error(ErrorKind::config, "threshold must be in (0, 1]");
  if (retries < 0) throw Error(ErrorKind::config, "retries must be >= 0");
  if (temperature < 0.0) throw Error(ErrorKind::config, "temperature must be >= 0");
  if (split_cap < 1) throw Error(ErrorKind::config, "split cap must be >= 1");
}

nlohmann::json PipelineConfig::to_json() const {
  return {{"model", model},
          {"temperature", temperature},
          {"threshold", threshold},
          {"split_cap", split_cap},
          {"retries", retries},
          {"include_specifics", include_specifics},
          {"placeholder_prefix", placeholder_prefix},
          {"llm_rewrite", llm_rewrite},
          {"max_statement_tokens", max_statement_tokens}};
}

const char* to_string(FinalVerdict v) noexcept {
  switch (v) {
    case FinalVerdict::faithful: return "faithful";
    case FinalVerdict::faithful_vacuous: return "faithful-vacuous";
    case FinalVerdict::hallucination: return "hallucination";
  }
  return "hallucination";
}

std::string title_case(const std::string& query) {
  static const std::set<std::string> minor = {"a", "an", "and", "as", "at", "by", "for", "in",
                                              "of", "on", "or", "the", "to", "with"};
  std::string q = text::trim(query);
  while (!q.empty() && (q.back() == '?' || q.back() == '.' || q.back() == '!')) q.pop_back();
  auto words = text::split(text::collapse_whitespace(q), ' ');
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i > 0 && minor.count(text::ascii_lower(words[i]))) {
      words[i] = text::ascii_lower(words[i]);
    } else {
      words[i] = text::capitalize_first(words[i]);
    }
  }
  return text::join(words, " ");
}

std::string render_sections(const FactSet& fs) {
  std::string out;
  for (const auto& s : fs.sections) {
    if (!out.empty()) out += "\n";
    out += "Section " + std::to_string(s.index) + ":\n";
    for (std::size_t i = 0; i < s.statements.size(); ++i) {
      out += std::to_string(i + 1) + ". " + s.statements[i].text + "\n";
    }
  }
  return out;
}

std::string verbatim_answer(const FactSet& fs) {
  std::set<std::string> seen;
  std::string out;
  for (const auto& s : fs.sections) {
    for (const auto& st : s.statements) {
      if (!seen.insert(text::ascii_lower(st.text)).second) continue;
      out += "- " + st.text + "\n";
    }
  }
  return text::trim(out);
}

std::string compose_response(const std::string& title_query, const std::vector<QueryAnswer>& answers,
                             const std::vector<std::vector<std::string>>& details, const ComposeOptions& options) {
  if (answers.empty()) throw Error(ErrorKind::invalid_input, "compose_response needs at least one answer");
  std::string out = "**" + title_case(title_query) + "**\n\n";
  std::vector<std::string> prose;
  for (const auto& a : answers) prose.push_back(text::trim(a.answer));
  out += text::join(prose, "\n\n") + "\n";
  if (options.include_specifics && !details.empty()) {
    out += "\n**Specifics**\n";
    for (std::size_t i = 0; i < details.size(); ++i) {
      out += "\nDetail " + std::to_string(i + 1) + ":\n" + text::join(details[i], " ") + "\n";
    }
  }
  return out;
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::vector<std::string> statements_of(const FactSet& fs) {
  std::vector<std::string> out;
  for (const auto& s : fs.sections) {
    for (const auto& st : s.statements) out.push_back(st.text);
  }
  return out;
}

nlohmann::json np_json(const nlp::NounPhrase& np) { return np.text; }

// Puts placeholders back into text quoted to the model.
std::string forward(std::string s, const PlaceholderTable& table) {
  for (const auto& e : table.entries()) s = text::replace_all(s, e.original, e.placeholder);
  return s;
}

bool has_placeholder(const std::string& s, const std::string& prefix) {
  const std::regex token("\\b" + prefix + "[A-Z]+\\b");
  return std::regex_search(s, token);
}

}  // namespace

PipelineResult run(const std::string& query, const std::vector<std::string>& passages, const PipelineConfig& config,
                   ChatClient& llm, EmbeddingProvider& embedder) {
  config.validate();
  if (text::trim(query).empty()) throw Error(ErrorKind::invalid_input, "query is empty");
  if (std::none_of(passages.begin(), passages.end(), [](const std::string& p) { return !text::trim(p).empty(); })) {
    throw Error(ErrorKind::invalid_input, "at least one non-empty passage is required");
  }

  PipelineResult result;
  nlohmann::json& trace = result.trace;
  trace["query"] = query;
  trace["passages"] = passages;
  trace["config"] = config.to_json();
  trace["embedder"] = embedder.id();
  result.trace_id = text::sha256_hex(trace.dump()).substr(0, 16);
  trace["trace_id"] = result.trace_id;

  // Step one: split the query along its collisions.
  auto t0 = Clock::now();
  const CollisionConfig cc{config.threshold};
  EmbeddingCache cache;
  const auto pairs = query_collisions(query, embedder, cc, &cache);
  const auto atomic = split_query(query, pairs, SplitOptions{config.split_cap});
  nlohmann::json jc = nlohmann::json::array();
  for (const auto& p : pairs) {
    jc.push_back({{"left", p.left.text}, {"right", p.right.text}, {"similarity", p.similarity},
                  {"reason", to_string(p.reason)}});
  }
  trace["collisions"] = jc;
  nlohmann::json ja = nlohmann::json::array();
  for (const auto& q : atomic) {
    nlohmann::json focal = nlohmann::json::array();
    for (const auto& np : q.focal_nps) focal.push_back(np_json(np));
    ja.push_back({{"index", q.index}, {"text", q.text}, {"focal_nps", focal}, {"fallback", q.fallback},
                  {"capped", q.capped}});
  }
  trace["atomic_queries"] = ja;
  result.timings["split"] = ms_since(t0);

  // Step two: fully-formatted facts paired with each atomic query.
  t0 = Clock::now();
  FffConfig fc;
  fc.provider = &embedder;
  fc.cache = &cache;
  fc.collision = cc;
  fc.model = config.model;
  fc.temperature = 0.0;
  fc.use_llm = config.llm_rewrite;
  fc.max_tokens = config.max_statement_tokens;
  fc.workers = config.workers;
  result.packets = build_fact_sets(passages, atomic, &llm, fc);
  auto& packets = result.packets;
  result.timings["fff"] = ms_since(t0);

  // Step three: placeholders in everything the answering model sees.
  t0 = Clock::now();
  PlaceholderTable table("ph-" + result.trace_id, config.placeholder_prefix);
  std::vector<std::string> user_messages(packets.size());
  for (std::size_t i = 0; i < packets.size(); ++i) {
    packets[i].placeholder_table_ref = table.id();
    if (packets[i].empty) continue;
    const std::string user = fill_template(
        prompt_template("answer_user"),
        {{"query", packets[i].atomic_query.text}, {"sections", text::trim(render_sections(packets[i].fact_set))}});
    user_messages[i] = apply_placeholders(user, detect_protected_spans(user), table);
  }
  nlohmann::json jp = nlohmann::json::array();
  for (std::size_t i = 0; i < packets.size(); ++i) {
    jp.push_back({{"query_index", i},
                  {"fact_set", to_json(packets[i].fact_set)},
                  {"empty", packets[i].empty},
                  {"degraded", packets[i].degraded},
                  {"log", packets[i].log},
                  {"placeholder_table_ref", packets[i].placeholder_table_ref}});
  }
  trace["packets"] = jp;
  trace["placeholder_table"] = to_json(table);
  result.timings["placeholder"] = ms_since(t0);

  // Answer each atomic query, verify, retry, and fall back to the facts.
  t0 = Clock::now();
  result.answers.resize(packets.size());
  std::vector<nlohmann::json> answer_traces(packets.size());
  auto answer_one = [&](std::size_t i) {
    QueryAnswer qa;
    qa.query = packets[i].atomic_query;
    nlohmann::json at = {{"query_index", i}};
    nlohmann::json attempts = nlohmann::json::array();
    if (packets[i].empty) {
      qa.answer = "No supporting facts found for \"" + qa.query.text + "\".";
      at["empty"] = true;
    } else {
      const auto sources = statements_of(packets[i].fact_set);
      std::vector<Message> msgs = {{Role::system, prompt_template("answer_system")}, {Role::user, user_messages[i]}};
      bool ok = false;
      for (int attempt = 0; attempt <= config.retries; ++attempt) {
        ChatRequest req;
        req.model = config.model;
        req.temperature = config.temperature;
        req.messages = msgs;
        nlohmann::json a = {{"request_key", record_replay_key(req)}};
        ChatResponse resp;
        try {
          resp = llm.chat(req);
        } catch (...) {
          attempts.push_back(a);
          at["attempts"] = attempts;
          answer_traces[i] = at;
          throw;
        }
        const auto [remapped, rr] = remap(resp.content, table);
        const auto report = check_response(remapped, sources);
        a["response"] = resp.content;
        a["remapped"] = remapped;
        a["remap"] = to_json(rr);
        a["report"] = to_json(report);
        attempts.push_back(a);
        if (report.verdict == Verdict::faithful && !report.empty && !rr.degraded) {
          qa.answer = text::trim(remapped);
          qa.retries_used = attempt;
          ok = true;
          break;
        }
        if (attempt == config.retries) break;
        std::vector<std::string> violations;
        for (const auto& s : report.unsupported()) violations.push_back("- " + forward(s, table));
        for (const auto& u : rr.unknown) violations.push_back("- unknown name " + u);
        if (report.empty) violations.push_back("- (the answer contained no statements)");
        msgs.push_back({Role::assistant, resp.content});
        msgs.push_back({Role::user, fill_template(prompt_template("answer_retry"),
                                                  {{"violations", text::join(violations, "\n")}})});
      }
      if (!ok) {
        qa.answer = verbatim_answer(packets[i].fact_set);
        qa.fallback = true;
        qa.retries_used = config.retries;
      }
    }
    at["attempts"] = attempts;
    at["fallback"] = qa.fallback;
    at["retries_used"] = qa.retries_used;
    at["answer"] = qa.answer;
    answer_traces[i] = at;
    result.answers[i] = std::move(qa);
  };

  std::exception_ptr failure;
  std::size_t failed_index = packets.size();
  const std::size_t workers = std::max<std::size_t>(1, std::min(config.workers, packets.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < packets.size() && !failure; ++i) {
      try {
        answer_one(i);
      } catch (...) {
        failure = std::current_exception();
        failed_index = i;
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::mutex mu;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < packets.size(); i = next++) {
          try {
            answer_one(i);
          } catch (...) {
            std::lock_guard<std::mutex> lk(mu);
            if (i < failed_index) {
              failure = std::current_exception();
              failed_index = i;
            }
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  nlohmann::json jans = nlohmann::json::array();
  for (auto& a : answer_traces) jans.push_back(a.is_null() ? nlohmann::json::object() : a);
  trace["answers"] = jans;
  result.timings["answer"] = ms_since(t0);
  if (failure) {
    try {
      std::rethrow_exception(failure);
    } catch (const Error& e) {
      trace["error"] = {{"kind", to_string(e.kind())}, {"message", e.what()}, {"query_index", failed_index}};
      std::optional<std::chrono::seconds> retry_after;
      if (const auto* le = dynamic_cast<const LlmError*>(&e)) retry_after = le->retry_after();
      throw PipelineError(e.kind(), std::string("answering model unavailable: ") + e.what(), trace, retry_after);
    }
  }

  // Compose and gate.
  t0 = Clock::now();
  std::vector<std::vector<std::string>> details;
  std::set<std::vector<std::string>> seen_details;
  std::vector<std::string> all_sources;
  for (const auto& p : packets) {
    for (const auto& s : p.fact_set.sections) {
      std::vector<std::string> group;
      for (const auto& st : s.statements) group.push_back(st.text);
      if (seen_details.insert(group).second) {
        details.push_back(group);
        all_sources.insert(all_sources.end(), group.begin(), group.end());
      }
    }
  }
  const ComposeOptions co{config.include_specifics};
  const bool vacuous = all_sources.empty();
  result.response = compose_response(query, result.answers, vacuous ? decltype(details){} : details, co);
  auto final_report = check_response(result.response, vacuous ? std::vector<std::string>{""} : all_sources);
  bool gated = false;
  if (!vacuous && (final_report.verdict != Verdict::faithful || has_placeholder(result.response, table.prefix()))) {
    gated = true;
    for (std::size_t i = 0; i < packets.size(); ++i) {
      if (packets[i].empty || result.answers[i].fallback) continue;
      result.answers[i].answer = verbatim_answer(packets[i].fact_set);
      result.answers[i].fallback = true;
      trace["answers"][i]["fallback"] = true;
      trace["answers"][i]["answer"] = result.answers[i].answer;
    }
    result.response = compose_response(query, result.answers, details, co);
    final_report = check_response(result.response, all_sources);
  }
  if (final_report.verdict != Verdict::faithful) {
    result.verdict = FinalVerdict::hallucination;
  } else if (vacuous) {
    result.verdict = FinalVerdict::faithful_vacuous;
  } else {
    result.verdict = FinalVerdict::faithful;
  }
  trace["final"] = {{"response", result.response},
                    {"verdict", to_string(result.verdict)},
                    {"gated", gated},
                    {"report", to_json(final_report)}};
  result.timings["compose"] = ms_since(t0);
  return result;
}

std::string write_trace(const PipelineResult& result, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::io, "cannot create trace directory " + dir + ": " + ec.message());
  const std::string path = (std::filesystem::path(dir) / (result.trace_id + ".json")).string();
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot write trace " + path);
  out << result.trace.dump(2) << "\n";
  return path;
}

}  // namespace acurai
