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

#include "acurai/app.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <httplib.h>

#include "acurai/error.hpp"
#include "acurai/fff.hpp"
#include "acurai/harness.hpp"
#include "acurai/pipeline.hpp"
#include "acurai/query_split.hpp"
#include "acurai/text.hpp"

namespace acurai {

namespace {

constexpr const char* kVersion = "0.1.0";

nlohmann::json error_json(const std::string& kind, const std::string& message) {
  return {{"error", kind}, {"message", message}};
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "file not found: " + path);
  try {
    nlohmann::json j;
    in >> j;
    return j;
  } catch (const std::exception& e) {
    throw Error(ErrorKind::parse, path + " is not valid JSON: " + e.what());
  }
}

bool is_backend_error(ErrorKind k) {
  switch (k) {
    case ErrorKind::provider:
    case ErrorKind::network:
    case ErrorKind::auth:
    case ErrorKind::rate_limited:
    case ErrorKind::timeout:
    case ErrorKind::malformed_response:
    case ErrorKind::missing_fixture:
    case ErrorKind::llm_unavailable:
      return true;
    default:
      return false;
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// ClientStack

ClientStack::ClientStack(const AppConfig& config, const ClientOptions& options) {
  if (!options.replay.empty() && !options.script.empty()) {
    throw Error(ErrorKind::config, "--replay and --script are mutually exclusive");
  }
  if (!options.replay.empty()) {
    base_ = std::make_unique<ReplayClient>(Cassette::load(options.replay));
  } else if (!options.script.empty()) {
    base_ = std::make_unique<ScriptedClient>(ScriptedClient::from_json(read_json_file(options.script)));
  } else {
    HttpChatClient::set_max_in_flight(static_cast<std::ptrdiff_t>(config.llm_max_in_flight));
    base_ = std::make_unique<HttpChatClient>(config.llm);
  }
  top_ = base_.get();
  if (!options.record.empty()) {
    record_path_ = options.record;
    record_cassette_ = Cassette::load_or_empty(options.record);
    recorder_ = std::make_unique<RecordingClient>(*base_, record_cassette_, options.force);
    top_ = recorder_.get();
  }
}

ClientStack::~ClientStack() {
  try {
    save();
  } catch (...) {
  }
}

void ClientStack::save() {
  if (record_cassette_) record_cassette_->save(record_path_);
}

// ---------------------------------------------------------------------------
// Gateway

Gateway::Gateway(AppConfig config, ChatClient& llm, EmbeddingProvider& embedder)
    : config_(std::move(config)), llm_(llm), embedder_(embedder), server_(std::make_unique<httplib::Server>()) {
  server_->set_payload_max_length(16 * 1024 * 1024);
  // httplib defaults to SO_REUSEPORT, which lets a second gateway share the port.
  server_->set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
  });

  server_->Post("/v1/answer", [this](const httplib::Request& req, httplib::Response& res) {
    std::optional<long long> retry_after;
    auto [status, body] = answer(req.body, &retry_after);
    res.status = status;
    if (retry_after) res.set_header("Retry-After", std::to_string(*retry_after));
    res.set_content(body.dump(), "application/json");
  });

  server_->Get(R"(/v1/trace/([0-9A-Za-z_-]+))", [this](const httplib::Request& req, httplib::Response& res) {
    auto t = trace(req.matches[1]);
    if (!t) {
      res.status = 404;
      res.set_content(error_json("not-found", "no trace " + std::string(req.matches[1])).dump(),
                      "application/json");
      return;
    }
    res.set_content(t->dump(), "application/json");
  });

  server_->Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
    nlohmann::json j = {{"status", "ok"},
                        {"name", "acurai"},
                        {"version", kVersion},
                        {"embedder", embedder_.id()},
                        {"model", config_.pipeline.model}};
    res.set_content(j.dump(), "application/json");
  });
}

Gateway::~Gateway() { stop(); }

int Gateway::bind(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = server_->bind_to_any_port(host);
    if (bound < 0) bound = 0;
  } else if (!server_->bind_to_port(host, port)) {
    bound = 0;
  }
  if (bound <= 0) {
    throw Error(ErrorKind::network, "cannot bind " + host + ":" + std::to_string(port) + " (address in use?)");
  }
  return bound;
}

void Gateway::serve() { server_->listen_after_bind(); }

void Gateway::start() {
  thread_ = std::thread([this] { serve(); });
  server_->wait_until_ready();
}

void Gateway::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

std::optional<nlohmann::json> Gateway::trace(const std::string& id) const {
  std::lock_guard<std::mutex> lk(mu_);
  auto it = traces_.find(id);
  if (it == traces_.end()) return std::nullopt;
  return std::optional<nlohmann::json>(std::in_place, it->second);
}

std::pair<int, nlohmann::json> Gateway::answer(const std::string& body, std::optional<long long>* retry_after) {
  nlohmann::json fields = nlohmann::json::array();
  auto field_error = [&](const std::string& field, const std::string& message) {
    fields.push_back({{"field", field}, {"message", message}});
  };
  auto bad_request = [&] {
    return std::make_pair(400, nlohmann::json{{"error", "invalid-input"},
                                              {"message", "request validation failed"},
                                              {"fields", fields}});
  };

  nlohmann::json req;
  try {
    req = nlohmann::json::parse(body);
  } catch (const std::exception&) {
    field_error("body", "not valid JSON");
    return bad_request();
  }
  if (!req.is_object()) {
    field_error("body", "must be a JSON object");
    return bad_request();
  }

  std::string query;
  if (!req.contains("query") || !req["query"].is_string()) {
    field_error("query", "required string");
  } else {
    query = req["query"].get<std::string>();
    if (text::trim(query).empty()) field_error("query", "must not be empty");
  }

  std::vector<std::string> passages;
  if (!req.contains("passages") || !req["passages"].is_array()) {
    field_error("passages", "required array of strings");
  } else if (req["passages"].empty()) {
    field_error("passages", "must not be empty");
  } else {
    const auto& arr = req["passages"];
    for (std::size_t i = 0; i < arr.size(); ++i) {
      if (!arr[i].is_string()) {
        field_error("passages[" + std::to_string(i) + "]", "must be a string");
      } else {
        passages.push_back(arr[i].get<std::string>());
      }
    }
  }

  PipelineConfig pc = config_.pipeline;
  if (req.contains("options")) {
    try {
      apply_pipeline_overrides(pc, req["options"], "options");
      pc.validate();
    } catch (const Error& e) {
      field_error("options", e.what());
    }
  }
  for (const auto& el : req.items()) {
    const std::string& k = el.key();
    if (k != "query" && k != "passages" && k != "options") field_error(k, "unknown field");
  }
  if (!fields.empty()) return bad_request();

  auto remember = [&](const nlohmann::json& t) {
    if (!t.is_object() || !t.contains("trace_id") || !t["trace_id"].is_string()) return;
    const std::string id = t["trace_id"].get<std::string>();
    std::lock_guard<std::mutex> lk(mu_);
    if (!traces_.count(id)) order_.push_back(id);
    traces_[id] = t;
    while (order_.size() > kMaxTraces) {
      traces_.erase(order_.front());
      order_.erase(order_.begin());
    }
  };

  try {
    PipelineResult r = run(query, passages, pc, llm_, embedder_);
    remember(r.trace);
    if (!config_.trace_dir.empty()) write_trace(r, config_.trace_dir);
    if (r.verdict == FinalVerdict::hallucination) {
      // The output gate failed even after falling back to verbatim facts.
      return {500, {{"error", "unfaithful-output"},
                    {"message", "response failed the output faithfulness gate"},
                    {"trace_id", r.trace_id}}};
    }
    nlohmann::json timings = nlohmann::json::object();
    for (const auto& [stage, ms] : r.timings) timings[stage] = ms;
    return {200, {{"answer", r.response}, {"verdict", to_string(r.verdict)}, {"trace_id", r.trace_id},
                  {"timings", timings}}};
  } catch (const PipelineError& e) {
    remember(e.partial_trace());
    nlohmann::json out = error_json(to_string(e.kind()), e.what());
    if (e.partial_trace().contains("trace_id")) out["trace_id"] = e.partial_trace()["trace_id"];
    if (is_backend_error(e.kind())) {
      if (e.retry_after() && retry_after) *retry_after = e.retry_after()->count();
      return {502, out};
    }
    return {e.kind() == ErrorKind::invalid_input ? 400 : 500, out};
  } catch (const Error& e) {
    if (is_backend_error(e.kind())) return {502, error_json(to_string(e.kind()), e.what())};
    return {e.kind() == ErrorKind::invalid_input ? 400 : 500, error_json(to_string(e.kind()), e.what())};
  } catch (const std::exception& e) {
    return {500, error_json("internal", e.what())};
  }
}

// ---------------------------------------------------------------------------
// CLI

namespace {

struct Globals {
  std::string config_path;
  ClientOptions client;
  std::string trace_dir;
};

void print(const nlohmann::json& j) { std::cout << j.dump(2) << std::endl; }

AppConfig load(const Globals& g) {
  AppConfig c = load_config(g.config_path.empty() ? std::nullopt : std::optional<std::string>(g.config_path));
  if (!g.trace_dir.empty()) c.trace_dir = g.trace_dir;
  return c;
}

std::vector<std::string> passages_from(const nlohmann::json& j) {
  const nlohmann::json* arr = &j;
  if (j.is_object() && j.contains("passages")) arr = &j["passages"];
  if (!arr->is_array()) throw Error(ErrorKind::invalid_input, "expected an array of passages");
  std::vector<std::string> out;
  for (const auto& p : *arr) {
    if (!p.is_string()) throw Error(ErrorKind::invalid_input, "passages must be strings");
    out.push_back(p.get<std::string>());
  }
  if (out.empty()) throw Error(ErrorKind::invalid_input, "no passages");
  return out;
}

int cmd_split_query(const Globals& g, const std::string& query) {
  AppConfig c = load(g);
  auto embedder = make_embedder(c);
  CollisionConfig cc;
  cc.threshold = c.pipeline.threshold;
  auto pairs = query_collisions(query, *embedder, cc);
  SplitOptions so;
  so.cap = c.pipeline.split_cap;
  auto queries = split_query(query, pairs, so);

  nlohmann::json cj = nlohmann::json::array();
  for (const auto& p : pairs) {
    cj.push_back({{"left", p.left.text}, {"right", p.right.text}, {"similarity", p.similarity},
                  {"reason", to_string(p.reason)}});
  }
  nlohmann::json qj = nlohmann::json::array();
  for (const auto& q : queries) {
    auto e = query_entity(q);
    qj.push_back({{"index", q.index},
                  {"text", q.text},
                  {"entity", e ? nlohmann::json(entity_display(*e)) : nlohmann::json(nullptr)},
                  {"fallback", q.fallback},
                  {"capped", q.capped}});
  }
  print({{"query", query}, {"embedder", embedder->id()}, {"collisions", cj}, {"atomic_queries", qj}});
  return 0;
}

int cmd_fff(const Globals& g, const std::string& path, const std::string& entity, bool no_llm) {
  AppConfig c = load(g);
  auto passages = passages_from(read_json_file(path));
  auto embedder = make_embedder(c);

  AtomicQuery q;
  q.text = entity;
  if (!entity.empty()) {
    auto nps = nlp::extract_noun_phrases(entity);
    if (nps.empty()) throw Error(ErrorKind::invalid_input, "--entity has no noun phrase: " + entity);
    q.focal_nps.push_back(nps.front());
  }

  FffConfig fc;
  fc.provider = embedder.get();
  fc.collision.threshold = c.pipeline.threshold;
  fc.model = c.pipeline.model;
  fc.temperature = c.pipeline.temperature;
  fc.use_llm = !no_llm && c.pipeline.llm_rewrite;
  fc.max_tokens = c.pipeline.max_statement_tokens;

  std::unique_ptr<ClientStack> stack;
  if (fc.use_llm) stack = std::make_unique<ClientStack>(c, g.client);
  auto packets = build_fact_sets(passages, {q}, stack ? &stack->client() : nullptr, fc);
  const auto& pk = packets.front();
  nlohmann::json out = to_json(pk.fact_set);
  out["degraded"] = pk.degraded;
  out["log"] = pk.log;
  print(out);
  return 0;
}

int cmd_run(const Globals& g, const std::string& path) {
  AppConfig c = load(g);
  nlohmann::json j = read_json_file(path);
  std::string query;
  std::vector<std::string> passages;
  if (j.is_object() && j.contains("response_id")) {
    EvalRecord r = record_from_json(j);
    query = r.query;
    passages = r.passages;
    if (!r.model.empty()) c.pipeline.model = r.model;
    if (r.temperature) c.pipeline.temperature = *r.temperature;
  } else {
    if (!j.is_object() || !j.contains("query") || !j["query"].is_string()) {
      throw Error(ErrorKind::invalid_input, "record needs a string 'query'");
    }
    query = j["query"].get<std::string>();
    passages = passages_from(j);
  }
  auto embedder = make_embedder(c);
  ClientStack stack(c, g.client);
  PipelineResult r;
  try {
    r = run(query, passages, c.pipeline, stack.client(), *embedder);
  } catch (const PipelineError& e) {
    if (!c.trace_dir.empty() && e.partial_trace().contains("trace_id")) {
      PipelineResult partial;
      partial.trace = e.partial_trace();
      partial.trace_id = e.partial_trace()["trace_id"].get<std::string>();
      write_trace(partial, c.trace_dir);
    }
    throw;
  }
  stack.save();
  nlohmann::json out = {{"response", r.response}, {"verdict", to_string(r.verdict)}, {"trace_id", r.trace_id}};
  out["trace_path"] = c.trace_dir.empty() ? nlohmann::json(nullptr) : nlohmann::json(write_trace(r, c.trace_dir));
  nlohmann::json timings = nlohmann::json::object();
  for (const auto& [stage, ms] : r.timings) timings[stage] = ms;
  out["timings"] = timings;
  print(out);
  return r.verdict == FinalVerdict::hallucination ? 1 : 0;
}

int cmd_eval(const Globals& g, const std::string& path, const std::string& csv, std::size_t workers,
             std::optional<double> z) {
  AppConfig c = load(g);
  LoadResult lr = load_dataset(path);
  for (const auto& e : lr.errors) {
    std::cerr << nlohmann::json{{"line", e.line}, {"error", e.message}}.dump() << std::endl;
  }
  auto embedder = make_embedder(c);
  ClientStack stack(c, g.client);
  EvalOptions opts;
  opts.pipeline = c.pipeline;
  opts.workers = workers > 0 ? workers : c.eval_workers;
  opts.z = z.value_or(c.z);
  opts.trace_dir = c.trace_dir;
  EvalSummary s = evaluate(lr.records, opts, stack.client(), *embedder);
  stack.save();
  if (!csv.empty()) {
    std::ofstream out(csv);
    if (!out) throw Error(ErrorKind::io, "cannot write " + csv);
    out << to_csv(s);
  }
  nlohmann::json j = to_json(s);
  j["malformed_lines"] = lr.errors.size();
  print(j);
  return s.all_faithful() ? 0 : 1;
}

int cmd_serve(const Globals& g, const std::string& host, std::optional<int> port) {
  AppConfig c = load(g);
  auto embedder = make_embedder(c);
  ClientStack stack(c, g.client);
  Gateway gw(c, stack.client(), *embedder);
  const std::string h = host.empty() ? c.host : host;
  int bound = gw.bind(h, port.value_or(c.port));
  std::cerr << "acurai gateway listening on " << h << ":" << bound << std::endl;
  print({{"host", h}, {"port", bound}});
  gw.serve();
  return 0;
}

double round4(double v) { return std::round(v * 1e4) / 1e4; }

int cmd_wilson(long long x, long long n, double z) {
  auto [lo, hi] = wilson_interval(x, n, z);
  print(nlohmann::json{{"low", round4(lo)}, {"high", round4(hi)}});
  return 0;
}

int cmd_convert(const std::string& source_info, const std::string& response, const std::string& out,
                bool conflicts_only) {
  auto records = convert_ragtruth(source_info, response, conflicts_only);
  write_jsonl(records, out);
  print({{"records", records.size()}, {"output", out}});
  return 0;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"Acurai faithfulness middleware", "acurai"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--config", g.config_path, "JSON config file (default: $ACURAI_CONFIG)");
  app.add_option("--replay", g.client.replay, "answer model calls from this cassette");
  app.add_option("--record", g.client.record, "record model calls into this cassette");
  app.add_flag("--force-record", g.client.force, "overwrite existing cassette entries");
  app.add_option("--script", g.client.script, "scripted model rules (JSON)");
  app.add_option("--trace-dir", g.trace_dir, "write one trace file per run here");

  std::string query;
  auto* split = app.add_subcommand("split-query", "print the atomic queries of a query");
  split->add_option("query", query, "query text")->required();

  std::string fff_path, entity;
  bool no_llm = false;
  auto* fff = app.add_subcommand("fff", "print the fact set built from passages");
  fff->add_option("passages", fff_path, "JSON array of passages")->required();
  fff->add_option("--entity", entity, "entity the statements must be about");
  fff->add_flag("--no-llm", no_llm, "rule-based rewriting only");

  std::string record_path;
  auto* runc = app.add_subcommand("run", "run the full pipeline on one record");
  runc->add_option("record", record_path, "record JSON")->required();

  std::string dataset, csv;
  std::size_t workers = 0;
  std::optional<double> eval_z;
  auto* evalc = app.add_subcommand("eval", "evaluate a JSONL dataset");
  evalc->add_option("dataset", dataset, "dataset JSONL")->required();
  evalc->add_option("--csv", csv, "write per-record verdicts here");
  evalc->add_option("--workers", workers, "concurrent records");
  evalc->add_option("--z", eval_z, "z for the Wilson interval");

  std::string host;
  std::optional<int> port;
  auto* serve = app.add_subcommand("serve", "run the HTTP gateway");
  serve->add_option("--host", host, "bind address");
  serve->add_option("--port", port, "port (0 picks a free one)");

  long long wx = 0, wn = 0;
  double wz = 1.96;
  auto* wilson = app.add_subcommand("wilson", "Wilson score interval");
  wilson->add_option("successes", wx)->required();
  wilson->add_option("n", wn)->required();
  wilson->add_option("--z", wz, "normal quantile");

  std::string src_info, resp, out;
  bool conflicts_only = false;
  auto* convert = app.add_subcommand("convert", "convert RAGTruth files to JSONL records");
  convert->add_option("--source-info", src_info)->required();
  convert->add_option("--response", resp)->required();
  convert->add_option("--out", out)->required();
  convert->add_flag("--conflicts-only", conflicts_only, "keep only responses with conflict labels");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cerr << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    // A bad --config fails every subcommand, not only the ones that use it.
    if (!g.config_path.empty()) load(g);
    if (*split) return cmd_split_query(g, query);
    if (*fff) return cmd_fff(g, fff_path, entity, no_llm);
    if (*runc) return cmd_run(g, record_path);
    if (*evalc) return cmd_eval(g, dataset, csv, workers, eval_z);
    if (*serve) return cmd_serve(g, host, port);
    if (*wilson) return cmd_wilson(wx, wn, wz);
    if (*convert) return cmd_convert(src_info, resp, out, conflicts_only);
  } catch (const Error& e) {
    std::cerr << error_json(to_string(e.kind()), e.what()).dump() << std::endl;
    return 1;
  } catch (const std::exception& e) {
    std::cerr << error_json("internal", e.what()).dump() << std::endl;
    return 1;
  }
  std::cerr << app.help();
  return 2;
}

}  // namespace acurai
