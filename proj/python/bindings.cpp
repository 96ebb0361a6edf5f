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

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>
#include <memory>

#include <nlohmann/json.hpp>

#include "acurai/collision.hpp"
#include "acurai/config.hpp"
#include "acurai/error.hpp"
#include "acurai/faithfulness.hpp"
#include "acurai/harness.hpp"
#include "acurai/pipeline.hpp"
#include "acurai/placeholder.hpp"
#include "acurai/query_split.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

// Structured values cross the boundary as JSON text; the Python package
// decodes them.
std::string dump(const json& j) { return j.dump(); }

json atomic_query_json(const acurai::AtomicQuery& q) {
  json nps = json::array();
  for (const auto& np : q.focal_nps) nps.push_back(np.text);
  return {{"index", q.index}, {"text", q.text}, {"focal_nps", nps}, {"fallback", q.fallback}, {"capped", q.capped}};
}

acurai::PlaceholderTable table_from_json(const json& j) {
  acurai::PlaceholderTable t(j.value("id", std::string("placeholders")), j.value("prefix", std::string("QQ")));
  for (const auto& e : j.at("entries")) {
    const auto got = t.acquire(e.at("orig").get<std::string>(),
                               acurai::placeholder_kind_from_string(e.at("kind").get<std::string>()));
    if (got != e.at("ph").get<std::string>()) {
      throw acurai::Error(acurai::ErrorKind::invalid_input, "placeholder table entries are out of order");
    }
  }
  return t;
}

// Replay cassette or scripted rules stand in for a live model.
std::unique_ptr<acurai::ChatClient> make_client(const std::string& replay, const std::string& script) {
  if (!replay.empty()) return std::make_unique<acurai::ReplayClient>(acurai::Cassette::load(replay));
  if (!script.empty()) {
    std::ifstream in(script);
    if (!in) throw acurai::Error(acurai::ErrorKind::io, "cannot open script: " + script);
    json j;
    in >> j;
    return std::make_unique<acurai::ScriptedClient>(acurai::ScriptedClient::from_json(j));
  }
  acurai::AppConfig cfg = acurai::load_config();
  acurai::HttpChatClient::set_max_in_flight(static_cast<std::ptrdiff_t>(cfg.llm_max_in_flight));
  return std::make_unique<acurai::HttpChatClient>(cfg.llm);
}

acurai::PipelineConfig pipeline_config(const std::string& overrides) {
  acurai::PipelineConfig p = acurai::load_config().pipeline;
  if (!overrides.empty()) acurai::apply_pipeline_overrides(p, json::parse(overrides), "config");
  p.validate();
  return p;
}

}  // namespace

PYBIND11_MODULE(_acurai, m) {
  m.doc() = "Acurai faithfulness middleware";

  static py::exception<acurai::Error> error(m, "AcuraiError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const acurai::Error& e) {
      // "kind: message", so callers can dispatch on the stable kind.
      PyErr_SetString(error.ptr(), (std::string(acurai::to_string(e.kind())) + ": " + e.what()).c_str());
    }
  });

  m.def("normalize", &acurai::normalize, py::arg("text"));
  m.def("segment_response", &acurai::segment_response, py::arg("response"));

  m.def(
      "is_supported",
      [](const std::string& statement, const std::vector<std::string>& sources) {
        const auto r = acurai::is_supported(statement, sources);
        json j = {{"supported", r.supported}, {"score", r.score}, {"missing", r.missing}, {"reasons", r.reasons}};
        j["best_match"] = r.best_match ? json(*r.best_match) : json(nullptr);
        return dump(j);
      },
      py::arg("statement"), py::arg("sources"));

  m.def(
      "check_response",
      [](const std::string& response, const std::vector<std::string>& sources) {
        return dump(acurai::to_json(acurai::check_response(response, sources)));
      },
      py::arg("response"), py::arg("sources"));

  m.def(
      "split_query",
      [](const std::string& query, double threshold, std::size_t cap) {
        acurai::HashedNgramProvider emb;
        acurai::CollisionConfig cc;
        cc.threshold = threshold;
        const auto qs = acurai::split_query(query, acurai::query_collisions(query, emb, cc), acurai::SplitOptions{cap});
        json out = json::array();
        for (const auto& q : qs) out.push_back(atomic_query_json(q));
        return dump(out);
      },
      py::arg("query"), py::arg("threshold") = 0.75, py::arg("cap") = 16);

  m.def("wilson_interval", &acurai::wilson_interval, py::arg("successes"), py::arg("n"), py::arg("z") = 1.96);
  m.def("format_interval", &acurai::format_interval, py::arg("low"), py::arg("high"), py::arg("decimals") = 2);

  m.def(
      "protect",
      [](const std::string& text, const std::string& prefix) {
        acurai::PlaceholderTable t("placeholders", prefix);
        const auto masked = acurai::apply_placeholders(text, acurai::detect_protected_spans(text), t);
        json tj = acurai::to_json(t);
        tj["prefix"] = prefix;
        return py::make_tuple(masked, dump(tj));
      },
      py::arg("text"), py::arg("prefix") = "QQ");

  m.def(
      "remap",
      [](const std::string& response, const std::string& table) {
        acurai::PlaceholderTable t;
        try {
          t = table_from_json(json::parse(table));
        } catch (const json::exception& e) {
          throw acurai::Error(acurai::ErrorKind::invalid_input, std::string("malformed placeholder table: ") + e.what());
        }
        const auto [out, rep] = acurai::remap(response, t);
        return py::make_tuple(out, dump(acurai::to_json(rep)));
      },
      py::arg("response"), py::arg("table"));

  m.def(
      "run",
      [](const std::string& query, const std::vector<std::string>& passages, const std::string& replay,
         const std::string& script, const std::string& config) {
        const auto cfg = pipeline_config(config);
        auto client = make_client(replay, script);
        acurai::HashedNgramProvider emb;
        acurai::PipelineResult r;
        {
          py::gil_scoped_release release;
          r = acurai::run(query, passages, cfg, *client, emb);
        }
        return dump({{"response", r.response},
                     {"verdict", acurai::to_string(r.verdict)},
                     {"trace_id", r.trace_id},
                     {"trace", r.trace}});
      },
      py::arg("query"), py::arg("passages"), py::arg("replay") = "", py::arg("script") = "",
      py::arg("config") = "");

  m.def(
      "evaluate",
      [](const std::string& dataset, const std::string& replay, const std::string& script, std::size_t workers,
         double z) {
        const auto loaded = acurai::load_dataset(dataset);
        auto client = make_client(replay, script);
        acurai::HashedNgramProvider emb;
        acurai::EvalOptions opts;
        opts.pipeline = pipeline_config("");
        opts.workers = workers;
        opts.z = z;
        acurai::EvalSummary s;
        {
          py::gil_scoped_release release;
          s = acurai::evaluate(loaded.records, opts, *client, emb);
        }
        json j = acurai::to_json(s);
        j["malformed_lines"] = loaded.errors.size();
        return dump(j);
      },
      py::arg("dataset"), py::arg("replay") = "", py::arg("script") = "", py::arg("workers") = 1,
      py::arg("z") = 1.96);
}
