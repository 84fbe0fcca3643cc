// Copyright 2026 The hardneg Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "hardneg/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "hardneg/error.hpp"
#include "json.hpp"

namespace hardneg::eval {
namespace {

using nlohmann::json;

json IntKeyed(const std::map<int, double>& m) {
  json out = json::object();
  for (const auto& [k, v] : m) out[std::to_string(k)] = v;
  return out;
}

std::map<int, double> ParseIntKeyed(const json& j, const char* field) {
  if (!j.is_object()) {
    throw ParseError(ParseError::Kind::kBadValue, std::string("report: ") + field +
                                                      " must be an object");
  }
  std::map<int, double> out;
  for (const auto& [k, v] : j.items()) {
    std::size_t used = 0;
    int key = 0;
    try {
      key = std::stoi(k, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != k.size() || !v.is_number()) {
      throw ParseError(ParseError::Kind::kBadValue,
                       std::string("report: bad entry '") + k + "' in " + field);
    }
    out[key] = v.get<double>();
  }
  return out;
}

json Parse(const std::string& text) {
  try {
    json j = json::parse(text);
    if (!j.is_object()) throw ParseError(ParseError::Kind::kBadValue, "report: not an object");
    return j;
  } catch (const json::exception& e) {
    throw ParseError(ParseError::Kind::kBadValue, std::string("report: ") + e.what());
  }
}

void AttachConfig(json& doc, const std::string& config_json) {
  if (config_json.empty()) return;
  try {
    doc["config"] = json::parse(config_json);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("report: config echo is not JSON: ") + e.what());
  }
}

json RetrievalJson(const RetrievalReport& r) {
  return {{"map", r.map}, {"mp", IntKeyed(r.mp)}, {"recall", IntKeyed(r.recall)},
          {"queries", r.queries}};
}

std::string Fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string Render(const std::vector<std::string>& header,
                   const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size(), 0);
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
  }
  std::ostringstream out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c == 0) {
        out << cells[c] << std::string(width[c] - cells[c].size(), ' ');
      } else {
        out << "  " << std::string(width[c] - cells[c].size(), ' ') << cells[c];
      }
    }
    out << '\n';
  };
  line(header);
  std::size_t total = 0;
  for (std::size_t w : width) total += w;
  out << std::string(total + 2 * (width.size() - 1), '-') << '\n';
  for (const auto& r : rows) line(r);
  return out.str();
}

}  // namespace

std::string MatchingReportToJson(const MatchingReport& report, const std::string& config_json) {
  json doc = {{"mma", IntKeyed(report.mma)},
              {"eta", report.eta},
              {"precision", report.precision},
              {"recall", report.recall},
              {"pairs", report.pairs},
              {"skipped", report.skipped}};
  AttachConfig(doc, config_json);
  return doc.dump(2) + "\n";
}

MatchingReport MatchingReportFromJson(const std::string& text) {
  const json j = Parse(text);
  MatchingReport r;
  try {
    r.mma = ParseIntKeyed(j.at("mma"), "mma");
    r.eta = j.at("eta").get<double>();
    r.precision = j.at("precision").get<double>();
    r.recall = j.at("recall").get<double>();
    r.pairs = j.at("pairs").get<std::size_t>();
    r.skipped = j.at("skipped").get<std::size_t>();
  } catch (const json::exception& e) {
    throw ParseError(ParseError::Kind::kBadValue, std::string("matching report: ") + e.what());
  }
  return r;
}

std::string RetrievalReportToJson(const RetrievalReport& report,
                                  const std::string& config_json) {
  json doc = RetrievalJson(report);
  AttachConfig(doc, config_json);
  return doc.dump(2) + "\n";
}

RetrievalReport RetrievalReportFromJson(const std::string& text) {
  const json j = Parse(text);
  RetrievalReport r;
  try {
    r.map = j.at("map").get<double>();
    r.mp = ParseIntKeyed(j.at("mp"), "mp");
    r.recall = ParseIntKeyed(j.at("recall"), "recall");
    r.queries = j.at("queries").get<std::size_t>();
  } catch (const json::exception& e) {
    throw ParseError(ParseError::Kind::kBadValue, std::string("retrieval report: ") + e.what());
  }
  return r;
}

std::string RetrievalEvaluationToJson(const RetrievalEvaluation& eval,
                                      const std::string& config_json) {
  json doc = RetrievalJson(eval.after);
  doc["before_rerank"] = RetrievalJson(eval.before);
  AttachConfig(doc, config_json);
  return doc.dump(2) + "\n";
}

std::string RenderMatchingTable(
    const std::vector<std::pair<std::string, MatchingReport>>& rows) {
  std::vector<std::string> header = {"method"};
  std::vector<int> thresholds;
  for (const auto& [name, r] : rows) {
    for (const auto& [t, v] : r.mma) {
      if (std::find(thresholds.begin(), thresholds.end(), t) == thresholds.end()) {
        thresholds.push_back(t);
      }
    }
  }
  std::sort(thresholds.begin(), thresholds.end());
  for (int t : thresholds) header.push_back("MMA@" + std::to_string(t));
  for (const char* h : {"eta", "precision", "recall", "pairs", "skipped"}) header.push_back(h);
  std::vector<std::vector<std::string>> cells;
  for (const auto& [name, r] : rows) {
    std::vector<std::string> row = {name};
    for (int t : thresholds) {
      const auto it = r.mma.find(t);
      row.push_back(it == r.mma.end() ? "-" : Fixed(it->second));
    }
    row.push_back(Fixed(r.eta));
    row.push_back(Fixed(r.precision));
    row.push_back(Fixed(r.recall));
    row.push_back(std::to_string(r.pairs));
    row.push_back(std::to_string(r.skipped));
    cells.push_back(std::move(row));
  }
  return Render(header, cells);
}

std::string RenderRetrievalTable(
    const std::vector<std::pair<std::string, RetrievalReport>>& rows) {
  std::vector<std::string> header = {"method", "mAP"};
  for (int k : kRetrievalCutoffs) header.push_back("mP@" + std::to_string(k));
  for (int k : kRetrievalCutoffs) header.push_back("R@" + std::to_string(k));
  header.push_back("queries");
  std::vector<std::vector<std::string>> cells;
  for (const auto& [name, r] : rows) {
    std::vector<std::string> row = {name, Fixed(r.map)};
    for (int k : kRetrievalCutoffs) {
      const auto it = r.mp.find(k);
      row.push_back(it == r.mp.end() ? "-" : Fixed(it->second));
    }
    for (int k : kRetrievalCutoffs) {
      const auto it = r.recall.find(k);
      row.push_back(it == r.recall.end() ? "-" : Fixed(it->second));
    }
    row.push_back(std::to_string(r.queries));
    cells.push_back(std::move(row));
  }
  return Render(header, cells);
}

void WriteTextFile(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << content;
  out.close();
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace hardneg::eval
