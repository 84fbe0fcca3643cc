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

#ifndef HARDNEG_REPORT_HPP_
#define HARDNEG_REPORT_HPP_

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "hardneg/evaluation.hpp"

namespace hardneg::eval {

// {"mma":{"1":..},"eta":..,"precision":..,"recall":..,"pairs":n,"skipped":m}.
// A non-empty `config_json` is embedded under "config".
std::string MatchingReportToJson(const MatchingReport& report,
                                 const std::string& config_json = {});
// Throws ParseError on malformed documents.
MatchingReport MatchingReportFromJson(const std::string& text);

// {"map":..,"mp":{"1","5","10"},"recall":{"1","5","10"},"queries":q}.
std::string RetrievalReportToJson(const RetrievalReport& report,
                                  const std::string& config_json = {});
RetrievalReport RetrievalReportFromJson(const std::string& text);

// Post-re-rank metrics at the top level and the global-only ranking under
// "before_rerank".
std::string RetrievalEvaluationToJson(const RetrievalEvaluation& eval,
                                      const std::string& config_json = {});

// Aligned plain-text tables, one row per named configuration.
std::string RenderMatchingTable(
    const std::vector<std::pair<std::string, MatchingReport>>& rows);
std::string RenderRetrievalTable(
    const std::vector<std::pair<std::string, RetrievalReport>>& rows);

// Throws Error when the file cannot be written.
void WriteTextFile(const std::filesystem::path& path, const std::string& content);

}  // namespace hardneg::eval

#endif  // HARDNEG_REPORT_HPP_
