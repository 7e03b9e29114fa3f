#pragma once

#include "docflow/scenario/test_scenario.hpp"

#include <array>
#include <string>
#include <utility>
#include <vector>

namespace docflow::scenario {

struct SpreadsheetModel {
  // "Test scenario", "Source section", "Language", "Preconditions" (joined "; ").
  std::vector<std::pair<std::string, std::string>> header_block;
  std::array<std::string, 3> columns{"Step No.", "Action", "Expected Result"};
  std::vector<std::array<std::string, 3>> rows;

  bool operator==(const SpreadsheetModel&) const = default;
};

SpreadsheetModel build_spreadsheet(const TestScenario& scenario);

// RFC 4180: CRLF line ends; fields with ',', '"', CR or LF are quoted.
std::string to_csv(const SpreadsheetModel& sheet);

// Single-sheet workbook, stored (uncompressed) zip, inline strings. Cell
// texts are identical to the CSV fields; step numbers are numeric cells.
std::string to_xlsx(const SpreadsheetModel& sheet);

}  // namespace docflow::scenario
