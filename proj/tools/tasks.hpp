#pragma once

#include <map>
#include <string>
#include <vector>

#include "scenario.hpp"

namespace tonelli::cli {

/// Numeric table; integer columns print without an exponent.
struct Table {
  std::vector<std::string> columns;
  std::vector<bool> integer;
  std::vector<std::vector<double>> rows;

  void add_column(std::string name, bool is_integer = false) {
    columns.push_back(std::move(name));
    integer.push_back(is_integer);
  }
};

/// Comma-separated, header row, LF endings, %.16e for real columns.
std::string to_csv(const Table& t);
json to_json(const Table& t);

/// Files to write (path -> contents) and the stdout summary of one task.
struct TaskOutput {
  std::map<std::string, std::string> files;
  json summary;
  int exit_code = 0;
};

/// Runs a validated scenario; errors propagate as tonelli::Error.
TaskOutput run_task(const Scenario& s, const std::string& self_path);

}  // namespace tonelli::cli
