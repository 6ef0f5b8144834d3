#include "wgt/table.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

#include "wgt/error.hpp"

namespace wgt {

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    cells.push_back(line.substr(start, tab == std::string_view::npos ? line.npos : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return cells;
}

void append_number(std::string& out, double v) {
  char buf[32];
  const auto n = std::snprintf(buf, sizeof buf, "%.17g", v);
  out.append(buf, static_cast<std::size_t>(n));
}

}  // namespace

std::string FeatureTable::save() const {
  std::string out = key_name;
  for (const auto& c : columns) out += "\t" + c;
  out += "\n";
  for (std::size_t r = 0; r < ids.size(); ++r) {
    out += ids[r];
    for (const double v : rows[r]) {
      out += '\t';
      append_number(out, v);
    }
    out += '\n';
  }
  return out;
}

FeatureTable FeatureTable::load(std::string_view text) {
  FeatureTable table;
  bool header = true;
  std::size_t line_no = 0;
  for (std::size_t pos = 0; pos < text.size();) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    auto line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const auto cells = split_tabs(line);
    if (header) {
      table.key_name = std::string(cells.front());
      for (std::size_t i = 1; i < cells.size(); ++i) table.columns.emplace_back(cells[i]);
      header = false;
      continue;
    }
    if (cells.size() != table.columns.size() + 1) {
      throw DataError("feature table line " + std::to_string(line_no) + " has " +
                      std::to_string(cells.size() - 1) + " values, expected " +
                      std::to_string(table.columns.size()));
    }
    std::vector<double> row;
    row.reserve(table.columns.size());
    for (std::size_t i = 1; i < cells.size(); ++i) {
      double v = 0;
      const auto* begin = cells[i].data();
      const auto* end = begin + cells[i].size();
      const auto [ptr, ec] = std::from_chars(begin, end, v);
      if (ec != std::errc{} || ptr != end || !std::isfinite(v)) {
        throw DataError("feature table line " + std::to_string(line_no) + ", column '" +
                        table.columns[i - 1] + "': not a finite number");
      }
      row.push_back(v);
    }
    table.ids.emplace_back(cells.front());
    table.rows.push_back(std::move(row));
  }
  if (header) throw DataError("feature table has no header row");
  return table;
}

}  // namespace wgt
