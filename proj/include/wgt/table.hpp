#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace wgt {

// Named-column numeric table, persisted as TSV with a header row. The first
// header cell names the row key ("doc" for sub-domain documents, "node" for
// graph nodes).
struct FeatureTable {
  std::string key_name;
  std::vector<std::string> columns;
  std::vector<std::string> ids;
  std::vector<std::vector<double>> rows;

  std::string save() const;
  static FeatureTable load(std::string_view text);
};

}  // namespace wgt
