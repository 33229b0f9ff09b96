#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "apitag/http_model.hpp"
#include "apitag/tagging.hpp"
#include "apitag/taxonomy.hpp"

namespace apitag {

// Maps each policy variable to the request-parameter name patterns that fill
// it. Patterns are stored in normalized form (lowercase, camel-case split),
// so "maxResults" and "max_results" both hit the num_records row.
class SynonymTable {
 public:
  // Seeded with the common request-parameter spellings for the built-in
  // policy variables.
  static SynonymTable standard();

  static SynonymTable load(const std::filesystem::path& file);
  void save(const std::filesystem::path& file) const;

  void add(std::string_view variable, std::vector<std::string> patterns);

  // True iff the normalized parameter name matches a pattern of the variable.
  bool matches(std::string_view param_name, std::string_view variable) const;

  const std::vector<std::string>* patterns(std::string_view variable) const;
  const std::map<std::string, std::vector<std::string>>& table() const { return table_; }

 private:
  std::map<std::string, std::vector<std::string>> table_;
};

bool synonym_match(std::string_view param_name, std::string_view variable,
                   const SynonymTable& syn);

// Policy variables associated with a tag, e.g. PurchaseProduct carries
// quantity and product_id. Variable-less tags yield an empty list.
std::vector<std::string> policy_variables_for(const Tag& tag, const Taxonomy& tx);

// Tags plus the policy-variable values extracted for them from one request.
// Values are raw strings; numeric interpretation is left to policies.
// `missing` lists expected variables with no matching parameter.
// `param_names` records which request parameter filled each variable, which is
// what the tag cache stores. Tags whose expected variables are all missing are
// listed in `demotable`: the classification is likely a false positive, and
// the demotion decision is left to policies.
struct TagDetail {
  TagSet tags;
  std::map<std::string, std::string> variables;
  std::set<std::string> missing;
  std::map<std::string, std::string> param_names;
  std::set<std::string> demotable;

  const std::string* value(std::string_view variable) const;
};

// Fills policy variables for every tag in `tags` by scanning the request's
// merged parameters (query order first, then body; body wins name
// collisions). First match per variable wins.
TagDetail extract_tag_params(const TagSet& tags, const ParsedRequest& r,
                             const SynonymTable& syn, const Taxonomy& tx);

// Re-extracts values using previously resolved parameter names (a cache hit
// path): no synonym matching, exact parameter-name lookup only.
TagDetail extract_with_known_names(const TagSet& tags,
                                   const std::map<std::string, std::string>& param_names,
                                   const ParsedRequest& r, const Taxonomy& tx);

}  // namespace apitag
