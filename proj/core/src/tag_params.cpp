#include "apitag/tag_params.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "apitag/errors.hpp"
#include "apitag/util.hpp"

namespace apitag {

using json = nlohmann::json;

SynonymTable SynonymTable::standard() {
  SynonymTable t;
  t.add("num_records", {"count", "num_records", "num_results", "num_result", "numresult",
                        "max_results", "max_records", "limit", "size", "page_size", "per_page",
                        "results_per_page", "num_rows", "max_rows", "record_count", "top_k"});
  t.add("username", {"user", "username", "user_name", "uname", "login", "login_id",
                     "login_name", "handle"});
  t.add("email", {"email", "email_address", "e_mail", "mail"});
  t.add("file_name", {"file", "file_name", "filename", "attachment", "upload_file",
                      "document", "image_file"});
  t.add("quantity", {"quantity", "qty", "amount", "num_items", "item_count", "units"});
  t.add("product_id", {"product", "product_id", "item", "item_id", "sku", "product_code",
                       "goods_id", "listing_id"});
  t.add("comment", {"comment", "text", "review", "message", "content", "comment_text",
                    "review_text", "body_text"});
  return t;
}

void SynonymTable::add(std::string_view variable, std::vector<std::string> patterns) {
  std::vector<std::string>& row = table_[std::string(variable)];
  for (std::string& p : patterns) row.push_back(normalize_param_name(p));
}

bool SynonymTable::matches(std::string_view param_name, std::string_view variable) const {
  const std::vector<std::string>* row = patterns(variable);
  if (!row) return false;
  std::string normalized = normalize_param_name(param_name);
  for (const std::string& pattern : *row)
    if (pattern == normalized) return true;
  return false;
}

const std::vector<std::string>* SynonymTable::patterns(std::string_view variable) const {
  auto it = table_.find(std::string(variable));
  return it == table_.end() ? nullptr : &it->second;
}

SynonymTable SynonymTable::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open synonym file: " + file.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError("synonym file " + file.string() + ": " + e.what());
  }
  SynonymTable t;
  for (const auto& [variable, patterns] : doc.at("variables").items()) {
    std::vector<std::string> row = patterns.get<std::vector<std::string>>();
    if (row.empty()) throw ConfigError("synonym variable " + variable + " has no patterns");
    t.add(variable, std::move(row));
  }
  return t;
}

void SynonymTable::save(const std::filesystem::path& file) const {
  json doc;
  doc["variables"] = json::object();
  for (const auto& [variable, patterns] : table_) doc["variables"][variable] = patterns;
  std::ofstream out(file);
  if (!out) throw ConfigError("cannot write synonym file: " + file.string());
  out << doc.dump(2) << "\n";
}

bool synonym_match(std::string_view param_name, std::string_view variable,
                   const SynonymTable& syn) {
  return syn.matches(param_name, variable);
}

std::vector<std::string> policy_variables_for(const Tag& tag, const Taxonomy& tx) {
  const TagReasoning* entry = tx.find(tag.name);
  return entry ? entry->policy_variables : std::vector<std::string>{};
}

const std::string* TagDetail::value(std::string_view variable) const {
  auto it = variables.find(std::string(variable));
  return it == variables.end() ? nullptr : &it->second;
}

namespace {

void flag_demotable(TagDetail& detail, const Taxonomy& tx) {
  for (const Tag& tag : detail.tags.tags()) {
    std::vector<std::string> expected = policy_variables_for(tag, tx);
    if (expected.empty()) continue;
    bool all_missing = true;
    for (const std::string& variable : expected)
      if (detail.variables.count(variable)) all_missing = false;
    if (all_missing) detail.demotable.insert(tag.name);
  }
}

}  // namespace

TagDetail extract_tag_params(const TagSet& tags, const ParsedRequest& r,
                             const SynonymTable& syn, const Taxonomy& tx) {
  TagDetail detail;
  detail.tags = tags;
  std::vector<std::pair<std::string, std::string>> params = r.merged_params();
  for (const Tag& tag : tags.tags()) {
    for (const std::string& variable : policy_variables_for(tag, tx)) {
      if (detail.variables.count(variable)) continue;
      bool matched = false;
      for (const auto& [name, value] : params) {
        if (syn.matches(name, variable)) {
          detail.variables[variable] = value;
          detail.param_names[variable] = name;
          matched = true;
          break;
        }
      }
      if (!matched) detail.missing.insert(variable);
    }
  }
  flag_demotable(detail, tx);
  return detail;
}

TagDetail extract_with_known_names(const TagSet& tags,
                                   const std::map<std::string, std::string>& param_names,
                                   const ParsedRequest& r, const Taxonomy& tx) {
  TagDetail detail;
  detail.tags = tags;
  std::vector<std::pair<std::string, std::string>> params = r.merged_params();
  auto lookup = [&](const std::string& name) -> const std::string* {
    for (const auto& [k, v] : params)
      if (k == name) return &v;
    return nullptr;
  };
  for (const Tag& tag : tags.tags()) {
    for (const std::string& variable : policy_variables_for(tag, tx)) {
      if (detail.variables.count(variable)) continue;
      auto known = param_names.find(variable);
      const std::string* value = known == param_names.end() ? nullptr : lookup(known->second);
      if (value) {
        detail.variables[variable] = *value;
        detail.param_names[variable] = known->second;
      } else {
        detail.missing.insert(variable);
      }
    }
  }
  flag_demotable(detail, tx);
  return detail;
}

}  // namespace apitag
