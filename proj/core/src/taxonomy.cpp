#include "apitag/taxonomy.hpp"

#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "apitag/errors.hpp"

namespace apitag {

using json = nlohmann::json;

std::string_view to_string(TagKind kind) {
  switch (kind) {
    case TagKind::Business: return "business";
    case TagKind::Technical: return "technical";
    case TagKind::None: return "none";
  }
  return "none";
}

namespace {

TagKind kind_from_string(std::string_view s) {
  if (s == "business") return TagKind::Business;
  if (s == "technical") return TagKind::Technical;
  if (s == "none") return TagKind::None;
  throw ConfigError("unknown tag kind: " + std::string(s));
}

TagReasoning make_entry(int id, std::string_view name, TagKind kind, std::string reasoning,
                        std::vector<std::string> clues, std::vector<std::string> vars) {
  return TagReasoning{Tag{id, std::string(name), kind}, std::move(reasoning), std::move(clues),
                      std::move(vars)};
}

}  // namespace

Taxonomy::Taxonomy(std::vector<TagReasoning> entries) : entries_(std::move(entries)) {
  validate();
}

void Taxonomy::validate() const {
  if (entries_.empty()) throw ConfigError("taxonomy must not be empty");
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const TagReasoning& e = entries_[i];
    if (e.tag.id != static_cast<int>(i) + 1)
      throw ConfigError("taxonomy ids must be dense starting at 1");
    if (e.tag.name != tags::kNone && e.primary_reasoning.empty())
      throw ConfigError("tag " + e.tag.name + " needs a primary reasoning");
    for (std::size_t j = 0; j < i; ++j)
      if (entries_[j].tag.name == e.tag.name) throw DuplicateTag(e.tag.name);
  }
  if (entries_.back().tag.name != tags::kNone)
    throw ConfigError("the None class must be last");
}

Taxonomy Taxonomy::standard() {
  std::vector<TagReasoning> e;
  e.push_back(make_entry(
      1, tags::kUserRegistration, TagKind::Business,
      "If the HTTP request creates or registers a new user account with the application.",
      {"The request usually carries a new username together with an email address or password.",
       "Paths often mention register, signup or account creation."},
      {"username", "email"}));
  e.push_back(make_entry(
      2, tags::kCommenting, TagKind::Business,
      "If the HTTP request posts a comment, review or similar user-authored text to the "
      "application.",
      {"The request body carries free-form text such as a comment, review or message field.",
       "The method writes data (POST, PUT or PATCH), it does not merely read comments."},
      {"comment"}));
  e.push_back(make_entry(
      3, tags::kPurchaseProduct, TagKind::Business,
      "If the HTTP request buys, orders or checks out a product in the application.",
      {"The request usually carries a product identifier and a quantity to purchase.",
       "Paths often mention purchase, buy, checkout, order or payment."},
      {"quantity", "product_id"}));
  e.push_back(make_entry(
      4, tags::kAddToCart, TagKind::Business,
      "If the HTTP request adds an item to a shopping cart or basket.",
      {"The request usually carries a product identifier and a quantity to hold.",
       "Paths often mention cart or basket and the method writes data."},
      {"quantity", "product_id"}));
  e.push_back(make_entry(
      5, tags::kResponseDataLimit, TagKind::Technical,
      "If the HTTP request carries a parameter that controls how many records the server "
      "returns in its response.",
      {"Look for parameters that set a count, limit, page size or maximum number of results.",
       "The parameter value is a number that scales the size of the response."},
      {"num_records"}));
  e.push_back(make_entry(
      6, tags::kLogin, TagKind::Technical,
      "If the HTTP request signs a user into the application or creates a session with "
      "credentials.",
      {"The request usually carries a username or email together with a password.",
       "Paths often mention login, signin or authenticate."},
      {"username"}));
  e.push_back(make_entry(
      7, tags::kLogout, TagKind::Technical,
      "If the HTTP request signs a user out of the application or ends a session.",
      {"Paths often mention logout or signout, or delete a session resource."},
      {}));
  e.push_back(make_entry(
      8, tags::kFileUpload, TagKind::Technical,
      "If the HTTP request uploads or adds an image/file to the application/server.",
      {"The request should have file name or reference to file being uploaded.",
       "Multipart form data or paths mentioning upload are strong signals."},
      {"file_name"}));
  e.push_back(make_entry(
      9, tags::kContainsAuthTokens, TagKind::Technical,
      "If the HTTP request carries an authorization token, API key or other credential "
      "material with it.",
      {"Look for an Authorization header or token-like parameters such as access_token or "
       "api_key."},
      {}));
  e.push_back(make_entry(
      10, tags::kNone, TagKind::None,
      "If the HTTP request matches none of the other classes, assign this class.", {}, {}));
  return Taxonomy(std::move(e));
}

Taxonomy Taxonomy::extended(std::string_view name, TagKind kind, std::string primary_reasoning,
                            std::vector<std::string> clues,
                            std::vector<std::string> policy_variables) const {
  if (find(name)) throw DuplicateTag(std::string(name));
  std::vector<TagReasoning> e = entries_;
  TagReasoning none_entry = e.back();
  e.pop_back();
  int new_id = static_cast<int>(e.size()) + 1;
  e.push_back(make_entry(new_id, name, kind, std::move(primary_reasoning), std::move(clues),
                         std::move(policy_variables)));
  none_entry.tag.id = new_id + 1;
  e.push_back(std::move(none_entry));
  return Taxonomy(std::move(e));
}

const TagReasoning* Taxonomy::find(std::string_view name) const {
  for (const TagReasoning& e : entries_)
    if (e.tag.name == name) return &e;
  return nullptr;
}

const TagReasoning* Taxonomy::by_id(int id) const {
  if (id < 1 || id > static_cast<int>(entries_.size())) return nullptr;
  return &entries_[static_cast<std::size_t>(id) - 1];
}

const Tag& Taxonomy::none() const { return entries_.back().tag; }

Taxonomy Taxonomy::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open taxonomy file: " + file.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError("taxonomy file " + file.string() + ": " + e.what());
  }
  std::vector<TagReasoning> entries;
  bool saw_none = false;
  for (const json& t : doc.at("tags")) {
    TagReasoning e;
    e.tag.id = static_cast<int>(entries.size()) + 1;
    e.tag.name = t.at("name").get<std::string>();
    e.tag.kind = kind_from_string(t.at("kind").get<std::string>());
    e.primary_reasoning = t.value("reasoning", "");
    e.clues = t.value("clues", std::vector<std::string>{});
    e.policy_variables = t.value("policy_variables", std::vector<std::string>{});
    if (e.tag.name == tags::kNone) saw_none = true;
    entries.push_back(std::move(e));
  }
  if (!saw_none) {
    TagReasoning none_entry = make_entry(
        static_cast<int>(entries.size()) + 1, tags::kNone, TagKind::None,
        "If the HTTP request matches none of the other classes, assign this class.", {}, {});
    entries.push_back(std::move(none_entry));
  }
  return Taxonomy(std::move(entries));
}

void Taxonomy::save(const std::filesystem::path& file) const {
  json doc;
  doc["tags"] = json::array();
  for (const TagReasoning& e : entries_) {
    doc["tags"].push_back({{"name", e.tag.name},
                           {"kind", std::string(to_string(e.tag.kind))},
                           {"reasoning", e.primary_reasoning},
                           {"clues", e.clues},
                           {"policy_variables", e.policy_variables}});
  }
  std::ofstream out(file);
  if (!out) throw ConfigError("cannot write taxonomy file: " + file.string());
  out << doc.dump(2) << "\n";
}

}  // namespace apitag
