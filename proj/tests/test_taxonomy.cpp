#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "apitag/errors.hpp"
#include "apitag/taxonomy.hpp"
#include "test_util.hpp"

using namespace apitag;

TEST_CASE("standard taxonomy layout") {
  Taxonomy tx = Taxonomy::standard();
  CHECK(tx.size() == 10);

  // Dense ids 1..10, None last.
  for (std::size_t i = 0; i < tx.size(); ++i)
    CHECK(tx.entries()[i].tag.id == static_cast<int>(i) + 1);
  CHECK(tx.entries().back().tag.name == tags::kNone);
  CHECK(tx.none().id == 10);

  const TagReasoning* upload = tx.find(tags::kFileUpload);
  REQUIRE(upload != nullptr);
  bool has_clue = false;
  for (const std::string& clue : upload->clues)
    if (clue.find("file name or reference to file being uploaded") != std::string::npos)
      has_clue = true;
  CHECK(has_clue);

  CHECK(tx.find(tags::kUserRegistration)->tag.kind == TagKind::Business);
  CHECK(tx.find(tags::kCommenting)->tag.kind == TagKind::Business);
  CHECK(tx.find(tags::kPurchaseProduct)->tag.kind == TagKind::Business);
  CHECK(tx.find(tags::kAddToCart)->tag.kind == TagKind::Business);
  CHECK(tx.find(tags::kResponseDataLimit)->tag.kind == TagKind::Technical);
  CHECK(tx.find(tags::kLogin)->tag.kind == TagKind::Technical);
  CHECK(tx.find(tags::kLogout)->tag.kind == TagKind::Technical);
  CHECK(tx.find(tags::kFileUpload)->tag.kind == TagKind::Technical);
  CHECK(tx.find(tags::kContainsAuthTokens)->tag.kind == TagKind::Technical);

  for (const TagReasoning& e : tx.entries())
    if (e.tag.name != tags::kNone) CHECK_FALSE(e.primary_reasoning.empty());
}

TEST_CASE("extension appends before None and renumbers None only") {
  Taxonomy base = Taxonomy::standard();
  Taxonomy extended = base.extended("PasswordReset", TagKind::Technical,
                                    "If the request resets a user's password.");
  CHECK(extended.size() == 11);
  CHECK(extended.find("PasswordReset")->tag.id == 10);
  CHECK(extended.none().id == 11);

  // Existing non-None ids unchanged.
  for (const TagReasoning& e : base.entries()) {
    if (e.tag.name == tags::kNone) continue;
    CHECK(extended.find(e.tag.name)->tag.id == e.tag.id);
  }
  // Base untouched.
  CHECK(base.size() == 10);
  CHECK(base.none().id == 10);

  CHECK_THROWS_AS(base.extended("Login", TagKind::Technical, "dup"), DuplicateTag);
}

TEST_CASE("ids stay a bijection onto 1..N across repeated extension") {
  Taxonomy tx = Taxonomy::standard();
  for (int i = 0; i < 5; ++i)
    tx = tx.extended("Custom" + std::to_string(i), TagKind::Business, "reasoning");
  CHECK(tx.size() == 15);
  std::vector<bool> seen(tx.size(), false);
  for (const TagReasoning& e : tx.entries()) {
    REQUIRE(e.tag.id >= 1);
    REQUIRE(e.tag.id <= static_cast<int>(tx.size()));
    CHECK_FALSE(seen[e.tag.id - 1]);
    seen[e.tag.id - 1] = true;
  }
}

TEST_CASE("taxonomy file round trip") {
  Taxonomy tx = Taxonomy::load(testing::data_dir() + "/taxonomy.json");
  CHECK(tx.size() == 10);
  CHECK(tx.none().id == 10);
  bool has_clue = false;
  for (const std::string& clue : tx.find(tags::kFileUpload)->clues)
    if (clue.find("file name or reference to file being uploaded") != std::string::npos)
      has_clue = true;
  CHECK(has_clue);
  CHECK(tx.find(tags::kResponseDataLimit)->policy_variables ==
        std::vector<std::string>{"num_records"});

  std::filesystem::path tmp = std::filesystem::temp_directory_path() / "tx_roundtrip.json";
  tx.save(tmp);
  Taxonomy back = Taxonomy::load(tmp);
  CHECK(back.size() == tx.size());
  for (std::size_t i = 0; i < tx.size(); ++i) {
    CHECK(back.entries()[i].tag.name == tx.entries()[i].tag.name);
    CHECK(back.entries()[i].policy_variables == tx.entries()[i].policy_variables);
  }
  std::filesystem::remove(tmp);
}
