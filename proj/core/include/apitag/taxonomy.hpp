#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace apitag {

enum class TagKind { Business, Technical, None };

std::string_view to_string(TagKind kind);

// A flow class. Ids are dense, start at 1, and are stable for the lifetime of
// a taxonomy; the None class always carries the highest id.
struct Tag {
  int id = 0;
  std::string name;
  TagKind kind = TagKind::None;

  bool operator==(const Tag& other) const { return id == other.id && name == other.name; }
};

// Well-known tag names. The taxonomy is open (new tags can be appended), but
// the built-in policies and the rule oracle address these by name.
namespace tags {
inline constexpr std::string_view kUserRegistration = "UserRegistration";
inline constexpr std::string_view kCommenting = "Commenting";
inline constexpr std::string_view kPurchaseProduct = "PurchaseProduct";
inline constexpr std::string_view kAddToCart = "AddToCart";
inline constexpr std::string_view kResponseDataLimit = "ResponseDataLimit";
inline constexpr std::string_view kLogin = "Login";
inline constexpr std::string_view kLogout = "Logout";
inline constexpr std::string_view kFileUpload = "FileUpload";
inline constexpr std::string_view kContainsAuthTokens = "ContainsAuthTokens";
inline constexpr std::string_view kNone = "None";
}  // namespace tags

// Classification guidance for one tag: the primary reasoning plus extra clues
// that go into the prompt, and the policy variables extracted for the tag.
struct TagReasoning {
  Tag tag;
  std::string primary_reasoning;
  std::vector<std::string> clues;
  std::vector<std::string> policy_variables;
};

// Immutable, ordered set of tags. Ids form a bijection onto 1..N and None is
// always the last entry. Extension never renumbers existing non-None tags so
// that prompts configured for them stay valid.
class Taxonomy {
 public:
  Taxonomy() = default;

  // The nine built-in flow tags plus None, ids 1..10.
  static Taxonomy standard();

  static Taxonomy load(const std::filesystem::path& file);
  void save(const std::filesystem::path& file) const;

  // Returns a copy with the new tag appended before None. The new tag takes
  // None's previous id and None moves up by one. Throws DuplicateTag.
  Taxonomy extended(std::string_view name, TagKind kind, std::string primary_reasoning,
                    std::vector<std::string> clues = {},
                    std::vector<std::string> policy_variables = {}) const;

  const std::vector<TagReasoning>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  const TagReasoning* find(std::string_view name) const;
  const TagReasoning* by_id(int id) const;
  const Tag& none() const;

 private:
  explicit Taxonomy(std::vector<TagReasoning> entries);
  void validate() const;

  std::vector<TagReasoning> entries_;
};

}  // namespace apitag
