#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "apitag/http_model.hpp"
#include "apitag/taxonomy.hpp"

namespace apitag {

class InferenceClient;
class SynonymTable;

enum class TagSource { Oracle, LLM, Cache };
enum class PromptMode { Single, Parallel };

std::string_view to_string(TagSource s);

// Where a request's flow labels came from plus the labels themselves.
// Invariants: never empty; None never co-occurs with another tag.
class TagSet {
 public:
  TagSet() = default;

  // Builds a set from arbitrary tags: duplicates collapse, None is dropped
  // when other tags are present, and an empty list becomes {None}.
  static TagSet of(std::vector<Tag> tags, const Taxonomy& tx, TagSource source);
  static TagSet none_of(const Taxonomy& tx, TagSource source);

  const std::vector<Tag>& tags() const { return tags_; }
  TagSource source() const { return source_; }
  bool parse_warning() const { return parse_warning_; }

  bool contains(std::string_view name) const;
  bool is_none() const;
  std::vector<std::string> names() const;

  void set_source(TagSource s) { source_ = s; }
  void set_parse_warning(bool w) { parse_warning_ = w; }

  bool operator==(const TagSet& other) const { return tags_ == other.tags_; }

 private:
  std::vector<Tag> tags_;  // sorted by id, unique
  TagSource source_ = TagSource::Oracle;
  bool parse_warning_ = false;
};

// One classifier prompt, kept as its six ordered components so tests can
// inspect structure; render() produces the text handed to the model.
struct ClassBlock {
  int id = 0;
  std::string reasoning;
  std::vector<std::string> clues;
};

struct PromptText {
  std::string system_prompt;
  std::vector<ClassBlock> class_blocks;
  std::string output_format_spec;
  std::string user_prompt_prefix;
  std::string user_input;

  std::string render() const;
};

// Compact text rendering of a request for the prompt's user-input component:
// request line plus host/content-type headers, authorization presence with the
// value redacted, and the body text (capped).
std::string render_request_text(const ParsedRequest& r, std::size_t max_body_chars = 4096);

// One multi-class prompt covering every tag in the taxonomy including None.
PromptText build_single_prompt(const ParsedRequest& r, const Taxonomy& tx);

// One binary prompt per non-None tag; each carries that tag's class block and
// the None block, ids unchanged from the taxonomy.
std::vector<PromptText> build_parallel_prompts(const ParsedRequest& r, const Taxonomy& tx);

// Extracts class numbers from model output per the output format spec.
// Unknown ids are dropped; unparseable text yields {None} with the parse
// warning flag set. Total: never throws.
TagSet parse_llm_output(std::string_view text, const Taxonomy& tx);

struct ClassifyOptions {
  PromptMode mode = PromptMode::Single;
  int parallel_fanout = 4;  // concurrent inference calls in parallel mode
};

// Classifies a request through the inference client. Single mode issues one
// multi-class call; parallel mode issues one binary call per tag (bounded
// fan-out) and unions the per-tag results. Throws InferenceUnavailable when
// the client fails.
TagSet classify(const ParsedRequest& r, const Taxonomy& tx, InferenceClient& client,
                const ClassifyOptions& opts = {});

// Deterministic rule-based tagger: keyword tables over path tokens, parameter
// names and headers. Stands in for the model in tests and offline runs.
TagSet oracle_tagger(const ParsedRequest& r, const Taxonomy& tx, const SynonymTable& syn);

}  // namespace apitag
