#include "apitag/tagging.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <exception>
#include <set>
#include <sstream>
#include <thread>

#include "apitag/errors.hpp"
#include "apitag/inference.hpp"
#include "apitag/tag_params.hpp"

namespace apitag {

std::string_view to_string(TagSource s) {
  switch (s) {
    case TagSource::Oracle: return "oracle";
    case TagSource::LLM: return "llm";
    case TagSource::Cache: return "cache";
  }
  return "oracle";
}

TagSet TagSet::of(std::vector<Tag> tags, const Taxonomy& tx, TagSource source) {
  TagSet s;
  s.source_ = source;
  std::sort(tags.begin(), tags.end(), [](const Tag& a, const Tag& b) { return a.id < b.id; });
  tags.erase(std::unique(tags.begin(), tags.end()), tags.end());
  bool has_real = std::any_of(tags.begin(), tags.end(),
                              [](const Tag& t) { return t.name != tags::kNone; });
  for (Tag& t : tags) {
    if (t.name == tags::kNone && has_real) continue;
    s.tags_.push_back(std::move(t));
  }
  if (s.tags_.empty()) s.tags_.push_back(tx.none());
  return s;
}

TagSet TagSet::none_of(const Taxonomy& tx, TagSource source) {
  return of({}, tx, source);
}

bool TagSet::contains(std::string_view name) const {
  return std::any_of(tags_.begin(), tags_.end(),
                     [&](const Tag& t) { return t.name == name; });
}

bool TagSet::is_none() const {
  return tags_.size() == 1 && tags_[0].name == tags::kNone;
}

std::vector<std::string> TagSet::names() const {
  std::vector<std::string> out;
  out.reserve(tags_.size());
  for (const Tag& t : tags_) out.push_back(t.name);
  return out;
}

std::string PromptText::render() const {
  std::ostringstream out;
  out << system_prompt << "\n\n";
  for (const ClassBlock& block : class_blocks) {
    out << "Class " << block.id << ":\n";
    out << "Reasoning: " << block.reasoning << "\n";
    for (const std::string& clue : block.clues) out << "Clue: " << clue << "\n";
  }
  out << "\n" << output_format_spec << "\n\n";
  out << user_prompt_prefix << "\n";
  out << user_input << "\n";
  return out.str();
}

std::string render_request_text(const ParsedRequest& r, std::size_t max_body_chars) {
  std::ostringstream out;
  out << r.request_line_short() << "\n";
  if (const std::string* host = r.header("host")) out << "host: " << *host << "\n";
  if (const std::string* ct = r.header("content-type")) out << "content-type: " << *ct << "\n";
  if (r.header("authorization")) out << "authorization: <redacted>\n";
  if (!r.body_raw.empty()) {
    out << "\n";
    out << r.body_raw.substr(0, max_body_chars);
  }
  return out.str();
}

namespace {

const char* kSystemPrompt =
    "You are a security classifier for HTTP API requests. Assign the request "
    "shown at the end to the classes defined below. Use only the reasoning and "
    "clues given for each class identification number.";

const char* kUserPromptPrefix =
    "Apply the instructions above to classify the following HTTP request:";

std::string output_format_for(int none_id) {
  std::ostringstream out;
  out << "Answer with exactly one line of the form classes: [<class identification "
         "numbers separated by commas>] and nothing else. If no class applies, answer "
         "classes: ["
      << none_id << "].";
  return out.str();
}

ClassBlock block_for(const TagReasoning& e) {
  return ClassBlock{e.tag.id, e.primary_reasoning, e.clues};
}

}  // namespace

PromptText build_single_prompt(const ParsedRequest& r, const Taxonomy& tx) {
  PromptText p;
  p.system_prompt = kSystemPrompt;
  for (const TagReasoning& e : tx.entries()) p.class_blocks.push_back(block_for(e));
  p.output_format_spec = output_format_for(tx.none().id);
  p.user_prompt_prefix = kUserPromptPrefix;
  p.user_input = render_request_text(r);
  return p;
}

std::vector<PromptText> build_parallel_prompts(const ParsedRequest& r, const Taxonomy& tx) {
  std::vector<PromptText> prompts;
  const TagReasoning* none_entry = tx.find(tags::kNone);
  for (const TagReasoning& e : tx.entries()) {
    if (e.tag.name == tags::kNone) continue;
    PromptText p;
    p.system_prompt = kSystemPrompt;
    p.class_blocks.push_back(block_for(e));
    p.class_blocks.push_back(block_for(*none_entry));
    p.output_format_spec = output_format_for(none_entry->tag.id);
    p.user_prompt_prefix = kUserPromptPrefix;
    p.user_input = render_request_text(r);
    prompts.push_back(std::move(p));
  }
  return prompts;
}

TagSet parse_llm_output(std::string_view text, const Taxonomy& tx) {
  std::string lowered = to_lower(text);
  std::size_t start = lowered.find("classes");
  std::size_t bracket = text.find('[', start == std::string::npos ? 0 : start);
  if (bracket == std::string_view::npos) {
    TagSet s = TagSet::none_of(tx, TagSource::LLM);
    s.set_parse_warning(true);
    return s;
  }
  std::size_t end = text.find(']', bracket);
  std::string_view inner =
      text.substr(bracket + 1, (end == std::string_view::npos ? text.size() : end) - bracket - 1);

  std::vector<Tag> found;
  std::size_t i = 0;
  bool saw_digits = false;
  while (i < inner.size()) {
    if (std::isdigit(static_cast<unsigned char>(inner[i]))) {
      int id = 0;
      while (i < inner.size() && std::isdigit(static_cast<unsigned char>(inner[i]))) {
        id = id * 10 + (inner[i] - '0');
        ++i;
      }
      saw_digits = true;
      if (const TagReasoning* e = tx.by_id(id)) found.push_back(e->tag);
    } else {
      ++i;
    }
  }
  TagSet s = TagSet::of(std::move(found), tx, TagSource::LLM);
  if (!saw_digits && !trim(inner).empty()) s.set_parse_warning(true);
  if (end == std::string_view::npos) s.set_parse_warning(true);
  return s;
}

TagSet classify(const ParsedRequest& r, const Taxonomy& tx, InferenceClient& client,
                const ClassifyOptions& opts) {
  if (opts.mode == PromptMode::Single) {
    std::string output;
    try {
      output = client.complete(build_single_prompt(r, tx).render());
    } catch (const InferenceUnavailable&) {
      throw;
    } catch (const std::exception& e) {
      throw InferenceUnavailable(e.what());
    }
    return parse_llm_output(output, tx);
  }

  std::vector<PromptText> prompts = build_parallel_prompts(r, tx);
  std::vector<std::string> outputs(prompts.size());
  std::vector<std::exception_ptr> failures(prompts.size());
  std::atomic<std::size_t> next{0};
  std::size_t workers =
      std::min<std::size_t>(std::max(opts.parallel_fanout, 1), prompts.size());

  auto run = [&] {
    for (std::size_t i = next.fetch_add(1); i < prompts.size(); i = next.fetch_add(1)) {
      try {
        outputs[i] = client.complete(prompts[i].render());
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w + 1 < workers; ++w) pool.emplace_back(run);
  run();
  for (std::thread& t : pool) t.join();

  for (const std::exception_ptr& failure : failures) {
    if (!failure) continue;
    try {
      std::rethrow_exception(failure);
    } catch (const InferenceUnavailable&) {
      throw;
    } catch (const std::exception& e) {
      throw InferenceUnavailable(e.what());
    }
  }

  std::vector<Tag> merged;
  bool warning = false;
  std::size_t prompt_index = 0;
  for (const TagReasoning& e : tx.entries()) {
    if (e.tag.name == tags::kNone) continue;
    TagSet parsed = parse_llm_output(outputs[prompt_index], tx);
    warning = warning || parsed.parse_warning();
    if (parsed.contains(e.tag.name)) merged.push_back(e.tag);
    ++prompt_index;
  }
  TagSet result = TagSet::of(std::move(merged), tx, TagSource::LLM);
  result.set_parse_warning(warning);
  return result;
}

namespace {

// Subtokens of the request path: each segment is name-normalized and split on
// underscores, so "/commentThreads" yields {comment, threads}.
std::set<std::string> path_tokens(const ParsedRequest& r) {
  std::set<std::string> tokens;
  for (std::string_view segment : split(r.path, '/')) {
    if (segment.empty()) continue;
    std::string normalized = normalize_param_name(url_decode(segment, false));
    for (std::string_view token : split(normalized, '_'))
      if (!token.empty()) tokens.emplace(token);
  }
  return tokens;
}

std::string last_segment(const ParsedRequest& r) {
  std::string last;
  for (std::string_view segment : split(r.path, '/'))
    if (!segment.empty()) last = normalize_param_name(url_decode(segment, false));
  return last;
}

bool has_any(const std::set<std::string>& tokens, std::initializer_list<std::string_view> names) {
  for (std::string_view name : names)
    if (tokens.count(std::string(name))) return true;
  return false;
}

bool is_mutating(const ParsedRequest& r) {
  return r.method == "POST" || r.method == "PUT" || r.method == "PATCH";
}

bool param_matches(const ParsedRequest& r, const SynonymTable& syn, std::string_view variable) {
  for (const auto& [name, value] : r.merged_params())
    if (syn.matches(name, variable)) return true;
  return false;
}

const std::set<std::string>& token_param_names() {
  static const std::set<std::string> names = {
      "token",         "access_token", "auth_token",    "api_key", "apikey",
      "jwt",           "id_token",     "refresh_token", "auth",    "session_token",
      "bearer_token",  "authorization"};
  return names;
}

}  // namespace

TagSet oracle_tagger(const ParsedRequest& r, const Taxonomy& tx, const SynonymTable& syn) {
  std::set<std::string> tokens = path_tokens(r);
  std::string last = last_segment(r);
  bool mutating = is_mutating(r);

  std::vector<Tag> found;
  auto add = [&](std::string_view name) {
    if (const TagReasoning* e = tx.find(name)) found.push_back(e->tag);
  };

  if (mutating && (has_any(tokens, {"register", "registration", "signup"}) ||
                   (tokens.count("sign") && tokens.count("up")) ||
                   last == "users" || last == "accounts"))
    add(tags::kUserRegistration);

  if (mutating && has_any(tokens, {"comment", "comments", "review", "reviews", "reply",
                                   "replies", "feedback", "feedbacks"}))
    add(tags::kCommenting);

  if (mutating && has_any(tokens, {"purchase", "purchases", "buy", "checkout", "order", "orders",
                                   "pay", "payment", "payments"}))
    add(tags::kPurchaseProduct);

  if (mutating && has_any(tokens, {"cart", "carts", "basket", "baskets"}))
    add(tags::kAddToCart);

  if (param_matches(r, syn, "num_records")) add(tags::kResponseDataLimit);

  if (has_any(tokens, {"login", "signin", "logon", "authenticate"}) ||
      (tokens.count("sign") && tokens.count("in")) ||
      (r.method == "POST" && (last == "session" || last == "sessions")))
    add(tags::kLogin);

  if (has_any(tokens, {"logout", "signout"}) ||
      (tokens.count("sign") && tokens.count("out")) ||
      (r.method == "DELETE" && (last == "session" || last == "sessions")))
    add(tags::kLogout);

  bool multipart = false;
  if (const std::string* ct = r.header("content-type"))
    multipart = to_lower(*ct).find("multipart/form-data") != std::string::npos;
  bool file_param = false;
  for (const auto& [name, value] : r.merged_params())
    if (syn.matches(name, "file_name")) file_param = true;
  if (mutating && (multipart || file_param ||
                   has_any(tokens, {"upload", "uploads", "file", "files", "image", "images",
                                    "attachment", "attachments", "media", "avatar"})))
    add(tags::kFileUpload);

  bool has_token = r.header("authorization") != nullptr;
  for (const auto& [name, value] : r.merged_params())
    if (token_param_names().count(normalize_param_name(name))) has_token = true;
  if (has_token) add(tags::kContainsAuthTokens);

  return TagSet::of(std::move(found), tx, TagSource::Oracle);
}

}  // namespace apitag
