#include "apitag/policy.hpp"

#include <algorithm>
#include <set>

#include "apitag/errors.hpp"

namespace apitag {

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::Allow: return "allow";
    case Outcome::Deny: return "deny";
    case Outcome::Audit: return "audit";
  }
  return "allow";
}

void PolicyConfig::validate(const HistoryRetention& retention) const {
  auto check_positive = [](long long v, std::string_view name) {
    if (v <= 0) throw ConfigError("policy threshold must be positive: " + std::string(name));
  };
  check_positive(record_threshold, "record_threshold");
  check_positive(max_purchase_qty, "max_purchase_qty");
  check_positive(login_attempt_limit, "login_attempt_limit");
  check_positive(cart_hold_limit, "cart_hold_limit");
  check_positive(registration_limit, "registration_limit");
  auto check_window = [&](std::chrono::seconds w, std::string_view name) {
    if (w.count() <= 0) throw ConfigError("policy window must be positive: " + std::string(name));
    if (std::chrono::milliseconds(w) > retention.max_age)
      throw ConfigError("policy window exceeds history retention: " + std::string(name));
  };
  check_window(purchase_window, "purchase_window");
  check_window(login_window, "login_window");
  check_window(cart_window, "cart_window");
  check_window(registration_window, "registration_window");
}

double EvalContext::prior_window_sum(std::chrono::seconds window, std::string_view field,
                                     const std::map<std::string, std::string>& having,
                                     double current_contribution, bool per_source) const {
  if (!rc.hist) return 0;
  std::optional<std::string> source;
  if (per_source) source = group();
  WindowSum total = rc.hist->window_aggregate(rc.dest.key, rc.ts,
                                              std::chrono::milliseconds(window), field, having,
                                              source);
  return total.sum - current_contribution;
}

std::size_t EvalContext::prior_count(std::string_view tag, std::chrono::seconds window) const {
  if (!rc.hist) return 0;
  std::map<std::string, std::size_t> counts =
      rc.hist->count_by_tag(tag, rc.ts, std::chrono::milliseconds(window));
  auto it = counts.find(group());
  std::size_t count = it == counts.end() ? 0 : it->second;
  return count > 0 ? count - 1 : 0;  // the current request is already recorded
}

void PolicyTrace::audit(std::string_view flag, std::string_view message) {
  flags_.emplace_back(std::string(flag), std::string(message));
}

void PolicyChain::set_pre(std::string name, PolicyHandler handler) {
  pre_ = Named{std::move(name), std::move(handler)};
}

void PolicyChain::set_post(std::string name, PolicyHandler handler) {
  post_ = Named{std::move(name), std::move(handler)};
}

void PolicyChain::add_tag_handler(std::string_view tag_name, std::string name,
                                  PolicyHandler handler) {
  tag_handlers_.emplace_back(std::string(tag_name), Named{std::move(name), std::move(handler)});
}

std::vector<std::string> PolicyChain::handler_names() const {
  std::vector<std::string> names;
  names.push_back(pre_.name);
  for (const auto& [tag, handler] : tag_handlers_) names.push_back(handler.name);
  names.push_back(post_.name);
  return names;
}

bool PolicyChain::run_handler(const Named& handler, const TagDetail& detail,
                              const EvalContext& ctx, PolicyTrace& trace,
                              Decision& decision) const {
  decision.trail.push_back(handler.name);
  if (!handler.fn) return true;
  bool ok;
  try {
    ok = handler.fn(detail, ctx, trace);
  } catch (const std::exception& e) {
    if (ctx.cfg.fail_mode == FailMode::Closed) {
      decision.outcome = Outcome::Deny;
      decision.deciding_policy = handler.name;
      decision.reasons.emplace_back(handler.name, std::string("policy panic: ") + e.what());
      return false;
    }
    trace.audit("PolicyPanic", handler.name + ": " + e.what());
    return true;
  }
  if (!ok) {
    decision.outcome = Outcome::Deny;
    decision.deciding_policy = handler.name;
    decision.reasons.emplace_back(handler.name, "policy returned false");
    return false;
  }
  return true;
}

Decision PolicyChain::evaluate(const TagDetail& detail, const EvalContext& ctx) const {
  Decision decision;
  PolicyTrace trace;

  bool alive = run_handler(pre_, detail, ctx, trace, decision);
  if (alive) {
    for (const Tag& tag : detail.tags.tags()) {
      for (const auto& [tag_name, handler] : tag_handlers_) {
        if (tag_name != tag.name) continue;
        alive = run_handler(handler, detail, ctx, trace, decision);
        if (!alive) break;
      }
      if (!alive) break;
    }
  }
  if (alive) run_handler(post_, detail, ctx, trace, decision);

  for (const auto& [flag, message] : trace.flags())
    decision.reasons.emplace_back(flag, message);
  if (decision.outcome != Outcome::Deny && !trace.flags().empty())
    decision.outcome = Outcome::Audit;
  return decision;
}

bool response_size_policy(const TagDetail& detail, const EvalContext& ctx, PolicyTrace& trace) {
  const std::string* raw = detail.value("num_records");
  if (!raw) {
    // Tagged but no size parameter found: likely a classifier false positive.
    trace.audit("TagDemotionCandidate", "ResponseDataLimit without num_records");
    return true;
  }
  std::optional<double> records = parse_number(*raw);
  if (!records) return false;
  return *records < static_cast<double>(ctx.cfg.record_threshold);
}

bool purchase_product_policy(const TagDetail& detail, const EvalContext& ctx,
                             PolicyTrace& trace) {
  (void)trace;
  const std::string* qty_raw = detail.value("quantity");
  const std::string* product = detail.value("product_id");
  if (!qty_raw || !product) return true;  // nothing to bound without both
  std::optional<double> quantity = parse_number(*qty_raw);
  if (!quantity) return false;
  double prior = ctx.prior_window_sum(ctx.cfg.purchase_window, "quantity",
                                      {{"product_id", *product}}, *quantity);
  double total = *quantity + prior;
  return total < static_cast<double>(ctx.cfg.max_purchase_qty);
}

bool login_policy(const TagDetail& detail, const EvalContext& ctx, PolicyTrace& trace) {
  (void)detail;
  static const std::set<std::string> credential_params = {
      "password", "passwd", "pwd", "pass", "secret", "token", "access_token",
      "api_key",  "apikey", "credential", "credentials", "session_token"};
  for (const auto& [name, value] : ctx.rc.dest.query_params)
    if (credential_params.count(normalize_param_name(name)))
      trace.audit("PlaintextCredential", "credential parameter in URL: " + name);

  std::size_t prior = ctx.prior_count(tags::kLogin, ctx.cfg.login_window);
  return prior < static_cast<std::size_t>(ctx.cfg.login_attempt_limit);
}

bool add_to_cart_policy(const TagDetail& detail, const EvalContext& ctx, PolicyTrace& trace) {
  (void)trace;
  const std::string* qty_raw = detail.value("quantity");
  const std::string* product = detail.value("product_id");
  if (!qty_raw || !product) return true;
  std::optional<double> quantity = parse_number(*qty_raw);
  if (!quantity) return false;
  double prior = ctx.prior_window_sum(ctx.cfg.cart_window, "quantity",
                                      {{"product_id", *product}}, *quantity,
                                      /*per_source=*/true);
  double total = *quantity + prior;
  return total < static_cast<double>(ctx.cfg.cart_hold_limit);
}

bool registration_policy(const TagDetail& detail, const EvalContext& ctx, PolicyTrace& trace) {
  (void)trace;
  if (!detail.value("username") && !detail.value("email")) return false;  // empty registration
  std::size_t prior = ctx.prior_count(tags::kUserRegistration, ctx.cfg.registration_window);
  return prior + 1 < static_cast<std::size_t>(ctx.cfg.registration_limit);
}

PolicyChain PolicyChain::standard() {
  PolicyChain chain;
  chain.set_pre("PreTagPolicy", nullptr);
  chain.set_post("PostTagPolicy", nullptr);
  chain.add_tag_handler(tags::kResponseDataLimit, "ResponseSize", response_size_policy);
  chain.add_tag_handler(tags::kPurchaseProduct, "PurchaseProduct", purchase_product_policy);
  chain.add_tag_handler(tags::kLogin, "Login", login_policy);
  chain.add_tag_handler(tags::kAddToCart, "AddToCart", add_to_cart_policy);
  chain.add_tag_handler(tags::kUserRegistration, "Registration", registration_policy);
  return chain;
}

const std::vector<ThreatCoverage>& threat_coverage() {
  static const std::vector<ThreatCoverage> table = {
      {"Server resource limit", "ResponseSize policy bounds num_records per request"},
      {"Denial of Inventory", "AddToCart policy caps windowed held quantity per product/source"},
      {"Scalping", "PurchaseProduct policy caps windowed purchase quantity per product"},
      {"Spamming", "Commenting tag + windowed count building block (custom handler)"},
      {"Account registrations", "Registration policy caps registrations per source window"},
      {"Card cracking", "composable: PurchaseProduct tag + windowed per-source counting"},
      {"Carding", "composable: PurchaseProduct/Login tags + windowed per-source counting"},
      {"Credential stuffing", "Login policy caps login attempts per source window"},
      {"Plaintext tokens", "Login policy PlaintextCredential audit flag"},
  };
  return table;
}

}  // namespace apitag
