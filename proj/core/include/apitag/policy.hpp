#pragma once

#include <chrono>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "apitag/context.hpp"
#include "apitag/metrics.hpp"
#include "apitag/tag_params.hpp"

namespace apitag {

enum class Outcome { Allow, Deny, Audit };
enum class FailMode { Open, Closed };

std::string_view to_string(Outcome o);

// Result of evaluating the policy chain for one request. Deny always names
// the deciding policy. Audit means forward the request but force a log
// record. `trail` lists the handlers that ran, in order.
struct Decision {
  Outcome outcome = Outcome::Allow;
  std::vector<std::pair<std::string, std::string>> reasons;  // (policy, message)
  std::optional<std::string> deciding_policy;
  std::vector<std::string> trail;
};

// Thresholds for the built-in policies. Comparisons are strict: a windowed
// total equal to the limit denies.
struct PolicyConfig {
  long long record_threshold = 1000;
  long long max_purchase_qty = 100;
  std::chrono::seconds purchase_window{300};
  long long login_attempt_limit = 10;
  std::chrono::seconds login_window{300};
  long long cart_hold_limit = 100;
  std::chrono::seconds cart_window{300};
  long long registration_limit = 5;
  std::chrono::seconds registration_window{300};
  FailMode fail_mode = FailMode::Open;
  bool group_by_forwarded = false;

  // Throws ConfigError when a threshold is non-positive or a window exceeds
  // the history retention.
  void validate(const HistoryRetention& retention) const;
};

// Everything a policy handler may consult: the request context (including the
// endpoint history stream), the latest container snapshot when available, and
// the configured thresholds. The current request is already recorded in
// history when handlers run; helpers below subtract its own contribution so
// that handlers reason about prior traffic.
struct EvalContext {
  const RequestContext& rc;
  const ContainerContext* cc = nullptr;
  const PolicyConfig& cfg;

  std::string group() const { return rc.group(cfg.group_by_forwarded); }

  // Windowed sum over this endpoint's history excluding the current request's
  // own contribution, optionally restricted to this request's source group.
  double prior_window_sum(std::chrono::seconds window, std::string_view field,
                          const std::map<std::string, std::string>& having,
                          double current_contribution, bool per_source = false) const;

  // Entries carrying `tag` from this request's source group within the
  // window, excluding the current request itself.
  std::size_t prior_count(std::string_view tag, std::chrono::seconds window) const;
};

// Collects audit flags raised by handlers while the chain runs.
class PolicyTrace {
 public:
  void audit(std::string_view flag, std::string_view message);
  const std::vector<std::pair<std::string, std::string>>& flags() const { return flags_; }

 private:
  std::vector<std::pair<std::string, std::string>> flags_;
};

using PolicyHandler =
    std::function<bool(const TagDetail& detail, const EvalContext& ctx, PolicyTrace& trace)>;

// Ordered evaluation: the pre-tag handler first, then the handlers registered
// for each tag present on the request (taxonomy order), then the post-tag
// handler. The first handler returning false denies and stops the chain.
// A throwing handler is isolated and treated per fail_mode.
class PolicyChain {
 public:
  // No-op pre/post handlers plus the built-in tag policies.
  static PolicyChain standard();

  void set_pre(std::string name, PolicyHandler handler);
  void set_post(std::string name, PolicyHandler handler);
  void add_tag_handler(std::string_view tag_name, std::string name, PolicyHandler handler);

  Decision evaluate(const TagDetail& detail, const EvalContext& ctx) const;

  std::vector<std::string> handler_names() const;

 private:
  struct Named {
    std::string name;
    PolicyHandler fn;
  };

  bool run_handler(const Named& handler, const TagDetail& detail, const EvalContext& ctx,
                   PolicyTrace& trace, Decision& decision) const;

  Named pre_{"PreTagPolicy", nullptr};
  Named post_{"PostTagPolicy", nullptr};
  std::vector<std::pair<std::string, Named>> tag_handlers_;  // (tag name, handler)
};

// Built-in policy functions, also usable directly in tests.
bool response_size_policy(const TagDetail& detail, const EvalContext& ctx, PolicyTrace& trace);
bool purchase_product_policy(const TagDetail& detail, const EvalContext& ctx, PolicyTrace& trace);
bool login_policy(const TagDetail& detail, const EvalContext& ctx, PolicyTrace& trace);
bool add_to_cart_policy(const TagDetail& detail, const EvalContext& ctx, PolicyTrace& trace);
bool registration_policy(const TagDetail& detail, const EvalContext& ctx, PolicyTrace& trace);

// Documented mapping from attacker intentions to the mechanism that covers
// each: built-in policies, audit flags, or composable building blocks.
struct ThreatCoverage {
  std::string intention;
  std::string mechanism;
};
const std::vector<ThreatCoverage>& threat_coverage();

}  // namespace apitag
